//! Alkali-atom spectroscopic data and hyperfine angular-momentum algebra.
//!
//! Data files are JSON documents with doubled half-integers and level
//! energies in Hz. Reduced dipole elements `<J||d||J'>` are stored
//! non-negative in the Edmonds normalization; every sign is carried by the
//! phase factor of the J to F reduction.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::angular::{parity_sign, triangle, wigner6j, HalfInt};
use crate::constants::{AU_POLARIZABILITY, G_S, HBAR, PLANCK};
use crate::{Error, Result};

const ALKALI_SPECIES: [&str; 6] = ["Li", "Na", "K", "Rb", "Cs", "Fr"];

const CESIUM_DATA: &str = include_str!("../data/cesium.json");

/// On-disk atomic data document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomicDataFile {
    #[serde(default)]
    pub format_version: Option<u32>,
    pub species: String,
    pub mass_kg: f64,
    pub nuclear_spin_times_2: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<String>,
    /// Frequency-independent core polarizability (atomic units), modelled as
    /// a single oscillator at `core_resonance_Hz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_polarizability_au: Option<f64>,
    #[serde(default, rename = "core_resonance_Hz", skip_serializing_if = "Option::is_none")]
    pub core_resonance_hz: Option<f64>,
    pub levels: Vec<LevelRecord>,
    pub transitions: Vec<TransitionRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: u32,
    pub l: u32,
    pub j_times_2: u32,
    #[serde(rename = "energy_Hz")]
    pub energy_hz: f64,
    /// Hyperfine offsets keyed by 2F, relative to the level centroid.
    #[serde(default, rename = "hyperfine_offsets_Hz", skip_serializing_if = "Option::is_none")]
    pub hyperfine_offsets_hz: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub lower_index: usize,
    pub upper_index: usize,
    #[serde(rename = "reduced_dipole_Cm")]
    pub reduced_dipole_cm: f64,
}

/// Fine-structure level `N L_J`.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub n: u32,
    pub l: u32,
    pub j: HalfInt,
    /// Energy above the ground level, J.
    pub energy: f64,
    hyperfine_offsets: BTreeMap<HalfInt, f64>,
}

impl Level {
    pub fn label(&self) -> LevelLabel {
        LevelLabel {
            n: self.n,
            l: self.l,
            j: self.j,
        }
    }

    /// Hyperfine energy offset of sublevel F, J (zero when not tabulated).
    pub fn hyperfine_offset(&self, f: HalfInt) -> f64 {
        self.hyperfine_offsets.get(&f).copied().unwrap_or(0.0)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.label().fmt(f)
    }
}

/// Quantum numbers identifying a fine-structure level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LevelLabel {
    pub n: u32,
    pub l: u32,
    pub j: HalfInt,
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const LETTERS: [char; 7] = ['S', 'P', 'D', 'F', 'G', 'H', 'I'];
        let letter = LETTERS.get(self.l as usize).copied().unwrap_or('?');
        write!(f, "{}{}{}", self.n, letter, self.j)
    }
}

/// Electric-dipole transition between two levels of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub lower: usize,
    pub upper: usize,
    /// `<J||d||J'>`, C m, non-negative.
    pub reduced_dipole: f64,
    /// Level-to-level angular frequency, rad/s.
    pub omega: f64,
}

/// A state of interest `(N, L, J, F)`.
///
/// Serialized as `{"n": 6, "l": 0, "j": 0.5, "f": 4}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "StateSpecRepr", into = "StateSpecRepr")]
pub struct StateSpec {
    pub n: u32,
    pub l: u32,
    pub j: HalfInt,
    pub f: HalfInt,
}

impl StateSpec {
    pub fn new(n: u32, l: u32, j: f64, f: f64) -> Result<Self> {
        Ok(StateSpec {
            n,
            l,
            j: HalfInt::try_from_f64(j)?,
            f: HalfInt::try_from_f64(f)?,
        })
    }

    pub fn label(&self) -> LevelLabel {
        LevelLabel {
            n: self.n,
            l: self.l,
            j: self.j,
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} F={}", self.label(), self.f)
    }
}

#[derive(Serialize, Deserialize)]
struct StateSpecRepr {
    n: u32,
    l: u32,
    j: f64,
    f: f64,
}

impl TryFrom<StateSpecRepr> for StateSpec {
    type Error = Error;
    fn try_from(r: StateSpecRepr) -> Result<Self> {
        StateSpec::new(r.n, r.l, r.j, r.f)
    }
}

impl From<StateSpec> for StateSpecRepr {
    fn from(s: StateSpec) -> Self {
        StateSpecRepr {
            n: s.n,
            l: s.l,
            j: s.j.value(),
            f: s.f.value(),
        }
    }
}

/// Dipole coupling of one level to another, seen from the first.
#[derive(Debug, Clone, Copy)]
pub struct Coupling {
    pub other: usize,
    pub transition: usize,
    pub reduced_dipole: f64,
    /// `(E_other - E_level) / hbar`; negative for couplings to lower levels.
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorePolarizability {
    /// Static value, C^2 m^2 / J.
    pub static_value: f64,
    /// Effective resonance, rad/s.
    pub omega: f64,
}

impl CorePolarizability {
    pub fn at_real(&self, omega: f64) -> f64 {
        self.static_value * self.omega * self.omega / (self.omega * self.omega - omega * omega)
    }

    pub fn at_imaginary(&self, xi: f64) -> f64 {
        self.static_value * self.omega * self.omega / (self.omega * self.omega + xi * xi)
    }
}

/// Validated atomic species data together with the trapped state.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicSystem {
    pub species: String,
    pub mass: f64,
    pub nuclear_spin: HalfInt,
    pub levels: Vec<Level>,
    /// Sorted by ascending angular frequency.
    pub transitions: Vec<Transition>,
    pub core: Option<CorePolarizability>,
    pub truncation: Option<String>,
    state_level: usize,
    state_f: HalfInt,
}

impl AtomicSystem {
    /// Reads and validates an atomic data file.
    pub fn load(path: impl AsRef<Path>, state: StateSpec) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, state)
    }

    pub fn from_json_str(text: &str, state: StateSpec) -> Result<Self> {
        let file: AtomicDataFile = serde_json::from_str(text)
            .map_err(|e| Error::AtomicData(format!("malformed atomic data file: {e}")))?;
        Self::from_file(file, state)
    }

    /// Cesium-133 from the data file bundled with the crate.
    pub fn cesium(state: StateSpec) -> Result<Self> {
        Self::from_json_str(CESIUM_DATA, state)
    }

    pub fn cesium_data() -> &'static str {
        CESIUM_DATA
    }

    pub fn from_file(file: AtomicDataFile, state: StateSpec) -> Result<Self> {
        if !ALKALI_SPECIES.contains(&file.species.as_str()) {
            return Err(Error::AtomicData(format!("unknown species '{}'", file.species)));
        }
        if !(file.mass_kg.is_finite() && file.mass_kg > 0.0) {
            return Err(Error::AtomicData("mass must be positive".into()));
        }
        let nuclear_spin = HalfInt::from_twice(file.nuclear_spin_times_2 as i32);

        let mut levels = Vec::with_capacity(file.levels.len());
        for (idx, rec) in file.levels.iter().enumerate() {
            let j = HalfInt::from_twice(rec.j_times_2 as i32);
            let l2 = 2 * rec.l as i32;
            if j.is_integer() || (j.twice() - l2).abs() != 1 {
                return Err(Error::AtomicData(format!(
                    "level {idx}: J = {j} incompatible with L = {} for a single valence electron",
                    rec.l
                )));
            }
            if !rec.energy_hz.is_finite() || rec.energy_hz < 0.0 {
                return Err(Error::AtomicData(format!("level {idx}: invalid energy")));
            }
            let mut hyperfine_offsets = BTreeMap::new();
            for (key, offset) in rec.hyperfine_offsets_hz.iter().flatten() {
                let f2: i32 = key.parse().map_err(|_| {
                    Error::AtomicData(format!("level {idx}: hyperfine key '{key}' is not 2F"))
                })?;
                let f = HalfInt::from_twice(f2);
                if !triangle(j, nuclear_spin, f) {
                    return Err(Error::AtomicData(format!(
                        "level {idx}: hyperfine offset for impossible F = {f}"
                    )));
                }
                hyperfine_offsets.insert(f, offset * PLANCK);
            }
            levels.push(Level {
                n: rec.n,
                l: rec.l,
                j,
                energy: rec.energy_hz * PLANCK,
                hyperfine_offsets,
            });
        }
        match levels.iter().map(|l| l.energy).reduce(f64::min) {
            Some(e) if e == 0.0 => {}
            Some(_) => return Err(Error::AtomicData("ground level energy must be 0".into())),
            None => return Err(Error::AtomicData("no levels".into())),
        }
        for (a, la) in levels.iter().enumerate() {
            if levels[..a].iter().any(|lb| lb.label() == la.label()) {
                return Err(Error::AtomicData(format!("duplicate level {la}")));
            }
        }

        let mut transitions = Vec::with_capacity(file.transitions.len());
        for (idx, rec) in file.transitions.iter().enumerate() {
            let (Some(lo), Some(up)) = (levels.get(rec.lower_index), levels.get(rec.upper_index))
            else {
                return Err(Error::AtomicData(format!(
                    "transition {idx}: dangling level reference ({} -> {})",
                    rec.lower_index, rec.upper_index
                )));
            };
            if (lo.j.twice() - up.j.twice()).abs() > 2 || (lo.l as i32 - up.l as i32).abs() != 1 {
                return Err(Error::AtomicData(format!(
                    "transition {idx}: {lo} -> {up} is not electric-dipole allowed"
                )));
            }
            let omega = (up.energy - lo.energy) / HBAR;
            if !(omega > 0.0) {
                return Err(Error::AtomicData(format!(
                    "transition {idx}: upper level {up} is not above {lo}"
                )));
            }
            if !(rec.reduced_dipole_cm.is_finite() && rec.reduced_dipole_cm >= 0.0) {
                return Err(Error::AtomicData(format!(
                    "transition {idx}: reduced dipole must be finite and non-negative"
                )));
            }
            transitions.push(Transition {
                lower: rec.lower_index,
                upper: rec.upper_index,
                reduced_dipole: rec.reduced_dipole_cm,
                omega,
            });
        }
        transitions.sort_by(|a, b| a.omega.total_cmp(&b.omega));

        let core = match (file.core_polarizability_au, file.core_resonance_hz) {
            (Some(alpha), Some(freq)) if alpha >= 0.0 && freq > 0.0 => Some(CorePolarizability {
                static_value: alpha * AU_POLARIZABILITY,
                omega: 2.0 * std::f64::consts::PI * freq,
            }),
            (None, None) => None,
            _ => {
                return Err(Error::AtomicData(
                    "core polarizability needs both a value and a resonance".into(),
                ))
            }
        };

        let label = state.label();
        let state_level = levels
            .iter()
            .position(|l| l.label() == label)
            .ok_or_else(|| Error::AtomicData(format!("state level {label} not in data file")))?;
        let mut system = AtomicSystem {
            species: file.species,
            mass: file.mass_kg,
            nuclear_spin,
            levels,
            transitions,
            core,
            truncation: file.truncation,
            state_level,
            state_f: state.f,
        };
        system.check_f(state_level, state.f)?;
        if system.couplings(state_level).is_empty() {
            return Err(Error::AtomicData(format!(
                "no transitions from the state level {label}"
            )));
        }
        system.state_f = state.f;
        Ok(system)
    }

    /// Index of the level of the state of interest and its F.
    pub fn state(&self) -> (usize, HalfInt) {
        (self.state_level, self.state_f)
    }

    pub fn state_level(&self) -> &Level {
        &self.levels[self.state_level]
    }

    pub fn level_index(&self, label: LevelLabel) -> Result<usize> {
        self.levels
            .iter()
            .position(|l| l.label() == label)
            .ok_or_else(|| Error::AtomicData(format!("level {label} not in data file")))
    }

    /// Resolves a `(N, L, J, F)` spec to a level index, validating F.
    pub fn resolve(&self, spec: StateSpec) -> Result<(usize, HalfInt)> {
        let idx = self.level_index(spec.label())?;
        self.check_f(idx, spec.f)?;
        Ok((idx, spec.f))
    }

    fn level(&self, level: usize) -> Result<&Level> {
        self.levels
            .get(level)
            .ok_or_else(|| Error::InvalidArgument(format!("level index {level} out of range")))
    }

    pub fn check_f(&self, level: usize, f: HalfInt) -> Result<()> {
        let lv = self.level(level)?;
        if f.is_negative() || !triangle(lv.j, self.nuclear_spin, f) {
            return Err(Error::AngularMomentum(format!(
                "F = {f} outside |J - I| <= F <= J + I for {lv} (I = {})",
                self.nuclear_spin
            )));
        }
        Ok(())
    }

    /// Allowed total angular momenta F of a level.
    pub fn hyperfine_levels(&self, level: usize) -> Result<Vec<HalfInt>> {
        let j = self.level(level)?.j;
        let i = self.nuclear_spin;
        let lo = (j - i).abs().twice();
        let hi = (j + i).twice();
        Ok((lo..=hi).step_by(2).map(HalfInt::from_twice).collect())
    }

    /// All dipole couplings of a level, in transition order.
    pub fn couplings(&self, level: usize) -> Vec<Coupling> {
        self.transitions
            .iter()
            .enumerate()
            .filter_map(|(t, tr)| {
                let (other, sign) = if tr.lower == level {
                    (tr.upper, 1.0)
                } else if tr.upper == level {
                    (tr.lower, -1.0)
                } else {
                    return None;
                };
                Some(Coupling {
                    other,
                    transition: t,
                    reduced_dipole: tr.reduced_dipole,
                    omega: sign * tr.omega,
                })
            })
            .collect()
    }

    /// F-reduced dipole element `<F||d||F'>` of a transition, F on the lower
    /// level and F' on the upper level.
    pub fn reduced_dipole_f(&self, transition: usize, f: HalfInt, fp: HalfInt) -> Result<f64> {
        let tr = self
            .transitions
            .get(transition)
            .ok_or_else(|| Error::InvalidArgument(format!("transition {transition} out of range")))?;
        self.check_f(tr.lower, f)?;
        self.check_f(tr.upper, fp)?;
        let j = self.levels[tr.lower].j;
        let jp = self.levels[tr.upper].j;
        reduce_to_f(tr.reduced_dipole, j, jp, f, fp, self.nuclear_spin)
    }

    /// Signed hyperfine-resolved angular frequency `(E_{other,F'} - E_{level,F}) / hbar`.
    pub fn omega_ff(&self, level: usize, f: HalfInt, other: usize, fp: HalfInt) -> f64 {
        let a = &self.levels[level];
        let b = &self.levels[other];
        ((b.energy + b.hyperfine_offset(fp)) - (a.energy + a.hyperfine_offset(f))) / HBAR
    }

    /// Hyperfine Landé factor g_F (nuclear contribution neglected).
    pub fn lande_gf(&self, level: usize, f: HalfInt) -> Result<f64> {
        self.check_f(level, f)?;
        let lv = &self.levels[level];
        let (j, l, s, i, fv) = (
            lv.j.value(),
            lv.l as f64,
            0.5,
            self.nuclear_spin.value(),
            f.value(),
        );
        if fv == 0.0 {
            return Err(Error::AngularMomentum("g_F undefined for F = 0".into()));
        }
        let jj = j * (j + 1.0);
        let g_j = (jj - s * (s + 1.0) + l * (l + 1.0)) / (2.0 * jj)
            + G_S * (jj + s * (s + 1.0) - l * (l + 1.0)) / (2.0 * jj);
        let ff = fv * (fv + 1.0);
        Ok(g_j * (ff - i * (i + 1.0) + jj) / (2.0 * ff))
    }

    /// Copy of the system with all hyperfine offsets dropped.
    pub fn without_hyperfine_offsets(&self) -> Self {
        let mut out = self.clone();
        for lv in &mut out.levels {
            lv.hyperfine_offsets.clear();
        }
        out
    }

    /// Copy of the system with the core contribution removed.
    pub fn without_core(&self) -> Self {
        let mut out = self.clone();
        out.core = None;
        out
    }
}

/// `<F||d||F'> = <J||d||J'> (-1)^(1+F'+J+I) sqrt(2F'+1) {J J' 1; F' F I}`.
pub fn reduce_to_f(
    reduced_jj: f64,
    j: HalfInt,
    jp: HalfInt,
    f: HalfInt,
    fp: HalfInt,
    nuclear_spin: HalfInt,
) -> Result<f64> {
    if (f.twice() - fp.twice()).abs() > 2 {
        return Ok(0.0);
    }
    let sixj = wigner6j([j, jp, HalfInt::ONE, fp, f, nuclear_spin])?;
    if sixj == 0.0 {
        return Ok(0.0);
    }
    let phase = parity_sign(HalfInt::ONE + fp + j + nuclear_spin);
    Ok(reduced_jj * phase * ((fp.twice() + 1) as f64).sqrt() * sixj)
}
