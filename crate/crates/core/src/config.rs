//! Simulation documents.
//!
//! A document declares the atom and state of interest, the sampling grid,
//! the beams (each backed by a field folder or an inline nanofiber mode),
//! the surfaces and the trap selection. [`Simulation::from_path`] resolves
//! it into engine inputs; [`Simulation::hash`] identifies it for caching.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atom::{AtomicSystem, StateSpec};
use crate::engine::{TrapModel, TrapOptions, TrapResult, ENGINE_VERSION};
use crate::fields::nanofiber::NanofiberSpec;
use crate::fields::{
    read_fieldmap, solve_nanofiber_mode, Axis, Beam, BeamPair, Direction, FieldMap, FieldMeta, GridAxes,
    TrapConfig, TrapEntry, DATA_FILE, META_FILE, WAVELENGTH_TOLERANCE,
};
use crate::surfaces::{Material, Surface};
use crate::{Error, Result};

/// Default slider range as a multiple of the declared power.
pub const DEFAULT_SLIDER_SPAN: f64 = 5.0;
/// Slider maximum for beams declared at zero power, W.
pub const DEFAULT_SLIDER_MAX_W: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDocument {
    pub atom: AtomSpec,
    /// Levels to evaluate; the state of interest when omitted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<StateSpec>,
    pub grid: GridSpec,
    #[serde(default = "default_quantization_axis")]
    pub quantization_axis: [f64; 3],
    pub beams: Vec<BeamSpec>,
    #[serde(default)]
    pub surfaces: Vec<SurfaceSpec>,
    #[serde(default)]
    pub trap: TrapSelection,
}

fn default_quantization_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    /// `"cesium"` for the bundled data, otherwise a path to a data file.
    #[serde(default = "default_atom_data")]
    pub data: String,
    pub state: StateSpec,
}

fn default_atom_data() -> String {
    "cesium".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub x: AxisSpec,
    #[serde(default)]
    pub y: AxisSpec,
    #[serde(default)]
    pub z: AxisSpec,
}

/// One grid axis: `{min, max, points}`, an explicit list or a single value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Range { min: f64, max: f64, points: usize },
    Values(Vec<f64>),
    Single(f64),
}

impl Default for AxisSpec {
    fn default() -> Self {
        AxisSpec::Single(0.0)
    }
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            AxisSpec::Range { min, max, points } => {
                if *points == 0 || !(max >= min) {
                    return Err(Error::Config(format!(
                        "grid range [{min}, {max}] with {points} points is invalid"
                    )));
                }
                Ok(GridAxes::linspace(*min, *max, *points))
            }
            AxisSpec::Values(v) => Ok(v.clone()),
            AxisSpec::Single(v) => Ok(vec![*v]),
        }
    }
}

impl GridSpec {
    pub fn axes(&self) -> Result<GridAxes> {
        GridAxes::new(self.x.values()?, self.y.values()?, self.z.values()?)
            .map_err(|e| Error::Config(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamKind {
    Beam,
    Pair,
}

/// Power of a beam, or of each member of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PowerSpec {
    Same(f64),
    Each([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_kind")]
    pub kind: BeamKind,
    pub wavelength_m: f64,
    #[serde(rename = "power_W")]
    pub power_w: PowerSpec,
    /// Propagation direction of a single beam.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub relative_phase_rad: f64,
    /// Give each pair member its own slider.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub split: bool,
    #[serde(default, rename = "max_power_W", skip_serializing_if = "Option::is_none")]
    pub max_power_w: Option<f64>,
    pub field: FieldSource,
}

fn default_kind() -> BeamKind {
    BeamKind::Beam
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    /// A field-map directory, or a directory of field maps searched by
    /// wavelength. Pairs use `backward` when given and the time-reversed
    /// forward map otherwise.
    Folder {
        path: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        backward: Option<String>,
    },
    Nanofiber(NanofiberFieldSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NanofiberFieldSpec {
    pub radius_m: f64,
    /// Core material, used for `n_core` when that is omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_core: Option<f64>,
    #[serde(default = "one")]
    pub n_clad: f64,
    /// Angle of the quasi-linear polarization from x, rad.
    #[serde(default)]
    pub polarization_angle_rad: f64,
}

fn one() -> f64 {
    1.0
}

/// A bundled material name, a path to a material file, or an inline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialRef {
    Named(String),
    Inline(Material),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub shape: Surface,
    pub material: MaterialRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSelection {
    #[serde(default = "default_trap_axis")]
    pub axis: Axis,
    #[serde(default)]
    pub level: usize,
    #[serde(default)]
    pub sheet: usize,
}

fn default_trap_axis() -> Axis {
    Axis::X
}

impl Default for TrapSelection {
    fn default() -> Self {
        TrapSelection {
            axis: Axis::X,
            level: 0,
            sheet: 0,
        }
    }
}

/// A power control acting on one or more member beams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slider {
    pub name: String,
    /// Indices into the member-power vector.
    pub members: Vec<usize>,
    #[serde(rename = "default_W")]
    pub default_w: f64,
    #[serde(rename = "max_W")]
    pub max_w: f64,
}

/// A resolved document, ready for the engine.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub document: SimulationDocument,
    pub system: AtomicSystem,
    pub config: TrapConfig,
    pub surfaces: Vec<(Surface, Material)>,
    pub levels: Vec<StateSpec>,
    pub sliders: Vec<Slider>,
    hash: String,
}

struct Resolver<'a> {
    base: &'a Path,
    digests: BTreeMap<String, String>,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Resolver<'_> {
    fn path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn read(&mut self, key: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.digests.insert(key.to_string(), digest(&bytes));
        Ok(bytes)
    }

    fn material(&mut self, m: &MaterialRef) -> Result<Material> {
        match m {
            MaterialRef::Inline(m) => {
                m.validate()?;
                Ok(m.clone())
            }
            MaterialRef::Named(name) => match Material::builtin(name) {
                Ok(m) => Ok(m),
                Err(_) => {
                    let path = self.path(name);
                    if !path.is_file() {
                        return Err(Error::Config(format!(
                            "unknown material '{name}' (not bundled and no such file)"
                        )));
                    }
                    let bytes = self.read(&format!("material:{name}"), &path)?;
                    Material::from_json_str(&String::from_utf8_lossy(&bytes))
                }
            },
        }
    }

    fn system(&mut self, atom: &AtomSpec) -> Result<AtomicSystem> {
        if atom.data.eq_ignore_ascii_case("cesium") {
            return AtomicSystem::cesium(atom.state);
        }
        let path = self.path(&atom.data);
        let bytes = self.read("atom", &path)?;
        AtomicSystem::from_json_str(&String::from_utf8_lossy(&bytes), atom.state)
    }

    /// Field map at `wavelength`: `path` itself when it holds a map, else
    /// the matching map among its subdirectories.
    fn folder(&mut self, path: &str, wavelength: f64, grid: &GridAxes) -> Result<FieldMap> {
        let dir = self.path(path);
        if !dir.is_dir() {
            return Err(Error::MissingField(format!("field folder {} does not exist", dir.display())));
        }
        let matches = |d: &Path| -> Result<bool> {
            let meta = FieldMeta::read(d)?;
            Ok((meta.wavelength_m - wavelength).abs() <= WAVELENGTH_TOLERANCE * wavelength)
        };
        let chosen = if dir.join(META_FILE).is_file() {
            matches(&dir)?.then(|| dir.clone())
        } else {
            let mut subdirs: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Error::io(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.join(META_FILE).is_file())
                .collect();
            subdirs.sort();
            let mut found = None;
            for d in subdirs {
                if matches(&d)? {
                    found = Some(d);
                    break;
                }
            }
            found
        };
        let chosen = chosen.ok_or_else(|| {
            Error::MissingField(format!(
                "no field map at {:.3} nm in {}",
                wavelength * 1e9,
                dir.display()
            ))
        })?;
        let key = format!("field:{}", chosen.display());
        let mut hasher = Sha256::new();
        hasher.update(self.read(&format!("{key}/meta"), &chosen.join(META_FILE))?);
        hasher.update(std::fs::read(chosen.join(DATA_FILE)).map_err(|e| Error::io(&chosen.join(DATA_FILE), e))?);
        self.digests.insert(key, hex::encode(hasher.finalize()));
        let map = read_fieldmap(&chosen)?;
        if &map.axes == grid {
            Ok(map)
        } else {
            map.resample(grid)
        }
    }

    fn nanofiber(&mut self, spec: &NanofiberFieldSpec, wavelength: f64, direction: Direction, grid: &GridAxes) -> Result<FieldMap> {
        let n_core = match (&spec.n_core, &spec.material) {
            (Some(n), _) => *n,
            (None, Some(m)) => self.material(m)?.refractive_index(wavelength),
            (None, None) => {
                return Err(Error::Config("nanofiber needs n_core or a core material".into()));
            }
        };
        let spec = NanofiberSpec {
            radius: spec.radius_m,
            n_core,
            n_clad: spec.n_clad,
            wavelength,
            polarization_angle: spec.polarization_angle_rad,
            direction,
            power: 1e-3,
        };
        solve_nanofiber_mode(spec, grid)
    }
}

fn check_document(doc: &SimulationDocument) -> Result<()> {
    if doc.beams.is_empty() {
        return Err(Error::Config("at least one beam is required".into()));
    }
    for (i, b) in doc.beams.iter().enumerate() {
        if !(b.wavelength_m.is_finite() && b.wavelength_m > 0.0) {
            return Err(Error::Config(format!("beam {i}: wavelength must be positive")));
        }
        let powers = match b.power_w {
            PowerSpec::Same(p) => vec![p],
            PowerSpec::Each(p) => p.to_vec(),
        };
        if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Config(format!("beam {i}: powers must be non-negative")));
        }
        if b.kind == BeamKind::Beam && matches!(b.power_w, PowerSpec::Each(_)) {
            return Err(Error::Config(format!("beam {i}: a single beam takes one power")));
        }
    }
    Ok(())
}

impl Simulation {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let document: SimulationDocument =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_document(document, base)
    }

    /// Resolves a document; relative paths are taken from `base`.
    pub fn from_document(document: SimulationDocument, base: &Path) -> Result<Self> {
        check_document(&document)?;
        let mut r = Resolver {
            base,
            digests: BTreeMap::new(),
        };
        let system = r.system(&document.atom)?;
        let grid = document.grid.axes()?;

        let mut entries = Vec::with_capacity(document.beams.len());
        let mut sliders = Vec::new();
        let mut member = 0;
        for (i, b) in document.beams.iter().enumerate() {
            let name = b.name.clone().unwrap_or_else(|| format!("beam{i}"));
            let (p0, p1) = match b.power_w {
                PowerSpec::Same(p) => (p, p),
                PowerSpec::Each([a, c]) => (a, c),
            };
            let slider_max = |p: f64| {
                b.max_power_w
                    .unwrap_or(if p > 0.0 { DEFAULT_SLIDER_SPAN * p } else { DEFAULT_SLIDER_MAX_W })
            };
            match b.kind {
                BeamKind::Beam => {
                    let direction = b.direction.unwrap_or(Direction::Forward(Axis::Z));
                    let map = match &b.field {
                        FieldSource::Folder { path, .. } => r.folder(path, b.wavelength_m, &grid)?,
                        FieldSource::Nanofiber(spec) => r.nanofiber(spec, b.wavelength_m, direction, &grid)?,
                    };
                    entries.push(TrapEntry::Beam(Beam::new(Arc::new(map), p0)?));
                    sliders.push(Slider {
                        name,
                        members: vec![member],
                        default_w: p0,
                        max_w: slider_max(p0),
                    });
                    member += 1;
                }
                BeamKind::Pair => {
                    let (forward, backward) = match &b.field {
                        FieldSource::Folder { path, backward } => {
                            let f = r.folder(path, b.wavelength_m, &grid)?;
                            let bw = match backward {
                                Some(p) => r.folder(p, b.wavelength_m, &grid)?,
                                None => f.backward_from_forward()?,
                            };
                            (f, bw)
                        }
                        FieldSource::Nanofiber(spec) => {
                            let f = r.nanofiber(spec, b.wavelength_m, Direction::Forward(Axis::Z), &grid)?;
                            let bw = f.backward_from_forward()?;
                            (f, bw)
                        }
                    };
                    entries.push(TrapEntry::Pair(BeamPair::new(
                        Beam::new(Arc::new(forward), p0)?,
                        Beam::new(Arc::new(backward), p1)?,
                        b.relative_phase_rad,
                    )?));
                    if b.split || p0 != p1 {
                        for (k, (suffix, p)) in [("forward", p0), ("backward", p1)].into_iter().enumerate() {
                            sliders.push(Slider {
                                name: format!("{name}:{suffix}"),
                                members: vec![member + k],
                                default_w: p,
                                max_w: slider_max(p),
                            });
                        }
                    } else {
                        sliders.push(Slider {
                            name,
                            members: vec![member, member + 1],
                            default_w: p0,
                            max_w: slider_max(p0),
                        });
                    }
                    member += 2;
                }
            }
        }
        let config = TrapConfig::new(entries, document.quantization_axis)?;

        let mut surfaces = Vec::with_capacity(document.surfaces.len());
        for s in &document.surfaces {
            surfaces.push((s.shape.clone().validated()?, r.material(&s.material)?));
        }

        let levels = if document.levels.is_empty() {
            vec![document.atom.state]
        } else {
            document.levels.clone()
        };
        for l in &levels {
            system.resolve(*l)?;
        }
        let sel = document.trap;
        if sel.level >= levels.len() {
            return Err(Error::Config(format!("trap level {} out of range", sel.level)));
        }
        if sel.sheet >= levels[sel.level].f.multiplicity() {
            return Err(Error::Config(format!("trap sheet {} out of range", sel.sheet)));
        }

        let hash = document_hash(&document, &r.digests)?;
        Ok(Simulation {
            document,
            system,
            config,
            surfaces,
            levels,
            sliders,
            hash,
        })
    }

    /// SHA-256 of the canonical document plus the contents of every file it
    /// references, hex encoded.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn trap(&self) -> TrapSelection {
        self.document.trap
    }

    pub fn model(&self, options: TrapOptions) -> Result<TrapModel> {
        TrapModel::new(&self.system, &self.config, &self.surfaces, &self.levels, options)
    }

    /// Member powers for one value per slider.
    pub fn member_powers(&self, slider_values: &[f64]) -> Result<Vec<f64>> {
        if slider_values.len() != self.sliders.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} slider values, got {}",
                self.sliders.len(),
                slider_values.len()
            )));
        }
        let mut powers = self.config.member_powers();
        for (slider, &v) in self.sliders.iter().zip(slider_values) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("power for '{}' must be non-negative", slider.name)));
            }
            for &m in &slider.members {
                powers[m] = v;
            }
        }
        Ok(powers)
    }

    /// Evaluates a model built from this simulation and tags the result.
    pub fn evaluate(&self, model: &TrapModel, member_powers: &[f64]) -> Result<TrapResult> {
        let mut result = model.evaluate(member_powers)?;
        result.hash = self.hash.clone();
        result.config = Some(serde_json::to_value(&self.document)?);
        Ok(result)
    }

    pub fn run(&self, options: TrapOptions) -> Result<TrapResult> {
        let model = self.model(options)?;
        self.evaluate(&model, &self.config.member_powers())
    }
}

/// Serializes a JSON value with object keys sorted at every level.
pub fn canonical_json(value: &serde_json::Value) -> String {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", Value::String(k.clone()), canonical_json(&map[k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(canonical_json).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

fn document_hash(doc: &SimulationDocument, digests: &BTreeMap<String, String>) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(ENGINE_VERSION.as_bytes());
    hasher.update(b"\n");
    hasher.update(canonical_json(&serde_json::to_value(doc)?).as_bytes());
    for (k, v) in digests {
        hasher.update(b"\n");
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
    }
    Ok(hex::encode(hasher.finalize()))
}
