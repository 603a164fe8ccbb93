use std::sync::Arc;

use num_complex::Complex64;

use super::{Direction, FieldMap, GridAxes};
use crate::{Error, Result};

/// A field map driven at a given power.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub field: Arc<FieldMap>,
    /// W
    pub power: f64,
}

impl Beam {
    pub fn new(field: Arc<FieldMap>, power: f64) -> Result<Self> {
        check_power(power)?;
        Ok(Beam { field, power })
    }

    /// Field amplitude scale `sqrt(P / P_ref)` for a power `p`.
    pub fn amplitude(&self, p: f64) -> f64 {
        (p / self.field.p_ref).sqrt()
    }
}

fn check_power(power: f64) -> Result<()> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::InvalidArgument(format!("beam power must be non-negative, got {power}")));
    }
    Ok(())
}

/// Two counterpropagating beams at one wavelength, summed coherently.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPair {
    pub forward: Beam,
    pub backward: Beam,
    /// Phase of the backward beam relative to the forward one, rad.
    pub relative_phase: f64,
}

impl BeamPair {
    pub fn new(forward: Beam, backward: Beam, relative_phase: f64) -> Result<Self> {
        if !forward.field.same_wavelength(&backward.field) {
            return Err(Error::GridMismatch(format!(
                "beam pair wavelengths differ: {:.9e} m vs {:.9e} m",
                forward.field.wavelength, backward.field.wavelength
            )));
        }
        if forward.field.axes != backward.field.axes {
            return Err(Error::GridMismatch("beam pair members are sampled on different grids".into()));
        }
        if !relative_phase.is_finite() {
            return Err(Error::InvalidArgument("relative phase must be finite".into()));
        }
        Ok(BeamPair {
            forward,
            backward,
            relative_phase,
        })
    }
}

/// One independent light source: a single beam or a coherent pair.
/// Different entries never interfere.
#[derive(Debug, Clone, PartialEq)]
pub enum TrapEntry {
    Beam(Beam),
    Pair(BeamPair),
}

impl TrapEntry {
    pub fn wavelength(&self) -> f64 {
        self.members()[0].0.field.wavelength
    }

    pub fn axes(&self) -> &GridAxes {
        &self.members()[0].0.field.axes
    }

    /// Member beams with their phase factors.
    pub fn members(&self) -> Vec<(&Beam, Complex64)> {
        match self {
            TrapEntry::Beam(b) => vec![(b, Complex64::new(1.0, 0.0))],
            TrapEntry::Pair(p) => vec![
                (&p.forward, Complex64::new(1.0, 0.0)),
                (&p.backward, Complex64::from_polar(1.0, p.relative_phase)),
            ],
        }
    }

    pub fn powers(&self) -> Vec<f64> {
        self.members().iter().map(|(b, _)| b.power).collect()
    }
}

/// The set of light sources of a trap and the quantization axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    pub entries: Vec<TrapEntry>,
    pub quantization_axis: [f64; 3],
}

impl TrapConfig {
    pub fn new(entries: Vec<TrapEntry>, quantization_axis: [f64; 3]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("a trap needs at least one beam".into()));
        }
        let norm = quantization_axis.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() < 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "quantization axis must be a unit vector, |n| = {norm}"
            )));
        }
        let axes = entries[0].axes();
        if entries.iter().any(|e| e.axes() != axes) {
            return Err(Error::GridMismatch(
                "all beams must be sampled on a common grid; resample upstream".into(),
            ));
        }
        Ok(TrapConfig {
            entries,
            quantization_axis,
        })
    }

    pub fn axes(&self) -> &GridAxes {
        self.entries[0].axes()
    }

    /// Powers of all member beams, entry by entry.
    pub fn member_powers(&self) -> Vec<f64> {
        self.entries.iter().flat_map(TrapEntry::powers).collect()
    }

    pub fn member_count(&self) -> usize {
        self.entries.iter().map(|e| e.members().len()).sum()
    }
}

/// Field of a beam or coherent pair at its configured power(s).
pub fn total_field_at_power(entry: &TrapEntry) -> Result<FieldMap> {
    let members = entry.members();
    let first = members[0].0.field.as_ref();
    let mut values = vec![[Complex64::new(0.0, 0.0); 3]; first.axes.len()];
    for (beam, phase) in &members {
        let w = phase * beam.amplitude(beam.power);
        for (acc, v) in values.iter_mut().zip(beam.field.values()) {
            for k in 0..3 {
                acc[k] += w * v[k];
            }
        }
    }
    let direction = match entry {
        TrapEntry::Beam(_) => first.direction,
        TrapEntry::Pair(_) => Direction::None,
    };
    let mut out = FieldMap::new(first.wavelength, first.p_ref, direction, first.axes.clone(), values)?;
    out.translation_invariant = first.translation_invariant;
    out.propagation_constant = first.propagation_constant;
    Ok(out)
}
