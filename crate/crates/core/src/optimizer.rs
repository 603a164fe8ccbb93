//! Exhaustive scans of beam powers.
//!
//! Each power tuple rescales the precomputed fields of a [`TrapModel`] and
//! re-diagonalizes, so a scan value is exactly what a fresh computation at
//! those powers yields.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Simulation;
use crate::engine::persist::f64_bytes;
use crate::engine::{trap_properties, TrapModel, TrapProperties};
use crate::fields::{Axis, GridAxes};
use crate::{Error, Result};

pub const SCAN_FORMAT_VERSION: u32 = 1;

/// One scanned slider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParameter {
    /// Index into the simulation's sliders (one per beam, or per pair
    /// member when a pair is split).
    pub slider: usize,
    #[serde(rename = "min_W")]
    pub min_w: f64,
    #[serde(rename = "max_W")]
    pub max_w: f64,
    pub steps: usize,
}

impl ScanParameter {
    pub fn values(&self) -> Vec<f64> {
        GridAxes::linspace(self.min_w, self.max_w, self.steps)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Trap depth, mK; zero when unstable.
    Depth,
    /// Geometric mean of the trap frequencies along the listed axes, Hz.
    Frequency(Vec<Axis>),
    /// Distance of the minimum from the nearest surface, m.
    Distance,
}

impl Objective {
    pub fn evaluate(&self, props: &TrapProperties) -> Option<f64> {
        match self {
            Objective::Depth => Some(props.depth_mk),
            Objective::Frequency(axes) => props.mean_frequency(axes),
            Objective::Distance => props.distance_to_surface,
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Objective::Depth => "mK",
            Objective::Frequency(_) => "Hz",
            Objective::Distance => "m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub parameters: Vec<ScanParameter>,
    pub objective: Objective,
    /// Overrides of the document's trap selection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sheet: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
}

impl ScanSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self, slider_count: usize) -> Result<()> {
        if self.parameters.is_empty() || self.parameters.len() > 2 {
            return Err(Error::Config("a scan takes one or two parameters".into()));
        }
        for p in &self.parameters {
            if p.slider >= slider_count {
                return Err(Error::Config(format!(
                    "slider {} out of range for {slider_count} sliders",
                    p.slider
                )));
            }
            if !(p.min_w.is_finite() && p.max_w.is_finite() && p.min_w >= 0.0 && p.max_w >= p.min_w) {
                return Err(Error::Config(format!(
                    "power range [{}, {}] W is invalid",
                    p.min_w, p.max_w
                )));
            }
            if p.steps == 0 {
                return Err(Error::Config("a scan range needs at least one step".into()));
            }
        }
        if self.parameters.len() == 2 && self.parameters[0].slider == self.parameters[1].slider {
            return Err(Error::Config("both scan parameters drive the same slider".into()));
        }
        if let Objective::Frequency(axes) = &self.objective {
            if axes.is_empty() {
                return Err(Error::Config("frequency objective needs at least one axis".into()));
            }
        }
        Ok(())
    }
}

/// Best grid point of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptimum {
    pub indices: Vec<usize>,
    #[serde(rename = "powers_W")]
    pub powers_w: Vec<f64>,
    pub value: f64,
    pub properties: TrapProperties,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub spec: ScanSpec,
    /// Scanned power values per parameter, W.
    pub axes: Vec<Vec<f64>>,
    /// Objective per tuple, first parameter slowest; `None` where
    /// the objective is unavailable.
    pub values: Vec<Option<f64>>,
    pub argmax: Option<ScanOptimum>,
    pub hash: String,
}

impl ScanResult {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn value(&self, indices: &[usize]) -> Option<f64> {
        self.values[flat_index(&self.shape(), indices)]
    }

    /// Writes `scan.json` and `objective.bin` (little-endian f64, NaN where
    /// unavailable).
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let bin = dir.join("objective.bin");
        fs::write(&bin, f64_bytes(self.values.iter().map(|v| v.unwrap_or(f64::NAN))))
            .map_err(|e| Error::io(&bin, e))?;
        #[derive(Serialize)]
        struct Header<'a> {
            format_version: u32,
            spec: &'a ScanSpec,
            unit: &'a str,
            axes_w: &'a [Vec<f64>],
            shape: Vec<usize>,
            argmax: &'a Option<ScanOptimum>,
            hash: &'a str,
        }
        let header = Header {
            format_version: SCAN_FORMAT_VERSION,
            spec: &self.spec,
            unit: self.spec.objective.unit(),
            axes_w: &self.axes,
            shape: self.shape(),
            argmax: &self.argmax,
            hash: &self.hash,
        };
        let json = dir.join("scan.json");
        fs::write(&json, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&json, e))
    }
}

fn flat_index(shape: &[usize], indices: &[usize]) -> usize {
    indices.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

fn unravel(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for (k, &n) in shape.iter().enumerate().rev() {
        out[k] = flat % n;
        flat /= n;
    }
    out
}

/// First strict maximum among stable entries in row-major order.
fn argmax(values: &[Option<f64>], stable: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (flat, (v, &ok)) in values.iter().zip(stable).enumerate() {
        if let (Some(v), true) = (v, ok) {
            if best.map_or(true, |(_, b)| *v > b) {
                best = Some((flat, *v));
            }
        }
    }
    best.map(|(flat, _)| flat)
}

/// Evaluates the objective over every power tuple of `spec`.
///
/// Sliders not scanned keep their document defaults. Unstable tuples are
/// recorded (depth 0) but never chosen as the optimum, which is the largest
/// value among stable tuples; ties go to the lowest first power, then the
/// lowest second power.
pub fn power_scan(sim: &Simulation, model: &TrapModel, spec: &ScanSpec) -> Result<ScanResult> {
    spec.validate(sim.sliders.len())?;
    let trap = sim.trap();
    let level = spec.level.unwrap_or(trap.level);
    let sheet = spec.sheet.unwrap_or(trap.sheet);
    let axis = spec.axis.unwrap_or(trap.axis);
    let axes: Vec<Vec<f64>> = spec.parameters.iter().map(ScanParameter::values).collect();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let defaults: Vec<f64> = sim.sliders.iter().map(|s| s.default_w).collect();

    let slider_values = |flat: usize| -> Vec<f64> {
        let idx = unravel(&shape, flat);
        let mut values = defaults.clone();
        for (p, (&i, axis_values)) in spec.parameters.iter().zip(idx.iter().zip(&axes)) {
            values[p.slider] = axis_values[i];
        }
        values
    };
    let evaluate = |flat: usize| -> Result<TrapProperties> {
        let powers = sim.member_powers(&slider_values(flat))?;
        let result = model.evaluate(&powers)?;
        trap_properties(&result, level, sheet, axis, sim.system.mass)
    };
    let props: Vec<TrapProperties> = match model.options().threads {
        Some(1) => (0..total).map(evaluate).collect::<Result<_>>()?,
        _ => (0..total).into_par_iter().map(evaluate).collect::<Result<_>>()?,
    };
    let values: Vec<Option<f64>> = props.iter().map(|p| spec.objective.evaluate(p)).collect();

    let stable: Vec<bool> = props.iter().map(|p| p.stable).collect();
    let best = argmax(&values, &stable);
    let argmax = best.map(|flat| {
        let indices = unravel(&shape, flat);
        ScanOptimum {
            powers_w: indices.iter().zip(&axes).map(|(&i, a)| a[i]).collect(),
            indices,
            value: values[flat].unwrap(),
            properties: props[flat].clone(),
        }
    });
    Ok(ScanResult {
        spec: spec.clone(),
        axes,
        values,
        argmax,
        hash: sim.hash().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let shape = [3, 5];
        for flat in 0..15 {
            assert_eq!(flat_index(&shape, &unravel(&shape, flat)), flat);
        }
        assert_eq!(unravel(&shape, 7), vec![1, 2]);
    }

    #[test]
    fn ties_go_to_the_lowest_powers() {
        let values = [Some(1.0), Some(3.0), Some(3.0), Some(2.0), Some(3.0), None];
        assert_eq!(argmax(&values, &[true; 6]), Some(1));
        assert_eq!(argmax(&values, &[true, false, true, true, true, true]), Some(2));
        assert_eq!(argmax(&values, &[false; 6]), None);
        assert_eq!(argmax(&[None, None], &[true, true]), None);
    }

    #[test]
    fn objective_parses() {
        let o: Objective = serde_json::from_str(r#"{"frequency": ["x", "z"]}"#).unwrap();
        assert_eq!(o, Objective::Frequency(vec![Axis::X, Axis::Z]));
        let o: Objective = serde_json::from_str(r#""depth""#).unwrap();
        assert_eq!(o, Objective::Depth);
    }
}
