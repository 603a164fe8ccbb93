//! Monochromatic vector field maps on rectilinear grids, beams and
//! counterpropagating beam pairs.
//!
//! All fields are positive-frequency amplitudes `E+` with
//! `E(t) = E+ exp(-i w t) + c.c.`, so a plane wave carries intensity
//! `I = 2 eps0 c |E+|^2`.

mod beams;
mod io;
pub mod nanofiber;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use beams::{total_field_at_power, Beam, BeamPair, TrapConfig, TrapEntry};
pub use io::{encode_values, read_fieldmap, write_fieldmap, FieldMeta, DATA_FILE, FIELD_FORMAT_VERSION, META_FILE};
pub use nanofiber::{poynting_flux, solve_nanofiber_mode, NanofiberMode, NanofiberSpec};

/// Relative tolerance for two wavelengths to count as equal.
pub const WAVELENGTH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        ["x", "y", "z"][self.index()]
    }

    pub fn unit(self) -> [f64; 3] {
        let mut u = [0.0; 3];
        u[self.index()] = 1.0;
        u
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(Error::Config(format!("unknown axis '{s}'"))),
        }
    }
}

/// Propagation tag of a field map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Direction {
    Forward(Axis),
    Backward(Axis),
    None,
}

impl Direction {
    pub fn axis(self) -> Option<Axis> {
        match self {
            Direction::Forward(a) | Direction::Backward(a) => Some(a),
            Direction::None => None,
        }
    }

    pub fn reversed(self) -> Direction {
        match self {
            Direction::Forward(a) => Direction::Backward(a),
            Direction::Backward(a) => Direction::Forward(a),
            Direction::None => Direction::None,
        }
    }

    /// +1 for forward, -1 for backward.
    pub fn sign(self) -> Option<f64> {
        match self {
            Direction::Forward(_) => Some(1.0),
            Direction::Backward(_) => Some(-1.0),
            Direction::None => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Forward(a) => write!(f, "+{}", a.name()),
            Direction::Backward(a) => write!(f, "-{}", a.name()),
            Direction::None => f.write_str("none"),
        }
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(Direction::None);
        }
        let (sign, axis) = s.split_at(1.min(s.len()));
        let axis: Axis = axis.parse()?;
        match sign {
            "+" => Ok(Direction::Forward(axis)),
            "-" => Ok(Direction::Backward(axis)),
            _ => Err(Error::Config(format!("direction must look like '+z', '-x' or 'none', got '{s}'"))),
        }
    }
}

impl TryFrom<String> for Direction {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Direction> for String {
    fn from(d: Direction) -> String {
        d.to_string()
    }
}

/// Three strictly increasing coordinate arrays in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxes {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl GridAxes {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let g = GridAxes { x, y, z };
        g.validate()?;
        Ok(g)
    }

    /// `n` evenly spaced values from `min` to `max` inclusive.
    pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![min],
            _ => (0..n)
                .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    /// A single point.
    pub fn point(p: [f64; 3]) -> Self {
        GridAxes {
            x: vec![p[0]],
            y: vec![p[1]],
            z: vec![p[2]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for axis in Axis::ALL {
            let v = self.axis(axis);
            if v.is_empty() {
                return Err(Error::InvalidArgument(format!("axis {} is empty", axis.name())));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(format!("axis {} has non-finite values", axis.name())));
            }
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidArgument(format!(
                    "axis {} is not strictly increasing",
                    axis.name()
                )));
            }
        }
        Ok(())
    }

    pub fn axis(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.x.len(), self.y.len(), self.z.len()]
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len() * self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index, x slowest and z fastest.
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.y.len() + iy) * self.z.len() + iz
    }

    pub fn unravel(&self, index: usize) -> [usize; 3] {
        let nz = self.z.len();
        let ny = self.y.len();
        [index / (ny * nz), (index / nz) % ny, index % nz]
    }

    pub fn coordinates(&self, index: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(index);
        [self.x[i], self.y[j], self.z[k]]
    }

    /// Axes with more than one point.
    pub fn extended_axes(&self) -> Vec<Axis> {
        Axis::ALL.into_iter().filter(|a| self.axis(*a).len() > 1).collect()
    }

    /// Flat index of the grid point closest to `p`.
    pub fn nearest(&self, p: [f64; 3]) -> usize {
        let pick = |v: &[f64], c: f64| {
            v.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - c).abs().total_cmp(&(b.1 - c).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        self.index(pick(&self.x, p[0]), pick(&self.y, p[1]), pick(&self.z, p[2]))
    }

    /// Whether `p` lies inside the bounding box (inclusive).
    pub fn contains(&self, p: [f64; 3]) -> bool {
        Axis::ALL.into_iter().all(|a| {
            let v = self.axis(a);
            let c = p[a.index()];
            c >= v[0] && c <= v[v.len() - 1]
        })
    }
}

/// Complex field `E+` on a grid, normalized to the reference power `p_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub wavelength: f64,
    pub p_ref: f64,
    pub direction: Direction,
    pub axes: GridAxes,
    /// True for fields of structures invariant along the propagation axis,
    /// which admit a synthesized counterpropagating partner.
    pub translation_invariant: bool,
    /// Propagation constant, 1/m, when known.
    pub propagation_constant: Option<f64>,
    values: Vec<[Complex64; 3]>,
}

impl FieldMap {
    pub fn new(
        wavelength: f64,
        p_ref: f64,
        direction: Direction,
        axes: GridAxes,
        values: Vec<[Complex64; 3]>,
    ) -> Result<Self> {
        axes.validate()?;
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::FieldMap(format!("wavelength must be positive, got {wavelength}")));
        }
        if !(p_ref.is_finite() && p_ref > 0.0) {
            return Err(Error::FieldMap(format!("reference power must be positive, got {p_ref}")));
        }
        if values.len() != axes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} field values for a {:?} grid",
                values.len(),
                axes.shape()
            )));
        }
        if values
            .iter()
            .any(|v| v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())))
        {
            return Err(Error::FieldMap("field contains non-finite values".into()));
        }
        Ok(FieldMap {
            wavelength,
            p_ref,
            direction,
            axes,
            translation_invariant: false,
            propagation_constant: None,
            values,
        })
    }

    pub fn with_translation_invariance(mut self, propagation_constant: Option<f64>) -> Self {
        self.translation_invariant = true;
        self.propagation_constant = propagation_constant;
        self
    }

    pub fn values(&self) -> &[[Complex64; 3]] {
        &self.values
    }

    pub fn at(&self, index: usize) -> [Complex64; 3] {
        self.values[index]
    }

    /// Same map with every component multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> FieldMap {
        let mut out = self.clone();
        for v in &mut out.values {
            for c in v.iter_mut() {
                *c *= factor;
            }
        }
        out
    }

    pub fn same_wavelength(&self, other: &FieldMap) -> bool {
        ((self.wavelength - other.wavelength) / self.wavelength).abs() <= WAVELENGTH_TOLERANCE
    }

    /// Counterpropagating partner of a translation-invariant guided mode.
    ///
    /// The partner is the complex conjugate of the forward field: transverse
    /// components keep their profile, the longitudinal component flips sign
    /// relative to them and the propagation phase reverses. The sum of a
    /// pair is therefore real up to a global phase and carries no
    /// ellipticity anywhere.
    pub fn backward_from_forward(&self) -> Result<FieldMap> {
        if self.direction.axis().is_none() {
            return Err(Error::FieldMap(
                "field map has no propagation direction; cannot build its counterpropagating partner".into(),
            ));
        }
        if !self.translation_invariant {
            return Err(Error::FieldMap(
                "counterpropagating partner can only be synthesized for translation-invariant structures; supply both directions".into(),
            ));
        }
        let mut out = self.clone();
        for v in &mut out.values {
            for c in v.iter_mut() {
                *c = c.conj();
            }
        }
        out.direction = self.direction.reversed();
        Ok(out)
    }

    /// Multilinear interpolation of this map onto `target`.
    ///
    /// Singleton axes of the source are treated as constant. Target points
    /// outside the source bounding box are an error.
    pub fn resample(&self, target: &GridAxes) -> Result<FieldMap> {
        if *target == self.axes {
            return Ok(self.clone());
        }
        target.validate()?;
        let mut stencils: [Vec<(usize, usize, f64)>; 3] = Default::default();
        for axis in Axis::ALL {
            let src = self.axes.axis(axis);
            let mut s = Vec::new();
            for &c in target.axis(axis) {
                s.push(bracket(src, c).ok_or_else(|| {
                    Error::GridMismatch(format!(
                        "coordinate {c:.4e} m on axis {} is outside the field map [{:.4e}, {:.4e}]",
                        axis.name(),
                        src[0],
                        src[src.len() - 1]
                    ))
                })?);
            }
            stencils[axis.index()] = s;
        }
        let mut values = Vec::with_capacity(target.len());
        for &(x0, x1, tx) in &stencils[0] {
            for &(y0, y1, ty) in &stencils[1] {
                for &(z0, z1, tz) in &stencils[2] {
                    let mut acc = [Complex64::new(0.0, 0.0); 3];
                    for (ix, wx) in [(x0, 1.0 - tx), (x1, tx)] {
                        for (iy, wy) in [(y0, 1.0 - ty), (y1, ty)] {
                            for (iz, wz) in [(z0, 1.0 - tz), (z1, tz)] {
                                let w = wx * wy * wz;
                                if w == 0.0 {
                                    continue;
                                }
                                let v = self.values[self.axes.index(ix, iy, iz)];
                                for k in 0..3 {
                                    acc[k] += v[k] * w;
                                }
                            }
                        }
                    }
                    values.push(acc);
                }
            }
        }
        let mut out = FieldMap::new(self.wavelength, self.p_ref, self.direction, target.clone(), values)?;
        out.translation_invariant = self.translation_invariant;
        out.propagation_constant = self.propagation_constant;
        Ok(out)
    }
}

/// Bracketing indices and weight of `c` in the sorted array `v`.
fn bracket(v: &[f64], c: f64) -> Option<(usize, usize, f64)> {
    let n = v.len();
    if n == 1 {
        return Some((0, 0, 0.0));
    }
    let span = (v[n - 1] - v[0]).abs().max(f64::MIN_POSITIVE);
    let eps = 1e-12 * span;
    if c < v[0] - eps || c > v[n - 1] + eps {
        return None;
    }
    let hi = v.partition_point(|&x| x < c).clamp(1, n - 1);
    let lo = hi - 1;
    let t = ((c - v[lo]) / (v[hi] - v[lo])).clamp(0.0, 1.0);
    Some((lo, hi, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn direction_round_trips_through_strings() {
        for d in [Direction::Forward(Axis::Z), Direction::Backward(Axis::X), Direction::None] {
            let s = d.to_string();
            assert_eq!(s.parse::<Direction>().unwrap(), d);
        }
        assert!("*z".parse::<Direction>().is_err());
        assert!("+w".parse::<Direction>().is_err());
    }

    #[test]
    fn grid_indexing() {
        let g = GridAxes::new(vec![0.0, 1.0], vec![0.0, 1.0, 2.0], vec![5.0]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.index(1, 2, 0), 5);
        assert_eq!(g.unravel(4), [1, 1, 0]);
        assert_eq!(g.coordinates(4), [1.0, 1.0, 5.0]);
        assert_eq!(g.extended_axes(), vec![Axis::X, Axis::Y]);
        assert!(GridAxes::new(vec![1.0, 0.0], vec![0.0], vec![0.0]).is_err());
        assert!(GridAxes::new(vec![], vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = GridAxes::new(vec![0.0, 1.0], vec![0.0], vec![0.0]).unwrap();
        let err = FieldMap::new(1e-6, 1.0, Direction::None, g, vec![[c(0.0, 0.0); 3]]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn backward_partner_requires_direction() {
        let g = GridAxes::point([0.0; 3]);
        let m = FieldMap::new(1e-6, 1.0, Direction::None, g, vec![[c(1.0, 0.0); 3]])
            .unwrap()
            .with_translation_invariance(None);
        assert!(m.backward_from_forward().is_err());
    }

    #[test]
    fn resample_is_exact_for_linear_fields() {
        let axes = GridAxes::new(
            GridAxes::linspace(0.0, 1.0, 5),
            GridAxes::linspace(-1.0, 1.0, 3),
            vec![0.0],
        )
        .unwrap();
        let vals: Vec<[Complex64; 3]> = (0..axes.len())
            .map(|i| {
                let p = axes.coordinates(i);
                [c(2.0 * p[0] + p[1], 0.0), c(0.0, p[1]), c(1.0, 1.0)]
            })
            .collect();
        let m = FieldMap::new(1e-6, 1.0, Direction::Forward(Axis::Z), axes, vals).unwrap();
        let target = GridAxes::new(vec![0.1, 0.55, 0.9], vec![-0.3, 0.7], vec![0.0]).unwrap();
        let r = m.resample(&target).unwrap();
        for i in 0..target.len() {
            let p = target.coordinates(i);
            let v = r.at(i);
            assert!((v[0].re - (2.0 * p[0] + p[1])).abs() < 1e-12);
            assert!((v[1].im - p[1]).abs() < 1e-12);
        }
        let outside = GridAxes::new(vec![1.5], vec![0.0], vec![0.0]).unwrap();
        assert!(matches!(m.resample(&outside), Err(Error::GridMismatch(_))));
    }
}
