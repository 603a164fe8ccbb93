use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::TrapResult;
use crate::constants::joule_to_mk;
use crate::fields::{Axis, GridAxes};
use crate::{Error, Result};

/// Half-width of the quadratic fit window, in grid points.
const FIT_HALF_WIDTH: usize = 2;

/// Characteristics of the deepest trap on one potential sheet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapProperties {
    pub stable: bool,
    /// Refined minimum position, m.
    pub position: Option<[f64; 3]>,
    /// Grid point of the minimum.
    pub grid_index: Option<usize>,
    /// Potential at the minimum grid point, mK.
    pub minimum_mk: Option<f64>,
    /// Zero for unstable configurations.
    pub depth_mk: f64,
    /// Trap frequencies along x, y, z, Hz; `None` where unavailable.
    pub frequencies_hz: [Option<f64>; 3],
    /// Distance from the minimum to the nearest surface, m.
    pub distance_to_surface: Option<f64>,
    /// Spread of all sheets of the manifold at the minimum, mK.
    pub broadening_mk: Option<f64>,
}

impl TrapProperties {
    pub fn unstable() -> Self {
        TrapProperties {
            stable: false,
            position: None,
            grid_index: None,
            minimum_mk: None,
            depth_mk: 0.0,
            frequencies_hz: [None; 3],
            distance_to_surface: None,
            broadening_mk: None,
        }
    }

    /// Geometric mean of the available frequencies along `axes`.
    pub fn mean_frequency(&self, axes: &[Axis]) -> Option<f64> {
        let vals: Vec<f64> = axes.iter().filter_map(|a| self.frequencies_hz[a.index()]).collect();
        if vals.is_empty() || vals.len() != axes.len() {
            return None;
        }
        Some((vals.iter().map(|v| v.ln()).sum::<f64>() / vals.len() as f64).exp())
    }
}

fn neighbor(axes: &GridAxes, point: usize, axis: Axis, step: isize) -> Option<usize> {
    let mut ijk = axes.unravel(point);
    let n = axes.axis(axis).len() as isize;
    let k = ijk[axis.index()] as isize + step;
    if k < 0 || k >= n {
        return None;
    }
    ijk[axis.index()] = k as usize;
    Some(axes.index(ijk[0], ijk[1], ijk[2]))
}

fn is_local_minimum(axes: &GridAxes, potential: &[f64], mask: &[bool], point: usize, extended: &[Axis]) -> bool {
    if mask[point] || !potential[point].is_finite() {
        return false;
    }
    extended.iter().all(|&axis| {
        [-1, 1].iter().all(|&step| match neighbor(axes, point, axis, step) {
            Some(nb) => !mask[nb] && potential[nb] > potential[point],
            None => false,
        })
    })
}

/// Highest potential met walking from `point` along `axis` until a masked
/// point or the grid edge.
fn barrier(axes: &GridAxes, potential: &[f64], mask: &[bool], point: usize, axis: Axis, step: isize) -> f64 {
    let mut highest = potential[point];
    let mut current = point;
    while let Some(nb) = neighbor(axes, current, axis, step) {
        if mask[nb] {
            break;
        }
        highest = highest.max(potential[nb]);
        current = nb;
    }
    highest
}

/// Least-squares parabola through the five points centered on `point`.
/// Returns the vertex offset and the second derivative, SI units.
fn quadratic_fit(axes: &GridAxes, potential: &[f64], mask: &[bool], point: usize, axis: Axis) -> Option<(f64, f64)> {
    let coords = axes.axis(axis);
    let center = axes.unravel(point)[axis.index()];
    let hw = FIT_HALF_WIDTH as isize;
    let mut samples = Vec::with_capacity(5);
    for step in -hw..=hw {
        let nb = neighbor(axes, point, axis, step)?;
        if mask[nb] {
            return None;
        }
        samples.push((coords[(center as isize + step) as usize] - coords[center], potential[nb]));
    }
    let h = (samples[4].0 - samples[0].0) / 4.0;
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for &(x, u) in &samples {
        let t = x / h;
        let row = Vector3::new(1.0, t, t * t);
        ata += row * row.transpose();
        atb += row * u;
    }
    let c = ata.lu().solve(&atb)?;
    let second = 2.0 * c[2] / (h * h);
    let vertex = if c[2] != 0.0 { -c[1] / (2.0 * c[2]) * h } else { f64::NAN };
    Some((vertex, second))
}

/// Minimum, depth and frequencies of a potential sampled on `axes`.
///
/// The minimum is the deepest grid point lower than both neighbors along
/// every extended axis. Depth is the smaller of the two barriers met when
/// walking away from it along `trap_axis` (up to a masked point or the
/// grid edge). Frequencies come from five-point parabolic fits and are
/// unavailable within two points of a mask or edge.
pub fn potential_properties(
    axes: &GridAxes,
    potential: &[f64],
    mask: &[bool],
    trap_axis: Axis,
    mass: f64,
) -> Result<TrapProperties> {
    if potential.len() != axes.len() || mask.len() != axes.len() {
        return Err(Error::ShapeMismatch(format!(
            "potential has {} values and mask {} for a grid of {}",
            potential.len(),
            mask.len(),
            axes.len()
        )));
    }
    if axes.axis(trap_axis).len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "trapping axis {} needs at least 3 grid points",
            trap_axis.name()
        )));
    }
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument("mass must be positive".into()));
    }
    let extended = axes.extended_axes();
    let best = (0..axes.len())
        .filter(|&p| is_local_minimum(axes, potential, mask, p, &extended))
        .min_by(|&a, &b| potential[a].total_cmp(&potential[b]).then(a.cmp(&b)));
    let Some(point) = best else {
        return Ok(TrapProperties::unstable());
    };
    let u_min = potential[point];
    let depth = [-1, 1]
        .iter()
        .map(|&step| barrier(axes, potential, mask, point, trap_axis, step) - u_min)
        .fold(f64::INFINITY, f64::min);
    if !(depth > 0.0) {
        return Ok(TrapProperties::unstable());
    }

    let mut position = axes.coordinates(point);
    let mut frequencies = [None; 3];
    for &axis in &extended {
        if let Some((vertex, second)) = quadratic_fit(axes, potential, mask, point, axis) {
            let coords = axes.axis(axis);
            let i = axes.unravel(point)[axis.index()];
            let reach = (coords[i + FIT_HALF_WIDTH] - coords[i - FIT_HALF_WIDTH]) / 2.0;
            if vertex.is_finite() && vertex.abs() <= reach {
                position[axis.index()] += vertex;
            }
            if second > 0.0 {
                frequencies[axis.index()] = Some((second / mass).sqrt() / (2.0 * std::f64::consts::PI));
            }
        }
    }
    Ok(TrapProperties {
        stable: true,
        position: Some(position),
        grid_index: Some(point),
        minimum_mk: Some(joule_to_mk(u_min)),
        depth_mk: joule_to_mk(depth),
        frequencies_hz: frequencies,
        distance_to_surface: None,
        broadening_mk: None,
    })
}

/// Trap properties of one sheet of one requested level of a result.
pub fn trap_properties(
    result: &TrapResult,
    level: usize,
    sheet: usize,
    trap_axis: Axis,
    mass: f64,
) -> Result<TrapProperties> {
    let lr = result.level(level)?;
    let values = lr
        .sheets
        .get(sheet)
        .ok_or_else(|| Error::InvalidArgument(format!("sheet {sheet} out of range for {} sheets", lr.dim())))?;
    let mut props = potential_properties(&result.axes, values, &result.mask, trap_axis, mass)?;
    if let (Some(point), Some(pos)) = (props.grid_index, props.position) {
        let spread = lr.sheets.iter().map(|s| s[point]);
        let (lo, hi) = spread.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        props.broadening_mk = Some(joule_to_mk(hi - lo));
        props.distance_to_surface = result
            .surfaces
            .iter()
            .map(|s| s.signed_distance(pos))
            .reduce(f64::min);
    }
    Ok(props)
}
