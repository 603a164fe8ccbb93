//! Fundamental HE11 mode of a step-index cylindrical fiber.
//!
//! The propagation constant solves the hybrid-mode eigenvalue equation
//!
//! ```text
//! [J1'(U)/(U J1(U)) + K1'(W)/(W K1(W))] [n1^2 J1'(U)/(U J1(U)) + n2^2 K1'(W)/(W K1(W))]
//!     = (beta/k)^2 (1/U^2 + 1/W^2)^2
//! ```
//!
//! with `U = a sqrt(n1^2 k^2 - beta^2)` and `W = a sqrt(beta^2 - n2^2 k^2)`.
//! Fields follow the circular-basis expressions of the guided mode; the
//! quasi-linear mode polarized at angle `phi0` is the equal-weight
//! superposition of the two circular modes, with a global phase chosen so
//! that the transverse components are real at `z = 0` and the longitudinal
//! component is in quadrature with them.

use num_complex::Complex64;
use puruspe::{Jn, Kn};
use serde::{Deserialize, Serialize};

use super::{Axis, Direction, FieldMap, GridAxes};
use crate::constants::{MU_0, SPEED_OF_LIGHT};
use crate::quadrature::{integrate, integrate_semi_infinite};
use crate::{Error, Result};

/// First zero of J0, the single-mode cutoff of the V parameter.
pub const SINGLE_MODE_CUTOFF: f64 = 2.404_825_557_695_773;

/// Minimum number of grid points per exterior decay length.
pub const POINTS_PER_DECAY_LENGTH: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NanofiberSpec {
    pub radius: f64,
    pub n_core: f64,
    pub n_clad: f64,
    pub wavelength: f64,
    /// Angle of the quasi-linear polarization from the x axis, rad.
    pub polarization_angle: f64,
    /// `Forward(Z)` or `Backward(Z)`.
    pub direction: Direction,
    /// Power carried by the mode, W.
    pub power: f64,
}

impl NanofiberSpec {
    fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidArgument("fiber radius must be positive".into()));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::InvalidArgument("wavelength must be positive".into()));
        }
        if !(self.n_clad >= 1.0 && self.n_core > self.n_clad && self.n_core.is_finite()) {
            return Err(Error::NoGuidedMode(format!(
                "need n_core > n_clad >= 1, got n_core = {}, n_clad = {}",
                self.n_core, self.n_clad
            )));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(Error::InvalidArgument("mode power must be positive".into()));
        }
        if !self.polarization_angle.is_finite() {
            return Err(Error::InvalidArgument("polarization angle must be finite".into()));
        }
        match self.direction {
            Direction::Forward(Axis::Z) | Direction::Backward(Axis::Z) => Ok(()),
            d => Err(Error::InvalidArgument(format!(
                "nanofiber modes propagate along z, got direction {d}"
            ))),
        }
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    /// Normalized frequency `V = k a sqrt(n1^2 - n2^2)`.
    pub fn v_parameter(&self) -> f64 {
        self.wavenumber() * self.radius * (self.n_core.powi(2) - self.n_clad.powi(2)).sqrt()
    }
}

/// Solved HE11 mode with amplitude fixed by the requested power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NanofiberMode {
    pub spec: NanofiberSpec,
    /// Propagation constant, 1/m.
    pub beta: f64,
    /// Transverse wavenumber inside the core, 1/m.
    pub h: f64,
    /// Exterior decay constant, 1/m.
    pub q: f64,
    pub s: f64,
    amplitude: f64,
}

struct Ratios {
    u: f64,
    w: f64,
    jr: f64,
    kr: f64,
}

fn ratios(spec: &NanofiberSpec, n_eff: f64) -> Ratios {
    let ka = spec.wavenumber() * spec.radius;
    let u = ka * (spec.n_core.powi(2) - n_eff * n_eff).max(0.0).sqrt();
    let w = ka * (n_eff * n_eff - spec.n_clad.powi(2)).max(0.0).sqrt();
    let j1 = Jn(1, u);
    let k1 = Kn(1, w);
    let j1p = Jn(0, u) - j1 / u;
    let k1p = -Kn(0, w) - k1 / w;
    Ratios {
        u,
        w,
        jr: j1p / (u * j1),
        kr: k1p / (w * k1),
    }
}

/// Dimensionless residual of the eigenvalue equation at effective index `n_eff`.
pub fn dispersion_residual(spec: &NanofiberSpec, n_eff: f64) -> f64 {
    let r = ratios(spec, n_eff);
    let rhs = n_eff * n_eff * (1.0 / (r.u * r.u) + 1.0 / (r.w * r.w)).powi(2);
    let lhs = (r.jr + r.kr) * (spec.n_core.powi(2) * r.jr + spec.n_clad.powi(2) * r.kr);
    lhs / rhs - 1.0
}

impl NanofiberMode {
    pub fn solve(spec: NanofiberSpec) -> Result<Self> {
        spec.validate()?;
        let v = spec.v_parameter();
        if v >= SINGLE_MODE_CUTOFF {
            log::warn!("V = {v:.3} exceeds the single-mode cutoff {SINGLE_MODE_CUTOFF:.3}; using the HE11 root");
        }
        let n_eff = find_he11_root(&spec)?;
        let k = spec.wavenumber();
        let beta = n_eff * k;
        let r = ratios(&spec, n_eff);
        let a = spec.radius;
        let s = (1.0 / (r.u * r.u) + 1.0 / (r.w * r.w)) / (r.jr + r.kr);
        let mut mode = NanofiberMode {
            spec,
            beta,
            h: r.u / a,
            q: r.w / a,
            s,
            amplitude: 1.0,
        };
        let unit_power = mode.circular_power()?;
        mode.amplitude = (spec.power / unit_power).sqrt();
        Ok(mode)
    }

    pub fn effective_index(&self) -> f64 {
        self.beta / self.spec.wavenumber()
    }

    /// Residual of the eigenvalue equation at the solved propagation constant.
    pub fn residual(&self) -> f64 {
        dispersion_residual(&self.spec, self.effective_index())
    }

    pub fn decay_length(&self) -> f64 {
        1.0 / self.q
    }

    /// Radial profile functions `(e_r / i, e_phi, e_z, d e_z / dr)` of the
    /// circular mode at unit amplitude.
    fn profile(&self, r: f64) -> [f64; 4] {
        let (a, b, h, q, s) = (self.spec.radius, self.beta, self.h, self.q, self.s);
        if r < a {
            let x = h * r;
            let (j0, j1, j2) = (Jn(0, x), Jn(1, x), Jn(2, x));
            let j1p = if x > 0.0 { j0 - j1 / x } else { 0.5 };
            [
                b / (2.0 * h) * ((1.0 - s) * j0 - (1.0 + s) * j2),
                -b / (2.0 * h) * ((1.0 - s) * j0 + (1.0 + s) * j2),
                j1,
                h * j1p,
            ]
        } else {
            let x = q * r;
            let c = Jn(1, h * a) / Kn(1, q * a);
            let (k0, k1, k2) = (Kn(0, x), Kn(1, x), Kn(2, x));
            let k1p = -k0 - k1 / x;
            [
                c * b / (2.0 * q) * ((1.0 - s) * k0 + (1.0 + s) * k2),
                -c * b / (2.0 * q) * ((1.0 - s) * k0 - (1.0 + s) * k2),
                c * k1,
                c * q * k1p,
            ]
        }
    }

    /// Power of the circular mode at unit amplitude.
    fn circular_power(&self) -> Result<f64> {
        let omega = self.spec.wavenumber() * SPEED_OF_LIGHT;
        let flux_density = |r: f64| {
            let [er, ephi, ez, dez] = self.profile(r);
            let hr = if r > 0.0 { ez / r - self.beta * ephi } else { 0.0 };
            let sz = 2.0 * (er * (self.beta * er + dez) - ephi * hr) / (omega * MU_0);
            2.0 * std::f64::consts::PI * sz * r
        };
        let a = self.spec.radius;
        let inner = integrate(flux_density, 0.0, a, 1e-10)?;
        let outer = integrate_semi_infinite(|t| flux_density(a + t), 1.0 / self.q, 1e-10)?;
        Ok(inner + outer)
    }

    /// Quasi-linearly polarized field `E+` at a point, V/m.
    pub fn field_at(&self, p: [f64; 3]) -> [Complex64; 3] {
        let f = self.spec.direction.sign().unwrap_or(1.0);
        let r = p[0].hypot(p[1]);
        let phi = p[1].atan2(p[0]);
        let delta = phi - self.spec.polarization_angle;
        let [er, ephi, ez, _] = self.profile(r);
        let scale = std::f64::consts::SQRT_2 * self.amplitude;
        let radial = scale * er * delta.cos();
        let azimuthal = scale * ephi * delta.sin();
        let (sin_phi, cos_phi) = phi.sin_cos();
        let phase = Complex64::from_polar(1.0, f * self.beta * p[2]);
        [
            phase * (radial * cos_phi - azimuthal * sin_phi),
            phase * (radial * sin_phi + azimuthal * cos_phi),
            phase * Complex64::new(0.0, -f * scale * ez * delta.cos()),
        ]
    }

    /// Samples the mode on a grid.
    pub fn sample(&self, grid: &GridAxes) -> Result<FieldMap> {
        check_resolution(grid, Axis::Z, self.q)?;
        let values = (0..grid.len()).map(|i| self.field_at(grid.coordinates(i))).collect();
        Ok(
            FieldMap::new(self.spec.wavelength, self.spec.power, self.spec.direction, grid.clone(), values)?
                .with_translation_invariance(Some(self.beta)),
        )
    }

    /// Transverse grid centered on the fiber that resolves the exterior
    /// decay and reaches eight decay lengths past the surface.
    pub fn default_grid(&self) -> GridAxes {
        let step = (self.spec.radius / 25.0).min(self.decay_length() / POINTS_PER_DECAY_LENGTH);
        let half = self.spec.radius + 8.0 * self.decay_length();
        let n = (2.0 * half / step).ceil() as usize + 1;
        let xs = GridAxes::linspace(-half, half, n);
        GridAxes {
            x: xs.clone(),
            y: xs,
            z: vec![0.0],
        }
    }
}

fn find_he11_root(spec: &NanofiberSpec) -> Result<f64> {
    let (n1, n2) = (spec.n_core, spec.n_clad);
    let samples = 4000;
    let span = n1 - n2;
    let at = |i: usize| n1 - span * (i as f64 + 0.5) / (samples as f64 + 1.0);
    let mut prev_n = at(0);
    let mut prev = dispersion_residual(spec, prev_n);
    for i in 1..samples {
        let n = at(i);
        let g = dispersion_residual(spec, n);
        if prev.is_finite() && g.is_finite() && prev.signum() != g.signum() {
            let root = bisect(spec, n, prev_n);
            if dispersion_residual(spec, root).abs() < 1e-10 {
                return Ok(root);
            }
        }
        prev = g;
        prev_n = n;
    }
    Err(Error::NoGuidedMode(format!(
        "no HE11 root between n_clad = {n2} and n_core = {n1} at {:.4e} m",
        spec.wavelength
    )))
}

fn bisect(spec: &NanofiberSpec, mut lo: f64, mut hi: f64) -> f64 {
    let g_lo = dispersion_residual(spec, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = dispersion_residual(spec, mid);
        if g == 0.0 {
            return mid;
        }
        if g.signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (g1, g2) = (dispersion_residual(spec, lo), dispersion_residual(spec, hi));
    if g1.abs() <= g2.abs() {
        lo
    } else {
        hi
    }
}

fn check_resolution(grid: &GridAxes, longitudinal: Axis, q: f64) -> Result<()> {
    let limit = 1.0 / (POINTS_PER_DECAY_LENGTH * q);
    for axis in Axis::ALL {
        if axis == longitudinal {
            continue;
        }
        let v = grid.axis(axis);
        let step = v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if step > limit * (1.0 + 1e-9) {
            return Err(Error::CoarseGrid(format!(
                "axis {} spacing {:.3e} m exceeds decay length / {POINTS_PER_DECAY_LENGTH} = {:.3e} m",
                axis.name(),
                step,
                limit
            )));
        }
    }
    Ok(())
}

/// Solves the HE11 mode and samples it on `grid`.
pub fn solve_nanofiber_mode(spec: NanofiberSpec, grid: &GridAxes) -> Result<FieldMap> {
    NanofiberMode::solve(spec)?.sample(grid)
}

/// Axial Poynting flux through the central grid slice transverse to the
/// propagation direction, by trapezoidal integration, W.
///
/// Magnetic fields come from finite differences of the longitudinal
/// component and the known propagation constant.
pub fn poynting_flux(map: &FieldMap) -> Result<f64> {
    let axis = map
        .direction
        .axis()
        .ok_or_else(|| Error::FieldMap("Poynting flux needs a propagation direction".into()))?;
    let sign = map.direction.sign().unwrap_or(1.0);
    let beta = map
        .propagation_constant
        .ok_or_else(|| Error::FieldMap("Poynting flux needs the propagation constant".into()))?;
    let (ta, tb) = match axis {
        Axis::X => (Axis::Y, Axis::Z),
        Axis::Y => (Axis::Z, Axis::X),
        Axis::Z => (Axis::X, Axis::Y),
    };
    let k = 2.0 * std::f64::consts::PI / map.wavelength;
    if beta > k {
        check_resolution(&map.axes, axis, (beta * beta - k * k).sqrt())?;
    }
    let ua = map.axes.axis(ta);
    let ub = map.axes.axis(tb);
    if ua.len() < 3 || ub.len() < 3 {
        return Err(Error::CoarseGrid(
            "Poynting flux needs at least 3 points along both transverse axes".into(),
        ));
    }
    let ul = map.axes.axis(axis);
    let il = ul.len() / 2;
    let idx = |ia: usize, ib: usize| {
        let mut ijk = [0usize; 3];
        ijk[ta.index()] = ia;
        ijk[tb.index()] = ib;
        ijk[axis.index()] = il;
        map.axes.index(ijk[0], ijk[1], ijk[2])
    };
    let field = |ia: usize, ib: usize| map.at(idx(ia, ib));
    let derivative = |u: &[f64], i: usize, get: &dyn Fn(usize) -> Complex64| {
        let n = u.len();
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        (get(hi) - get(lo)) / (u[hi] - u[lo])
    };
    let omega = k * SPEED_OF_LIGHT;
    let ikz = Complex64::new(0.0, sign * beta);
    let (a, b, l) = (ta.index(), tb.index(), axis.index());
    let mut total = 0.0;
    for ia in 0..ua.len() {
        let wa = trapezoid_weight(ua, ia);
        for ib in 0..ub.len() {
            let wb = trapezoid_weight(ub, ib);
            let e = field(ia, ib);
            let d_a = derivative(ua, ia, &|i| field(i, ib)[l]);
            let d_b = derivative(ub, ib, &|j| field(ia, j)[l]);
            // curl components along the two transverse axes
            let curl_a = d_b - ikz * e[b];
            let curl_b = ikz * e[a] - d_a;
            let denom = Complex64::new(0.0, omega * MU_0);
            let h_a = curl_a / denom;
            let h_b = curl_b / denom;
            let s = 2.0 * (e[a] * h_b.conj() - e[b] * h_a.conj()).re;
            total += wa * wb * s;
        }
    }
    Ok(sign * total)
}

fn trapezoid_weight(u: &[f64], i: usize) -> f64 {
    let n = u.len();
    let left = if i > 0 { u[i] - u[i - 1] } else { 0.0 };
    let right = if i + 1 < n { u[i + 1] - u[i] } else { 0.0 };
    0.5 * (left + right)
}
