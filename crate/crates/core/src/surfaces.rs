//! Dielectric materials, atom-surface C3 coefficients and Casimir-Polder
//! potentials for planes and cylinders.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atom::AtomicSystem;
use crate::constants::{wavelength_to_omega, EPSILON_0, HBAR};
use crate::polarizability::polarizability_imaginary_axis;
use crate::quadrature::integrate_semi_infinite;
use crate::{Error, Result};

/// Distances below this are clamped and the point is masked.
pub const CLAMP_DISTANCE: f64 = 1e-9;

const BUILTIN_MATERIALS: [(&str, &str); 4] = [
    ("SiO2", include_str!("../data/materials/SiO2.json")),
    ("SiN", include_str!("../data/materials/SiN.json")),
    ("GaInP", include_str!("../data/materials/GaInP.json")),
    ("air", include_str!("../data/materials/air.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    pub omega_rad_s: f64,
    pub strength: f64,
    pub gamma_rad_s: f64,
}

/// Lorentz-oscillator permittivity model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub oscillators: Vec<Oscillator>,
}

impl Material {
    pub fn vacuum() -> Self {
        Material {
            name: "vacuum".into(),
            oscillators: Vec::new(),
        }
    }

    /// One of the bundled models: SiO2, SiN, GaInP, air.
    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUILTIN_MATERIALS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config(format!("unknown material '{name}'")))?;
        Self::from_json_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let m: Material = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for o in &self.oscillators {
            if !(o.omega_rad_s > 0.0 && o.strength >= 0.0 && o.gamma_rad_s >= 0.0)
                || !(o.omega_rad_s.is_finite() && o.strength.is_finite() && o.gamma_rad_s.is_finite())
            {
                return Err(Error::Config(format!(
                    "material '{}': oscillators need positive resonance and non-negative strength and damping",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Permittivity on the imaginary frequency axis, `eps(i xi)`.
    pub fn permittivity_imaginary(&self, xi: f64) -> f64 {
        1.0 + self
            .oscillators
            .iter()
            .map(|o| {
                let w2 = o.omega_rad_s * o.omega_rad_s;
                o.strength * w2 / (w2 + xi * xi + o.gamma_rad_s * xi)
            })
            .sum::<f64>()
    }

    /// Real part of the permittivity at a real angular frequency.
    pub fn permittivity_real(&self, omega: f64) -> f64 {
        1.0 + self
            .oscillators
            .iter()
            .map(|o| {
                let w2 = o.omega_rad_s * o.omega_rad_s;
                let re = w2 - omega * omega;
                let im = o.gamma_rad_s * omega;
                o.strength * w2 * re / (re * re + im * im)
            })
            .sum::<f64>()
    }

    /// Refractive index at a vacuum wavelength (lossless approximation).
    pub fn refractive_index(&self, wavelength: f64) -> f64 {
        self.permittivity_real(wavelength_to_omega(wavelength)).sqrt()
    }

    pub fn is_vacuum(&self) -> bool {
        self.oscillators.iter().all(|o| o.strength == 0.0)
    }
}

/// Geometry used for the atom-surface interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    /// Material fills `normal . r < offset`.
    Plane { normal: [f64; 3], offset_m: f64 },
    /// Infinite dielectric cylinder.
    Cylinder {
        point_m: [f64; 3],
        direction: [f64; 3],
        radius_m: f64,
    },
}

fn normalized(v: [f64; 3]) -> Result<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidArgument("direction vector must be non-zero".into()));
    }
    Ok(v.map(|c| c / n))
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl Surface {
    pub fn plane(normal: [f64; 3], offset_m: f64) -> Result<Self> {
        Ok(Surface::Plane {
            normal: normalized(normal)?,
            offset_m,
        })
    }

    pub fn cylinder(point_m: [f64; 3], direction: [f64; 3], radius_m: f64) -> Result<Self> {
        if !(radius_m > 0.0) {
            return Err(Error::InvalidArgument("cylinder radius must be positive".into()));
        }
        Ok(Surface::Cylinder {
            point_m,
            direction: normalized(direction)?,
            radius_m,
        })
    }

    /// Re-normalizes direction vectors of a deserialized surface.
    pub fn validated(self) -> Result<Self> {
        match self {
            Surface::Plane { normal, offset_m } => Surface::plane(normal, offset_m),
            Surface::Cylinder {
                point_m,
                direction,
                radius_m,
            } => Surface::cylinder(point_m, direction, radius_m),
        }
    }

    /// Signed distance to the surface, negative inside the material.
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        match self {
            Surface::Plane { normal, offset_m } => dot(*normal, p) - offset_m,
            Surface::Cylinder {
                point_m,
                direction,
                radius_m,
            } => {
                let d = [p[0] - point_m[0], p[1] - point_m[1], p[2] - point_m[2]];
                let along = dot(d, *direction);
                let perp = [
                    d[0] - along * direction[0],
                    d[1] - along * direction[1],
                    d[2] - along * direction[2],
                ];
                dot(perp, perp).sqrt() - radius_m
            }
        }
    }
}

/// Outcome of evaluating the Casimir-Polder potential at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CasimirPolder {
    Free(f64),
    /// Closer than [`CLAMP_DISTANCE`]; value evaluated at the clamp distance.
    Clamped(f64),
    Inside,
}

impl CasimirPolder {
    pub fn energy(self) -> f64 {
        match self {
            CasimirPolder::Free(u) | CasimirPolder::Clamped(u) => u,
            CasimirPolder::Inside => 0.0,
        }
    }

    pub fn masked(self) -> bool {
        !matches!(self, CasimirPolder::Free(_))
    }
}

/// `U = -C3 / d^3`, attractive toward the surface.
pub fn cp_potential(surface: &Surface, c3: f64, point: [f64; 3]) -> CasimirPolder {
    let d = surface.signed_distance(point);
    if d <= 0.0 {
        CasimirPolder::Inside
    } else if d < CLAMP_DISTANCE {
        CasimirPolder::Clamped(-c3 / CLAMP_DISTANCE.powi(3))
    } else {
        CasimirPolder::Free(-c3 / (d * d * d))
    }
}

/// `C3 = hbar / (16 pi^2 eps0) int_0^inf alpha(i xi) (eps(i xi) - 1)/(eps(i xi) + 1) d xi`
/// for an arbitrary imaginary-axis polarizability (SI units, J m^3).
pub fn c3_from_polarizability<F: Fn(f64) -> f64>(alpha: F, material: &Material, scale: f64) -> Result<f64> {
    if material.is_vacuum() {
        return Ok(0.0);
    }
    let integral = integrate_semi_infinite(
        |xi| {
            let eps = material.permittivity_imaginary(xi);
            alpha(xi) * (eps - 1.0) / (eps + 1.0)
        },
        scale,
        1e-9,
    )?;
    Ok(HBAR / (16.0 * std::f64::consts::PI.powi(2) * EPSILON_0) * integral)
}

/// C3 coefficient of a fine-structure level facing a flat surface of `material`.
pub fn c3_coefficient(system: &AtomicSystem, level: usize, material: &Material) -> Result<f64> {
    let scale = system
        .couplings(level)
        .iter()
        .map(|c| c.omega.abs())
        .fold(f64::INFINITY, f64::min);
    let scale = if scale.is_finite() { scale } else { 1e15 };
    c3_from_polarizability(|xi| polarizability_imaginary_axis(system, level, xi), material, scale)
}
