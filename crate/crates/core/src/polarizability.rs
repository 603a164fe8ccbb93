//! Dynamic scalar, vector and tensor polarizabilities of hyperfine levels.
//!
//! Normalization: the three coefficients are defined so that the light shift
//! of `|F, m_F>` in a field with positive-frequency amplitude `E+` reads
//!
//! ```text
//! dE = -a0 |E+|^2 - a1 (i E- x E+)_z m_F / F
//!      - a2 (3|E+_z|^2 - |E+|^2)/2 * (3 m_F^2 - F(F+1)) / (F(2F-1))
//! ```
//!
//! with `E(t) = E+ exp(-i w t) + c.c.`. The vector coefficient therefore
//! carries twice the prefactor of the commonly printed closed form, and
//! the tensor sum uses the rank-2 recoupling symbol `{1 1 2; F F F'}`. Both
//! are pinned by the Kramers-Heisenberg oracle tests.

use num_complex::Complex64;

use crate::angular::{parity_sign, wigner6j, HalfInt};
use crate::atom::{reduce_to_f, AtomicSystem};
use crate::constants::{BOHR_MAGNETON, HBAR};
use crate::{Error, Result};

/// Default minimum detuning from any hyperfine-resolved resonance, rad/s.
pub const DEFAULT_GUARD_BAND: f64 = 2.0 * std::f64::consts::PI * 10e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizabilitySet {
    /// Scalar polarizability, C^2 m^2 / J.
    pub scalar: f64,
    pub vector: f64,
    pub tensor: f64,
    pub f: HalfInt,
    /// Angular frequency of the light, rad/s.
    pub omega: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PolarizabilityOptions {
    pub guard_band: f64,
}

impl Default for PolarizabilityOptions {
    fn default() -> Self {
        PolarizabilityOptions {
            guard_band: DEFAULT_GUARD_BAND,
        }
    }
}

/// One hyperfine-resolved term of the sum over states.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HyperfineTerm {
    pub fp: HalfInt,
    /// Signed `w_FF'`.
    pub omega: f64,
    /// `|<F||d||F'>|^2`.
    pub dipole_sq: f64,
}

pub(crate) fn hyperfine_terms(
    system: &AtomicSystem,
    level: usize,
    f: HalfInt,
) -> Result<Vec<HyperfineTerm>> {
    system.check_f(level, f)?;
    let couplings = system.couplings(level);
    if couplings.is_empty() {
        return Err(Error::AtomicData(format!(
            "level {} has no transitions",
            system.levels[level]
        )));
    }
    let j = system.levels[level].j;
    let mut terms = Vec::new();
    for c in couplings {
        let jp = system.levels[c.other].j;
        for fp in system.hyperfine_levels(c.other)? {
            let d = reduce_to_f(c.reduced_dipole, j, jp, f, fp, system.nuclear_spin)?;
            if d == 0.0 {
                continue;
            }
            terms.push(HyperfineTerm {
                fp,
                omega: system.omega_ff(level, f, c.other, fp),
                dipole_sq: d * d,
            });
        }
    }
    Ok(terms)
}

/// Scalar, vector and tensor polarizabilities of level `level`, sublevel F,
/// at angular frequency `omega`.
pub fn polarizabilities(
    system: &AtomicSystem,
    level: usize,
    f: HalfInt,
    omega: f64,
    options: PolarizabilityOptions,
) -> Result<PolarizabilitySet> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "angular frequency must be non-negative, got {omega}"
        )));
    }
    let terms = hyperfine_terms(system, level, f)?;
    for t in &terms {
        if (omega - t.omega.abs()).abs() < options.guard_band {
            return Err(Error::Resonance(format!(
                "light at {:.6e} rad/s is within {:.3} GHz of the {} (F={}) -> F'={} resonance",
                omega,
                (omega - t.omega.abs()).abs() / (2.0 * std::f64::consts::PI) / 1e9,
                system.levels[level],
                f,
                t.fp
            )));
        }
    }

    let fv = f.value();
    let j = system.levels[level].j;
    let mut scalar = 0.0;
    let mut vector = 0.0;
    let mut tensor = 0.0;

    let vector_prefactor = if fv > 0.0 {
        2.0 * (3.0 * fv * (2.0 * fv + 1.0) / (2.0 * (fv + 1.0))).sqrt()
    } else {
        0.0
    };
    // The tensor part of a J <= 1/2 level vanishes identically.
    let tensor_prefactor = if fv >= 1.0 && j.twice() >= 2 {
        (40.0 * fv * (2.0 * fv + 1.0) * (2.0 * fv - 1.0) / (3.0 * (fv + 1.0) * (2.0 * fv + 3.0)))
            .sqrt()
    } else {
        0.0
    };

    for t in &terms {
        let denom = HBAR * (t.omega * t.omega - omega * omega);
        scalar += 2.0 * t.omega * t.dipole_sq / (3.0 * denom);
        let sign = parity_sign(f + t.fp);
        if vector_prefactor != 0.0 {
            let sixj = wigner6j([HalfInt::ONE, HalfInt::ONE, HalfInt::ONE, f, f, t.fp])?;
            vector += sign * vector_prefactor * sixj * omega * t.dipole_sq / denom;
        }
        if tensor_prefactor != 0.0 {
            let sixj = wigner6j([HalfInt::ONE, HalfInt::ONE, HalfInt::from_int(2), f, f, t.fp])?;
            tensor += sign * tensor_prefactor * sixj * t.omega * t.dipole_sq / denom;
        }
    }
    if let Some(core) = &system.core {
        scalar += core.at_real(omega);
    }

    Ok(PolarizabilitySet {
        scalar,
        vector,
        tensor,
        f,
        omega,
    })
}

/// Scalar polarizability of a fine-structure level at imaginary frequency
/// `i xi`, hyperfine structure unresolved.
pub fn polarizability_imaginary_axis(system: &AtomicSystem, level: usize, xi: f64) -> f64 {
    let lv = &system.levels[level];
    let mult = (lv.j.twice() + 1) as f64;
    let mut alpha: f64 = system
        .couplings(level)
        .iter()
        .map(|c| {
            2.0 * c.omega * c.reduced_dipole * c.reduced_dipole
                / (3.0 * mult * HBAR * (c.omega * c.omega + xi * xi))
        })
        .sum();
    if let Some(core) = &system.core {
        alpha += core.at_imaginary(xi);
    }
    alpha
}

/// Fictitious magnetic field equivalent to the vector light shift, T.
///
/// `B = a1 / (mu_B g_F F) * i (E- x E+)`.
pub fn fictitious_field(alpha1: f64, f: HalfInt, g_f: f64, e_plus: &[Complex64; 3]) -> Result<[f64; 3]> {
    if f.twice() == 0 {
        return Err(Error::AngularMomentum(
            "fictitious field undefined for F = 0".into(),
        ));
    }
    let v = ellipticity_vector(e_plus);
    let scale = alpha1 / (BOHR_MAGNETON * g_f * f.value());
    Ok(v.map(|c| c * scale))
}

/// The real vector `i (E- x E+)`, zero for linear polarization.
pub fn ellipticity_vector(e: &[Complex64; 3]) -> [f64; 3] {
    let c = [e[0].conj(), e[1].conj(), e[2].conj()];
    let cross = [
        c[1] * e[2] - c[2] * e[1],
        c[2] * e[0] - c[0] * e[2],
        c[0] * e[1] - c[1] * e[0],
    ];
    // conj(E) x E is purely imaginary
    cross.map(|z| -z.im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::StateSpec;
    use crate::constants::{wavelength_to_omega, AU_POLARIZABILITY};

    fn cs(f: f64) -> AtomicSystem {
        AtomicSystem::cesium(StateSpec::new(6, 0, 0.5, f).unwrap()).unwrap()
    }

    #[test]
    fn ground_tensor_vanishes() {
        let sys = cs(4.0);
        for lam in [1064e-9, 780e-9, 937e-9, 686e-9] {
            let p = polarizabilities(&sys, 0, HalfInt::from_int(4), wavelength_to_omega(lam), Default::default())
                .unwrap();
            assert_eq!(p.tensor, 0.0);
        }
    }

    #[test]
    fn static_vector_vanishes() {
        let sys = cs(4.0);
        let p = polarizabilities(&sys, 0, HalfInt::from_int(4), 0.0, Default::default()).unwrap();
        assert_eq!(p.vector, 0.0);
        assert!(p.scalar > 0.0);
    }

    #[test]
    fn scalar_is_f_independent_without_hyperfine_offsets() {
        let sys = cs(4.0).without_hyperfine_offsets();
        let w = wavelength_to_omega(1064e-9);
        let a4 = polarizabilities(&sys, 0, HalfInt::from_int(4), w, Default::default()).unwrap();
        let a3 = polarizabilities(&sys, 0, HalfInt::from_int(3), w, Default::default()).unwrap();
        assert!(((a4.scalar - a3.scalar) / a4.scalar).abs() < 1e-3);
    }

    #[test]
    fn resonance_guard() {
        let sys = cs(4.0);
        let d2 = sys.omega_ff(0, HalfInt::from_int(4), 2, HalfInt::from_int(5));
        let err = polarizabilities(&sys, 0, HalfInt::from_int(4), d2 + 1e9, Default::default()).unwrap_err();
        assert!(matches!(err, Error::Resonance(_)));
        // 130 GHz detuning stays usable
        let ok = polarizabilities(
            &sys,
            0,
            HalfInt::from_int(4),
            d2 + 2.0 * std::f64::consts::PI * 130e9,
            Default::default(),
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn imaginary_axis_is_positive_and_decreasing() {
        let sys = cs(4.0);
        let mut prev = polarizability_imaginary_axis(&sys, 0, 0.0);
        assert!(prev > 300.0 * AU_POLARIZABILITY);
        for k in 0..60 {
            let xi = 1e12 * 1.3f64.powi(k);
            let a = polarizability_imaginary_axis(&sys, 0, xi);
            assert!(a > 0.0 && a < prev);
            prev = a;
        }
    }

    #[test]
    fn fictitious_field_linear_is_zero() {
        let e = [Complex64::new(3.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(fictitious_field(1e-39, HalfInt::from_int(4), 0.25, &e).unwrap(), [0.0; 3]);
        assert!(fictitious_field(1e-39, HalfInt::ZERO, 0.25, &e).is_err());
    }
}
