//! Independent reference computations shared by the test targets: Wigner
//! symbols from factorial sums, light shifts by direct second-order
//! perturbation theory in the uncoupled |J mJ> |I mI> basis, and C3
//! coefficients by brute-force quadrature of the raw data files.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use evatrap::constants::{AU_POLARIZABILITY, EPSILON_0, HBAR};
use evatrap::{AtomicSystem, HalfInt};

pub fn fact(n: i64) -> f64 {
    assert!(n >= 0);
    (1..=n).map(|k| k as f64).product()
}

/// Racah's formula; arguments are doubled quantum numbers.
pub fn three_j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j3 + m3) % 2 != 0 {
        return 0.0;
    }
    if j3 > j1 + j2 || j3 < (j1 - j2).abs() || (j1 + j2 + j3) % 2 != 0 {
        return 0.0;
    }
    let h = |x: i64| x / 2;
    let tri = fact(h(j1 + j2 - j3)) * fact(h(j1 - j2 + j3)) * fact(h(-j1 + j2 + j3)) / fact(h(j1 + j2 + j3) + 1);
    let pre = (tri
        * fact(h(j1 + m1))
        * fact(h(j1 - m1))
        * fact(h(j2 + m2))
        * fact(h(j2 - m2))
        * fact(h(j3 + m3))
        * fact(h(j3 - m3)))
    .sqrt();
    let mut sum = 0.0;
    for k in 0..=200 {
        let terms = [
            h(j1 + j2 - j3) - k,
            h(j1 - m1) - k,
            h(j2 + m2) - k,
            h(j3 - j2 + m1) + k,
            h(j3 - j1 - m2) + k,
        ];
        if terms[..3].iter().any(|&t| t < 0) {
            break;
        }
        if terms[3..].iter().any(|&t| t < 0) {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / (fact(k) * terms.iter().map(|&t| fact(t)).product::<f64>());
    }
    let phase = if h(j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * pre * sum
}

/// `<j1 m1 j2 m2 | J M>`, doubled arguments.
pub fn clebsch(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    let phase = if ((j1 - j2 + m) / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * ((j + 1) as f64).sqrt() * three_j(j1, j2, j, m1, m2, -m)
}

/// 6-j symbol as a contraction of four 3-j symbols over all projections.
pub fn six_j_from_three_j(j: [i64; 6]) -> f64 {
    let [j1, j2, j3, j4, j5, j6] = j;
    let range = |x: i64| (-x..=x).step_by(2);
    let mut sum = 0.0;
    for m1 in range(j1) {
        for m2 in range(j2) {
            let m3 = -m1 - m2;
            for m5 in range(j5) {
                let m6 = m5 - m1;
                let m4 = m6 - m2;
                if m3.abs() > j3 || m4.abs() > j4 || m6.abs() > j6 || m5 + m3 != m4 {
                    continue;
                }
                let s = (j1 - m1 + j2 - m2 + j3 - m3 + j4 - m4 + j5 - m5 + j6 - m6) / 2;
                let phase = if s.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                sum += phase
                    * three_j(j1, j2, j3, -m1, -m2, -m3)
                    * three_j(j1, j5, j6, m1, -m5, m6)
                    * three_j(j4, j2, j6, m4, m2, -m6)
                    * three_j(j4, j5, j3, -m4, m5, m3);
            }
        }
    }
    sum
}

pub fn triangle(a: i64, b: i64, c: i64) -> bool {
    c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

pub fn valid_six_j(j: [i64; 6]) -> bool {
    triangle(j[0], j[1], j[2]) && triangle(j[0], j[4], j[5]) && triangle(j[3], j[1], j[5]) && triangle(j[3], j[4], j[2])
}

pub fn h6(j: [i64; 6]) -> [HalfInt; 6] {
    j.map(|t| HalfInt::from_twice(t as i32))
}

/// `<F m|` basis vectors in the uncoupled space `(2J+1)(2I+1)`, index
/// `iJ * (2I+1) + iI` with projections ascending.
pub fn coupled_basis(j: i64, i: i64, f: i64) -> Vec<Vec<f64>> {
    let nj = (j + 1) as usize;
    let ni = (i + 1) as usize;
    (-f..=f)
        .step_by(2)
        .map(|m| {
            let mut v = vec![0.0; nj * ni];
            for (a, mj) in (-j..=j).step_by(2).enumerate() {
                for (b, mi) in (-i..=i).step_by(2).enumerate() {
                    if mj + mi == m {
                        v[a * ni + b] = clebsch(j, mj, i, mi, f, m);
                    }
                }
            }
            v
        })
        .collect()
}

/// Cartesian dipole matrices between the J and J' uncoupled spaces.
pub fn dipole_cartesian(j: i64, jp: i64, i: i64, reduced: f64) -> [DMatrix<C>; 3] {
    let nj = (j + 1) as usize;
    let njp = (jp + 1) as usize;
    let ni = (i + 1) as usize;
    let spherical = |q: i64| {
        let mut m = DMatrix::<C>::zeros(nj * ni, njp * ni);
        for (a, mj) in (-j..=j).step_by(2).enumerate() {
            for (b, mjp) in (-jp..=jp).step_by(2).enumerate() {
                let phase = if ((j - mj) / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let el = phase * three_j(j, 2, jp, -mj, 2 * q, mjp) * reduced;
                for k in 0..ni {
                    m[(a * ni + k, b * ni + k)] = C::new(el, 0.0);
                }
            }
        }
        m
    };
    let (dm, d0, dp) = (spherical(-1), spherical(0), spherical(1));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        (&dm - &dp) * C::new(s, 0.0),
        (&dm + &dp) * C::new(0.0, s),
        d0,
    ]
}

/// Second-order light-shift operator of the manifold (level, F), summed
/// over every hyperfine sublevel of every coupled level.
pub fn kramers_heisenberg(system: &AtomicSystem, level: usize, f: i64, omega: f64, e: [C; 3]) -> DMatrix<C> {
    let i2 = system.nuclear_spin.twice() as i64;
    let j2 = system.levels[level].j.twice() as i64;
    let basis = coupled_basis(j2, i2, f);
    let dim = basis.len();
    let mut h = DMatrix::<C>::zeros(dim, dim);
    for c in system.couplings(level) {
        let jp2 = system.levels[c.other].j.twice() as i64;
        let d = dipole_cartesian(j2, jp2, i2, c.reduced_dipole);
        let e_plus_d = &d[0] * e[0] + &d[1] * e[1] + &d[2] * e[2];
        let e_minus_d = &d[0] * e[0].conj() + &d[1] * e[1].conj() + &d[2] * e[2].conj();
        for fp in ((jp2 - i2).abs()..=jp2 + i2).step_by(2) {
            let inter = coupled_basis(jp2, i2, fp);
            let w = system.omega_ff(level, HalfInt::from_twice(f as i32), c.other, HalfInt::from_twice(fp as i32));
            let project = |op: &DMatrix<C>| {
                DMatrix::<C>::from_fn(dim, inter.len(), |r, k| {
                    let mut acc = C::new(0.0, 0.0);
                    for (x, bx) in basis[r].iter().enumerate() {
                        if *bx == 0.0 {
                            continue;
                        }
                        for (y, by) in inter[k].iter().enumerate() {
                            if *by != 0.0 {
                                acc += op[(x, y)] * (bx * by);
                            }
                        }
                    }
                    acc
                })
            };
            // <m| E.d |k> for E+ and E-
            let a_plus = project(&e_plus_d);
            let a_minus = project(&e_minus_d);
            // <k| E+.d |m'> = conj(<m'| E-.d |k>)
            let absorb = &a_minus * a_minus.adjoint();
            let emit = &a_plus * a_plus.adjoint();
            h -= absorb / C::new(HBAR * (w - omega), 0.0) + emit / C::new(HBAR * (w + omega), 0.0);
        }
    }
    if let Some(core) = &system.core {
        let intensity: f64 = e.iter().map(|c| c.norm_sqr()).sum();
        h -= DMatrix::<C>::identity(dim, dim) * C::new(core.at_real(omega) * intensity, 0.0);
    }
    h
}

pub fn sorted_eigenvalues(m: DMatrix<C>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n < 1.0 {
            return v.map(|c| c / n);
        }
    }
}

/// Ground-level polarizability at imaginary frequency straight from the
/// bundled data file, independent of the crate's atom model.
pub fn raw_ground_alpha() -> impl Fn(f64) -> f64 {
    let data: Value = serde_json::from_str(AtomicSystem::cesium_data()).unwrap();
    let levels = data["levels"].as_array().unwrap().clone();
    let energy = |i: usize| levels[i]["energy_Hz"].as_f64().unwrap();
    let lines: Vec<(f64, f64)> = data["transitions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|t| t["lower_index"].as_u64() == Some(0))
        .map(|t| {
            let up = t["upper_index"].as_u64().unwrap() as usize;
            let omega = 2.0 * std::f64::consts::PI * (energy(up) - energy(0));
            (omega, t["reduced_dipole_Cm"].as_f64().unwrap())
        })
        .collect();
    let core_static = data["core_polarizability_au"].as_f64().unwrap() * AU_POLARIZABILITY;
    let core_omega = 2.0 * std::f64::consts::PI * data["core_resonance_Hz"].as_f64().unwrap();
    move |xi: f64| {
        // J = 1/2: 2J + 1 = 2
        let valence: f64 = lines
            .iter()
            .map(|&(w, d)| 2.0 * w * d * d / (3.0 * 2.0 * HBAR * (w * w + xi * xi)))
            .sum();
        valence + core_static * core_omega * core_omega / (core_omega * core_omega + xi * xi)
    }
}

pub fn raw_permittivity(material: &str) -> impl Fn(f64) -> f64 {
    let text = std::fs::read_to_string(format!(
        "{}/data/materials/{material}.json",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let osc: Vec<(f64, f64, f64)> = v["oscillators"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| {
            (
                o["omega_rad_s"].as_f64().unwrap(),
                o["strength"].as_f64().unwrap(),
                o["gamma_rad_s"].as_f64().unwrap(),
            )
        })
        .collect();
    move |xi: f64| 1.0 + osc.iter().map(|&(w, s, g)| s * w * w / (w * w + xi * xi + g * xi)).sum::<f64>()
}

/// Trapezoid rule on 1e5 logarithmically spaced frequencies.
pub fn brute_force_c3(alpha: impl Fn(f64) -> f64, eps: impl Fn(f64) -> f64) -> f64 {
    let n = 100_000;
    let (lo, hi) = (1e8f64.ln(), 1e21f64.ln());
    let h = (hi - lo) / (n - 1) as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let xi = (lo + h * i as f64).exp();
        let e = eps(xi);
        // d xi = xi d(ln xi)
        let f = alpha(xi) * (e - 1.0) / (e + 1.0) * xi;
        sum += if i == 0 || i == n - 1 { 0.5 * f } else { f };
    }
    HBAR / (16.0 * std::f64::consts::PI.powi(2) * EPSILON_0) * sum * h
}

