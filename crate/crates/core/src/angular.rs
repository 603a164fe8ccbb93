//! Half-integer angular momenta and Wigner 6-j symbols.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// A non-negative or negative half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    /// Parses a floating value that must lie on the half-integer lattice.
    pub fn try_from_f64(value: f64) -> Result<Self> {
        let twice = 2.0 * value;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::AngularMomentum(format!(
                "{value} is not a half-integer"
            )));
        }
        Ok(HalfInt(twice.round() as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// Number of magnetic sublevels, 2j + 1.
    pub fn multiplicity(self) -> usize {
        (self.0 + 1).max(0) as usize
    }

    /// Magnetic quantum numbers -j, -j+1, ..., j.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        (-self.0..=self.0).step_by(2).map(HalfInt)
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// (-1)^k for an integer-valued half-integer.
pub(crate) fn parity_sign(exponent: HalfInt) -> f64 {
    debug_assert!(exponent.is_integer());
    if (exponent.twice() / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// True when (a, b, c) satisfy the triangle rule and a + b + c is an integer.
pub fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    (a + b + c) % 2 == 0 && c >= (a - b).abs() && c <= a + b
}

fn factorial(n: i32) -> BigInt {
    (1..=n.max(0)).fold(BigInt::one(), |acc, k| acc * k)
}

/// Squared triangle coefficient (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!.
fn triangle_coefficient_sq(a: i32, b: i32, c: i32) -> BigRational {
    // arguments are doubled values
    let num = factorial((a + b - c) / 2) * factorial((a - b + c) / 2) * factorial((-a + b + c) / 2);
    let den = factorial((a + b + c) / 2 + 1);
    BigRational::new(num, den)
}

/// Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}.
///
/// Evaluated with the Racah single-sum formula in exact rational arithmetic;
/// only the final square root is taken in floating point. Returns exactly
/// zero when any of the four triads fails the triangle rule.
pub fn wigner6j(j: [HalfInt; 6]) -> Result<f64> {
    if let Some(neg) = j.iter().find(|v| v.is_negative()) {
        return Err(Error::AngularMomentum(format!(
            "negative argument {neg} to 6-j symbol"
        )));
    }
    let [j1, j2, j3, j4, j5, j6] = j;
    if !(triangle(j1, j2, j3) && triangle(j1, j5, j6) && triangle(j4, j2, j6) && triangle(j4, j5, j3))
    {
        return Ok(0.0);
    }
    let [a, b, c, d, e, f] = j.map(HalfInt::twice);

    let alpha = [
        (a + b + c) / 2,
        (a + e + f) / 2,
        (d + b + f) / 2,
        (d + e + c) / 2,
    ];
    let beta = [(a + b + d + e) / 2, (b + c + e + f) / 2, (c + a + f + d) / 2];
    let t_min = *alpha.iter().max().unwrap();
    let t_max = *beta.iter().min().unwrap();

    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let mut den = BigInt::one();
        for al in alpha {
            den *= factorial(t - al);
        }
        for be in beta {
            den *= factorial(be - t);
        }
        let term = BigRational::new(factorial(t + 1), den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return Ok(0.0);
    }
    let prefactor = triangle_coefficient_sq(a, b, c)
        * triangle_coefficient_sq(a, e, f)
        * triangle_coefficient_sq(d, b, f)
        * triangle_coefficient_sq(d, e, c);
    let magnitude_sq = &sum * &sum * prefactor;
    let magnitude = magnitude_sq
        .to_f64()
        .ok_or_else(|| Error::AngularMomentum("6-j symbol out of floating range".into()))?
        .sqrt();
    Ok(if sum.is_negative() { -magnitude } else { magnitude })
}

/// Convenience form of [`wigner6j`] taking floating arguments.
pub fn wigner6j_f64(j: [f64; 6]) -> Result<f64> {
    let mut args = [HalfInt::ZERO; 6];
    for (slot, value) in args.iter_mut().zip(j) {
        *slot = HalfInt::try_from_f64(value)?;
    }
    wigner6j(args)
}
