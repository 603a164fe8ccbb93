//! Physical constants (CODATA 2018, SI).

pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const MU_0: f64 = 1.256_637_062_12e-6;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Electron spin g-factor magnitude.
pub const G_S: f64 = 2.002_319_304_362_56;

/// Atomic unit of electric polarizability, C^2 m^2 / J.
pub const AU_POLARIZABILITY: f64 = 1.648_777_274_36e-41;
/// Atomic unit of dipole moment (e a0), C m.
pub const AU_DIPOLE: f64 = ELEMENTARY_CHARGE * BOHR_RADIUS;

/// Converts an energy in joules to millikelvin.
pub fn joule_to_mk(energy: f64) -> f64 {
    energy / BOLTZMANN * 1e3
}

pub fn mk_to_joule(temperature_mk: f64) -> f64 {
    temperature_mk * 1e-3 * BOLTZMANN
}

/// Angular frequency of light with the given vacuum wavelength.
pub fn wavelength_to_omega(wavelength: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength
}
