//! Optical dipole trap potentials for multilevel alkali atoms.
//!
//! The crate covers the full pipeline from spectroscopic data to trap
//! characterization:
//!
//! - [`atom`]: atomic data files, hyperfine levels and F-reduced dipole elements
//! - [`angular`]: half-integer arithmetic and Wigner 6-j symbols
//! - [`polarizability`]: scalar, vector and tensor dynamic polarizabilities
//! - [`fields`]: field maps, the analytic nanofiber mode solver, beams and beam pairs
//! - [`surfaces`]: dielectric models, C3 coefficients and Casimir-Polder potentials
//! - [`engine`]: Zeeman-manifold Stark Hamiltonians, diagonalization and trap properties
//! - [`optimizer`]: exhaustive power scans
//! - [`config`] and [`cache`]: simulation documents and the content-addressed result cache

pub mod angular;
pub mod atom;
pub mod cache;
pub mod config;
pub mod constants;
pub mod engine;
mod error;
pub mod fields;
pub mod optimizer;
pub mod polarizability;
mod quadrature;
pub mod surfaces;

pub use angular::{wigner6j, HalfInt};
pub use atom::{AtomicSystem, Level, StateSpec, Transition};
pub use engine::{
    compute_trap, eigenstate_decomposition, stark_hamiltonian, trap_properties, TrapModel,
    TrapOptions, TrapProperties, TrapResult, ZeemanHamiltonian,
};
pub use error::{Error, ErrorKind, Result};
pub use fields::{Beam, BeamPair, FieldMap, GridAxes, TrapConfig, TrapEntry};
pub use polarizability::PolarizabilitySet;
pub use surfaces::{Material, Surface};
