//! Method-of-moments solver for plane-wave scattering by closed perfectly
//! conducting bodies, with RWG discretizations of the EFIE, MFIE, CFIE and
//! combined-source equations and a weak-form identity operator for the MFIE.
//!
//! Time dependence is `e^{jωt}` throughout and `G = e^{−jkR} / (4πR)`.

pub mod error;
pub mod excitation;
pub mod formulations;
pub mod linalg;
pub mod mesh;
pub mod mie;
pub mod operators;
pub mod postproc;
pub mod quadrature;
pub mod rwg;
pub mod solvers;
pub mod study;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);
/// Free-space wave impedance (Ω).
pub const Z0: f64 = MU0 * C0;

/// Free-space wavenumber at `frequency` (Hz).
pub fn wavenumber(frequency: f64) -> f64 {
    2.0 * std::f64::consts::PI * frequency / C0
}
