//! Effective Hamiltonians for hexagonal optical lattices shaken by
//! polychromatic forces.
//!
//! The pipeline runs in five stages:
//!
//! - [`drive`]: lattice geometry, periodic forces and the Fourier spectrum of
//!   the Peierls-phased tunneling rates.
//! - [`effective`]: averaged nearest-neighbor rates and the first-order
//!   commutator terms that generate next-nearest-neighbor tunneling.
//! - [`bloch`]: two-band Bloch Hamiltonians, gaps, plaquette Chern numbers and
//!   the phase diagram.
//! - [`optimizer`]: constrained multistart search over drive parameters.
//! - [`validate`]: exact one-period propagation and comparison against the
//!   truncated effective model.
//!
//! Units: ħ = 1 and the nearest-neighbor distance is 1 unless a geometry with
//! another spacing is built explicitly. Drive amplitudes are given in units of
//! ω/a.

pub mod bloch;
pub mod drive;
pub mod effective;
mod error;
pub mod optimizer;
pub mod validate;


pub use bloch::{BlochModel, ChernDiagram, ModelKind};
pub use drive::{DriveFamily, DriveSpec, Harmonic, LatticeGeometry, TunnelingSpectrum};
pub use effective::EffectiveRates;
pub use optimizer::{OptimizationProblem, OptimizationResult};
pub use validate::{PropagatorSettings, QuasienergyReport};
pub use error::{Error, Result};



pub use num_complex::Complex64;

/// Cartesian 2-vector.
pub type Vec2 = [f64; 2];

#[inline]
pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}
