//! Shared fixtures for the criterion benchmarks.

use fcf_core::drive::build_family_drive;
use fcf_core::{DriveFamily, DriveSpec};

/// Bichromatic plus-family drive at `ω = 50 j0`, typical of an optimum.
pub fn reference_drive() -> DriveSpec {
    build_family_drive(DriveFamily::Plus, 50.0, &[1.87, 1.71], &[0.0, 1.5708]).expect("valid drive")
}

/// Optimizer parameter vector `[A1/ω, A2/ω, δ2]` matching [`reference_drive`].
pub const REFERENCE_PARAMETERS: [f64; 3] = [1.87, 1.71, 1.5708];
