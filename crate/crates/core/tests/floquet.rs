//! Exact one-period propagation against the effective model.

mod common;

use std::f64::consts::FRAC_PI_2;

use fcf_core::drive::{build_family_drive, fourier_components};
use fcf_core::effective::{derive_rates, DEFAULT_ISO_TOL};
use fcf_core::optimizer::{drive_from_parameters, maximize, OptimizationProblem};
use fcf_core::validate::*;
use fcf_core::{DriveFamily, DriveSpec, Error, LatticeGeometry, PropagatorSettings};
use num_complex::Complex64;
use rand::Rng;

fn settings(steps: usize) -> PropagatorSettings {
    PropagatorSettings::new(steps, false).unwrap()
}

fn plus(amps: &[f64], phases: &[f64], omega: f64) -> DriveSpec {
    build_family_drive(DriveFamily::Plus, omega, amps, phases).unwrap()
}

#[test]
fn settings_require_power_of_two() {
    assert!(PropagatorSettings::new(4096, true).is_ok());
    assert!(PropagatorSettings::new(128, false).is_err());
    assert!(PropagatorSettings::new(1000, false).is_err());
}

#[test]
fn undriven_hamiltonian_limits() {
    let geom = LatticeGeometry::unit();
    let spec = DriveSpec::undriven(10.0).unwrap();
    let h = bloch_hamiltonian_t(&spec, &geom, 1.0, 0.0, [0.0, 0.0], 0.3).unwrap();
    assert!((h[0][1].norm() - 3.0).abs() < 1e-14);
    let k = geom.momentum(1.0 / 3.0, 1.0 / 3.0);
    let h = bloch_hamiltonian_t(&spec, &geom, 1.0, 0.2, k, 0.3).unwrap();
    assert!(h[0][1].norm() < 1e-14);
    assert!((h[0][0].re - 0.2).abs() < 1e-15 && (h[1][1].re + 0.2).abs() < 1e-15);
}

#[test]
fn undriven_propagator_is_exact_exponential() {
    let geom = LatticeGeometry::unit();
    let spec = DriveSpec::undriven(10.0).unwrap();
    for &(x1, x2) in &[(0.1, 0.7), (0.33, 0.2), (0.0, 0.0)] {
        let k = geom.momentum(x1, x2);
        let u = period_propagator(&spec, &geom, 1.0, 0.3, k, &settings(4096)).unwrap();
        let h = bloch_hamiltonian_t(&spec, &geom, 1.0, 0.3, k, 0.0).unwrap();
        let hv = [0.0, h[1][0].re, h[1][0].im, h[0][0].re];
        assert!(max_entry_diff(&u, &pauli_exp(hv, spec.period())) < 1e-10);
    }
}

#[test]
fn unitarity_and_inverse() {
    let geom = LatticeGeometry::unit();
    let spec = plus(&[1.2, 0.8], &[0.0, 0.7], 20.0);
    let mid = MidpointRates::new(&spec, &geom, 1.0, 4096).unwrap();
    let mut rng = common::rng(4);
    for _ in 0..10 {
        let (x1, x2) = (rng.gen::<f64>(), rng.gen::<f64>());
        let u = mid.propagate(0.1, x1, x2);
        assert!(unitarity_defect(&u) < 1e-10);
        let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
        assert!((det.norm() - 1.0).abs() < 1e-10);
        let back = mid.propagate_reversed(0.1, x1, x2);
        assert!(max_entry_diff(&mat_mul(&back, &u), &identity()) < 1e-9);
    }
}

#[test]
fn integrator_is_second_order() {
    let geom = LatticeGeometry::unit();
    let spec = plus(&[1.5, 0.9], &[0.0, 1.1], 5.0);
    let (x1, x2) = (0.21, 0.47);
    let reference = MidpointRates::new(&spec, &geom, 1.0, 4096).unwrap().propagate(0.2, x1, x2);
    let err = |steps| {
        let u = MidpointRates::new(&spec, &geom, 1.0, steps).unwrap().propagate(0.2, x1, x2);
        max_entry_diff(&u, &reference)
    };
    // Reference is at least 4× finer than both runs.
    let (coarse, fine) = (err(256), err(512));
    let order = coarse / fine;
    assert!((3.0..=5.0).contains(&order), "error ratio {order}");
}

#[test]
fn richardson_check_flags_coarse_steps() {
    let geom = LatticeGeometry::unit();
    let spec = plus(&[3.0], &[0.0], 0.5);
    let k = geom.momentum(0.1, 0.2);
    let err = period_propagator(&spec, &geom, 1.0, 0.0, k, &PropagatorSettings::new(256, true).unwrap());
    assert!(matches!(err, Err(Error::NotConverged { .. })));
    assert!(period_propagator(&spec.with_omega(50.0).unwrap(), &geom, 1.0, 0.0, k, &PropagatorSettings::new(4096, true).unwrap()).is_ok());
}

#[test]
fn undriven_comparison_is_exact() {
    let geom = LatticeGeometry::unit();
    let report = compare_effective(&DriveSpec::undriven(50.0).unwrap(), &geom, 1.0, 0.2, 12, &settings(4096)).unwrap();
    assert!(report.max_deviation < 1e-10);
    assert!(report.max_unitarity_defect < 1e-10);
}

#[test]
fn monochromatic_deviation_and_scaling() {
    let geom = LatticeGeometry::unit();
    let spec = plus(&[1.5], &[0.0], 50.0);
    let report = compare_effective(&spec, &geom, 1.0, 0.0, 24, &settings(4096)).unwrap();
    assert!(report.max_deviation <= 5e-3, "{}", report.max_deviation);
    assert_eq!(report.points.len(), 576);
    let csv = report.to_csv();
    assert!(csv.starts_with("kx,ky,eps_exact_lo,eps_exact_hi,eps_eff_lo,eps_eff_hi,deviation,pairing_flag\n"));
    assert_eq!(csv.lines().count(), 577);

    let scaling = deviation_scaling(&spec, &geom, 1.0, 0.0, 12, &[25.0, 50.0, 100.0, 200.0], &settings(4096)).unwrap();
    for r in &scaling.ratios {
        assert!((r - 4.0).abs() <= 1.2, "ratio {r}");
    }
}

#[test]
fn gauge_phase_leaves_quasienergies_unchanged() {
    let geom = LatticeGeometry::unit();
    let spec = plus(&[1.2, 0.8], &[0.0, 0.7], 30.0);
    let mid = MidpointRates::new(&spec, &geom, 1.0, 1024).unwrap();
    let rates = derive_rates(&fourier_components(&spec, &geom, 1.0, None).unwrap(), DEFAULT_ISO_TOL).unwrap();
    let alpha = Complex64::cis(0.83);
    let rotated = MidpointRates { period: mid.period, rates: mid.rates.iter().map(|g| g.map(|z| z * alpha)).collect() };
    let mut rotated_rates = rates.clone();
    rotated_rates.g0 = rates.g0.map(|z| z * alpha);
    let mut rng = common::rng(9);
    for _ in 0..8 {
        let (x1, x2) = (rng.gen::<f64>(), rng.gen::<f64>());
        let a = floquet_pair(&mid.propagate(0.1, x1, x2), mid.period);
        let b = floquet_pair(&rotated.propagate(0.1, x1, x2), mid.period);
        let (mut ea, mut eb) = ([a.eps_plus, a.eps_minus], [b.eps_plus, b.eps_minus]);
        ea.sort_by(f64::total_cmp);
        eb.sort_by(f64::total_cmp);
        assert!((ea[0] - eb[0]).abs() < 1e-12 && (ea[1] - eb[1]).abs() < 1e-12);
        let (ha, hb) = (effective_h(&rates, 0.1, x1, x2), effective_h(&rotated_rates, 0.1, x1, x2));
        let norm = |h: [f64; 4]| (h[1] * h[1] + h[2] * h[2] + h[3] * h[3]).sqrt();
        assert!((norm(ha) - norm(hb)).abs() < 1e-12);
    }
}

#[test]
fn time_average_reproduces_zeroth_order() {
    let geom = LatticeGeometry::unit();
    let spec = plus(&[1.7, 0.6], &[0.0, -0.4], 3.0);
    let mut rates = derive_rates(&fourier_components(&spec, &geom, 1.0, None).unwrap(), DEFAULT_ISO_TOL).unwrap();
    rates.tau = [Complex64::new(0.0, 0.0); 3];
    rates.delta_shift = 0.0;
    let mut rng = common::rng(12);
    let samples = 2048;
    for _ in 0..10 {
        let (x1, x2) = (rng.gen::<f64>(), rng.gen::<f64>());
        let k = geom.momentum(x1, x2);
        let mut avg = [[Complex64::new(0.0, 0.0); 2]; 2];
        for s in 0..samples {
            let t = spec.period() * s as f64 / samples as f64;
            let h = bloch_hamiltonian_t(&spec, &geom, 1.0, 0.25, k, t).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    avg[i][j] += h[i][j] / samples as f64;
                }
            }
        }
        let h0 = pauli_matrix(effective_h(&rates, 0.25, x1, x2));
        assert!(max_entry_diff(&avg, &h0) < 1e-10);
    }
}

#[test]
fn stroboscopic_error_grows_at_most_linearly() {
    let geom = LatticeGeometry::unit();
    let spec = plus(&[1.2, 0.8], &[0.0, 0.7], 50.0);
    for &(x1, x2) in &[(0.1, 0.3), (0.4, 0.45), (0.7, 0.05)] {
        let devs = stroboscopic_deviation(&spec, &geom, 1.0, 0.0, geom.momentum(x1, x2), 50, &settings(4096)).unwrap();
        let single = devs[0];
        for (m, d) in devs.iter().enumerate() {
            assert!(*d <= 1.5 * single * (m + 1) as f64 + 1e-12, "m = {}: {d} vs {single}", m + 1);
        }
    }
}

#[test]
fn floquet_chern_matches_effective_and_flips_under_mirror() {
    let geom = LatticeGeometry::unit();
    let s = settings(1024);
    let spec = plus(&[1.5], &[0.0], 50.0);
    assert_eq!(floquet_chern(&spec, &geom, 1.0, 0.0, 24, &s).unwrap(), 1);
    assert_eq!(effective_chern(&spec, &geom, 1.0, 0.0, 24).unwrap(), 1);
    let mirror = build_family_drive(DriveFamily::Minus, 50.0, &[1.5], &[0.0]).unwrap();
    assert_eq!(floquet_chern(&mirror, &geom, 1.0, 0.0, 24, &s).unwrap(), -1);
    // A large offset keeps the bands trivial.
    assert_eq!(floquet_chern(&DriveSpec::undriven(50.0).unwrap(), &geom, 1.0, 0.5, 24, &s).unwrap(), 0);
    assert_eq!(floquet_chern(&spec, &geom, 1.0, 1.0, 24, &s).unwrap(), 0);
    assert_eq!(effective_chern(&spec, &geom, 1.0, 1.0, 24).unwrap(), 0);
}

#[test]
fn optimized_drive_is_topological_in_both_pictures() {
    let problem = OptimizationProblem { n_starts: 8, ..OptimizationProblem::new(DriveFamily::Plus, 2, FRAC_PI_2, 0.5) };
    let res = maximize(&problem).unwrap();
    assert!(res.feasible);
    let spec = drive_from_parameters(DriveFamily::Plus, 2, &res.p_star, 50.0).unwrap();
    let geom = LatticeGeometry::unit();
    assert_eq!(floquet_chern(&spec, &geom, 1.0, 0.0, 24, &settings(1024)).unwrap(), 1);
    assert_eq!(effective_chern(&spec, &geom, 1.0, 0.0, 24).unwrap(), 1);
}

#[test]
fn folding_range() {
    let w = 3.0;
    for e in [-10.0, -1.5, -1.4999, 0.0, 1.5, 7.1] {
        let f = fold(e, w);
        assert!(f > -w / 2.0 - 1e-12 && f <= w / 2.0 + 1e-12);
        let k = (e - f) / w;
        assert!((k - k.round()).abs() < 1e-9);
    }
}
