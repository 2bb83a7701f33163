//! Multistart search: determinism, feasibility and phase-map contracts.

use std::f64::consts::{FRAC_PI_2, PI};

use fcf_core::bloch::Axis;
use fcf_core::optimizer::*;
use fcf_core::{wrap_angle, DriveFamily, Error};

fn small(family: DriveFamily, phi: f64, r_th: f64) -> OptimizationProblem {
    OptimizationProblem { n_starts: 8, ..OptimizationProblem::new(family, 2, phi, r_th) }
}

#[test]
fn results_do_not_depend_on_the_thread_count() {
    let problem = small(DriveFamily::Plus, 0.6, 0.25);
    let a = maximize(&problem).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = single.install(|| maximize(&problem)).unwrap();
    let quad = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let c = quad.install(|| maximize(&problem)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn seed_selects_the_start_schedule() {
    let a = start_points(&small(DriveFamily::Plus, 0.0, 0.25));
    let b = start_points(&OptimizationProblem { seed: 7, ..small(DriveFamily::Plus, 0.0, 0.25) });
    assert_ne!(a, b);
    assert_eq!(a, start_points(&small(DriveFamily::Plus, 0.0, 0.25)));
}

#[test]
fn reported_optimum_satisfies_the_constraints() {
    for (phi, r_th) in [(0.0, 0.5), (2.0, 0.25), (-1.2, 0.5)] {
        let problem = small(DriveFamily::Minus, phi, r_th);
        let res = maximize(&problem).unwrap();
        assert!(res.feasible, "φ = {phi}, r = {r_th}");
        let c = evaluate_candidate(DriveFamily::Minus, 2, &res.p_star).unwrap();
        assert!(wrap_angle(c.phi.unwrap() - phi).abs() <= problem.phi_tol);
        assert!(c.j1_over_j0 >= r_th - problem.feas_tol);
        assert_eq!(c.enhancement, res.r_value);
        assert!(res.amplitudes(2).iter().all(|&a| (0.0..=problem.amp_bound).contains(&a)));
        assert!(res.p_star[2].abs() <= FRAC_PI_2 + 1e-12);
        assert_eq!(res.best_per_start.len(), 8);
    }
}

#[test]
fn monochromatic_targets() {
    let problem = OptimizationProblem { n_starts: 4, ..OptimizationProblem::new(DriveFamily::Plus, 1, FRAC_PI_2, 0.5) };
    let res = maximize(&problem).unwrap();
    assert!(res.feasible);
    assert!((res.phi_achieved.unwrap() - FRAC_PI_2).abs() < 1e-3);
    // A single harmonic cannot reach a real NNN rate.
    let res = maximize(&OptimizationProblem { phi_target: 0.0, ..problem }).unwrap();
    assert!(!res.feasible);
    assert!(res.phi_residual > 1.0);
}

#[test]
fn unreachable_threshold_is_reported_not_hidden() {
    let res = maximize(&small(DriveFamily::Plus, 0.3, 1.0)).unwrap();
    assert!(!res.feasible);
    assert!(res.phi_residual > 1e-3 || res.threshold_residual > 0.0);
}

#[test]
fn multistart_beats_random_sampling() {
    let problem = small(DriveFamily::Plus, 1.0, 0.25);
    let best = maximize(&problem).unwrap();
    if let Some((r, _)) = random_search(&problem, 2000, 3).unwrap() {
        assert!(best.r_value >= r);
    }
}

#[test]
fn invalid_problems_are_rejected() {
    let bad = [
        OptimizationProblem { family: DriveFamily::Custom, ..small(DriveFamily::Plus, 0.0, 0.2) },
        small(DriveFamily::Plus, 0.0, 1.5),
        OptimizationProblem { n_starts: 0, ..small(DriveFamily::Plus, 0.0, 0.2) },
        OptimizationProblem { harmonics: 0, ..small(DriveFamily::Plus, 0.0, 0.2) },
        small(DriveFamily::Plus, f64::NAN, 0.2),
    ];
    for p in &bad {
        assert!(matches!(maximize(p), Err(Error::InvalidParameter(_))), "{p:?}");
    }
}

#[test]
fn sweep_table_layout() {
    let template = small(DriveFamily::Plus, 0.0, 0.0);
    let phis = [FRAC_PI_2, PI];
    let table = sweep_targets(&phis, &[0.25, 0.5], &[DriveFamily::Plus], &template, 0).unwrap();
    assert_eq!(table.rows.len(), 4);
    let csv = table.to_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "family,phi_target,r_th,R,re,im,A1,A2,delta2,j1_over_j0,feasible,starts_converged,discontinuity"
    );
    assert_eq!(lines.count(), 4);
    // Looser threshold, same target: never worse.
    for (loose, strict) in table.rows_for(DriveFamily::Plus, 0.25).iter().zip(table.rows_for(DriveFamily::Plus, 0.5)) {
        assert!(loose.result.r_value >= strict.result.r_value);
    }
    assert!(sweep_targets(&[], &[0.25], &[DriveFamily::Plus], &template, 0).is_err());
}

#[test]
fn jump_detection_ignores_smooth_branches() {
    let phis: Vec<f64> = (0..8).map(|i| 0.1 * i as f64).collect();
    let smooth: Vec<Vec<f64>> = phis.iter().map(|p| vec![1.0 + p, 0.5 - 0.3 * p, 0.2 + p]).collect();
    assert!(detect_jumps(2, &phis, &smooth).iter().all(|f| !f));
    let mut jumped = smooth.clone();
    for p in &mut jumped[5..] {
        p[0] += 1.5;
    }
    let flags = detect_jumps(2, &phis, &jumped);
    assert_eq!(flags.iter().filter(|&&f| f).count(), 1);
    assert!(flags[5]);
    // A vanishing harmonic's phase does not count.
    assert_eq!(parameter_distance(2, &[1.0, 0.0, 0.1], &[1.0, 0.0, 2.9]), 0.0);
}

#[test]
fn phase_map_contracts() {
    let one = Axis::stepped(1.0, 1.0, 0.1).unwrap();
    let map = phase_map(&one, &one, FRAC_PI_2).unwrap();
    assert_eq!(map.cells.len(), 1);
    assert_eq!(map.to_csv().lines().count(), 2);

    let axis = Axis::stepped(0.0, 3.5, 0.25).unwrap();
    let map = phase_map(&axis, &axis, 0.0).unwrap();
    for c in &map.cells {
        if let Some(phi) = c.phi {
            if c.enhancement > 1e-9 {
                assert!((phi.abs() - FRAC_PI_2).abs() < 1e-8, "φ = {phi} at ({}, {})", c.a1, c.a2);
            }
        }
    }
    // The A2 = 0 row is monochromatic.
    let map = phase_map(&axis, &axis, 0.9).unwrap();
    for i in 0..axis.len() {
        if let Some(phi) = map.cell(i, 0).phi {
            if map.cell(i, 0).enhancement > 1e-9 {
                assert!((phi.abs() - FRAC_PI_2).abs() < 1e-8);
            }
        }
    }
}
