//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use fcf_core::drive::build_family_drive;
use fcf_core::{DriveFamily, DriveSpec, Harmonic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `J_n(x)` from its power series; accurate to ~1e-13 for |x| ≤ 12.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let m = n.unsigned_abs() as i32;
    let half = x / 2.0;
    let mut term = half.powi(m) / (1..=m).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..200 {
        term *= -half * half / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > m {
            break;
        }
    }
    if n < 0 && m % 2 == 1 {
        -sum
    } else {
        sum
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random chiral-family drive with `N ≤ max_n` harmonics and `|A/ω| ≤ amp`.
pub fn random_family_drive(rng: &mut ChaCha8Rng, max_n: usize, amp: f64, omega: f64) -> DriveSpec {
    let family = if rng.gen::<bool>() { DriveFamily::Plus } else { DriveFamily::Minus };
    let n = rng.gen_range(1..=max_n);
    let amps: Vec<f64> = (0..n).map(|_| rng.gen_range(-amp..=amp)).collect();
    let mut phases = vec![0.0];
    phases.extend((1..n).map(|_| rng.gen_range(-PI..PI)));
    build_family_drive(family, omega, &amps, &phases).unwrap()
}

/// Random drive with arbitrary harmonics and elliptic polarizations.
pub fn random_custom_drive(rng: &mut ChaCha8Rng, omega: f64) -> DriveSpec {
    let count = rng.gen_range(1..=3);
    let harmonics = (0..count)
        .map(|_| Harmonic {
            m: rng.gen_range(1..=5),
            amp_x: rng.gen_range(-2.0..2.0),
            phase_x: rng.gen_range(-PI..PI),
            amp_y: rng.gen_range(-2.0..2.0),
            phase_y: rng.gen_range(-PI..PI),
        })
        .collect();
    DriveSpec::custom(omega, harmonics).unwrap()
}

/// Force along a single axis, `A ω cos(ω t)`, in units of ω/a.
pub fn single_axis_drive(amp: f64, along_x: bool, omega: f64) -> DriveSpec {
    let h = if along_x {
        Harmonic { m: 1, amp_x: amp, phase_x: 0.0, amp_y: 0.0, phase_y: 0.0 }
    } else {
        Harmonic { m: 1, amp_x: 0.0, phase_x: 0.0, amp_y: amp, phase_y: 0.0 }
    };
    DriveSpec::custom(omega, vec![h]).unwrap()
}

/// `|τ|` of the circular drive of radius `A`: `(2 j0²/ω) |Σ J_n(A)² sin(2πn/3)/n|`.
pub fn circular_nnn_magnitude(amp: f64, j0: f64, omega: f64) -> f64 {
    let s: f64 = (1..=60).map(|n| bessel_j(n, amp).powi(2) * (2.0 * PI * n as f64 / 3.0).sin() / n as f64).sum();
    2.0 * j0 * j0 / omega * s.abs()
}
