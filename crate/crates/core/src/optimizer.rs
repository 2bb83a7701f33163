//! Constrained maximization of the NNN enhancement `R = (j2/j1)(ω/j0)`.
//!
//! The free parameters of an `N`-harmonic chiral drive are
//! `p = (A_1/ω, …, A_N/ω, δ_2, …, δ_N)`. The target phase is an equality
//! constraint and `j1/j0 ≥ r_th` an inequality constraint. Both enter a
//! quadratic penalty that is escalated twice, and each escalation round is a
//! Nelder–Mead simplex descent. Starts come from a scrambled Halton sequence,
//! so a problem and its seed fully determine the result.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::Axis;
use crate::drive::{build_family_drive, fourier_components, DriveFamily, DriveSpec, LatticeGeometry};
use crate::effective::{derive_rates, DEFAULT_ISO_TOL};
use crate::error::{Error, Result};
use crate::wrap_angle;

/// Rates of one parameter vector, evaluated at `ω = j0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    /// `(j2/j1)(ω/j0)`.
    pub enhancement: f64,
    pub j1_over_j0: f64,
    /// `None` when `j2` vanishes.
    pub phi: Option<f64>,
}

fn split_parameters(n: usize, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || p.len() != 2 * n - 1 {
        return Err(Error::InvalidParameter(format!(
            "{n} harmonics need {} parameters, got {}",
            (2 * n).saturating_sub(1),
            p.len()
        )));
    }
    let amps = p[..n].to_vec();
    let mut phases = vec![0.0];
    phases.extend(p[n..].iter().map(|&d| wrap_angle(d)));
    Ok((amps, phases))
}

/// Drive for parameters `p = (A_1..A_N, δ_2..δ_N)` at base frequency `omega`.
pub fn drive_from_parameters(family: DriveFamily, n: usize, p: &[f64], omega: f64) -> Result<DriveSpec> {
    let (amps, phases) = split_parameters(n, p)?;
    build_family_drive(family, omega, &amps, &phases)
}

/// Runs drive → spectrum → rates for one parameter vector.
pub fn evaluate_candidate(family: DriveFamily, n: usize, p: &[f64]) -> Result<Candidate> {
    let spec = drive_from_parameters(family, n, p, 1.0)?;
    let geom = LatticeGeometry::unit();
    let spectrum = fourier_components(&spec, &geom, 1.0, None)?;
    let rates = derive_rates(&spectrum, DEFAULT_ISO_TOL)?;
    debug_assert!(rates.is_isotropic(), "chiral families are isotropic: {:?}", rates.residuals);
    Ok(Candidate { enhancement: rates.enhancement(), j1_over_j0: rates.nn_ratio(), phi: rates.phi })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationProblem {
    pub family: DriveFamily,
    pub harmonics: usize,
    pub phi_target: f64,
    pub r_threshold: f64,
    /// Search box `0 ≤ A_n/ω ≤ amp_bound`.
    pub amp_bound: f64,
    pub n_starts: usize,
    pub seed: u64,
    pub phi_tol: f64,
    pub feas_tol: f64,
    /// Simplex iterations per penalty round.
    pub max_iter: usize,
}

impl OptimizationProblem {
    pub fn new(family: DriveFamily, harmonics: usize, phi_target: f64, r_threshold: f64) -> Self {
        Self {
            family,
            harmonics,
            phi_target,
            r_threshold,
            amp_bound: 5.0,
            n_starts: 64,
            seed: 42,
            phi_tol: 1e-3,
            feas_tol: 1e-9,
            max_iter: 600,
        }
    }

    pub fn dimension(&self) -> usize {
        2 * self.harmonics - 1
    }

    fn validate(&self) -> Result<()> {
        if !matches!(self.family, DriveFamily::Plus | DriveFamily::Minus) {
            return Err(Error::InvalidParameter("optimization needs the plus or minus family".into()));
        }
        if self.harmonics == 0 {
            return Err(Error::InvalidParameter("at least one harmonic is required".into()));
        }
        if !(0.0..=1.0).contains(&self.r_threshold) {
            return Err(Error::InvalidParameter(format!("r_th must lie in [0, 1], got {}", self.r_threshold)));
        }
        if !(self.amp_bound > 0.0) || self.n_starts == 0 || self.max_iter == 0 {
            return Err(Error::InvalidParameter("bound, starts and iterations must be positive".into()));
        }
        if !self.phi_target.is_finite() || !(self.phi_tol > 0.0) {
            return Err(Error::InvalidParameter("bad target phase or tolerance".into()));
        }
        Ok(())
    }

    /// Whether a candidate meets both constraints.
    pub fn is_feasible(&self, c: &Candidate) -> bool {
        match c.phi {
            Some(phi) => {
                wrap_angle(phi - self.phi_target).abs() <= self.phi_tol
                    && c.j1_over_j0 >= self.r_threshold - self.feas_tol
            }
            None => false,
        }
    }

    /// Projects a raw simplex point into the box, wrapping phases.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        let n = self.harmonics;
        p.iter()
            .enumerate()
            .map(|(i, &v)| if i < n { v.clamp(0.0, self.amp_bound) } else { wrap_angle(v) })
            .collect()
    }
}

/// Representative of `p` under the exact symmetry `δ_n → π − δ_n`
/// (all `n ≥ 2` at once), which leaves `R`, `φ` and `j1` unchanged. The
/// representative has `δ_2 ∈ [−π/2, π/2]`.
pub fn canonical_parameters(n: usize, p: &[f64]) -> Vec<f64> {
    let mut q = p.to_vec();
    if n >= 2 && q[n].abs() > FRAC_PI_2 {
        for d in &mut q[n..] {
            *d = wrap_angle(PI - *d);
        }
    }
    q
}

/// Outcome of one multistart run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartOutcome {
    pub start: Vec<f64>,
    pub p: Vec<f64>,
    pub candidate: Candidate,
    pub feasible: bool,
    /// The final simplex met its tolerance before the iteration cap.
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub p_star: Vec<f64>,
    /// `R` at `p_star`.
    pub r_value: f64,
    pub j1_over_j0: f64,
    pub phi_achieved: Option<f64>,
    pub feasible: bool,
    /// `|wrap(φ − φ_tg)|`, or π when φ is undefined.
    pub phi_residual: f64,
    /// `max(0, r_th − j1/j0)`.
    pub threshold_residual: f64,
    pub starts_converged: usize,
    pub best_per_start: Vec<StartOutcome>,
}

impl OptimizationResult {
    pub fn amplitudes(&self, n: usize) -> &[f64] {
        &self.p_star[..n]
    }
}

const PENALTY_START: f64 = 1e2;
const PENALTY_GROWTH: f64 = 1e2;
const PENALTY_ROUNDS: usize = 3;
/// The threshold is enforced slightly inside the feasible side so that the
/// finite penalty cannot leave the optimum just below it.
const THRESHOLD_MARGIN: f64 = 1e-5;
const J1_FLOOR: f64 = 1e-3;

fn penalized(problem: &OptimizationProblem, raw: &[f64], rho: f64) -> (f64, Vec<f64>, Option<Candidate>) {
    let p = problem.project(raw);
    let n = problem.harmonics;
    let outside: f64 = raw[..n]
        .iter()
        .zip(&p[..n])
        .map(|(r, q)| (r - q) * (r - q))
        .sum();
    let c = match evaluate_candidate(problem.family, n, &p) {
        Ok(c) => c,
        Err(_) => return (f64::INFINITY, p, None),
    };
    let r_eff = problem.r_threshold + THRESHOLD_MARGIN;
    let floor = problem.r_threshold.max(J1_FLOOR);
    let gain = c.enhancement * c.j1_over_j0 / c.j1_over_j0.max(floor);
    let phi_miss = c.phi.map(|phi| wrap_angle(phi - problem.phi_target)).unwrap_or(PI);
    let short = (r_eff - c.j1_over_j0).max(0.0);
    let value = -gain + rho * (phi_miss * phi_miss + short * short + outside);
    (value, p, Some(c))
}

/// Outcome of a single simplex descent.
struct Descent {
    best: Vec<f64>,
    value: f64,
    converged: bool,
    evaluations: usize,
}

/// Nelder–Mead with standard coefficients (1, 2, ½, ½).
fn nelder_mead(f: &mut impl FnMut(&[f64]) -> f64, x0: &[f64], steps: &[f64], max_iter: usize) -> Descent {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evaluations = simplex.len();
    let mut converged = false;

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[dim] - values[0];
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() <= 1e-12 * (1.0 + values[0].abs()) && size <= 1e-9 {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[dim]).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(1.0);
        let fr = f(&xr);
        evaluations += 1;
        if fr < values[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            evaluations += 1;
            if fe < fr {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[dim] {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        evaluations += 1;
        if fc < values[dim].min(fr) {
            simplex[dim] = xc;
            values[dim] = fc;
            continue;
        }
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[i].iter().zip(&simplex[0]).map(|(v, b)| b + 0.5 * (v - b)).collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
            evaluations += 1;
        }
    }
    let best = (0..=dim).min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b))).unwrap();
    Descent { best: simplex[best].clone(), value: values[best], converged, evaluations }
}

fn run_start(problem: &OptimizationProblem, start: &[f64]) -> StartOutcome {
    let n = problem.harmonics;
    let dim = problem.dimension();
    let mut x = start.to_vec();
    let mut converged = false;
    let mut evaluations = 0;
    let mut rho = PENALTY_START;
    let mut scale = 1.0;
    for _ in 0..PENALTY_ROUNDS {
        let steps: Vec<f64> = (0..dim)
            .map(|i| if i < n { 0.25 * scale * problem.amp_bound / 5.0 } else { 0.5 * scale })
            .collect();
        let mut f = |v: &[f64]| penalized(problem, v, rho).0;
        let d = nelder_mead(&mut f, &x, &steps, problem.max_iter);
        evaluations += d.evaluations;
        converged = d.converged;
        x = problem.project(&d.best);
        let _ = d.value;
        rho *= PENALTY_GROWTH;
        scale *= 0.3;
    }
    let p = canonical_parameters(n, &problem.project(&x));
    let candidate = evaluate_candidate(problem.family, n, &p).unwrap_or(Candidate {
        enhancement: 0.0,
        j1_over_j0: 0.0,
        phi: None,
    });
    StartOutcome {
        start: start.to_vec(),
        feasible: problem.is_feasible(&candidate),
        p,
        candidate,
        converged,
        evaluations,
    }
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * inv;
        i /= b;
        inv /= base as f64;
    }
    out
}

/// Deterministic starts: Halton points with a seeded Cranley–Patterson shift,
/// amplitudes in `[0, bound]` and phases in `(−π, π]`.
pub fn start_points(problem: &OptimizationProblem) -> Vec<Vec<f64>> {
    let dim = problem.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (0..problem.n_starts)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let u = (radical_inverse(i as u64 + 1, PRIMES[d % PRIMES.len()]) + shift[d]).fract();
                    if d < problem.harmonics {
                        u * problem.amp_bound
                    } else {
                        wrap_angle(-PI + 2.0 * PI * u)
                    }
                })
                .collect()
        })
        .collect()
}

/// Multistart maximization of `R` subject to `φ = φ_tg`, `j1/j0 ≥ r_th`.
pub fn maximize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    maximize_with_starts(problem, &[])
}

/// As [`maximize`], with extra starting points appended after the seeded
/// schedule (used to warm-start a looser threshold from a stricter optimum).
pub fn maximize_with_starts(problem: &OptimizationProblem, extra: &[Vec<f64>]) -> Result<OptimizationResult> {
    problem.validate()?;
    let mut starts = start_points(problem);
    for e in extra {
        if e.len() != problem.dimension() {
            return Err(Error::InvalidParameter("extra start has the wrong dimension".into()));
        }
        starts.push(problem.project(e));
    }
    let outcomes: Vec<StartOutcome> = starts.par_iter().map(|s| run_start(problem, s)).collect();
    Ok(reduce(problem, outcomes))
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn residuals(problem: &OptimizationProblem, c: &Candidate) -> (f64, f64) {
    let phi_res = c.phi.map(|phi| wrap_angle(phi - problem.phi_target).abs()).unwrap_or(PI);
    let thr_res = (problem.r_threshold - c.j1_over_j0).max(0.0);
    (phi_res, thr_res)
}

fn reduce(problem: &OptimizationProblem, outcomes: Vec<StartOutcome>) -> OptimizationResult {
    let best_feasible = outcomes
        .iter()
        .filter(|o| o.feasible)
        .max_by(|a, b| {
            a.candidate
                .enhancement
                .total_cmp(&b.candidate.enhancement)
                .then_with(|| lexicographic(&b.p, &a.p))
        });
    let chosen = match best_feasible {
        Some(o) => o,
        None => outcomes
            .iter()
            .min_by(|a, b| {
                let (pa, ta) = residuals(problem, &a.candidate);
                let (pb, tb) = residuals(problem, &b.candidate);
                (pa + ta).total_cmp(&(pb + tb)).then_with(|| lexicographic(&a.p, &b.p))
            })
            .expect("at least one start"),
    };
    let (phi_residual, threshold_residual) = residuals(problem, &chosen.candidate);
    OptimizationResult {
        p_star: chosen.p.clone(),
        r_value: chosen.candidate.enhancement,
        j1_over_j0: chosen.candidate.j1_over_j0,
        phi_achieved: chosen.candidate.phi,
        feasible: chosen.feasible,
        phi_residual,
        threshold_residual,
        starts_converged: outcomes.iter().filter(|o| o.converged && o.feasible).count(),
        best_per_start: outcomes.clone(),
    }
}

/// Best feasible `R` among uniformly random parameter vectors; a lower bound
/// the multistart search must reach.
pub fn random_search(problem: &OptimizationProblem, samples: usize, seed: u64) -> Result<Option<(f64, Vec<f64>)>> {
    problem.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            (0..problem.dimension())
                .map(|d| {
                    if d < problem.harmonics {
                        rng.gen::<f64>() * problem.amp_bound
                    } else {
                        -PI + 2.0 * PI * rng.gen::<f64>()
                    }
                })
                .collect()
        })
        .collect();
    let best = points
        .par_iter()
        .filter_map(|p| {
            let c = evaluate_candidate(problem.family, problem.harmonics, p).ok()?;
            problem.is_feasible(&c).then(|| (c.enhancement, p.clone()))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0));
    Ok(best)
}

/// One row of a target sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: DriveFamily,
    pub phi_target: f64,
    pub r_threshold: f64,
    pub result: OptimizationResult,
    /// The step from the previous target to this one is a parameter jump.
    pub discontinuity: bool,
}

impl SweepRow {
    /// `R e^{iφ_tg}` as `(re, im)`.
    pub fn polar(&self) -> (f64, f64) {
        (self.result.r_value * self.phi_target.cos(), self.result.r_value * self.phi_target.sin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub harmonics: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn rows_for(&self, family: DriveFamily, r_threshold: f64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.family == family && r.r_threshold == r_threshold).collect()
    }

    pub fn discontinuities(&self, family: DriveFamily, r_threshold: f64) -> usize {
        self.rows_for(family, r_threshold).iter().filter(|r| r.discontinuity).count()
    }

    /// CSV with columns `family,phi_target,r_th,R,re,im,A1..AN,delta2..deltaN,
    /// j1_over_j0,feasible,starts_converged,discontinuity`.
    pub fn to_csv(&self) -> String {
        let n = self.harmonics;
        let mut out = String::from("family,phi_target,r_th,R,re,im");
        for i in 1..=n {
            let _ = write!(out, ",A{i}");
        }
        for i in 2..=n {
            let _ = write!(out, ",delta{i}");
        }
        out.push_str(",j1_over_j0,feasible,starts_converged,discontinuity\n");
        for row in &self.rows {
            let (re, im) = row.polar();
            let fam = match row.family {
                DriveFamily::Plus => "plus",
                DriveFamily::Minus => "minus",
                DriveFamily::Custom => "custom",
            };
            let _ = write!(out, "{fam},{},{},{},{re},{im}", row.phi_target, row.r_threshold, row.result.r_value);
            for v in &row.result.p_star {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(
                out,
                ",{},{},{},{}",
                row.result.j1_over_j0,
                row.result.feasible as u8,
                row.result.starts_converged,
                row.discontinuity as u8
            );
        }
        out
    }
}

/// Distance between drives, measured on the complex harmonic amplitudes
/// `A_n e^{iδ_n}` so that the phase of a vanishing harmonic does not count.
pub fn parameter_distance(n: usize, a: &[f64], b: &[f64]) -> f64 {
    let amp = |p: &[f64], i: usize| {
        let phase = if i == 0 { 0.0 } else { p[n + i - 1] };
        Complex64::from_polar(p[i], phase)
    };
    (0..n).map(|i| (amp(a, i) - amp(b, i)).norm_sqr()).sum::<f64>().sqrt()
}

/// A step is a jump when it exceeds this multiple of the local trend.
pub const JUMP_FACTOR: f64 = 10.0;
/// Steps below this distance are never jumps.
pub const JUMP_FLOOR: f64 = 0.05;
/// Steps above this multiple of the trend are bisected before deciding.
const SUSPECT_FACTOR: f64 = 2.0;

/// Local trend of step `i`: the smaller parameter rate `|Δp|/|Δφ|` of the
/// adjacent steps.
fn trend_rate(n: usize, phis: &[f64], params: &[Vec<f64>], i: usize) -> Option<f64> {
    let rate = |j: usize| parameter_distance(n, &params[j], &params[j + 1]) / (phis[j + 1] - phis[j]).abs();
    [i.checked_sub(1), Some(i + 1).filter(|&j| j + 1 < params.len())]
        .into_iter()
        .flatten()
        .map(rate)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.min(r))))
}

/// Flags entry `i + 1` when step `i → i+1` exceeds [`JUMP_FACTOR`] times the
/// local trend scaled to the step's width.
pub fn detect_jumps(n: usize, phis: &[f64], params: &[Vec<f64>]) -> Vec<bool> {
    let mut flags = vec![false; params.len()];
    for i in 0..params.len().saturating_sub(1) {
        let step = parameter_distance(n, &params[i], &params[i + 1]);
        if let Some(rate) = trend_rate(n, phis, params, i) {
            let h = (phis[i + 1] - phis[i]).abs();
            flags[i + 1] = step > JUMP_FLOOR && step > JUMP_FACTOR * rate * h;
        }
    }
    flags
}

/// Bisects a suspicious step up to `levels` times, following the half that
/// carries the larger parameter change. A continuous branch shrinks with the
/// interval; a jump keeps its size and eventually exceeds the trend.
fn refine_step(
    template: &OptimizationProblem,
    a: (f64, &[f64]),
    b: (f64, &[f64]),
    rate: f64,
    levels: usize,
) -> Result<bool> {
    let n = template.harmonics;
    let (mut a, mut b) = ((a.0, a.1.to_vec()), (b.0, b.1.to_vec()));
    for _ in 0..levels {
        let phi = 0.5 * (a.0 + b.0);
        let problem = OptimizationProblem { phi_target: phi, ..template.clone() };
        let mid = maximize_with_starts(&problem, &[a.1.clone(), b.1.clone()])?;
        if !mid.feasible {
            return Ok(false);
        }
        let (left, right) = (parameter_distance(n, &a.1, &mid.p_star), parameter_distance(n, &mid.p_star, &b.1));
        if left >= right {
            b = (phi, mid.p_star);
        } else {
            a = (phi, mid.p_star);
        }
        let step = left.max(right);
        if step > JUMP_FLOOR && step > JUMP_FACTOR * rate * (b.0 - a.0).abs() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// One [`maximize`] per `(family, φ_tg, r_th)`. Thresholds are processed from
/// strict to loose, and every stricter optimum seeds the looser problem at the
/// same target, since it is feasible there too.
///
/// Steps between adjacent targets that look like jumps but fall short of the
/// criterion are bisected up to `refine_levels` times; the extra solutions
/// only decide the flag and are not reported.
pub fn sweep_targets(
    phi_targets: &[f64],
    r_thresholds: &[f64],
    families: &[DriveFamily],
    template: &OptimizationProblem,
    refine_levels: usize,
) -> Result<SweepTable> {
    if phi_targets.is_empty() || r_thresholds.is_empty() || families.is_empty() {
        return Err(Error::InvalidParameter("sweep lists must be nonempty".into()));
    }
    let mut thresholds = r_thresholds.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for &family in families {
        let mut warm: Vec<Vec<Vec<f64>>> = vec![Vec::new(); phi_targets.len()];
        let mut by_threshold = Vec::new();
        for &r_th in &thresholds {
            let mut results = Vec::new();
            for (i, &phi) in phi_targets.iter().enumerate() {
                let problem = OptimizationProblem { family, phi_target: phi, r_threshold: r_th, ..template.clone() };
                let res = maximize_with_starts(&problem, &warm[i])?;
                if res.feasible {
                    warm[i].push(res.p_star.clone());
                }
                results.push(res);
            }
            by_threshold.push((r_th, results));
        }
        // Emit in the caller's threshold order.
        for &r_th in r_thresholds {
            let (_, results) = by_threshold.iter().find(|(r, _)| *r == r_th).expect("threshold present");
            let params: Vec<Vec<f64>> = results.iter().map(|r| r.p_star.clone()).collect();
            let mut flags = detect_jumps(template.harmonics, phi_targets, &params);
            if refine_levels > 0 {
                let problem = OptimizationProblem { family, r_threshold: r_th, ..template.clone() };
                for i in 0..params.len().saturating_sub(1) {
                    let both_feasible = results[i].feasible && results[i + 1].feasible;
                    let Some(rate) = trend_rate(template.harmonics, phi_targets, &params, i) else { continue };
                    let step = parameter_distance(template.harmonics, &params[i], &params[i + 1]);
                    let h = (phi_targets[i + 1] - phi_targets[i]).abs();
                    if flags[i + 1] || !both_feasible || step <= JUMP_FLOOR || step <= SUSPECT_FACTOR * rate * h {
                        continue;
                    }
                    flags[i + 1] = refine_step(
                        &problem,
                        (phi_targets[i], &params[i]),
                        (phi_targets[i + 1], &params[i + 1]),
                        rate,
                        refine_levels,
                    )?;
                }
            }
            for ((&phi, res), flag) in phi_targets.iter().zip(results).zip(flags) {
                rows.push(SweepRow { family, phi_target: phi, r_threshold: r_th, result: res.clone(), discontinuity: flag });
            }
        }
    }
    Ok(SweepTable { harmonics: template.harmonics, rows })
}

/// One cell of the (A1, A2) map of an `N = 2` plus-family drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseMapCell {
    pub a1: f64,
    pub a2: f64,
    pub phi: Option<f64>,
    pub j1_over_j0: f64,
    pub enhancement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMap {
    pub delta2: f64,
    pub a1: Axis,
    pub a2: Axis,
    /// Cell `(i, j)` at `i * a2.len() + j`.
    pub cells: Vec<PhaseMapCell>,
}

/// Levels drawn as contours on the phase map.
pub const CONTOUR_LEVELS: [f64; 2] = [0.25, 0.5];

impl PhaseMap {
    pub fn cell(&self, i: usize, j: usize) -> &PhaseMapCell {
        &self.cells[i * self.a2.len() + j]
    }

    /// Number of 4-connected components of `{ j1/j0 ≥ level }`.
    pub fn super_level_components(&self, level: f64) -> usize {
        let (n1, n2) = (self.a1.len(), self.a2.len());
        let inside: Vec<bool> = self.cells.iter().map(|c| c.j1_over_j0 >= level).collect();
        let mut label = vec![usize::MAX; inside.len()];
        let mut count = 0;
        for seed in 0..inside.len() {
            if !inside[seed] || label[seed] != usize::MAX {
                continue;
            }
            let mut stack = vec![seed];
            label[seed] = count;
            while let Some(idx) = stack.pop() {
                let (i, j) = (idx / n2, idx % n2);
                let mut visit = |ii: usize, jj: usize| {
                    let k = ii * n2 + jj;
                    if inside[k] && label[k] == usize::MAX {
                        label[k] = count;
                        stack.push(k);
                    }
                };
                if i > 0 {
                    visit(i - 1, j);
                }
                if i + 1 < n1 {
                    visit(i + 1, j);
                }
                if j > 0 {
                    visit(i, j - 1);
                }
                if j + 1 < n2 {
                    visit(i, j + 1);
                }
            }
            count += 1;
        }
        count
    }

    /// Fraction of `bins` uniform bins of (−π, π] hit by some defined φ.
    pub fn phase_coverage(&self, bins: usize) -> f64 {
        let mut hit = vec![false; bins];
        for c in &self.cells {
            if let Some(phi) = c.phi {
                let u = (phi + PI) / (2.0 * PI);
                let b = ((u * bins as f64).ceil() as usize).clamp(1, bins) - 1;
                hit[b] = true;
            }
        }
        hit.iter().filter(|&&h| h).count() as f64 / bins as f64
    }

    /// CSV with columns `A1,A2,phi,j1_over_j0,R,phi_defined,above_0.25,above_0.5`;
    /// the last two columns mark the super-level sets of the contour levels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("A1,A2,phi,j1_over_j0,R,phi_defined");
        for level in CONTOUR_LEVELS {
            let _ = write!(out, ",above_{level}");
        }
        out.push('\n');
        for c in &self.cells {
            let phi = c.phi.map(|v| v.to_string()).unwrap_or_default();
            let _ = write!(out, "{},{},{},{},{},{}", c.a1, c.a2, phi, c.j1_over_j0, c.enhancement, c.phi.is_some() as u8);
            for level in CONTOUR_LEVELS {
                let _ = write!(out, ",{}", (c.j1_over_j0 >= level) as u8);
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates φ and `j1/j0` over an `(A1/ω, A2/ω)` grid for the `N = 2`
/// plus-family drive with phase `δ2`.
pub fn phase_map(a1: &Axis, a2: &Axis, delta2: f64) -> Result<PhaseMap> {
    if a1.is_empty() || a2.is_empty() {
        return Err(Error::InvalidParameter("phase map axes must be nonempty".into()));
    }
    let n2 = a2.len();
    let cells = (0..a1.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (a1.values[idx / n2], a2.values[idx % n2]);
            let c = evaluate_candidate(DriveFamily::Plus, 2, &[x, y, delta2])?;
            Ok(PhaseMapCell { a1: x, a2: y, phi: c.phi, j1_over_j0: c.j1_over_j0, enhancement: c.enhancement })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseMap { delta2, a1: a1.clone(), a2: a2.clone(), cells })
}

/// The `N = 2` map settings of the reference figure.
pub fn default_phase_map() -> Result<PhaseMap> {
    let axis = Axis::stepped(0.0, 3.5, 0.05)?;
    phase_map(&axis, &axis, FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters() {
        let c = evaluate_candidate(DriveFamily::Plus, 2, &[0.0, 0.0, 0.3]).unwrap();
        assert!((c.j1_over_j0 - 1.0).abs() < 1e-14);
        assert_eq!(c.enhancement, 0.0);
        assert!(c.phi.is_none());
    }

    #[test]
    fn circular_drive_phase() {
        let plus = evaluate_candidate(DriveFamily::Plus, 1, &[1.0]).unwrap();
        let minus = evaluate_candidate(DriveFamily::Minus, 1, &[1.0]).unwrap();
        assert!((plus.phi.unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!((minus.phi.unwrap() + FRAC_PI_2).abs() < 1e-12);
        assert!((plus.enhancement - minus.enhancement).abs() < 1e-12);
    }

    #[test]
    fn parameter_count_is_checked() {
        assert!(evaluate_candidate(DriveFamily::Plus, 2, &[1.0, 0.5]).is_err());
        assert!(evaluate_candidate(DriveFamily::Custom, 1, &[1.0]).is_err());
    }

    #[test]
    fn problem_validation() {
        let mut p = OptimizationProblem::new(DriveFamily::Plus, 2, 0.3, 0.25);
        assert!(p.validate().is_ok());
        p.r_threshold = 1.5;
        assert!(p.validate().is_err());
        p.r_threshold = 0.25;
        p.family = DriveFamily::Custom;
        assert!(maximize(&p).is_err());
    }

    #[test]
    fn starts_are_deterministic_and_in_box() {
        let p = OptimizationProblem::new(DriveFamily::Plus, 3, 0.3, 0.25);
        let a = start_points(&p);
        assert_eq!(a, start_points(&p));
        assert_eq!(a.len(), 64);
        for s in &a {
            assert_eq!(s.len(), 5);
            assert!(s[..3].iter().all(|&v| (0.0..=5.0).contains(&v)));
            assert!(s[3..].iter().all(|&v| v > -PI && v <= PI));
        }
        let other = OptimizationProblem { seed: 7, ..p };
        assert_ne!(a, start_points(&other));
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let mut f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let d = nelder_mead(&mut f, &[0.0, 0.0], &[0.5, 0.5], 2000);
        assert!(d.converged);
        assert!((d.best[0] - 1.0).abs() < 1e-6 && (d.best[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn jump_detector() {
        let phis: Vec<f64> = (0..6).map(|i| 0.1 * i as f64).collect();
        let smooth: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0 + 0.01 * i as f64, 0.5, 0.1]).collect();
        assert!(detect_jumps(2, &phis, &smooth).iter().all(|f| !f));
        let mut jumpy = smooth.clone();
        for p in jumpy.iter_mut().skip(3) {
            p[0] += 2.0;
        }
        let flags = detect_jumps(2, &phis, &jumpy);
        assert_eq!(flags.iter().filter(|&&f| f).count(), 1);
        assert!(flags[3]);
        // Phases of a vanishing harmonic do not count.
        assert_eq!(parameter_distance(2, &[1.0, 0.0, 0.3], &[1.0, 0.0, -2.0]), 0.0);
        assert!((parameter_distance(2, &[1.0, 1.0, PI - 0.01], &[1.0, 1.0, -PI + 0.01]) - 0.02).abs() < 1e-6);
    }

    #[test]
    fn delta_reflection_is_a_symmetry() {
        for family in [DriveFamily::Plus, DriveFamily::Minus] {
            for p in [vec![2.1, 1.3, 0.7], vec![2.1, 1.3, 0.9, 0.7, 0.4]] {
                let n = (p.len() + 1) / 2;
                let mut q = p.clone();
                for d in &mut q[n..] {
                    *d = PI - *d;
                }
                let (a, b) = (evaluate_candidate(family, n, &p).unwrap(), evaluate_candidate(family, n, &q).unwrap());
                assert!((a.enhancement - b.enhancement).abs() < 1e-12);
                assert!((a.j1_over_j0 - b.j1_over_j0).abs() < 1e-12);
                assert!(wrap_angle(a.phi.unwrap() - b.phi.unwrap()).abs() < 1e-12);
                assert!((canonical_parameters(n, &q)[n] - canonical_parameters(n, &p)[n]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn monochromatic_optimum_is_feasible() {
        let mut p = OptimizationProblem::new(DriveFamily::Plus, 1, FRAC_PI_2, 0.5);
        p.n_starts = 4;
        let r = maximize(&p).unwrap();
        assert!(r.feasible);
        assert!(r.j1_over_j0 >= 0.5 - 1e-9);
        let again = evaluate_candidate(DriveFamily::Plus, 1, &r.p_star).unwrap();
        assert_eq!(again.enhancement, r.r_value);
    }

    #[test]
    fn tiny_phase_map() {
        let a = Axis::linspace(0.0, 1.0, 2).unwrap();
        let m = phase_map(&a, &a, FRAC_PI_2).unwrap();
        assert_eq!(m.cells.len(), 4);
        assert!(m.cell(0, 0).phi.is_none());
        let csv = m.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(m.super_level_components(0.25), 1);
    }
}
