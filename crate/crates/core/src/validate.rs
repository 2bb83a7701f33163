//! Exact Floquet propagation of the driven Bloch Hamiltonian, compared
//! against the truncated effective model.
//!
//! Momenta are handled in reduced coordinates `k = x1 G1 + x2 G2`, where the
//! NNN bond phases are `k·b1 = 2πx1`, `k·b2 = 2πx2`. With `G(t)` the
//! B←A amplitude `g3(t) + g2(t) e^{ik·b1} + g1(t) e^{−ik·b2}`, the Bloch
//! Hamiltonian is `Δσz + Re G σx + Im G σy`; its undriven limit is the
//! graphene h-vector used by [`crate::bloch`].

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{band_vector, plaquette_chern, BlochModel, CLOSURE_THRESHOLD, FLUX_LIMIT};
use crate::drive::{fourier_components, tunneling_rate, DriveSpec, LatticeGeometry};
use crate::effective::{derive_rates, EffectiveRates, DEFAULT_ISO_TOL};
use crate::error::{Error, Result};
use crate::wrap_angle;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Largest entry modulus of `a − b`.
pub fn max_entry_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

/// `max |U†U − 1|` entrywise.
pub fn unitarity_defect(u: &Mat2) -> f64 {
    max_entry_diff(&mat_mul(&adjoint(u), u), &identity())
}

/// `h0 + h·σ` as a matrix.
pub fn pauli_matrix(h: [f64; 4]) -> Mat2 {
    let [h0, h1, h2, h3] = h;
    [
        [Complex64::new(h0 + h3, 0.0), Complex64::new(h1, -h2)],
        [Complex64::new(h1, h2), Complex64::new(h0 - h3, 0.0)],
    ]
}

/// `exp(−i (h0 + h·σ) t)` in closed form.
pub fn pauli_exp(h: [f64; 4], t: f64) -> Mat2 {
    let [h0, h1, h2, h3] = h;
    let r = (h1 * h1 + h2 * h2 + h3 * h3).sqrt();
    let (s, c) = (r * t).sin_cos();
    // sin(rt)/r, continuous at r = 0.
    let sr = if r > 0.0 { s / r } else { t };
    let phase = Complex64::cis(-h0 * t);
    let m = [
        [Complex64::new(c, -sr * h3), Complex64::new(-sr * h2, -sr * h1)],
        [Complex64::new(sr * h2, -sr * h1), Complex64::new(c, sr * h3)],
    ];
    m.map(|row| row.map(|z| z * phase))
}

fn bond_phases(x1: f64, x2: f64) -> [f64; 3] {
    [TAU * x1, TAU * x2, -TAU * (x1 + x2)]
}

/// `h` vector for the three instantaneous rates `g = (g1, g2, g3)`.
fn driven_h(g: &[Complex64; 3], delta: f64, x1: f64, x2: f64) -> [f64; 4] {
    let [p1, p2, _] = bond_phases(x1, x2);
    let amp = g[2] + g[1] * Complex64::cis(p1) + g[0] * Complex64::cis(-p2);
    [0.0, amp.re, amp.im, delta]
}

/// Reduced coordinates of a Cartesian momentum.
pub fn reduced(geom: &LatticeGeometry, k: [f64; 2]) -> (f64, f64) {
    let b = geom.nnn;
    ((k[0] * b[0][0] + k[1] * b[0][1]) / TAU, (k[0] * b[1][0] + k[1] * b[1][1]) / TAU)
}

/// Instantaneous Bloch Hamiltonian at Cartesian momentum `k` and time `t`.
pub fn bloch_hamiltonian_t(
    spec: &DriveSpec,
    geom: &LatticeGeometry,
    j0: f64,
    delta: f64,
    k: [f64; 2],
    t: f64,
) -> Result<Mat2> {
    let g = [
        tunneling_rate(spec, geom, j0, 1, t)?,
        tunneling_rate(spec, geom, j0, 2, t)?,
        tunneling_rate(spec, geom, j0, 3, t)?,
    ];
    let (x1, x2) = reduced(geom, k);
    Ok(pauli_matrix(driven_h(&g, delta, x1, x2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorSettings {
    pub steps_per_period: usize,
    /// Re-propagate with twice the steps and require entries to agree to 1e-8.
    pub richardson_check: bool,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        Self { steps_per_period: 4096, richardson_check: false }
    }
}

/// Entry agreement required by the Richardson check.
pub const RICHARDSON_TOL: f64 = 1e-8;

impl PropagatorSettings {
    pub fn new(steps_per_period: usize, richardson_check: bool) -> Result<Self> {
        let s = Self { steps_per_period, richardson_check };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period < 256 || !self.steps_per_period.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "steps per period must be a power of two ≥ 256, got {}",
                self.steps_per_period
            )));
        }
        Ok(())
    }
}

/// Rates at the step midpoints of one period; independent of momentum.
#[derive(Debug, Clone)]
pub struct MidpointRates {
    pub period: f64,
    pub rates: Vec<[Complex64; 3]>,
}

impl MidpointRates {
    pub fn new(spec: &DriveSpec, geom: &LatticeGeometry, j0: f64, steps: usize) -> Result<Self> {
        if !(j0 > 0.0) {
            return Err(Error::InvalidParameter(format!("bare tunneling must be positive, got {j0}")));
        }
        let period = spec.period();
        let dt = period / steps as f64;
        let rates = (0..steps)
            .map(|s| {
                let t = (s as f64 + 0.5) * dt;
                Ok([
                    tunneling_rate(spec, geom, j0, 1, t)?,
                    tunneling_rate(spec, geom, j0, 2, t)?,
                    tunneling_rate(spec, geom, j0, 3, t)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { period, rates })
    }

    /// Time-ordered product of midpoint exponentials over one period.
    pub fn propagate(&self, delta: f64, x1: f64, x2: f64) -> Mat2 {
        let dt = self.period / self.rates.len() as f64;
        self.rates.iter().fold(identity(), |u, g| mat_mul(&pauli_exp(driven_h(g, delta, x1, x2), dt), &u))
    }

    /// The same steps applied backwards in time: the inverse of [`Self::propagate`].
    pub fn propagate_reversed(&self, delta: f64, x1: f64, x2: f64) -> Mat2 {
        let dt = self.period / self.rates.len() as f64;
        self.rates
            .iter()
            .rev()
            .fold(identity(), |u, g| mat_mul(&pauli_exp(driven_h(g, delta, x1, x2), -dt), &u))
    }
}

/// One-period propagator `U(T, 0)` at Cartesian momentum `k`.
///
/// With `richardson_check`, fails with [`Error::NotConverged`] when doubling
/// the steps moves an entry by more than [`RICHARDSON_TOL`].
pub fn period_propagator(
    spec: &DriveSpec,
    geom: &LatticeGeometry,
    j0: f64,
    delta: f64,
    k: [f64; 2],
    settings: &PropagatorSettings,
) -> Result<Mat2> {
    settings.validate()?;
    let (x1, x2) = reduced(geom, k);
    let u = MidpointRates::new(spec, geom, j0, settings.steps_per_period)?.propagate(delta, x1, x2);
    if settings.richardson_check {
        let fine = MidpointRates::new(spec, geom, j0, 2 * settings.steps_per_period)?.propagate(delta, x1, x2);
        let change = max_entry_diff(&u, &fine);
        if change > RICHARDSON_TOL {
            return Err(Error::NotConverged { change });
        }
    }
    Ok(u)
}

/// Eigen-decomposition of a 2×2 unitary `U = e^{−iα}(cos θ − i sin θ n·σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetPair {
    /// Folded quasienergy of the `n·σ = +1` eigenvector.
    pub eps_plus: f64,
    /// Folded quasienergy of the `n·σ = −1` eigenvector.
    pub eps_minus: f64,
    pub axis: [f64; 3],
}

/// Folds an energy into `(−ω/2, ω/2]`.
pub fn fold(eps: f64, omega: f64) -> f64 {
    wrap_angle(eps * TAU / omega) * omega / TAU
}

pub fn floquet_pair(u: &Mat2, period: f64) -> FloquetPair {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let alpha = -0.5 * det.arg();
    let v = u.map(|row| row.map(|z| z * Complex64::cis(alpha)));
    let c = 0.5 * (v[0][0].re + v[1][1].re);
    let sn = [
        -0.5 * (v[0][1].im + v[1][0].im),
        0.5 * (v[1][0].re - v[0][1].re),
        0.5 * (v[1][1].im - v[0][0].im),
    ];
    let s = (sn[0] * sn[0] + sn[1] * sn[1] + sn[2] * sn[2]).sqrt();
    let theta = s.atan2(c);
    let axis = if s > 0.0 { sn.map(|x| x / s) } else { [0.0, 0.0, 1.0] };
    let omega = TAU / period;
    FloquetPair {
        eps_plus: fold((alpha + theta) / period, omega),
        eps_minus: fold((alpha - theta) / period, omega),
        axis,
    }
}

/// Effective `h` vector built from the raw rates (no gauge fixing), so it
/// shares the exact Hamiltonian's gauge.
pub fn effective_h(rates: &EffectiveRates, delta: f64, x1: f64, x2: f64) -> [f64; 4] {
    let p = bond_phases(x1, x2);
    let mut h = driven_h(&rates.g0, rates.delta_eff(delta), x1, x2);
    for (tau, phase) in rates.tau.iter().zip(p) {
        h[3] += 2.0 * (tau * Complex64::cis(phase)).re;
    }
    h
}

/// One momentum of a [`QuasienergyReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasienergyPoint {
    pub k: [f64; 2],
    /// Exact quasienergies paired with the lower and upper effective band.
    pub exact: [f64; 2],
    pub effective: [f64; 2],
    pub deviation: f64,
    /// The eigenvector overlaps were within 1e-3 of each other.
    pub ambiguous: bool,
    pub unitarity_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasienergyReport {
    pub omega: f64,
    pub grid: usize,
    pub points: Vec<QuasienergyPoint>,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    pub max_unitarity_defect: f64,
    pub ambiguous_points: usize,
}

impl QuasienergyReport {
    /// CSV with columns `kx,ky,eps_exact_lo,eps_exact_hi,eps_eff_lo,eps_eff_hi,deviation,pairing_flag`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kx,ky,eps_exact_lo,eps_exact_hi,eps_eff_lo,eps_eff_hi,deviation,pairing_flag\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.k[0], p.k[1], p.exact[0], p.exact[1], p.effective[0], p.effective[1], p.deviation, p.ambiguous as u8
            );
        }
        out
    }
}

const PAIRING_TOL: f64 = 1e-3;

fn compare_point(u: &Mat2, period: f64, h_eff: [f64; 4]) -> ([f64; 2], [f64; 2], f64, bool) {
    let omega = TAU / period;
    let pair = floquet_pair(u, period);
    let r = (h_eff[1] * h_eff[1] + h_eff[2] * h_eff[2] + h_eff[3] * h_eff[3]).sqrt();
    let eff = [h_eff[0] - r, h_eff[0] + r];
    let hat = if r > 0.0 { [h_eff[1] / r, h_eff[2] / r, h_eff[3] / r] } else { [0.0, 0.0, 1.0] };
    // |⟨v±|w+⟩|² = (1 ± n·ĥ)/2.
    let align = pair.axis[0] * hat[0] + pair.axis[1] * hat[1] + pair.axis[2] * hat[2];
    let exact = if align >= 0.0 { [pair.eps_minus, pair.eps_plus] } else { [pair.eps_plus, pair.eps_minus] };
    let deviation = (0..2).map(|i| fold(exact[i] - eff[i], omega).abs()).fold(0.0, f64::max);
    (exact, eff, deviation, align.abs() < PAIRING_TOL)
}

/// Exact folded quasienergies against the effective bands on the `n × n`
/// reduced grid `x_i = m/n`.
pub fn compare_effective(
    spec: &DriveSpec,
    geom: &LatticeGeometry,
    j0: f64,
    delta: f64,
    grid: usize,
    settings: &PropagatorSettings,
) -> Result<QuasienergyReport> {
    settings.validate()?;
    if grid == 0 {
        return Err(Error::InvalidParameter("k-grid must be nonempty".into()));
    }
    let rates = derive_rates(&fourier_components(spec, geom, j0, None)?, DEFAULT_ISO_TOL)?;
    let mid = MidpointRates::new(spec, geom, j0, settings.steps_per_period)?;
    let fine = if settings.richardson_check {
        Some(MidpointRates::new(spec, geom, j0, 2 * settings.steps_per_period)?)
    } else {
        None
    };
    let points = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (x1, x2) = ((idx / grid) as f64 / grid as f64, (idx % grid) as f64 / grid as f64);
            let u = mid.propagate(delta, x1, x2);
            if let Some(fine) = &fine {
                let change = max_entry_diff(&u, &fine.propagate(delta, x1, x2));
                if change > RICHARDSON_TOL {
                    return Err(Error::NotConverged { change });
                }
            }
            let (exact, effective, deviation, ambiguous) =
                compare_point(&u, mid.period, effective_h(&rates, delta, x1, x2));
            Ok(QuasienergyPoint {
                k: geom.momentum(x1, x2),
                exact,
                effective,
                deviation,
                ambiguous,
                unitarity_defect: unitarity_defect(&u),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = points.iter().map(|p| p.deviation).fold(0.0, f64::max);
    let mean_deviation = points.iter().map(|p| p.deviation).sum::<f64>() / points.len() as f64;
    Ok(QuasienergyReport {
        omega: spec.omega,
        grid,
        max_unitarity_defect: points.iter().map(|p| p.unitarity_defect).fold(0.0, f64::max),
        ambiguous_points: points.iter().filter(|p| p.ambiguous).count(),
        points,
        max_deviation,
        mean_deviation,
    })
}

/// Maximum deviation along a ladder of frequencies at fixed `A/ω`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub omegas: Vec<f64>,
    pub max_deviations: Vec<f64>,
    /// `dev(ω_i) / dev(ω_{i+1})`.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `−log dev` against `log ω`.
    pub exponent: f64,
}

pub fn deviation_scaling(
    spec: &DriveSpec,
    geom: &LatticeGeometry,
    j0: f64,
    delta: f64,
    grid: usize,
    omegas: &[f64],
    settings: &PropagatorSettings,
) -> Result<ScalingReport> {
    if omegas.len() < 2 {
        return Err(Error::InvalidParameter("scaling needs at least two frequencies".into()));
    }
    let max_deviations = omegas
        .iter()
        .map(|&w| Ok(compare_effective(&spec.with_omega(w)?, geom, j0, delta, grid, settings)?.max_deviation))
        .collect::<Result<Vec<f64>>>()?;
    let ratios = max_deviations.windows(2).map(|w| w[0] / w[1]).collect();
    let xs: Vec<f64> = omegas.iter().map(|w| w.ln()).collect();
    let ys: Vec<f64> = max_deviations.iter().map(|d| -d.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(ScalingReport { omegas: omegas.to_vec(), max_deviations, ratios, exponent: sxy / sxx })
}

/// `max |U(T)^m − exp(−i H_eff m T)|` over an entry, for `m = 1..=periods`,
/// at one momentum.
pub fn stroboscopic_deviation(
    spec: &DriveSpec,
    geom: &LatticeGeometry,
    j0: f64,
    delta: f64,
    k: [f64; 2],
    periods: usize,
    settings: &PropagatorSettings,
) -> Result<Vec<f64>> {
    let u = period_propagator(spec, geom, j0, delta, k, settings)?;
    let rates = derive_rates(&fourier_components(spec, geom, j0, None)?, DEFAULT_ISO_TOL)?;
    let (x1, x2) = reduced(geom, k);
    let ue = pauli_exp(effective_h(&rates, delta, x1, x2), spec.period());
    let (mut a, mut b) = (identity(), identity());
    Ok((0..periods)
        .map(|_| {
            a = mat_mul(&u, &a);
            b = mat_mul(&ue, &b);
            max_entry_diff(&a, &b)
        })
        .collect())
}

/// Plaquette Chern number of the lower folded Floquet band on an `n × n`
/// grid.
///
/// Fails with [`Error::GapClosed`] when the folded quasienergy separation
/// drops below `1e-6 j0` anywhere on the grid, and with
/// [`Error::AmbiguousPlaquette`] when a plaquette phase is too large.
pub fn floquet_chern(
    spec: &DriveSpec,
    geom: &LatticeGeometry,
    j0: f64,
    delta: f64,
    grid: usize,
    settings: &PropagatorSettings,
) -> Result<i32> {
    settings.validate()?;
    if grid < 12 {
        return Err(Error::InvalidParameter(format!("Chern grid must be at least 12, got {grid}")));
    }
    let mid = MidpointRates::new(spec, geom, j0, settings.steps_per_period)?;
    let omega = spec.omega;
    let data: Vec<(f64, [Complex64; 2])> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (x1, x2) = ((idx / grid) as f64 / grid as f64, (idx % grid) as f64 / grid as f64);
            let pair = floquet_pair(&mid.propagate(delta, x1, x2), mid.period);
            let sep = (pair.eps_plus - pair.eps_minus).abs();
            let gap = sep.min(omega - sep);
            let [nx, ny, nz] = pair.axis;
            let lower_is_plus = pair.eps_plus < pair.eps_minus;
            (gap, band_vector([0.0, nx, ny, nz], lower_is_plus))
        })
        .collect();
    let gap = data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let threshold = CLOSURE_THRESHOLD * j0;
    if !(gap > threshold) {
        return Err(Error::GapClosed { gap, threshold });
    }
    let vectors: Vec<[Complex64; 2]> = data.into_iter().map(|d| d.1).collect();
    let sum = plaquette_chern(grid, grid, &vectors);
    if sum.max_flux > FLUX_LIMIT {
        return Err(Error::AmbiguousPlaquette { max_flux: sum.max_flux });
    }
    Ok(sum.chern)
}

/// Effective-model Chern number of the same drive, for side-by-side checks.
pub fn effective_chern(spec: &DriveSpec, geom: &LatticeGeometry, j0: f64, delta: f64, grid: usize) -> Result<i32> {
    let rates = derive_rates(&fourier_components(spec, geom, j0, None)?, DEFAULT_ISO_TOL)?;
    if !rates.is_isotropic() {
        return Err(Error::InvalidParameter("effective Chern number needs an isotropic drive".into()));
    }
    let model = BlochModel::from_rates(&rates, delta)?.with_geometry(*geom);
    crate::bloch::chern_number(&model, grid, grid)
}
