//! Lattice geometry, periodic driving forces and Peierls-phased tunneling.
//!
//! A force `F(t)` shifts the quasimomentum, which turns the bare
//! nearest-neighbor tunneling `j0` along bond `a_k` into the periodic rate
//! `g_k(t) = j0 exp(i χ_k(t))`. The phase `χ_k` is the time integral of
//! `F · a_k` with its period average removed. Everything downstream only needs
//! the Fourier components of `g_k`, which [`fourier_components`] computes with
//! a uniform-grid FFT.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{dot, Vec2};

/// Hexagonal lattice vectors for nearest-neighbor spacing `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGeometry {
    pub a: f64,
    /// Nearest-neighbor bond vectors `a_1, a_2, a_3`.
    pub nn: [Vec2; 3],
    /// Next-nearest-neighbor (Bravais) vectors `b_1, b_2, b_3`.
    pub nnn: [Vec2; 3],
    pub e1: Vec2,
    pub e2: Vec2,
    /// Reciprocal vectors with `b_i · G_j = 2π δ_ij`.
    pub reciprocal: [Vec2; 2],
}

impl LatticeGeometry {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::NonPositiveLength(a));
        }
        let s3 = 3f64.sqrt();
        let a1 = [a / 2.0 * s3, a / 2.0];
        let a2 = [-a / 2.0 * s3, a / 2.0];
        let a3 = [-a1[0] - a2[0], -a1[1] - a2[1]];
        let b1 = [a * s3, 0.0];
        let b2 = [-a / 2.0 * s3, 1.5 * a];
        let b3 = [-b1[0] - b2[0], -b1[1] - b2[1]];
        let e1 = [(a1[0] - a2[0]) / s3, (a1[1] - a2[1]) / s3];
        let e2 = [-a3[0], -a3[1]];

        // G = 2π (B⁻¹)ᵀ with the b's as rows of B.
        let det = b1[0] * b2[1] - b1[1] * b2[0];
        let g1 = [TAU * b2[1] / det, -TAU * b2[0] / det];
        let g2 = [-TAU * b1[1] / det, TAU * b1[0] / det];

        Ok(Self {
            a,
            nn: [a1, a2, a3],
            nnn: [b1, b2, b3],
            e1,
            e2,
            reciprocal: [g1, g2],
        })
    }

    /// Geometry with unit nearest-neighbor distance.
    pub fn unit() -> Self {
        Self::new(1.0).expect("unit spacing is valid")
    }

    /// Cartesian momentum for reduced coordinates `k = x1 G1 + x2 G2`.
    pub fn momentum(&self, x1: f64, x2: f64) -> Vec2 {
        let [g1, g2] = self.reciprocal;
        [x1 * g1[0] + x2 * g2[0], x1 * g1[1] + x2 * g2[1]]
    }

    pub fn bond(&self, k: usize) -> Result<Vec2> {
        bond_slot(k).map(|i| self.nn[i])
    }
}

impl Default for LatticeGeometry {
    fn default() -> Self {
        Self::unit()
    }
}

fn bond_slot(k: usize) -> Result<usize> {
    match k {
        1..=3 => Ok(k - 1),
        _ => Err(Error::InvalidBond(k)),
    }
}

/// One frequency component of the force.
///
/// Amplitudes are in units of ω/a, so the physical force along `e1` is
/// `amp_x · ω · cos(m ω t − phase_x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub m: u32,
    pub amp_x: f64,
    pub phase_x: f64,
    pub amp_y: f64,
    pub phase_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveFamily {
    Plus,
    Minus,
    Custom,
}

impl DriveFamily {
    fn chirality(self) -> Option<f64> {
        match self {
            DriveFamily::Plus => Some(1.0),
            DriveFamily::Minus => Some(-1.0),
            DriveFamily::Custom => None,
        }
    }

    /// The opposite-chirality family; custom drives map to themselves.
    pub fn mirror(self) -> Self {
        match self {
            DriveFamily::Plus => DriveFamily::Minus,
            DriveFamily::Minus => DriveFamily::Plus,
            DriveFamily::Custom => DriveFamily::Custom,
        }
    }
}

impl std::str::FromStr for DriveFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(DriveFamily::Plus),
            "minus" | "-" => Ok(DriveFamily::Minus),
            "custom" => Ok(DriveFamily::Custom),
            other => Err(Error::InvalidParameter(format!("unknown drive family `{other}`"))),
        }
    }
}

/// Harmonic integer of the `n`-th component (1-based) of the chiral families:
/// 1, 2, 4, 5, 7, 8, ... which skips every multiple of three.
pub fn family_harmonic(n: u32) -> u32 {
    let n = n as i64;
    let sign = if n % 2 == 0 { 1 } else { -1 };
    ((6 * n - sign - 3) / 4) as u32
}

/// A periodic force made of harmonics of the base frequency `omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DriveJson", into = "DriveJson")]
pub struct DriveSpec {
    pub family: DriveFamily,
    pub omega: f64,
    pub harmonics: Vec<Harmonic>,
}

impl DriveSpec {
    /// An arbitrary list of harmonics.
    pub fn custom(omega: f64, harmonics: Vec<Harmonic>) -> Result<Self> {
        check_omega(omega)?;
        for h in &harmonics {
            check_harmonic(h)?;
        }
        Ok(Self { family: DriveFamily::Custom, omega, harmonics })
    }

    /// No force at all.
    pub fn undriven(omega: f64) -> Result<Self> {
        Self::custom(omega, Vec::new())
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn max_harmonic(&self) -> u32 {
        self.harmonics.iter().map(|h| h.m).max().unwrap_or(0)
    }

    /// Force at time `t` in the (e1, e2) frame, which coincides with the
    /// Cartesian frame.
    pub fn force_at(&self, t: f64) -> Vec2 {
        let mut f = [0.0, 0.0];
        for h in &self.harmonics {
            let theta = h.m as f64 * self.omega * t;
            f[0] += h.amp_x * self.omega * (theta - h.phase_x).cos();
            f[1] += h.amp_y * self.omega * (theta - h.phase_y).cos();
        }
        f
    }

    /// Same drive at another base frequency with unchanged `A/ω`.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        check_omega(omega)?;
        Ok(Self { omega, ..self.clone() })
    }

    /// Amplitudes `A_n/ω` and phases `δ_n` of a chiral-family drive.
    pub fn family_parameters(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.family.chirality()?;
        Some((
            self.harmonics.iter().map(|h| h.amp_x).collect(),
            self.harmonics.iter().map(|h| h.phase_x).collect(),
        ))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("drive serialization cannot fail")
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveFrequency(omega))
    }
}

fn check_harmonic(h: &Harmonic) -> Result<()> {
    if h.m == 0 {
        return Err(Error::InvalidHarmonic("harmonic integer must be at least 1".into()));
    }
    let finite = [h.amp_x, h.amp_y, h.phase_x, h.phase_y].iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidHarmonic(format!("non-finite entry in harmonic m = {}", h.m)));
    }
    Ok(())
}

/// Builds the chiral drive `Σ A_n [cos(ω_n t − δ_n) e1 + cos(ω_n t − δ_n^±) e2]`
/// with `δ_n^± = δ_n ± (−1)^n π/2` and `ω_n` from [`family_harmonic`].
pub fn build_family_drive(
    family: DriveFamily,
    omega: f64,
    amps: &[f64],
    phases: &[f64],
) -> Result<DriveSpec> {
    let chirality = family.chirality().ok_or_else(|| {
        Error::InvalidParameter("build_family_drive needs the plus or minus family".into())
    })?;
    check_omega(omega)?;
    if amps.len() != phases.len() {
        return Err(Error::MismatchedLengths { amps: amps.len(), phases: phases.len() });
    }
    if amps.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if phases[0] != 0.0 {
        return Err(Error::NonzeroFirstPhase(phases[0]));
    }
    let harmonics = amps
        .iter()
        .zip(phases)
        .enumerate()
        .map(|(i, (&amp, &delta))| {
            let n = i as u32 + 1;
            Harmonic {
                m: family_harmonic(n),
                amp_x: amp,
                phase_x: delta,
                amp_y: amp,
                phase_y: delta + chirality * family_phase_offset(n),
            }
        })
        .collect::<Vec<_>>();
    for h in &harmonics {
        check_harmonic(h)?;
    }
    Ok(DriveSpec { family, omega, harmonics })
}

/// Wire form of [`DriveSpec`]: either the explicit harmonic list or the
/// `A`/`delta` shorthand of the chiral families.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveJson {
    family: DriveFamily,
    omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    harmonics: Option<Vec<HarmonicJson>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    amps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HarmonicJson {
    m: u32,
    ax: [f64; 2],
    ay: [f64; 2],
}

impl TryFrom<DriveJson> for DriveSpec {
    type Error = Error;

    fn try_from(raw: DriveJson) -> Result<Self> {
        match (raw.harmonics, raw.amps, raw.delta) {
            (Some(list), None, None) => {
                let harmonics: Vec<Harmonic> = list
                    .into_iter()
                    .map(|h| Harmonic {
                        m: h.m,
                        amp_x: h.ax[0],
                        phase_x: h.ax[1],
                        amp_y: h.ay[0],
                        phase_y: h.ay[1],
                    })
                    .collect();
                match raw.family {
                    DriveFamily::Custom => DriveSpec::custom(raw.omega, harmonics),
                    family => {
                        let amps: Vec<f64> = harmonics.iter().map(|h| h.amp_x).collect();
                        let phases: Vec<f64> = harmonics.iter().map(|h| h.phase_x).collect();
                        let expected = build_family_drive(family, raw.omega, &amps, &phases)?;
                        let consistent = expected.harmonics.iter().zip(&harmonics).all(|(e, h)| {
                            e.m == h.m
                                && e.amp_y == h.amp_y
                                && (crate::wrap_angle(e.phase_y - h.phase_y)).abs() < 1e-9
                        });
                        if consistent {
                            Ok(expected)
                        } else {
                            Err(Error::InvalidHarmonic(format!(
                                "harmonic list is not a valid {family:?} family drive"
                            )))
                        }
                    }
                }
            }
            (None, Some(amps), delta) => {
                let delta = delta.unwrap_or_else(|| vec![0.0; amps.len()]);
                build_family_drive(raw.family, raw.omega, &amps, &delta)
            }
            (None, None, Some(_)) => {
                Err(Error::InvalidParameter("`delta` given without `A`".into()))
            }
            (None, None, None) => DriveSpec::custom(raw.omega, Vec::new()),
            (Some(_), _, _) => Err(Error::InvalidParameter(
                "give either `harmonics` or the `A`/`delta` shorthand, not both".into(),
            )),
        }
    }
}

impl From<DriveSpec> for DriveJson {
    fn from(spec: DriveSpec) -> Self {
        DriveJson {
            family: spec.family,
            omega: spec.omega,
            harmonics: Some(
                spec.harmonics
                    .iter()
                    .map(|h| HarmonicJson {
                        m: h.m,
                        ax: [h.amp_x, h.phase_x],
                        ay: [h.amp_y, h.phase_y],
                    })
                    .collect(),
            ),
            amps: None,
            delta: None,
        }
    }
}

/// `χ(t) = Σ amp · sin(m ω t − phase)`: the closed form of the mean-free
/// Peierls phase on one bond.
#[derive(Debug, Clone, PartialEq)]
pub struct PeierlsPhase {
    pub omega: f64,
    /// `(m, amplitude, phase)` per harmonic; amplitudes are dimensionless.
    pub terms: Vec<(u32, f64, f64)>,
}

impl PeierlsPhase {
    pub fn at(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, amp, phase)| amp * (m as f64 * self.omega * t - phase).sin())
            .sum()
    }

    /// Same phase evaluated at `θ = ω t`.
    pub fn at_angle(&self, theta: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, amp, phase)| amp * (m as f64 * theta - phase).sin())
            .sum()
    }

    /// Upper bound on `|χ|`, the total modulation index.
    pub fn modulation_index(&self) -> f64 {
        self.terms.iter().map(|t| t.1.abs()).sum()
    }

    /// Upper bound on `|dχ/dθ|`: the largest instantaneous frequency
    /// excursion in units of ω, which sets the spectral width.
    pub fn bandwidth_index(&self) -> f64 {
        self.terms.iter().map(|t| t.0 as f64 * t.1.abs()).sum()
    }
}

/// Peierls phase for bond `k ∈ {1, 2, 3}`.
///
/// Each harmonic contributes `F · a_k = ω C cos(m ω t − ψ)` with
/// `C e^{−iψ} = A_x (e1·a_k) e^{−iφ_x} + A_y (e2·a_k) e^{−iφ_y}`; its mean-free
/// antiderivative is `(C/m) sin(m ω t − ψ)`.
pub fn peierls_phase(spec: &DriveSpec, geom: &LatticeGeometry, k: usize) -> Result<PeierlsPhase> {
    let bond = geom.bond(k)?;
    let px = dot(geom.e1, bond);
    let py = dot(geom.e2, bond);
    let terms = spec
        .harmonics
        .iter()
        .map(|h| {
            let w = Complex64::from_polar(h.amp_x * px, -h.phase_x)
                + Complex64::from_polar(h.amp_y * py, -h.phase_y);
            (h.m, w.norm() / h.m as f64, -w.arg())
        })
        .collect();
    Ok(PeierlsPhase { omega: spec.omega, terms })
}

/// `χ_k(t)` for bond `k ∈ {1, 2, 3}`.
pub fn chi(spec: &DriveSpec, geom: &LatticeGeometry, k: usize, t: f64) -> Result<f64> {
    Ok(peierls_phase(spec, geom, k)?.at(t))
}

/// Fourier coefficients `c[n]` for `n ∈ [−n_max, n_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    n_max: usize,
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    pub fn from_coeffs(n_max: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * n_max + 1 {
            return Err(Error::ExtentMismatch { left: coeffs.len(), right: 2 * n_max + 1 });
        }
        Ok(Self { n_max, coeffs })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Coefficient of `e^{i n ω t}`; zero outside the stored band.
    pub fn get(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.n_max as i64) as usize]
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Series of the complex-conjugated signal: `c'[n] = conj(c[−n])`.
    ///
    /// For `g_{−a}(t) = conj(g_a(t))` this gives the negated-bond spectrum.
    pub fn reflected(&self) -> Self {
        Self {
            n_max: self.n_max,
            coeffs: self.coeffs.iter().rev().map(|c| c.conj()).collect(),
        }
    }

    pub fn power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Fourier spectrum of the three nearest-neighbor tunneling rates.
#[derive(Debug, Clone, PartialEq)]
pub struct TunnelingSpectrum {
    pub j0: f64,
    pub omega: f64,
    pub n_max: usize,
    /// Series for bonds `a_1, a_2, a_3`.
    pub g: [FourierSeries; 3],
    /// Uniform samples per period used for the transform.
    pub samples: usize,
    /// Weight outside `|n| ≤ n_max`, relative to `j0²`, per bond.
    pub tail: [f64; 3],
}

impl TunnelingSpectrum {
    /// Series for bond `k ∈ {1, 2, 3}`.
    pub fn bond(&self, k: usize) -> Result<&FourierSeries> {
        bond_slot(k).map(|i| &self.g[i])
    }

    /// Series for the reversed bond `−a_k`.
    pub fn reversed_bond(&self, k: usize) -> Result<FourierSeries> {
        self.bond(k).map(FourierSeries::reflected)
    }
}

/// Largest modulation index over the three bonds.
pub fn max_modulation_index(spec: &DriveSpec, geom: &LatticeGeometry) -> f64 {
    (1..=3)
        .map(|k| peierls_phase(spec, geom, k).map(|p| p.modulation_index()).unwrap_or(0.0))
        .fold(0.0, f64::max)
}

/// Truncation order used when the caller does not choose one:
/// `⌈max |dχ/dθ|⌉ + 20 m_max`. Harmonic `m` places its Bessel sidebands at
/// multiples of `m`, so twenty sidebands past the excursion reach `20 m`
/// orders; for `m = 1` this is the index plus twenty.
pub fn default_n_max(spec: &DriveSpec, geom: &LatticeGeometry) -> usize {
    let bandwidth = (1..=3)
        .map(|k| peierls_phase(spec, geom, k).map(|p| p.bandwidth_index()).unwrap_or(0.0))
        .fold(0.0, f64::max);
    bandwidth.ceil() as usize + 20 * spec.max_harmonic().max(1) as usize
}

/// Samples per period: the smallest power of two at or above
/// `64 (m_max + ⌈index⌉)`, and large enough to keep the retained band far
/// from the Nyquist order.
pub fn sample_count(spec: &DriveSpec, geom: &LatticeGeometry, n_max: usize) -> usize {
    let index = max_modulation_index(spec, geom).ceil() as usize;
    let base = 64 * (spec.max_harmonic() as usize + index);
    base.max(4 * (2 * n_max + 1)).max(64).next_power_of_two()
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static TABLE: RefCell<Arc<Vec<(f64, f64)>>> = RefCell::new(Arc::new(Vec::new()));
}

/// `(sin, cos)` of the sample angles `2πj/M`, cached per thread.
fn angle_table(samples: usize) -> Arc<Vec<(f64, f64)>> {
    TABLE.with(|t| {
        let mut t = t.borrow_mut();
        if t.len() != samples {
            *t = Arc::new((0..samples).map(|j| (TAU * j as f64 / samples as f64).sin_cos()).collect());
        }
        Arc::clone(&t)
    })
}

fn forward_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

const TAIL_LIMIT: f64 = 1e-8;

/// Fourier components `g_k^n = (1/T) ∫ j0 e^{iχ_k(t)} e^{−inωt} dt`.
///
/// `n_max = None` picks [`default_n_max`]. Fails when more than `1e-8 j0²`
/// of spectral weight lies beyond the requested order.
pub fn fourier_components(
    spec: &DriveSpec,
    geom: &LatticeGeometry,
    j0: f64,
    n_max: Option<usize>,
) -> Result<TunnelingSpectrum> {
    let n_max = n_max.unwrap_or_else(|| default_n_max(spec, geom));
    let samples = sample_count(spec, geom, n_max);
    fourier_components_with_samples(spec, geom, j0, n_max, samples)
}

/// As [`fourier_components`] with an explicit sample count.
pub fn fourier_components_with_samples(
    spec: &DriveSpec,
    geom: &LatticeGeometry,
    j0: f64,
    n_max: usize,
    samples: usize,
) -> Result<TunnelingSpectrum> {
    if !(j0 > 0.0) || !j0.is_finite() {
        return Err(Error::InvalidParameter(format!("bare tunneling must be positive, got {j0}")));
    }
    if n_max < 1 {
        return Err(Error::InvalidParameter("truncation order must be at least 1".into()));
    }
    if samples < 2 * n_max + 1 {
        return Err(Error::InvalidParameter(format!(
            "{samples} samples cannot resolve orders up to {n_max}"
        )));
    }
    let fft = forward_fft(samples);
    let scale = j0 / samples as f64;
    let mut series = Vec::with_capacity(3);
    let mut tail = [0.0; 3];
    let mut buffer = vec![Complex64::new(0.0, 0.0); samples];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // Harmonic m reads table entry (m j) mod M, advanced incrementally.
    let table = angle_table(samples);
    let mut chi = vec![0.0; samples];
    for (slot, k) in (1..=3).enumerate() {
        let phase = peierls_phase(spec, geom, k)?;
        chi.iter_mut().for_each(|c| *c = 0.0);
        for &(m, amp, p) in &phase.terms {
            let (ac, as_) = (amp * p.cos(), amp * p.sin());
            let step = m as usize % samples;
            let mut idx = 0;
            for c in chi.iter_mut() {
                let (s, co) = table[idx];
                *c += ac * s - as_ * co;
                idx += step;
                if idx >= samples {
                    idx -= samples;
                }
            }
        }
        for (z, &c) in buffer.iter_mut().zip(&chi) {
            *z = Complex64::cis(c);
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        let coeffs: Vec<Complex64> = (-(n_max as i64)..=n_max as i64)
            .map(|n| buffer[n.rem_euclid(samples as i64) as usize] * scale)
            .collect();
        let outside: f64 = buffer
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let n = if *j <= samples / 2 { *j as i64 } else { *j as i64 - samples as i64 };
                n.unsigned_abs() as usize > n_max
            })
            .map(|(_, c)| (c / samples as f64).norm_sqr())
            .sum();
        tail[slot] = outside;
        if outside > TAIL_LIMIT {
            return Err(Error::TruncationTooSmall { n_max, tail: outside });
        }
        series.push(FourierSeries { n_max, coeffs });
    }
    let [g1, g2, g3]: [FourierSeries; 3] = series.try_into().expect("three bonds");
    Ok(TunnelingSpectrum {
        j0,
        omega: spec.omega,
        n_max,
        g: [g1, g2, g3],
        samples,
        tail,
    })
}

/// Time-dependent rate `g_k(t) = j0 e^{iχ_k(t)}`.
pub fn tunneling_rate(
    spec: &DriveSpec,
    geom: &LatticeGeometry,
    j0: f64,
    k: usize,
    t: f64,
) -> Result<Complex64> {
    Ok(Complex64::from_polar(j0, chi(spec, geom, k, t)?))
}

/// Angle helper shared by the family builders and tests: `(−1)^n π/2`.
pub fn family_phase_offset(n: u32) -> f64 {
    if n % 2 == 0 {
        FRAC_PI_2
    } else {
        -FRAC_PI_2
    }
}
