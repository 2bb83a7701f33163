//! Effective tunneling rates of the truncated high-frequency expansion.
//!
//! The zeroth order keeps the period-averaged nearest-neighbor rates
//! `g⁰_k`. The first order, `(1/ω) Σ_n [H_n, H_{−n}]/n`, is diagonal in the
//! sublattice index and generates next-nearest-neighbor hopping `τ_1..τ_3`
//! plus an on-site term `τ_0`, all built from the pairing [`w_commutator`].

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::drive::{fourier_components, DriveSpec, FourierSeries, LatticeGeometry, TunnelingSpectrum};
use crate::error::{Error, Result};
use crate::wrap_angle;

/// Default relative isotropy tolerance.
pub const DEFAULT_ISO_TOL: f64 = 1e-8;

/// Below `PHI_FLOOR · j0` the NNN amplitude is treated as zero and its phase
/// as undefined.
pub const PHI_FLOOR: f64 = 1e-14;

/// `w(a, b) = Σ_{n ≥ 1} (a[−n] b[n] − b[−n] a[n]) / (n ω)`.
///
/// Swapping the arguments negates every summand, so the result is exactly
/// antisymmetric.
pub fn w_commutator(ga: &FourierSeries, gb: &FourierSeries, omega: f64) -> Result<Complex64> {
    if ga.n_max() != gb.n_max() {
        return Err(Error::ExtentMismatch { left: ga.n_max(), right: gb.n_max() });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 1..=ga.n_max() as i64 {
        let forward = ga.get(-n) * gb.get(n);
        let backward = gb.get(-n) * ga.get(n);
        acc += (forward - backward) / (n as f64 * omega);
    }
    Ok(acc)
}

/// `(τ_0, τ_1, τ_2, τ_3)` with `τ_0 = Σ_i w(a_i, −a_i)`, `τ_1 = w(a_2, −a_3)`,
/// `τ_2 = w(a_3, −a_1)` and `τ_3 = w(a_1, −a_2)`.
pub fn nnn_rates(spectrum: &TunnelingSpectrum) -> Result<[Complex64; 4]> {
    let omega = spectrum.omega;
    let fwd = &spectrum.g;
    let rev: Vec<FourierSeries> = fwd.iter().map(FourierSeries::reflected).collect();
    let mut tau0 = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        tau0 += w_commutator(&fwd[i], &rev[i], omega)?;
    }
    let tau1 = w_commutator(&fwd[1], &rev[2], omega)?;
    let tau2 = w_commutator(&fwd[2], &rev[0], omega)?;
    let tau3 = w_commutator(&fwd[0], &rev[1], omega)?;
    Ok([tau0, tau1, tau2, tau3])
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct IsotropyResiduals {
    /// Largest pairwise `||g⁰_i| − |g⁰_j||`.
    pub nn_magnitude: f64,
    /// Largest pairwise `|g⁰_i − g⁰_j|`; zero when a single sublattice phase
    /// removes every NN phase.
    pub nn_complex: f64,
    /// Largest pairwise `|τ_i − τ_j|`.
    pub nnn: f64,
}

/// Effective rates of one drive.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveRates {
    pub j0: f64,
    pub omega: f64,
    pub g0: [Complex64; 3],
    pub tau0: Complex64,
    pub tau: [Complex64; 3],
    pub j1: f64,
    pub j2: f64,
    /// `arg τ_1` in (−π, π]; `None` when `j2` vanishes.
    pub phi: Option<f64>,
    /// On-site renormalization added to `Δ` in the effective Bloch model.
    pub delta_shift: f64,
    /// Phase of the common NN rate, removed by `c_B → e^{iα} c_B`.
    pub gauge_phase: f64,
    pub isotropic_nn: bool,
    pub isotropic_nnn: bool,
    pub residuals: IsotropyResiduals,
}

impl EffectiveRates {
    /// `j1 / j0`.
    pub fn nn_ratio(&self) -> f64 {
        self.j1 / self.j0
    }

    /// The figure of merit `(j2/j1)(ω/j0)`.
    pub fn enhancement(&self) -> f64 {
        if self.j1 > 0.0 {
            self.j2 / self.j1 * self.omega / self.j0
        } else {
            f64::INFINITY
        }
    }

    pub fn is_isotropic(&self) -> bool {
        self.isotropic_nn && self.isotropic_nnn
    }

    pub fn delta_eff(&self, delta: f64) -> f64 {
        delta + self.delta_shift
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rates serialize")
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

impl Serialize for EffectiveRates {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EffectiveRates", 15)?;
        st.serialize_field("j0", &self.j0)?;
        st.serialize_field("omega", &self.omega)?;
        st.serialize_field("g0", &self.g0.map(pair))?;
        st.serialize_field("tau", &self.tau.map(pair))?;
        st.serialize_field("tau0", &pair(self.tau0))?;
        st.serialize_field("j1", &self.j1)?;
        st.serialize_field("j2", &self.j2)?;
        st.serialize_field("phi", &self.phi)?;
        st.serialize_field("delta_shift", &self.delta_shift)?;
        st.serialize_field("gauge_phase", &self.gauge_phase)?;
        st.serialize_field("isotropic_nn", &self.isotropic_nn)?;
        st.serialize_field("isotropic_nnn", &self.isotropic_nnn)?;
        st.serialize_field("residuals", &self.residuals)?;
        st.end()
    }
}

fn max_pairwise<T: Copy>(v: &[T; 3], dist: impl Fn(T, T) -> f64) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            m = m.max(dist(v[i], v[j]));
        }
    }
    m
}

/// Assembles [`EffectiveRates`] from a tunneling spectrum.
///
/// `iso_tol` is relative: NN residuals are compared with `iso_tol · j0`, NNN
/// residuals with `iso_tol · j0²/ω`. Anisotropic drives are reported through
/// the flags and residuals, not as errors.
pub fn derive_rates(spectrum: &TunnelingSpectrum, iso_tol: f64) -> Result<EffectiveRates> {
    if !(iso_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("isotropy tolerance must be positive, got {iso_tol}")));
    }
    let j0 = spectrum.j0;
    let omega = spectrum.omega;
    let [tau0, t1, t2, t3] = nnn_rates(spectrum)?;
    let tau = [t1, t2, t3];
    let g0 = [spectrum.g[0].get(0), spectrum.g[1].get(0), spectrum.g[2].get(0)];

    let residuals = IsotropyResiduals {
        nn_magnitude: max_pairwise(&g0, |a, b| (a.norm() - b.norm()).abs()),
        nn_complex: max_pairwise(&g0, |a, b| (a - b).norm()),
        nnn: max_pairwise(&tau, |a, b| (a - b).norm()),
    };
    let nn_scale = iso_tol * j0;
    let nnn_scale = iso_tol * j0 * j0 / omega;
    let isotropic_nn = residuals.nn_complex <= nn_scale;
    let isotropic_nnn = residuals.nnn <= nnn_scale;

    let mean_g0 = (g0[0] + g0[1] + g0[2]) / 3.0;
    let j1 = if isotropic_nn { mean_g0.norm() } else { (g0[0].norm() + g0[1].norm() + g0[2].norm()) / 3.0 };
    let gauge_phase = if mean_g0.norm() > 0.0 { mean_g0.arg() } else { 0.0 };

    let j2 = tau[0].norm();
    let phi = (j2 >= PHI_FLOOR * j0).then(|| wrap_angle(tau[0].arg()));

    Ok(EffectiveRates {
        j0,
        omega,
        g0,
        tau0,
        tau,
        j1,
        j2,
        phi,
        // The commutator places τ_0 once on each sublattice diagonal.
        delta_shift: tau0.re,
        gauge_phase,
        isotropic_nn,
        isotropic_nnn,
        residuals,
    })
}

/// Drive → spectrum → rates with default truncation and tolerance.
pub fn effective_rates(spec: &DriveSpec, geom: &LatticeGeometry, j0: f64) -> Result<EffectiveRates> {
    let spectrum = fourier_components(spec, geom, j0, None)?;
    derive_rates(&spectrum, DEFAULT_ISO_TOL)
}
