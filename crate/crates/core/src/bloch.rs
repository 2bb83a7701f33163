//! Two-band Bloch Hamiltonians on the hexagonal lattice and their topology.
//!
//! Momenta are addressed in reduced coordinates `k = x1 G1 + x2 G2`, so that
//! `k·b1 = 2π x1`, `k·b2 = 2π x2` and `k·b3 = −2π (x1 + x2)`. The Dirac points
//! sit at `(1/3, 1/3)` and `(2/3, 2/3)`.
//!
//! Chern numbers use the plaquette link-phase construction on a uniform torus
//! grid: each plaquette contributes the phase of the product of normalized
//! eigenvector overlaps around it, and the total is an exact integer multiple
//! of 2π as long as no plaquette phase approaches the branch cut.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::drive::LatticeGeometry;
use crate::effective::EffectiveRates;
use crate::error::{Error, Result};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DrivenHexagonal,
    HaldaneReference,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::DrivenHexagonal => "driven_hexagonal",
            ModelKind::HaldaneReference => "haldane_reference",
        }
    }
}

/// Anything that yields `(h0, h1, h2, h3)` with `H = h0 + h·σ` over the
/// Brillouin-zone torus.
pub trait TwoBand: Sync {
    fn h_reduced(&self, x1: f64, x2: f64) -> [f64; 4];

    /// Energy scale for the gap-closure threshold.
    fn energy_scale(&self) -> f64;
}

/// Isotropic two-band model with NN amplitude `j1` and NNN rate `j2 e^{iφ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochModel {
    pub kind: ModelKind,
    /// On-site offset entering `h3` (already including any drive shift).
    pub delta: f64,
    pub j1: f64,
    pub j2: f64,
    pub phi: f64,
    pub geom: LatticeGeometry,
}

impl BlochModel {
    pub fn new(kind: ModelKind, delta: f64, j1: f64, j2: f64, phi: f64) -> Result<Self> {
        if !(j1 > 0.0) {
            return Err(Error::InvalidParameter(format!("j1 must be positive, got {j1}")));
        }
        if !(j2 >= 0.0) {
            return Err(Error::InvalidParameter(format!("j2 must be non-negative, got {j2}")));
        }
        if !delta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidParameter("delta and phi must be finite".into()));
        }
        Ok(Self { kind, delta, j1, j2, phi, geom: LatticeGeometry::unit() })
    }

    pub fn with_geometry(mut self, geom: LatticeGeometry) -> Self {
        self.geom = geom;
        self
    }

    /// Driven-hexagonal model of a set of effective rates, with
    /// `Δ_eff = delta + delta_shift`. An undefined phase is taken as 0.
    pub fn from_rates(rates: &EffectiveRates, delta: f64) -> Result<Self> {
        Self::new(
            ModelKind::DrivenHexagonal,
            rates.delta_eff(delta),
            rates.j1,
            rates.j2,
            rates.phi.unwrap_or(0.0),
        )
    }

    /// `(h0, h1, h2, h3)` at Cartesian momentum `k`.
    pub fn h_vector(&self, k: Vec2) -> [f64; 4] {
        let b = self.geom.nnn;
        let p1 = k[0] * b[0][0] + k[1] * b[0][1];
        let p2 = k[0] * b[1][0] + k[1] * b[1][1];
        let p3 = k[0] * b[2][0] + k[1] * b[2][1];
        self.h_from_phases(p1, p2, p3)
    }

    fn h_from_phases(&self, p1: f64, p2: f64, p3: f64) -> [f64; 4] {
        let h1 = self.j1 * (1.0 + p1.cos() + p2.cos());
        let h2 = self.j1 * (p1.sin() - p2.sin());
        let h3 = self.delta
            + 2.0 * self.j2 * ((p1 + self.phi).cos() + (p2 + self.phi).cos() + (p3 + self.phi).cos());
        match self.kind {
            ModelKind::DrivenHexagonal => [0.0, h1, h2, h3],
            ModelKind::HaldaneReference => {
                let h0 = 2.0 * self.j2 * self.phi.cos() * (p1.cos() + p2.cos() + p3.cos());
                [h0, h1, h2, h3 - h0]
            }
        }
    }

    /// `(ε₋, ε₊)` at Cartesian momentum `k`.
    pub fn band_energies(&self, k: Vec2) -> (f64, f64) {
        band_energies_of(self.h_vector(k))
    }
}

impl TwoBand for BlochModel {
    fn h_reduced(&self, x1: f64, x2: f64) -> [f64; 4] {
        self.h_from_phases(TAU * x1, TAU * x2, -TAU * (x1 + x2))
    }

    fn energy_scale(&self) -> f64 {
        self.j1
    }
}

/// `ε± = h0 ± |h|`.
pub fn band_energies_of(h: [f64; 4]) -> (f64, f64) {
    let r = (h[1] * h[1] + h[2] * h[2] + h[3] * h[3]).sqrt();
    (h[0] - r, h[0] + r)
}

fn direct_gap(h: [f64; 4]) -> f64 {
    2.0 * (h[1] * h[1] + h[2] * h[2] + h[3] * h[3]).sqrt()
}

/// Normalized eigenvector of `h·σ` for the lower (`upper = false`) or upper
/// band. Uses whichever of the two null-space formulas is better conditioned.
pub fn band_vector(h: [f64; 4], upper: bool) -> [Complex64; 2] {
    let [_, h1, h2, h3] = h;
    let r = (h1 * h1 + h2 * h2 + h3 * h3).sqrt();
    let lambda = if upper { r } else { -r };
    let a = [Complex64::new(h1, -h2), Complex64::new(lambda - h3, 0.0)];
    let b = [Complex64::new(h3 + lambda, 0.0), Complex64::new(h1, h2)];
    let na = a[0].norm_sqr() + a[1].norm_sqr();
    let nb = b[0].norm_sqr() + b[1].norm_sqr();
    let (v, n) = if na >= nb { (a, na) } else { (b, nb) };
    if n == 0.0 {
        // h = 0: any basis vector; the gap check rejects this point anyway.
        return if upper {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        } else {
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
        };
    }
    let s = n.sqrt();
    [v[0] / s, v[1] / s]
}

/// Per-point band energies on the uniform grid `k = (m/N1) G1 + (n/N2) G2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandScan {
    pub n1: usize,
    pub n2: usize,
    /// `(ε₋, ε₊)` at index `m * n2 + n`.
    pub energies: Vec<(f64, f64)>,
    pub min_gap: f64,
    /// Reduced coordinates of the smallest gap.
    pub min_gap_at: [f64; 2],
}

pub fn band_scan(model: &impl TwoBand, n1: usize, n2: usize) -> BandScan {
    let energies: Vec<(f64, f64)> = (0..n1 * n2)
        .map(|idx| {
            let (m, n) = (idx / n2, idx % n2);
            band_energies_of(model.h_reduced(m as f64 / n1 as f64, n as f64 / n2 as f64))
        })
        .collect();
    let (best, gap) = energies
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| (i, hi - lo))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    BandScan {
        n1,
        n2,
        energies,
        min_gap: gap,
        min_gap_at: [(best / n2) as f64 / n1 as f64, (best % n2) as f64 / n2 as f64],
    }
}

/// A local minimum of the direct gap after refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub gap: f64,
    /// Reduced coordinates in [0, 1)².
    pub reduced: [f64; 2],
}

impl GapPoint {
    pub fn momentum(&self, geom: &LatticeGeometry) -> Vec2 {
        geom.momentum(self.reduced[0], self.reduced[1])
    }

    /// `(k·b1, k·b2)` wrapped to (−π, π].
    pub fn bond_phases(&self) -> [f64; 2] {
        [crate::wrap_angle(TAU * self.reduced[0]), crate::wrap_angle(TAU * self.reduced[1])]
    }
}

const REFINE_LEVELS: usize = 2;
const REFINE_FACTOR: usize = 8;
const MAX_REFINED_MINIMA: usize = 4;

fn refine(model: &impl TwoBand, start: [f64; 2], cell: [f64; 2], start_gap: f64) -> GapPoint {
    let mut best = GapPoint { gap: start_gap, reduced: start };
    let mut cell = cell;
    for _ in 0..REFINE_LEVELS {
        let step = [cell[0] / REFINE_FACTOR as f64, cell[1] / REFINE_FACTOR as f64];
        let centre = best.reduced;
        let span = REFINE_FACTOR as i64;
        for a in -span..=span {
            for b in -span..=span {
                let x = [centre[0] + a as f64 * step[0], centre[1] + b as f64 * step[1]];
                let gap = direct_gap(model.h_reduced(x[0], x[1]));
                if gap < best.gap {
                    best = GapPoint { gap, reduced: x };
                }
            }
        }
        cell = step;
    }
    best.reduced = [best.reduced[0].rem_euclid(1.0), best.reduced[1].rem_euclid(1.0)];
    best
}

fn coarse_gaps(model: &impl TwoBand, n1: usize, n2: usize) -> Vec<f64> {
    (0..n1 * n2)
        .map(|idx| {
            let (m, n) = (idx / n2, idx % n2);
            direct_gap(model.h_reduced(m as f64 / n1 as f64, n as f64 / n2 as f64))
        })
        .collect()
}

fn local_minima(gaps: &[f64], n1: usize, n2: usize) -> Vec<usize> {
    let mut minima: Vec<usize> = (0..n1 * n2)
        .filter(|&idx| {
            let (m, n) = (idx / n2, idx % n2);
            let g = gaps[idx];
            let mut strict_somewhere = false;
            for (dm, dn) in [(1, 0), (n1 - 1, 0), (0, 1), (0, n2 - 1), (1, 1), (n1 - 1, n2 - 1), (1, n2 - 1), (n1 - 1, 1)] {
                let other = gaps[((m + dm) % n1) * n2 + (n + dn) % n2];
                if other < g {
                    return false;
                }
                if other > g {
                    strict_somewhere = true;
                }
            }
            strict_somewhere
        })
        .collect();
    minima.sort_by(|&a, &b| gaps[a].total_cmp(&gaps[b]).then(a.cmp(&b)));
    minima
}

fn refined_minima(model: &impl TwoBand, gaps: &[f64], n1: usize, n2: usize) -> Vec<GapPoint> {
    let cell = [1.0 / n1 as f64, 1.0 / n2 as f64];
    let mut minima = local_minima(gaps, n1, n2);
    if minima.is_empty() {
        // Flat gap: every point is equivalent.
        minima.push(0);
    }
    let mut points: Vec<GapPoint> = minima
        .into_iter()
        .take(MAX_REFINED_MINIMA)
        .map(|idx| {
            let start = [(idx / n2) as f64 * cell[0], (idx % n2) as f64 * cell[1]];
            refine(model, start, cell, gaps[idx])
        })
        .collect();
    points.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    points
}

fn check_grid(n1: usize, n2: usize, min: usize) -> Result<()> {
    if n1 < min || n2 < min {
        return Err(Error::InvalidParameter(format!("grid {n1}x{n2} is below the minimum {min}x{min}")));
    }
    Ok(())
}

/// Local minima of the direct gap, refined twice by a factor of 8 around
/// each coarse minimum, smallest first.
pub fn gap_minima(model: &impl TwoBand, n1: usize, n2: usize) -> Result<Vec<GapPoint>> {
    check_grid(n1, n2, 3)?;
    let gaps = coarse_gaps(model, n1, n2);
    Ok(refined_minima(model, &gaps, n1, n2))
}

/// Smallest direct gap `ε₊ − ε₋` over the Brillouin zone and its location.
pub fn min_gap(model: &impl TwoBand, n1: usize, n2: usize) -> Result<GapPoint> {
    Ok(gap_minima(model, n1, n2)?[0])
}

/// Relative gap threshold below which the Chern number is not reported.
pub const CLOSURE_THRESHOLD: f64 = 1e-6;

/// Largest tolerated plaquette phase. Beyond it a single plaquette may wrap
/// across the branch cut and the integer is not trustworthy.
pub const FLUX_LIMIT: f64 = 0.75 * PI;

/// Overall sign applied to the raw plaquette sum, chosen so that the
/// driven-hexagonal lowest band at `φ = π/2, Δ = 0` has `C = +1`. Reversing
/// the orientation of the `(G1, G2)` torus flips every sign.
pub const ORIENTATION: f64 = -1.0;

/// Raw result of the plaquette construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaquetteSum {
    pub chern: i32,
    /// Unrounded `Σ F / 2π` with the orientation applied.
    pub raw: f64,
    /// Largest `|F|` over plaquettes.
    pub max_flux: f64,
}

/// Plaquette Chern number of a band given its normalized eigenvectors on an
/// `n1 × n2` periodic grid, stored at `m * n2 + n`.
pub fn plaquette_chern(n1: usize, n2: usize, vectors: &[[Complex64; 2]]) -> PlaquetteSum {
    assert_eq!(vectors.len(), n1 * n2, "eigenvector grid has the wrong size");
    let link = |a: usize, b: usize| -> Complex64 {
        let (u, v) = (vectors[a], vectors[b]);
        let z = u[0].conj() * v[0] + u[1].conj() * v[1];
        let n = z.norm();
        if n > 0.0 {
            z / n
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    let mut total = 0.0;
    let mut max_flux: f64 = 0.0;
    for m in 0..n1 {
        let mp = (m + 1) % n1;
        for n in 0..n2 {
            let np = (n + 1) % n2;
            let (p00, p10, p11, p01) = (m * n2 + n, mp * n2 + n, mp * n2 + np, m * n2 + np);
            let flux = (link(p00, p10) * link(p10, p11) * link(p11, p01) * link(p01, p00)).arg();
            max_flux = max_flux.max(flux.abs());
            total += flux;
        }
    }
    let raw = ORIENTATION * total / TAU;
    PlaquetteSum { chern: raw.round() as i32, raw, max_flux }
}

/// Eigenvectors of one band on the uniform grid.
pub fn band_vectors(model: &impl TwoBand, n1: usize, n2: usize, upper: bool) -> Vec<[Complex64; 2]> {
    (0..n1 * n2)
        .map(|idx| {
            let (m, n) = (idx / n2, idx % n2);
            band_vector(model.h_reduced(m as f64 / n1 as f64, n as f64 / n2 as f64), upper)
        })
        .collect()
}

/// Chern number of the lower (`upper = false`) or upper band.
///
/// Refuses with [`Error::GapClosed`] when the refined minimum gap is below
/// `1e-6` times the model's energy scale, and with
/// [`Error::AmbiguousPlaquette`] when a plaquette phase exceeds
/// [`FLUX_LIMIT`].
pub fn band_chern(model: &impl TwoBand, n1: usize, n2: usize, upper: bool) -> Result<i32> {
    check_grid(n1, n2, 12)?;
    let gaps = coarse_gaps(model, n1, n2);
    let gap = refined_minima(model, &gaps, n1, n2)[0].gap;
    let threshold = CLOSURE_THRESHOLD * model.energy_scale();
    if !(gap > threshold) {
        return Err(Error::GapClosed { gap, threshold });
    }
    let sum = plaquette_chern(n1, n2, &band_vectors(model, n1, n2, upper));
    if sum.max_flux > FLUX_LIMIT {
        return Err(Error::AmbiguousPlaquette { max_flux: sum.max_flux });
    }
    Ok(sum.chern)
}

/// Chern number of the lowest band.
pub fn chern_number(model: &impl TwoBand, n1: usize, n2: usize) -> Result<i32> {
    band_chern(model, n1, n2, false)
}

/// Chern number from the signs of the Dirac masses `h3(K)` and `h3(K')`.
///
/// Only valid for models whose NN terms vanish exactly at the two Dirac
/// points, which holds for both kinds of [`BlochModel`]. Returns `None` at a
/// closure. Serves as an oracle independent of the plaquette sum.
pub fn dirac_mass_chern(model: &BlochModel) -> Option<i32> {
    let mk = model.h_reduced(1.0 / 3.0, 1.0 / 3.0)[3];
    let mkp = model.h_reduced(2.0 / 3.0, 2.0 / 3.0)[3];
    if mk == 0.0 || mkp == 0.0 {
        return None;
    }
    Some(((mkp.signum() - mk.signum()) / 2.0) as i32)
}

/// Gap-closure lines of the driven-hexagonal model: `Δ/j2 = −6 cos(φ ± 2π/3)`.
pub fn driven_boundaries(phi: f64) -> [f64; 2] {
    [-6.0 * (phi + TAU / 3.0).cos(), -6.0 * (phi - TAU / 3.0).cos()]
}

/// Gap-closure lines of the Haldane reference: `Δ/j2 = ±3√3 sin φ`.
pub fn haldane_boundaries(phi: f64) -> [f64; 2] {
    let v = 3.0 * 3f64.sqrt() * phi.sin();
    [v, -v]
}

/// Uniform, inclusive parameter axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub values: Vec<f64>,
}

impl Axis {
    pub fn linspace(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidParameter("axis needs finite bounds and at least one point".into()));
        }
        if count == 1 {
            return Ok(Self { values: vec![start] });
        }
        let step = (stop - start) / (count - 1) as f64;
        Ok(Self { values: (0..count).map(|i| start + step * i as f64).collect() })
    }

    /// `start:stop:step`, keeping `stop` when it is reached within 1e-9 of a
    /// step.
    pub fn stepped(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::InvalidParameter(format!("bad range {start}:{stop}:{step}")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(Self { values: (0..count).map(|i| start + step * i as f64).collect() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        if self.values.len() < 2 {
            0.0
        } else {
            (self.values[self.values.len() - 1] - self.values[0]) / (self.values.len() - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramCell {
    pub phi: f64,
    pub ratio: f64,
    /// Lowest-band Chern number; `None` when indeterminate.
    pub chern: Option<i32>,
    pub min_gap: f64,
}

impl DiagramCell {
    pub fn indeterminate(&self) -> bool {
        self.chern.is_none()
    }
}

/// Chern number of the lowest band over (φ, Δ_eff/j2).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernDiagram {
    pub kind: ModelKind,
    pub phi: Axis,
    pub ratio: Axis,
    /// Cell `(i, j)` at `i * ratio.len() + j`.
    pub cells: Vec<DiagramCell>,
}

impl ChernDiagram {
    pub fn cell(&self, i_phi: usize, i_ratio: usize) -> &DiagramCell {
        &self.cells[i_phi * self.ratio.len() + i_ratio]
    }

    /// CSV with columns `phi,ratio,chern,min_gap,indeterminate`; an
    /// indeterminate cell leaves `chern` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi,ratio,chern,min_gap,indeterminate\n");
        for c in &self.cells {
            let chern = c.chern.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{:e},{}", c.phi, c.ratio, chern, c.min_gap, c.indeterminate() as u8);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramSettings {
    pub phi: Axis,
    pub ratio: Axis,
    pub n1: usize,
    pub n2: usize,
    /// `j2/j1` used to realize the ratio axis; the diagram itself depends
    /// only on `Δ/j2` and φ.
    pub j2_over_j1: f64,
}

impl Default for DiagramSettings {
    fn default() -> Self {
        Self {
            phi: Axis::linspace(-PI, PI, 97).expect("static axis"),
            ratio: Axis::linspace(-8.0, 8.0, 97).expect("static axis"),
            n1: 48,
            n2: 48,
            j2_over_j1: 0.25,
        }
    }
}

fn diagram_cell(model: &BlochModel, n1: usize, n2: usize) -> (Option<i32>, f64) {
    let gaps = coarse_gaps(model, n1, n2);
    let gap = refined_minima(model, &gaps, n1, n2)[0].gap;
    if !(gap > CLOSURE_THRESHOLD * model.j1) {
        return (None, gap);
    }
    let sum = plaquette_chern(n1, n2, &band_vectors(model, n1, n2, false));
    if sum.max_flux > FLUX_LIMIT {
        return (None, gap);
    }
    (Some(sum.chern), gap)
}

/// Scans the phase diagram for one model kind. Cells are independent, so the
/// scan runs as a parallel map whose output does not depend on scheduling.
pub fn phase_diagram(kind: ModelKind, settings: &DiagramSettings) -> Result<ChernDiagram> {
    check_grid(settings.n1, settings.n2, 12)?;
    if !(settings.j2_over_j1 > 0.0) {
        return Err(Error::InvalidParameter("j2/j1 must be positive".into()));
    }
    let j1 = 1.0;
    let j2 = settings.j2_over_j1;
    let nr = settings.ratio.len();
    let cells = (0..settings.phi.len() * nr)
        .into_par_iter()
        .map(|idx| {
            let phi = settings.phi.values[idx / nr];
            let ratio = settings.ratio.values[idx % nr];
            let model = BlochModel::new(kind, ratio * j2, j1, j2, phi)?;
            let (chern, min_gap) = diagram_cell(&model, settings.n1, settings.n2);
            Ok(DiagramCell { phi, ratio, chern, min_gap: min_gap / j2 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChernDiagram { kind, phi: settings.phi.clone(), ratio: settings.ratio.clone(), cells })
}

/// Both diagrams, driven-hexagonal first, for overlay.
pub fn phase_diagrams(settings: &DiagramSettings) -> Result<[ChernDiagram; 2]> {
    Ok([
        phase_diagram(ModelKind::DrivenHexagonal, settings)?,
        phase_diagram(ModelKind::HaldaneReference, settings)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn driven(delta: f64, j2: f64, phi: f64) -> BlochModel {
        BlochModel::new(ModelKind::DrivenHexagonal, delta, 1.0, j2, phi).unwrap()
    }

    #[test]
    fn h_vector_at_gamma() {
        let m = driven(0.3, 0.2, 0.7);
        let h = m.h_vector([0.0, 0.0]);
        assert_abs_diff_eq!(h[1], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h[2], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h[3], 0.3 + 6.0 * 0.2 * 0.7f64.cos(), epsilon = 1e-14);
    }

    #[test]
    fn h_vector_at_dirac_point() {
        let m = driven(0.3, 0.2, 0.7);
        let k = m.geom.momentum(1.0 / 3.0, 1.0 / 3.0);
        let h = m.h_vector(k);
        assert_abs_diff_eq!(h[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h[2], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h[3], 0.3 + 1.2 * (0.7 + TAU / 3.0).cos(), epsilon = 1e-14);
        // Reduced and Cartesian evaluation agree.
        let r = m.h_reduced(1.0 / 3.0, 1.0 / 3.0);
        for i in 0..4 {
            assert_abs_diff_eq!(r[i], h[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn kinds_coincide_at_quarter_phase() {
        for phi in [FRAC_PI_2, -FRAC_PI_2] {
            let a = driven(0.4, 0.3, phi);
            let b = BlochModel { kind: ModelKind::HaldaneReference, ..a };
            for (x1, x2) in [(0.1, 0.7), (0.33, 0.2), (0.9, 0.45)] {
                let (ha, hb) = (a.h_reduced(x1, x2), b.h_reduced(x1, x2));
                for i in 0..4 {
                    assert_abs_diff_eq!(ha[i], hb[i], epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn band_energy_examples() {
        assert_eq!(band_energies_of([0.0, 0.0, 0.0, 0.7]), (-0.7, 0.7));
        assert_eq!(band_energies_of([0.0, 0.0, 0.0, -0.7]), (-0.7, 0.7));
        let m = driven(0.0, 0.0, 0.0);
        let (lo, hi) = m.band_energies(m.geom.momentum(1.0 / 3.0, 1.0 / 3.0));
        assert!(lo.abs() < 1e-14 && hi.abs() < 1e-14);
        let m = driven(0.2, 0.1, 0.4);
        let k = [0.37, -1.2];
        let h = m.h_vector(k);
        let (lo, hi) = m.band_energies(k);
        assert_abs_diff_eq!(hi - lo, 2.0 * (h[1] * h[1] + h[2] * h[2] + h[3] * h[3]).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn band_vector_is_eigenvector() {
        for h in [[0.0, 0.3, -0.2, 0.5], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, -1.0], [0.0, 1.0, 1.0, 0.0]] {
            for upper in [false, true] {
                let v = band_vector(h, upper);
                let r = (h[1] * h[1] + h[2] * h[2] + h[3] * h[3]).sqrt();
                let lambda = if upper { r } else { -r };
                let hv0 = Complex64::new(h[3], 0.0) * v[0] + Complex64::new(h[1], -h[2]) * v[1];
                let hv1 = Complex64::new(h[1], h[2]) * v[0] - Complex64::new(h[3], 0.0) * v[1];
                assert!((hv0 - lambda * v[0]).norm() < 1e-14);
                assert!((hv1 - lambda * v[1]).norm() < 1e-14);
                assert_abs_diff_eq!(v[0].norm_sqr() + v[1].norm_sqr(), 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn gapped_graphene_gap() {
        let m = driven(0.4, 0.0, 0.0);
        let g = min_gap(&m, 48, 48).unwrap();
        assert_abs_diff_eq!(g.gap, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn boundary_closes_the_gap() {
        let j2 = 0.2;
        let m = driven(3.0 * 3f64.sqrt() * j2, j2, FRAC_PI_2);
        assert!(min_gap(&m, 48, 48).unwrap().gap < 1e-3 * j2);
        let m = driven(0.0, 0.1, 0.0);
        assert!(min_gap(&m, 48, 48).unwrap().gap > 0.0);
    }

    #[test]
    fn dirac_points_found() {
        let m = driven(0.0, 0.0, 0.0);
        let minima = gap_minima(&m, 48, 48).unwrap();
        let zeros: Vec<_> = minima.iter().filter(|p| p.gap < 1e-6).collect();
        assert_eq!(zeros.len(), 2);
        let mut phases: Vec<[f64; 2]> = zeros.iter().map(|p| p.bond_phases()).collect();
        phases.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_abs_diff_eq!(phases[0][0], -TAU / 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(phases[0][1], -TAU / 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(phases[1][0], TAU / 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(phases[1][1], TAU / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn orientation_is_pinned() {
        assert_eq!(chern_number(&driven(0.0, 0.25, FRAC_PI_2), 24, 24).unwrap(), 1);
        assert_eq!(chern_number(&driven(0.0, 0.25, -FRAC_PI_2), 24, 24).unwrap(), -1);
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(chern_number(&driven(0.5, 0.0, 0.3), 24, 24).unwrap(), 0);
        assert_eq!(chern_number(&driven(6.0 * 0.25, 0.25, FRAC_PI_2), 24, 24).unwrap(), 0);
    }

    #[test]
    fn chern_refuses_closed_gap_and_small_grid() {
        let j2 = 0.2;
        let m = driven(3.0 * 3f64.sqrt() * j2, j2, FRAC_PI_2);
        assert!(matches!(chern_number(&m, 48, 48), Err(Error::GapClosed { .. })));
        assert!(matches!(chern_number(&driven(0.0, 0.2, 1.0), 8, 8), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn upper_and_lower_sum_to_zero() {
        for (delta, phi) in [(0.0, 1.0), (0.3, -2.0), (1.7, 0.5)] {
            let m = driven(delta, 0.3, phi);
            let lo = band_chern(&m, 24, 24, false).unwrap();
            let hi = band_chern(&m, 24, 24, true).unwrap();
            assert_eq!(lo + hi, 0);
        }
    }

    #[test]
    fn mass_oracle_matches_plaquettes() {
        for &(delta, phi) in &[(0.0, 1.0), (0.5, 2.0), (-0.7, -0.4), (2.0, 1.5), (-1.0, -2.5)] {
            for kind in [ModelKind::DrivenHexagonal, ModelKind::HaldaneReference] {
                let m = BlochModel::new(kind, delta, 1.0, 0.3, phi).unwrap();
                assert_eq!(chern_number(&m, 36, 36).ok(), dirac_mass_chern(&m), "{kind:?} {delta} {phi}");
            }
        }
    }

    #[test]
    fn axes() {
        let a = Axis::stepped(0.0, 3.5, 0.05).unwrap();
        assert_eq!(a.len(), 71);
        assert_abs_diff_eq!(*a.values.last().unwrap(), 3.5, epsilon = 1e-12);
        assert_eq!(Axis::stepped(1.0, 1.0, 0.5).unwrap().len(), 1);
        assert!(Axis::stepped(0.0, 1.0, 0.0).is_err());
        assert!(Axis::stepped(1.0, 0.0, 0.1).is_err());
        let l = Axis::linspace(-8.0, 8.0, 97).unwrap();
        assert_abs_diff_eq!(l.spacing(), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn small_diagram_csv() {
        let settings = DiagramSettings {
            phi: Axis::linspace(-PI, PI, 5).unwrap(),
            ratio: Axis::linspace(-8.0, 8.0, 5).unwrap(),
            n1: 12,
            n2: 12,
            j2_over_j1: 0.25,
        };
        let d = phase_diagram(ModelKind::DrivenHexagonal, &settings).unwrap();
        let csv = d.to_csv();
        assert!(csv.starts_with("phi,ratio,chern,min_gap,indeterminate\n"));
        assert_eq!(csv.lines().count(), 26);
        assert_eq!(d.cell(3, 2).chern, Some(1));
    }
}
