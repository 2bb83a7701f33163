//! Minimal SVG emitter: a cell heatmap with optional polyline overlays.

use std::fmt::Write as _;

use fcf_core::bloch::{driven_boundaries, haldane_boundaries, ChernDiagram, ModelKind};
use fcf_core::optimizer::{PhaseMap, CONTOUR_LEVELS};

const SIZE: f64 = 480.0;
const MARGIN: f64 = 56.0;

/// A heatmap over two uniform axes; `fill[i][j]` colors column `i`, row `j`.
struct Heatmap<'a> {
    title: String,
    x_label: &'a str,
    y_label: &'a str,
    x: &'a [f64],
    y: &'a [f64],
    fill: Vec<Vec<String>>,
    /// Polylines in data coordinates, with stroke color.
    lines: Vec<(Vec<(f64, f64)>, &'static str)>,
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let half = if v.len() > 1 { 0.5 * (hi - lo) / (v.len() - 1) as f64 } else { 0.5 };
    (lo - half, hi + half)
}

impl Heatmap<'_> {
    fn render(&self) -> String {
        let (x0, x1) = bounds(self.x);
        let (y0, y1) = bounds(self.y);
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * SIZE;
        let py = |y: f64| MARGIN + SIZE - (y - y0) / (y1 - y0) * SIZE;
        let (cw, ch) = (SIZE / self.x.len() as f64, SIZE / self.y.len() as f64);
        let total = SIZE + 2.0 * MARGIN;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, total / 2.0, self.title);
        for (i, col) in self.fill.iter().enumerate() {
            for (j, color) in col.iter().enumerate() {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{color}"/>"#,
                    px(self.x[i]) - cw / 2.0,
                    py(self.y[j]) - ch / 2.0,
                    cw,
                    ch
                );
            }
        }
        for (points, stroke) in &self.lines {
            if points.len() < 2 {
                continue;
            }
            let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
                coords.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
        );
        let base = MARGIN + SIZE;
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.1}">{:.3}</text>"#, base + 16.0, x0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, base, base + 16.0, x1);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, total / 2.0, base + 36.0, self.x_label);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, base, y0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, MARGIN + 10.0, y1);
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            total / 2.0,
            total / 2.0,
            self.y_label
        );
        s.push_str("</svg>\n");
        s
    }
}

/// Cyclic hue for a phase in (−π, π].
fn phase_color(phi: f64) -> String {
    let h = (phi + std::f64::consts::PI) / std::f64::consts::TAU * 6.0;
    let x = 1.0 - ((h % 2.0) - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let c = |v: f64| (55.0 + 200.0 * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(r), c(g), c(b))
}

/// Level-set segments of `value` on the grid (marching squares, one
/// polyline per crossing segment).
fn contour_segments(x: &[f64], y: &[f64], value: impl Fn(usize, usize) -> f64, level: f64) -> Vec<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for i in 0..x.len().saturating_sub(1) {
        for j in 0..y.len().saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let mut hits = Vec::new();
            for e in 0..4 {
                let (a, b) = (corners[e], corners[(e + 1) % 4]);
                let (va, vb) = (value(a.0, a.1) - level, value(b.0, b.1) - level);
                if (va >= 0.0) != (vb >= 0.0) {
                    let t = va / (va - vb);
                    let (xa, ya) = (x[a.0], y[a.1]);
                    let (xb, yb) = (x[b.0], y[b.1]);
                    hits.push((xa + t * (xb - xa), ya + t * (yb - ya)));
                }
            }
            for pair in hits.chunks(2) {
                if let [p, q] = pair {
                    out.push(vec![*p, *q]);
                }
            }
        }
    }
    out
}

pub fn phase_map_svg(map: &PhaseMap) -> String {
    let (n1, n2) = (map.a1.len(), map.a2.len());
    let fill = (0..n1)
        .map(|i| {
            (0..n2)
                .map(|j| map.cell(i, j).phi.map(phase_color).unwrap_or_else(|| "#ffffff".into()))
                .collect()
        })
        .collect();
    let mut lines = Vec::new();
    for (level, stroke) in CONTOUR_LEVELS.iter().zip(["white", "black"]) {
        for seg in contour_segments(&map.a1.values, &map.a2.values, |i, j| map.cell(i, j).j1_over_j0, *level) {
            lines.push((seg, stroke));
        }
    }
    Heatmap {
        title: format!("phase of the NNN rate, delta2 = {:.4}", map.delta2),
        x_label: "A1/omega",
        y_label: "A2/omega",
        x: &map.a1.values,
        y: &map.a2.values,
        fill,
        lines,
    }
    .render()
}

pub fn chern_svg(diagram: &ChernDiagram) -> String {
    let (n_phi, n_ratio) = (diagram.phi.len(), diagram.ratio.len());
    let fill = (0..n_phi)
        .map(|i| {
            (0..n_ratio)
                .map(|j| {
                    match diagram.cell(i, j).chern {
                        Some(1) => "#4e79a7",
                        Some(-1) => "#f28e2b",
                        Some(0) => "#ffffff",
                        Some(_) => "#e15759",
                        None => "#bab0ac",
                    }
                    .to_string()
                })
                .collect()
        })
        .collect();
    let (lo, hi) = (diagram.ratio.values[0], diagram.ratio.values[n_ratio - 1]);
    let mut lines = Vec::new();
    for branch in 0..2 {
        let curve: Vec<(f64, f64)> = diagram
            .phi
            .values
            .iter()
            .map(|&phi| {
                let b = match diagram.kind {
                    ModelKind::DrivenHexagonal => driven_boundaries(phi),
                    ModelKind::HaldaneReference => haldane_boundaries(phi),
                };
                (phi, b[branch].clamp(lo, hi))
            })
            .collect();
        lines.push((curve, "black"));
    }
    Heatmap {
        title: format!("Chern number, {} model", diagram.kind.label()),
        x_label: "phi",
        y_label: "Delta_eff / j2",
        x: &diagram.phi.values,
        y: &diagram.ratio.values,
        fill,
        lines,
    }
    .render()
}
