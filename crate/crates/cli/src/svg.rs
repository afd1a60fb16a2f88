//! Log-scale risk plots as plain SVG.
//!
//! Output depends only on the input tables, with coordinates printed to two
//! decimals, so the same tables always give the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use qfreq_core::report::TableRow;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// One chart: a title and its rows.
pub struct Panel<'a> {
    pub title: String,
    pub rows: &'a [TableRow],
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    top: f64,
}

impl Axes {
    fn x(&self, n: f64) -> f64 {
        let span = (self.x1 - self.x0).max(1.0);
        MARGIN_L + (n - self.x0) / span * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn y(&self, risk: f64) -> f64 {
        let span = (self.y1 - self.y0).max(1.0);
        self.top + MARGIN_T + (self.y1 - risk.log10()) / span * (PANEL_H - MARGIN_T - MARGIN_B)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// The bound drawn as a thin line: the `T₂` bound where it is positive,
/// otherwise the information-theoretic floor.
fn bound_of(row: &TableRow) -> f64 {
    if row.crb_ultimate > 0.0 {
        row.crb_ultimate
    } else {
        row.floor
    }
}

fn polyline(out: &mut String, axes: &Axes, points: &[(f64, f64)], style: &str) {
    let pts: Vec<String> = points
        .iter()
        .filter(|(_, r)| *r > 0.0 && r.is_finite())
        .map(|&(n, r)| format!("{:.2},{:.2}", axes.x(n), axes.y(r)))
        .collect();
    if pts.len() > 1 {
        let _ = writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, pts.join(" "));
    }
}

fn panel(out: &mut String, p: &Panel, top: f64) {
    let mut by_strategy: BTreeMap<&str, Vec<&TableRow>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for row in p.rows {
        if !by_strategy.contains_key(row.strategy.as_str()) {
            order.push(&row.strategy);
        }
        by_strategy.entry(&row.strategy).or_default().push(row);
    }
    let risks = p.rows.iter().map(|r| r.risk_mean).chain(p.rows.iter().map(bound_of));
    let logs: Vec<f64> = risks.filter(|r| *r > 0.0 && r.is_finite()).map(f64::log10).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    let (y0, y1) = if lo.is_finite() && hi.is_finite() { (lo, hi.max(lo + 1.0)) } else { (-1.0, 0.0) };
    let x0 = p.rows.iter().map(|r| r.n).min().unwrap_or(0) as f64;
    let x1 = p.rows.iter().map(|r| r.n).max().unwrap_or(1) as f64;
    let axes = Axes { x0, x1, y0, y1, top };

    let (l, r) = (MARGIN_L, PANEL_W - MARGIN_R);
    let (t, b) = (top + MARGIN_T, top + PANEL_H - MARGIN_B);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#, (l + r) / 2.0, top + 20.0, escape(&p.title));
    let _ = writeln!(out, r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, r - l, b - t);

    let step = ((y1 - y0) / 8.0).ceil().max(1.0) as i64;
    let mut e = y0 as i64;
    while e as f64 <= y1 {
        let y = axes.y(10f64.powi(e as i32));
        let _ = writeln!(out, r##"<line x1="{l:.2}" y1="{y:.2}" x2="{r:.2}" y2="{y:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">1e{e}</text>"#, l - 6.0, y + 4.0);
        e += step;
    }
    let mut ns: Vec<usize> = p.rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let every = ns.len().div_ceil(8).max(1);
    for n in ns.iter().step_by(every) {
        let x = axes.x(*n as f64);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{n}</text>"#, b + 16.0);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">N</text>"#, (l + r) / 2.0, b + 34.0);
    let _ = writeln!(out, r#"<text x="16" y="{:.2}" font-size="12" transform="rotate(-90 16 {:.2})" text-anchor="middle">Bayes risk</text>"#, (t + b) / 2.0, (t + b) / 2.0);

    // Bound line, taken from the first strategy (bounds other than the CRB do not depend on it).
    if let Some(first) = order.first() {
        let pts: Vec<(f64, f64)> = by_strategy[first].iter().map(|row| (row.n as f64, bound_of(row))).collect();
        polyline(out, &axes, &pts, r#"stroke="black" stroke-width="0.8""#);
    }
    for (i, name) in order.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = by_strategy[name].iter().map(|row| (row.n as f64, row.risk_mean)).collect();
        polyline(out, &axes, &pts, &format!(r#"stroke="{color}" stroke-width="1.6""#));
        for &(n, risk) in pts.iter().filter(|(_, r)| *r > 0.0 && r.is_finite()) {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, axes.x(n), axes.y(risk));
        }
        let ly = t + 14.0 + 18.0 * i as f64;
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.6"/>"#, r + 10.0, r + 30.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#, r + 36.0, ly + 4.0, escape(name));
    }
    let ly = t + 14.0 + 18.0 * order.len() as f64;
    let _ = writeln!(out, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="black" stroke-width="0.8"/>"#, r + 10.0, r + 30.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11">bound</text>"#, r + 36.0, ly + 4.0);
}

/// Renders panels stacked vertically.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_H * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W:.0}" height="{height:.0}" viewBox="0 0 {PANEL_W:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        panel(&mut out, p, PANEL_H * i as f64);
    }
    out.push_str("</svg>\n");
    out
}
