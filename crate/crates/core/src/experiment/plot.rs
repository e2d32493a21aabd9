//! Hand-written SVG charts. Output depends only on the table contents.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::run::{Provenance, RatioTable};
use crate::error::Result;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, title: &str, prov: &Provenance) {
    let config = serde_json::to_string(&prov.config)
        .expect("config serializes")
        .replace("--", "- -");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        "<!-- {} {} seed={} refine_k={} eps={} config={} -->",
        prov.tool, prov.version, prov.seed, prov.refine_k, prov.eps, config
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        escape(title)
    );
}

/// Padded `[lo, hi]` for an axis.
fn range(values: impl Iterator<Item = f64>, pad_fraction: f64) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if hi > lo {
        let pad = (hi - lo) * pad_fraction;
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str, integer_x: bool) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            out,
            r##"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="#000000"/>"##
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let y = self.py(yv);
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="#000000"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"##,
                x0 - 4.0,
                x0 - 6.0,
                y + 4.0,
                tick(yv)
            );
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            if integer_x && (xv - xv.round()).abs() > 1e-9 {
                continue;
            }
            let x = self.px(xv);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="#000000"/><text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"##,
                y0 + 4.0,
                y0 + 16.0,
                tick(xv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(xlabel)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Ratio against `N`, one polyline per lambda family, or `None` when no row
/// was computed.
pub fn ratio_plot_svg(table: &RatioTable) -> Option<String> {
    // (family label, points) in order of first appearance
    let mut series: Vec<(usize, String, Vec<(f64, f64)>)> = Vec::new();
    for row in &table.rows {
        let Some(r) = row.ratio() else { continue };
        let pos = match series.iter().position(|s| s.0 == row.family_index) {
            Some(p) => p,
            None => {
                series.push((row.family_index, row.family.clone(), Vec::new()));
                series.len() - 1
            }
        };
        series[pos].2.push((row.n as f64, r));
    }
    if series.is_empty() {
        return None;
    }
    for s in &mut series {
        s.2.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all = || series.iter().flat_map(|s| s.2.iter());
    let frame = Frame {
        x: range(all().map(|p| p.0), 0.05),
        y: range(all().map(|p| p.1), 0.1),
    };
    let mut out = String::new();
    header(&mut out, "||R mu||^2 / sum theta_j^2 against N", &table.provenance);
    frame.axes(&mut out, "N", "ratio", true);
    for (i, (_, label, pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                frame.px(x),
                frame.py(y)
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"<g class="legend"><line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{}</text></g>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    Some(out)
}

/// Bars of `||D_j(R mu)||^2` for `j = 0..N-1`.
pub fn spectrum_svg(title: &str, d_norms: &[f64], prov: &Provenance) -> String {
    let n = d_norms.len();
    let top = d_norms.iter().copied().fold(0.0, f64::max);
    let frame = Frame {
        x: (-0.5, n.max(1) as f64 - 0.5),
        y: (0.0, if top > 0.0 { top * 1.1 } else { 1.0 }),
    };
    let mut out = String::new();
    header(&mut out, title, prov);
    frame.axes(&mut out, "j", "||D_j(R mu)||^2", true);
    let width = (frame.px(1.0) - frame.px(0.0)) * 0.7;
    for (j, &v) in d_norms.iter().enumerate() {
        let x = frame.px(j as f64) - width / 2.0;
        let y = frame.py(v);
        let _ = writeln!(
            out,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{width:.2}" height="{:.2}" fill="#1f77b4"/>"##,
            frame.py(0.0) - y
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `ratio_vs_N.svg` and one `dj_case<id>.svg` per computed case.
pub fn emit_plots(table: &RatioTable, dir: &Path) -> Result<Vec<PathBuf>> {
    let Some(ratio) = ratio_plot_svg(table) else {
        log::warn!("no computed cases; no plots written");
        return Ok(Vec::new());
    };
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("ratio_vs_N.svg");
    std::fs::write(&path, ratio)?;
    written.push(path);
    for row in &table.rows {
        if let Some(dn) = row.d_norms() {
            let title = format!("case {} ({}, N = {})", row.case_id, row.family, row.n);
            let path = dir.join(format!("dj_case{}.svg", row.case_id));
            std::fs::write(&path, spectrum_svg(&title, dn, &table.provenance))?;
            written.push(path);
        }
    }
    Ok(written)
}
