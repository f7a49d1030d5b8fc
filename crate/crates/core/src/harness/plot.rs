//! Plain SVG charts: AIR versus launch power and correlation maps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{dbm_to_w, ExperimentConfig};
use super::run::RunRecord;
use crate::air::Receiver;
use crate::error::{Error, Result};
use crate::link::Scheme;
use crate::xpm::CorrelationGrid;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dash: Option<String>,
}

fn scheme_color(s: Scheme) -> &'static str {
    match s {
        Scheme::Ndm => "#1f77b4",
        Scheme::Dm => "#d62728",
        Scheme::Cdm => "#2ca02c",
    }
}

fn receiver_dash(r: Receiver) -> Option<&'static str> {
    match r {
        Receiver::Awgn => Some("7 4"),
        Receiver::Ar1 => None,
        Receiver::Hoar => Some("2 3"),
    }
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
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

    fn axes(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1) = (self.px(self.x.0), self.px(self.x.1));
        let (y0, y1) = (self.py(self.y.0), self.py(self.y.1));
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            x1 - x0,
            y0 - y1
        );
        for t in ticks(self.x.0, self.x.1) {
            let x = self.px(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"##,
                y0 + 5.0,
                y0 + 20.0,
                fmt_tick(t)
            );
        }
        for t in ticks(self.y.0, self.y.1) {
            let y = self.py(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="12">{}</text>"##,
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"##,
            (x0 + x1) / 2.0,
            escape(title)
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"##,
            (x0 + x1) / 2.0,
            HEIGHT - 14.0,
            escape(xlabel)
        );
        let _ = writeln!(
            svg,
            r##"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle" font-size="13">{}</text>"##,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">
<rect width="100%" height="100%" fill="white"/>
"#
    )
}

/// Line chart; points of each series are joined in order of increasing x.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let frame = Frame {
        x: padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))),
        y: padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))),
    };
    let mut svg = header();
    frame.axes(&mut svg, title, xlabel, ylabel);
    for (k, s) in series.iter().enumerate() {
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let dash = s
            .dash
            .as_ref()
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
            path.join(" "),
            s.color
        );
        for &(x, y) in &pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                frame.px(x),
                frame.py(y),
                s.color
            );
        }
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
            lx + 28.0,
            s.color,
            lx + 34.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// `log2(1 + SNR)` with only the accumulated ASE as noise.
pub fn awgn_capacity(cfg: &ExperimentConfig, power_dbm: f64) -> f64 {
    let link = cfg.link.spec(Scheme::Ndm, cfg.wdm.grid_spacing_hz);
    let noise = link.n_spans as f64 * link.ase_psd() * cfg.wdm.symbol_rate_baud;
    (1.0 + dbm_to_w(power_dbm) / noise).log2()
}

/// AIR versus launch power, one series per (scheme, receiver), plus an
/// optional reference curve.
pub fn render_air_plot(records: &[RunRecord], reference: &[(f64, f64)], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    let mut keys: Vec<(Scheme, Receiver)> = records.iter().map(|r| (r.scheme, r.receiver)).collect();
    keys.sort();
    keys.dedup();
    let mut series: Vec<Series> = keys
        .iter()
        .map(|&(s, r)| Series {
            label: format!("{} / {}", s.name().to_uppercase(), r.name().to_uppercase()),
            points: records
                .iter()
                .filter(|x| x.scheme == s && x.receiver == r)
                .filter_map(|x| x.air().map(|a| (x.power_dbm, a)))
                .collect(),
            color: scheme_color(s).into(),
            dash: receiver_dash(r).map(str::to_string),
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    if !reference.is_empty() {
        series.push(Series {
            label: "AWGN capacity".into(),
            points: reference.to_vec(),
            color: "#000000".into(),
            dash: Some("1 3".into()),
        });
    }
    let svg = line_chart("AIR versus launch power", "launch power per channel (dBm)", "AIR (bits/symbol)", &series);
    std::fs::write(path, svg)?;
    Ok(())
}

/// Colour for a value in `[0, 1]` (white to dark blue).
fn shade(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let r = (255.0 * (1.0 - 0.9 * v)) as u8;
    let g = (255.0 * (1.0 - 0.75 * v)) as u8;
    let b = (255.0 * (1.0 - 0.35 * v)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Iso-line segments of a row-major field (`rows` x `cols`) at `level`,
/// in fractional (row, col) coordinates.
fn iso_segments(field: &[f64], rows: usize, cols: usize, level: f64) -> Vec<[(f64, f64); 2]> {
    let at = |i: usize, j: usize| field[i * cols + j];
    let mut out = Vec::new();
    for i in 0..rows.saturating_sub(1) {
        for j in 0..cols.saturating_sub(1) {
            let corners = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)];
            let mut cuts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (corners[e], corners[(e + 1) % 4]);
                let (va, vb) = (at(a.0, a.1), at(b.0, b.1));
                if (va < level) != (vb < level) {
                    let t = (level - va) / (vb - va);
                    cuts.push((
                        a.0 as f64 + t * (b.0 as f64 - a.0 as f64),
                        a.1 as f64 + t * (b.1 as f64 - a.1 as f64),
                    ));
                }
            }
            for pair in cuts.chunks_exact(2) {
                out.push([pair[0], pair[1]]);
            }
        }
    }
    out
}

/// Filled map of `|R| / peak` over (lag, frequency offset) with iso-lines.
pub fn contour_svg(grid: &CorrelationGrid) -> String {
    let rows = grid.delta_f.len();
    let cols = grid.tau.len();
    let norm = if grid.peak > 0.0 { grid.peak } else { 1.0 };
    let field: Vec<f64> = grid.values.iter().map(|v| v.norm() / norm).collect();
    let taus: Vec<f64> = grid.tau.iter().map(|t| t * 1e12).collect();
    let dfs: Vec<f64> = grid.delta_f.iter().map(|f| f * 1e-9).collect();
    let frame = Frame {
        x: padded_range(taus.iter().copied()),
        y: padded_range(dfs.iter().copied()),
    };
    let mut svg = header();
    let half = |axis: &[f64], k: usize| -> (f64, f64) {
        let lo = if k == 0 { axis[0] } else { 0.5 * (axis[k - 1] + axis[k]) };
        let hi = if k + 1 == axis.len() { axis[k] } else { 0.5 * (axis[k] + axis[k + 1]) };
        (lo, hi)
    };
    for i in 0..rows {
        let (f0, f1) = half(&dfs, i);
        for j in 0..cols {
            let (t0, t1) = half(&taus, j);
            let (x0, x1) = (frame.px(t0), frame.px(t1));
            let (y0, y1) = (frame.py(f1), frame.py(f0));
            let _ = writeln!(
                svg,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                (x1 - x0).max(0.5),
                (y1 - y0).max(0.5),
                shade(field[i * cols + j])
            );
        }
    }
    let lerp = |axis: &[f64], u: f64| {
        let k = (u.floor() as usize).min(axis.len() - 1);
        let k1 = (k + 1).min(axis.len() - 1);
        axis[k] + (u - k as f64) * (axis[k1] - axis[k])
    };
    for level in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for [a, b] in iso_segments(&field, rows, cols, level) {
            let _ = writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#222" stroke-width="0.8"/>"##,
                frame.px(lerp(&taus, a.1)),
                frame.py(lerp(&dfs, a.0)),
                frame.px(lerp(&taus, b.1)),
                frame.py(lerp(&dfs, b.0))
            );
        }
    }
    frame.axes(
        &mut svg,
        &format!("{} |R(0, df, tau)| / peak", grid.scheme.name().to_uppercase()),
        "tau (ps)",
        "delta f (GHz)",
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes `<scheme>_contour.svg`, `<scheme>_tau0.svg` and `<scheme>_df0.svg`.
pub fn render_correlation(grid: &CorrelationGrid, dir: &Path) -> Result<Vec<PathBuf>> {
    if grid.values.is_empty() {
        return Err(Error::Config("empty correlation grid".into()));
    }
    std::fs::create_dir_all(dir)?;
    let name = grid.scheme.name();
    let contour = dir.join(format!("{name}_contour.svg"));
    std::fs::write(&contour, contour_svg(grid))?;
    let mut paths = vec![contour];
    paths.extend(render_sections(std::slice::from_ref(grid), dir, name)?);
    Ok(paths)
}

/// Cross-sections at `tau = 0` and `delta_f = 0`, every grid normalized by
/// the largest peak among them so schemes compare on one scale.
pub fn render_sections(grids: &[CorrelationGrid], dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    if grids.is_empty() {
        return Err(Error::Config("no correlation grids".into()));
    }
    let norm = grids.iter().map(|g| g.peak).fold(0.0, f64::max);
    let norm = if norm > 0.0 { norm } else { 1.0 };
    let tau0: Vec<Series> = grids
        .iter()
        .map(|g| Series {
            label: g.scheme.name().to_uppercase(),
            points: g
                .delta_f
                .iter()
                .map(|f| f * 1e-9)
                .zip(CorrelationGrid::normalized(&g.tau0_section(), norm))
                .collect(),
            color: scheme_color(g.scheme).into(),
            dash: None,
        })
        .collect();
    let df0: Vec<Series> = grids
        .iter()
        .map(|g| Series {
            label: g.scheme.name().to_uppercase(),
            points: g
                .tau
                .iter()
                .map(|t| t * 1e12)
                .zip(CorrelationGrid::normalized(&g.df0_section(), norm))
                .collect(),
            color: scheme_color(g.scheme).into(),
            dash: None,
        })
        .collect();
    let a = dir.join(format!("{stem}_tau0.svg"));
    let b = dir.join(format!("{stem}_df0.svg"));
    std::fs::write(&a, line_chart("|R(0, df, 0)|, normalized", "delta f (GHz)", "correlation", &tau0))?;
    std::fs::write(&b, line_chart("|R(0, 0, tau)|, normalized", "tau (ps)", "correlation", &df0))?;
    Ok(vec![a, b])
}
