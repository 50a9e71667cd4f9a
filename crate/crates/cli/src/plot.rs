//! Minimal SVG line/scatter plots rendered from figure CSV rows.

use std::fmt::Write as _;

use anyhow::{bail, Result};

use crate::io::FigureRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// Series drawn as markers instead of a polyline.
    pub scatter: &'a [&'a str],
    /// Series drawn dashed in black (reference curves).
    pub reference: &'a [&'a str],
}

struct Series<'a> {
    name: &'a str,
    raw: Vec<(&'a str, &'a str)>,
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Renders the rows; series keep their first-appearance order. Each series
/// element carries its CSV values verbatim in `data-x` / `data-y`.
pub fn render(rows: &[FigureRow], spec: &PlotSpec<'_>) -> Result<String> {
    let mut series: Vec<Series<'_>> = Vec::new();
    for row in rows {
        let x: f64 = row.x.parse()?;
        let y: f64 = row.y.parse()?;
        let idx = match series.iter().position(|s| s.name == row.series) {
            Some(i) => i,
            None => {
                series.push(Series {
                    name: &row.series,
                    raw: Vec::new(),
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        series[idx].raw.push((&row.x, &row.y));
        series[idx].points.push((x, y));
    }
    if series.is_empty() {
        bail!("figure has no data");
    }
    let finite = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
    };
    let (x_min, x_max) = padded_range(finite().map(|p| p.0));
    let (y_min, y_max) = padded_range(finite().map(|p| p.1));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-x-min="{x_min:e}" data-x-max="{x_max:e}" data-y-min="{y_min:e}" data-y-max="{y_max:e}">"#
    )?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(spec.title)
    )?;
    writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )?;
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        writeln!(
            out,
            r#"<text x="{:.3}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{:.3}</text>"#,
            px(fx),
            HEIGHT - BOTTOM + 16.0,
            fx
        )?;
        writeln!(
            out,
            r#"<text x="{}" y="{:.3}" text-anchor="end" font-family="sans-serif" font-size="11">{:.3e}</text>"#,
            LEFT - 6.0,
            py(fy) + 4.0,
            fy
        )?;
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(spec.x_label)
    )?;
    writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(spec.y_label)
    )?;

    for (i, s) in series.iter().enumerate() {
        let reference = spec.reference.contains(&s.name);
        let color = if reference { "black" } else { COLORS[i % COLORS.len()] };
        let data_x: Vec<&str> = s.raw.iter().map(|r| r.0).collect();
        let data_y: Vec<&str> = s.raw.iter().map(|r| r.1).collect();
        let pixels: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y.clamp(y_min, y_max))))
            .collect();
        if spec.scatter.contains(&s.name) {
            writeln!(
                out,
                r#"<g class="series" data-label="{}" data-x="{}" data-y="{}" fill="{color}">"#,
                escape(s.name),
                data_x.join(" "),
                data_y.join(" ")
            )?;
            for p in &pixels {
                let (cx, cy) = p.split_once(',').unwrap_or(("0", "0"));
                writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="2.5"/>"#)?;
            }
            writeln!(out, "</g>")?;
        } else {
            let dash = if reference { r#" stroke-dasharray="6 4""# } else { "" };
            writeln!(
                out,
                r#"<polyline class="series" data-label="{}" data-x="{}" data-y="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                escape(s.name),
                data_x.join(" "),
                data_y.join(" "),
                pixels.join(" ")
            )?;
        }
        let ly = TOP + 16.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT - 110.0;
        writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(s.name)
        )?;
    }
    writeln!(out, "</svg>")?;
    Ok(out)
}
