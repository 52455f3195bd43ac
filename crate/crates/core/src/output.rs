//! Text renderings of results: CSV maps, SVG heatmaps, aligned tables and
//! the points-file reader.

use std::fmt::Write as _;

use crate::analysis::MapResult;

/// Axis name used in headers: `x, y, z` up to three variables, `x1..xn` beyond.
pub fn axis_name(axis: usize, dim: usize) -> String {
    if dim <= 3 {
        ["x", "y", "z"][axis].to_string()
    } else {
        format!("x{}", axis + 1)
    }
}

/// Parses an axis given as a name (`x`, `y`, `z`, `x3`) or a 1-based index.
pub fn parse_axis(name: &str, dim: usize) -> Option<usize> {
    let name = name.trim();
    let axis = match name {
        "x" if dim <= 3 => 0,
        "y" if dim <= 3 => 1,
        "z" if dim == 3 => 2,
        _ => {
            let digits = name.strip_prefix('x').unwrap_or(name);
            digits.parse::<usize>().ok()?.checked_sub(1)?
        }
    };
    (axis < dim).then_some(axis)
}

/// Fixed-precision value with negative zero folded to zero.
pub fn format_value(v: f64, precision: usize) -> String {
    let s = format!("{v:.precision$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => s,
    }
}

/// Grid coordinate with trailing zeros trimmed but at least one decimal,
/// e.g. `0.0`, `-3.9`, `100.0`.
pub fn format_coord(v: f64) -> String {
    let s = format_value(v, 10);
    let trimmed = s.trim_end_matches('0');
    if trimmed.ends_with('.') {
        format!("{trimmed}0")
    } else {
        trimmed.to_string()
    }
}

/// CSV with header `<axis1>,<axis2>,...,H` and one row per node in row-major order.
pub fn map_to_csv(map: &MapResult, precision: usize) -> String {
    let dim = map.grid.dim();
    let mut out = String::new();
    for a in map.grid.swept() {
        out.push_str(&axis_name(a.axis, dim));
        out.push(',');
    }
    out.push_str("H\n");
    for (k, v) in map.values.iter().enumerate() {
        for c in map.grid.node_swept_coords(k) {
            out.push_str(&format_coord(c));
            out.push(',');
        }
        out.push_str(&format_value(*v, precision));
        out.push('\n');
    }
    out
}

const PLOT: f64 = 640.0;
const LEFT: f64 = 80.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const LEGEND: f64 = 110.0;

/// Diverging blue–white–red color for `v` clamped to `[-1, 1]`, white at 0.
pub fn diverging_color(v: f64) -> (u8, u8, u8) {
    const BLUE: (f64, f64, f64) = (33.0, 102.0, 172.0);
    const RED: (f64, f64, f64) = (178.0, 24.0, 43.0);
    let v = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
    let (end, t) = if v < 0.0 { (BLUE, -v) } else { (RED, v) };
    let mix = |c: f64| (255.0 + (c - 255.0) * t).round() as u8;
    (mix(end.0), mix(end.1), mix(end.2))
}

fn tick_label(v: f64) -> String {
    let s = format_value(v, 2);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Heatmap of a two-axis map. The first swept axis runs left to right, the
/// second bottom to top. The color scale is pinned to `[-1, 1]`.
pub fn map_to_svg(map: &MapResult) -> Option<String> {
    let [ax, ay] = map.grid.swept() else {
        return None;
    };
    let dim = map.grid.dim();
    let width = LEFT + PLOT + LEGEND;
    let height = TOP + PLOT + BOTTOM;
    let cw = PLOT / ax.count as f64;
    let ch = PLOT / ay.count as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );

    let fixed: Vec<String> = map
        .grid
        .fixed()
        .iter()
        .map(|&(a, v)| format!("{} = {}", axis_name(a, dim), tick_label(v)))
        .collect();
    let title = if fixed.is_empty() {
        "H".to_string()
    } else {
        format!("H for {}", fixed.join(", "))
    };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{title}</text>"#,
        LEFT + PLOT / 2.0
    );

    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for i in 0..ax.count {
        for j in 0..ay.count {
            let v = map.values[i * ay.count + j];
            let (r, g, b) = diverging_color(v);
            let x = LEFT + i as f64 * cw;
            let y = TOP + PLOT - (j + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="rgb({r},{g},{b})"/>"#,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );

    for t in 0..=4 {
        let frac = t as f64 / 4.0;
        let xv = ax.lo + (ax.hi - ax.lo) * frac;
        let px = LEFT + frac * PLOT;
        let _ = writeln!(
            s,
            r#"<line x1="{px:.3}" y1="{}" x2="{px:.3}" y2="{}" stroke="black"/><text x="{px:.3}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + PLOT,
            TOP + PLOT + 6.0,
            TOP + PLOT + 20.0,
            tick_label(xv)
        );
        let yv = ay.lo + (ay.hi - ay.lo) * frac;
        let py = TOP + PLOT - frac * PLOT;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{py:.3}" x2="{LEFT}" y2="{py:.3}" stroke="black"/><text x="{}" y="{:.3}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            LEFT - 9.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + PLOT / 2.0,
        TOP + PLOT + 45.0,
        axis_name(ax.axis, dim)
    );
    let _ = writeln!(
        s,
        r#"<text x="25" y="{y}" text-anchor="middle" font-size="14" transform="rotate(-90 25 {y})">{}</text>"#,
        axis_name(ay.axis, dim),
        y = TOP + PLOT / 2.0
    );

    // color bar, 64 bands from -1 (bottom) to 1 (top)
    let bx = LEFT + PLOT + 30.0;
    let band = PLOT / 64.0;
    for b in 0..64 {
        let v = -1.0 + (b as f64 + 0.5) / 32.0;
        let (r, g, bl) = diverging_color(v);
        let y = TOP + PLOT - (b + 1) as f64 * band;
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{y:.3}" width="20" height="{:.3}" fill="rgb({r},{g},{bl})"/>"#,
            band + 0.05
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{bx}" y="{TOP}" width="20" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    for (v, label) in [
        (-1.0, "-1"),
        (-0.5, "-0.5"),
        (0.0, "0"),
        (0.5, "0.5"),
        (1.0, "1"),
    ] {
        let y = TOP + PLOT * (1.0 - (v + 1.0) / 2.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.3}">{label}</text>"#,
            bx + 26.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

/// Right-aligned table. `rows` hold the coordinates followed by the extra columns.
pub fn format_table(headers: &[String], rows: &[Vec<f64>], precision: usize) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.iter().map(|v| format_value(*v, precision)).collect())
        .collect();
    let widths: Vec<usize> = headers
        .iter()
        .enumerate()
        .map(|(c, h)| {
            cells
                .iter()
                .map(|r| r[c].len())
                .chain([h.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |items: &[String]| -> String {
        items
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(headers);
    out.push('\n');
    out.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  "),
    );
    out.push('\n');
    for r in &cells {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("points file line {line}: {message}")]
pub struct PointsError {
    pub line: usize,
    pub message: String,
}

/// Reads a comma-separated points file. A first line that does not parse as
/// numbers is taken as a header; blank lines and `#` comments are skipped.
/// Every row must have `dim` columns.
pub fn parse_points(text: &str, dim: usize) -> Result<Vec<Vec<f64>>, PointsError> {
    let mut rows = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let was_first = std::mem::replace(&mut first, false);
        let values = match parsed {
            Ok(v) => v,
            Err(_) if was_first => continue,
            Err(e) => {
                return Err(PointsError {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        };
        if values.len() != dim {
            return Err(PointsError {
                line: i + 1,
                message: format!("expected {dim} columns, found {}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PointsError {
                line: i + 1,
                message: "non-finite coordinate".into(),
            });
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(PointsError {
            line: 0,
            message: "no points".into(),
        });
    }
    Ok(rows)
}
