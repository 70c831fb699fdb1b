//! `plot`: static SVG line plot of CSV columns.
//!
//! Output depends only on the input values, so identical input gives
//! byte-identical SVG.

use std::fmt::Write as _;
use std::path::Path;

use super::{CliError, CliResult};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 70.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Columns read from a CSV file by header name.
pub fn read_columns(path: &Path, names: &[String]) -> CliResult<Vec<Vec<f64>>> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::Usage(e.to_string()))?
        .clone();
    let idx = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| CliError::Usage(format!("column `{n}` not found in {}", path.display())))
        })
        .collect::<CliResult<Vec<usize>>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Usage(e.to_string()))?;
        for (col, &k) in cols.iter_mut().zip(&idx) {
            let field = rec.get(k).unwrap_or("");
            let v = field.trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!("row {}: `{field}` is not a number", line + 2))
            })?;
            col.push(v);
        }
    }
    Ok(cols)
}

/// Finite range, widened when degenerate so constant data sits mid-axis.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        (-1.0, 1.0)
    } else if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

fn label(x: f64) -> String {
    format!("{x:.6e}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG with one polyline per `y` column against `x`.
pub fn render_svg(x_name: &str, x: &[f64], ys: &[(String, Vec<f64>)]) -> String {
    let (x0, x1) = range(x.iter().copied());
    let (y0, y1) = range(ys.iter().flat_map(|(_, v)| v.iter().copied()));
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let sx = |v: f64| left + (v - x0) / (x1 - x0) * (right - left);
    let sy = |v: f64| bottom - (v - y0) / (y1 - y0) * (bottom - top);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}"/></g>"#
    );
    let _ = writeln!(s, r#"<g font-family="monospace" font-size="12" fill="black">"#);
    let _ = writeln!(s, r#"<text x="{left}" y="{}" text-anchor="start">{}</text>"#, bottom + 18.0, label(x0));
    let _ = writeln!(s, r#"<text x="{right}" y="{}" text-anchor="end">{}</text>"#, bottom + 18.0, label(x1));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        bottom + 40.0,
        escape(x_name)
    );
    let _ = writeln!(s, r#"<text x="{}" y="{bottom}" text-anchor="end">{}</text>"#, left - 4.0, label(y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 4.0, top + 12.0, label(y1));
    for (k, (name, _)) in ys.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{}">{}</text>"#,
            left + 10.0,
            top - 30.0 + 14.0 * k as f64,
            COLOURS[k % COLOURS.len()],
            escape(name)
        );
    }
    let _ = writeln!(s, "</g>");
    for (k, (_, v)) in ys.iter().enumerate() {
        let pts: Vec<String> = x
            .iter()
            .zip(v)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| format!("{:.3},{:.3}", sx(*a), sy(*b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLOURS[k % COLOURS.len()],
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn plot(input: &Path, cols: &[String], x: &str, out: &Path) -> CliResult<()> {
    if cols.is_empty() {
        return Err(CliError::Usage("--cols needs at least one column".into()));
    }
    let mut names = vec![x.to_string()];
    names.extend(cols.iter().cloned());
    let mut data = read_columns(input, &names)?;
    let xs = data.remove(0);
    let ys: Vec<(String, Vec<f64>)> = cols.iter().cloned().zip(data).collect();
    std::fs::write(out, render_svg(x, &xs, &ys))?;
    Ok(())
}
