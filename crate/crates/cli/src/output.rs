//! CSV tables and SVG plots.
//!
//! Numbers are written with ten significant digits in scientific notation,
//! comma-delimited, LF line endings, so reruns are byte-identical.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use crate::CliError;

pub fn num(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Validation(format!("{}: {e}", path.display()));
    let file = File::create(path).map_err(io)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let csv_err = |e: csv::Error| CliError::Validation(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: f64 = 50.0;

/// Theory curve over `[0, π]` with simulated bars and error bars at the
/// sweep angles.
pub fn overlap_plot(theory: &dyn Fn(f64) -> f64, points: &[(f64, f64, f64)], title: &str) -> String {
    let x = |t: f64| M + t / std::f64::consts::PI * (W - 2.0 * M);
    let y = |v: f64| H - M - v.clamp(0.0, 1.0) * (H - 2.0 * M);
    let mut s = svg_open(title);
    let bar = (W - 2.0 * M) / (points.len().max(1) as f64 * 2.5);
    for &(t, mean, std) in points {
        s += &format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{bar:.2}\" height=\"{:.2}\" fill=\"#9ecae1\"/>\n",
            x(t) - bar / 2.0,
            y(mean),
            y(0.0) - y(mean)
        );
        s += &format!(
            "<line x1=\"{0:.2}\" x2=\"{0:.2}\" y1=\"{1:.2}\" y2=\"{2:.2}\" stroke=\"black\"/>\n",
            x(t),
            y(mean - std),
            y(mean + std)
        );
    }
    let curve: Vec<String> = (0..=200)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / 200.0;
            format!("{:.2},{:.2}", x(t), y(theory(t)))
        })
        .collect();
    s += &format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n",
        curve.join(" ")
    );
    s += &axes("θ (rad), 0 … π", "overlap, 0 … 1");
    s + "</svg>\n"
}

/// Grey-scale heat map, darker = larger value.
pub fn heatmap(values: &[Vec<f64>], row_labels: &[f64], col_labels: &[f64], title: &str) -> String {
    let max = values.iter().flatten().cloned().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let (rows, cols) = (values.len().max(1) as f64, values.first().map_or(1, Vec::len).max(1) as f64);
    let (cw, ch) = ((W - 2.0 * M) / cols, (H - 2.0 * M) / rows);
    let mut s = svg_open(title);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let level = if max > 0.0 && v.is_finite() { 255.0 * (1.0 - v / max) } else { 255.0 };
            let g = level.round() as u8;
            s += &format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{cw:.2}\" height=\"{ch:.2}\" fill=\"rgb({g},{g},{g})\"/>\n",
                M + j as f64 * cw,
                M + i as f64 * ch
            );
        }
    }
    for (i, l) in row_labels.iter().enumerate() {
        s += &format!("<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{l}</text>\n", M - 4.0, M + (i as f64 + 0.5) * ch);
    }
    for (j, l) in col_labels.iter().enumerate() {
        s += &format!("<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{l}</text>\n", M + (j as f64 + 0.5) * cw, H - M + 14.0);
    }
    s += &axes("overlap 2", "overlap 1");
    s + "</svg>\n"
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        W / 2.0
    )
}

fn axes(xlabel: &str, ylabel: &str) -> String {
    format!(
        "<line x1=\"{M}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{lx}\" font-size=\"12\" text-anchor=\"middle\">{xlabel}</text>\n\
         <text x=\"14\" y=\"{cy}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {cy})\">{ylabel}</text>\n",
        b = H - M,
        r = W - M,
        cx = W / 2.0,
        lx = H - 12.0,
        cy = H / 2.0
    )
}
