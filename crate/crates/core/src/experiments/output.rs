//! CSV/JSON writers, small statistics and gnuplot script emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut wtr = csv::Writer::from_path(path)?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Median, averaging the two middle values; NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// Least-squares slope of `ln y` on `ln x`; `None` with fewer than two
/// usable points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

struct Figure {
    csv: &'static str,
    title: &'static str,
    logscale: &'static str,
    xlabel: &'static str,
    x: &'static str,
    series: &'static [&'static str],
}

const FIGURES: [Figure; 8] = [
    Figure { csv: "stability_summary.csv", title: "Exceedance fraction", logscale: "x", xlabel: "N", x: "n", series: &["mean_exceedance", "mean_exceedance_ell"] },
    Figure { csv: "finite_time_medians.csv", title: "Median finite-time error", logscale: "xy", xlabel: "N", x: "n", series: &["median"] },
    Figure { csv: "noise_summary.csv", title: "Median sup of squared noise norm", logscale: "xy", xlabel: "N", x: "n", series: &["median_sup"] },
    Figure { csv: "phase.csv", title: "Tail intensity against memory mass", logscale: "", xlabel: "|h|_1", x: "h_l1", series: &["tail_mean", "predicted"] },
    Figure { csv: "graph_regularity.csv", title: "Kernel regularity sums", logscale: "xy", xlabel: "N", x: "n", series: &["r1", "r2", "s"] },
    Figure { csv: "graph_diag.csv", title: "Normalised degrees and S_max", logscale: "x", xlabel: "N", x: "n", series: &["max_norm_in", "max_norm_out", "s_max", "s_bound"] },
    Figure { csv: "x_inf.csv", title: "Stationary current", logscale: "", xlabel: "x", x: "node", series: &["value"] },
    Figure { csv: "ell.csv", title: "Stationary intensity", logscale: "", xlabel: "x", x: "node", series: &["value"] },
];

/// Writes a `.gp` script next to every known CSV present in `dir`; returns
/// the scripts written.
pub fn write_plot_scripts(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for fig in &FIGURES {
        if !dir.join(fig.csv).exists() {
            continue;
        }
        let stem = fig.csv.trim_end_matches(".csv");
        let path = dir.join(format!("{stem}.gp"));
        let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(out, "set datafile separator ','")?;
        writeln!(out, "set terminal pngcairo size 800,600")?;
        writeln!(out, "set output '{stem}.png'")?;
        writeln!(out, "set title '{}'", fig.title)?;
        writeln!(out, "set xlabel '{}'", fig.xlabel)?;
        writeln!(out, "set key autotitle columnhead")?;
        if !fig.logscale.is_empty() {
            writeln!(out, "set logscale {}", fig.logscale)?;
        }
        let plots: Vec<String> = fig
            .series
            .iter()
            .map(|s| format!("'{}' using '{}':'{}' with linespoints title '{}'", fig.csv, fig.x, s, s))
            .collect();
        writeln!(out, "plot {}", plots.join(", \\\n     "))?;
        out.flush()?;
        written.push(path);
    }
    Ok(written)
}
