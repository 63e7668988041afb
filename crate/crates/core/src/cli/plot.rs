//! Gnuplot script generation from a results CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::read_csv;
use crate::error::{Error, Result};

/// Path of the script written for `csv` and `figure`.
pub fn plot_script_path(csv: &Path, figure: &str) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    csv.with_file_name(format!("{stem}.fig{figure}.gp"))
}

/// Writes a self-contained gnuplot script with one series per kind and
/// returns its path. Nothing is written if the CSV has no usable rows.
pub fn emit_plot_script(csv: &Path, figure: &str) -> Result<PathBuf> {
    if figure.is_empty() || !figure.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(Error::config(format!("figure id '{figure}' must be alphanumeric")));
    }
    let rows = read_csv(csv)?;
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind != "failed" && r.value_bits.is_finite()) {
        series.entry(r.kind.clone()).or_default().push((r.snr_db, r.value_bits));
    }
    if series.is_empty() {
        return Err(Error::Schema(format!("{} has no data rows", csv.display())));
    }
    let out = plot_script_path(csv, figure);
    let image = out.with_extension("png");
    let image_name = image.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut s = String::new();
    let _ = writeln!(s, "# Generated from {}", csv.display());
    let _ = writeln!(s, "set terminal pngcairo size 900,650");
    let _ = writeln!(s, "set output '{image_name}'");
    let _ = writeln!(s, "set title 'Figure {figure}'");
    let _ = writeln!(s, "set xlabel 'SNR [dB]'");
    let _ = writeln!(s, "set ylabel 'rate [bits/channel use]'");
    let _ = writeln!(s, "set key left top");
    let _ = writeln!(s, "set grid");
    for (kind, points) in &series {
        let _ = writeln!(s, "${kind} << EOD");
        let mut pts = points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (x, y) in pts {
            let _ = writeln!(s, "{x} {y}");
        }
        let _ = writeln!(s, "EOD");
    }
    let plots: Vec<String> = series
        .keys()
        .map(|k| format!("${k} using 1:2 with linespoints title '{k}'"))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    std::fs::write(&out, s)?;
    Ok(out)
}
