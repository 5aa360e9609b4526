//! Flat-file emission: CSV tables, gnuplot scripts, JSON reports.
//!
//! Every float is written with Rust's shortest round-trip formatting, so a
//! rerun with the same seed reproduces the files byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::LabError;

/// One scan row of a threshold experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub lambda: f64,
    pub n_starts: usize,
    pub n_trivial: usize,
    pub n_negative_min: usize,
    pub n_mountain_pass: usize,
    pub min_energy: f64,
    /// `c_f⁻¹·‖α‖_∞⁻¹`: below this only the trivial solution exists.
    pub threshold_trivial: f64,
    /// `c_F⁻¹·‖α‖₁⁻¹`: above this at least two solutions exist.
    pub threshold_multiple: f64,
}

pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf, LabError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&path, text)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, LabError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| LabError::Solver(format!("json: {e}")))?;
    fs::write(&path, text)?;
    Ok(path)
}

pub fn write_plot_script(dir: &Path, name: &str, script: &str) -> Result<PathBuf, LabError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, script)?;
    Ok(path)
}

/// Gnuplot script for the threshold scan: solution counts and minimum energy
/// against λ, with the two thresholds as vertical markers.
pub fn thresholds_plot(csv_name: &str, thr_trivial: f64, thr_multiple: f64) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'lambda'\n\
         set arrow 1 from {thr_trivial}, graph 0 to {thr_trivial}, graph 1 nohead dt 2\n\
         set arrow 2 from {thr_multiple}, graph 0 to {thr_multiple}, graph 1 nohead dt 3\n\
         set multiplot layout 2,1\n\
         set ylabel 'count'\n\
         plot '{csv_name}' using 1:3 with linespoints title 'trivial', \\\n\
              '' using 1:4 with linespoints title 'negative min', \\\n\
              '' using 1:5 with linespoints title 'mountain pass'\n\
         set ylabel 'min energy'\n\
         plot '{csv_name}' using 1:6 with linespoints title 'min energy'\n\
         unset multiplot\n"
    )
}

/// Gnuplot script for the multi-well scan.
pub fn multiwell_plot(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'lambda'\n\
         set ylabel 'count'\n\
         plot '{csv_name}' using 1:2 with linespoints title 'distinct solutions', \\\n\
              '' using 1:3 with linespoints title 'below tau'\n"
    )
}

/// Gnuplot script for the superlinear λ₀(τ) curve.
pub fn superlinear_plot(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale x\n\
         set xlabel 'tau'\n\
         set ylabel 'lambda0'\n\
         plot '{csv_name}' using 1:2 with linespoints title 'lambda0(tau)'\n"
    )
}

/// Formats a float with shortest round-trip representation.
pub fn fnum(v: f64) -> String {
    format!("{v}")
}
