use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::benchmarks::Problem;
use crate::fv::GridField;

/// Time series of an evaluation run plus its metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub problem: Problem,
    pub xi: f64,
    pub checkpoint: String,
    pub times: Vec<f64>,
    /// One series per state component.
    pub conservation: Vec<Vec<f64>>,
    pub entropy: Vec<f64>,
    pub entropy_boundary: Vec<f64>,
    pub error: Vec<f64>,
}

/// Summary written to `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub problem: Problem,
    pub xi: f64,
    pub checkpoint: String,
    pub t_final: Option<f64>,
    pub max_conservation: Vec<f64>,
    pub max_entropy: Option<f64>,
    pub max_entropy_boundary: Option<f64>,
    pub final_error: Option<f64>,
    pub files: Vec<String>,
}

fn max_of(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::max)
}

impl EvalReport {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MetricsError::Report("time stamps must increase strictly".into()));
        }
        let n = self.times.len();
        let series = self.conservation.iter().chain([&self.entropy, &self.entropy_boundary, &self.error]);
        if series.into_iter().any(|s| s.len() != n) {
            return Err(MetricsError::Report("every series needs one value per time".into()));
        }
        if self.conservation.len() != self.problem.state_dim() {
            return Err(MetricsError::Report("one conservation series per component".into()));
        }
        Ok(())
    }

    pub fn summary(&self, files: Vec<String>) -> ReportSummary {
        ReportSummary {
            problem: self.problem,
            xi: self.xi,
            checkpoint: self.checkpoint.clone(),
            t_final: self.times.last().copied(),
            max_conservation: self.conservation.iter().map(|c| max_of(c).unwrap_or(0.0)).collect(),
            max_entropy: max_of(&self.entropy),
            max_entropy_boundary: max_of(&self.entropy_boundary),
            final_error: self.error.last().copied(),
            files,
        }
    }
}

/// Full-precision decimal form (17 significant digits).
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_series(path: &Path, times: &[f64], values: &[f64]) -> Result<(), MetricsError> {
    let mut s = String::from("t,value\n");
    for (t, v) in times.iter().zip(values) {
        s += &format!("{},{}\n", format_value(*t), format_value(*v));
    }
    fs::write(path, s).map_err(|e| MetricsError::io(path, e))
}

/// A solution snapshot to write as `profile_t<t>.csv`.
#[derive(Clone, Debug)]
pub struct Profile {
    pub t: f64,
    pub field: GridField,
    /// Cell centres, one coordinate vector per cell.
    pub centres: Vec<Vec<f64>>,
}

/// `profile_t<t>.csv` with `t` printed to at most six decimals.
pub fn profile_file_name(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("profile_t{s}.csv")
}

fn write_profile(dir: &Path, prof: &Profile) -> Result<String, MetricsError> {
    let f = &prof.field;
    let axes = ["x", "y"];
    let mut cols: Vec<String> = axes[..f.d()].iter().map(|s| s.to_string()).collect();
    cols.extend((1..=f.p).map(|k| format!("u{k}")));
    let mut s = cols.join(",") + "\n";
    for (c, x) in prof.centres.iter().enumerate() {
        let row: Vec<String> = x.iter().chain(f.cell(c)).map(|&v| format_value(v)).collect();
        s += &row.join(",");
        s.push('\n');
    }
    let name = profile_file_name(prof.t);
    let path = dir.join(&name);
    fs::write(&path, s).map_err(|e| MetricsError::io(&path, e))?;
    Ok(name)
}

/// Writes one `t,value` CSV per metric, the profiles and `report.json`.
/// Returns the written file names.
pub fn emit_report(report: &EvalReport, profiles: &[Profile], dir: &Path) -> Result<Vec<String>, MetricsError> {
    report.validate()?;
    fs::create_dir_all(dir).map_err(|e| MetricsError::io(dir, e))?;
    let mut files = Vec::new();
    let mut put = |name: String, values: &[f64]| -> Result<(), MetricsError> {
        write_series(&dir.join(&name), &report.times, values)?;
        files.push(name);
        Ok(())
    };
    if !report.times.is_empty() {
        for (name, series) in report.problem.component_names().iter().zip(&report.conservation) {
            put(format!("conservation_{name}.csv"), series)?;
        }
        put("entropy.csv".into(), &report.entropy)?;
        put("entropy_boundary.csv".into(), &report.entropy_boundary)?;
        put("error.csv".into(), &report.error)?;
    }
    for prof in profiles {
        files.push(write_profile(dir, prof)?);
    }
    let summary = report.summary(files.clone());
    let path: PathBuf = dir.join("report.json");
    let json = serde_json::to_string_pretty(&summary).map_err(|e| MetricsError::Report(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| MetricsError::io(&path, e))?;
    files.push("report.json".into());
    Ok(files)
}

/// Reads a `t,value` CSV back.
pub fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let text = fs::read_to_string(path).map_err(|e| MetricsError::io(path, e))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for line in text.lines().skip(1) {
        let (a, b) = line.split_once(',').ok_or_else(|| MetricsError::Report(format!("bad line `{line}`")))?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| MetricsError::Report(format!("{s}: {e}")));
        times.push(parse(a)?);
        values.push(parse(b)?);
    }
    Ok((times, values))
}
