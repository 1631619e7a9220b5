//! Sample files and experiment reports.
//!
//! Sample files are comma-separated, one sample per line, one column per
//! coordinate. A first line whose fields are all non-numeric is taken as a
//! header. Blank lines are skipped.
//!
//! [`write_report`] writes three files into a directory:
//!
//! * `report.csv`: `n,trials,bias,bias_ci,variance,variance_ci`, one row
//!   per sample size. `bias_ci` and `variance_ci` are CI half-widths.
//! * `summary.toml`: the spec, ground truth, per-cell stopping status,
//!   fitted and theoretical exponents.
//! * `plot.csv`: `log10_n,log10_abs_bias,log10_variance,bias_sign`.
//!
//! Every float is written in the shortest form that parses back to the
//! same value.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{CellResult, CellStatus, ConvergenceReport, ExperimentSpec, FitOutcome, TheoreticalRates};
use crate::sample::SampleSet;

pub const REPORT_CSV: &str = "report.csv";
pub const SUMMARY_TOML: &str = "summary.toml";
pub const PLOT_CSV: &str = "plot.csv";
pub const REPORT_HEADER: &str = "n,trials,bias,bias_ci,variance,variance_ci";
pub const PLOT_HEADER: &str = "log10_n,log10_abs_bias,log10_variance,bias_sign";

/// A loaded sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSamples {
    pub samples: SampleSet,
    pub header: Option<Vec<String>>,
    /// Groups of row indices (0-based) holding identical samples.
    pub duplicates: Vec<Vec<usize>>,
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

/// Reads a CSV sample file.
pub fn load_samples(path: impl AsRef<Path>) -> Result<LoadedSamples> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_samples(&text, path)
}

/// Parses CSV text; `path` is only used in error messages.
pub fn parse_samples(text: &str, path: &Path) -> Result<LoadedSamples> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut data = Vec::new();
    let mut dim = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if rows == 0 && header.is_none() && dim.is_none() && record.iter().all(|f| f.parse::<f64>().is_err()) {
            header = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
            dim = Some(record.len());
            continue;
        }
        let expected = *dim.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_err(
                path,
                line,
                format!("expected {expected} columns, found {}", record.len()),
            ));
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("column {}: cannot parse {field:?} as a number", col + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("column {}: non-finite value {field:?}", col + 1)));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(parse_err(path, 0, "no samples in file"));
    }
    let samples = SampleSet::new(data, dim.unwrap_or(1))?;
    let duplicates = samples.duplicate_groups();
    Ok(LoadedSamples {
        samples,
        header,
        duplicates,
    })
}

/// Writes samples as headerless CSV with round-trip float formatting.
pub fn save_samples(samples: &SampleSet, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(samples.len() * samples.dim() * 20);
    for row in samples.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// The `report.csv` body.
pub fn report_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n, r.trials, r.bias, r.bias_ci, r.variance, r.variance_ci
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// The `plot.csv` body. Rows with zero bias get an empty bias column.
pub fn plot_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for r in &report.rows {
        let lb = if r.bias != 0.0 {
            r.bias.abs().log10().to_string()
        } else {
            String::new()
        };
        let sign = if r.bias > 0.0 {
            1
        } else if r.bias < 0.0 {
            -1
        } else {
            0
        };
        writeln!(out, "{},{},{},{}", (r.n as f64).log10(), lb, r.variance.log10(), sign)
            .expect("writing to a String cannot fail");
    }
    out
}

#[derive(Serialize)]
struct CellSummary {
    n: usize,
    trials: u64,
    status: CellStatus,
    relative_uncertainty: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    truth: f64,
    all_converged: bool,
    theoretical: &'a TheoreticalRates,
    fitted: &'a FitOutcome,
    cells: Vec<CellSummary>,
    spec: &'a ExperimentSpec,
}

/// The `summary.toml` body.
pub fn summary_toml(report: &ConvergenceReport) -> String {
    let summary = Summary {
        truth: report.truth,
        all_converged: report.all_converged(),
        theoretical: &report.theoretical,
        fitted: &report.fitted,
        cells: report
            .rows
            .iter()
            .map(|r: &CellResult| CellSummary {
                n: r.n,
                trials: r.trials,
                status: r.status,
                relative_uncertainty: r.relative_uncertainty,
            })
            .collect(),
        spec: &report.spec,
    };
    toml::to_string(&summary).expect("report summaries always serialize")
}

/// Writes `report.csv`, `summary.toml` and `plot.csv` into `dir`, creating
/// it if needed. Returns the paths written.
pub fn write_report(report: &ConvergenceReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = [
        (REPORT_CSV, report_csv(report)),
        (SUMMARY_TOML, summary_toml(report)),
        (PLOT_CSV, plot_csv(report)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

/// One parsed row of `report.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub trials: u64,
    pub bias: f64,
    pub bias_ci: f64,
    pub variance: f64,
    pub variance_ci: f64,
}

/// Reads a `report.csv` back.
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == REPORT_HEADER => {}
        _ => return Err(parse_err(path, 1, format!("expected header {REPORT_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(parse_err(path, line_no, format!("expected 6 columns, found {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| parse_err(path, line_no, format!("bad number {s:?}"))) };
        let int = |s: &str| -> Result<u64> { s.parse().map_err(|_| parse_err(path, line_no, format!("bad integer {s:?}"))) };
        rows.push(ReportRow {
            n: int(f[0])? as usize,
            trials: int(f[1])?,
            bias: num(f[2])?,
            bias_ci: num(f[3])?,
            variance: num(f[4])?,
            variance_ci: num(f[5])?,
        });
    }
    Ok(rows)
}
