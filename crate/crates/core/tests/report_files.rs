//! Report files: schema, round trip and a frozen golden run.

use std::path::PathBuf;

use knnrate::report_io::{read_report_csv, PLOT_CSV, REPORT_CSV, REPORT_HEADER, SUMMARY_TOML};
use knnrate::{run_experiment, write_report, ExperimentSpec};

const MINI: &str = r#"
name = "mini"
estimator = "kl"
k = 3
seed = 5
n_grid = [20, 40, 80, 160]
min_trials = 100
max_trials = 200

[distribution]
family = "uniform01"
d = 1
"#;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/mini_report.csv")
}

#[test]
fn report_csv_matches_golden_file() {
    let report = run_experiment(&ExperimentSpec::from_toml(MINI).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_report(&report, dir.path()).unwrap();
    let got = std::fs::read_to_string(dir.path().join(REPORT_CSV)).unwrap();
    if std::env::var_os("KNNRATE_BLESS").is_some() {
        std::fs::create_dir_all(golden_path().parent().unwrap()).unwrap();
        std::fs::write(golden_path(), &got).unwrap();
    }
    let want = std::fs::read_to_string(golden_path()).expect("golden file missing; rerun with KNNRATE_BLESS=1");
    assert_eq!(got, want);
}

#[test]
fn report_files_round_trip() {
    let report = run_experiment(&ExperimentSpec::from_toml(MINI).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_report(&report, dir.path()).unwrap();
    assert_eq!(written.len(), 3);

    let csv = std::fs::read_to_string(dir.path().join(REPORT_CSV)).unwrap();
    assert_eq!(csv.lines().next().unwrap(), REPORT_HEADER);
    let rows = read_report_csv(dir.path().join(REPORT_CSV)).unwrap();
    assert_eq!(rows.len(), report.rows.len());
    for (r, c) in rows.iter().zip(&report.rows) {
        assert_eq!(r.n, c.n);
        assert_eq!(r.trials, c.trials);
        assert_eq!(r.bias.to_bits(), c.bias.to_bits());
        assert_eq!(r.bias_ci.to_bits(), c.bias_ci.to_bits());
        assert_eq!(r.variance.to_bits(), c.variance.to_bits());
        assert_eq!(r.variance_ci.to_bits(), c.variance_ci.to_bits());
    }

    let plot = std::fs::read_to_string(dir.path().join(PLOT_CSV)).unwrap();
    let first: Vec<f64> = plot.lines().nth(1).unwrap().split(',').take(3).map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 20f64.log10());
    assert_eq!(first[1], report.rows[0].bias.abs().log10());
    assert_eq!(first[2], report.rows[0].variance.log10());

    let summary: toml::Value = toml::from_str(&std::fs::read_to_string(dir.path().join(SUMMARY_TOML)).unwrap()).unwrap();
    assert_eq!(summary["spec"]["name"].as_str(), Some("mini"));
    assert_eq!(summary["cells"].as_array().unwrap().len(), 4);
    let spec_back: ExperimentSpec = summary["spec"].clone().try_into().unwrap();
    assert_eq!(spec_back, report.spec);
}

#[test]
fn reports_are_identical_across_runs() {
    let spec = ExperimentSpec::from_toml(MINI).unwrap();
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(knnrate::report_io::report_csv(&a), knnrate::report_io::report_csv(&b));
    assert_eq!(knnrate::report_io::summary_toml(&a), knnrate::report_io::summary_toml(&b));
}
