//! `knnrate`: kNN entropy / mutual-information estimates and convergence-rate
//! experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 an experiment
//! finished but at least one cell did not reach the uncertainty target.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use knnrate::experiments::{run_experiment_with_progress, with_threads, CellStatus, FitOutcome, RateEstimator};
use knnrate::report_io::{load_samples, LoadedSamples};
use knnrate::{
    kl_entropy, ksg_mi, theoretical_rates, truncated_kl_entropy, write_report, EstimateResult, EstimatorConfig,
    ExperimentSpec, JointMetric, Metric, RateModel, Tail, Truncation,
};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "knnrate", version, about = "kNN entropy and mutual-information estimators with convergence-rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    /// Euclidean norm
    L2,
    /// Maximum norm
    Linf,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::L2 => Metric::Euclidean,
            MetricArg::Linf => Metric::Chebyshev,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RateEstimatorArg {
    /// Kozachenko-Leonenko entropy (plain or truncated)
    Kl,
    /// KSG mutual information
    Ksg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate differential entropy (nats) of the samples in a CSV file.
    Entropy {
        /// CSV file, one sample per line, one column per coordinate
        #[arg(long)]
        input: PathBuf,
        /// Neighbor order k (1 <= k < N)
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Cap neighbor distances at a_N = A·N^(-beta)
        #[arg(long)]
        truncate: bool,
        /// Truncation scale A (default 1)
        #[arg(long = "A", requires = "truncate")]
        a: Option<f64>,
        /// Truncation exponent beta in (0, 1/d) (default 1/(d+2))
        #[arg(long, requires = "truncate")]
        beta: Option<f64>,
        /// Norm used for neighbor distances
        #[arg(long, value_enum, default_value = "l2")]
        metric: MetricArg,
    },
    /// Estimate mutual information I(X;Y) (nats) with the KSG estimator.
    #[command(group(ArgGroup::new("source").required(true).args(["x", "input"])))]
    Mi {
        /// CSV file with the X samples
        #[arg(long, requires = "y")]
        x: Option<PathBuf>,
        /// CSV file with the Y samples, row-aligned with --x
        #[arg(long, requires = "x")]
        y: Option<PathBuf>,
        /// Single CSV file holding X then Y columns
        #[arg(long, requires = "dx", conflicts_with_all = ["x", "y"])]
        input: Option<PathBuf>,
        /// Number of leading columns of --input that form X
        #[arg(long, requires = "input", value_parser = clap::value_parser!(u64).range(1..))]
        dx: Option<u64>,
        /// Neighbor order k (1 <= k < N)
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Norm on the X block
        #[arg(long, value_enum, default_value = "linf")]
        x_metric: MetricArg,
        /// Norm on the Y block
        #[arg(long, value_enum, default_value = "linf")]
        y_metric: MetricArg,
    },
    /// Run a convergence-rate experiment described by a TOML config.
    Experiment {
        /// Experiment config (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Output directory for report.csv, summary.toml and plot.csv
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses one per core
        #[arg(long, env = "KNNRATE_THREADS", default_value_t = 0)]
        threads: usize,
    },
    /// Print the theoretical bias and variance decay exponents.
    Rates {
        #[arg(long, value_enum)]
        estimator: RateEstimatorArg,
        /// Dimension of X
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        dx: u64,
        /// Dimension of Y (KSG only)
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        dy: Option<u64>,
        /// Tail exponent tau in (0, 1]; 1 for exponentially decaying tails
        #[arg(long, conflicts_with = "alpha")]
        tau: Option<f64>,
        /// Finite moment order alpha, giving any tau < alpha/(alpha + d)
        #[arg(long)]
        alpha: Option<f64>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<knnrate::Error> for Failure {
    fn from(e: knnrate::Error) -> Self {
        Failure {
            code: EXIT_DATA,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Entropy {
            input,
            k,
            truncate,
            a,
            beta,
            metric,
        } => cmd_entropy(input, k as usize, truncate, a, beta, metric.into()),
        Command::Mi {
            x,
            y,
            input,
            dx,
            k,
            x_metric,
            y_metric,
        } => cmd_mi(x, y, input, dx.map(|v| v as usize), k as usize, x_metric.into(), y_metric.into()),
        Command::Experiment { config, out, threads } => cmd_experiment(config, out, threads),
        Command::Rates {
            estimator,
            dx,
            dy,
            tau,
            alpha,
        } => cmd_rates(estimator, dx as usize, dy.map(|v| v as usize), tau, alpha),
    }
}

fn load(path: &PathBuf) -> Result<LoadedSamples, Failure> {
    let loaded = load_samples(path).map_err(|e| Failure {
        code: EXIT_DATA,
        message: match e {
            knnrate::Error::Io(io) => format!("{}: {io}", path.display()),
            other => other.to_string(),
        },
    })?;
    for group in &loaded.duplicates {
        eprintln!("warning: {}: identical samples at rows {group:?} (0-based)", path.display());
    }
    Ok(loaded)
}

fn print_estimate(name: &str, r: &EstimateResult) {
    println!("{name} = {}", r.value);
    println!("estimator = {}", r.kind);
    println!("n = {}", r.n);
    println!("k = {}", r.k);
    if let Some(a_n) = r.truncation_radius {
        println!("truncation_radius = {a_n}");
        println!("truncated = {}", r.diagnostics.truncated);
    }
    println!("mean_epsilon = {}", r.diagnostics.mean_epsilon);
    println!("ties = {}", r.diagnostics.ties);
}

fn cmd_entropy(
    input: PathBuf,
    k: usize,
    truncate: bool,
    a: Option<f64>,
    beta: Option<f64>,
    metric: Metric,
) -> Result<u8, Failure> {
    let samples = load(&input)?.samples;
    if truncate {
        let t = Truncation {
            a: a.unwrap_or(1.0),
            beta,
        };
        let beta = t.beta_for(samples.dim()).map_err(|e| Failure::usage(e.to_string()))?;
        let r = truncated_kl_entropy(&samples, &EstimatorConfig::truncated(k, t).with_metric(metric))?;
        print_estimate("entropy", &r);
        println!("A = {}", t.a);
        println!("beta = {beta}");
    } else {
        let r = kl_entropy(&samples, &EstimatorConfig::new(k).with_metric(metric))?;
        print_estimate("entropy", &r);
    }
    println!("d = {}", samples.dim());
    println!("metric = {}", if metric == Metric::Euclidean { "l2" } else { "linf" });
    Ok(0)
}

fn cmd_mi(
    x: Option<PathBuf>,
    y: Option<PathBuf>,
    input: Option<PathBuf>,
    dx: Option<usize>,
    k: usize,
    x_metric: Metric,
    y_metric: Metric,
) -> Result<u8, Failure> {
    let (xs, ys) = match (x, y, input, dx) {
        (Some(x), Some(y), None, None) => (load(&x)?.samples, load(&y)?.samples),
        (None, None, Some(input), Some(dx)) => {
            let joint = load(&input)?.samples;
            if dx >= joint.dim() {
                return Err(Failure::usage(format!(
                    "--dx {dx} leaves no Y columns in a file with {} columns",
                    joint.dim()
                )));
            }
            joint.split_columns(dx)?
        }
        _ => return Err(Failure::usage("give either --x and --y, or --input with --dx")),
    };
    let metric = JointMetric::new(x_metric, y_metric, xs.dim(), ys.dim())?;
    let r = ksg_mi(&xs, &ys, k, &metric)?;
    print_estimate("mi", &r);
    println!("dx = {}", xs.dim());
    println!("dy = {}", ys.dim());
    Ok(0)
}

fn cmd_experiment(config: PathBuf, out: PathBuf, threads: usize) -> Result<u8, Failure> {
    let spec = ExperimentSpec::from_file(&config).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("{}: {e}", config.display()),
    })?;
    let report = with_threads(threads, || {
        run_experiment_with_progress(&spec, |row| {
            eprintln!(
                "n = {:>8}  trials = {:>8}  bias = {:+.6e}  variance = {:.6e}  {}",
                row.n,
                row.trials,
                row.bias,
                row.variance,
                match row.status {
                    CellStatus::Converged => "converged",
                    CellStatus::MaxTrials => "max_trials reached",
                    CellStatus::Unresolved => "unresolved (zero spread)",
                }
            )
        })
    })??;
    write_report(&report, &out)?;

    println!("{}: {} on {}", spec.name, spec.estimator, distribution_label(&spec));
    println!("{:<16} {:>10} {:>10} {:>10} {:>10}", "sample size", "bias emp", "bias th", "var emp", "var th");
    let th = &report.theoretical;
    match &report.fitted {
        FitOutcome::Fitted(f) => println!(
            "{:<16} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
            format!("{}-{}", f.bias_fit_range.0, f.bias_fit_range.1),
            f.bias_slope,
            th.bias_slope,
            f.variance_slope,
            th.variance_slope
        ),
        FitOutcome::Failed { reason } => {
            println!("{:<16} {:>10} {:>10.2} {:>10} {:>10.2}", "-", "-", th.bias_slope, "-", th.variance_slope);
            eprintln!("warning: rates not fitted: {reason}");
        }
    }
    if let Some(f) = report.fitted.rates() {
        if !f.excluded.is_empty() {
            eprintln!("warning: zero-bias rows left out of the bias fit: n = {:?}", f.excluded);
        }
    }
    println!("report written to {}", out.display());
    if report.all_converged() {
        Ok(0)
    } else {
        eprintln!("warning: some cells stopped before reaching the uncertainty target");
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn distribution_label(spec: &ExperimentSpec) -> String {
    format!("{:?}", spec.distribution)
}

fn cmd_rates(
    estimator: RateEstimatorArg,
    dx: usize,
    dy: Option<usize>,
    tau: Option<f64>,
    alpha: Option<f64>,
) -> Result<u8, Failure> {
    let model = match (estimator, dy) {
        (RateEstimatorArg::Kl, None) => RateModel::entropy(dx),
        (RateEstimatorArg::Kl, Some(_)) => return Err(Failure::usage("--dy only applies to --estimator ksg")),
        (RateEstimatorArg::Ksg, Some(dy)) => RateModel::ksg(dx, dy),
        (RateEstimatorArg::Ksg, None) => return Err(Failure::usage("--estimator ksg needs --dy")),
    };
    let tail = match (tau, alpha) {
        (Some(tau), _) => Tail::Heavy { tau },
        (None, Some(alpha)) => Tail::Moment { alpha },
        (None, None) => Tail::Exponential,
    };
    let r = theoretical_rates(&model.with_tail(tail)).map_err(|e| Failure::usage(e.to_string()))?;
    println!(
        "estimator = {}",
        match model.estimator {
            RateEstimator::Entropy => "kl",
            RateEstimator::Ksg => "ksg",
        }
    );
    if r.approached {
        println!("tau < {}", r.tau);
        println!("bias_slope = {}", r.bias_slope);
        println!("note = supremum: every tau below the bound is admissible, so the bias exponent approaches but does not reach this value");
    } else {
        println!("tau = {}", r.tau);
        println!("bias_slope = {}", r.bias_slope);
    }
    println!("variance_slope = {}", r.variance_slope);
    println!("bias_slope_2dp = {:.2}", r.bias_slope);
    Ok(0)
}
