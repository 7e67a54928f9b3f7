//! Command-line front end: coefficient fits, Monte-Carlo studies, panel
//! analysis, Hill plots, and closed-form oracle checks, all emitting CSV.
//!
//! Exit codes: 0 success, 1 estimation failure, 2 usage or validation error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tailmax::evt::TailCount;
use tailmax::pipeline::{
    analyze, gamma_ci, load_panel_csv, write_hill_csv, write_report_csv, write_scatter_csv,
    AnalysisConfig, HillPoint, PanelMode, PipelineError,
};
use tailmax::regression::fit;
use tailmax::simulation::{run_study, StudyConfig};
use tailmax::taildep::{Comonotone, Independence, McTCopula, TailCopula};
use tailmax::{DgpSpec, FitConfig, Model, Series, TailSample, ThetaVector};

#[derive(Parser)]
#[command(name = "tailmax", version, about = "Max-linear tail regression toolkit")]
struct Cli {
    /// Seed for every randomized stage.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit tail coefficients for a response against named covariate columns.
    Fit(FitArgs),
    /// Monte-Carlo MSE comparison of the tail and least-squares estimators.
    Simulate(SimulateArgs),
    /// Panel workflow: indices, tail diagnostics, per-entity fits.
    Analyze(AnalyzeArgs),
    /// Hill estimates with confidence bands over a range of tail counts.
    Hill(HillArgs),
    /// Closed-form pairwise tail mass implied by a chosen copula.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct FitArgs {
    /// CSV with one named numeric column per variable.
    #[arg(long)]
    input: PathBuf,
    /// Response column name.
    #[arg(long)]
    response: String,
    /// Comma-separated covariate column names.
    #[arg(long)]
    covariates: String,
    /// Number of upper order statistics in the tail.
    #[arg(long)]
    k: usize,
    /// Lower end of the tail-scale integration range.
    #[arg(long, default_value_t = 0.5)]
    s0: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Data-generating process: M1, M2, M3, or D3.
    #[arg(long)]
    model: String,
    /// Degrees of freedom for the covariate distribution (3, 4, or 5).
    #[arg(long)]
    nu: u32,
    /// Sample size per replication.
    #[arg(long)]
    n: usize,
    /// Number of replications.
    #[arg(long)]
    reps: usize,
    /// Tail sizes as start:end:step, inclusive.
    #[arg(long = "k-grid")]
    k_grid: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses the default pool, 1 forces sequential.
    #[arg(long, env = "TAILMAX_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Returns,
    Levels,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Panel CSV: a date column followed by one column per entity.
    #[arg(long)]
    input: PathBuf,
    /// returns converts prices to losses first; levels uses values as-is.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Market column for the reference index (required with --mode returns).
    #[arg(long)]
    market: Option<String>,
    /// Tail size for index and entity estimates (default 40 returns, 60 levels).
    #[arg(long)]
    k: Option<usize>,
    /// Tail size for the joint tail event set (default 20).
    #[arg(long)]
    kstar: Option<usize>,
    /// Declustering stride (default 2 returns, 1 levels).
    #[arg(long)]
    stride: Option<usize>,
    /// Output prefix; writes <prefix>_report.csv, _hill.csv, _scatter.csv.
    #[arg(long = "out-prefix")]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct HillArgs {
    /// CSV with one named numeric column per variable.
    #[arg(long)]
    input: PathBuf,
    /// Column to estimate on.
    #[arg(long)]
    column: String,
    /// Largest tail size; rows run k = 1..=k-max.
    #[arg(long = "k-max")]
    k_max: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CopulaArg {
    Comonotone,
    Independence,
    T,
}

#[derive(Args)]
struct OracleArgs {
    /// Covariate tail copula.
    #[arg(long, value_enum)]
    copula: CopulaArg,
    /// Degrees of freedom for the t copula.
    #[arg(long, default_value_t = 4.0)]
    nu: f64,
    /// Off-diagonal correlation for the t copula.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Tail level for the t copula's Monte-Carlo evaluation.
    #[arg(long, default_value_t = 1e-4)]
    p: f64,
    /// Monte-Carlo sample count for the t copula.
    #[arg(long = "N", default_value_t = 1_000_000)]
    n_samples: usize,
    /// Comma-separated theta components, each in (0, 1).
    #[arg(long)]
    theta: String,
    /// Coordinate to evaluate, 1-based.
    #[arg(long)]
    j: usize,
}

enum Failure {
    /// Exit 2: bad flags or malformed input.
    Validation(String),
    /// Exit 1: an estimation stage failed on valid input.
    Estimation(String),
}

fn validation(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Estimation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Hill(a) => cmd_hill(a),
        Command::Oracle(a) => cmd_oracle(a, cli.seed),
    }
}

/// Headered CSV of numeric columns, rectangular, all finite.
fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), Failure> {
    let file = std::fs::File::open(path)
        .map_err(|e| validation(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| validation(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(validation(format!("{} has no columns", path.display())));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| validation(format!("{}: {e}", path.display())))?;
        if record.len() != headers.len() {
            return Err(validation(format!(
                "row {row}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                validation(format!(
                    "row {row}, column {}: cannot parse {field:?} as a number",
                    headers[j]
                ))
            })?;
            if !value.is_finite() {
                return Err(validation(format!(
                    "row {row}, column {}: value is not finite",
                    headers[j]
                )));
            }
            columns[j].push(value);
        }
    }
    Ok((headers, columns))
}

fn find_column(headers: &[String], name: &str) -> Result<usize, Failure> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| validation(format!("column {name} not found")))
}

fn open_out(path: &Path) -> Result<std::fs::File, Failure> {
    std::fs::File::create(path)
        .map_err(|e| validation(format!("cannot write {}: {e}", path.display())))
}

fn cmd_fit(a: FitArgs) -> Result<(), Failure> {
    let (headers, columns) = read_columns(&a.input)?;
    let names: Vec<&str> = a.covariates.split(',').map(str::trim).collect();
    let mut cov_cols = Vec::with_capacity(names.len());
    for name in &names {
        cov_cols.push(columns[find_column(&headers, name)?].clone());
    }
    let y = columns[find_column(&headers, &a.response)?].clone();
    let n = y.len();
    if a.k == 0 || a.k >= n {
        return Err(validation(format!(
            "--k must lie between 1 and the sample size minus one ({})",
            n.saturating_sub(1)
        )));
    }
    if !(a.s0 > 0.0 && a.s0 < 1.0) {
        return Err(validation("--s0 must lie in (0, 1)"));
    }
    let sample = TailSample::new(cov_cols, y).map_err(|e| validation(e.to_string()))?;
    let config = FitConfig::new(TailCount::new(a.k).expect("positive")).with_s0(a.s0);
    let fitted =
        fit(&sample, &config).map_err(|e| Failure::Estimation(format!("tail fit: {e}")))?;

    let d = fitted.beta.len();
    let mut header = Vec::new();
    let mut row = Vec::new();
    for j in 1..=d {
        header.push(format!("beta{j}"));
        row.push(fitted.beta[j - 1].to_string());
    }
    for j in 1..=d {
        header.push(format!("theta{j}"));
        row.push(fitted.theta[j - 1].to_string());
    }
    header.push("gamma_hat".to_string());
    row.push(fitted.gamma.to_string());
    for j in 1..=d {
        header.push(format!("alpha{j}"));
        row.push(fitted.alpha[j - 1].to_string());
    }
    header.push("residual_norm".to_string());
    row.push(fitted.objective.sqrt().to_string());

    let mut w = csv::Writer::from_writer(open_out(&a.out)?);
    w.write_record(&header)
        .and_then(|()| w.write_record(&row))
        .and_then(|()| w.flush().map_err(Into::into))
        .map_err(|e| validation(format!("cannot write {}: {e}", a.out.display())))
}

fn parse_model(name: &str) -> Option<Model> {
    match name.to_ascii_uppercase().as_str() {
        "M1" => Some(Model::M1),
        "M2" => Some(Model::M2),
        "M3" => Some(Model::M3),
        "D3" => Some(Model::D3),
        _ => None,
    }
}

/// Inclusive start:end:step range.
fn parse_k_grid(text: &str) -> Result<Vec<usize>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || validation(format!("--k-grid must be start:end:step, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if start == 0 || step == 0 || end < start {
        return Err(bad());
    }
    Ok((start..=end).step_by(step).collect())
}

fn cmd_simulate(a: SimulateArgs, seed: u64) -> Result<(), Failure> {
    let model = parse_model(&a.model)
        .ok_or_else(|| validation("--model must be one of M1, M2, M3, D3"))?;
    let spec = DgpSpec::new(model, a.nu).map_err(|e| validation(format!("--nu: {e}")))?;
    if a.reps == 0 {
        return Err(validation("--reps must be positive"));
    }
    let k_grid = parse_k_grid(&a.k_grid)?;
    if let Some(&k) = k_grid.iter().find(|&&k| k >= a.n) {
        return Err(validation(format!(
            "--k-grid contains k = {k}, not below --n = {}",
            a.n
        )));
    }
    let mut config = StudyConfig::new(a.n, a.reps, k_grid, seed);
    config.threads = a.threads;
    let table = run_study(&spec, &config)
        .map_err(|e| Failure::Estimation(format!("simulation study: {e}")))?;
    table
        .write_csv(open_out(&a.out)?)
        .map_err(|e| validation(format!("cannot write {}: {e}", a.out.display())))
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let (mode, mut config) = match a.mode {
        ModeArg::Returns => (PanelMode::Returns, AnalysisConfig::returns_default()),
        ModeArg::Levels => (PanelMode::Levels, AnalysisConfig::levels_default()),
    };
    if let Some(k) = a.k {
        config.k = TailCount::new(k).map_err(|_| validation("--k must be positive"))?;
    }
    if let Some(k_star) = a.kstar {
        config.k_star =
            TailCount::new(k_star).map_err(|_| validation("--kstar must be positive"))?;
    }
    if let Some(stride) = a.stride {
        if stride == 0 {
            return Err(validation("--stride must be at least 1"));
        }
        config.decluster_stride = stride;
    }
    if config.k_star.get() >= config.k.get() {
        return Err(validation(format!(
            "--kstar ({}) must be below --k ({})",
            config.k_star.get(),
            config.k.get()
        )));
    }
    if mode == PanelMode::Returns && a.market.is_none() {
        return Err(validation("--market is required with --mode returns"));
    }
    let panel = load_panel_csv(&a.input, mode).map_err(|e| validation(e.to_string()))?;
    let report = analyze(&panel, &config, a.market.as_deref()).map_err(|e| match e {
        PipelineError::Evt(_) | PipelineError::Regression(_) => {
            Failure::Estimation(format!("index estimation: {e}"))
        }
        other => validation(other.to_string()),
    })?;

    let prefix = a.out_prefix.as_os_str().to_string_lossy().into_owned();
    let report_path = PathBuf::from(format!("{prefix}_report.csv"));
    let hill_path = PathBuf::from(format!("{prefix}_hill.csv"));
    let scatter_path = PathBuf::from(format!("{prefix}_scatter.csv"));
    write_report_csv(&report, open_out(&report_path)?)
        .map_err(|e| validation(format!("cannot write {}: {e}", report_path.display())))?;
    write_hill_csv(&report.hill_curve, open_out(&hill_path)?)
        .map_err(|e| validation(format!("cannot write {}: {e}", hill_path.display())))?;
    write_scatter_csv(&report, open_out(&scatter_path)?)
        .map_err(|e| validation(format!("cannot write {}: {e}", scatter_path.display())))
}

fn cmd_hill(a: HillArgs) -> Result<(), Failure> {
    let (headers, columns) = read_columns(&a.input)?;
    let col = columns[find_column(&headers, &a.column)?].clone();
    let n = col.len();
    if a.k_max == 0 || a.k_max >= n {
        return Err(validation(format!(
            "--k-max must lie between 1 and the sample size minus one ({})",
            n.saturating_sub(1)
        )));
    }
    let series = Series::new(col).map_err(|e| validation(e.to_string()))?;
    let mut points = Vec::new();
    let mut failed: Option<(usize, PipelineError)> = None;
    for k in 1..=a.k_max {
        match gamma_ci(&series, TailCount::new(k).expect("positive"), 0.95) {
            Ok((g, (lo, hi))) => points.push(HillPoint {
                k,
                gamma_hat: g,
                lower: lo,
                upper: hi,
            }),
            Err(e) => {
                failed = Some((k, e));
                break;
            }
        }
    }
    write_hill_csv(&points, open_out(&a.out)?)
        .map_err(|e| validation(format!("cannot write {}: {e}", a.out.display())))?;
    if let Some((k, e)) = failed {
        eprintln!("warning: wrote {} of {} rows", points.len(), a.k_max);
        return Err(Failure::Estimation(format!("hill estimate at k = {k}: {e}")));
    }
    Ok(())
}

fn equicorrelation(d: usize, rho: f64) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { rho }).collect())
        .collect()
}

fn cmd_oracle(a: OracleArgs, seed: u64) -> Result<(), Failure> {
    let values: Vec<f64> = a
        .theta
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| validation(format!("--theta must be comma-separated numbers, got {:?}", a.theta)))?;
    let theta = ThetaVector::new(values).map_err(|e| validation(format!("--theta: {e}")))?;
    let d = theta.len();
    if a.j < 1 || a.j > d {
        return Err(validation(format!("--j must lie between 1 and {d}")));
    }
    let copula: Box<dyn TailCopula> = match a.copula {
        CopulaArg::Comonotone => Box::new(Comonotone::new(d)),
        CopulaArg::Independence => Box::new(Independence::new(d)),
        CopulaArg::T => {
            let scale = equicorrelation(d, a.rho);
            Box::new(
                McTCopula::new(a.nu, &scale, a.p, a.n_samples, seed)
                    .map_err(|e| validation(format!("t copula: {e}")))?,
            )
        }
    };
    let r = tailmax::taildep::implied_r_xy(a.j - 1, &theta, copula.as_ref())
        .map_err(|e| Failure::Estimation(format!("oracle evaluation: {e}")))?;
    println!("{r}");
    if d == 2 {
        let t = theta.as_slice();
        let joint = copula.eval(&[t[0], t[1]]);
        let closed = if a.j == 1 {
            t[0] + copula.eval(&[1.0, t[1]]) - joint
        } else {
            copula.eval(&[t[0], 1.0]) + t[1] - joint
        };
        println!("{closed}");
    }
    Ok(())
}
