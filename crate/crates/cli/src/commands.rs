//! The `bayespoker` subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use bayespoker::cards::{Category, REFERENCE_CATEGORY_PROBABILITIES};
use bayespoker::decision::CurveParams;
use bayespoker::harness::{
    optimize_curves, run_match, run_match_parallel, HarnessError, MatchOptions, MatchReport, OpponentKind,
    OptimizerConfig, OptimizerResult,
};
use bayespoker::matrices::{
    collapse_to_categories, estimate_deal_matrices, estimate_win_matrix, ActionBook, MatrixError, MatrixSet,
};
use bayespoker::players::BppAgent;

use crate::service::{self, AppState};

pub const DATA_DIR_ENV: &str = "BAYESPOKER_DATA_DIR";
pub const MATRICES_FILE: &str = "matrices.json";
pub const CURVES_FILE: &str = "curves.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a curve file ({source})")]
    BadCurves {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("matrix file {path}: {source}")]
    Matrices {
        path: PathBuf,
        #[source]
        source: MatrixError,
    },
    #[error(transparent)]
    Estimate(#[from] MatrixError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "bayespoker", version, about = "Five-card stud against a Bayesian-network player")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deal random hands to estimate the network's matrices.
    EstimateMatrices(EstimateArgs),
    /// Play BPP against a fixed opponent and record the results.
    Simulate(SimulateArgs),
    /// Tune BPP's betting curves by stochastic hill climbing.
    Optimize(OptimizeArgs),
    /// Host games against BPP over HTTP and WebSocket.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, default_value_t = 10_000_000)]
    pub deals: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Defaults to `matrices.json` in the data directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpponentArg {
    Prob,
    Rules,
    Threshold,
}

impl From<OpponentArg> for OpponentKind {
    fn from(o: OpponentArg) -> OpponentKind {
        match o {
            OpponentArg::Prob => OpponentKind::Prob,
            OpponentArg::Rules => OpponentKind::Rules,
            OpponentArg::Threshold => OpponentKind::Threshold,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub opponent: OpponentArg,
    #[arg(long, default_value_t = 2000)]
    pub games: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub matrices: Option<PathBuf>,
    /// Plain curves or an optimizer result. Defaults to `curves.json` in
    /// the data directory, then to the built-in defaults.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "on")]
    pub learning: Switch,
    /// Per-game CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full game records, one JSON object per line.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 2000)]
    pub games_per_eval: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub step_scale: f64,
    /// Repeat to optimize the average over several opponents.
    #[arg(long, value_enum, default_values = ["rules"])]
    pub opponent: Vec<OpponentArg>,
    #[arg(long, default_value_t = bayespoker::players::DEFAULT_SAMPLES)]
    pub prob_samples: u32,
    #[arg(long)]
    pub matrices: Option<PathBuf>,
    /// Starting curves; built-in defaults if omitted.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long)]
    pub matrices: Option<PathBuf>,
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Base seed for sessions that do not bring their own.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_matrices(path: Option<&Path>) -> Result<MatrixSet, CliError> {
    let path = path.map(Path::to_path_buf).unwrap_or_else(|| data_dir().join(MATRICES_FILE));
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    MatrixSet::from_json(&text).map_err(|source| CliError::Matrices { path, source })
}

/// Reads plain curves or the `params` of an optimizer result. With no path,
/// falls back to the data directory and then to the defaults.
pub fn load_curves(path: Option<&Path>) -> Result<CurveParams, CliError> {
    let path = match path {
        Some(p) => p.to_path_buf(),
        None => {
            let p = data_dir().join(CURVES_FILE);
            if !p.exists() {
                return Ok(CurveParams::default());
            }
            p
        }
    };
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| CliError::BadCurves { path: path.clone(), source })?;
    let value = match value.get("params") {
        Some(p) => p.clone(),
        None => value,
    };
    serde_json::from_value(value).map_err(|source| CliError::BadCurves { path, source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Runs a subcommand and returns what it prints on stdout.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::EstimateMatrices(a) => estimate(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Optimize(a) => optimize(&a),
        Command::Serve(a) => serve(&a).map(|()| String::new()),
    }
}

pub fn estimate(args: &EstimateArgs) -> Result<String, CliError> {
    if args.deals == 0 {
        return Err(CliError::Usage("--deals must be positive".into()));
    }
    let out = args.out.clone().unwrap_or_else(|| data_dir().join(MATRICES_FILE));
    let deals = estimate_deal_matrices(args.deals, args.seed)?;
    let set = MatrixSet {
        seed: args.seed,
        num_deals: args.deals,
        final_prior: deals.final_prior,
        c_given_f: deals.c_given_f.clone(),
        u_given_c: deals.u_given_c.clone(),
        win: estimate_win_matrix(args.deals, args.seed)?,
        action_counts: ActionBook::new(),
    };
    write_file(&out, &set.to_json())?;
    // the table uses raw frequencies; the stored prior is smoothed
    let n = args.deals as f64;
    let raw: Vec<f64> = deals.final_counts.iter().map(|&c| c as f64 / n).collect();
    let cats = collapse_to_categories(&raw.try_into().expect("one entry per type"));
    Ok(category_table(&cats))
}

pub fn category_table(observed: &[f64; 9]) -> String {
    let mut s = format!("{:<16}{:>12}{:>12}{:>12}\n", "category", "observed", "reference", "diff");
    for c in Category::ALL {
        let (o, r) = (observed[c.index()], REFERENCE_CATEGORY_PROBABILITIES[c.index()]);
        s.push_str(&format!("{:<16}{:>12.7}{:>12.7}{:>+12.7}\n", format!("{c:?}"), o, r, o - r));
    }
    s
}

pub fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    if args.games == 0 {
        return Err(CliError::Usage("--games must be positive".into()));
    }
    let matrices = Arc::new(load_matrices(args.matrices.as_deref())?);
    let curves = load_curves(args.curves.as_deref())?;
    let report = simulate_report(matrices, curves, args.opponent.into(), args.games, args.seed, args.learning)?;
    if let Some(out) = &args.out {
        write_file(out, &report.csv_string()?)?;
    }
    if let Some(path) = &args.records {
        report.write_records(path)?;
    }
    Ok(serde_json::to_string(&report.stats.summary()).expect("summary serializes"))
}

/// Learning runs sequentially so each game sees the counts from all
/// earlier ones; without learning, games are independent and run in
/// parallel with identical results.
pub fn simulate_report(
    matrices: Arc<MatrixSet>,
    curves: CurveParams,
    opponent: OpponentKind,
    games: usize,
    seed: u64,
    learning: Switch,
) -> Result<MatchReport, CliError> {
    let report = match learning {
        Switch::On => {
            let mut bpp = BppAgent::new("bpp", matrices, curves);
            let mut opp = opponent.make(CurveParams::default());
            run_match(&mut bpp, opp.as_mut(), games, seed, MatchOptions::default())?
        }
        Switch::Off => run_match_parallel(
            || Box::new(BppAgent::new("bpp", Arc::clone(&matrices), curves).with_learning(false)),
            || opponent.make(CurveParams::default()),
            games,
            seed,
            MatchOptions::default(),
        )?,
    };
    Ok(report)
}

pub fn optimize(args: &OptimizeArgs) -> Result<String, CliError> {
    let matrices = Arc::new(load_matrices(args.matrices.as_deref())?);
    let initial = match &args.init {
        Some(p) => load_curves(Some(p))?,
        None => CurveParams::default(),
    };
    let opponents: Vec<OpponentKind> = args.opponent.iter().map(|&o| o.into()).collect();
    let config = OptimizerConfig {
        iters: args.iters,
        games_per_eval: args.games_per_eval,
        step_scale: args.step_scale,
        seed: args.seed,
        prob_samples: args.prob_samples,
    };
    let result = optimize_curves(matrices, &opponents, initial, &config)?;
    write_file(&args.out, &optimizer_json(&result))?;
    let accepted = result.trail.iter().filter(|s| s.accepted).count();
    Ok(format!(
        "{{\"accepted_steps\":{accepted},\"params\":{}}}",
        serde_json::to_string(&result.params).expect("curves serialize")
    ))
}

fn optimizer_json(result: &OptimizerResult) -> String {
    serde_json::to_string_pretty(result).expect("optimizer result serializes")
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let matrices = Arc::new(load_matrices(args.matrices.as_deref())?);
    let curves = load_curves(args.curves.as_deref())?;
    let state = AppState::new(matrices, curves, args.seed);
    let addr = format!("{}:{}", args.host, args.port);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io_err(Path::new(&addr)))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(io_err(Path::new(&addr)))?;
        eprintln!("listening on http://{addr}");
        axum::serve(listener, service::router(state))
            .await
            .map_err(io_err(Path::new(&addr)))
    })
}
