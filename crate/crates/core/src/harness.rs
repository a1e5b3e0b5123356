//! Matches, significance tests and curve optimization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::cards::HandType17;
use crate::decision::{CurveParams, DecisionConfig};
use crate::engine::{play_game, EngineError, GameRecord};
use crate::matrices::MatrixSet;
use crate::players::{Agent, BppAgent, ProbAgent, RuleAgent, StrategyKind, ThresholdAgent, DEFAULT_SAMPLES};
use crate::rng;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("need at least {needed} games, got {got}")]
    InsufficientGames { needed: usize, got: usize },
    #[error("invalid optimizer setting: {0}")]
    BadSetting(String),
    #[error("game {game} failed after {played} completed games: {source}")]
    GameFailed {
        game: usize,
        played: usize,
        partial: Box<MatchReport>,
        #[source]
        source: EngineError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Two-tailed p-value for a t statistic under the normal approximation.
pub fn two_tailed_p(t: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    erfc(t.abs() / std::f64::consts::SQRT_2)
}

/// The JSON summary printed by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub t: f64,
    pub p: f64,
}

/// Per-game net winnings of one player and the one-sample test of a zero
/// mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchStats {
    pub nets: Vec<i64>,
    pub cumulative: Vec<i64>,
    pub mean: f64,
    pub sd: f64,
    pub t: f64,
    pub p: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// `diff / se`, with a zero standard error giving 0 (no difference) or
/// an infinite statistic.
fn ratio_t(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

impl MatchStats {
    pub fn from_nets(nets: Vec<i64>) -> MatchStats {
        let cumulative = nets
            .iter()
            .scan(0i64, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        let xs: Vec<f64> = nets.iter().map(|&x| x as f64).collect();
        let (mean, sd) = mean_sd(&xs);
        let t = if nets.len() < 2 {
            0.0
        } else {
            ratio_t(mean, sd / (nets.len() as f64).sqrt())
        };
        MatchStats {
            nets,
            cumulative,
            mean,
            sd,
            t,
            p: two_tailed_p(t),
        }
    }

    pub fn summary(&self) -> Summary {
        Summary {
            n: self.nets.len(),
            mean: self.mean,
            sd: self.sd,
            t: self.t,
            p: self.p,
        }
    }

    pub fn total(&self) -> i64 {
        self.cumulative.last().copied().unwrap_or(0)
    }
}

/// One CSV row per game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRow {
    pub game_index: usize,
    pub net: i64,
    pub cumulative: i64,
    pub opponent_kind: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub stats: MatchStats,
    pub rows: Vec<MatchRow>,
    pub records: Vec<GameRecord>,
}

impl MatchReport {
    fn build(records: Vec<GameRecord>, nets: Vec<i64>, seeds: Vec<u64>, opponent_kind: &str) -> MatchReport {
        let stats = MatchStats::from_nets(nets);
        let rows = stats
            .nets
            .iter()
            .zip(&stats.cumulative)
            .zip(&seeds)
            .enumerate()
            .map(|(i, ((&net, &cumulative), &seed))| MatchRow {
                game_index: i,
                net,
                cumulative,
                opponent_kind: opponent_kind.to_string(),
                seed,
            })
            .collect();
        MatchReport {
            stats,
            rows,
            records,
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Appends one JSON line per game record.
    pub fn write_records(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        let mut w = BufWriter::new(File::options().create(true).append(true).open(path)?);
        for r in &self.records {
            writeln!(w, "{}", r.to_json_line())?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchOptions {
    /// Deal each deck twice with the seats swapped.
    pub mirrored: bool,
}

/// Seed and seat of player A for game `g`. Player A alternates seats.
pub fn game_plan(seed: u64, g: usize, options: MatchOptions) -> (u64, usize) {
    let deal = if options.mirrored { g / 2 } else { g };
    (rng::child_seed(seed, deal as u64), g % 2)
}

fn play_seated(a: &mut dyn Agent, b: &mut dyn Agent, seat_a: usize, seed: u64) -> Result<(GameRecord, i64), EngineError> {
    if seat_a == 0 {
        let r = play_game(a, b, seed)?;
        let net = r.nets[0];
        Ok((r, net))
    } else {
        let r = play_game(b, a, seed)?;
        let net = r.nets[1];
        Ok((r, net))
    }
}

/// Plays `games` games between `a` and `b`, sequentially, so agent state
/// (learning) carries across games. Nets are from `a`'s side.
pub fn run_match(
    a: &mut dyn Agent,
    b: &mut dyn Agent,
    games: usize,
    seed: u64,
    options: MatchOptions,
) -> Result<MatchReport, HarnessError> {
    if games == 0 {
        return Err(HarnessError::InsufficientGames { needed: 1, got: 0 });
    }
    let kind = b.kind().to_string();
    let mut records = Vec::with_capacity(games);
    let mut nets = Vec::with_capacity(games);
    let mut seeds = Vec::with_capacity(games);
    for g in 0..games {
        let (game_seed, seat_a) = game_plan(seed, g, options);
        match play_seated(a, b, seat_a, game_seed) {
            Ok((record, net)) => {
                records.push(record);
                nets.push(net);
                seeds.push(game_seed);
            }
            Err(source) => {
                let played = records.len();
                return Err(HarnessError::GameFailed {
                    game: g,
                    played,
                    partial: Box::new(MatchReport::build(records, nets, seeds, &kind)),
                    source,
                });
            }
        }
    }
    Ok(MatchReport::build(records, nets, seeds, &kind))
}

/// Parallel variant for agents without cross-game state: every game gets
/// fresh agents from the factories. Matches [`run_match`] exactly when the
/// agents do not learn.
pub fn run_match_parallel<FA, FB>(
    make_a: FA,
    make_b: FB,
    games: usize,
    seed: u64,
    options: MatchOptions,
) -> Result<MatchReport, HarnessError>
where
    FA: Fn() -> Box<dyn Agent> + Sync,
    FB: Fn() -> Box<dyn Agent> + Sync,
{
    if games == 0 {
        return Err(HarnessError::InsufficientGames { needed: 1, got: 0 });
    }
    let kind = make_b().kind().to_string();
    let results: Vec<Result<(GameRecord, i64, u64), (usize, EngineError)>> = (0..games)
        .into_par_iter()
        .map(|g| {
            let (game_seed, seat_a) = game_plan(seed, g, options);
            let (mut a, mut b) = (make_a(), make_b());
            play_seated(a.as_mut(), b.as_mut(), seat_a, game_seed)
                .map(|(r, n)| (r, n, game_seed))
                .map_err(|e| (g, e))
        })
        .collect();
    let mut records = Vec::with_capacity(games);
    let mut nets = Vec::with_capacity(games);
    let mut seeds = Vec::with_capacity(games);
    for r in results {
        match r {
            Ok((record, net, s)) => {
                records.push(record);
                nets.push(net);
                seeds.push(s);
            }
            Err((game, source)) => {
                let played = records.len();
                return Err(HarnessError::GameFailed {
                    game,
                    played,
                    partial: Box::new(MatchReport::build(records, nets, seeds, &kind)),
                    source,
                });
            }
        }
    }
    Ok(MatchReport::build(records, nets, seeds, &kind))
}

/// Difference-of-means test between two windows of a net-winnings log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowComparison {
    pub early_mean: f64,
    pub late_mean: f64,
    pub t: f64,
    pub p: f64,
}

/// Two-sample pooled-variance t test, late minus early.
pub fn two_sample_t(early: &[f64], late: &[f64]) -> WindowComparison {
    let (m1, s1) = mean_sd(early);
    let (m2, s2) = mean_sd(late);
    let (n1, n2) = (early.len() as f64, late.len() as f64);
    let pooled = ((n1 - 1.0) * s1 * s1 + (n2 - 1.0) * s2 * s2) / (n1 + n2 - 2.0);
    let se = (pooled * (1.0 / n1 + 1.0 / n2)).sqrt();
    let t = ratio_t(m2 - m1, se);
    WindowComparison {
        early_mean: m1,
        late_mean: m2,
        t,
        p: two_tailed_p(t),
    }
}

pub const LEARNING_WINDOW: usize = 200;

/// Compares the first `window` games with the last `window` games.
pub fn learning_effect(nets: &[i64], window: usize) -> Result<WindowComparison, HarnessError> {
    if window < 2 || nets.len() < 2 * window {
        return Err(HarnessError::InsufficientGames {
            needed: 2 * window.max(2),
            got: nets.len(),
        });
    }
    let as_f = |s: &[i64]| s.iter().map(|&x| x as f64).collect::<Vec<_>>();
    Ok(two_sample_t(
        &as_f(&nets[..window]),
        &as_f(&nets[nets.len() - window..]),
    ))
}

/// Opponents available to experiments and the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentKind {
    Prob,
    Rules,
    Threshold,
}

impl OpponentKind {
    pub fn make(self, params: CurveParams) -> Box<dyn Agent> {
        self.make_with_samples(params, DEFAULT_SAMPLES)
    }

    /// As [`make`](Self::make), with the probabilistic player drawing
    /// `samples` completions per decision.
    pub fn make_with_samples(self, params: CurveParams, samples: u32) -> Box<dyn Agent> {
        match self {
            OpponentKind::Prob => Box::new(ProbAgent::new("prob", params).with_samples(samples)),
            OpponentKind::Rules => Box::new(RuleAgent::new("rules")),
            OpponentKind::Threshold => Box::new(ThresholdAgent::new("threshold", HandType17::PairLow)),
        }
    }

    pub fn strategy(self) -> StrategyKind {
        match self {
            OpponentKind::Prob => StrategyKind::Probabilistic,
            OpponentKind::Rules => StrategyKind::RuleBased,
            OpponentKind::Threshold => StrategyKind::Threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub iters: usize,
    /// Games per opponent per evaluation.
    pub games_per_eval: usize,
    pub step_scale: f64,
    pub seed: u64,
    /// Completions per decision for a probabilistic opponent.
    pub prob_samples: u32,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            iters: 100,
            games_per_eval: 1000,
            step_scale: 0.05,
            seed: 0,
            prob_samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerStep {
    pub iter: usize,
    pub block_seed: u64,
    pub candidate: CurveParams,
    pub incumbent_score: f64,
    pub candidate_score: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub params: CurveParams,
    pub initial: CurveParams,
    pub config: OptimizerTrailConfig,
    pub trail: Vec<OptimizerStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrailConfig {
    pub iters: usize,
    pub games_per_eval: usize,
    pub step_scale: f64,
    pub seed: u64,
    pub prob_samples: u32,
    pub opponents: Vec<OpponentKind>,
}

impl From<&OptimizerConfig> for OptimizerTrailConfig {
    fn from(c: &OptimizerConfig) -> Self {
        OptimizerTrailConfig {
            iters: c.iters,
            games_per_eval: c.games_per_eval,
            step_scale: c.step_scale,
            seed: c.seed,
            prob_samples: c.prob_samples,
            opponents: Vec::new(),
        }
    }
}

/// Stochastic hill climbing over the twelve curve parameters.
///
/// Each iteration perturbs all parameters with N(0, step_scale²) noise and
/// scores candidate and incumbent on the same block seed; the candidate
/// replaces the incumbent only if it scores strictly higher. `objective`
/// receives the parameters and the block seed and returns a score to
/// maximize.
pub fn hill_climb<F>(initial: CurveParams, config: &OptimizerConfig, objective: F) -> OptimizerResult
where
    F: Fn(&CurveParams, u64) -> f64 + Sync,
{
    let mut rng = rng::stream(config.seed, u64::MAX);
    let noise = Normal::new(0.0, config.step_scale.max(0.0)).expect("finite step scale");
    let mut incumbent = initial;
    let mut trail = Vec::with_capacity(config.iters);
    for iter in 0..config.iters {
        let block_seed = rng::child_seed(config.seed, iter as u64);
        let mut v = incumbent.to_vector();
        if config.step_scale > 0.0 {
            for x in v.iter_mut() {
                *x += noise.sample(&mut rng);
            }
        }
        let candidate = CurveParams::from_vector(&v);
        let (incumbent_score, candidate_score) = rayon::join(
            || objective(&incumbent, block_seed),
            || objective(&candidate, block_seed),
        );
        let accepted = candidate_score > incumbent_score;
        if accepted {
            incumbent = candidate;
        }
        trail.push(OptimizerStep {
            iter,
            block_seed,
            candidate,
            incumbent_score,
            candidate_score,
            accepted,
        });
    }
    OptimizerResult {
        params: incumbent,
        initial,
        config: config.into(),
        trail,
    }
}

/// Mean net per game of a non-learning BPP with `params` against
/// `opponent` over one block of games.
pub fn evaluate_curves(
    matrices: &Arc<MatrixSet>,
    params: &CurveParams,
    opponent: OpponentKind,
    opponent_params: CurveParams,
    games: usize,
    block_seed: u64,
) -> Result<f64, HarnessError> {
    evaluate_curves_with_samples(matrices, params, opponent, opponent_params, DEFAULT_SAMPLES, games, block_seed)
}

fn evaluate_curves_with_samples(
    matrices: &Arc<MatrixSet>,
    params: &CurveParams,
    opponent: OpponentKind,
    opponent_params: CurveParams,
    prob_samples: u32,
    games: usize,
    block_seed: u64,
) -> Result<f64, HarnessError> {
    let report = run_match_parallel(
        || Box::new(BppAgent::new("bpp", Arc::clone(matrices), *params).with_learning(false)),
        || opponent.make_with_samples(opponent_params, prob_samples),
        games,
        block_seed,
        MatchOptions::default(),
    )?;
    Ok(report.stats.mean)
}

/// Tunes BPP's curves by [`hill_climb`] on mean net winnings, averaged
/// over `opponents`, with candidate and incumbent always playing the same
/// deals. Opponents play with default curves.
pub fn optimize_curves(
    matrices: Arc<MatrixSet>,
    opponents: &[OpponentKind],
    initial: CurveParams,
    config: &OptimizerConfig,
) -> Result<OptimizerResult, HarnessError> {
    if opponents.is_empty() {
        return Err(HarnessError::BadSetting("need at least one opponent".into()));
    }
    if config.iters < 1 {
        return Err(HarnessError::BadSetting("iters must be at least 1".into()));
    }
    if config.games_per_eval < 100 {
        return Err(HarnessError::BadSetting("games_per_eval must be at least 100".into()));
    }
    if !(config.step_scale >= 0.0 && config.step_scale.is_finite()) {
        return Err(HarnessError::BadSetting("step_scale must be finite and non-negative".into()));
    }
    if config.prob_samples == 0 {
        return Err(HarnessError::BadSetting("prob_samples must be positive".into()));
    }
    let opponent_params = CurveParams::default();
    let objective = |p: &CurveParams, block: u64| {
        let total: f64 = opponents
            .iter()
            .enumerate()
            .map(|(i, &opp)| {
                let seed = rng::child_seed(block, i as u64);
                evaluate_curves_with_samples(
                    &matrices,
                    p,
                    opp,
                    opponent_params,
                    config.prob_samples,
                    config.games_per_eval,
                    seed,
                )
                .unwrap_or(f64::NEG_INFINITY)
            })
            .sum();
        total / opponents.len() as f64
    };
    let mut result = hill_climb(initial, config, objective);
    result.config.opponents = opponents.to_vec();
    Ok(result)
}

/// Default BPP decision settings, re-exported for callers building agents.
pub fn default_decision_config() -> DecisionConfig {
    DecisionConfig::default()
}
