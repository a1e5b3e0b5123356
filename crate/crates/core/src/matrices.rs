//! Conditional probability matrices: estimation by dealing, the win
//! matrix, learned opponent action counts, and the on-disk JSON format.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cards::{classify_dealt, evaluate, Card, HandType17, NUM_TYPES};
use crate::rng;

pub const FORMAT_VERSION: u32 = 1;
pub const ROW_TOLERANCE: f64 = 1e-9;
/// Opponent id under which observations from all opponents are pooled.
pub const POOLED_ID: &str = "*pooled*";

/// Deals per estimation shard. Shard `i` always uses stream `i` of the
/// seed, so results do not depend on the number of worker threads.
const SHARD_DEALS: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("num_deals must be at least 1")]
    NoDeals,
    #[error("round must be 1-4, got {0}")]
    BadRound(u8),
    #[error("{matrix} row {row} sums to {sum} (expected 1)")]
    Normalization { matrix: String, row: usize, sum: f64 },
    #[error("{matrix} entry [{row}][{col}] = {value} is out of range")]
    BadEntry {
        matrix: String,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("{what} has wrong shape: {detail}")]
    Shape { what: String, detail: String },
    #[error("unsupported format_version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Betting round; round `r` is played after `r + 1` cards have been dealt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct RoundId(u8);

impl RoundId {
    pub const ALL: [RoundId; 4] = [RoundId(1), RoundId(2), RoundId(3), RoundId(4)];
    pub const FIRST: RoundId = RoundId(1);
    pub const LAST: RoundId = RoundId(4);

    pub fn new(round: u8) -> Result<RoundId, MatrixError> {
        if (1..=4).contains(&round) {
            Ok(RoundId(round))
        } else {
            Err(MatrixError::BadRound(round))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position, for indexing per-round arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn cards_dealt(self) -> usize {
        self.0 as usize + 1
    }

    /// Betting rounds left including this one.
    pub fn rounds_remaining(self) -> u32 {
        5 - self.0 as u32
    }

    pub fn next(self) -> Option<RoundId> {
        (self.0 < 4).then(|| RoundId(self.0 + 1))
    }
}

impl TryFrom<u8> for RoundId {
    type Error = MatrixError;
    fn try_from(v: u8) -> Result<RoundId, MatrixError> {
        RoundId::new(v)
    }
}

impl From<RoundId> for u8 {
    fn from(r: RoundId) -> u8 {
        r.0
    }
}

impl fmt::Display for RoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Merged opponent behaviour: PASS/CALL versus BET/RAISE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionClass {
    Conservative,
    Aggressive,
}

impl ActionClass {
    pub fn index(self) -> usize {
        match self {
            ActionClass::Conservative => 0,
            ActionClass::Aggressive => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    CurrentGivenFinal,
    UpcardsGivenCurrent,
    ActionGivenCurrent,
}

/// A row-stochastic matrix: row = conditioning state, column = child state.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMatrix {
    round: RoundId,
    kind: MatrixKind,
    cols: usize,
    data: Vec<f64>,
}

impl ConditionalMatrix {
    fn cols_for(kind: MatrixKind) -> usize {
        match kind {
            MatrixKind::ActionGivenCurrent => 2,
            _ => NUM_TYPES,
        }
    }

    /// Normalizes each row of `counts` after adding `smoothing` to every cell.
    pub fn from_counts(
        round: RoundId,
        kind: MatrixKind,
        counts: &[Vec<f64>],
        smoothing: f64,
    ) -> Result<ConditionalMatrix, MatrixError> {
        let cols = Self::cols_for(kind);
        let mut data = Vec::with_capacity(NUM_TYPES * cols);
        check_shape(&format!("{kind:?}[{round}]"), counts, cols)?;
        for (i, row) in counts.iter().enumerate() {
            let total: f64 = row.iter().map(|c| c + smoothing).sum();
            if !(total > 0.0) {
                return Err(MatrixError::Normalization {
                    matrix: format!("{kind:?}[{round}]"),
                    row: i,
                    sum: 0.0,
                });
            }
            data.extend(row.iter().map(|c| (c + smoothing) / total));
        }
        Ok(ConditionalMatrix {
            round,
            kind,
            cols,
            data,
        })
    }

    /// Builds from already-normalized rows, validating them.
    pub fn from_rows(
        round: RoundId,
        kind: MatrixKind,
        rows: &[Vec<f64>],
    ) -> Result<ConditionalMatrix, MatrixError> {
        let cols = Self::cols_for(kind);
        let name = format!("{kind:?}[{round}]");
        check_shape(&name, rows, cols)?;
        let m = ConditionalMatrix {
            round,
            kind,
            cols,
            data: rows.iter().flatten().copied().collect(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn identity(round: RoundId, kind: MatrixKind) -> ConditionalMatrix {
        assert_ne!(kind, MatrixKind::ActionGivenCurrent);
        let mut data = vec![0.0; NUM_TYPES * NUM_TYPES];
        for i in 0..NUM_TYPES {
            data[i * NUM_TYPES + i] = 1.0;
        }
        ConditionalMatrix {
            round,
            kind,
            cols: NUM_TYPES,
            data,
        }
    }

    pub fn round(&self) -> RoundId {
        self.round
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        NUM_TYPES
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Column `col` as a likelihood vector over the row variable.
    pub fn column(&self, col: usize) -> [f64; NUM_TYPES] {
        let mut out = [0.0; NUM_TYPES];
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.get(i, col);
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn validate(&self) -> Result<(), MatrixError> {
        let name = format!("{:?}[{}]", self.kind, self.round);
        validate_rows(&name, &self.to_rows())
    }
}

fn check_shape(name: &str, rows: &[Vec<f64>], cols: usize) -> Result<(), MatrixError> {
    if rows.len() != NUM_TYPES || rows.iter().any(|r| r.len() != cols) {
        return Err(MatrixError::Shape {
            what: name.to_string(),
            detail: format!("expected {NUM_TYPES}x{cols}"),
        });
    }
    Ok(())
}

fn validate_rows(name: &str, rows: &[Vec<f64>]) -> Result<(), MatrixError> {
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v >= 0.0 && v <= 1.0) {
                return Err(MatrixError::BadEntry {
                    matrix: name.to_string(),
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(MatrixError::Normalization {
                matrix: name.to_string(),
                row: i,
                sum,
            });
        }
    }
    Ok(())
}

/// `W[i][j]` = probability that a final hand of type `i` beats one of type
/// `j`, ties credited half to each side.
#[derive(Debug, Clone, PartialEq)]
pub struct WinMatrix {
    entries: [[f64; NUM_TYPES]; NUM_TYPES],
}

impl WinMatrix {
    /// Off-diagonal cells fixed by type order; diagonal from `diagonal`.
    pub fn from_diagonal(diagonal: [f64; NUM_TYPES]) -> WinMatrix {
        let mut entries = [[0.0; NUM_TYPES]; NUM_TYPES];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = match i.cmp(&j) {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Less => 0.0,
                    std::cmp::Ordering::Equal => diagonal[i],
                };
            }
        }
        WinMatrix { entries }
    }

    /// Arbitrary entries; for tests and degenerate scenarios.
    pub fn from_entries(entries: [[f64; NUM_TYPES]; NUM_TYPES]) -> WinMatrix {
        WinMatrix { entries }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn entries(&self) -> &[[f64; NUM_TYPES]; NUM_TYPES] {
        &self.entries
    }
}

/// Per-round {conservative, aggressive} observation counts for one
/// opponent, indexed by the opponent's current hand type. Every cell
/// starts at one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    rounds: [[[u64; 2]; NUM_TYPES]; 4],
}

impl Default for ActionCounts {
    fn default() -> Self {
        ActionCounts {
            rounds: [[[1; 2]; NUM_TYPES]; 4],
        }
    }
}

impl ActionCounts {
    pub fn update(&mut self, round: RoundId, opp_type: HandType17, class: ActionClass) {
        self.rounds[round.index()][opp_type.index()][class.index()] += 1;
    }

    pub fn count(&self, round: RoundId, opp_type: HandType17, class: ActionClass) -> u64 {
        self.rounds[round.index()][opp_type.index()][class.index()]
    }

    /// Observations recorded for one row, excluding the initial pseudo-counts.
    pub fn observations(&self, round: RoundId, opp_type: HandType17) -> u64 {
        let row = self.rounds[round.index()][opp_type.index()];
        row[0] + row[1] - 2
    }

    /// The learned M_{A|C} for `round`: each row normalized.
    pub fn action_matrix(&self, round: RoundId) -> ConditionalMatrix {
        let counts: Vec<Vec<f64>> = self.rounds[round.index()]
            .iter()
            .map(|r| vec![r[0] as f64, r[1] as f64])
            .collect();
        ConditionalMatrix::from_counts(round, MatrixKind::ActionGivenCurrent, &counts, 0.0)
            .expect("action counts are at least one per cell")
    }

    pub fn merge(&mut self, other: &ActionCounts) {
        for (a, b) in self.rounds.iter_mut().flatten().zip(other.rounds.iter().flatten()) {
            // both carry the initial pseudo-count of one
            a[0] += b[0] - 1;
            a[1] += b[1] - 1;
        }
    }

    fn to_nested(&self) -> Vec<Vec<[u64; 2]>> {
        self.rounds.iter().map(|r| r.to_vec()).collect()
    }

    fn from_nested(id: &str, nested: &[Vec<[u64; 2]>]) -> Result<ActionCounts, MatrixError> {
        let shape_err = || MatrixError::Shape {
            what: format!("action_counts[{id}]"),
            detail: format!("expected 4x{NUM_TYPES}x2"),
        };
        if nested.len() != 4 {
            return Err(shape_err());
        }
        let mut out = ActionCounts::default();
        for (r, rows) in nested.iter().enumerate() {
            if rows.len() != NUM_TYPES {
                return Err(shape_err());
            }
            for (t, cell) in rows.iter().enumerate() {
                if cell[0] < 1 || cell[1] < 1 {
                    return Err(MatrixError::BadEntry {
                        matrix: format!("action_counts[{id}][{}]", r + 1),
                        row: t,
                        col: if cell[0] < 1 { 0 } else { 1 },
                        value: 0.0,
                    });
                }
                out.rounds[r][t] = *cell;
            }
        }
        Ok(out)
    }
}

/// Learned action counts keyed by opponent id, plus the pooled entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionBook {
    entries: BTreeMap<String, ActionCounts>,
}

impl ActionBook {
    pub fn new() -> ActionBook {
        ActionBook::default()
    }

    /// Counts for `opponent`; fresh (uniform) counts if never seen.
    pub fn counts(&self, opponent: &str) -> ActionCounts {
        self.entries.get(opponent).cloned().unwrap_or_default()
    }

    pub fn get(&self, opponent: &str) -> Option<&ActionCounts> {
        self.entries.get(opponent)
    }

    pub fn insert(&mut self, opponent: impl Into<String>, counts: ActionCounts) {
        self.entries.insert(opponent.into(), counts);
    }

    /// Records one showdown-observed action for `opponent` and the pool.
    pub fn record(
        &mut self,
        opponent: &str,
        round: RoundId,
        opp_type: HandType17,
        class: ActionClass,
    ) {
        self.entries
            .entry(opponent.to_string())
            .or_default()
            .update(round, opp_type, class);
        if opponent != POOLED_ID {
            self.entries
                .entry(POOLED_ID.to_string())
                .or_default()
                .update(round, opp_type, class);
        }
    }

    pub fn action_matrix(&self, opponent: &str, round: RoundId) -> ConditionalMatrix {
        match self.entries.get(opponent) {
            Some(c) => c.action_matrix(round),
            None => ActionCounts::default().action_matrix(round),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ActionCounts)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Result of dealing hands to estimate the prior and the per-round
/// M_{C|F} and M_{U|C} matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DealEstimate {
    pub final_prior: [f64; NUM_TYPES],
    pub c_given_f: [ConditionalMatrix; 4],
    pub u_given_c: [ConditionalMatrix; 4],
    /// Raw (unsmoothed) frequency of each current type, per round.
    pub current_marginal: [[f64; NUM_TYPES]; 4],
    /// Raw final-type counts.
    pub final_counts: [u64; NUM_TYPES],
}

#[derive(Clone)]
struct DealCounts {
    finals: [u64; NUM_TYPES],
    cf: Vec<[[u64; NUM_TYPES]; NUM_TYPES]>,
    uc: Vec<[[u64; NUM_TYPES]; NUM_TYPES]>,
}

impl DealCounts {
    fn new() -> DealCounts {
        DealCounts {
            finals: [0; NUM_TYPES],
            cf: vec![[[0; NUM_TYPES]; NUM_TYPES]; 4],
            uc: vec![[[0; NUM_TYPES]; NUM_TYPES]; 4],
        }
    }

    fn merge(mut self, other: DealCounts) -> DealCounts {
        for (a, b) in self.finals.iter_mut().zip(other.finals) {
            *a += b;
        }
        for (a, b) in self.cf.iter_mut().zip(&other.cf).chain(self.uc.iter_mut().zip(&other.uc)) {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
        }
        self
    }
}

/// Draws `n` cards into the front of `pool` by partial Fisher-Yates. Any
/// permutation of `pool` is a valid starting point.
fn draw<R: Rng>(pool: &mut [Card; 52], n: usize, rng: &mut R) {
    for i in 0..n {
        let j = rng.random_range(i..52);
        pool.swap(i, j);
    }
}

fn shard_ranges(num_deals: u64) -> Vec<(u64, u64)> {
    let shards = num_deals.div_ceil(SHARD_DEALS);
    (0..shards)
        .map(|s| (s, SHARD_DEALS.min(num_deals - s * SHARD_DEALS)))
        .collect()
}

fn fresh_pool() -> [Card; 52] {
    std::array::from_fn(Card::from_index)
}

/// Deals `num_deals` ordered five-card hands (card 1 down, cards 2-5 up)
/// and tabulates final, current and upcard types for each round.
///
/// M_{C|F} and M_{U|C} get +1 smoothing per cell, as does the final prior;
/// round 4 M_{C|F} is the exact identity since current equals final there.
pub fn estimate_deal_matrices(num_deals: u64, seed: u64) -> Result<DealEstimate, MatrixError> {
    if num_deals == 0 {
        return Err(MatrixError::NoDeals);
    }
    let counts = shard_ranges(num_deals)
        .into_par_iter()
        .map(|(shard, n)| {
            let mut rng = rng::stream(seed, shard);
            let mut pool = fresh_pool();
            let mut c = DealCounts::new();
            for _ in 0..n {
                draw(&mut pool, 5, &mut rng);
                let hand = &pool[..5];
                let fin = classify_dealt(hand).index();
                c.finals[fin] += 1;
                for r in 0..4 {
                    let cur = classify_dealt(&hand[..r + 2]).index();
                    let up = classify_dealt(&hand[1..r + 2]).index();
                    c.cf[r][fin][cur] += 1;
                    c.uc[r][cur][up] += 1;
                }
            }
            c
        })
        .reduce(DealCounts::new, DealCounts::merge);

    let total = num_deals as f64;
    let mut final_prior = [0.0; NUM_TYPES];
    let prior_total = total + NUM_TYPES as f64;
    for (p, &c) in final_prior.iter_mut().zip(&counts.finals) {
        *p = (c as f64 + 1.0) / prior_total;
    }

    let mut current_marginal = [[0.0; NUM_TYPES]; 4];
    for r in 0..4 {
        for row in &counts.cf[r] {
            for (m, &c) in current_marginal[r].iter_mut().zip(row) {
                *m += c as f64 / total;
            }
        }
    }

    let as_f64 = |m: &[[u64; NUM_TYPES]; NUM_TYPES]| -> Vec<Vec<f64>> {
        m.iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect()
    };
    let build = |kind: MatrixKind, tables: &[[[u64; NUM_TYPES]; NUM_TYPES]], r: usize| {
        let round = RoundId::ALL[r];
        if kind == MatrixKind::CurrentGivenFinal && round == RoundId::LAST {
            Ok(ConditionalMatrix::identity(round, kind))
        } else {
            ConditionalMatrix::from_counts(round, kind, &as_f64(&tables[r]), 1.0)
        }
    };
    let c_given_f = [0, 1, 2, 3].map(|r| build(MatrixKind::CurrentGivenFinal, &counts.cf, r));
    let u_given_c = [0, 1, 2, 3].map(|r| build(MatrixKind::UpcardsGivenCurrent, &counts.uc, r));
    let unwrap4 = |a: [Result<ConditionalMatrix, MatrixError>; 4]| -> Result<[ConditionalMatrix; 4], MatrixError> {
        let [a, b, c, d] = a;
        Ok([a?, b?, c?, d?])
    };

    Ok(DealEstimate {
        final_prior,
        c_given_f: unwrap4(c_given_f)?,
        u_given_c: unwrap4(u_given_c)?,
        current_marginal,
        final_counts: counts.finals,
    })
}

/// Raw tallies behind a [`WinMatrix`] estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct WinTally {
    /// Win credit for the row hand (ties count one half), per type pair.
    pub credit: [[f64; NUM_TYPES]; NUM_TYPES],
    pub trials: [[u64; NUM_TYPES]; NUM_TYPES],
}

/// Deals `num_deals` pairs of disjoint five-card hands from one shuffled
/// deck and tabulates each pair in both orientations.
pub fn estimate_win_tally(num_deals: u64, seed: u64) -> Result<WinTally, MatrixError> {
    if num_deals == 0 {
        return Err(MatrixError::NoDeals);
    }
    let empty = || WinTally {
        credit: [[0.0; NUM_TYPES]; NUM_TYPES],
        trials: [[0; NUM_TYPES]; NUM_TYPES],
    };
    let tally = shard_ranges(num_deals)
        .into_par_iter()
        .map(|(shard, n)| {
            // win estimation uses the upper half of the stream space
            let mut rng = rng::stream(seed, (1 << 63) | shard);
            let mut pool = fresh_pool();
            let mut t = empty();
            for _ in 0..n {
                draw(&mut pool, 10, &mut rng);
                let va = evaluate(&pool[..5]);
                let vb = evaluate(&pool[5..10]);
                let (ta, tb) = (va.hand_type().index(), vb.hand_type().index());
                let credit_a = match va.cmp(&vb) {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Less => 0.0,
                    std::cmp::Ordering::Equal => 0.5,
                };
                t.credit[ta][tb] += credit_a;
                t.trials[ta][tb] += 1;
                t.credit[tb][ta] += 1.0 - credit_a;
                t.trials[tb][ta] += 1;
            }
            t
        })
        .reduce(empty, |mut a, b| {
            for i in 0..NUM_TYPES {
                for j in 0..NUM_TYPES {
                    a.credit[i][j] += b.credit[i][j];
                    a.trials[i][j] += b.trials[i][j];
                }
            }
            a
        });
    Ok(tally)
}

/// Estimates W. Off-diagonal cells are overwritten with the exact 0/1
/// implied by type order; unobserved diagonal cells default to one half.
pub fn estimate_win_matrix(num_deals: u64, seed: u64) -> Result<WinMatrix, MatrixError> {
    let tally = estimate_win_tally(num_deals, seed)?;
    let diagonal = std::array::from_fn(|i| {
        if tally.trials[i][i] == 0 {
            0.5
        } else {
            tally.credit[i][i] / tally.trials[i][i] as f64
        }
    });
    Ok(WinMatrix::from_diagonal(diagonal))
}

/// Everything the Bayesian player needs: the estimated prior and CPTs, the
/// win matrix, and learned action counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    pub seed: u64,
    pub num_deals: u64,
    pub final_prior: [f64; NUM_TYPES],
    pub c_given_f: [ConditionalMatrix; 4],
    pub u_given_c: [ConditionalMatrix; 4],
    pub win: WinMatrix,
    pub action_counts: ActionBook,
}

impl MatrixSet {
    /// Runs both estimators with `num_deals` deals each.
    pub fn estimate(num_deals: u64, seed: u64) -> Result<MatrixSet, MatrixError> {
        let deals = estimate_deal_matrices(num_deals, seed)?;
        let win = estimate_win_matrix(num_deals, seed)?;
        Ok(MatrixSet {
            seed,
            num_deals,
            final_prior: deals.final_prior,
            c_given_f: deals.c_given_f,
            u_given_c: deals.u_given_c,
            win,
            action_counts: ActionBook::new(),
        })
    }

    pub fn to_json(&self) -> String {
        let file = MatrixFile {
            format_version: FORMAT_VERSION,
            hand_type_order: HandType17::ALL.iter().map(|t| t.to_string()).collect(),
            seed: self.seed,
            num_deals: self.num_deals,
            final_prior: self.final_prior.to_vec(),
            c_given_f: self.c_given_f.iter().map(ConditionalMatrix::to_rows).collect(),
            u_given_c: self.u_given_c.iter().map(ConditionalMatrix::to_rows).collect(),
            win_matrix: self.win.entries.iter().map(|r| r.to_vec()).collect(),
            action_counts: self
                .action_counts
                .iter()
                .map(|(k, v)| (k.clone(), v.to_nested()))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("matrix file serializes")
    }

    pub fn from_json(text: &str) -> Result<MatrixSet, MatrixError> {
        let file: MatrixFile = serde_json::from_str(text).map_err(|e| MatrixError::Parse {
            offset: if e.is_eof() {
                text.len()
            } else {
                byte_offset(text, e.line(), e.column())
            },
            message: e.to_string(),
        })?;
        if file.format_version != FORMAT_VERSION {
            return Err(MatrixError::Version {
                found: file.format_version,
                expected: FORMAT_VERSION,
            });
        }
        if file.final_prior.len() != NUM_TYPES {
            return Err(MatrixError::Shape {
                what: "final_prior".into(),
                detail: format!("expected {NUM_TYPES} entries"),
            });
        }
        validate_rows("final_prior", std::slice::from_ref(&file.final_prior))?;
        let per_round = |what: &str,
                         kind: MatrixKind,
                         mats: &[Vec<Vec<f64>>]|
         -> Result<[ConditionalMatrix; 4], MatrixError> {
            if mats.len() != 4 {
                return Err(MatrixError::Shape {
                    what: what.into(),
                    detail: "expected 4 rounds".into(),
                });
            }
            let m = |r: usize| ConditionalMatrix::from_rows(RoundId::ALL[r], kind, &mats[r]);
            Ok([m(0)?, m(1)?, m(2)?, m(3)?])
        };
        let c_given_f = per_round("c_given_f", MatrixKind::CurrentGivenFinal, &file.c_given_f)?;
        let u_given_c = per_round("u_given_c", MatrixKind::UpcardsGivenCurrent, &file.u_given_c)?;

        check_shape("win_matrix", &file.win_matrix, NUM_TYPES)?;
        let mut entries = [[0.0; NUM_TYPES]; NUM_TYPES];
        for (i, row) in file.win_matrix.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(MatrixError::BadEntry {
                        matrix: "win_matrix".into(),
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                entries[i][j] = v;
            }
        }

        let mut action_counts = ActionBook::new();
        for (id, nested) in &file.action_counts {
            action_counts.insert(id.clone(), ActionCounts::from_nested(id, nested)?);
        }

        Ok(MatrixSet {
            seed: file.seed,
            num_deals: file.num_deals,
            final_prior: std::array::from_fn(|i| file.final_prior[i]),
            c_given_f,
            u_given_c,
            win: WinMatrix { entries },
            action_counts,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MatrixError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MatrixSet, MatrixError> {
        MatrixSet::from_json(&fs::read_to_string(path)?)
    }

    /// The final prior collapsed onto the nine categories.
    pub fn category_prior(&self) -> [f64; 9] {
        collapse_to_categories(&self.final_prior)
    }
}

pub fn collapse_to_categories(dist: &[f64; NUM_TYPES]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for t in HandType17::ALL {
        out[t.category().index()] += dist[t.index()];
    }
    out
}

/// serde_json reports 1-based line and column; convert to a byte offset.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// On-disk layout. `hand_type_order` documents the row/column order of
/// every 17-wide axis.
#[derive(Serialize, Deserialize)]
struct MatrixFile {
    format_version: u32,
    #[serde(default)]
    hand_type_order: Vec<String>,
    seed: u64,
    num_deals: u64,
    final_prior: Vec<f64>,
    c_given_f: Vec<Vec<Vec<f64>>>,
    u_given_c: Vec<Vec<Vec<f64>>>,
    win_matrix: Vec<Vec<f64>>,
    #[serde(default)]
    action_counts: BTreeMap<String, Vec<Vec<[u64; 2]>>>,
}
