//! Automated players: the Bayesian-network player, the Monte Carlo
//! probability player, the rule-based player, and simple scripted players
//! used in experiments and tests.

use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cards::{classify_cards, evaluate, partial_strength, Card, CardError, HandType17};
use crate::decision::{choose_action, Action, CurveParams, DecisionConfig, DecisionError, PotState, MAX_RAISES};
use crate::engine::{GameSummary, HistoryEntry, PlayerView, Seat};
use crate::inference::{action_class_of, infer, BeliefState, Evidence, InferenceError, NetworkRound};
use crate::matrices::{ActionBook, ActionClass, MatrixSet, RoundId, POOLED_ID};

pub const DEFAULT_SAMPLES: u32 = 10_000;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Cards(#[from] CardError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Bpp,
    Probabilistic,
    RuleBased,
    Threshold,
    Passive,
    RemoteHuman,
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StrategyKind::Bpp => "bpp",
            StrategyKind::Probabilistic => "prob",
            StrategyKind::RuleBased => "rules",
            StrategyKind::Threshold => "threshold",
            StrategyKind::Passive => "passive",
            StrategyKind::RemoteHuman => "remote_human",
        };
        f.write_str(s)
    }
}

/// A poker player. Decisions may depend only on the view and the agent's
/// own state.
pub trait Agent: Send {
    fn id(&self) -> &str;
    fn kind(&self) -> StrategyKind;
    fn decide(&mut self, view: &PlayerView, rng: &mut dyn RngCore) -> Result<Action, AgentError>;
    /// Called once per finished game.
    fn observe(&mut self, _summary: &GameSummary) {}
}

/// The Bayesian-network player.
pub struct BppAgent {
    id: String,
    matrices: Arc<MatrixSet>,
    book: Arc<Mutex<ActionBook>>,
    params: CurveParams,
    config: DecisionConfig,
    learning: bool,
}

impl BppAgent {
    /// A learning player whose action book starts from the matrix set's
    /// stored counts.
    pub fn new(id: impl Into<String>, matrices: Arc<MatrixSet>, params: CurveParams) -> BppAgent {
        let book = Arc::new(Mutex::new(matrices.action_counts.clone()));
        BppAgent {
            id: id.into(),
            matrices,
            book,
            params,
            config: DecisionConfig::default(),
            learning: true,
        }
    }

    pub fn with_learning(mut self, learning: bool) -> Self {
        self.learning = learning;
        self
    }

    pub fn with_config(mut self, config: DecisionConfig) -> Self {
        self.config = config;
        self
    }

    /// Shares an action book with other agents (e.g. service sessions).
    pub fn with_book(mut self, book: Arc<Mutex<ActionBook>>) -> Self {
        self.book = book;
        self
    }

    pub fn book(&self) -> Arc<Mutex<ActionBook>> {
        Arc::clone(&self.book)
    }

    pub fn params(&self) -> &CurveParams {
        &self.params
    }

    fn book_key(opponent: &str) -> &str {
        if opponent.is_empty() {
            POOLED_ID
        } else {
            opponent
        }
    }

    /// Network posterior for the current decision point.
    pub fn belief(&self, view: &PlayerView) -> Result<BeliefState, AgentError> {
        let bpp_current = classify_cards(&view.own_cards())?;
        let opp_upcards = classify_cards(&view.opp_up)?;
        let opp_action = opponent_action_class(&view.round_history, 1 - view.seat)?;
        let a_given_c = self
            .book
            .lock()
            .expect("action book lock")
            .action_matrix(Self::book_key(&view.opponent_id), view.round);
        let net = NetworkRound::new(&self.matrices, view.round, &a_given_c);
        Ok(infer(
            &net,
            &Evidence {
                bpp_current,
                opp_upcards,
                opp_action,
            },
        )?)
    }
}

impl Agent for BppAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::Bpp
    }

    fn decide(&mut self, view: &PlayerView, rng: &mut dyn RngCore) -> Result<Action, AgentError> {
        let belief = self.belief(view)?;
        let pot = view.pot_state();
        Ok(choose_action(belief.p_win, &pot, &self.params, view.round, &self.config, rng)?.action)
    }

    /// Learns M_{A|C} from showdowns: for each round, the opponent's
    /// action class (see [`opponent_action_class`]) is credited to its hand
    /// type at that round.
    fn observe(&mut self, summary: &GameSummary) {
        if !self.learning {
            return;
        }
        let Some(hole) = summary.opp_hole else {
            return;
        };
        let mut opp_cards = vec![hole];
        opp_cards.extend_from_slice(&summary.opp_up);
        let key = Self::book_key(&summary.opponent_id).to_string();
        let mut book = self.book.lock().expect("action book lock");
        for round in RoundId::ALL {
            let entries: Vec<HistoryEntry> = summary.history.iter().filter(|h| h.round == round).copied().collect();
            let Ok(Some(class)) = opponent_action_class(&entries, 1 - summary.seat) else {
                continue;
            };
            let opp_type = classify_cards(&opp_cards[..round.cards_dealt()])
                .expect("showdown hands are complete");
            book.record(&key, round, opp_type, class);
        }
    }
}

/// Class of `opponent`'s most recent action in one round's history. A
/// call made at the raise cap is skipped: it was the only way to stay in,
/// so the opponent's last raise is the informative action.
pub fn opponent_action_class(round: &[HistoryEntry], opponent: Seat) -> Result<Option<ActionClass>, InferenceError> {
    let mut raises = 0;
    let mut actions = Vec::new();
    for h in round {
        let forced = h.action == Action::Call && raises >= MAX_RAISES;
        if h.action == Action::Raise {
            raises += 1;
        }
        if h.seat == opponent && !forced {
            actions.push(h.action);
        }
    }
    action_class_of(&actions)
}

/// Monte Carlo estimate of the chance that `own` (completed to five cards)
/// beats an opponent showing `opp_up` with an unknown hole card. Ties
/// count one half.
pub fn estimate_win_probability<R: Rng + ?Sized>(
    own: &[Card],
    opp_up: &[Card],
    samples: u32,
    rng: &mut R,
) -> f64 {
    assert!(samples > 0, "need at least one sample");
    let mut unseen: Vec<Card> = Card::all()
        .filter(|c| !own.contains(c) && !opp_up.contains(c))
        .collect();
    let own_need = 5 - own.len();
    let opp_need = 5 - opp_up.len();
    let need = own_need + opp_need;
    let mut mine = [own[0]; 5];
    mine[..own.len()].copy_from_slice(own);
    let mut theirs = [own[0]; 5];
    theirs[..opp_up.len()].copy_from_slice(opp_up);
    let n = unseen.len();
    let mut credit = 0u64;
    for _ in 0..samples {
        for i in 0..need {
            let j = rng.random_range(i..n);
            unseen.swap(i, j);
        }
        mine[own.len()..].copy_from_slice(&unseen[..own_need]);
        theirs[opp_up.len()..].copy_from_slice(&unseen[own_need..need]);
        credit += match evaluate(&mine).cmp(&evaluate(&theirs)) {
            std::cmp::Ordering::Greater => 2,
            std::cmp::Ordering::Equal => 1,
            std::cmp::Ordering::Less => 0,
        };
    }
    credit as f64 / (2.0 * samples as f64)
}

/// Plays by the combinatorial win probability of the visible cards alone,
/// through the same curves as the Bayesian player.
pub struct ProbAgent {
    id: String,
    samples: u32,
    params: CurveParams,
    config: DecisionConfig,
}

impl ProbAgent {
    pub fn new(id: impl Into<String>, params: CurveParams) -> ProbAgent {
        ProbAgent {
            id: id.into(),
            samples: DEFAULT_SAMPLES,
            params,
            config: DecisionConfig::default(),
        }
    }

    pub fn with_samples(mut self, samples: u32) -> Self {
        assert!(samples >= 1);
        self.samples = samples;
        self
    }

    pub fn with_config(mut self, config: DecisionConfig) -> Self {
        self.config = config;
        self
    }
}

impl Agent for ProbAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::Probabilistic
    }

    fn decide(&mut self, view: &PlayerView, rng: &mut dyn RngCore) -> Result<Action, AgentError> {
        let p = estimate_win_probability(&view.own_cards(), &view.opp_up, self.samples, rng);
        let pot = view.pot_state();
        Ok(choose_action(p, &pot, &self.params, view.round, &self.config, rng)?.action)
    }
}

/// Which side's upcards the rule-based player's outer test looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RuleReading {
    /// Outer branch taken when the player's own upcards beat the
    /// adversary's upcards.
    #[default]
    OwnUpcardsAhead,
    /// Outer branch taken when the adversary's upcards beat the player's.
    AdversaryUpcardsAhead,
}

pub const RULE_STRONG_AGGRESSION: f64 = 0.90;
pub const RULE_EDGE_AGGRESSION: f64 = 0.80;
pub const RULE_BEATEN_FOLD: f64 = 0.85;
pub const RULE_RAISE: f64 = 0.85;
pub const RULE_CALL: f64 = 0.85;

/// What the rule-based player's decision tree selected, before mapping onto
/// the legal actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleBranch {
    /// Full hand beats the adversary's upcards on type: BET/RAISE 90%.
    Strong,
    /// Full hand beats the adversary's upcards within the same type: 80%.
    Edge,
    /// Adversary's upcards match or beat the full hand: FOLD/PASS 85%.
    Beaten,
    /// Facing a bet with a better type than the adversary shows: RAISE 85%.
    RaiseOverBet,
    /// Facing a bet otherwise: CALL 85%, FOLD 15%.
    CallOverBet,
    /// Not facing a bet: BET.
    Open,
}

/// The rule-based player's decision tree.
pub struct RuleAgent {
    id: String,
    reading: RuleReading,
}

impl RuleAgent {
    pub fn new(id: impl Into<String>) -> RuleAgent {
        RuleAgent {
            id: id.into(),
            reading: RuleReading::default(),
        }
    }

    pub fn with_reading(mut self, reading: RuleReading) -> Self {
        self.reading = reading;
        self
    }

    pub fn branch(&self, view: &PlayerView) -> Result<RuleBranch, AgentError> {
        let own = view.own_cards();
        let my_up = partial_strength(&view.own_up)?;
        let adv_up = partial_strength(&view.opp_up)?;
        let my_full = partial_strength(&own)?;
        let outer = match self.reading {
            RuleReading::OwnUpcardsAhead => my_up > adv_up,
            RuleReading::AdversaryUpcardsAhead => adv_up > my_up,
        };
        Ok(if outer {
            if my_full > adv_up {
                if my_full.0 > adv_up.0 {
                    RuleBranch::Strong
                } else {
                    RuleBranch::Edge
                }
            } else {
                RuleBranch::Beaten
            }
        } else if view.facing_bet {
            if my_full.0 > adv_up.0 {
                RuleBranch::RaiseOverBet
            } else {
                RuleBranch::CallOverBet
            }
        } else {
            RuleBranch::Open
        })
    }
}

/// FOLD/PASS: fold if facing a bet, else pass.
fn fold_or_pass(pot: &PotState) -> Action {
    if pot.facing_bet {
        Action::Fold
    } else {
        Action::Pass
    }
}

/// BET/RAISE, dropping to CALL at the raise cap.
fn bet_or_raise(pot: &PotState) -> Action {
    pot.aggressive_action().unwrap_or(Action::Call)
}

impl Agent for RuleAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::RuleBased
    }

    fn decide(&mut self, view: &PlayerView, rng: &mut dyn RngCore) -> Result<Action, AgentError> {
        let pot = view.pot_state();
        let coin = |p: f64, rng: &mut dyn RngCore| rng.random::<f64>() < p;
        Ok(match self.branch(view)? {
            RuleBranch::Strong => {
                if coin(RULE_STRONG_AGGRESSION, rng) {
                    bet_or_raise(&pot)
                } else {
                    pot.conservative_action()
                }
            }
            RuleBranch::Edge => {
                if coin(RULE_EDGE_AGGRESSION, rng) {
                    bet_or_raise(&pot)
                } else {
                    pot.conservative_action()
                }
            }
            RuleBranch::Beaten => {
                if coin(RULE_BEATEN_FOLD, rng) {
                    fold_or_pass(&pot)
                } else {
                    pot.conservative_action()
                }
            }
            RuleBranch::RaiseOverBet => {
                if coin(RULE_RAISE, rng) {
                    bet_or_raise(&pot)
                } else {
                    Action::Call
                }
            }
            RuleBranch::CallOverBet => {
                if coin(RULE_CALL, rng) {
                    Action::Call
                } else {
                    Action::Fold
                }
            }
            RuleBranch::Open => Action::Bet,
        })
    }
}

/// Bets or raises exactly when its current hand type is at least
/// `threshold`; otherwise passes or calls. Never folds.
pub struct ThresholdAgent {
    id: String,
    threshold: HandType17,
}

impl ThresholdAgent {
    pub fn new(id: impl Into<String>, threshold: HandType17) -> ThresholdAgent {
        ThresholdAgent {
            id: id.into(),
            threshold,
        }
    }
}

impl Agent for ThresholdAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::Threshold
    }

    fn decide(&mut self, view: &PlayerView, _rng: &mut dyn RngCore) -> Result<Action, AgentError> {
        let pot = view.pot_state();
        let strong = classify_cards(&view.own_cards())? >= self.threshold;
        Ok(match (strong, pot.aggressive_action()) {
            (true, Some(a)) => a,
            _ => pot.conservative_action(),
        })
    }
}

/// Passes and calls everything.
pub struct PassiveAgent {
    id: String,
}

impl PassiveAgent {
    pub fn new(id: impl Into<String>) -> PassiveAgent {
        PassiveAgent { id: id.into() }
    }
}

impl Agent for PassiveAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::Passive
    }

    fn decide(&mut self, view: &PlayerView, _rng: &mut dyn RngCore) -> Result<Action, AgentError> {
        Ok(view.pot_state().conservative_action())
    }
}
