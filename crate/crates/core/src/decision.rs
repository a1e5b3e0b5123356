//! Turning a winning probability into an action: pot odds, the calling
//! threshold, the three betting curves, randomized selection and the
//! last-round bluff.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::matrices::{ActionClass, RoundId};

pub const MAX_RAISES: u8 = 3;
pub const DEFAULT_BLUFF_PROBABILITY: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("non-positive denominator {0} in pot odds")]
    NonPositiveDenominator(f64),
    #[error("winning probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("no legal action")]
    NoLegalAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Pass,
    Bet,
    Call,
    Raise,
    Fold,
}

impl Action {
    /// PASS/CALL are conservative, BET/RAISE aggressive; FOLD has no class.
    pub fn class(self) -> Option<ActionClass> {
        match self {
            Action::Pass | Action::Call => Some(ActionClass::Conservative),
            Action::Bet | Action::Raise => Some(ActionClass::Aggressive),
            Action::Fold => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Pass => "PASS",
            Action::Bet => "BET",
            Action::Call => "CALL",
            Action::Raise => "RAISE",
            Action::Fold => "FOLD",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;
    fn from_str(s: &str) -> Result<Action, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PASS" => Ok(Action::Pass),
            "BET" => Ok(Action::Bet),
            "CALL" => Ok(Action::Call),
            "RAISE" => Ok(Action::Raise),
            "FOLD" => Ok(Action::Fold),
            other => Err(format!("unknown action {other:?}")),
        }
    }
}

/// Legal actions for a betting position.
pub fn legal_actions(facing_bet: bool, raises_this_round: u8) -> Vec<Action> {
    if !facing_bet {
        vec![Action::Pass, Action::Bet]
    } else if raises_this_round < MAX_RAISES {
        vec![Action::Fold, Action::Call, Action::Raise]
    } else {
        vec![Action::Fold, Action::Call]
    }
}

/// Pot-odds inputs, in betting units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotState {
    /// Current pot size `c`.
    pub pot: f64,
    /// Expected cost `k` of reaching the showdown.
    pub cost_to_showdown: f64,
    /// Number of players `n`.
    pub players: f64,
    /// Betting unit `u`.
    pub unit: f64,
    pub facing_bet: bool,
    pub raises_this_round: u8,
}

impl PotState {
    /// Two players, unit bets, and `k` = one unit per betting round left
    /// (current round included).
    pub fn heads_up(pot: u32, round: RoundId, facing_bet: bool, raises_this_round: u8) -> PotState {
        PotState {
            pot: pot as f64,
            cost_to_showdown: round.rounds_remaining() as f64,
            players: 2.0,
            unit: 1.0,
            facing_bet,
            raises_this_round,
        }
    }

    pub fn legal_actions(&self) -> Vec<Action> {
        legal_actions(self.facing_bet, self.raises_this_round)
    }

    pub fn aggressive_action(&self) -> Option<Action> {
        if !self.facing_bet {
            Some(Action::Bet)
        } else if self.raises_this_round < MAX_RAISES {
            Some(Action::Raise)
        } else {
            None
        }
    }

    pub fn conservative_action(&self) -> Action {
        if self.facing_bet {
            Action::Call
        } else {
            Action::Pass
        }
    }
}

fn ratio(num: f64, den: f64) -> Result<f64, DecisionError> {
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(DecisionError::NonPositiveDenominator(den))
    }
}

/// Probability from odds: `o / (1 + o)`.
pub fn odds_to_probability(odds: f64) -> f64 {
    odds / (1.0 + odds)
}

/// Zadeh's pot odds, `k / (c + (n - 1) k)`.
pub fn pot_odds_zadeh(pot: &PotState) -> Result<f64, DecisionError> {
    let (c, k, n) = (pot.pot, pot.cost_to_showdown, pot.players);
    ratio(k, c + (n - 1.0) * k)
}

/// The threshold implied by Zadeh's odds, `k / (c + n k)`.
pub fn threshold_zadeh(pot: &PotState) -> Result<f64, DecisionError> {
    let (c, k, n) = (pot.pot, pot.cost_to_showdown, pot.players);
    ratio(k, c + n * k)
}

/// Pot odds for a player midway round the table,
/// `k / (c + (n - 1) k - ((n - 1) / 2) u)`.
pub fn pot_odds_midtable(pot: &PotState) -> Result<f64, DecisionError> {
    let (c, k, n, u) = (pot.pot, pot.cost_to_showdown, pot.players, pot.unit);
    ratio(k, c + (n - 1.0) * k - (n - 1.0) / 2.0 * u)
}

/// Heads-up pot odds for calling a bet, `k / (c + k - u)`.
pub fn pot_odds_call(pot: &PotState) -> Result<f64, DecisionError> {
    let (c, k, u) = (pot.pot, pot.cost_to_showdown, pot.unit);
    ratio(k, c + k - u)
}

/// Calling threshold `θ = k / (c + 2k - u)`: the winning probability at
/// which calling and folding have equal expectation.
pub fn threshold(pot: &PotState) -> Result<f64, DecisionError> {
    let (c, k, u) = (pot.pot, pot.cost_to_showdown, pot.unit);
    ratio(k, c + 2.0 * k - u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotOddsVariants {
    pub zadeh: f64,
    pub midtable: f64,
    pub correct: f64,
}

pub fn pot_odds_variants(pot: &PotState) -> Result<PotOddsVariants, DecisionError> {
    Ok(PotOddsVariants {
        zadeh: pot_odds_zadeh(pot)?,
        midtable: pot_odds_midtable(pot)?,
        correct: pot_odds_call(pot)?,
    })
}

/// Horizontal shifts of the three curves for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundCurve {
    pub f_b: f64,
    pub f_f: f64,
    pub f_c: f64,
}

impl Default for RoundCurve {
    fn default() -> Self {
        RoundCurve {
            f_b: 0.10,
            f_f: 0.05,
            f_c: 0.05,
        }
    }
}

/// The twelve curve parameters, one [`RoundCurve`] per round. Serializes
/// as `{"1": {"f_b": .., "f_f": .., "f_c": ..}, ..., "4": {..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurveParams {
    pub rounds: [RoundCurve; 4],
}

impl CurveParams {
    pub fn round(&self, round: RoundId) -> &RoundCurve {
        &self.rounds[round.index()]
    }

    pub fn to_vector(&self) -> [f64; 12] {
        let mut v = [0.0; 12];
        for (i, r) in self.rounds.iter().enumerate() {
            v[3 * i] = r.f_b;
            v[3 * i + 1] = r.f_f;
            v[3 * i + 2] = r.f_c;
        }
        v
    }

    pub fn from_vector(v: &[f64; 12]) -> CurveParams {
        CurveParams {
            rounds: std::array::from_fn(|i| RoundCurve {
                f_b: v[3 * i],
                f_f: v[3 * i + 1],
                f_c: v[3 * i + 2],
            }),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

impl Serialize for CurveParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<String, RoundCurve> = self
            .rounds
            .iter()
            .enumerate()
            .map(|(i, r)| ((i + 1).to_string(), *r))
            .collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CurveParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<CurveParams, D::Error> {
        let map = BTreeMap::<String, RoundCurve>::deserialize(deserializer)?;
        let mut rounds = [RoundCurve::default(); 4];
        for (i, slot) in rounds.iter_mut().enumerate() {
            let key = (i + 1).to_string();
            *slot = *map
                .get(&key)
                .ok_or_else(|| serde::de::Error::custom(format!("missing round {key}")))?;
        }
        if map.len() != 4 {
            return Err(serde::de::Error::custom("expected rounds 1-4 only"));
        }
        let params = CurveParams { rounds };
        if !params.is_finite() {
            return Err(serde::de::Error::custom("curve parameters must be finite"));
        }
        Ok(params)
    }
}

/// Unnormalized curve heights at `d = p_win - θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveWeights {
    pub bet_raise: f64,
    pub fold: f64,
    pub call: f64,
}

pub fn curve_weights(d: f64, curve: &RoundCurve) -> CurveWeights {
    CurveWeights {
        bet_raise: 1.0 / (1.0 + (-8.0 * (d - curve.f_b)).exp()),
        fold: 1.0 / (1.0 + (8.0 * (d + curve.f_f)).exp()),
        call: (-20.0 * (d + curve.f_c).powi(2)).exp() / 2.0,
    }
}

/// Normalized probabilities over the legal actions of one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    entries: Vec<(Action, f64)>,
}

impl ActionDistribution {
    pub fn prob(&self, action: Action) -> f64 {
        self.entries
            .iter()
            .find(|(a, _)| *a == action)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn entries(&self) -> &[(Action, f64)] {
        &self.entries
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        let x: f64 = rng.random();
        let mut acc = 0.0;
        for &(a, p) in &self.entries {
            acc += p;
            if x < acc {
                return a;
            }
        }
        // rounding: fall back to the last action with mass
        self.entries
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(a, _)| *a)
            .unwrap_or(self.entries[0].0)
    }
}

/// Maps curve weights onto the legal actions. Fold mass becomes the
/// conservative action when not facing a bet; aggressive mass becomes CALL
/// once the raise cap is reached.
pub fn action_distribution(
    p_win: f64,
    pot: &PotState,
    curve: &RoundCurve,
) -> Result<ActionDistribution, DecisionError> {
    if !(0.0..=1.0).contains(&p_win) {
        return Err(DecisionError::BadProbability(p_win));
    }
    let d = p_win - threshold(pot)?;
    let w = curve_weights(d, curve);
    let mut entries: Vec<(Action, f64)> = Vec::with_capacity(3);
    let mut add = |a: Action, p: f64| match entries.iter_mut().find(|(x, _)| *x == a) {
        Some(e) => e.1 += p,
        None => entries.push((a, p)),
    };
    if pot.facing_bet {
        add(Action::Fold, w.fold);
        add(Action::Call, w.call);
        match pot.aggressive_action() {
            Some(a) => add(a, w.bet_raise),
            None => add(Action::Call, w.bet_raise),
        }
    } else {
        add(Action::Pass, w.fold + w.call);
        add(Action::Bet, w.bet_raise);
    }
    let total: f64 = entries.iter().map(|(_, p)| p).sum();
    if !(total > 0.0) {
        return Err(DecisionError::NoLegalAction);
    }
    for e in entries.iter_mut() {
        e.1 /= total;
    }
    Ok(ActionDistribution { entries })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig {
    /// Chance of turning a conservative last-round action aggressive.
    pub bluff_probability: f64,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            bluff_probability: DEFAULT_BLUFF_PROBABILITY,
        }
    }
}

impl DecisionConfig {
    pub fn no_bluff() -> DecisionConfig {
        DecisionConfig {
            bluff_probability: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub action: Action,
    /// The curve sample before any bluff override.
    pub sampled: Action,
    pub bluffed: bool,
    /// Whether the bluff override was eligible (last round, conservative
    /// sample, aggression legal).
    pub bluff_eligible: bool,
}

pub fn choose_action<R: Rng + ?Sized>(
    p_win: f64,
    pot: &PotState,
    params: &CurveParams,
    round: RoundId,
    config: &DecisionConfig,
    rng: &mut R,
) -> Result<Decision, DecisionError> {
    let dist = action_distribution(p_win, pot, params.round(round))?;
    let sampled = dist.sample(rng);
    let aggressive = pot.aggressive_action();
    let bluff_eligible = round == RoundId::LAST
        && sampled.class() == Some(ActionClass::Conservative)
        && aggressive.is_some();
    let bluffed =
        bluff_eligible && config.bluff_probability > 0.0 && rng.random::<f64>() < config.bluff_probability;
    Ok(Decision {
        action: if bluffed { aggressive.unwrap() } else { sampled },
        sampled,
        bluffed,
        bluff_eligible,
    })
}
