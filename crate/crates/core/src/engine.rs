//! Two-player fixed-limit five-card stud.
//!
//! Each player antes one unit and receives a hole card and an upcard; a
//! betting round follows each upcard. Bets and raises are one unit, with at
//! most three raises per round. The best hand showing opens each round.

use std::cmp::Ordering;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cards::{classify_dealt, compare_hands, partial_strength, Card, CardError, Deck, HandType17, Showdown};
use crate::decision::{legal_actions, Action, PotState};
use crate::matrices::RoundId;
use crate::players::{Agent, AgentError};
use crate::rng;

pub const ANTE: u32 = 1;
pub const UNIT: u32 = 1;
/// Consecutive illegal submissions before a player forfeits the hand.
pub const MAX_REJECTIONS: u8 = 3;

pub type Seat = usize;

pub fn other(seat: Seat) -> Seat {
    1 - seat
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("game is over")]
    GameOver,
    #[error("not seat {0}'s turn")]
    OutOfTurn(Seat),
    #[error("illegal action {action}: {reason} (legal: {legal:?})")]
    IllegalAction {
        action: Action,
        legal: Vec<Action>,
        reason: String,
    },
    #[error("deal failed: {0}")]
    Deal(#[from] CardError),
    #[error("agent {id} failed: {source}")]
    Agent {
        id: String,
        #[source]
        source: AgentError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Dealing,
    Betting,
    Showdown,
    Settled,
    Folded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub seat: Seat,
    pub action: Action,
    pub round: RoundId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Winner(Seat),
    Tie,
    FoldBy(Seat),
}

/// Complete, replayable account of one game. Serializes to a single JSON
/// line; hand types use the 17-type names in ascending order
/// (`BustedLow` = 0 ... `StraightFlush` = 16).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub seed: u64,
    pub players: [String; 2],
    /// Cards dealt to each seat, hole card first.
    pub hands: [Vec<Card>; 2],
    pub history: Vec<HistoryEntry>,
    pub outcome: Outcome,
    pub forfeit: bool,
    pub nets: [i64; 2],
    pub pot: u32,
    /// Per-round types of both hands; only when the game reached showdown.
    pub showdown_types: Option<[[HandType17; 4]; 2]>,
}

impl GameRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn went_to_showdown(&self) -> bool {
        matches!(self.outcome, Outcome::Winner(_) | Outcome::Tie)
    }
}

/// What one seat may see. Never holds the opponent's hole card.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerView {
    pub seat: Seat,
    pub opponent_id: String,
    pub own_hole: Card,
    pub own_up: Vec<Card>,
    pub opp_up: Vec<Card>,
    pub round: RoundId,
    pub pot: u32,
    pub to_act: Seat,
    pub facing_bet: bool,
    pub raises_this_round: u8,
    pub legal_actions: Vec<Action>,
    pub round_history: Vec<HistoryEntry>,
    pub game_history: Vec<HistoryEntry>,
}

impl PlayerView {
    pub fn own_cards(&self) -> Vec<Card> {
        let mut v = Vec::with_capacity(5);
        v.push(self.own_hole);
        v.extend_from_slice(&self.own_up);
        v
    }

    pub fn opponent_actions_this_round(&self) -> Vec<Action> {
        self.round_history
            .iter()
            .filter(|h| h.seat != self.seat)
            .map(|h| h.action)
            .collect()
    }

    pub fn pot_state(&self) -> PotState {
        PotState::heads_up(self.pot, self.round, self.facing_bet, self.raises_this_round)
    }
}

/// End-of-game information handed to each agent.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSummary {
    pub seat: Seat,
    pub opponent_id: String,
    pub own_cards: Vec<Card>,
    pub opp_up: Vec<Card>,
    /// Revealed only at showdown.
    pub opp_hole: Option<Card>,
    pub history: Vec<HistoryEntry>,
    pub net: i64,
}

/// Authoritative state of one game.
#[derive(Debug, Clone)]
pub struct GameState {
    seed: u64,
    players: [String; 2],
    deck: Deck,
    hands: [Vec<Card>; 2],
    round: RoundId,
    contributions: [u32; 2],
    to_act: Seat,
    raises_this_round: u8,
    facing_bet: bool,
    last_action: Option<Action>,
    history: Vec<HistoryEntry>,
    phase: Phase,
    outcome: Option<Outcome>,
    forfeit: bool,
    nets: [i64; 2],
    rejections: [u8; 2],
}

impl GameState {
    /// Posts antes, deals hole and first upcard to both seats and opens
    /// round one.
    pub fn new(players: [String; 2], mut deck: Deck, seed: u64) -> Result<GameState, EngineError> {
        let mut hands: [Vec<Card>; 2] = [Vec::with_capacity(5), Vec::with_capacity(5)];
        for _ in 0..2 {
            for hand in hands.iter_mut() {
                hand.push(deck.deal_one()?);
            }
        }
        let mut state = GameState {
            seed,
            players,
            deck,
            hands,
            round: RoundId::FIRST,
            contributions: [ANTE; 2],
            to_act: 0,
            raises_this_round: 0,
            facing_bet: false,
            last_action: None,
            history: Vec::new(),
            phase: Phase::Betting,
            outcome: None,
            forfeit: false,
            nets: [0; 2],
            rejections: [0; 2],
        };
        state.to_act = state.first_bettor();
        Ok(state)
    }

    pub fn shuffled(players: [String; 2], seed: u64) -> Result<GameState, EngineError> {
        let deck = Deck::shuffled(&mut rng::stream(seed, 0));
        GameState::new(players, deck, seed)
    }

    /// Best hand showing: upcard type, then top upcard rank, then seat 0.
    fn first_bettor(&self) -> Seat {
        let show = |s: Seat| {
            let up = &self.hands[s][1..];
            let (t, _) = partial_strength(up).expect("upcards are distinct");
            let top = up.iter().map(|c| c.rank()).max().unwrap_or(0);
            (t, top)
        };
        match show(0).cmp(&show(1)) {
            Ordering::Less => 1,
            _ => 0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_over(&self) -> bool {
        matches!(self.phase, Phase::Settled | Phase::Folded)
    }

    pub fn round(&self) -> RoundId {
        self.round
    }

    pub fn to_act(&self) -> Seat {
        self.to_act
    }

    pub fn pot(&self) -> u32 {
        self.contributions.iter().sum()
    }

    pub fn raises_this_round(&self) -> u8 {
        self.raises_this_round
    }

    pub fn facing_bet(&self) -> bool {
        self.facing_bet
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn players(&self) -> &[String; 2] {
        &self.players
    }

    pub fn hand(&self, seat: Seat) -> &[Card] {
        &self.hands[seat]
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn nets(&self) -> [i64; 2] {
        self.nets
    }

    pub fn legal_actions(&self) -> Vec<Action> {
        if self.phase != Phase::Betting {
            return Vec::new();
        }
        legal_actions(self.facing_bet, self.raises_this_round)
    }

    pub fn view(&self, seat: Seat) -> PlayerView {
        let round_history: Vec<HistoryEntry> = self
            .history
            .iter()
            .filter(|h| h.round == self.round)
            .copied()
            .collect();
        PlayerView {
            seat,
            opponent_id: self.players[other(seat)].clone(),
            own_hole: self.hands[seat][0],
            own_up: self.hands[seat][1..].to_vec(),
            opp_up: self.hands[other(seat)][1..].to_vec(),
            round: self.round,
            pot: self.pot(),
            to_act: self.to_act,
            facing_bet: self.facing_bet,
            raises_this_round: self.raises_this_round,
            legal_actions: if self.to_act == seat { self.legal_actions() } else { Vec::new() },
            round_history,
            game_history: self.history.clone(),
        }
    }

    /// Applies `action` for `seat`, advancing rounds, dealing, and settling
    /// as needed. Illegal actions leave the state untouched.
    pub fn apply(&mut self, seat: Seat, action: Action) -> Result<(), EngineError> {
        if self.phase != Phase::Betting {
            return Err(EngineError::GameOver);
        }
        if seat != self.to_act {
            return Err(EngineError::OutOfTurn(seat));
        }
        let legal = self.legal_actions();
        if !legal.contains(&action) {
            let reason = match action {
                Action::Raise if self.facing_bet => "up to three raises per round".to_string(),
                Action::Raise | Action::Call | Action::Fold => "no bet to respond to".to_string(),
                Action::Pass | Action::Bet => "a bet is outstanding".to_string(),
            };
            return Err(EngineError::IllegalAction {
                action,
                legal,
                reason,
            });
        }
        self.rejections[seat] = 0;
        self.history.push(HistoryEntry {
            seat,
            action,
            round: self.round,
        });
        let opp = other(seat);
        let mut round_over = false;
        match action {
            Action::Pass => round_over = self.last_action == Some(Action::Pass),
            Action::Bet => {
                self.contributions[seat] += UNIT;
                self.facing_bet = true;
            }
            Action::Raise => {
                self.contributions[seat] = self.contributions[opp] + UNIT;
                self.raises_this_round += 1;
            }
            Action::Call => {
                self.contributions[seat] = self.contributions[opp];
                round_over = true;
            }
            Action::Fold => {
                self.settle_fold(seat);
                return Ok(());
            }
        }
        self.last_action = Some(action);
        if round_over {
            self.end_round()?;
        } else {
            self.to_act = opp;
        }
        Ok(())
    }

    /// Counts an illegal submission; after [`MAX_REJECTIONS`] in a row the
    /// seat forfeits. Returns true on forfeit.
    pub fn reject(&mut self, seat: Seat) -> bool {
        self.rejections[seat] += 1;
        if self.rejections[seat] >= MAX_REJECTIONS && !self.is_over() {
            self.forfeit = true;
            self.settle_fold(seat);
            return true;
        }
        false
    }

    fn end_round(&mut self) -> Result<(), EngineError> {
        match self.round.next() {
            Some(next) => {
                for seat in 0..2 {
                    let c = self.deck.deal_one()?;
                    self.hands[seat].push(c);
                }
                self.round = next;
                self.raises_this_round = 0;
                self.facing_bet = false;
                self.last_action = None;
                self.to_act = self.first_bettor();
            }
            None => self.showdown(),
        }
        Ok(())
    }

    fn showdown(&mut self) {
        self.phase = Phase::Showdown;
        debug_assert_eq!(self.contributions[0], self.contributions[1]);
        let outcome = match compare_hands(&self.hands[0], &self.hands[1]).expect("five cards each") {
            Showdown::AWins => Outcome::Winner(0),
            Showdown::BWins => Outcome::Winner(1),
            Showdown::Tie => Outcome::Tie,
        };
        self.nets = match outcome {
            Outcome::Winner(w) => {
                let mut n = [0i64; 2];
                n[w] = self.contributions[other(w)] as i64;
                n[other(w)] = -(self.contributions[other(w)] as i64);
                n
            }
            _ => [0, 0],
        };
        self.outcome = Some(outcome);
        self.phase = Phase::Settled;
    }

    fn settle_fold(&mut self, folder: Seat) {
        let lost = self.contributions[folder] as i64;
        self.nets[folder] = -lost;
        self.nets[other(folder)] = lost;
        self.outcome = Some(Outcome::FoldBy(folder));
        self.phase = Phase::Folded;
    }

    pub fn record(&self) -> Option<GameRecord> {
        let outcome = self.outcome?;
        let showdown_types = matches!(outcome, Outcome::Winner(_) | Outcome::Tie).then(|| {
            [0, 1].map(|s| RoundId::ALL.map(|r| classify_dealt(&self.hands[s][..r.cards_dealt()])))
        });
        Some(GameRecord {
            seed: self.seed,
            players: self.players.clone(),
            hands: self.hands.clone(),
            history: self.history.clone(),
            outcome,
            forfeit: self.forfeit,
            nets: self.nets,
            pot: self.pot(),
            showdown_types,
        })
    }

    pub fn summary(&self, seat: Seat) -> Option<GameSummary> {
        let outcome = self.outcome?;
        let shown = matches!(outcome, Outcome::Winner(_) | Outcome::Tie);
        Some(GameSummary {
            seat,
            opponent_id: self.players[other(seat)].clone(),
            own_cards: self.hands[seat].clone(),
            opp_up: self.hands[other(seat)][1..].to_vec(),
            opp_hole: shown.then(|| self.hands[other(seat)][0]),
            history: self.history.clone(),
            net: self.nets[seat],
        })
    }
}

/// Plays one game between `a` (seat 0) and `b` (seat 1) on a deck shuffled
/// from `seed`.
pub fn play_game(a: &mut dyn Agent, b: &mut dyn Agent, seed: u64) -> Result<GameRecord, EngineError> {
    let state = GameState::shuffled([a.id().to_string(), b.id().to_string()], seed)?;
    run_game(state, [a, b], seed)
}

/// As [`play_game`] but dealing from a fixed card order: hole 0, hole 1,
/// up 0, up 1, then one upcard per seat per round.
pub fn play_game_with_deck(
    a: &mut dyn Agent,
    b: &mut dyn Agent,
    deck: Deck,
    seed: u64,
) -> Result<GameRecord, EngineError> {
    let state = GameState::new([a.id().to_string(), b.id().to_string()], deck, seed)?;
    run_game(state, [a, b], seed)
}

fn run_game(
    mut state: GameState,
    mut agents: [&mut dyn Agent; 2],
    seed: u64,
) -> Result<GameRecord, EngineError> {
    // Decision randomness is separate from the deck so that agents drawing
    // different amounts of randomness still see the same cards.
    let mut rngs = [rng::stream(seed, 1), rng::stream(seed, 2)];
    while !state.is_over() {
        let seat = state.to_act();
        let view = state.view(seat);
        let rng: &mut dyn RngCore = &mut rngs[seat];
        let action = agents[seat].decide(&view, rng).map_err(|source| EngineError::Agent {
            id: agents[seat].id().to_string(),
            source,
        })?;
        match state.apply(seat, action) {
            Ok(()) => {}
            Err(EngineError::IllegalAction { .. }) => {
                state.reject(seat);
            }
            Err(e) => return Err(e),
        }
    }
    for (seat, agent) in agents.iter_mut().enumerate() {
        agent.observe(&state.summary(seat).expect("game over"));
    }
    Ok(state.record().expect("game over"))
}
