//! JSON messages exchanged with human clients. See `docs/api.md`.
//!
//! Everything here is built from a [`GameState`] and the human's seat, and
//! nothing reveals the BPP hole card before a showdown.

use serde::{Deserialize, Serialize};

use bayespoker::cards::{classify_cards, Card, HandType17};
use bayespoker::decision::Action;
use bayespoker::engine::{GameState, Outcome, Phase, Seat};
use bayespoker::matrices::RoundId;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    You,
    Bpp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    You,
    Bpp,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireHistoryEntry {
    pub actor: Party,
    pub action: Action,
    pub round: RoundId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePayload {
    pub session_id: String,
    pub game_index: u64,
    pub your_seat: Seat,
    pub round: RoundId,
    pub pot: u32,
    pub your_hole: Card,
    pub your_up: Vec<Card>,
    pub opp_up: Vec<Card>,
    /// `None` once the game is over.
    pub to_act: Option<Party>,
    /// Empty unless it is your turn.
    pub legal_actions: Vec<Action>,
    pub raises_this_round: u8,
    pub history: Vec<WireHistoryEntry>,
    pub phase: Phase,
    pub session_net: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultPayload {
    pub game_index: u64,
    pub winner: Winner,
    pub your_net: i64,
    /// Revealed only at a showdown.
    pub opp_hole: Option<Card>,
    pub opp_hand_type: Option<HandType17>,
    pub your_hand_type: Option<HandType17>,
    pub folded: Option<Party>,
    pub session_net: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRequestPayload {
    pub legal_actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSubmit {
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub error: String,
    /// Present when an action was rejected during your turn.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub legal_actions: Option<Vec<Action>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum WireMessage {
    State(StatePayload),
    ActionRequest(ActionRequestPayload),
    ActionSubmit(ActionSubmit),
    Result(ResultPayload),
    Error(ErrorPayload),
}

/// What actually goes over the socket: a message plus the schema version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default = "current_version")]
    pub v: u32,
    #[serde(flatten)]
    pub message: WireMessage,
}

fn current_version() -> u32 {
    SCHEMA_VERSION
}

impl WireMessage {
    pub fn to_json(&self) -> String {
        let env = Envelope {
            v: SCHEMA_VERSION,
            message: self.clone(),
        };
        serde_json::to_string(&env).expect("wire messages serialize")
    }

    /// Parses an enveloped message; a missing `v` is read as the current
    /// version.
    pub fn from_json(text: &str) -> Result<WireMessage, serde_json::Error> {
        serde_json::from_str::<Envelope>(text).map(|e| e.message)
    }
}

fn party(seat: Seat, human: Seat) -> Party {
    if seat == human {
        Party::You
    } else {
        Party::Bpp
    }
}

pub fn state_payload(session_id: &str, game_index: u64, game: &GameState, human: Seat, session_net: i64) -> StatePayload {
    let view = game.view(human);
    StatePayload {
        session_id: session_id.to_string(),
        game_index,
        your_seat: human,
        round: game.round(),
        pot: game.pot(),
        your_hole: view.own_hole,
        your_up: view.own_up,
        opp_up: view.opp_up,
        to_act: (!game.is_over()).then(|| party(game.to_act(), human)),
        legal_actions: view.legal_actions,
        raises_this_round: game.raises_this_round(),
        history: game
            .history()
            .iter()
            .map(|h| WireHistoryEntry {
                actor: party(h.seat, human),
                action: h.action,
                round: h.round,
            })
            .collect(),
        phase: game.phase(),
        session_net,
    }
}

/// `None` while the game is still running.
pub fn result_payload(game_index: u64, game: &GameState, human: Seat, session_net: i64) -> Option<ResultPayload> {
    let outcome = game.outcome()?;
    let bpp = 1 - human;
    let showdown = matches!(outcome, Outcome::Winner(_) | Outcome::Tie);
    let type_of = |seat: Seat| classify_cards(game.hand(seat)).ok();
    let winner = match outcome {
        Outcome::Winner(s) => party(s, human).into(),
        Outcome::Tie => Winner::Tie,
        Outcome::FoldBy(s) => party(1 - s, human).into(),
    };
    Some(ResultPayload {
        game_index,
        winner,
        your_net: game.nets()[human],
        opp_hole: showdown.then(|| game.hand(bpp)[0]),
        opp_hand_type: if showdown { type_of(bpp) } else { None },
        your_hand_type: if showdown { type_of(human) } else { None },
        folded: match outcome {
            Outcome::FoldBy(s) => Some(party(s, human)),
            _ => None,
        },
        session_net,
    })
}

impl From<Party> for Winner {
    fn from(p: Party) -> Winner {
        match p {
            Party::You => Winner::You,
            Party::Bpp => Winner::Bpp,
        }
    }
}
