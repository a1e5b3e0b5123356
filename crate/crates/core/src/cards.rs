//! Cards, decks, five-card hand ranking and the 17-type hand scale.
//!
//! Aces are high only: there is no A-2-3-4-5 straight.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CardError {
    #[error("expected {expected} cards, got {got}")]
    WrongCount { expected: &'static str, got: usize },
    #[error("duplicate card {0}")]
    Duplicate(Card),
    #[error("deck exhausted: requested {requested}, {remaining} remaining")]
    DeckExhausted { requested: usize, remaining: usize },
    #[error("cannot parse card {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suit {
    Clubs,
    Diamonds,
    Hearts,
    Spades,
}

impl Suit {
    pub const ALL: [Suit; 4] = [Suit::Clubs, Suit::Diamonds, Suit::Hearts, Suit::Spades];

    fn letter(self) -> char {
        match self {
            Suit::Clubs => 'c',
            Suit::Diamonds => 'd',
            Suit::Hearts => 'h',
            Suit::Spades => 's',
        }
    }
}

/// A playing card. Rank runs 2..=14 with 14 the Ace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Card {
    rank: u8,
    suit: Suit,
}

impl Card {
    pub fn new(rank: u8, suit: Suit) -> Result<Card, CardError> {
        if !(2..=14).contains(&rank) {
            return Err(CardError::Parse(format!("rank {rank}")));
        }
        Ok(Card { rank, suit })
    }

    pub fn rank(self) -> u8 {
        self.rank
    }

    pub fn suit(self) -> Suit {
        self.suit
    }

    /// Dense index in 0..52.
    pub fn index(self) -> usize {
        (self.rank as usize - 2) * 4 + self.suit as usize
    }

    pub fn from_index(index: usize) -> Card {
        assert!(index < 52, "card index {index} out of range");
        Card {
            rank: (index / 4) as u8 + 2,
            suit: Suit::ALL[index % 4],
        }
    }

    pub fn all() -> impl Iterator<Item = Card> {
        (0..52).map(Card::from_index)
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = match self.rank {
            14 => 'A',
            13 => 'K',
            12 => 'Q',
            11 => 'J',
            10 => 'T',
            n => (b'0' + n) as char,
        };
        write!(f, "{}{}", r, self.suit.letter())
    }
}

impl FromStr for Card {
    type Err = CardError;

    /// Parses `"Ac"`, `"Td"`, `"10d"`, `"2h"`.
    fn from_str(s: &str) -> Result<Card, CardError> {
        let err = || CardError::Parse(s.to_string());
        let s = s.trim();
        if s.len() < 2 {
            return Err(err());
        }
        let (r, su) = s.split_at(s.len() - 1);
        let rank = match r.to_ascii_uppercase().as_str() {
            "A" => 14,
            "K" => 13,
            "Q" => 12,
            "J" => 11,
            "T" | "10" => 10,
            d if d.len() == 1 => d.parse::<u8>().map_err(|_| err())?,
            _ => return Err(err()),
        };
        let suit = match su.to_ascii_lowercase().as_str() {
            "c" => Suit::Clubs,
            "d" => Suit::Diamonds,
            "h" => Suit::Hearts,
            "s" => Suit::Spades,
            _ => return Err(err()),
        };
        Card::new(rank, suit).map_err(|_| err())
    }
}

impl Serialize for Card {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Card {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Card, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a whitespace-separated list of cards, e.g. `"Ac Kc Jd Td 4h"`.
pub fn parse_cards(s: &str) -> Result<Vec<Card>, CardError> {
    s.split_whitespace().map(str::parse).collect()
}

/// The nine hand categories, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Busted,
    Pair,
    TwoPair,
    Triple,
    Straight,
    Flush,
    FullHouse,
    FourOfAKind,
    StraightFlush,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Busted,
        Category::Pair,
        Category::TwoPair,
        Category::Triple,
        Category::Straight,
        Category::Flush,
        Category::FullHouse,
        Category::FourOfAKind,
        Category::StraightFlush,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Reference frequency of each category in a random five-card hand, used
/// to sanity-check estimation runs.
pub const REFERENCE_CATEGORY_PROBABILITIES: [f64; 9] = [
    0.5015629, 0.4225703, 0.0475390, 0.0211285, 0.0035492, 0.0019693, 0.0014406, 0.0002401, 0.0000134,
];

/// The ordered 17-valued hand-type scale. Busted hands and pairs are
/// split by high card (resp. pair rank): 9 or lower, ten or jack, queen,
/// king, ace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HandType17 {
    BustedLow,
    BustedMedium,
    BustedQueen,
    BustedKing,
    BustedAce,
    PairLow,
    PairMedium,
    PairQueens,
    PairKings,
    PairAces,
    TwoPair,
    Triple,
    Straight,
    Flush,
    FullHouse,
    FourOfAKind,
    StraightFlush,
}

pub const NUM_TYPES: usize = 17;

impl HandType17 {
    pub const ALL: [HandType17; NUM_TYPES] = [
        HandType17::BustedLow,
        HandType17::BustedMedium,
        HandType17::BustedQueen,
        HandType17::BustedKing,
        HandType17::BustedAce,
        HandType17::PairLow,
        HandType17::PairMedium,
        HandType17::PairQueens,
        HandType17::PairKings,
        HandType17::PairAces,
        HandType17::TwoPair,
        HandType17::Triple,
        HandType17::Straight,
        HandType17::Flush,
        HandType17::FullHouse,
        HandType17::FourOfAKind,
        HandType17::StraightFlush,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<HandType17> {
        HandType17::ALL.get(index).copied()
    }

    pub fn category(self) -> Category {
        use HandType17::*;
        match self {
            BustedLow | BustedMedium | BustedQueen | BustedKing | BustedAce => Category::Busted,
            PairLow | PairMedium | PairQueens | PairKings | PairAces => Category::Pair,
            TwoPair => Category::TwoPair,
            Triple => Category::Triple,
            Straight => Category::Straight,
            Flush => Category::Flush,
            FullHouse => Category::FullHouse,
            FourOfAKind => Category::FourOfAKind,
            StraightFlush => Category::StraightFlush,
        }
    }

    pub fn busted(high: u8) -> HandType17 {
        match high {
            0..=9 => HandType17::BustedLow,
            10 | 11 => HandType17::BustedMedium,
            12 => HandType17::BustedQueen,
            13 => HandType17::BustedKing,
            _ => HandType17::BustedAce,
        }
    }

    pub fn pair(rank: u8) -> HandType17 {
        match rank {
            0..=9 => HandType17::PairLow,
            10 | 11 => HandType17::PairMedium,
            12 => HandType17::PairQueens,
            13 => HandType17::PairKings,
            _ => HandType17::PairAces,
        }
    }
}

impl fmt::Display for HandType17 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Comparable strength of a complete hand: category, then tiebreak ranks,
/// most significant first (zero padded). Suits never break ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HandValue {
    pub category: Category,
    pub tiebreak: [u8; 5],
}

impl HandValue {
    pub fn hand_type(&self) -> HandType17 {
        match self.category {
            Category::Busted => HandType17::busted(self.tiebreak[0]),
            Category::Pair => HandType17::pair(self.tiebreak[0]),
            Category::TwoPair => HandType17::TwoPair,
            Category::Triple => HandType17::Triple,
            Category::Straight => HandType17::Straight,
            Category::Flush => HandType17::Flush,
            Category::FullHouse => HandType17::FullHouse,
            Category::FourOfAKind => HandType17::FourOfAKind,
            Category::StraightFlush => HandType17::StraightFlush,
        }
    }
}

/// Rank multiplicities of a small card set, grouped by (count desc, rank desc).
struct Shape {
    groups: [(u8, u8); 5],
    len: usize,
    flush: bool,
    span: u8,
}

impl Shape {
    fn of(cards: &[Card]) -> Shape {
        let mut counts = [0u8; 15];
        let mut suits_equal = true;
        let first_suit = cards[0].suit;
        let (mut lo, mut hi) = (15u8, 0u8);
        for c in cards {
            counts[c.rank as usize] += 1;
            suits_equal &= c.suit == first_suit;
            lo = lo.min(c.rank);
            hi = hi.max(c.rank);
        }
        let mut groups = [(0u8, 0u8); 5];
        let mut len = 0;
        for want in (1..=4u8).rev() {
            for rank in (2..=14u8).rev() {
                if counts[rank as usize] == want {
                    groups[len] = (want, rank);
                    len += 1;
                }
            }
        }
        Shape {
            groups,
            len,
            flush: suits_equal,
            span: hi - lo,
        }
    }

    fn distinct(&self) -> bool {
        self.len > 0 && self.groups[0].0 == 1
    }

    fn tiebreak(&self) -> [u8; 5] {
        let mut t = [0u8; 5];
        for (slot, g) in t.iter_mut().zip(&self.groups[..self.len]) {
            *slot = g.1;
        }
        t
    }
}

fn check_distinct(cards: &[Card]) -> Result<(), CardError> {
    let mut seen = 0u64;
    for c in cards {
        let bit = 1u64 << c.index();
        if seen & bit != 0 {
            return Err(CardError::Duplicate(*c));
        }
        seen |= bit;
    }
    Ok(())
}

/// Ranks a complete hand. Panics unless given exactly five cards; use
/// [`compare_hands`] or [`classify_final`] for checked entry points.
pub fn evaluate(cards: &[Card]) -> HandValue {
    assert_eq!(cards.len(), 5, "evaluate needs five cards");
    let shape = Shape::of(cards);
    let tiebreak = shape.tiebreak();
    let category = match (shape.groups[0].0, shape.groups[1].0) {
        (4, _) => Category::FourOfAKind,
        (3, 2) => Category::FullHouse,
        (3, _) => Category::Triple,
        (2, 2) => Category::TwoPair,
        (2, _) => Category::Pair,
        _ => {
            let straight = shape.span == 4;
            match (straight, shape.flush) {
                (true, true) => Category::StraightFlush,
                (false, true) => Category::Flush,
                (true, false) => Category::Straight,
                (false, false) => Category::Busted,
            }
        }
    };
    HandValue { category, tiebreak }
}

/// Classifies a complete five-card hand on the 17-type scale.
pub fn classify_final(cards: &[Card]) -> Result<HandType17, CardError> {
    if cards.len() != 5 {
        return Err(CardError::WrongCount {
            expected: "5",
            got: cards.len(),
        });
    }
    check_distinct(cards)?;
    Ok(evaluate(cards).hand_type())
}

fn partial_type_unchecked(cards: &[Card]) -> HandType17 {
    let shape = Shape::of(cards);
    match (shape.groups[0].0, shape.groups[1].0) {
        (4, _) => HandType17::FourOfAKind,
        (3, _) => HandType17::Triple,
        (2, 2) => HandType17::TwoPair,
        (2, _) => HandType17::pair(shape.groups[0].1),
        _ => {
            let straight = shape.distinct() && shape.span <= 4;
            match (straight, shape.flush) {
                (true, true) => HandType17::StraightFlush,
                (false, true) => HandType17::Flush,
                (true, false) => HandType17::Straight,
                (false, false) => HandType17::busted(shape.groups[0].1),
            }
        }
    }
}

/// Classifies a 2-4 card partial hand by the strongest category it already
/// realizes: made multiples, all-suited (flush), or distinct ranks spanning
/// at most four (straight).
pub fn classify_partial(cards: &[Card]) -> Result<HandType17, CardError> {
    if !(2..=4).contains(&cards.len()) {
        return Err(CardError::WrongCount {
            expected: "2-4",
            got: cards.len(),
        });
    }
    check_distinct(cards)?;
    Ok(partial_type_unchecked(cards))
}

/// Classifies any 1-5 card holding. A single card is the busted type of
/// its rank; 2-4 cards use [`classify_partial`], five use [`classify_final`].
pub fn classify_cards(cards: &[Card]) -> Result<HandType17, CardError> {
    match cards.len() {
        1 => Ok(HandType17::busted(cards[0].rank)),
        2..=4 => classify_partial(cards),
        5 => classify_final(cards),
        n => Err(CardError::WrongCount {
            expected: "1-5",
            got: n,
        }),
    }
}

/// Unchecked variant of [`classify_cards`] for hot loops over dealt cards.
pub(crate) fn classify_dealt(cards: &[Card]) -> HandType17 {
    match cards.len() {
        1 => HandType17::busted(cards[0].rank),
        5 => evaluate(cards).hand_type(),
        _ => partial_type_unchecked(cards),
    }
}

/// Strength of a 1-5 card holding: its 17-type, then its grouped ranks.
/// Used to compare what is showing on the table.
pub fn partial_strength(cards: &[Card]) -> Result<(HandType17, [u8; 5]), CardError> {
    let t = classify_cards(cards)?;
    Ok((t, Shape::of(cards).tiebreak()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Showdown {
    AWins,
    BWins,
    Tie,
}

/// Compares two five-card hands. The hands may share cards (Monte Carlo
/// callers deal both from a single deck).
pub fn compare_hands(a: &[Card], b: &[Card]) -> Result<Showdown, CardError> {
    for h in [a, b] {
        if h.len() != 5 {
            return Err(CardError::WrongCount {
                expected: "5",
                got: h.len(),
            });
        }
    }
    Ok(match evaluate(a).cmp(&evaluate(b)) {
        Ordering::Greater => Showdown::AWins,
        Ordering::Less => Showdown::BWins,
        Ordering::Equal => Showdown::Tie,
    })
}

/// A deck: an ordered card sequence with a dealing cursor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deck {
    cards: Vec<Card>,
    next: usize,
}

impl Deck {
    /// All 52 cards in index order.
    pub fn ordered() -> Deck {
        Deck {
            cards: Card::all().collect(),
            next: 0,
        }
    }

    pub fn shuffled<R: Rng + ?Sized>(rng: &mut R) -> Deck {
        let mut deck = Deck::ordered();
        deck.cards.shuffle(rng);
        deck
    }

    /// A deck that deals `cards` in the given order. Cards need not form a
    /// full 52-card deck, but must be distinct.
    pub fn from_cards(cards: Vec<Card>) -> Result<Deck, CardError> {
        check_distinct(&cards)?;
        Ok(Deck { cards, next: 0 })
    }

    pub fn remaining(&self) -> &[Card] {
        &self.cards[self.next..]
    }

    pub fn len(&self) -> usize {
        self.cards.len() - self.next
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn deal(&mut self, n: usize) -> Result<Vec<Card>, CardError> {
        if n > self.len() {
            return Err(CardError::DeckExhausted {
                requested: n,
                remaining: self.len(),
            });
        }
        let out = self.cards[self.next..self.next + n].to_vec();
        self.next += n;
        Ok(out)
    }

    pub fn deal_one(&mut self) -> Result<Card, CardError> {
        Ok(self.deal(1)?[0])
    }
}
