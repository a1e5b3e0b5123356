mod common;

use std::cmp::Ordering;

use bayespoker::cards::{
    classify_final, classify_partial, compare_hands, parse_cards, Card, CardError, Deck, HandType17, Showdown,
};
use bayespoker::rng;
use common::{for_each_subset, reference_compare, reference_type, EXACT_COUNTS, TOTAL_HANDS};

fn cards(s: &str) -> Vec<Card> {
    parse_cards(s).unwrap()
}

#[test]
fn table_examples() {
    assert_eq!(classify_final(&cards("Ac Kc Jd 10d 4h")).unwrap(), HandType17::BustedAce);
    assert_eq!(classify_final(&cards("3c 4c 5c 6c 7c")).unwrap(), HandType17::StraightFlush);
    assert_eq!(classify_final(&cards("2h 2d Jc 8c 4h")).unwrap(), HandType17::PairLow);
}

#[test]
fn classify_final_errors() {
    assert_eq!(
        classify_final(&cards("2h 2d Jc 8c")),
        Err(CardError::WrongCount { expected: "5", got: 4 })
    );
    assert!(matches!(classify_final(&cards("2h 2d Jc 8c 2h")), Err(CardError::Duplicate(_))));
}

#[test]
fn partial_examples() {
    assert_eq!(classify_partial(&cards("5h 5c Qc")).unwrap(), HandType17::PairLow);
    assert_eq!(classify_partial(&cards("3c 4c 5h")).unwrap(), HandType17::Straight);
    assert_eq!(classify_partial(&cards("Ac Kc 7c")).unwrap(), HandType17::Flush);
    assert!(classify_partial(&cards("Ac")).is_err());
    assert!(classify_partial(&cards("Ac Kc 7c 2d 3d")).is_err());
    assert!(matches!(classify_partial(&cards("Ac Ac")), Err(CardError::Duplicate(_))));
}

#[test]
fn partial_straight_has_straight_completion() {
    let start = cards("3c 4c 5h");
    let rest: Vec<Card> = Card::all().filter(|c| !start.contains(c)).collect();
    let mut found = false;
    for_each_subset(&rest, 2, &mut |extra| {
        let mut h = start.clone();
        h.extend_from_slice(extra);
        let t = reference_type(&h);
        found |= t == HandType17::Straight.index() || t == HandType17::StraightFlush.index();
    });
    assert!(found);
}

#[test]
fn compare_examples() {
    let cmp = |a: &str, b: &str| compare_hands(&cards(a), &cards(b)).unwrap();
    assert_eq!(cmp("Ah Ad 9c 5s 3d", "Kh Kd Qc Js 9d"), Showdown::AWins);
    assert_eq!(cmp("Ah Kd 9c 5s 3d", "As Kc 9d 5h 3c"), Showdown::Tie);
    assert_eq!(cmp("7c 7d 7s 10d 10c", "3h 3s 3d 3c Jc"), Showdown::BWins);
    assert!(compare_hands(&cards("Ah Kd 9c 5s"), &cards("As Kc 9d 5h 3c")).is_err());
}

#[test]
fn deal_examples() {
    let mut d = Deck::shuffled(&mut rng::stream(1, 0));
    assert!(d.deal(0).unwrap().is_empty());
    assert_eq!(d.len(), 52);
    let mut all = d.deal(52).unwrap();
    assert!(d.is_empty());
    all.sort_by_key(|c| c.index());
    assert_eq!(all, Card::all().collect::<Vec<_>>());
    assert_eq!(d.deal(1), Err(CardError::DeckExhausted { requested: 1, remaining: 0 }));

    let a = Deck::shuffled(&mut rng::stream(99, 0)).deal(52).unwrap();
    let b = Deck::shuffled(&mut rng::stream(99, 0)).deal(52).unwrap();
    assert_eq!(a, b);
}

/// Every five-card hand: the library's 17-type agrees with the reference
/// evaluator, and the category counts are the exact combinatorial ones.
#[test]
fn exhaustive_classification_matches_reference() {
    let deck: Vec<Card> = Card::all().collect();
    let mut counts = [0u64; 9];
    let mut seen = 0u64;
    for_each_subset(&deck, 5, &mut |h| {
        let t = classify_final(h).unwrap();
        assert_eq!(t.index(), reference_type(h), "{h:?}");
        counts[t.category().index()] += 1;
        seen += 1;
    });
    assert_eq!(seen, TOTAL_HANDS);
    assert_eq!(counts, EXACT_COUNTS);
}

/// Pairs of random hands compared by both evaluators.
#[test]
fn comparison_matches_reference() {
    let mut r = common::SplitMix(7);
    let deck: Vec<Card> = Card::all().collect();
    for _ in 0..200_000 {
        let mut pick = deck.clone();
        for i in 0..10 {
            let j = i + r.below(52 - i);
            pick.swap(i, j);
        }
        let (a, b) = (&pick[..5], &pick[5..10]);
        let want = match reference_compare(a, b) {
            Ordering::Greater => Showdown::AWins,
            Ordering::Less => Showdown::BWins,
            Ordering::Equal => Showdown::Tie,
        };
        assert_eq!(compare_hands(a, b).unwrap(), want, "{a:?} vs {b:?}");
    }
}
