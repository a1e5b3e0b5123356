use bayespoker::cards::{parse_cards, Deck, HandType17};
use bayespoker::decision::{Action, CurveParams};
use bayespoker::engine::{play_game, play_game_with_deck, EngineError, GameRecord, GameState, Outcome, Phase};
use bayespoker::matrices::RoundId;
use bayespoker::players::{Agent, PassiveAgent, ProbAgent, RuleAgent, ThresholdAgent};

fn game(deck: &str) -> GameState {
    let deck = Deck::from_cards(parse_cards(deck).unwrap()).unwrap();
    GameState::new(["a".into(), "b".into()], deck, 0).unwrap()
}

// seat 0: 2c Kh 9c Jh Ah (ace high), seat 1: 3d 5s 9d Js 4c (jack high)
const PLAIN: &str = "2c 3d Kh 5s 9c 9d Jh Js Ah 4c";
// seat 0: 5h 6h 7h 8h 9h, seat 1: Kc Kd Ks Kh 2c
const SF_VS_QUADS: &str = "5h Kc 6h Kd 7h Ks 8h Kh 9h 2c";

#[test]
fn everyone_passes_to_showdown() {
    let mut g = game(PLAIN);
    while !g.is_over() {
        g.apply(g.to_act(), Action::Pass).unwrap();
    }
    assert_eq!(g.pot(), 2);
    assert_eq!(g.outcome(), Some(Outcome::Winner(0)));
    assert_eq!(g.nets(), [1, -1]);
    assert_eq!(g.history().len(), 8);
    assert_eq!(g.hand(0).len(), 5);
}

#[test]
fn fold_in_first_round_loses_the_ante() {
    let mut g = game(PLAIN);
    let opener = g.to_act();
    g.apply(opener, Action::Bet).unwrap();
    g.apply(1 - opener, Action::Fold).unwrap();
    assert_eq!(g.phase(), Phase::Folded);
    let mut want = [0i64; 2];
    want[1 - opener] = -1;
    want[opener] = 1;
    assert_eq!(g.nets(), want);
    assert_eq!(g.pot(), 3);
    let r = g.record().unwrap();
    assert!(!r.went_to_showdown());
    assert!(r.showdown_types.is_none());
}

/// Every round: bet, three raises, call. Each seat puts in 1 + 4 per round.
#[test]
fn scripted_straight_flush_beats_quads() {
    let mut g = game(SF_VS_QUADS);
    for _ in 0..4 {
        let opener = g.to_act();
        let other = 1 - opener;
        g.apply(opener, Action::Bet).unwrap();
        g.apply(other, Action::Raise).unwrap();
        g.apply(opener, Action::Raise).unwrap();
        g.apply(other, Action::Raise).unwrap();
        assert_eq!(g.raises_this_round(), 3);
        assert_eq!(g.legal_actions(), vec![Action::Fold, Action::Call]);
        g.apply(opener, Action::Call).unwrap();
    }
    assert_eq!(g.outcome(), Some(Outcome::Winner(0)));
    assert_eq!(g.pot(), 34);
    assert_eq!(g.nets(), [17, -17]);
    let types = g.record().unwrap().showdown_types.unwrap();
    assert_eq!(types[0][3], HandType17::StraightFlush);
    assert_eq!(types[1][3], HandType17::FourOfAKind);
}

#[test]
fn higher_upcard_opens() {
    // Kd showing for seat 1 against 6h
    let g = game(SF_VS_QUADS);
    assert_eq!(g.to_act(), 1);
    // a pair showing beats an ace high in round two (A-8 is too wide to draw)
    let mut g = game("2c 3d 7s Ah 7d 8c 4h 5h 6h Jh");
    assert_eq!(g.to_act(), 1);
    g.apply(1, Action::Pass).unwrap();
    g.apply(0, Action::Pass).unwrap();
    assert_eq!(g.round(), RoundId::new(2).unwrap());
    assert_eq!(g.to_act(), 0);
}

#[test]
fn legal_action_examples() {
    let mut g = game(PLAIN);
    let s = g.to_act();
    assert_eq!(g.legal_actions(), vec![Action::Pass, Action::Bet]);
    assert!(g.view(1 - s).legal_actions.is_empty());
    g.apply(s, Action::Bet).unwrap();
    assert_eq!(g.legal_actions(), vec![Action::Fold, Action::Call, Action::Raise]);
    match g.apply(1 - s, Action::Pass) {
        Err(EngineError::IllegalAction { legal, .. }) => assert_eq!(legal.len(), 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(g.apply(s, Action::Call), Err(EngineError::OutOfTurn(_))));
}

#[test]
fn fourth_raise_is_rejected() {
    let mut g = game(PLAIN);
    let s = g.to_act();
    g.apply(s, Action::Bet).unwrap();
    g.apply(1 - s, Action::Raise).unwrap();
    g.apply(s, Action::Raise).unwrap();
    g.apply(1 - s, Action::Raise).unwrap();
    let pot = g.pot();
    match g.apply(s, Action::Raise) {
        Err(e @ EngineError::IllegalAction { .. }) => {
            assert!(e.to_string().contains("up to three raises per round"), "{e}")
        }
        other => panic!("{other:?}"),
    }
    // state untouched
    assert_eq!(g.pot(), pot);
    assert_eq!(g.to_act(), s);
}

#[test]
fn repeated_rejections_forfeit() {
    let mut g = game(PLAIN);
    let s = g.to_act();
    assert!(!g.reject(s));
    assert!(!g.reject(s));
    assert!(g.reject(s));
    assert_eq!(g.outcome(), Some(Outcome::FoldBy(s)));
    assert!(g.record().unwrap().forfeit);
    assert!(matches!(g.apply(s, Action::Pass), Err(EngineError::GameOver)));
}

fn replay(record: &GameRecord) -> GameState {
    let mut g = GameState::shuffled(record.players.clone(), record.seed).unwrap();
    for h in &record.history {
        assert_eq!(g.round(), h.round);
        g.apply(h.seat, h.action).unwrap();
    }
    assert_eq!(g.hand(0), &record.hands[0][..]);
    assert_eq!(g.hand(1), &record.hands[1][..]);
    g
}

#[test]
fn games_replay_from_their_records() {
    for seed in 0..200u64 {
        let mut a = ProbAgent::new("p", CurveParams::default()).with_samples(300);
        let mut b = RuleAgent::new("r");
        let rec = play_game(&mut a, &mut b, seed).unwrap();
        let mut a2 = ProbAgent::new("p", CurveParams::default()).with_samples(300);
        let mut b2 = RuleAgent::new("r");
        assert_eq!(rec, play_game(&mut a2, &mut b2, seed).unwrap());
        if rec.forfeit {
            continue;
        }
        let g = replay(&rec);
        assert!(g.is_over());
        assert_eq!(g.nets(), rec.nets);
        assert_eq!(g.outcome(), Some(rec.outcome));
        assert_eq!(rec.nets[0] + rec.nets[1], 0);

        let line = rec.to_json_line();
        assert!(!line.contains('\n'));
        let back: GameRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, rec);
    }
}

#[test]
fn deck_does_not_depend_on_agents() {
    let mut a: Box<dyn Agent> = Box::new(PassiveAgent::new("x"));
    let mut b: Box<dyn Agent> = Box::new(ThresholdAgent::new("y", HandType17::PairLow));
    let r1 = play_game(a.as_mut(), b.as_mut(), 9).unwrap();
    let mut c = ProbAgent::new("x", CurveParams::default()).with_samples(500);
    let mut d = RuleAgent::new("y");
    let r2 = play_game(&mut c, &mut d, 9).unwrap();
    if r1.went_to_showdown() && r2.went_to_showdown() {
        assert_eq!(r1.hands, r2.hands);
    }
    assert_eq!(r1.hands[0][..2], r2.hands[0][..2]);
}

#[test]
fn fixed_deck_game_pays_the_better_hand() {
    let deck = Deck::from_cards(parse_cards(SF_VS_QUADS).unwrap()).unwrap();
    let mut a = PassiveAgent::new("a");
    let mut b = PassiveAgent::new("b");
    let r = play_game_with_deck(&mut a, &mut b, deck, 1).unwrap();
    assert_eq!(r.outcome, Outcome::Winner(0));
    assert_eq!(r.nets, [1, -1]);
}
