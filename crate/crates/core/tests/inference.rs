mod common;

use std::sync::OnceLock;

use bayespoker::cards::{classify_cards, Deck, HandType17, NUM_TYPES};
use bayespoker::inference::{infer, infer_soft, Evidence, InferenceError, NetworkRound, SoftEvidence};
use bayespoker::matrices::{ActionClass, ActionCounts, MatrixSet, RoundId};
use bayespoker::rng;
use rand::Rng;
use common::{enumerate_posterior, random_evidence, random_network, to_library, SplitMix};

fn estimated() -> &'static MatrixSet {
    static SET: OnceLock<MatrixSet> = OnceLock::new();
    SET.get_or_init(|| MatrixSet::estimate(400_000, 2024).unwrap())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn matches_enumeration_on_random_networks() {
    let mut r = SplitMix(1);
    let mut compared = 0;
    for case in 0..300 {
        let raw = random_network(&mut r);
        let round = RoundId::ALL[case % 4];
        let (set, am) = to_library(&raw, round);
        let net = NetworkRound::new(&set, round, &am);
        let (b, u, a) = random_evidence(&mut r);
        let soft = SoftEvidence {
            bpp_current: b,
            opp_upcards: u,
            opp_action: a,
        };
        match (enumerate_posterior(&raw, &b, &u, &a), infer_soft(&net, &soft)) {
            (Some(want), Ok(got)) => {
                assert!((want.p_win - got.p_win).abs() <= 1e-9, "case {case}");
                assert!(close(&want.bpp_final, &got.bpp_final, 1e-9));
                assert!(close(&want.opp_final, &got.opp_final, 1e-9));
                assert!(close(&want.opp_current, &got.opp_current, 1e-9));
                compared += 1;
            }
            (None, Err(InferenceError::ImpossibleEvidence(_))) => {}
            (want, got) => panic!("case {case}: oracle {want:?} vs {got:?}"),
        }
    }
    assert!(compared > 200);
}

#[test]
fn posteriors_are_normalized() {
    let set = estimated();
    let counts = ActionCounts::default();
    for round in RoundId::ALL {
        let am = counts.action_matrix(round);
        let net = NetworkRound::new(set, round, &am);
        for own in HandType17::ALL {
            for up in [HandType17::BustedLow, HandType17::PairQueens, HandType17::Flush] {
                let ev = Evidence {
                    bpp_current: own,
                    opp_upcards: up,
                    opp_action: Some(ActionClass::Aggressive),
                };
                let b = infer(&net, &ev).unwrap();
                for v in [&b.bpp_final, &b.opp_final, &b.opp_current] {
                    assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                }
                assert!((0.0..=1.0).contains(&b.p_win));
            }
        }
    }
}

/// With own straight flush and ordinary upcards opposite, the only way to
/// not win is a tie against another straight flush; the oracle bounds
/// that tie mass.
#[test]
fn last_round_straight_flush_nearly_certain() {
    let set = estimated();
    let counts = ActionCounts::default();
    let am = counts.action_matrix(RoundId::LAST);
    let net = NetworkRound::new(set, RoundId::LAST, &am);
    let raw = common::RawNetwork {
        prior: set.final_prior,
        c_given_f: set.c_given_f[3].to_rows(),
        u_given_c: set.u_given_c[3].to_rows(),
        a_given_c: am.to_rows(),
        win: *set.win.entries(),
    };
    for up in HandType17::ALL.into_iter().filter(|&t| t < HandType17::Straight) {
        let ev = Evidence {
            bpp_current: HandType17::StraightFlush,
            opp_upcards: up,
            opp_action: None,
        };
        let got = infer(&net, &ev).unwrap().p_win;
        let mut e_up = [0.0; NUM_TYPES];
        e_up[up.index()] = 1.0;
        let mut e_own = [0.0; NUM_TYPES];
        e_own[HandType17::StraightFlush.index()] = 1.0;
        let want = enumerate_posterior(&raw, &e_own, &e_up, &[1.0, 1.0]).unwrap();
        assert!((got - want.p_win).abs() <= 1e-9);
        assert!(got >= 0.999, "{up}: {got}");
    }
}

#[test]
fn unobserved_action_node_is_inert() {
    let mut r = SplitMix(5);
    for _ in 0..50 {
        let raw = random_network(&mut r);
        let mut other = raw.clone();
        other.a_given_c = common::random_rows(&mut r, NUM_TYPES, 2);
        let (set, am) = to_library(&raw, RoundId::FIRST);
        let (set2, am2) = to_library(&other, RoundId::FIRST);
        let ev = Evidence {
            bpp_current: HandType17::ALL[r.below(NUM_TYPES)],
            opp_upcards: HandType17::ALL[r.below(NUM_TYPES)],
            opp_action: None,
        };
        let a = infer(&NetworkRound::new(&set, RoundId::FIRST, &am), &ev);
        let b = infer(&NetworkRound::new(&set2, RoundId::FIRST, &am2), &ev);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.p_win, b.p_win);
                assert_eq!(a.opp_final, b.opp_final);
            }
            (Err(_), Err(_)) => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn rescaled_evidence_gives_same_answer() {
    let mut r = SplitMix(9);
    for _ in 0..100 {
        let raw = random_network(&mut r);
        let (set, am) = to_library(&raw, RoundId::LAST);
        let net = NetworkRound::new(&set, RoundId::LAST, &am);
        let (b, u, a) = random_evidence(&mut r);
        let ev = SoftEvidence {
            bpp_current: b,
            opp_upcards: u,
            opp_action: a,
        };
        let k = [0.001 + r.unit() * 50.0, 0.001 + r.unit() * 50.0, 0.001 + r.unit() * 50.0];
        let scaled = SoftEvidence {
            bpp_current: b.map(|x| x * k[0]),
            opp_upcards: u.map(|x| x * k[1]),
            opp_action: a.map(|x| x * k[2]),
        };
        if let (Ok(x), Ok(y)) = (infer_soft(&net, &ev), infer_soft(&net, &scaled)) {
            assert!((x.p_win - y.p_win).abs() <= 1e-12);
        }
    }
}

/// Expected final-type ordinal given each current type, under the prior
/// and M_{C|F} of one round.
fn expected_final(set: &MatrixSet, round: RoundId) -> [f64; NUM_TYPES] {
    let m = &set.c_given_f[round.index()];
    std::array::from_fn(|c| {
        let (mut num, mut den) = (0.0, 0.0);
        for f in 0..NUM_TYPES {
            let w = set.final_prior[f] * m.get(f, c);
            num += w * f as f64;
            den += w;
        }
        num / den
    })
}

/// An honest opponent grows more aggressive as its current type promises a
/// stronger final hand: P(aggressive) is logistic in the expected final
/// ordinal, centred on PairLow. Learning from it makes aggression raise the
/// opponent's expected hand. (A deterministic script would make some
/// evidence nearly impossible and leave only the smoothing floor to decide.)
#[test]
fn aggression_does_not_lower_opponent_estimate() {
    let set = estimated();
    let promise: Vec<[f64; NUM_TYPES]> = RoundId::ALL.iter().map(|&r| expected_final(set, r)).collect();
    let bar = HandType17::PairLow.index() as f64;
    let mut counts = ActionCounts::default();
    let mut g = rng::stream(4, 0);
    for _ in 0..50_000 {
        let hand = Deck::shuffled(&mut g).deal(5).unwrap();
        for round in RoundId::ALL {
            let t = classify_cards(&hand[..round.cards_dealt()]).unwrap();
            let lean = 1.0 / (1.0 + (bar - promise[round.index()][t.index()]).exp());
            let class = if g.random::<f64>() < lean {
                ActionClass::Aggressive
            } else {
                ActionClass::Conservative
            };
            counts.update(round, t, class);
        }
    }
    for round in RoundId::ALL {
        let am = counts.action_matrix(round);
        let net = NetworkRound::new(set, round, &am);
        for up in HandType17::ALL {
            let ev = |c| Evidence {
                bpp_current: HandType17::PairMedium,
                opp_upcards: up,
                opp_action: Some(c),
            };
            let (Ok(quiet), Ok(loud)) = (
                infer(&net, &ev(ActionClass::Conservative)),
                infer(&net, &ev(ActionClass::Aggressive)),
            ) else {
                continue;
            };
            assert!(
                loud.opp_final_mean_index() >= quiet.opp_final_mean_index() - 1e-12,
                "round {round} up {up}: {} < {}",
                loud.opp_final_mean_index(),
                quiet.opp_final_mean_index()
            );
        }
    }
}

#[test]
fn soft_evidence_rejects_negative() {
    let set = estimated();
    let am = ActionCounts::default().action_matrix(RoundId::FIRST);
    let net = NetworkRound::new(set, RoundId::FIRST, &am);
    let mut ev = SoftEvidence {
        bpp_current: [1.0; NUM_TYPES],
        opp_upcards: [1.0; NUM_TYPES],
        opp_action: [1.0, 1.0],
    };
    ev.bpp_current[3] = -0.1;
    assert_eq!(infer_soft(&net, &ev), Err(InferenceError::BadLikelihood));
}
