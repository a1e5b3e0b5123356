//! Independent reference implementations used as test oracles. Nothing
//! here calls into the library's evaluators or inference code.
#![allow(dead_code)]

use bayespoker::cards::Card;

/// Nine-category index (0 = busted ... 8 = straight flush) and tiebreak
/// ranks, computed from a rank histogram.
pub fn reference_rank(cards: &[Card]) -> (usize, Vec<u8>) {
    assert_eq!(cards.len(), 5);
    let mut hist = [0u8; 15];
    for c in cards {
        hist[c.rank() as usize] += 1;
    }
    // (count, rank) groups, biggest group first, then higher rank
    let mut groups: Vec<(u8, u8)> = (2..=14u8)
        .filter(|&r| hist[r as usize] > 0)
        .map(|r| (hist[r as usize], r))
        .collect();
    groups.sort_by(|a, b| b.cmp(a));
    let ranks: Vec<u8> = groups.iter().map(|g| g.1).collect();
    let flush = cards.iter().all(|c| c.suit() == cards[0].suit());
    let straight = groups.len() == 5 && ranks[0] - ranks[4] == 4;
    let shape: Vec<u8> = groups.iter().map(|g| g.0).collect();
    let category = match (straight, flush, shape.as_slice()) {
        (true, true, _) => 8,
        (_, _, [4, 1]) => 7,
        (_, _, [3, 2]) => 6,
        (_, true, _) => 5,
        (true, _, _) => 4,
        (_, _, [3, 1, 1]) => 3,
        (_, _, [2, 2, 1]) => 2,
        (_, _, [2, 1, 1, 1]) => 1,
        _ => 0,
    };
    (category, ranks)
}

/// 17-type ordinal from the reference evaluator.
pub fn reference_type(cards: &[Card]) -> usize {
    let (cat, ranks) = reference_rank(cards);
    let sub = |r: u8| match r {
        2..=9 => 0,
        10 | 11 => 1,
        12 => 2,
        13 => 3,
        _ => 4,
    };
    match cat {
        0 => sub(ranks[0]),
        1 => 5 + sub(ranks[0]),
        c => 8 + c,
    }
}

/// Ordering of two five-card hands by the reference evaluator.
pub fn reference_compare(a: &[Card], b: &[Card]) -> std::cmp::Ordering {
    reference_rank(a).cmp(&reference_rank(b))
}

/// Published nine-category probabilities, weakest category first.
pub const PUBLISHED_CATEGORY_PROBABILITIES: [f64; 9] = [
    0.5015629, 0.4225703, 0.0475390, 0.0211285, 0.0035492, 0.0019693, 0.0014406, 0.0002401, 0.0000134,
];

/// Exact counts of each category over all C(52,5) hands with the ace
/// high only: the ten A-2-3-4-5 rank sets count as busted or flush.
pub const EXACT_COUNTS: [u64; 9] = [1_303_560, 1_098_240, 123_552, 54_912, 9_180, 5_112, 3_744, 624, 36];

pub const TOTAL_HANDS: u64 = 2_598_960;

/// Calls `f` with every k-subset of `items`.
pub fn for_each_subset<T: Copy>(items: &[T], k: usize, f: &mut impl FnMut(&[T])) {
    fn rec<T: Copy>(items: &[T], k: usize, start: usize, buf: &mut Vec<T>, f: &mut impl FnMut(&[T])) {
        if buf.len() == k {
            f(buf);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - buf.len() {
                break;
            }
            buf.push(items[i]);
            rec(items, k, i + 1, buf, f);
            buf.pop();
        }
    }
    rec(items, k, 0, &mut Vec::with_capacity(k), f);
}

/// Exact win probability (ties half) of `own` against an opponent showing
/// `opp_up`, over every hole card and completion for both hands.
pub fn exhaustive_win_probability(own: &[Card], opp_up: &[Card]) -> f64 {
    let unseen: Vec<Card> = Card::all()
        .filter(|c| !own.contains(c) && !opp_up.contains(c))
        .collect();
    let own_need = 5 - own.len();
    let opp_need = 5 - opp_up.len();
    let mut credit = 0u64;
    let mut total = 0u64;
    for_each_subset(&unseen, own_need, &mut |mine| {
        let mut a = own.to_vec();
        a.extend_from_slice(mine);
        let a_rank = reference_rank(&a);
        let rest: Vec<Card> = unseen.iter().copied().filter(|c| !mine.contains(c)).collect();
        for_each_subset(&rest, opp_need, &mut |theirs| {
            let mut b = opp_up.to_vec();
            b.extend_from_slice(theirs);
            credit += match a_rank.cmp(&reference_rank(&b)) {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
            total += 2;
        });
    });
    credit as f64 / total as f64
}

pub const N: usize = 17;

/// Plain-array description of one round's network.
#[derive(Debug, Clone)]
pub struct RawNetwork {
    pub prior: [f64; N],
    pub c_given_f: Vec<Vec<f64>>,
    pub u_given_c: Vec<Vec<f64>>,
    pub a_given_c: Vec<Vec<f64>>,
    pub win: [[f64; N]; N],
}

#[derive(Debug, Clone)]
pub struct EnumeratedPosterior {
    pub bpp_final: [f64; N],
    pub opp_final: [f64; N],
    pub opp_current: [f64; N],
    pub p_win: f64,
}

/// Posterior by enumerating the 17³ joint over (BPP_Final, OPP_Final,
/// OPP_Current); the observed leaves enter as likelihood sums. `p_win` is
/// the expectation of W under that joint.
pub fn enumerate_posterior(
    net: &RawNetwork,
    ev_bpp_current: &[f64; N],
    ev_opp_upcards: &[f64; N],
    ev_opp_action: &[f64; 2],
) -> Option<EnumeratedPosterior> {
    let leaf = |row: &[f64], ev: &[f64]| -> f64 { row.iter().zip(ev).map(|(p, e)| p * e).sum() };
    let mut joint = vec![0.0f64; N * N * N];
    let mut z = 0.0;
    for bf in 0..N {
        let p_bpp = net.prior[bf] * leaf(&net.c_given_f[bf], ev_bpp_current);
        for of in 0..N {
            for oc in 0..N {
                let p = p_bpp
                    * net.prior[of]
                    * net.c_given_f[of][oc]
                    * leaf(&net.u_given_c[oc], ev_opp_upcards)
                    * leaf(&net.a_given_c[oc], ev_opp_action);
                joint[(bf * N + of) * N + oc] = p;
                z += p;
            }
        }
    }
    if !(z > 0.0) {
        return None;
    }
    let mut out = EnumeratedPosterior {
        bpp_final: [0.0; N],
        opp_final: [0.0; N],
        opp_current: [0.0; N],
        p_win: 0.0,
    };
    for bf in 0..N {
        for of in 0..N {
            for oc in 0..N {
                let p = joint[(bf * N + of) * N + oc] / z;
                out.bpp_final[bf] += p;
                out.opp_final[of] += p;
                out.opp_current[oc] += p;
                out.p_win += p * net.win[bf][of];
            }
        }
    }
    Some(out)
}

/// Pot odds and thresholds written directly from the formulas, with the
/// player count `n` and unit `u` kept general.
pub mod pot {
    pub fn zadeh(k: f64, c: f64, n: f64) -> f64 {
        k / (c + (n - 1.0) * k)
    }
    pub fn all_call(k: f64, c: f64, n: f64) -> f64 {
        k / (c + n * k)
    }
    pub fn midtable(k: f64, c: f64, n: f64, u: f64) -> f64 {
        k / (c + (n - 1.0) * k - (n - 1.0) / 2.0 * u)
    }
    pub fn correct(k: f64, c: f64, u: f64) -> f64 {
        k / (c + k - u)
    }
    pub fn prob_from_odds(o: f64) -> f64 {
        o / (1.0 + o)
    }
    pub fn theta(k: f64, c: f64) -> f64 {
        k / (c + 2.0 * k - 1.0)
    }
}

/// Curve heights via hyperbolic tangent forms of the logistic functions.
pub mod curves {
    pub fn bet(d: f64, f_b: f64) -> f64 {
        0.5 * (1.0 + (4.0 * (d - f_b)).tanh())
    }
    pub fn fold(d: f64, f_f: f64) -> f64 {
        0.5 * (1.0 - (4.0 * (d + f_f)).tanh())
    }
    pub fn call(d: f64, f_c: f64) -> f64 {
        let x = d + f_c;
        0.5 * (-20.0 * x * x).exp()
    }
}

/// Simple deterministic generator for test data that must not share code
/// with the library's RNG plumbing.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Random row-stochastic rows; roughly a fifth of the cells are zero.
pub fn random_rows(r: &mut SplitMix, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| loop {
            let row: Vec<f64> = (0..cols)
                .map(|_| if r.unit() < 0.2 { 0.0 } else { r.unit() })
                .collect();
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                break row.iter().map(|x| x / s).collect();
            }
        })
        .collect()
}

/// A random valid network: stochastic CPTs and prior, any W in [0,1].
pub fn random_network(r: &mut SplitMix) -> RawNetwork {
    let prior_row = random_rows(r, 1, N).remove(0);
    RawNetwork {
        prior: std::array::from_fn(|i| prior_row[i]),
        c_given_f: random_rows(r, N, N),
        u_given_c: random_rows(r, N, N),
        a_given_c: random_rows(r, N, 2),
        win: std::array::from_fn(|_| std::array::from_fn(|_| r.unit())),
    }
}

/// Random evidence: hard or soft likelihoods, action possibly absent.
pub fn random_evidence(r: &mut SplitMix) -> ([f64; N], [f64; N], [f64; 2]) {
    let vec17 = |r: &mut SplitMix| -> [f64; N] {
        if r.unit() < 0.5 {
            let mut v = [0.0; N];
            v[r.below(N)] = 1.0;
            v
        } else {
            std::array::from_fn(|_| r.unit() * 3.0)
        }
    };
    let a = vec17(r);
    let b = vec17(r);
    let act = match r.below(4) {
        0 => [1.0, 1.0],
        1 => [1.0, 0.0],
        2 => [0.0, 1.0],
        _ => [r.unit(), r.unit()],
    };
    (a, b, act)
}

/// Packs a raw network into the library's containers for one round.
pub fn to_library(
    raw: &RawNetwork,
    round: bayespoker::matrices::RoundId,
) -> (bayespoker::matrices::MatrixSet, bayespoker::matrices::ConditionalMatrix) {
    use bayespoker::matrices::{ConditionalMatrix, MatrixKind, MatrixSet, RoundId, WinMatrix};
    let build = |kind, rows: &Vec<Vec<f64>>| ConditionalMatrix::from_rows(round, kind, rows).unwrap();
    let cf = build(MatrixKind::CurrentGivenFinal, &raw.c_given_f);
    let uc = build(MatrixKind::UpcardsGivenCurrent, &raw.u_given_c);
    let set = MatrixSet {
        seed: 0,
        num_deals: 0,
        final_prior: raw.prior,
        c_given_f: RoundId::ALL.map(|_| cf.clone()),
        u_given_c: RoundId::ALL.map(|_| uc.clone()),
        win: WinMatrix::from_entries(raw.win),
        action_counts: Default::default(),
    };
    (set, build(MatrixKind::ActionGivenCurrent, &raw.a_given_c))
}
