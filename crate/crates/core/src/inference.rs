//! The per-round poker network and exact belief updating.
//!
//! Structure (a polytree):
//!
//! ```text
//!   OPP_Final -> OPP_Current -> OPP_Upcards
//!                     \-------> OPP_Action
//!   BPP_Final -> BPP_Current
//!   {BPP_Final, OPP_Final} -> BPP_Win
//! ```
//!
//! Both final nodes carry the same prior. Posteriors are computed by
//! pushing likelihood messages up the two chains; `BPP_Win` is unobserved,
//! so the finals stay independent given the evidence.

use thiserror::Error;

use crate::cards::{HandType17, NUM_TYPES};
use crate::decision::Action;
use crate::matrices::{ActionClass, ConditionalMatrix, MatrixSet, RoundId, WinMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("evidence has zero likelihood under the network ({0})")]
    ImpossibleEvidence(&'static str),
    #[error("soft evidence must be finite and non-negative")]
    BadLikelihood,
    #[error("fold in action history; the hand is over")]
    FoldInHistory,
}

/// One round's network: references into the matrix set plus the learned
/// action matrix for the current opponent.
#[derive(Debug, Clone, Copy)]
pub struct NetworkRound<'a> {
    pub round: RoundId,
    pub final_prior: &'a [f64; NUM_TYPES],
    pub c_given_f: &'a ConditionalMatrix,
    pub u_given_c: &'a ConditionalMatrix,
    pub a_given_c: &'a ConditionalMatrix,
    pub win: &'a WinMatrix,
}

impl<'a> NetworkRound<'a> {
    pub fn new(set: &'a MatrixSet, round: RoundId, a_given_c: &'a ConditionalMatrix) -> Self {
        NetworkRound {
            round,
            final_prior: &set.final_prior,
            c_given_f: &set.c_given_f[round.index()],
            u_given_c: &set.u_given_c[round.index()],
            a_given_c,
            win: &set.win,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evidence {
    pub bpp_current: HandType17,
    pub opp_upcards: HandType17,
    /// Absent until the opponent has acted this round.
    pub opp_action: Option<ActionClass>,
}

/// Virtual evidence: a likelihood vector over each observed node's states.
/// Hard evidence is the indicator of the observed state; an unobserved
/// node is all ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftEvidence {
    pub bpp_current: [f64; NUM_TYPES],
    pub opp_upcards: [f64; NUM_TYPES],
    pub opp_action: [f64; 2],
}

impl From<&Evidence> for SoftEvidence {
    fn from(ev: &Evidence) -> SoftEvidence {
        let mut bpp_current = [0.0; NUM_TYPES];
        bpp_current[ev.bpp_current.index()] = 1.0;
        let mut opp_upcards = [0.0; NUM_TYPES];
        opp_upcards[ev.opp_upcards.index()] = 1.0;
        let opp_action = match ev.opp_action {
            None => [1.0, 1.0],
            Some(c) => {
                let mut a = [0.0; 2];
                a[c.index()] = 1.0;
                a
            }
        };
        SoftEvidence {
            bpp_current,
            opp_upcards,
            opp_action,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub bpp_final: [f64; NUM_TYPES],
    pub opp_final: [f64; NUM_TYPES],
    pub opp_current: [f64; NUM_TYPES],
    pub p_win: f64,
}

impl BeliefState {
    /// Posterior mean of the opponent's final type, by ordinal.
    pub fn opp_final_mean_index(&self) -> f64 {
        self.opp_final.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }
}

fn normalize(v: &mut [f64; NUM_TYPES], what: &'static str) -> Result<(), InferenceError> {
    let z: f64 = v.iter().sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(InferenceError::ImpossibleEvidence(what));
    }
    v.iter_mut().for_each(|x| *x /= z);
    Ok(())
}

/// λ(row) = Σ_col M[row][col] e(col). An all-ones (unobserved) leaf sends
/// exactly ones rather than row sums that are one only up to rounding.
fn pull_up(m: &ConditionalMatrix, e: &[f64]) -> [f64; NUM_TYPES] {
    if e.iter().all(|&l| l == 1.0) {
        return [1.0; NUM_TYPES];
    }
    std::array::from_fn(|row| m.row(row).iter().zip(e).map(|(p, l)| p * l).sum())
}

/// Exact posterior for the observed states of one round.
pub fn infer(net: &NetworkRound<'_>, ev: &Evidence) -> Result<BeliefState, InferenceError> {
    infer_soft(net, &SoftEvidence::from(ev))
}

pub fn infer_soft(net: &NetworkRound<'_>, ev: &SoftEvidence) -> Result<BeliefState, InferenceError> {
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= 0.0);
    if !finite(&ev.bpp_current) || !finite(&ev.opp_upcards) || !finite(&ev.opp_action) {
        return Err(InferenceError::BadLikelihood);
    }
    let prior = net.final_prior;

    // BPP chain: BPP_Final <- λ from BPP_Current.
    let lambda_bpp = pull_up(net.c_given_f, &ev.bpp_current);
    let mut bpp_final: [f64; NUM_TYPES] = std::array::from_fn(|i| prior[i] * lambda_bpp[i]);
    normalize(&mut bpp_final, "BPP_Current")?;

    // Opponent chain: OPP_Current collects λ from both leaves, then passes
    // it up to OPP_Final.
    let lambda_up = pull_up(net.u_given_c, &ev.opp_upcards);
    let lambda_act = pull_up(net.a_given_c, &ev.opp_action);
    let lambda_cur: [f64; NUM_TYPES] = std::array::from_fn(|k| lambda_up[k] * lambda_act[k]);
    let lambda_opp = pull_up(net.c_given_f, &lambda_cur);
    let mut opp_final: [f64; NUM_TYPES] = std::array::from_fn(|j| prior[j] * lambda_opp[j]);
    normalize(&mut opp_final, "OPP_Upcards/OPP_Action")?;

    // π(OPP_Current) = Σ_j prior(j) M_{C|F}[j][k]
    let mut opp_current = [0.0; NUM_TYPES];
    for (j, &pj) in prior.iter().enumerate() {
        for (k, slot) in opp_current.iter_mut().enumerate() {
            *slot += pj * net.c_given_f.get(j, k);
        }
    }
    opp_current.iter_mut().zip(&lambda_cur).for_each(|(p, l)| *p *= l);
    normalize(&mut opp_current, "OPP_Current")?;

    let mut p_win = 0.0;
    for (i, &pi) in bpp_final.iter().enumerate() {
        let row: f64 = opp_final
            .iter()
            .enumerate()
            .map(|(j, &pj)| pj * net.win.get(i, j))
            .sum();
        p_win += pi * row;
    }
    Ok(BeliefState {
        bpp_final,
        opp_final,
        opp_current,
        p_win: p_win.clamp(0.0, 1.0),
    })
}

/// Evidence class from the opponent's actions this round: the most recent
/// action decides.
pub fn action_class_of(history: &[Action]) -> Result<Option<ActionClass>, InferenceError> {
    if history.contains(&Action::Fold) {
        return Err(InferenceError::FoldInHistory);
    }
    Ok(history.last().and_then(|a| a.class()))
}
