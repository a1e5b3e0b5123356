//! Five-card stud poker with a Bayesian-network player.

pub mod cards;
pub mod decision;
pub mod engine;
pub mod harness;
pub mod inference;
pub mod matrices;
pub mod players;
pub mod rng;
