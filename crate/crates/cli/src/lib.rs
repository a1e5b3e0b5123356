//! Command line and network front end for `bayespoker`.

pub mod commands;
pub mod service;
pub mod wire;
