//! Hitting and return times of cylinder sets under shift-invariant measures.

pub mod automaton;
pub mod engine;
pub mod estimator;
pub mod exact;
pub mod experiment;
pub mod logspace;
pub mod model;
pub mod montecarlo;
pub mod orbit;
pub mod rng;
pub mod stats;
pub mod survival;
pub mod word;
