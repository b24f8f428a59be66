//! Local-realistic POVM models for qubit coherence, EPR steering and CHSH
//! tests, with an exact quantum oracle, Monte Carlo and exact estimators,
//! and efficiency-versus-violation curve sweeps.

pub mod causality;
pub mod estimators;
pub mod geometry;
pub mod models;
pub mod output;
pub mod quantum;
