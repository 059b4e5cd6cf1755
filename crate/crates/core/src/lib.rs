//! Slot-level laboratory for contention-based downlink medium access on
//! shared unlicensed spectrum.
//!
//! The crate is split along the simulation pipeline:
//!
//! * [`channel`] draws InH-Office deployments, large-scale gains and the
//!   slow IIR small-scale fading that evolves them slot by slot.
//! * [`env`] runs frame-based contention: back-off counters, preamble
//!   energy sensing, SINR and rate, average-rate smoothing and the
//!   proportional-fairness reward.
//! * [`baselines`] holds the centralized PF scheduler and the fixed and
//!   configuration-adaptive energy-detect policies.
//! * [`rl`] implements per-BS recurrent dueling Q-networks for the EOS and
//!   CON stages, replay memories, training and greedy evaluation.
//! * [`harness`] builds layouts and train/validation/test splits, drives
//!   experiments and writes the CSV outputs.

pub mod baselines;
pub mod channel;
pub mod env;
pub mod error;
pub mod harness;
pub mod rl;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
