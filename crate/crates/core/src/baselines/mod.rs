//! Comparison policies: the centralized proportional-fair scheduler, a
//! fixed energy-detect threshold and its configuration-adaptive envelope.

mod ed;
mod pf;

pub use ed::{adaptive_ed, ed_decide, AdaptiveEdResult, EdConfig, EdPolicy};
pub use pf::{pf_metric, pf_schedule, PfPolicy, DEFAULT_PF_CAP};
