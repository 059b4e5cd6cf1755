//! Frame-based contention environment.
//!
//! Each slot every BS draws a back-off counter; BSs then decide in counter
//! order, each sensing the preambles of earlier transmitters. Rates follow
//! from the SINR at the served UE, and the common reward telescopes to the
//! proportional-fairness utility of the smoothed average rates.

mod counters;
mod engine;
mod observation;
mod params;
mod record;
mod reward;
mod sensing;

pub use counters::draw_counters;
pub use engine::{
    run_config_episode, run_episode, run_slot, AccessPolicy, CentralView, ConstantPolicy, ContentionView, EpisodeOptions, FnPolicy, rollout_rewards,
    NetworkState, SlotOutcome,
};
pub use observation::{ConObservation, EosObservation};
pub use params::{CounterMode, EnergyVectorLength, EnvParams, PenaltyScope};
pub use record::{ChannelTrace, ConQuadruple, EosTuple, EpisodeMeta, EpisodeRecord, METRICS_CSV_PREFIX};
pub use reward::{log_ratio_reward, per_ue_reward, rate, sinr, slot_reward, update_avg_rate, utility, SinrTerms};
pub use sensing::{sense_energy, SensingNoise};

/// Binary medium-access decision: 1 transmits, 0 defers.
pub type Action = u8;
