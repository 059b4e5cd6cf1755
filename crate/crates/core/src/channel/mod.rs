//! Deployment geometry, InH-Office large-scale gains and slow small-scale
//! fading.

mod fading;
mod pathloss;
mod scenario;

pub use fading::{effective_gain, half_decorrelation_slots, FadingState};
pub use pathloss::{los_probability, pathloss_db, PathlossCoefficients, PathlossModel};
pub use scenario::{
    draw_large_scale_gains, draw_link_table, gain_normalizer, LargeScaleGains, LinkTable, Point3,
    Scenario, ScenarioGeometry, BS_HEIGHT_M, SCENARIO_FORMAT_VERSION, UE_HEIGHT_M,
};
