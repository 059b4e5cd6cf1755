use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::LargeScaleGains;
use crate::env::{rollout_rewards, AccessPolicy, Action, ContentionView, EnvParams};
use crate::units::dbm_to_mw;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdConfig {
    pub threshold_dbm: f64,
    pub sweep_set: Vec<f64>,
}

impl Default for EdConfig {
    fn default() -> Self {
        Self {
            threshold_dbm: -72.0,
            // -32 dBm down to -92 dBm in 4 dB steps.
            sweep_set: (0..16).map(|k| -32.0 - 4.0 * k as f64).collect(),
        }
    }
}

impl EdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep_set.is_empty() {
            return Err(Error::Config("ED sweep set is empty".into()));
        }
        let w = &self.sweep_set;
        let asc = w.windows(2).all(|p| p[0] < p[1]);
        let desc = w.windows(2).all(|p| p[0] > p[1]);
        if !(asc || desc) {
            return Err(Error::Config("ED sweep set must be strictly ordered".into()));
        }
        Ok(())
    }
}

/// Transmit iff the total sensed energy (raw mW) is strictly below `e0_dbm`.
pub fn ed_decide(energy_mw: &[f64], e0_dbm: f64) -> Action {
    let total: f64 = energy_mw.iter().sum();
    Action::from(total < dbm_to_mw(e0_dbm))
}

#[derive(Clone, Copy, Debug)]
pub struct EdPolicy {
    pub threshold_dbm: f64,
}

impl EdPolicy {
    pub fn new(threshold_dbm: f64) -> Self {
        Self { threshold_dbm }
    }
}

impl AccessPolicy for EdPolicy {
    fn name(&self) -> String {
        format!("ed({})", self.threshold_dbm)
    }

    fn decide(&mut self, view: &ContentionView<'_>) -> Action {
        ed_decide(view.raw_energy_mw, self.threshold_dbm)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveEdResult {
    pub best_threshold_dbm: f64,
    pub best_mean_reward: f64,
    /// `(threshold, mean cumulative reward)` for every swept threshold.
    pub sweep: Vec<(f64, f64)>,
    /// Per-realization rewards of the best threshold.
    pub best_rewards: Vec<f64>,
}

/// Sweeps every threshold over the same realization seeds and keeps the
/// best mean cumulative reward. Ties keep the earliest threshold in sweep
/// order.
pub fn adaptive_ed(g0: &LargeScaleGains, sweep_set: &[f64], realizations: &[u64], params: &EnvParams) -> Result<AdaptiveEdResult> {
    if sweep_set.is_empty() {
        return Err(Error::Config("ED sweep set is empty".into()));
    }
    let per: Vec<Vec<f64>> = sweep_set
        .par_iter()
        .map(|&t| rollout_rewards(g0, &mut EdPolicy::new(t), params, realizations))
        .collect::<Result<_>>()?;
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let sweep: Vec<(f64, f64)> = sweep_set.iter().zip(&per).map(|(&t, r)| (t, mean(r))).collect();
    let mut best = 0;
    for (k, &(_, m)) in sweep.iter().enumerate() {
        if m > sweep[best].1 {
            best = k;
        }
    }
    Ok(AdaptiveEdResult {
        best_threshold_dbm: sweep[best].0,
        best_mean_reward: sweep[best].1,
        best_rewards: per[best].clone(),
        sweep,
    })
}
