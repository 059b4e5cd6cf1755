use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baselines::EdConfig;
use crate::env::{CounterMode, EnvParams};
use crate::rl::{evaluate, mean_reward, Checkpoint, EvalConfig, EvalRow, PolicySpec};
use crate::{Error, Result};

/// Mean reward of one policy under one counter mode, overall and per
/// configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterTableEntry {
    pub counter_mode: CounterMode,
    pub policy: String,
    pub mean_reward: f64,
    pub per_config: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterTable {
    pub entries: Vec<CounterTableEntry>,
    pub rows: Vec<(CounterMode, EvalRow)>,
}

pub const COUNTER_TABLE_POLICIES: [&str; 4] = ["rl", "pf", "ed", "adaptive-ed"];

impl CounterTable {
    pub fn get(&self, mode: CounterMode, policy: &str) -> Option<&CounterTableEntry> {
        self.entries.iter().find(|e| e.counter_mode == mode && e.policy == policy)
    }

    /// Unique-counter reward minus non-unique-counter reward of a policy.
    pub fn counter_delta(&self, policy: &str) -> Option<f64> {
        Some(self.get(CounterMode::Unique, policy)?.mean_reward - self.get(CounterMode::Iid, policy)?.mean_reward)
    }

    /// Summary CSV: `counter_mode, policy, mean_reward`.
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["counter_mode", "policy", "mean_reward"])?;
        for e in &self.entries {
            out.write_record([mode_name(e.counter_mode), &e.policy, &e.mean_reward.to_string()])?;
        }
        out.flush().map_err(|e| Error::io("counter table summary", e))?;
        Ok(())
    }

    /// Per-configuration CSV: `counter_mode, policy, config_id, mean_reward`.
    pub fn write_per_config_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["counter_mode", "policy", "config_id", "mean_reward"])?;
        for e in &self.entries {
            for (c, r) in &e.per_config {
                out.write_record([mode_name(e.counter_mode), &e.policy, c, &r.to_string()])?;
            }
        }
        out.flush().map_err(|e| Error::io("counter table per-config", e))?;
        Ok(())
    }
}

pub fn mode_name(m: CounterMode) -> &'static str {
    match m {
        CounterMode::Unique => "uc",
        CounterMode::Iid => "nuc",
    }
}

/// Evaluates RL, PF, fixed ED and adaptive ED on the test configurations
/// under unique and non-unique counters, with the same realization seeds
/// in both modes.
pub fn run_counter_table(
    checkpoint: &Checkpoint,
    test: &[EvalConfig],
    seeds: &[u64],
    params: &EnvParams,
    ed: &EdConfig,
) -> Result<CounterTable> {
    let specs = [PolicySpec::Rl, PolicySpec::Pf, PolicySpec::Ed(ed.threshold_dbm), PolicySpec::AdaptiveEd];
    let mut entries = Vec::new();
    let mut all = Vec::new();
    for mode in [CounterMode::Unique, CounterMode::Iid] {
        let p = EnvParams {
            counter_mode: mode,
            ..params.clone()
        };
        let rows = evaluate(Some(checkpoint), test, seeds, &p, &specs, ed)?;
        for policy in COUNTER_TABLE_POLICIES {
            let per_config = test
                .iter()
                .map(|c| (c.id.clone(), mean_reward(&rows, policy, Some(&c.id)).unwrap_or(f64::NAN)))
                .collect();
            entries.push(CounterTableEntry {
                counter_mode: mode,
                policy: policy.into(),
                mean_reward: mean_reward(&rows, policy, None).unwrap_or(f64::NAN),
                per_config,
            });
        }
        all.extend(rows.into_iter().map(|r| (mode, r)));
    }
    Ok(CounterTable { entries, rows: all })
}
