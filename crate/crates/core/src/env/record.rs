use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::observation::{ConObservation, EosObservation};
use super::Action;
use crate::Result;

/// `<o_EOS, o_CON>` saved once every BS has decided.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EosTuple {
    pub eos: EosObservation,
    pub con: ConObservation,
}

/// `<o_CON, a, r_CON, o_EOS'>` saved at the end of the slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConQuadruple {
    pub con: ConObservation,
    pub action: Action,
    pub reward: f64,
    pub next_eos: EosObservation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub config_id: String,
    pub policy: String,
    pub realization_seed: u64,
    pub n_bs: usize,
    pub episode_len: usize,
    pub gamma: f64,
}

/// Per-slot effective gains, flattened row-major.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelTrace {
    pub gains_ue: Vec<Vec<f64>>,
    pub gains_bs: Vec<Vec<f64>>,
}

impl ChannelTrace {
    pub(crate) fn push(&mut self, ue: &Array2<f64>, bs: &Array2<f64>) {
        self.gains_ue.push(ue.iter().copied().collect());
        self.gains_bs.push(bs.iter().copied().collect());
    }
}

/// Header prefix of the per-slot metrics CSV; per-BS `rate_i` then
/// `action_i` columns follow.
pub const METRICS_CSV_PREFIX: [&str; 2] = ["slot", "reward"];

/// Everything one episode produced. `rewards[0]` is the initial utility
/// term `sum_j ln xbar_j[0]`, which precedes any action; `rewards[n]` for
/// `n >= 1` is the common reward of slot `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub meta: EpisodeMeta,
    /// `eos_tuples[bs][n]`.
    pub eos_tuples: Vec<Vec<EosTuple>>,
    /// `con_quads[bs][n]`.
    pub con_quads: Vec<Vec<ConQuadruple>>,
    pub rewards: Vec<f64>,
    /// `actions[n][bs]`.
    pub actions: Vec<Vec<Action>>,
    pub rates: Vec<Vec<f64>>,
    pub counters: Vec<Vec<usize>>,
    pub initial_xbar: Vec<f64>,
    pub final_xbar: Vec<f64>,
    pub trace: Option<ChannelTrace>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.meta.episode_len
    }

    pub fn is_empty(&self) -> bool {
        self.meta.episode_len == 0
    }

    /// `sum_{n=0}^{L} gamma^n r[n]`, including the initial term.
    pub fn cumulative_reward(&self) -> f64 {
        self.discounted_reward(self.meta.gamma)
    }

    pub fn discounted_reward(&self, gamma: f64) -> f64 {
        let mut w = 1.0;
        let mut acc = 0.0;
        for r in &self.rewards {
            acc += w * r;
            w *= gamma;
        }
        acc
    }

    pub fn mean_rate(&self) -> f64 {
        let n = self.rates.iter().map(Vec::len).sum::<usize>();
        if n == 0 {
            return 0.0;
        }
        self.rates.iter().flatten().sum::<f64>() / n as f64
    }

    /// Number of slots in which every BS deferred.
    pub fn all_off_slots(&self) -> usize {
        self.actions.iter().filter(|a| a.iter().all(|&x| x == 0)).count()
    }

    pub fn write_metrics_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n = self.meta.n_bs;
        let mut header: Vec<String> = METRICS_CSV_PREFIX.iter().map(|s| s.to_string()).collect();
        header.extend((0..n).map(|i| format!("rate_{i}")));
        header.extend((0..n).map(|i| format!("action_{i}")));
        out.write_record(&header)?;
        for (s, ((r, rates), acts)) in self.rewards[1..].iter().zip(&self.rates).zip(&self.actions).enumerate() {
            let mut row = vec![(s + 1).to_string(), r.to_string()];
            row.extend(rates.iter().map(f64::to_string));
            row.extend(acts.iter().map(u8::to_string));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| crate::Error::io("<metrics csv>", e))?;
        Ok(())
    }

    /// Channel and counter trace as CSV: one row per slot with counters
    /// followed by BS->UE and BS->BS effective gains (empty if traces were
    /// not recorded).
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n = self.meta.n_bs;
        let mut header = vec!["slot".to_string()];
        header.extend((0..n).map(|i| format!("counter_{i}")));
        header.extend((0..n * n).map(|k| format!("g_ue_{}_{}", k / n, k % n)));
        header.extend((0..n * n).map(|k| format!("g_bs_{}_{}", k / n, k % n)));
        out.write_record(&header)?;
        if let Some(t) = &self.trace {
            for (s, ((c, ue), bs)) in self.counters.iter().zip(&t.gains_ue).zip(&t.gains_bs).enumerate() {
                let mut row = vec![(s + 1).to_string()];
                row.extend(c.iter().map(usize::to_string));
                row.extend(ue.iter().map(|g| format!("{g:e}")));
                row.extend(bs.iter().map(|g| format!("{g:e}")));
                out.write_record(&row)?;
            }
        }
        out.flush().map_err(|e| crate::Error::io("<trace csv>", e))?;
        Ok(())
    }

    /// SHA-256 of the trace CSV, hex encoded.
    pub fn trace_digest(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_trace_csv(&mut buf)?;
        Ok(hex::encode(Sha256::digest(&buf)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
