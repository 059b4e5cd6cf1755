use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, LrSchedule};
use super::net::DuelingAggregator;
use crate::{Error, Result};

/// Training hyper-parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub dense: usize,
    pub hidden: usize,
    pub aggregator: DuelingAggregator,
    pub lr_init: f64,
    pub lr_decay: f64,
    pub lr_decay_every: u64,
    pub adam: AdamConfig,
    pub batch_episodes: usize,
    pub seq_len: usize,
    pub iterations: u64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Discount used in the labels.
    pub gamma: f64,
    pub validation_every: u64,
    pub validation_configs: usize,
    pub validation_realizations: usize,
    /// Replay capacity in episodes; `None` means one per training
    /// configuration.
    pub replay_capacity: Option<usize>,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self::large()
    }
}

impl TrainHyper {
    /// Full-size networks and schedule.
    pub fn large() -> Self {
        Self {
            dense: 512,
            hidden: 256,
            aggregator: DuelingAggregator::MeanCentered,
            lr_init: 1e-4,
            lr_decay: 0.85,
            lr_decay_every: 500,
            adam: AdamConfig::default(),
            batch_episodes: 5000,
            seq_len: 50,
            iterations: 15000,
            eps_start: 1.0,
            eps_end: 0.25,
            gamma: 1.0 - 1e-6,
            validation_every: 600,
            validation_configs: 10,
            validation_realizations: 10,
            replay_capacity: None,
        }
    }

    /// Small networks and a short schedule that train in minutes on a CPU.
    pub fn desk() -> Self {
        Self {
            dense: 64,
            hidden: 32,
            lr_init: 1e-3,
            batch_episodes: 64,
            seq_len: 20,
            iterations: 2000,
            gamma: 0.9,
            validation_every: 100,
            validation_configs: 1,
            validation_realizations: 10,
            replay_capacity: Some(64),
            ..Self::large()
        }
    }

    pub fn lr_schedule(&self) -> LrSchedule {
        LrSchedule {
            lr_init: self.lr_init,
            decay: self.lr_decay,
            every: self.lr_decay_every,
        }
    }

    /// Exploration rate of iteration `k`, linear from `eps_start` at 0 to
    /// `eps_end` at `iterations`.
    pub fn epsilon_at(&self, k: u64) -> f64 {
        if self.iterations == 0 {
            return self.eps_start;
        }
        let frac = (k as f64 / self.iterations as f64).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }

    pub fn validate(&self, episode_len: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dense == 0 || self.hidden == 0 {
            return bad("network widths must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.eps_end) || !(0.0..=1.0).contains(&self.eps_start) || self.eps_start < self.eps_end {
            return bad(format!("need 1 >= eps_start >= eps_end >= 0, got {} and {}", self.eps_start, self.eps_end));
        }
        if self.seq_len == 0 || self.seq_len > episode_len {
            return bad(format!("seq_len {} must be in 1..={episode_len}", self.seq_len));
        }
        if self.batch_episodes == 0 {
            return bad("batch_episodes must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if !(self.lr_init > 0.0) || !(self.lr_decay > 0.0) {
            return bad("learning rate and decay must be positive".into());
        }
        if self.validation_every == 0 {
            return bad("validation_every must be positive".into());
        }
        if self.replay_capacity == Some(0) {
            return bad("replay_capacity must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_is_linear() {
        let h = TrainHyper::large();
        assert_eq!(h.epsilon_at(0), 1.0);
        assert!((h.epsilon_at(7500) - 0.625).abs() < 1e-15);
        assert!((h.epsilon_at(15000) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn presets_validate() {
        TrainHyper::large().validate(2000).unwrap();
        TrainHyper::desk().validate(200).unwrap();
        assert!(TrainHyper::large().validate(10).is_err());
        let h = TrainHyper { eps_start: 0.1, ..TrainHyper::desk() };
        assert!(h.validate(200).is_err());
    }
}
