use serde::{Deserialize, Serialize};

use crate::units::{dbm_to_mw, noise_power_dbm};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CounterMode {
    /// Distinct counters per BS (requires `cws >= N`).
    Unique,
    /// Independent uniform counters; ties are possible.
    Iid,
}

/// Where the `-kappa * N` all-off reward applies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyScope {
    Off,
    /// Training labels only; the reported reward trace stays the plain
    /// log-ratio sum.
    #[default]
    Training,
    /// Training labels and the reported reward trace.
    Always,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyVectorLength {
    /// One entry per BS, including the always-noise self entry.
    Full,
    /// The self entry is dropped (`N - 1` entries).
    ExcludeSelf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvParams {
    pub n_bs: usize,
    pub tx_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub ue_noise_figure_db: f64,
    pub bs_noise_figure_db: f64,
    /// Average-rate smoothing window `B`.
    pub smoothing_b: f64,
    pub gamma: f64,
    pub episode_len: usize,
    pub cws: usize,
    pub counter_mode: CounterMode,
    pub all_off_kappa: f64,
    /// Scope of the `-kappa * N` reward for slots where every BS defers.
    pub all_off_penalty: PenaltyScope,
    pub xbar_init: f64,
    pub energy_vec_len: EnergyVectorLength,
    pub fading_alpha: f64,
    pub fading_enabled: bool,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            n_bs: 4,
            tx_power_dbm: 23.0,
            noise_psd_dbm_hz: -174.0,
            bandwidth_hz: 2e7,
            ue_noise_figure_db: 9.0,
            bs_noise_figure_db: 5.0,
            smoothing_b: 10.0,
            gamma: 1.0 - 1e-6,
            episode_len: 2000,
            cws: 4,
            counter_mode: CounterMode::Unique,
            all_off_kappa: 10.0,
            all_off_penalty: PenaltyScope::Training,
            xbar_init: 1e-2,
            energy_vec_len: EnergyVectorLength::Full,
            fading_alpha: 0.01,
            fading_enabled: true,
        }
    }
}

impl EnvParams {
    pub fn with_n_bs(n_bs: usize) -> Self {
        Self {
            n_bs,
            cws: n_bs.max(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bs == 0 {
            return Err(Error::Config("n_bs must be at least 1".into()));
        }
        if !(self.smoothing_b > 1.0) {
            return Err(Error::Config(format!("smoothing window B must exceed 1, got {}", self.smoothing_b)));
        }
        // gamma = 1 is admitted for undiscounted checks of the utility identity.
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.cws == 0 {
            return Err(Error::Config("contention window must be at least 1".into()));
        }
        if self.counter_mode == CounterMode::Unique && self.cws < self.n_bs {
            return Err(Error::Config(format!(
                "unique counters need cws >= N ({} < {})",
                self.cws, self.n_bs
            )));
        }
        if !(self.xbar_init > 0.0) {
            return Err(Error::Config("initial average rate must be positive".into()));
        }
        if !(self.fading_alpha > 0.0 && self.fading_alpha <= 1.0) {
            return Err(Error::Config(format!("fading alpha must lie in (0, 1], got {}", self.fading_alpha)));
        }
        if self.energy_vec_len == EnergyVectorLength::ExcludeSelf && self.n_bs < 2 {
            return Err(Error::Config("a truncated energy vector needs at least 2 BSs".into()));
        }
        Ok(())
    }

    pub fn ue_noise_dbm(&self) -> f64 {
        noise_power_dbm(self.noise_psd_dbm_hz, self.bandwidth_hz, self.ue_noise_figure_db)
    }

    pub fn bs_noise_dbm(&self) -> f64 {
        noise_power_dbm(self.noise_psd_dbm_hz, self.bandwidth_hz, self.bs_noise_figure_db)
    }

    pub fn tx_power_mw(&self) -> f64 {
        dbm_to_mw(self.tx_power_dbm)
    }

    pub fn bs_noise_mw(&self) -> f64 {
        dbm_to_mw(self.bs_noise_dbm())
    }

    /// UE noise relative to the transmit power, the `sigma^2` of the
    /// gain-domain SINR.
    pub fn normalized_ue_noise(&self) -> f64 {
        dbm_to_mw(self.ue_noise_dbm()) / self.tx_power_mw()
    }

    pub fn energy_len(&self) -> usize {
        match self.energy_vec_len {
            EnergyVectorLength::Full => self.n_bs,
            EnergyVectorLength::ExcludeSelf => self.n_bs - 1,
        }
    }

    /// Width of the CON observation: `(xbar, S, I)`, energies, counter.
    pub fn con_obs_width(&self) -> usize {
        3 + self.energy_len() + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_noise_powers() {
        let p = EnvParams::default();
        assert!((p.ue_noise_dbm() - -91.99).abs() < 0.05);
        assert!((p.bs_noise_dbm() - -95.99).abs() < 0.05);
        let expected = 10f64.powf((-91.989_700_043_360_19 - 23.0) / 10.0);
        assert!((p.normalized_ue_noise() / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(EnvParams::default().validate().is_ok());
        let bad_b = EnvParams { smoothing_b: 1.0, ..EnvParams::default() };
        assert!(bad_b.validate().is_err());
        let small_cw = EnvParams { cws: 3, ..EnvParams::default() };
        assert!(small_cw.validate().is_err());
        let iid = EnvParams { cws: 3, counter_mode: CounterMode::Iid, ..EnvParams::default() };
        assert!(iid.validate().is_ok());
        let bad_gamma = EnvParams { gamma: 0.0, ..EnvParams::default() };
        assert!(bad_gamma.validate().is_err());
    }

    #[test]
    fn widths() {
        let p = EnvParams::default();
        assert_eq!(p.con_obs_width(), 8);
        let e3 = EnvParams { energy_vec_len: EnergyVectorLength::ExcludeSelf, ..p };
        assert_eq!(e3.con_obs_width(), 7);
    }
}
