use serde::{Deserialize, Serialize};

use super::params::{EnergyVectorLength, EnvParams};

/// What a BS knows at the start of a slot about the UE it served in the
/// previous one: its smoothed rate and the signal and interference powers,
/// both normalized by the BS->UE gain spread.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EosObservation {
    pub xbar: f64,
    pub sig: f64,
    pub intf: f64,
}

impl EosObservation {
    pub const WIDTH: usize = 3;

    pub fn initial(xbar0: f64) -> Self {
        Self {
            xbar: xbar0,
            sig: 0.0,
            intf: 0.0,
        }
    }

    pub fn features(&self) -> [f64; 3] {
        [self.xbar, self.sig, self.intf]
    }
}

/// The EOS observation extended with the sensed energy vector and the
/// BS's own counter, available when its counter expires.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConObservation {
    pub eos: EosObservation,
    /// Sensed energies in units of `P_t * norm_bs`.
    pub energy: Vec<f64>,
    /// Counter scaled to `[0, 1]` by `cws - 1` (0 when `cws == 1`).
    pub counter: f64,
}

impl ConObservation {
    /// Builds the observation of BS `bs` from raw energies in milliwatts.
    pub fn build(eos: EosObservation, raw_energy_mw: &[f64], bs: usize, counter: usize, params: &EnvParams, norm_bs: f64) -> Self {
        let scale = 1.0 / (params.tx_power_mw() * norm_bs);
        let energy = raw_energy_mw
            .iter()
            .enumerate()
            .filter(|(j, _)| params.energy_vec_len == EnergyVectorLength::Full || *j != bs)
            .map(|(_, e)| e * scale)
            .collect();
        let counter = if params.cws > 1 {
            counter as f64 / (params.cws - 1) as f64
        } else {
            0.0
        };
        Self { eos, energy, counter }
    }

    pub fn width(&self) -> usize {
        EosObservation::WIDTH + self.energy.len() + 1
    }

    pub fn write_features(&self, out: &mut [f64]) {
        out[..3].copy_from_slice(&self.eos.features());
        out[3..3 + self.energy.len()].copy_from_slice(&self.energy);
        out[3 + self.energy.len()] = self.counter;
    }

    pub fn features(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.width()];
        self.write_features(&mut v);
        v
    }
}
