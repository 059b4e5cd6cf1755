use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::hyper::TrainHyper;
use super::net::QNet;
use super::train::BsAgent;
use crate::env::EnvParams;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Trained networks of every BS with their optimizer states.
///
/// The trainer derives every random stream from `seed` and the iteration
/// index, so `seed` and `iteration` are the complete RNG state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub iteration: u64,
    pub seed: u64,
    pub config_hash: String,
    pub env: EnvParams,
    pub hyper: TrainHyper,
    pub agents: Vec<BsAgent>,
}

/// SHA-256 over the JSON of the environment, hyper-parameters and seed.
pub fn config_hash(env: &EnvParams, hyper: &TrainHyper, seed: u64) -> String {
    let text = serde_json::to_string(&(env, hyper, seed)).expect("parameters serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl Checkpoint {
    pub fn n_bs(&self) -> usize {
        self.agents.len()
    }

    pub fn con_nets(&self) -> Vec<&QNet> {
        self.agents.iter().map(|a| &a.con).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            version: u32,
        }
        let probe: Probe = serde_json::from_str(s)?;
        if probe.version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Version {
                found: probe.version,
                expected: CHECKPOINT_FORMAT_VERSION,
            });
        }
        let ck: Self = serde_json::from_str(s)?;
        ck.validate()?;
        Ok(ck)
    }

    /// Checks network shapes against the stored parameters and the hash.
    pub fn validate(&self) -> Result<()> {
        let schema = |detail: String| Error::Schema {
            path: "checkpoint".into(),
            detail,
        };
        if self.agents.len() != self.env.n_bs {
            return Err(schema(format!("{} agents for {} BSs", self.agents.len(), self.env.n_bs)));
        }
        for a in &self.agents {
            a.eos.validate()?;
            a.con.validate()?;
            if a.con.shape.input != self.env.con_obs_width() {
                return Err(schema(format!("CON input width {} != {}", a.con.shape.input, self.env.con_obs_width())));
            }
        }
        if self.config_hash != config_hash(&self.env, &self.hyper, self.seed) {
            return Err(schema("config hash does not match the stored parameters".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let env = EnvParams::with_n_bs(2);
        let hyper = TrainHyper { dense: 5, hidden: 3, ..TrainHyper::desk() };
        Checkpoint {
            version: CHECKPOINT_FORMAT_VERSION,
            iteration: 0,
            seed: 9,
            config_hash: config_hash(&env, &hyper, 9),
            agents: (0..2).map(|i| BsAgent::new(i, &env, &hyper, 9)).collect(),
            env,
            hyper,
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
        let ck = sample();
        ck.save(&p1).unwrap();
        let back = Checkpoint::load(&p1).unwrap();
        assert_eq!(back, ck);
        back.save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn rejects_other_versions_and_tampering() {
        let mut ck = sample();
        ck.version = 7;
        let text = serde_json::to_string(&ck).unwrap();
        assert!(matches!(Checkpoint::from_json(&text), Err(Error::Version { found: 7, .. })));
        let mut ck = sample();
        ck.seed = 10;
        assert!(matches!(Checkpoint::from_json(&ck.to_json().unwrap()), Err(Error::Schema { .. })));
    }
}
