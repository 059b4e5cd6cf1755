use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::{Error, Result};

/// Largest training set that is materialized.
pub const MAX_TRAIN_CONFIGS: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    /// Training UEs designated per BS; the rest are held out.
    pub train_ues_per_bs: usize,
    pub validation_configs: usize,
    pub test_configs: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_ues_per_bs: 9,
            validation_configs: 10,
            test_configs: 15,
        }
    }
}

/// A configuration lists the active UE of every BS.
pub type Config = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train_ues: Vec<Vec<usize>>,
    pub train: Vec<Config>,
    pub validation: Vec<Config>,
    pub test: Vec<Config>,
}

impl Splits {
    /// A configuration is a training one iff every active UE is a training UE.
    pub fn is_train(&self, cfg: &[usize]) -> bool {
        cfg.iter().zip(&self.train_ues).all(|(u, t)| t.contains(u))
    }
}

fn cartesian(lists: &[Vec<usize>]) -> Vec<Config> {
    let mut out: Vec<Config> = vec![Vec::new()];
    for l in lists {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                l.iter().map(move |&u| {
                    let mut c = prefix.clone();
                    c.push(u);
                    c
                })
            })
            .collect();
    }
    out
}

/// Designates training UEs per BS and samples validation and test
/// configurations, each with at least one held-out UE, without
/// replacement from the complement of the training set.
pub fn enumerate_splits<R: Rng + ?Sized>(scenario: &Scenario, spec: &SplitSpec, rng: &mut R) -> Result<Splits> {
    let assoc = &scenario.geometry.association;
    if let Some((b, l)) = assoc.iter().enumerate().find(|(_, l)| l.len() <= spec.train_ues_per_bs) {
        return Err(Error::Config(format!(
            "BS {b} has {} candidate UEs, needs more than {} to hold one out",
            l.len(),
            spec.train_ues_per_bs
        )));
    }
    if spec.train_ues_per_bs == 0 {
        return Err(Error::Config("need at least one training UE per BS".into()));
    }
    let total: u128 = assoc.iter().map(|l| l.len() as u128).product();
    let n_train: u128 = (spec.train_ues_per_bs as u128).pow(assoc.len() as u32);
    if n_train > MAX_TRAIN_CONFIGS {
        return Err(Error::CombinatorialLimit {
            n: assoc.len(),
            cap: MAX_TRAIN_CONFIGS as usize,
        });
    }
    let wanted = (spec.validation_configs + spec.test_configs) as u128;
    if wanted > total - n_train {
        return Err(Error::Config(format!(
            "{wanted} held-out configurations requested, only {} exist",
            total - n_train
        )));
    }

    let mut train_ues = Vec::with_capacity(assoc.len());
    for l in assoc {
        let mut c = l.clone();
        c.shuffle(rng);
        c.truncate(spec.train_ues_per_bs);
        c.sort_unstable();
        train_ues.push(c);
    }
    let splits_train = cartesian(&train_ues);
    let sets: Vec<HashSet<usize>> = train_ues.iter().map(|t| t.iter().copied().collect()).collect();

    let mut taken: HashSet<Config> = HashSet::new();
    let mut held = Vec::with_capacity(wanted as usize);
    while (held.len() as u128) < wanted {
        let cfg: Config = assoc.iter().map(|l| l[rng.random_range(0..l.len())]).collect();
        let all_train = cfg.iter().zip(&sets).all(|(u, s)| s.contains(u));
        if !all_train && taken.insert(cfg.clone()) {
            held.push(cfg);
        }
    }
    let test = held.split_off(spec.validation_configs);
    Ok(Splits {
        train_ues,
        train: splits_train,
        validation: held,
        test,
    })
}
