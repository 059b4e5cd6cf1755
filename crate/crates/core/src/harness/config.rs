use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::layout::{toy_env_params, LayoutPreset, ToyGains, UePlacement};
use super::splits::SplitSpec;
use crate::baselines::EdConfig;
use crate::env::EnvParams;
use crate::rl::TrainHyper;
use crate::{Error, Result};

/// Named hyper-parameter starting points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HyperPreset {
    #[default]
    Large,
    Desk,
}

impl HyperPreset {
    pub fn hyper(self) -> TrainHyper {
        match self {
            HyperPreset::Large => TrainHyper::large(),
            HyperPreset::Desk => TrainHyper::desk(),
        }
    }
}

/// Evaluation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSpec {
    pub realizations: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self { realizations: 120 }
    }
}

/// Everything one experiment needs. Serialized as TOML; every section is
/// optional and falls back to the defaults of the chosen layout and
/// hyper-parameter preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub layout: LayoutPreset,
    pub placement: UePlacement,
    /// Load this scenario file instead of building the layout.
    pub scenario: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    pub hyper_preset: HyperPreset,
    pub toy: ToyGains,
    pub env: EnvParams,
    pub hyper: TrainHyper,
    pub ed: EdConfig,
    pub split: SplitSpec,
    pub eval: EvalSpec,
}

impl ExperimentConfig {
    /// Defaults for a layout and preset.
    pub fn defaults(layout: LayoutPreset, hyper_preset: HyperPreset) -> Self {
        let split = if layout == LayoutPreset::Toy {
            SplitSpec {
                train_ues_per_bs: 1,
                validation_configs: 1,
                test_configs: 2,
            }
        } else {
            SplitSpec::default()
        };
        Self {
            experiment_id: layout.id().into(),
            layout,
            placement: UePlacement::default(),
            scenario: None,
            output_dir: PathBuf::from("out"),
            master_seed: 0,
            hyper_preset,
            toy: ToyGains::default(),
            env: if layout == LayoutPreset::Toy {
                toy_env_params()
            } else {
                EnvParams::with_n_bs(layout.n_bs())
            },
            hyper: hyper_preset.hyper(),
            ed: EdConfig::default(),
            split,
            eval: EvalSpec::default(),
        }
    }

    /// Merges, lowest to highest precedence: defaults, `flags`, then the
    /// config file. Layout and preset are resolved first because they pick
    /// the defaults.
    pub fn resolve(file: Option<&Table>, flags: &Table) -> Result<Self> {
        fn pick<T: for<'de> Deserialize<'de>>(key: &str, file: Option<&Table>, flags: &Table) -> Result<Option<T>> {
            match file.and_then(|f| f.get(key)).or_else(|| flags.get(key)) {
                Some(v) => Ok(Some(v.clone().try_into().map_err(|e: toml::de::Error| Error::Config(format!("{key}: {e}")))?)),
                None => Ok(None),
            }
        }
        let layout: LayoutPreset = pick("layout", file, flags)?.unwrap_or(LayoutPreset::L1);
        let preset: HyperPreset = pick("hyper_preset", file, flags)?.unwrap_or_default();
        let base = Value::try_from(Self::defaults(layout, preset)).map_err(|e| Error::Config(e.to_string()))?;
        let mut merged = match base {
            Value::Table(t) => t,
            _ => unreachable!("a struct serializes to a table"),
        };
        overlay(&mut merged, flags);
        if let Some(f) = file {
            overlay(&mut merged, f);
        }
        let cfg: Self = Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, flags: &Table) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", path.display())))?;
        Self::resolve(Some(&file), flags)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.hyper.validate(self.env.episode_len)?;
        self.ed.validate()?;
        if self.scenario.is_none() && self.env.n_bs != self.layout.n_bs() {
            return Err(Error::Config(format!(
                "env.n_bs = {} but layout {} has {} BSs",
                self.env.n_bs,
                self.layout.id(),
                self.layout.n_bs()
            )));
        }
        Ok(())
    }
}

/// Recursively overwrites `base` with the entries of `top`.
pub fn overlay(base: &mut Table, top: &Table) {
    for (k, v) in top {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => overlay(b, t),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}
