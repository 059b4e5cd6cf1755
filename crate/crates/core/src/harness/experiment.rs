use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::layout::build_layout;
use super::splits::{enumerate_splits, Config, Splits};
use super::counter_table::{run_counter_table, CounterTable};
use crate::baselines::adaptive_ed;
use crate::channel::{LargeScaleGains, Scenario};
use crate::rl::{evaluate, train, write_training_log, Checkpoint, EvalConfig, EvalRow, PolicySpec, TrainOutcome};
use crate::rng::{derive_seed, stream};
use crate::{Error, Result};

/// One evaluated episode of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub experiment_id: String,
    pub policy: String,
    pub config_index: usize,
    pub realization_seed: u64,
    pub reward: f64,
    pub mean_rate: f64,
    pub final_xbar: Vec<f64>,
}

impl MetricsRow {
    pub fn from_eval(experiment_id: &str, config_index: usize, r: &EvalRow) -> Self {
        let policy = match r.threshold_dbm {
            Some(t) if r.policy == "ed" => format!("ed({t})"),
            _ => r.policy.clone(),
        };
        Self {
            experiment_id: experiment_id.into(),
            policy,
            config_index,
            realization_seed: r.seed,
            reward: r.reward,
            mean_rate: r.mean_rate,
            final_xbar: r.final_xbar.clone(),
        }
    }
}

/// Metrics CSV: `experiment_id, policy, config_index, realization_seed,
/// reward, mean_rate, xbar_final_i...`.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let n = rows.first().map_or(0, |r| r.final_xbar.len());
    let mut header: Vec<String> = ["experiment_id", "policy", "config_index", "realization_seed", "reward", "mean_rate"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..n).map(|i| format!("xbar_final_{i}")));
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.experiment_id.clone(),
            r.policy.clone(),
            r.config_index.to_string(),
            r.realization_seed.to_string(),
            r.reward.to_string(),
            r.mean_rate.to_string(),
        ];
        rec.extend(r.final_xbar.iter().map(|x| x.to_string()));
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("metrics csv", e))?;
    Ok(())
}

pub fn config_id(cfg: &[usize]) -> String {
    cfg.iter().map(|u| format!("u{u}")).collect::<Vec<_>>().join("-")
}

/// `n` realization seeds of a purpose, derived from the master seed.
pub fn realization_seeds(master_seed: u64, purpose: &str, n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| derive_seed(master_seed, purpose, k)).collect()
}

/// Scenario, splits and the gains of every configuration in them.
pub struct Prepared {
    pub scenario: Scenario,
    pub splits: Splits,
    pub train: Vec<LargeScaleGains>,
    pub validation: Vec<EvalConfig>,
    pub test: Vec<EvalConfig>,
}

fn eval_configs(scenario: &Scenario, cfgs: &[Config]) -> Result<Vec<EvalConfig>> {
    cfgs.iter()
        .map(|c| {
            Ok(EvalConfig {
                id: config_id(c),
                gains: scenario.gains_for(c)?,
            })
        })
        .collect()
}

pub fn load_or_build_scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    let sc = match &cfg.scenario {
        Some(p) => Scenario::load(p)?,
        None => build_layout(cfg.layout, cfg.master_seed, cfg.placement, cfg.toy)?,
    };
    if sc.n_bs() != cfg.env.n_bs {
        return Err(Error::Config(format!("scenario has {} BSs, env.n_bs = {}", sc.n_bs(), cfg.env.n_bs)));
    }
    Ok(sc)
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let scenario = load_or_build_scenario(cfg)?;
    let splits = enumerate_splits(&scenario, &cfg.split, &mut stream(cfg.master_seed, "splits", 0))?;
    let train = splits.train.iter().map(|c| scenario.gains_for(c)).collect::<Result<_>>()?;
    let n_val = cfg.hyper.validation_configs.min(splits.validation.len());
    Ok(Prepared {
        validation: eval_configs(&scenario, &splits.validation[..n_val])?,
        test: eval_configs(&scenario, &splits.test)?,
        train,
        scenario,
        splits,
    })
}

fn out_file(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join(name);
    let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
    Ok((p, BufWriter::new(f)))
}

/// Writes the merged configuration and code version next to the outputs.
pub fn write_manifest(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let (p, mut w) = out_file(&cfg.output_dir, "manifest.toml")?;
    let text = format!("# lbt {}\n{}", env!("CARGO_PKG_VERSION"), cfg.to_toml()?);
    w.write_all(text.as_bytes()).map_err(|e| Error::io(&p, e))?;
    Ok(p)
}

pub fn run_build_layout(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let sc = build_layout(cfg.layout, cfg.master_seed, cfg.placement, cfg.toy)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let p = cfg.output_dir.join("scenario.json");
    sc.save(&p)?;
    Ok(p)
}

/// Trains and writes `checkpoint.json` and `training_log.csv`.
pub fn run_train(cfg: &ExperimentConfig, mut progress: impl FnMut(&str)) -> Result<TrainOutcome> {
    write_manifest(cfg)?;
    let prep = prepare(cfg)?;
    let val: Vec<LargeScaleGains> = prep.validation.iter().map(|c| c.gains.clone()).collect();
    progress(&format!("{} training configurations, {} validation", prep.train.len(), val.len()));
    let out = train(&prep.train, &val, &cfg.env, &cfg.hyper, cfg.master_seed, |row| {
        if let Some(v) = row.validation_reward {
            progress(&format!("iteration {} epsilon {:.3} validation {v:.4}", row.iteration, row.epsilon));
        }
    })?;
    out.checkpoint.save(&cfg.output_dir.join("checkpoint.json"))?;
    let (p, w) = out_file(&cfg.output_dir, "training_log.csv")?;
    write_training_log(&with_initial_point(&out), cfg.env.n_bs, w).map_err(|e| relabel(e, &p))?;
    Ok(out)
}

/// The log rows with the pre-training validation point prepended.
fn with_initial_point(out: &TrainOutcome) -> Vec<crate::rl::TrainLogRow> {
    let mut rows = Vec::with_capacity(out.log.len() + 1);
    if let Some(first) = out.curve.first().filter(|p| p.iteration == 0) {
        let n = out.checkpoint.n_bs();
        rows.push(crate::rl::TrainLogRow {
            iteration: 0,
            epsilon: out.checkpoint.hyper.eps_start,
            lr: out.checkpoint.hyper.lr_init,
            eos_loss: vec![f64::NAN; n],
            con_loss: vec![f64::NAN; n],
            validation_reward: Some(first.mean_reward),
        });
    }
    rows.extend(out.log.iter().cloned());
    rows
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

fn metrics(cfg: &ExperimentConfig, test: &[EvalConfig], rows: &[EvalRow]) -> Vec<MetricsRow> {
    rows.iter()
        .map(|r| {
            let idx = test.iter().position(|c| c.id == r.config_id).unwrap_or(usize::MAX);
            MetricsRow::from_eval(&cfg.experiment_id, idx, r)
        })
        .collect()
}

fn eval_and_write(cfg: &ExperimentConfig, ckpt: Option<&Checkpoint>, specs: &[PolicySpec], name: &str) -> Result<Vec<EvalRow>> {
    write_manifest(cfg)?;
    let prep = prepare(cfg)?;
    let seeds = realization_seeds(cfg.master_seed, "test", cfg.eval.realizations);
    let rows = evaluate(ckpt, &prep.test, &seeds, &cfg.env, specs, &cfg.ed)?;
    let (_, w) = out_file(&cfg.output_dir, name)?;
    write_metrics_csv(&metrics(cfg, &prep.test, &rows), w)?;
    Ok(rows)
}

/// All four policies on the test configurations; writes `evaluation.csv`.
pub fn run_evaluate(cfg: &ExperimentConfig, ckpt: &Checkpoint) -> Result<Vec<EvalRow>> {
    let specs = [PolicySpec::Rl, PolicySpec::Pf, PolicySpec::Ed(cfg.ed.threshold_dbm), PolicySpec::AdaptiveEd];
    eval_and_write(cfg, Some(ckpt), &specs, "evaluation.csv")
}

/// Baselines only; writes `baselines.csv`.
pub fn run_baseline(cfg: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    let specs = [PolicySpec::Pf, PolicySpec::Ed(cfg.ed.threshold_dbm), PolicySpec::AdaptiveEd];
    eval_and_write(cfg, None, &specs, "baselines.csv")
}

/// Mean reward of every sweep threshold per test configuration; writes
/// `sweep_ed.csv` (`config_id, threshold_dbm, mean_reward, best`).
pub fn run_sweep_ed(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.ed.validate()?;
    let prep = prepare(cfg)?;
    let seeds = realization_seeds(cfg.master_seed, "test", cfg.eval.realizations);
    let (p, w) = out_file(&cfg.output_dir, "sweep_ed.csv")?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["config_id", "threshold_dbm", "mean_reward", "best"])?;
    for c in &prep.test {
        let res = adaptive_ed(&c.gains, &cfg.ed.sweep_set, &seeds, &cfg.env)?;
        for (t, m) in &res.sweep {
            let best = (*t == res.best_threshold_dbm).to_string();
            out.write_record([c.id.as_str(), &t.to_string(), &m.to_string(), &best])?;
        }
    }
    out.flush().map_err(|e| Error::io(&p, e))?;
    Ok(p)
}

/// Unique vs non-unique counter table; writes `counter_table.csv` and
/// `counter_table_per_config.csv`.
pub fn run_counter_table_experiment(cfg: &ExperimentConfig, ckpt: &Checkpoint) -> Result<CounterTable> {
    write_manifest(cfg)?;
    let prep = prepare(cfg)?;
    let seeds = realization_seeds(cfg.master_seed, "test", cfg.eval.realizations);
    let t = run_counter_table(ckpt, &prep.test, &seeds, &cfg.env, &cfg.ed)?;
    let (_, w) = out_file(&cfg.output_dir, "counter_table.csv")?;
    t.write_summary_csv(w)?;
    let (_, w) = out_file(&cfg.output_dir, "counter_table_per_config.csv")?;
    t.write_per_config_csv(w)?;
    Ok(t)
}
