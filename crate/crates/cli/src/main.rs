use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lbt_core::harness::{
    emit_plots, run_baseline, run_build_layout, run_evaluate, run_sweep_ed, run_counter_table_experiment, run_train,
    ExperimentConfig, PlotInputs,
};
use lbt_core::rl::Checkpoint;
use lbt_core::{Error, Result};
use toml::{Table, Value};

#[derive(Parser)]
#[command(name = "lbt", version, about = "Learned listen-before-talk access: simulation, training and baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a layout and write scenario.json.
    BuildLayout(Common),
    /// Train the per-BS networks; writes checkpoint.json and training_log.csv.
    Train(Common),
    /// Evaluate a checkpoint and the baselines on the test configurations.
    Evaluate(WithCheckpoint),
    /// Evaluate PF, fixed ED and adaptive ED only.
    Baseline(Common),
    /// Mean reward of every ED threshold per test configuration.
    SweepEd(Common),
    /// Unique vs non-unique counter comparison.
    CounterTable(WithCheckpoint),
    /// Turn log and metrics CSVs into plot-data series.
    Plot(PlotArgs),
}

/// Flags mirror fields of the experiment config; a config file given with
/// `--config` takes precedence over them.
#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    layout: Option<String>,
    #[arg(long)]
    hyper_preset: Option<String>,
    #[arg(long)]
    placement: Option<String>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    experiment_id: Option<String>,
    #[arg(long)]
    episode_len: Option<usize>,
    #[arg(long)]
    counter_mode: Option<String>,
    #[arg(long)]
    cws: Option<usize>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    ed_threshold: Option<f64>,
    /// Disable small-scale fading.
    #[arg(long)]
    no_fading: bool,
}

#[derive(Args)]
struct WithCheckpoint {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    training_log: Option<PathBuf>,
    #[arg(long)]
    evaluation: Option<PathBuf>,
    #[arg(long)]
    counter_table: Option<PathBuf>,
    #[arg(long, default_value = "plots")]
    output_dir: PathBuf,
    /// Trailing moving-average window of the smoothed validation curve.
    #[arg(long, default_value_t = 3)]
    window: usize,
}

fn set(t: &mut Table, section: Option<&str>, key: &str, v: Value) {
    let target = match section {
        Some(s) => t
            .entry(s)
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("sections are tables"),
        None => t,
    };
    target.insert(key.into(), v);
}

impl Common {
    fn flags(&self) -> Result<Table> {
        let mut t = Table::new();
        let s = |v: &str| Value::String(v.into());
        let int = |v: u64| -> Result<Value> {
            i64::try_from(v).map(Value::Integer).map_err(|_| Error::Config(format!("{v} is too large")))
        };
        if let Some(v) = &self.layout {
            set(&mut t, None, "layout", s(v));
        }
        if let Some(v) = &self.hyper_preset {
            set(&mut t, None, "hyper_preset", s(v));
        }
        if let Some(v) = &self.placement {
            set(&mut t, None, "placement", s(v));
        }
        if let Some(v) = &self.scenario {
            set(&mut t, None, "scenario", s(&v.display().to_string()));
        }
        if let Some(v) = &self.output_dir {
            set(&mut t, None, "output_dir", s(&v.display().to_string()));
        }
        if let Some(v) = self.seed {
            set(&mut t, None, "master_seed", int(v)?);
        }
        if let Some(v) = &self.experiment_id {
            set(&mut t, None, "experiment_id", s(v));
        }
        if let Some(v) = self.episode_len {
            set(&mut t, Some("env"), "episode_len", int(v as u64)?);
        }
        if let Some(v) = &self.counter_mode {
            set(&mut t, Some("env"), "counter_mode", s(v));
        }
        if let Some(v) = self.cws {
            set(&mut t, Some("env"), "cws", int(v as u64)?);
        }
        if self.no_fading {
            set(&mut t, Some("env"), "fading_enabled", Value::Boolean(false));
        }
        if let Some(v) = self.iterations {
            set(&mut t, Some("hyper"), "iterations", int(v)?);
        }
        if let Some(v) = self.lr {
            set(&mut t, Some("hyper"), "lr_init", Value::Float(v));
        }
        if let Some(v) = self.realizations {
            set(&mut t, Some("eval"), "realizations", int(v as u64)?);
        }
        if let Some(v) = self.ed_threshold {
            set(&mut t, Some("ed"), "threshold_dbm", Value::Float(v));
        }
        Ok(t)
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        let flags = self.flags()?;
        let cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p, &flags)?,
            None => ExperimentConfig::resolve(None, &flags)?,
        };
        eprintln!("# merged configuration\n{}", cfg.to_toml()?);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildLayout(c) => {
            let p = run_build_layout(&c.resolve()?)?;
            println!("{}", p.display());
        }
        Command::Train(c) => {
            let cfg = c.resolve()?;
            let out = run_train(&cfg, |m| eprintln!("{m}"))?;
            if let Some(last) = out.curve.last() {
                println!("final validation reward {:.6} at iteration {}", last.mean_reward, last.iteration);
            }
        }
        Command::Evaluate(w) => {
            let cfg = w.common.resolve()?;
            let ck = Checkpoint::load(&w.checkpoint)?;
            let rows = run_evaluate(&cfg, &ck)?;
            print_means(&rows);
        }
        Command::Baseline(c) => {
            let rows = run_baseline(&c.resolve()?)?;
            print_means(&rows);
        }
        Command::SweepEd(c) => {
            let p = run_sweep_ed(&c.resolve()?)?;
            println!("{}", p.display());
        }
        Command::CounterTable(w) => {
            let cfg = w.common.resolve()?;
            let ck = Checkpoint::load(&w.checkpoint)?;
            let t = run_counter_table_experiment(&cfg, &ck)?;
            println!("{:<12} {:>10} {:>10}", "policy", "UC", "NUC");
            for p in lbt_core::harness::COUNTER_TABLE_POLICIES {
                let uc = t.get(lbt_core::env::CounterMode::Unique, p).map_or(f64::NAN, |e| e.mean_reward);
                let nuc = t.get(lbt_core::env::CounterMode::Iid, p).map_or(f64::NAN, |e| e.mean_reward);
                println!("{p:<12} {uc:>10.4} {nuc:>10.4}");
            }
        }
        Command::Plot(a) => {
            let inputs = PlotInputs {
                training_log: a.training_log,
                evaluation: a.evaluation,
                counter_table_per_config: a.counter_table,
            };
            for p in emit_plots(&inputs, &a.output_dir, a.window)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn print_means(rows: &[lbt_core::rl::EvalRow]) {
    let mut policies: Vec<&str> = rows.iter().map(|r| r.policy.as_str()).collect();
    policies.dedup();
    for p in policies {
        if let Some(m) = lbt_core::rl::mean_reward(rows, p, None) {
            println!("{p:<12} {m:.6}");
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}
