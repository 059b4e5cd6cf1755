use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::checkpoint::{config_hash, Checkpoint, CHECKPOINT_FORMAT_VERSION};
use super::hyper::TrainHyper;
use super::net::{Carry, NetShape, QNet};
use super::policy::RlPolicy;
use super::replay::{build_batch, episode_rows, sample_batch, ConEpisode, EosEpisode, ReplayMemory, TrainBatch};
use crate::channel::LargeScaleGains;
use crate::env::{run_episode, EnvParams, EosObservation, EpisodeOptions};
use crate::rng::{derive_seed, stream};
use crate::{Error, Result};

/// EOS label `gamma * max_a Q_CON(o_CON, a)`.
pub fn eos_label(q_con: [f64; 2], gamma: f64) -> f64 {
    gamma * q_con[0].max(q_con[1])
}

/// CON label `r + gamma * Q_EOS(o_EOS')`.
pub fn con_label(reward: f64, q_eos_next: f64, gamma: f64) -> f64 {
    reward + gamma * q_eos_next
}

#[derive(Clone, Debug, PartialEq)]
pub struct Labels {
    pub eos: Vec<f64>,
    pub con: Vec<f64>,
}

/// Per-BS networks with their optimizer states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsAgent {
    pub eos: QNet,
    pub con: QNet,
    pub eos_opt: AdamState,
    pub con_opt: AdamState,
}

impl BsAgent {
    /// Fresh networks for BS `bs`, initialized from streams of `seed`.
    pub fn new(bs: usize, env: &EnvParams, hyper: &TrainHyper, seed: u64) -> Self {
        let shape = |input| NetShape {
            input,
            dense: hyper.dense,
            hidden: hyper.hidden,
            actions: 2,
        };
        let eos = QNet::new(shape(EosObservation::WIDTH), hyper.aggregator, &mut stream(seed, "init-eos", bs as u64));
        let con = QNet::new(shape(env.con_obs_width()), hyper.aggregator, &mut stream(seed, "init-con", bs as u64));
        Self {
            eos_opt: AdamState::new(eos.zeros_like()),
            con_opt: AdamState::new(con.zeros_like()),
            eos,
            con,
        }
    }
}

/// Labels of the final step of every window, from the current networks.
pub fn compute_labels(batch: &TrainBatch, eos: &QNet, con: &QNet, gamma: f64) -> Result<Labels> {
    let zero = Carry::zeros(batch.batch(), con.shape.hidden);
    let (q_con, _) = con.forward(batch.con_in.view(), batch.seq_len, &zero)?;
    let zero = Carry::zeros(batch.batch(), eos.shape.hidden);
    let (q_next, _) = eos.forward(batch.next_eos_in.view(), batch.seq_len, &zero)?;
    Ok(Labels {
        eos: q_con.outer_iter().map(|q| eos_label([q[0], q[1]], gamma)).collect(),
        con: batch.reward.iter().zip(q_next.column(0)).map(|(&r, &q)| con_label(r, q, gamma)).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLosses {
    pub eos: f64,
    pub con: f64,
}

/// Mean squared error of the selected Q-values against the labels and its
/// gradient with respect to all Q-values.
fn mse(q: &Array2<f64>, cols: impl Fn(usize) -> usize, labels: &[f64]) -> (f64, Array2<f64>) {
    let b = labels.len() as f64;
    let mut dq = Array2::zeros(q.dim());
    let mut loss = 0.0;
    for (row, &l) in labels.iter().enumerate() {
        let col = cols(row);
        let e = q[[row, col]] - l;
        loss += e * e;
        dq[[row, col]] = 2.0 * e / b;
    }
    (loss / b, dq)
}

fn check_finite(loss: f64, grads: &[Array2<f64>], bs: usize, net: &'static str, update: u64) -> Result<()> {
    let grad_ok = grads.iter().all(|g| g.iter().all(|x| x.is_finite()));
    if loss.is_finite() && grad_ok {
        return Ok(());
    }
    Err(Error::NonFiniteLoss {
        bs,
        net,
        update,
        detail: format!("loss {loss}, finite gradients: {grad_ok}"),
    })
}

/// Regresses both networks of one BS on fixed labels: the EOS net's single
/// Q and the CON net's Q of the taken action. Windows start from a zero
/// carry and only the final step is scored.
pub fn apply_update(agent: &mut BsAgent, batch: &TrainBatch, labels: &Labels, hyper: &TrainHyper, bs: usize) -> Result<StepLosses> {
    let update = agent.con_opt.t;
    let lr = hyper.lr_schedule().at(update);
    let (eos, con) = rayon::join(
        || -> Result<(f64, Vec<Array2<f64>>)> {
            let cache = agent.eos.forward_train(batch.eos_in.view(), batch.seq_len, &Carry::zeros(batch.batch(), agent.eos.shape.hidden))?;
            let (loss, dq) = mse(&agent.eos.q_from_cache(&cache), |_| 0, &labels.eos);
            let grads = agent.eos.backward(&cache, &dq);
            check_finite(loss, &grads, bs, "eos", update)?;
            Ok((loss, grads))
        },
        || -> Result<(f64, Vec<Array2<f64>>)> {
            let cache = agent.con.forward_train(batch.con_in.view(), batch.seq_len, &Carry::zeros(batch.batch(), agent.con.shape.hidden))?;
            let (loss, dq) = mse(&agent.con.q_from_cache(&cache), |b| usize::from(batch.action[b]), &labels.con);
            let grads = agent.con.backward(&cache, &dq);
            check_finite(loss, &grads, bs, "con", update)?;
            Ok((loss, grads))
        },
    );
    let (eos_loss, eos_grads) = eos?;
    let (con_loss, con_grads) = con?;
    agent.eos_opt.step(&mut agent.eos.params, &eos_grads, lr, &hyper.adam);
    agent.con_opt.step(&mut agent.con.params, &con_grads, lr, &hyper.adam);
    Ok(StepLosses {
        eos: eos_loss,
        con: con_loss,
    })
}

/// Computes labels with the pre-update networks, then updates both.
pub fn train_step(agent: &mut BsAgent, batch: &TrainBatch, hyper: &TrainHyper, bs: usize) -> Result<StepLosses> {
    let labels = compute_labels(batch, &agent.eos, &agent.con, hyper.gamma)?;
    apply_update(agent, batch, &labels, hyper, bs)
}

/// Mean discounted cumulative reward of the greedy policy over every
/// configuration and realization seed.
pub fn greedy_reward(agents: &[BsAgent], configs: &[LargeScaleGains], seeds: &[u64], env: &EnvParams) -> Result<f64> {
    let jobs: Vec<(usize, u64)> = (0..configs.len()).flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    if jobs.is_empty() {
        return Err(Error::InputDomain("validation needs at least one configuration and seed".into()));
    }
    let rewards: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let mut pol = RlPolicy::greedy(agents.iter().map(|a| &a.con).collect(), stream(s, "greedy", 0));
            run_episode(&configs[c], &mut pol, env, s, &EpisodeOptions::default()).map(|r| r.discounted_reward(env.gamma))
        })
        .collect::<Result<_>>()?;
    Ok(rewards.iter().sum::<f64>() / rewards.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub iteration: u64,
    pub mean_reward: f64,
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainLogRow {
    pub iteration: u64,
    pub epsilon: f64,
    pub lr: f64,
    pub eos_loss: Vec<f64>,
    pub con_loss: Vec<f64>,
    pub validation_reward: Option<f64>,
}

/// Writes the training log CSV: `iteration, epsilon, lr, eos_loss_i...,
/// con_loss_i..., validation_reward` (empty when no validation ran).
pub fn write_training_log<W: Write>(rows: &[TrainLogRow], n_bs: usize, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["iteration".to_string(), "epsilon".into(), "lr".into()];
    header.extend((0..n_bs).map(|i| format!("eos_loss_{i}")));
    header.extend((0..n_bs).map(|i| format!("con_loss_{i}")));
    header.push("validation_reward".into());
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.iteration.to_string(), r.epsilon.to_string(), r.lr.to_string()];
        rec.extend(r.eos_loss.iter().map(|x| x.to_string()));
        rec.extend(r.con_loss.iter().map(|x| x.to_string()));
        rec.push(r.validation_reward.map(|v| v.to_string()).unwrap_or_default());
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("training log", e))?;
    Ok(())
}

/// Sequential generate-then-train loop.
///
/// All randomness derives from `seed` and the iteration index: episode
/// realizations, exploration draws and batch sampling each use their own
/// stream per iteration.
pub struct Trainer<'a> {
    pub env: EnvParams,
    pub hyper: TrainHyper,
    pub seed: u64,
    pub agents: Vec<BsAgent>,
    pub iteration: u64,
    train_configs: &'a [LargeScaleGains],
    validation_configs: &'a [LargeScaleGains],
    validation_seeds: Vec<u64>,
    eos_mem: ReplayMemory<EosEpisode>,
    con_mem: ReplayMemory<ConEpisode>,
}

impl<'a> Trainer<'a> {
    /// Initializes the networks and fills the replay memories with fully
    /// random episodes, cycling through the training configurations.
    pub fn new(
        train_configs: &'a [LargeScaleGains],
        validation_configs: &'a [LargeScaleGains],
        env: &EnvParams,
        hyper: &TrainHyper,
        seed: u64,
    ) -> Result<Self> {
        env.validate()?;
        hyper.validate(env.episode_len)?;
        if train_configs.is_empty() {
            return Err(Error::Config("no training configurations".into()));
        }
        let capacity = hyper.replay_capacity.unwrap_or(train_configs.len());
        let mut t = Self {
            agents: (0..env.n_bs).map(|i| BsAgent::new(i, env, hyper, seed)).collect(),
            env: env.clone(),
            hyper: hyper.clone(),
            seed,
            iteration: 0,
            train_configs,
            validation_configs,
            validation_seeds: (0..hyper.validation_realizations as u64).map(|r| derive_seed(seed, "validation", r)).collect(),
            eos_mem: ReplayMemory::new(capacity),
            con_mem: ReplayMemory::new(capacity),
        };
        for k in 0..capacity {
            let cfg = &train_configs[k % train_configs.len()];
            let s = derive_seed(seed, "fill", k as u64);
            t.generate(cfg, 1.0, s, stream(seed, "fill-explore", k as u64))?;
        }
        Ok(t)
    }

    fn generate(&mut self, cfg: &LargeScaleGains, eps: f64, realization: u64, rng: crate::rng::SimRng) -> Result<()> {
        let mut pol = RlPolicy::new(self.agents.iter().map(|a| &a.con).collect(), eps, rng);
        let rec = run_episode(cfg, &mut pol, &self.env, realization, &EpisodeOptions::default())?;
        let (eos, con) = episode_rows(&rec);
        self.eos_mem.push(eos);
        self.con_mem.push(con);
        Ok(())
    }

    pub fn replay_len(&self) -> usize {
        self.eos_mem.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.hyper.epsilon_at(self.iteration)
    }

    pub fn validate(&self) -> Result<f64> {
        greedy_reward(&self.agents, self.validation_configs, &self.validation_seeds, &self.env)
    }

    /// One iteration: generate an episode, append it, sample a batch and
    /// update every BS.
    pub fn step(&mut self) -> Result<TrainLogRow> {
        let k = self.iteration;
        let eps = self.epsilon();
        let lr = self.hyper.lr_schedule().at(self.agents[0].con_opt.t);
        let mut rng = stream(self.seed, "batch", k);
        let cfg = &self.train_configs[rng.random_range(0..self.train_configs.len())];
        self.generate(cfg, eps, derive_seed(self.seed, "episode", k), stream(self.seed, "explore", k))?;
        let idx = sample_batch(&self.eos_mem, self.env.episode_len, self.hyper.batch_episodes, self.hyper.seq_len, &mut rng)?;
        let (eos_mem, con_mem, hyper) = (&self.eos_mem, &self.con_mem, &self.hyper);
        let losses: Vec<StepLosses> = self
            .agents
            .par_iter_mut()
            .enumerate()
            .map(|(bs, agent)| train_step(agent, &build_batch(eos_mem, con_mem, bs, &idx), hyper, bs))
            .collect::<Result<_>>()?;
        self.iteration += 1;
        let validation_reward = if self.iteration % self.hyper.validation_every == 0 && !self.validation_configs.is_empty() {
            Some(self.validate()?)
        } else {
            None
        };
        Ok(TrainLogRow {
            iteration: self.iteration,
            epsilon: eps,
            lr,
            eos_loss: losses.iter().map(|l| l.eos).collect(),
            con_loss: losses.iter().map(|l| l.con).collect(),
            validation_reward,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_FORMAT_VERSION,
            iteration: self.iteration,
            seed: self.seed,
            config_hash: config_hash(&self.env, &self.hyper, self.seed),
            env: self.env.clone(),
            hyper: self.hyper.clone(),
            agents: self.agents.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Initial point followed by one point per validation event.
    pub curve: Vec<ValidationPoint>,
    pub log: Vec<TrainLogRow>,
}

/// Runs `hyper.iterations` training iterations. `on_row` sees every log row
/// as it is produced.
pub fn train(
    train_configs: &[LargeScaleGains],
    validation_configs: &[LargeScaleGains],
    env: &EnvParams,
    hyper: &TrainHyper,
    seed: u64,
    mut on_row: impl FnMut(&TrainLogRow),
) -> Result<TrainOutcome> {
    let mut t = Trainer::new(train_configs, validation_configs, env, hyper, seed)?;
    let mut curve = Vec::new();
    if !validation_configs.is_empty() {
        curve.push(ValidationPoint {
            iteration: 0,
            mean_reward: t.validate()?,
        });
    }
    let mut log = Vec::with_capacity(hyper.iterations as usize);
    for _ in 0..hyper.iterations {
        let row = t.step()?;
        if let Some(v) = row.validation_reward {
            curve.push(ValidationPoint {
                iteration: row.iteration,
                mean_reward: v,
            });
        }
        on_row(&row);
        log.push(row);
    }
    Ok(TrainOutcome {
        checkpoint: t.checkpoint(),
        curve,
        log,
    })
}
