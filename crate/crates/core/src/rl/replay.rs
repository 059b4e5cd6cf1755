use std::collections::VecDeque;
use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use crate::env::{Action, EosObservation, EpisodeRecord};
use crate::{Error, Result};

/// Bounded double-ended queue: pushing beyond capacity evicts the oldest row.
#[derive(Clone, Debug)]
pub struct ReplayMemory<T> {
    rows: VecDeque<T>,
    capacity: usize,
}

impl<T> ReplayMemory<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            rows: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: T) {
        if self.capacity == 0 {
            return;
        }
        if self.rows.len() == self.capacity {
            self.rows.pop_front();
        }
        self.rows.push_back(row);
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        self.rows.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.rows.iter()
    }
}

/// EOS tuples of one BS for a whole episode as feature matrices: the EOS
/// observation and the CON observation that followed it in the same slot.
#[derive(Clone, Debug)]
pub struct EosRows {
    pub eos: Array2<f64>,
    pub con: Arc<Array2<f64>>,
}

/// CON quadruples of one BS for a whole episode.
#[derive(Clone, Debug)]
pub struct ConRows {
    pub con: Arc<Array2<f64>>,
    pub action: Vec<Action>,
    pub reward: Vec<f64>,
    pub next_eos: Array2<f64>,
}

/// One replay row: an episode, split per BS.
pub type EosEpisode = Vec<EosRows>;
pub type ConEpisode = Vec<ConRows>;

fn eos_matrix<'a>(obs: impl ExactSizeIterator<Item = &'a EosObservation>) -> Array2<f64> {
    let len = obs.len();
    let mut m = Array2::zeros((len, EosObservation::WIDTH));
    for (t, o) in obs.enumerate() {
        for (k, v) in o.features().into_iter().enumerate() {
            m[[t, k]] = v;
        }
    }
    m
}

/// Featurizes an episode into the rows stored by the EOS and CON memories.
pub fn episode_rows(record: &EpisodeRecord) -> (EosEpisode, ConEpisode) {
    let mut eos_ep = Vec::with_capacity(record.meta.n_bs);
    let mut con_ep = Vec::with_capacity(record.meta.n_bs);
    for (tuples, quads) in record.eos_tuples.iter().zip(&record.con_quads) {
        let len = quads.len();
        let width = quads.first().map_or(0, |q| q.con.width());
        let mut con = Array2::zeros((len, width));
        for (t, q) in quads.iter().enumerate() {
            q.con.write_features(con.row_mut(t).as_slice_mut().expect("standard layout"));
        }
        let con = Arc::new(con);
        eos_ep.push(EosRows {
            eos: eos_matrix(tuples.iter().map(|t| &t.eos)),
            con: Arc::clone(&con),
        });
        con_ep.push(ConRows {
            con,
            action: quads.iter().map(|q| q.action).collect(),
            reward: quads.iter().map(|q| q.reward).collect(),
            next_eos: eos_matrix(quads.iter().map(|q| &q.next_eos)),
        });
    }
    (eos_ep, con_ep)
}

/// Window positions of one training batch: replay row and start slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchIndex {
    pub windows: Vec<(usize, usize)>,
    pub seq_len: usize,
}

/// Samples `batch` windows of `seq_len` slots, rows uniformly with
/// replacement and a uniform start within each episode.
pub fn sample_batch<T, R: Rng + ?Sized>(
    mem: &ReplayMemory<T>,
    episode_len: usize,
    batch: usize,
    seq_len: usize,
    rng: &mut R,
) -> Result<BatchIndex> {
    if mem.is_empty() {
        return Err(Error::InputDomain("cannot sample from an empty replay memory".into()));
    }
    if seq_len == 0 || seq_len > episode_len {
        return Err(Error::Config(format!("seq_len {seq_len} must be in 1..={episode_len}")));
    }
    let windows = (0..batch)
        .map(|_| {
            let row = rng.random_range(0..mem.len());
            let start = rng.random_range(0..=episode_len - seq_len);
            (row, start)
        })
        .collect();
    Ok(BatchIndex { windows, seq_len })
}

/// Gathers rows `start..start + seq_len` of each window's matrix into one
/// time-major `[seq_len * batch, width]` array.
pub fn gather_windows<'a>(mats: impl Fn(usize) -> &'a Array2<f64>, idx: &BatchIndex) -> Array2<f64> {
    let batch = idx.windows.len();
    let width = idx.windows.first().map_or(0, |&(r, _)| mats(r).ncols());
    let mut out = Array2::zeros((idx.seq_len * batch, width));
    for (b, &(row, start)) in idx.windows.iter().enumerate() {
        let m = mats(row);
        for t in 0..idx.seq_len {
            out.row_mut(t * batch + b).assign(&m.row(start + t));
        }
    }
    out
}

/// Tensors for one BS's update: input windows for both nets, the windows
/// used to evaluate the labels, and the final-step action and reward.
#[derive(Clone, Debug)]
pub struct TrainBatch {
    pub seq_len: usize,
    pub eos_in: Array2<f64>,
    pub con_in: Array2<f64>,
    pub next_eos_in: Array2<f64>,
    pub action: Vec<Action>,
    pub reward: Vec<f64>,
}

impl TrainBatch {
    pub fn batch(&self) -> usize {
        self.action.len()
    }
}

/// Builds the batch of BS `bs` from aligned EOS and CON memories.
pub fn build_batch(
    eos_mem: &ReplayMemory<EosEpisode>,
    con_mem: &ReplayMemory<ConEpisode>,
    bs: usize,
    idx: &BatchIndex,
) -> TrainBatch {
    let eos_row = |r: usize| &eos_mem.get(r).expect("sampled row")[bs];
    let con_row = |r: usize| &con_mem.get(r).expect("sampled row")[bs];
    let last = idx.seq_len - 1;
    TrainBatch {
        seq_len: idx.seq_len,
        eos_in: gather_windows(|r| &eos_row(r).eos, idx),
        con_in: gather_windows(|r| con_row(r).con.as_ref(), idx),
        next_eos_in: gather_windows(|r| &con_row(r).next_eos, idx),
        action: idx.windows.iter().map(|&(r, s)| con_row(r).action[s + last]).collect(),
        reward: idx.windows.iter().map(|&(r, s)| con_row(r).reward[s + last]).collect(),
    }
}
