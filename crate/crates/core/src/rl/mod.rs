//! Recurrent dueling Q-networks, replay, two-stage labels, training and
//! greedy evaluation.

mod adam;
mod checkpoint;
mod evaluate;
mod hyper;
pub mod net;
mod policy;
mod replay;
mod train;

pub use adam::{AdamConfig, AdamState, LrSchedule};
pub use checkpoint::{config_hash, Checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use evaluate::{evaluate, mean_reward, write_eval_csv, EvalConfig, EvalRow, PolicySpec};
pub use hyper::TrainHyper;
pub use net::{dueling_aggregate, Carry, DuelingAggregator, ForwardCache, NetShape, QNet, Tensors};
pub use policy::{act_epsilon_greedy, RlPolicy};
pub use replay::{
    build_batch, episode_rows, gather_windows, sample_batch, BatchIndex, ConEpisode, ConRows, EosEpisode, EosRows,
    ReplayMemory, TrainBatch,
};
pub use train::{
    apply_update, compute_labels, con_label, eos_label, greedy_reward, train, train_step, write_training_log, BsAgent,
    Labels, StepLosses, TrainLogRow, TrainOutcome, Trainer, ValidationPoint,
};
