//! Layouts, configuration splits, experiment configuration and the
//! drivers behind the command-line tool.

mod config;
mod experiment;
mod layout;
mod plots;
mod splits;
mod counter_table;

pub use config::{overlay, EvalSpec, ExperimentConfig, HyperPreset};
pub use experiment::{
    config_id, load_or_build_scenario, prepare, realization_seeds, run_baseline, run_build_layout, run_evaluate,
    run_sweep_ed, run_counter_table_experiment, run_train, write_manifest, write_metrics_csv, MetricsRow, Prepared,
};
pub use layout::{
    build_layout, grid_bs_positions, place_ues, toy_env_params, LayoutPreset, ToyGains, UePlacement, AREA_M, UES_PER_BS,
};
pub use plots::{
    baseline_series, counter_series, emit_plots, read_columns, trailing_mean, validation_series, write_series, PlotInputs,
    SeriesPoint,
};
pub use splits::{enumerate_splits, Config, SplitSpec, Splits, MAX_TRAIN_CONFIGS};
pub use counter_table::{mode_name, run_counter_table, CounterTable, CounterTableEntry, COUNTER_TABLE_POLICIES};
