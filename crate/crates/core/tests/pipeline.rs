use lbt_core::baselines::{EdPolicy, PfPolicy};
use lbt_core::env::{run_episode, AccessPolicy, CounterMode, EpisodeOptions};
use lbt_core::harness::{
    prepare, realization_seeds, run_build_layout, run_evaluate, run_train, ExperimentConfig, HyperPreset, LayoutPreset,
};
use lbt_core::rl::{mean_reward, Checkpoint, RlPolicy};
use lbt_core::rng::stream;

fn tiny_toy(dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(LayoutPreset::Toy, HyperPreset::Desk);
    cfg.output_dir = dir.to_path_buf();
    cfg.master_seed = 11;
    cfg.env.episode_len = 30;
    cfg.hyper.dense = 8;
    cfg.hyper.hidden = 4;
    cfg.hyper.batch_episodes = 4;
    cfg.hyper.seq_len = 5;
    cfg.hyper.iterations = 4;
    cfg.hyper.validation_every = 2;
    cfg.hyper.validation_realizations = 2;
    cfg.hyper.replay_capacity = Some(3);
    cfg.eval.realizations = 3;
    cfg
}

#[test]
fn train_then_evaluate_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_toy(dir.path());
    let out = run_train(&cfg, |_| {}).unwrap();
    assert_eq!(out.checkpoint.iteration, 4);
    assert_eq!(out.curve.iter().map(|p| p.iteration).collect::<Vec<_>>(), vec![0, 2, 4]);

    let ck = Checkpoint::load(&dir.path().join("checkpoint.json")).unwrap();
    assert_eq!(ck, out.checkpoint);
    let log = std::fs::read_to_string(dir.path().join("training_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 1 + 4);
    assert!(dir.path().join("manifest.toml").exists());

    let rows = run_evaluate(&cfg, &ck).unwrap();
    let prep = prepare(&cfg).unwrap();
    for p in ["rl", "pf", "ed", "adaptive-ed"] {
        let n = rows.iter().filter(|r| r.policy == p).count();
        assert_eq!(n, prep.test.len() * cfg.eval.realizations, "{p}");
        assert!(mean_reward(&rows, p, None).unwrap().is_finite());
    }
    let csv = std::fs::read_to_string(dir.path().join("evaluation.csv")).unwrap();
    assert!(csv.starts_with("experiment_id,policy,config_index,realization_seed,reward,mean_rate,xbar_final_0,xbar_final_1\n"));
    assert_eq!(csv.lines().count(), 1 + rows.len());
}

#[test]
fn training_is_reproducible_from_the_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_train(&tiny_toy(a.path()), |_| {}).unwrap();
    run_train(&tiny_toy(b.path()), |_| {}).unwrap();
    for f in ["checkpoint.json", "training_log.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
    }
}

#[test]
fn saved_scenario_replaces_the_layout_draw() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(LayoutPreset::L1, HyperPreset::Desk);
    cfg.output_dir = dir.path().to_path_buf();
    cfg.master_seed = 4;
    let path = run_build_layout(&cfg).unwrap();
    let direct = prepare(&cfg).unwrap();

    let mut from_file = cfg.clone();
    from_file.scenario = Some(path);
    from_file.master_seed = 4;
    let loaded = prepare(&from_file).unwrap();
    assert_eq!(loaded.splits.train, direct.splits.train);
    assert_eq!(loaded.splits.test, direct.splits.test);
    assert_eq!(loaded.test[0].gains, direct.test[0].gains);
    assert_eq!(direct.splits.train.len(), 6561);
}

#[test]
fn policies_replay_identical_channels_and_counters() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_toy(dir.path());
    cfg.env.counter_mode = CounterMode::Iid;
    let out = run_train(&cfg, |_| {}).unwrap();
    let prep = prepare(&cfg).unwrap();
    let opts = EpisodeOptions {
        record_traces: true,
        ..Default::default()
    };
    for seed in realization_seeds(cfg.master_seed, "test", 3) {
        let g = &prep.test[0].gains;
        let mut pols: Vec<Box<dyn AccessPolicy>> = vec![
            Box::new(EdPolicy::new(-72.0)),
            Box::new(PfPolicy::new()),
            Box::new(RlPolicy::greedy(out.checkpoint.con_nets(), stream(seed, "rl", 0))),
        ];
        let digests: Vec<String> = pols
            .iter_mut()
            .map(|p| run_episode(g, p, &cfg.env, seed, &opts).unwrap().trace_digest().unwrap())
            .collect();
        assert_eq!(digests[0], digests[1]);
        assert_eq!(digests[0], digests[2]);
    }
}
