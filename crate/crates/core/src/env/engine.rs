use ndarray::Array2;

use super::counters::draw_counters;
use super::observation::{ConObservation, EosObservation};
use super::params::{EnvParams, PenaltyScope};
use super::record::{ChannelTrace, ConQuadruple, EosTuple, EpisodeMeta, EpisodeRecord};
use super::reward::{log_ratio_reward, rate, sinr, slot_reward, update_avg_rate, utility};
use super::sensing::{sense_energy, SensingNoise};
use super::Action;
use crate::channel::{effective_gain, FadingState, LargeScaleGains, Scenario};
use crate::rng::EpisodeStreams;
use crate::{Error, Result};

/// System state at the start of slot `n`: the average rates after slot
/// `n - 1` and the effective gains of slot `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    pub xbar: Vec<f64>,
    pub gains_ue: Array2<f64>,
    pub gains_bs: Array2<f64>,
    /// Gains of slot `n - 1`, the only channel knowledge a central
    /// scheduler has when it decides at the start of slot `n`.
    pub prev_gains_ue: Array2<f64>,
    pub slot: u64,
}

impl NetworkState {
    fn initial(g0: &LargeScaleGains, fading: &FadingState, xbar0: f64) -> Self {
        let (gains_ue, gains_bs) = effective_gains(g0, fading);
        Self {
            xbar: vec![xbar0; g0.n_bs()],
            prev_gains_ue: gains_ue.clone(),
            gains_ue,
            gains_bs,
            slot: 1,
        }
    }
}

fn effective_gains(g0: &LargeScaleGains, fading: &FadingState) -> (Array2<f64>, Array2<f64>) {
    let ue = ndarray::Zip::from(&g0.g0_ue)
        .and(&fading.h_ss_ue)
        .map_collect(|&g, &h| effective_gain(g, h));
    let bs = ndarray::Zip::from(&g0.g0_bs)
        .and(&fading.h_ss_bs)
        .map_collect(|&g, &h| effective_gain(g, h));
    (ue, bs)
}

/// What a central controller sees at the start of a slot.
pub struct CentralView<'a> {
    pub xbar: &'a [f64],
    pub prev_gains_ue: &'a Array2<f64>,
    pub sigma2: f64,
    pub slot: u64,
}

/// What BS `bs` sees when its counter expires.
pub struct ContentionView<'a> {
    pub bs: usize,
    pub counter: usize,
    pub obs: &'a ConObservation,
    pub raw_energy_mw: &'a [f64],
}

/// A medium-access policy for all BSs of a layout.
///
/// `decide` is called once per BS per slot in contention order and must
/// only use the information in its view (plus whatever the policy tracked
/// for that same BS in earlier slots).
pub trait AccessPolicy {
    fn name(&self) -> String;

    /// Called at the start of every episode.
    fn reset(&mut self, _n_bs: usize) {}

    /// Called once per slot before any contention decision.
    fn begin_slot(&mut self, _view: &CentralView<'_>) {}

    fn decide(&mut self, view: &ContentionView<'_>) -> Action;
}

impl<P: AccessPolicy + ?Sized> AccessPolicy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn reset(&mut self, n_bs: usize) {
        (**self).reset(n_bs)
    }
    fn begin_slot(&mut self, view: &CentralView<'_>) {
        (**self).begin_slot(view)
    }
    fn decide(&mut self, view: &ContentionView<'_>) -> Action {
        (**self).decide(view)
    }
}

/// Result of one contention slot.
#[derive(Clone, Debug)]
pub struct SlotOutcome {
    pub counters: Vec<usize>,
    pub actions: Vec<Action>,
    pub con_obs: Vec<ConObservation>,
    pub rates: Vec<f64>,
    /// Reported reward of the slot (the reward trace).
    pub reward: f64,
    /// Reward stored in the CON transitions that training regresses on.
    pub label_reward: f64,
    pub next_eos: Vec<EosObservation>,
    pub next_state: NetworkState,
}

/// Runs slot `state.slot`: counters, contention in counter order, rates,
/// reward, average-rate update, next EOS observations, then one fading step.
pub fn run_slot<P: AccessPolicy + ?Sized>(
    state: &NetworkState,
    eos_obs: &[EosObservation],
    g0: &LargeScaleGains,
    fading: &mut FadingState,
    policy: &mut P,
    streams: &mut EpisodeStreams,
    params: &EnvParams,
) -> Result<SlotOutcome> {
    let n = params.n_bs;
    let counters = draw_counters(n, params.cws, params.counter_mode, &mut streams.counters)?;
    let noise = SensingNoise::draw(n, params.bs_noise_mw(), &mut streams.sensing);
    let sigma2 = params.normalized_ue_noise();
    let tx_mw = params.tx_power_mw();

    policy.begin_slot(&CentralView {
        xbar: &state.xbar,
        prev_gains_ue: &state.prev_gains_ue,
        sigma2,
        slot: state.slot,
    });

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| counters[i]);
    let mut decided: Vec<Option<Action>> = vec![None; n];
    let mut con_obs: Vec<Option<ConObservation>> = vec![None; n];
    let mut start = 0;
    while start < n {
        let c = counters[order[start]];
        let end = start + order[start..].iter().take_while(|&&i| counters[i] == c).count();
        // BSs sharing a counter decide simultaneously.
        let mut group = Vec::with_capacity(end - start);
        for &i in &order[start..end] {
            let raw = sense_energy(i, &counters, &decided, &g0.g0_bs, fading, &noise, tx_mw);
            let obs = ConObservation::build(eos_obs[i], &raw, i, counters[i], params, g0.norm_bs);
            let a = policy.decide(&ContentionView {
                bs: i,
                counter: counters[i],
                obs: &obs,
                raw_energy_mw: &raw,
            });
            group.push((i, a.min(1), obs));
        }
        for (i, a, obs) in group {
            decided[i] = Some(a);
            con_obs[i] = Some(obs);
        }
        start = end;
    }
    let actions: Vec<Action> = decided.into_iter().map(|a| a.expect("every BS decided")).collect();
    let con_obs: Vec<ConObservation> = con_obs.into_iter().map(|o| o.expect("every BS observed")).collect();

    let terms: Vec<_> = (0..n).map(|j| sinr(j, &state.gains_ue, &actions, sigma2)).collect();
    let rates: Vec<f64> = terms.iter().map(|t| rate(t.sinr)).collect();
    let label_reward = slot_reward(&actions, &rates, &state.xbar, params);
    let reward = match params.all_off_penalty {
        PenaltyScope::Always => label_reward,
        PenaltyScope::Off | PenaltyScope::Training => log_ratio_reward(&rates, &state.xbar, params.smoothing_b),
    };
    let xbar: Vec<f64> = state
        .xbar
        .iter()
        .zip(&rates)
        .map(|(&x, &r)| update_avg_rate(x, r, params.smoothing_b))
        .collect();
    let next_eos = terms
        .iter()
        .zip(&xbar)
        .map(|(t, &x)| EosObservation {
            xbar: x,
            sig: t.signal / g0.norm_ue,
            intf: t.interference / g0.norm_ue,
        })
        .collect();

    fading.step(&mut streams.fading);
    let (gains_ue, gains_bs) = effective_gains(g0, fading);
    Ok(SlotOutcome {
        counters,
        actions,
        con_obs,
        rates,
        reward,
        label_reward,
        next_eos,
        next_state: NetworkState {
            xbar,
            prev_gains_ue: state.gains_ue.clone(),
            gains_ue,
            gains_bs,
            slot: state.slot + 1,
        },
    })
}

#[derive(Clone, Debug, Default)]
pub struct EpisodeOptions {
    pub config_id: String,
    /// Keep per-slot effective gains (needed for trace comparisons).
    pub record_traces: bool,
}

/// Runs one episode of `params.episode_len` slots on a configuration.
///
/// All channel, counter and sensing randomness comes from streams derived
/// from `realization_seed`, so replays under different policies see the
/// same realization.
pub fn run_episode<P: AccessPolicy + ?Sized>(
    g0: &LargeScaleGains,
    policy: &mut P,
    params: &EnvParams,
    realization_seed: u64,
    options: &EpisodeOptions,
) -> Result<EpisodeRecord> {
    params.validate()?;
    let n = params.n_bs;
    if g0.n_bs() != n {
        return Err(Error::InputDomain(format!(
            "configuration has {} BSs, parameters expect {n}",
            g0.n_bs()
        )));
    }
    let len = params.episode_len;
    let mut streams = EpisodeStreams::new(realization_seed);
    let mut fading = if params.fading_enabled {
        FadingState::new(n, params.fading_alpha)?
    } else {
        FadingState::frozen(n)
    };
    policy.reset(n);

    let mut state = NetworkState::initial(g0, &fading, params.xbar_init);
    let mut eos = vec![EosObservation::initial(params.xbar_init); n];
    let initial_xbar = state.xbar.clone();
    let mut rewards = Vec::with_capacity(len + 1);
    rewards.push(utility(&initial_xbar)?);

    let mut eos_tuples: Vec<Vec<EosTuple>> = (0..n).map(|_| Vec::with_capacity(len)).collect();
    let mut con_quads: Vec<Vec<ConQuadruple>> = (0..n).map(|_| Vec::with_capacity(len)).collect();
    let mut actions = Vec::with_capacity(len);
    let mut rates = Vec::with_capacity(len);
    let mut counters = Vec::with_capacity(len);
    let mut trace = options.record_traces.then(ChannelTrace::default);

    for _ in 0..len {
        if let Some(t) = trace.as_mut() {
            t.push(&state.gains_ue, &state.gains_bs);
        }
        let out = run_slot(&state, &eos, g0, &mut fading, policy, &mut streams, params)?;
        for i in 0..n {
            eos_tuples[i].push(EosTuple {
                eos: eos[i],
                con: out.con_obs[i].clone(),
            });
            con_quads[i].push(ConQuadruple {
                con: out.con_obs[i].clone(),
                action: out.actions[i],
                reward: out.label_reward,
                next_eos: out.next_eos[i],
            });
        }
        rewards.push(out.reward);
        actions.push(out.actions);
        rates.push(out.rates);
        counters.push(out.counters);
        eos = out.next_eos;
        state = out.next_state;
    }

    Ok(EpisodeRecord {
        meta: EpisodeMeta {
            config_id: options.config_id.clone(),
            policy: policy.name(),
            realization_seed,
            n_bs: n,
            episode_len: len,
            gamma: params.gamma,
        },
        eos_tuples,
        con_quads,
        rewards,
        actions,
        rates,
        counters,
        initial_xbar,
        final_xbar: state.xbar,
        trace,
    })
}

/// [`run_episode`] on the configuration of `scenario` where BS `i` serves
/// `active_ues[i]`.
pub fn run_config_episode<P: AccessPolicy + ?Sized>(
    scenario: &Scenario,
    active_ues: &[usize],
    policy: &mut P,
    params: &EnvParams,
    realization_seed: u64,
    options: &EpisodeOptions,
) -> Result<EpisodeRecord> {
    let g0 = scenario.gains_for(active_ues)?;
    run_episode(&g0, policy, params, realization_seed, options)
}

/// Adapts a closure into an [`AccessPolicy`].
pub struct FnPolicy<F> {
    name: String,
    f: F,
}

impl<F: FnMut(&ContentionView<'_>) -> Action> FnPolicy<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F: FnMut(&ContentionView<'_>) -> Action> AccessPolicy for FnPolicy<F> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn decide(&mut self, view: &ContentionView<'_>) -> Action {
        (self.f)(view)
    }
}

/// Every BS always takes the same action.
#[derive(Clone, Copy, Debug)]
pub struct ConstantPolicy(pub Action);

impl AccessPolicy for ConstantPolicy {
    fn name(&self) -> String {
        if self.0 == 1 { "always-transmit" } else { "never-transmit" }.into()
    }

    fn decide(&mut self, _view: &ContentionView<'_>) -> Action {
        self.0
    }
}

/// Discounted cumulative reward of `policy` on each realization seed, in
/// order.
pub fn rollout_rewards<P: AccessPolicy + ?Sized>(
    g0: &LargeScaleGains,
    policy: &mut P,
    params: &EnvParams,
    seeds: &[u64],
) -> Result<Vec<f64>> {
    let opts = EpisodeOptions::default();
    seeds
        .iter()
        .map(|&s| run_episode(g0, policy, params, s, &opts).map(|r| r.discounted_reward(params.gamma)))
        .collect()
}
