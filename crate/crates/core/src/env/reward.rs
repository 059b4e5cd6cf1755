use ndarray::Array2;

use super::params::{EnvParams, PenaltyScope};
use super::Action;
use crate::{Error, Result};

/// SINR at UE `j` together with its numerator and interference sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinrTerms {
    pub sinr: f64,
    pub signal: f64,
    pub interference: f64,
}

/// SINR at the UE served by BS `j` in the gain domain:
/// `g_jj a_j / (sigma2 + sum_{i != j} g_ij a_i)` with `sigma2` the UE noise
/// relative to the transmit power.
pub fn sinr(j: usize, gains_ue: &Array2<f64>, actions: &[Action], sigma2: f64) -> SinrTerms {
    let signal = gains_ue[[j, j]] * f64::from(actions[j]);
    let interference: f64 = actions
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(i, &a)| gains_ue[[i, j]] * f64::from(a))
        .sum();
    SinrTerms {
        sinr: signal / (sigma2 + interference),
        signal,
        interference,
    }
}

/// Shannon rate in bits/s/Hz.
pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Exponential smoothing of the average rate with window `b`.
pub fn update_avg_rate(xbar_prev: f64, r_inst: f64, b: f64) -> f64 {
    (1.0 - 1.0 / b) * xbar_prev + r_inst / b
}

/// Per-UE reward: the log-ratio `ln(xbar[n] / xbar[n-1])`, written so that
/// summing it over an episode telescopes to the change in `ln xbar`.
pub fn per_ue_reward(r_inst: f64, xbar_prev: f64, b: f64) -> f64 {
    ((1.0 - 1.0 / b) * (1.0 + r_inst / ((b - 1.0) * xbar_prev))).ln()
}

/// Sum of per-UE rewards, without any penalty.
pub fn log_ratio_reward(rates: &[f64], xbar_prev: &[f64], b: f64) -> f64 {
    rates.iter().zip(xbar_prev).map(|(&r, &x)| per_ue_reward(r, x, b)).sum()
}

/// Common training reward of a slot: [`log_ratio_reward`], or
/// `-kappa * N` when every BS deferred and the penalty is not off.
pub fn slot_reward(actions: &[Action], rates: &[f64], xbar_prev: &[f64], params: &EnvParams) -> f64 {
    if params.all_off_penalty != PenaltyScope::Off && actions.iter().all(|&a| a == 0) {
        return -params.all_off_kappa * actions.len() as f64;
    }
    log_ratio_reward(rates, xbar_prev, params.smoothing_b)
}

/// Proportional-fairness utility `sum_j ln xbar_j`.
pub fn utility(xbar: &[f64]) -> Result<f64> {
    if let Some(x) = xbar.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::InputDomain(format!("utility needs positive rates, got {x}")));
    }
    Ok(xbar.iter().map(|x| x.ln()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn sinr_examples() {
        let g = array![[1.0, 0.3], [0.5, 1.0]];
        let off = sinr(0, &g, &[0, 1], 1.0);
        assert_eq!(off.sinr, 0.0);
        assert_eq!(off.signal, 0.0);
        assert_eq!(off.interference, 0.5);
        let alone = sinr(0, &g, &[1, 0], 1.0);
        assert_eq!(alone.sinr, 1.0);
        let both = sinr(0, &g, &[1, 1], 0.1);
        assert!((both.sinr - 1.0 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(0.0), 0.0);
        assert_eq!(rate(1.0), 1.0);
        assert_eq!(rate(3.0), 2.0);
    }

    #[test]
    fn avg_rate_examples() {
        assert_eq!(update_avg_rate(1.0, 1.0, 10.0), 1.0);
        assert!((update_avg_rate(1.0, 0.0, 10.0) - 0.9).abs() < 1e-15);
        assert!((update_avg_rate(0.01, 2.0, 10.0) - 0.209).abs() < 1e-15);
    }

    #[test]
    fn per_ue_reward_examples() {
        assert_eq!(per_ue_reward(0.37, 0.37, 10.0), 0.0);
        assert!((per_ue_reward(0.0, 0.4, 10.0) - 0.9f64.ln()).abs() < 1e-15);
        assert!((per_ue_reward(0.0, 0.4, 10.0) - -0.10536).abs() < 1e-5);
        let r = per_ue_reward(1.0, 0.1, 10.0);
        assert!((r - 1.9f64.ln()).abs() < 1e-12);
        assert!((r - 0.64185).abs() < 1e-5);
    }

    #[test]
    fn slot_reward_examples() {
        let p = EnvParams::with_n_bs(4);
        assert_eq!(slot_reward(&[0, 0, 0, 0], &[0.0; 4], &[0.01; 4], &p), -40.0);
        let p1 = EnvParams::with_n_bs(1);
        assert_eq!(slot_reward(&[1], &[0.8], &[0.8], &p1), 0.0);
        let rates = [0.1, 2.0, 0.0, 5.5];
        let xbar = [0.3, 0.01, 1.2, 4.0];
        let expected: f64 = rates.iter().zip(xbar).map(|(&r, x)| per_ue_reward(r, x, 10.0)).sum();
        assert_eq!(slot_reward(&[1, 1, 0, 1], &rates, &xbar, &p), expected);
        let unpenalized = EnvParams {
            all_off_penalty: PenaltyScope::Off,
            ..p
        };
        assert!((slot_reward(&[0; 4], &[0.0; 4], &[0.01; 4], &unpenalized) - 4.0 * 0.9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn utility_examples() {
        assert_eq!(utility(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((utility(&[e, e]).unwrap() - 2.0).abs() < 1e-15);
        assert!((utility(&[0.01; 4]).unwrap() - -18.420_680_743_952_367).abs() < 1e-12);
        assert!(utility(&[1.0, 0.0]).is_err());
        assert!(utility(&[-1.0]).is_err());
    }

    proptest! {
        #[test]
        fn reward_is_log_ratio_of_average_rates(x in 1e-4f64..50.0, r in 0.0f64..30.0, b in 1.01f64..100.0) {
            let next = update_avg_rate(x, r, b);
            prop_assert!((per_ue_reward(r, x, b) - (next / x).ln()).abs() < 1e-10);
        }

        #[test]
        fn rate_monotone_in_own_gain_and_interference(g in 1e-6f64..1.0, dg in 1e-6f64..1.0, c in 1e-6f64..1.0, dc in 0.0f64..1.0) {
            let s2 = 1e-3;
            let base = ndarray::array![[g, c], [c, 1.0]];
            let stronger = ndarray::array![[g + dg, c], [c, 1.0]];
            let noisier = ndarray::array![[g, c], [c + dc, 1.0]];
            let r0 = rate(sinr(0, &base, &[1, 1], s2).sinr);
            prop_assert!(rate(sinr(0, &stronger, &[1, 1], s2).sinr) > r0);
            prop_assert!(rate(sinr(0, &noisier, &[1, 1], s2).sinr) <= r0);
        }
    }
}
