use ndarray::Array2;

use crate::env::{rate, sinr, AccessPolicy, Action, CentralView, ContentionView};
use crate::{Error, Result};

/// Largest `N` for which exhaustive search is attempted.
pub const DEFAULT_PF_CAP: usize = 16;

/// `sum_j R_j(a) / xbar_j` under the given gains.
pub fn pf_metric(gains: &Array2<f64>, xbar: &[f64], actions: &[Action], sigma2: f64) -> f64 {
    (0..xbar.len())
        .map(|j| rate(sinr(j, gains, actions, sigma2).sinr) / xbar[j])
        .sum()
}

/// Exhaustive PF scheduling: the action vector maximizing
/// [`pf_metric`], with ties resolved to the lexicographically smallest
/// vector.
pub fn pf_schedule(gains_prev: &Array2<f64>, xbar: &[f64], sigma2: f64, cap: usize) -> Result<Vec<Action>> {
    let n = xbar.len();
    if n > cap {
        return Err(Error::CombinatorialLimit { n, cap });
    }
    if let Some(x) = xbar.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::InputDomain(format!("average rates must be positive, got {x}")));
    }
    let mut best = vec![0; n];
    let mut best_metric = f64::NEG_INFINITY;
    let mut cand = vec![0; n];
    // Counting upward with a_0 as the most significant bit visits vectors
    // in lexicographic order, so the first strict maximum wins ties.
    for k in 0u64..(1u64 << n) {
        for (j, a) in cand.iter_mut().enumerate() {
            *a = ((k >> (n - 1 - j)) & 1) as Action;
        }
        let m = pf_metric(gains_prev, xbar, &cand, sigma2);
        if m > best_metric {
            best_metric = m;
            best.copy_from_slice(&cand);
        }
    }
    Ok(best)
}

/// Centralized scheduler deciding all BSs from the previous slot's gains.
#[derive(Clone, Debug)]
pub struct PfPolicy {
    cap: usize,
    plan: Vec<Action>,
}

impl PfPolicy {
    pub fn new() -> Self {
        Self::with_cap(DEFAULT_PF_CAP)
    }

    pub fn with_cap(cap: usize) -> Self {
        Self { cap, plan: Vec::new() }
    }
}

impl Default for PfPolicy {
    fn default() -> Self {
        Self::new()
    }
}

impl AccessPolicy for PfPolicy {
    fn name(&self) -> String {
        "pf".into()
    }

    fn begin_slot(&mut self, view: &CentralView<'_>) {
        // Inputs are validated by the engine; positivity of xbar is an
        // invariant of the rate update, and the cap is checked up front.
        self.plan = pf_schedule(view.prev_gains_ue, view.xbar, view.sigma2, self.cap)
            .expect("PF inputs satisfy the scheduler preconditions");
    }

    fn decide(&mut self, view: &ContentionView<'_>) -> Action {
        self.plan[view.bs]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_bs_always_transmits() {
        assert_eq!(pf_schedule(&array![[1e-7]], &[0.01], 1e-12, 16).unwrap(), vec![1]);
    }

    #[test]
    fn interference_free_schedules_everyone() {
        let g = array![[1e-6, 0.0, 0.0], [0.0, 2e-7, 0.0], [0.0, 0.0, 5e-8]];
        assert_eq!(pf_schedule(&g, &[1.0, 0.1, 3.0], 1e-12, 16).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn symmetric_high_interference_picks_one() {
        let s2: f64 = 1e-3;
        let g = 1.0;
        let gm = array![[g, g], [g, g]];
        // Enumerate by hand.
        let solo = (1.0 + g / s2).log2();
        let both = 2.0 * (1.0 + g / (s2 + g)).log2();
        assert!(solo > both);
        let a = pf_schedule(&gm, &[1.0, 1.0], s2, 16).unwrap();
        // Both singletons tie; lexicographically smallest is (0, 1).
        assert_eq!(a, vec![0, 1]);
    }

    #[test]
    fn cap_is_enforced() {
        let n = 5;
        let g = Array2::eye(n);
        assert!(matches!(
            pf_schedule(&g, &vec![1.0; n], 1e-3, 4),
            Err(Error::CombinatorialLimit { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn scale_invariance_of_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let g = Array2::from_shape_fn((4, 4), |_| 10f64.powf(rng.random_range(-9.0..-5.0)));
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..10.0)).collect();
            let c = rng.random_range(0.1..10.0);
            let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
            let a = pf_schedule(&g, &x, 1e-12, 16).unwrap();
            let b = pf_schedule(&g, &xs, 1e-12, 16).unwrap();
            let (ma, mb) = (pf_metric(&g, &xs, &a, 1e-12), pf_metric(&g, &xs, &b, 1e-12));
            assert!((ma - mb).abs() <= 1e-12 * ma.abs().max(1.0));
        }
    }
}
