use serde::{Deserialize, Serialize};

use super::net::Tensors;

/// Adam moment and decay settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled weight decay, applied as `p -= lr * wd * p`.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-3,
        }
    }
}

/// Step-wise learning-rate decay: `lr_init * decay^(floor(update / every))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub lr_init: f64,
    pub decay: f64,
    pub every: u64,
}

impl LrSchedule {
    pub fn at(&self, update: u64) -> f64 {
        let k = update / self.every.max(1);
        self.lr_init * self.decay.powi(k.min(i32::MAX as u64) as i32)
    }
}

/// First and second moments with the update counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Tensors,
    pub v: Tensors,
    pub t: u64,
}

impl AdamState {
    pub fn new(zeros: Tensors) -> Self {
        Self {
            v: zeros.clone(),
            m: zeros,
            t: 0,
        }
    }

    /// One bias-corrected Adam step with decoupled weight decay.
    pub fn step(&mut self, params: &mut Tensors, grads: &Tensors, lr: f64, cfg: &AdamConfig) {
        self.t += 1;
        let t = self.t.min(i32::MAX as u64) as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                let step = (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
                *p -= lr * (step + cfg.weight_decay * *p);
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn schedule_decays_stepwise() {
        let s = LrSchedule { lr_init: 1e-3, decay: 0.85, every: 500 };
        assert_eq!(s.at(0), 1e-3);
        assert_eq!(s.at(499), 1e-3);
        assert!((s.at(500) - 0.85e-3).abs() < 1e-18);
        assert!((s.at(1234) - 0.85f64.powi(2) * 1e-3).abs() < 1e-18);
    }

    #[test]
    fn zero_gradient_only_decays_weights() {
        let cfg = AdamConfig::default();
        let mut p: Tensors = vec![array![[2.0, -1.0]]];
        let mut st = AdamState::new(vec![Array2::zeros((1, 2))]);
        st.step(&mut p, &vec![Array2::zeros((1, 2))], 0.1, &cfg);
        assert!((p[0][[0, 0]] - 2.0 * (1.0 - 0.1 * 1e-3)).abs() < 1e-15);
        assert!((p[0][[0, 1]] + 1.0 * (1.0 - 0.1 * 1e-3)).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let cfg = AdamConfig { weight_decay: 0.0, ..Default::default() };
        let mut p: Tensors = vec![array![[0.0, 0.0]]];
        let mut st = AdamState::new(vec![Array2::zeros((1, 2))]);
        st.step(&mut p, &vec![array![[3.0, -0.01]]], 0.01, &cfg);
        assert!((p[0][[0, 0]] + 0.01).abs() < 1e-9);
        assert!((p[0][[0, 1]] - 0.01).abs() < 1e-6);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let cfg = AdamConfig { weight_decay: 0.0, ..Default::default() };
        let mut p: Tensors = vec![array![[5.0, -3.0]]];
        let mut st = AdamState::new(vec![Array2::zeros((1, 2))]);
        for _ in 0..2000 {
            let g = vec![p[0].mapv(|x| 2.0 * (x - 1.0))];
            st.step(&mut p, &g, 0.05, &cfg);
        }
        assert!(p[0].iter().all(|x| (x - 1.0).abs() < 1e-3));
    }
}
