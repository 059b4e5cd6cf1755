use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Small-scale fading coefficients of every BS->UE and BS->BS link,
/// evolved by the first-order IIR filter
/// `h[n] = (1 - alpha) h[n-1] + alpha z[n]`.
///
/// The innovation variance `(1 - (1-alpha)^2) / alpha^2` gives the filter a
/// unit steady-state power, so `E|h|^2 -> 1` for every `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FadingState {
    pub h_ss_ue: Array2<Complex64>,
    pub h_ss_bs: Array2<Complex64>,
    pub alpha: f64,
    pub slot_index: u64,
    /// When false the coefficients stay frozen at 1 (no-fading ablation).
    pub enabled: bool,
}

impl FadingState {
    pub fn new(n_bs: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InputDomain(format!(
                "fading coefficient must lie in (0, 1], got {alpha}"
            )));
        }
        let one = Complex64::new(1.0, 0.0);
        Ok(Self {
            h_ss_ue: Array2::from_elem((n_bs, n_bs), one),
            h_ss_bs: Array2::from_elem((n_bs, n_bs), one),
            alpha,
            slot_index: 0,
            enabled: true,
        })
    }

    /// Fading disabled: every coefficient stays at `1 + 0i`.
    pub fn frozen(n_bs: usize) -> Self {
        let mut f = Self::new(n_bs, 1.0).expect("alpha = 1 is valid");
        f.enabled = false;
        f
    }

    pub fn n_bs(&self) -> usize {
        self.h_ss_ue.nrows()
    }

    pub fn innovation_variance(&self) -> f64 {
        let keep = 1.0 - self.alpha;
        (1.0 - keep * keep) / (self.alpha * self.alpha)
    }

    /// Advances every coefficient by one slot. UE links are updated before
    /// BS links, row-major, so the stream consumption is fixed.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.slot_index += 1;
        if !self.enabled {
            return;
        }
        let keep = 1.0 - self.alpha;
        let z_std = (self.innovation_variance() / 2.0).sqrt();
        let alpha = self.alpha;
        for h in self.h_ss_ue.iter_mut().chain(self.h_ss_bs.iter_mut()) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *h = *h * keep + Complex64::new(re, im) * (alpha * z_std);
        }
    }

    /// Functional form of [`FadingState::step`].
    pub fn stepped<R: Rng + ?Sized>(mut self, rng: &mut R) -> Self {
        self.step(rng);
        self
    }
}

/// `g0 * |h|^2`.
pub fn effective_gain(g0: f64, h_ss: Complex64) -> f64 {
    g0 * h_ss.norm_sqr()
}

/// Slots until the filter memory `(1 - alpha)^n` falls to one half.
pub fn half_decorrelation_slots(alpha: f64) -> f64 {
    0.5f64.ln() / (1.0 - alpha).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn starts_at_unity() {
        let f = FadingState::new(3, 0.01).unwrap();
        assert!(f.h_ss_ue.iter().chain(f.h_ss_bs.iter()).all(|h| *h == Complex64::new(1.0, 0.0)));
        assert_eq!(f.slot_index, 0);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(FadingState::new(2, 0.0).is_err());
        assert!(FadingState::new(2, 1.5).is_err());
        assert!(FadingState::new(2, 1.0).is_ok());
    }

    #[test]
    fn alpha_one_is_memoryless() {
        let mut f = FadingState::new(2, 1.0).unwrap();
        assert_eq!(f.innovation_variance(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ref_rng = ChaCha8Rng::seed_from_u64(5);
        f.step(&mut rng);
        let z_std = 0.5f64.sqrt();
        for h in f.h_ss_ue.iter().chain(f.h_ss_bs.iter()) {
            let re: f64 = ref_rng.sample(StandardNormal);
            let im: f64 = ref_rng.sample(StandardNormal);
            assert_eq!(*h, Complex64::new(re * z_std, im * z_std));
        }
        assert_eq!(f.slot_index, 1);
    }

    #[test]
    fn frozen_state_never_moves() {
        let mut f = FadingState::frozen(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            f.step(&mut rng);
        }
        assert!(f.h_ss_ue.iter().all(|h| *h == Complex64::new(1.0, 0.0)));
        assert_eq!(f.slot_index, 10);
    }

    #[test]
    fn steady_state_power_is_unity() {
        for alpha in [0.01, 0.1, 1.0] {
            let mut f = FadingState::new(4, alpha).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let burn_in = (20.0 / alpha) as usize;
            for _ in 0..burn_in {
                f.step(&mut rng);
            }
            let steps = 100_000;
            let mut acc = 0.0;
            for _ in 0..steps {
                f.step(&mut rng);
                acc += f.h_ss_ue.iter().chain(f.h_ss_bs.iter()).map(|h| h.norm_sqr()).sum::<f64>();
            }
            let mean = acc / (steps as f64 * 32.0);
            assert!((mean - 1.0).abs() < 0.02, "alpha {alpha}: mean power {mean}");
        }
    }

    #[test]
    fn half_decorrelation_at_one_percent() {
        let n = half_decorrelation_slots(0.01);
        assert_eq!(n.round(), 69.0);
    }

    #[test]
    fn effective_gain_examples() {
        assert_eq!(effective_gain(0.5, Complex64::new(1.0, 0.0)), 0.5);
        assert_eq!(effective_gain(3.7, Complex64::new(0.0, 0.0)), 0.0);
        assert!((effective_gain(2.0, Complex64::new(0.6, 0.8)) - 2.0).abs() < 1e-15);
    }
}
