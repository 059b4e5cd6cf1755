use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Action;
use crate::channel::FadingState;

/// Receiver noise `z_ij ~ CN(0, sigma_bs^2)` for every (listener, source)
/// pair of one slot.
///
/// The full matrix is drawn up front regardless of contention order or
/// decisions, so the sensing stream is identical across policies.
#[derive(Clone, Debug)]
pub struct SensingNoise(pub Array2<Complex64>);

impl SensingNoise {
    pub fn draw<R: Rng + ?Sized>(n_bs: usize, noise_mw: f64, rng: &mut R) -> Self {
        let std = (noise_mw / 2.0).sqrt();
        Self(Array2::from_shape_simple_fn((n_bs, n_bs), || {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * std, im * std)
        }))
    }

    pub fn zero(n_bs: usize) -> Self {
        Self(Array2::zeros((n_bs, n_bs)))
    }
}

/// Raw preamble energies (mW) sensed by BS `i` when its counter expires.
///
/// Entry `j` is `|sqrt(P_t) h'_ij a_j 1{theta_j < theta_i} + z_ij|^2`. The
/// decision of BS `j` is read only when `theta_j < theta_i`; `None` marks a
/// BS that has not decided yet. The self entry carries noise only.
pub fn sense_energy(
    i: usize,
    counters: &[usize],
    decided: &[Option<Action>],
    g0_bs: &Array2<f64>,
    fading: &FadingState,
    noise: &SensingNoise,
    tx_power_mw: f64,
) -> Vec<f64> {
    let amp = tx_power_mw.sqrt();
    (0..counters.len())
        .map(|j| {
            let mut y = noise.0[[i, j]];
            if j != i && counters[j] < counters[i] {
                let a = decided[j].expect("a BS ahead in the contention queue has decided");
                if a == 1 {
                    let h = fading.h_ss_bs[[j, i]] * g0_bs[[j, i]].sqrt();
                    y += h * amp;
                }
            }
            y.norm_sqr()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Array2<f64>, FadingState) {
        let g = array![[0.0, 1e-6, 2e-6], [1e-6, 0.0, 3e-6], [2e-6, 3e-6, 0.0]];
        (g, FadingState::frozen(3))
    }

    #[test]
    fn later_transmitters_contribute_noise_only() {
        let (g, f) = setup();
        let noise = SensingNoise::draw(3, 1e-9, &mut ChaCha8Rng::seed_from_u64(1));
        let e = sense_energy(0, &[0, 1, 2], &[None, None, None], &g, &f, &noise, 200.0);
        for j in 0..3 {
            assert_eq!(e[j], noise.0[[0, j]].norm_sqr());
        }
    }

    #[test]
    fn noiseless_earlier_transmitter_gives_pt_times_gain() {
        let (g, f) = setup();
        let e = sense_energy(2, &[1, 0, 2], &[Some(0), Some(1), None], &g, &f, &SensingNoise::zero(3), 200.0);
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 200.0 * 3e-6).abs() < 1e-18);
        assert_eq!(e[2], 0.0);
    }

    #[test]
    fn ties_do_not_see_each_other() {
        let (g, f) = setup();
        let e = sense_energy(1, &[0, 0, 1], &[None, None, None], &g, &f, &SensingNoise::zero(3), 200.0);
        assert_eq!(e, vec![0.0; 3]);
    }

    #[test]
    fn self_entry_is_noise_only() {
        let (g, f) = setup();
        let noise = SensingNoise::draw(3, 1e-9, &mut ChaCha8Rng::seed_from_u64(2));
        let e = sense_energy(2, &[0, 1, 2], &[Some(1), Some(1), Some(1)], &g, &f, &noise, 200.0);
        assert_eq!(e[2], noise.0[[2, 2]].norm_sqr());
    }
}
