use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// LOS probability of the indoor open-office model for a horizontal
/// separation of `d2d` meters.
pub fn los_probability(d2d: f64) -> Result<f64> {
    if !(d2d >= 0.0) {
        return Err(Error::InputDomain(format!(
            "2D distance must be non-negative, got {d2d}"
        )));
    }
    Ok(if d2d <= 5.0 {
        1.0
    } else if d2d <= 49.0 {
        (-(d2d - 5.0) / 70.8).exp()
    } else {
        0.54 * (-(d2d - 49.0) / 211.7).exp()
    })
}

/// `a + b*log10(d3d) + c*log10(fc)` plus a log-normal shadowing deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathlossCoefficients {
    pub intercept_db: f64,
    pub distance_slope: f64,
    pub frequency_slope: f64,
    pub shadow_sigma_db: f64,
}

impl PathlossCoefficients {
    fn eval(&self, d3d: f64, fc_ghz: f64) -> f64 {
        self.intercept_db + self.distance_slope * d3d.log10() + self.frequency_slope * fc_ghz.log10()
    }
}

/// InH-Office pathloss. Kept as data so the coefficients travel with
/// every scenario file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathlossModel {
    pub los: PathlossCoefficients,
    pub nlos: PathlossCoefficients,
    /// 3D distances are clamped to this floor before taking logs.
    pub min_distance_m: f64,
}

impl Default for PathlossModel {
    fn default() -> Self {
        Self {
            los: PathlossCoefficients {
                intercept_db: 32.4,
                distance_slope: 17.3,
                frequency_slope: 20.0,
                shadow_sigma_db: 3.0,
            },
            nlos: PathlossCoefficients {
                intercept_db: 17.3,
                distance_slope: 38.3,
                frequency_slope: 24.9,
                shadow_sigma_db: 8.03,
            },
            min_distance_m: 1.0,
        }
    }
}

impl PathlossModel {
    /// Median pathloss in dB (no shadowing). NLOS is floored at the LOS value.
    pub fn pathloss_db(&self, d3d: f64, fc_ghz: f64, is_los: bool) -> Result<f64> {
        if !(d3d > 0.0) {
            return Err(Error::InputDomain(format!(
                "3D distance must be positive, got {d3d}"
            )));
        }
        if !(fc_ghz > 0.0) {
            return Err(Error::InputDomain(format!(
                "carrier frequency must be positive, got {fc_ghz}"
            )));
        }
        let los = self.los.eval(d3d, fc_ghz);
        Ok(if is_los {
            los
        } else {
            los.max(self.nlos.eval(d3d, fc_ghz))
        })
    }

    pub fn shadow_sigma_db(&self, is_los: bool) -> f64 {
        if is_los {
            self.los.shadow_sigma_db
        } else {
            self.nlos.shadow_sigma_db
        }
    }

    pub(crate) fn clamp_distance(&self, d3d: f64) -> f64 {
        d3d.max(self.min_distance_m)
    }
}

/// Pathloss under the default InH-Office coefficients.
pub fn pathloss_db(d3d: f64, fc_ghz: f64, is_los: bool) -> Result<f64> {
    PathlossModel::default().pathloss_db(d3d, fc_ghz, is_los)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn los_probability_branches() {
        assert_eq!(los_probability(0.0).unwrap(), 1.0);
        assert_eq!(los_probability(5.0).unwrap(), 1.0);
        let at49 = los_probability(49.0).unwrap();
        assert!((at49 - (-44.0f64 / 70.8).exp()).abs() < 1e-15);
        assert!((at49 - 0.537155).abs() < 1e-6);
        let beyond = los_probability(100.0).unwrap();
        assert!((beyond - 0.54 * (-51.0f64 / 211.7).exp()).abs() < 1e-15);
    }

    #[test]
    fn los_probability_rejects_negative() {
        assert!(matches!(los_probability(-1e-9), Err(Error::InputDomain(_))));
        assert!(los_probability(f64::NAN).is_err());
    }

    #[test]
    fn pathloss_examples() {
        assert!((pathloss_db(1.0, 1.0, true).unwrap() - 32.4).abs() < 1e-12);
        let los = pathloss_db(10.0, 6.0, true).unwrap();
        assert!((los - (32.4 + 17.3 + 20.0 * 6f64.log10())).abs() < 1e-12);
        assert!((los - 65.26).abs() < 0.01);
        let nlos = pathloss_db(10.0, 6.0, false).unwrap();
        assert!((nlos - (17.3 + 38.3 + 24.9 * 6f64.log10())).abs() < 1e-12);
        assert!((nlos - 74.97).abs() < 0.01);
    }

    #[test]
    fn pathloss_rejects_bad_inputs() {
        assert!(pathloss_db(0.0, 6.0, true).is_err());
        assert!(pathloss_db(1.0, 0.0, true).is_err());
        assert!(pathloss_db(-3.0, 6.0, false).is_err());
    }

    proptest! {
        #[test]
        fn nlos_never_below_los(d in 0.01f64..500.0, fc in 0.5f64..100.0) {
            prop_assert!(pathloss_db(d, fc, false).unwrap() >= pathloss_db(d, fc, true).unwrap());
        }

        #[test]
        fn los_probability_bounded_and_monotone_per_branch(a in 0.0f64..400.0, b in 0.0f64..400.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (plo, phi) = (los_probability(lo).unwrap(), los_probability(hi).unwrap());
            prop_assert!((0.0..=1.0).contains(&plo) && (0.0..=1.0).contains(&phi));
            // The far branch restarts at 0.54 just past 49 m, slightly above
            // the near branch's 0.537, so monotonicity holds per branch only.
            let branch = |d: f64| if d <= 5.0 { 0 } else if d <= 49.0 { 1 } else { 2 };
            if branch(lo) == branch(hi) {
                prop_assert!(phi <= plo);
            }
        }
    }
}
