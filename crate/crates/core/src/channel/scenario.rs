use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::pathloss::{los_probability, PathlossModel};
use crate::units::db_to_linear;
use crate::{Error, Result};

pub const BS_HEIGHT_M: f64 = 3.0;
pub const UE_HEIGHT_M: f64 = 1.5;
pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dist_2d(&self, o: &Point3) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn dist_3d(&self, o: &Point3) -> f64 {
        let d2 = self.dist_2d(o);
        d2.hypot(self.z - o.z)
    }
}

/// Positions of one deployment and the candidate UEs of every BS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    pub bs_positions: Vec<Point3>,
    pub ue_positions: Vec<Point3>,
    /// `association[b]` lists the candidate UE indices served by BS `b`.
    pub association: Vec<Vec<usize>>,
    pub carrier_freq_ghz: f64,
    pub layout_id: String,
}

impl ScenarioGeometry {
    pub fn n_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn n_ue(&self) -> usize {
        self.ue_positions.len()
    }

    /// Checks node heights and that every UE has exactly one serving BS.
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bs_positions.iter().position(|p| p.z != BS_HEIGHT_M) {
            return Err(Error::InputDomain(format!("BS {b} is not at {BS_HEIGHT_M} m")));
        }
        if let Some(u) = self.ue_positions.iter().position(|p| p.z != UE_HEIGHT_M) {
            return Err(Error::InputDomain(format!("UE {u} is not at {UE_HEIGHT_M} m")));
        }
        if self.association.len() != self.n_bs() {
            return Err(Error::InputDomain(format!(
                "association covers {} BSs, geometry has {}",
                self.association.len(),
                self.n_bs()
            )));
        }
        let mut seen = vec![0usize; self.n_ue()];
        for list in &self.association {
            for &u in list {
                let slot = seen.get_mut(u).ok_or_else(|| {
                    Error::InputDomain(format!("associated UE {u} does not exist"))
                })?;
                *slot += 1;
            }
        }
        if let Some(u) = seen.iter().position(|&c| c != 1) {
            return Err(Error::InputDomain(format!(
                "UE {u} appears in {} candidate lists",
                seen[u]
            )));
        }
        Ok(())
    }

    pub fn serving_bs(&self, ue: usize) -> Option<usize> {
        self.association.iter().position(|l| l.contains(&ue))
    }
}

/// Large-scale gains of one configuration: `N` BSs, each with one active UE.
///
/// `g0_ue[[i, j]]` is the linear gain from BS `i` to the active UE of BS `j`;
/// `g0_bs[[i, j]]` the gain from BS `i` to BS `j` with a zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleGains {
    pub g0_ue: Array2<f64>,
    pub g0_bs: Array2<f64>,
    pub los_ue: Array2<bool>,
    pub los_bs: Array2<bool>,
    pub norm_ue: f64,
    pub norm_bs: f64,
}

impl LargeScaleGains {
    pub fn n_bs(&self) -> usize {
        self.g0_ue.nrows()
    }

    /// Builds gains directly (hand-made toys); LOS flags are set to true.
    pub fn from_matrices(g0_ue: Array2<f64>, mut g0_bs: Array2<f64>, norm_ue: f64, norm_bs: f64) -> Result<Self> {
        let n = g0_ue.nrows();
        if g0_ue.ncols() != n || g0_bs.dim() != (n, n) {
            return Err(Error::InputDomain("gain matrices must be N x N".into()));
        }
        if g0_ue.iter().chain(g0_bs.iter()).any(|g| !(*g >= 0.0)) {
            return Err(Error::InputDomain("gains must be non-negative".into()));
        }
        if !(norm_ue > 0.0 && norm_bs > 0.0) {
            return Err(Error::InputDomain("normalizers must be positive".into()));
        }
        for i in 0..n {
            g0_bs[[i, i]] = 0.0;
        }
        Ok(Self {
            g0_ue,
            g0_bs,
            los_ue: Array2::from_elem((n, n), true),
            los_bs: Array2::from_elem((n, n), true),
            norm_ue,
            norm_bs,
        })
    }
}

/// Population standard deviation of `values`. A degenerate (zero-spread)
/// population falls back to its mean, and an all-zero one to 1, so the
/// normalizer is always positive.
pub fn gain_normalizer(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std > 0.0 && std.is_finite() {
        std
    } else if mean > 0.0 {
        mean
    } else {
        1.0
    }
}

struct LinkDraw {
    gain: f64,
    los: bool,
}

fn draw_link<R: Rng + ?Sized>(
    model: &PathlossModel,
    fc_ghz: f64,
    a: &Point3,
    b: &Point3,
    rng: &mut R,
) -> Result<LinkDraw> {
    let p_los = los_probability(a.dist_2d(b))?;
    let los = rng.random::<f64>() < p_los;
    let shadow: f64 = rng.sample::<f64, _>(StandardNormal) * model.shadow_sigma_db(los);
    let d3d = model.clamp_distance(a.dist_3d(b));
    let pl = model.pathloss_db(d3d, fc_ghz, los)?;
    Ok(LinkDraw {
        gain: db_to_linear(-(pl + shadow)),
        los,
    })
}

/// Draws the large-scale gains of one configuration: BS `i` serves
/// `active_ues[i]`.
///
/// Each link draws LOS with the open-office probability, then log-normal
/// shadowing. BS->BS links are reciprocal; the diagonal is zero. The
/// normalizers are the population standard deviations of the drawn BS->UE
/// and off-diagonal BS->BS gains (see [`gain_normalizer`]).
pub fn draw_large_scale_gains<R: Rng + ?Sized>(
    geom: &ScenarioGeometry,
    active_ues: &[usize],
    model: &PathlossModel,
    rng: &mut R,
) -> Result<LargeScaleGains> {
    let n = geom.n_bs();
    if active_ues.len() != n {
        return Err(Error::InputDomain(format!(
            "expected one active UE per BS ({n}), got {}",
            active_ues.len()
        )));
    }
    for (b, &u) in active_ues.iter().enumerate() {
        if u >= geom.n_ue() {
            return Err(Error::InputDomain(format!("active UE {u} of BS {b} does not exist")));
        }
    }
    let fc = geom.carrier_freq_ghz;
    let mut g0_ue = Array2::zeros((n, n));
    let mut los_ue = Array2::from_elem((n, n), false);
    for i in 0..n {
        for j in 0..n {
            let l = draw_link(model, fc, &geom.bs_positions[i], &geom.ue_positions[active_ues[j]], rng)?;
            g0_ue[[i, j]] = l.gain;
            los_ue[[i, j]] = l.los;
        }
    }
    let (g0_bs, los_bs) = draw_bs_links(geom, model, rng)?;
    let norm_ue = gain_normalizer(g0_ue.as_slice().expect("standard layout"));
    let norm_bs = gain_normalizer(&off_diagonal(&g0_bs));
    Ok(LargeScaleGains {
        g0_ue,
        g0_bs,
        los_ue,
        los_bs,
        norm_ue,
        norm_bs,
    })
}

fn draw_bs_links<R: Rng + ?Sized>(
    geom: &ScenarioGeometry,
    model: &PathlossModel,
    rng: &mut R,
) -> Result<(Array2<f64>, Array2<bool>)> {
    let n = geom.n_bs();
    let mut g = Array2::zeros((n, n));
    let mut los = Array2::from_elem((n, n), true);
    for i in 0..n {
        for j in (i + 1)..n {
            let l = draw_link(model, geom.carrier_freq_ghz, &geom.bs_positions[i], &geom.bs_positions[j], rng)?;
            g[[i, j]] = l.gain;
            g[[j, i]] = l.gain;
            los[[i, j]] = l.los;
            los[[j, i]] = l.los;
        }
    }
    Ok((g, los))
}

fn off_diagonal(m: &Array2<f64>) -> Vec<f64> {
    m.indexed_iter()
        .filter(|((i, j), _)| i != j)
        .map(|(_, v)| *v)
        .collect()
}

/// Frozen large-scale gains for every BS->UE and BS->BS pair of a
/// deployment, from which per-configuration [`LargeScaleGains`] are cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkTable {
    /// `bs_ue_gain[b][u]`, linear.
    pub bs_ue_gain: Vec<Vec<f64>>,
    pub bs_ue_los: Vec<Vec<bool>>,
    pub bs_bs_gain: Vec<Vec<f64>>,
    pub bs_bs_los: Vec<Vec<bool>>,
    pub norm_ue: f64,
    pub norm_bs: f64,
}

/// Draws every link of `geom` once. Normalizers are computed over this
/// full population.
pub fn draw_link_table<R: Rng + ?Sized>(
    geom: &ScenarioGeometry,
    model: &PathlossModel,
    rng: &mut R,
) -> Result<LinkTable> {
    let fc = geom.carrier_freq_ghz;
    let mut bs_ue_gain = Vec::with_capacity(geom.n_bs());
    let mut bs_ue_los = Vec::with_capacity(geom.n_bs());
    for bs in &geom.bs_positions {
        let mut gains = Vec::with_capacity(geom.n_ue());
        let mut los = Vec::with_capacity(geom.n_ue());
        for ue in &geom.ue_positions {
            let l = draw_link(model, fc, bs, ue, rng)?;
            gains.push(l.gain);
            los.push(l.los);
        }
        bs_ue_gain.push(gains);
        bs_ue_los.push(los);
    }
    let (g_bs, los_bs) = draw_bs_links(geom, model, rng)?;
    let all_ue: Vec<f64> = bs_ue_gain.iter().flatten().copied().collect();
    Ok(LinkTable {
        norm_ue: gain_normalizer(&all_ue),
        norm_bs: gain_normalizer(&off_diagonal(&g_bs)),
        bs_ue_gain,
        bs_ue_los,
        bs_bs_gain: g_bs.outer_iter().map(|r| r.to_vec()).collect(),
        bs_bs_los: los_bs.outer_iter().map(|r| r.to_vec()).collect(),
    })
}

impl LinkTable {
    /// Gains for BS `i` serving UE `active_ues[i]`, all BSs of the table.
    pub fn select(&self, active_ues: &[usize]) -> Result<LargeScaleGains> {
        let n = self.bs_bs_gain.len();
        if active_ues.len() != n {
            return Err(Error::InputDomain(format!(
                "expected one active UE per BS ({n}), got {}",
                active_ues.len()
            )));
        }
        let n_ue = self.bs_ue_gain.first().map_or(0, Vec::len);
        if let Some(&u) = active_ues.iter().find(|&&u| u >= n_ue) {
            return Err(Error::InputDomain(format!("active UE {u} does not exist")));
        }
        Ok(LargeScaleGains {
            g0_ue: Array2::from_shape_fn((n, n), |(i, j)| self.bs_ue_gain[i][active_ues[j]]),
            g0_bs: Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { self.bs_bs_gain[i][j] }),
            los_ue: Array2::from_shape_fn((n, n), |(i, j)| self.bs_ue_los[i][active_ues[j]]),
            los_bs: Array2::from_shape_fn((n, n), |(i, j)| self.bs_bs_los[i][j]),
            norm_ue: self.norm_ue,
            norm_bs: self.norm_bs,
        })
    }

    /// Restricts the table to a subset of BSs and UEs (indices into the
    /// original), keeping the normalizers of the full population.
    pub fn restrict(&self, bs: &[usize], ues: &[usize]) -> LinkTable {
        LinkTable {
            bs_ue_gain: bs.iter().map(|&b| ues.iter().map(|&u| self.bs_ue_gain[b][u]).collect()).collect(),
            bs_ue_los: bs.iter().map(|&b| ues.iter().map(|&u| self.bs_ue_los[b][u]).collect()).collect(),
            bs_bs_gain: bs.iter().map(|&b| bs.iter().map(|&c| self.bs_bs_gain[b][c]).collect()).collect(),
            bs_bs_los: bs.iter().map(|&b| bs.iter().map(|&c| self.bs_bs_los[b][c]).collect()).collect(),
            norm_ue: self.norm_ue,
            norm_bs: self.norm_bs,
        }
    }
}

/// A scenario file: geometry, frozen link gains, normalizers and the seed
/// and pathloss coefficients that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: u32,
    pub seed: u64,
    pub geometry: ScenarioGeometry,
    pub pathloss: PathlossModel,
    pub links: LinkTable,
}

impl Scenario {
    pub fn n_bs(&self) -> usize {
        self.geometry.n_bs()
    }

    pub fn gains_for(&self, active_ues: &[usize]) -> Result<LargeScaleGains> {
        self.links.select(active_ues)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        if sc.version != SCENARIO_FORMAT_VERSION {
            return Err(Error::Version {
                found: sc.version,
                expected: SCENARIO_FORMAT_VERSION,
            });
        }
        sc.geometry.validate()?;
        Ok(sc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair_geometry(d2d: f64) -> ScenarioGeometry {
        ScenarioGeometry {
            bs_positions: vec![Point3::new(0.0, 0.0, BS_HEIGHT_M)],
            ue_positions: vec![Point3::new(d2d, 0.0, UE_HEIGHT_M)],
            association: vec![vec![0]],
            carrier_freq_ghz: 6.0,
            layout_id: "pair".into(),
        }
    }

    fn two_cell() -> ScenarioGeometry {
        ScenarioGeometry {
            bs_positions: vec![Point3::new(0.0, 0.0, BS_HEIGHT_M), Point3::new(20.0, 0.0, BS_HEIGHT_M)],
            ue_positions: vec![
                Point3::new(3.0, 4.0, UE_HEIGHT_M),
                Point3::new(18.0, -2.0, UE_HEIGHT_M),
                Point3::new(25.0, 1.0, UE_HEIGHT_M),
            ],
            association: vec![vec![0], vec![1, 2]],
            carrier_freq_ghz: 6.0,
            layout_id: "two".into(),
        }
    }

    #[test]
    fn validate_catches_bad_geometry() {
        assert!(two_cell().validate().is_ok());
        let mut g = two_cell();
        g.association = vec![vec![0, 1], vec![1, 2]];
        assert!(g.validate().is_err());
        let mut g = two_cell();
        g.association = vec![vec![0], vec![1]];
        assert!(g.validate().is_err());
        let mut g = two_cell();
        g.ue_positions[0].z = 1.6;
        assert!(g.validate().is_err());
    }

    #[test]
    fn coincident_nodes_clamp_to_one_meter() {
        let model = PathlossModel::default();
        let d3d = model.clamp_distance(0.0);
        assert_eq!(d3d, 1.0);
        assert_eq!(los_probability(0.0).unwrap(), 1.0);
        let gain = db_to_linear(-model.pathloss_db(d3d, 6.0, true).unwrap());
        let expected = 10f64.powf(-(32.4 + 20.0 * 6f64.log10()) / 10.0);
        assert!((gain - expected).abs() < 1e-15 * expected.max(1.0));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let g = two_cell();
        let m = PathlossModel::default();
        let a = draw_large_scale_gains(&g, &[0, 2], &m, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = draw_large_scale_gains(&g, &[0, 2], &m, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let c = draw_large_scale_gains(&g, &[0, 2], &m, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gains_invariants() {
        let g = two_cell();
        let m = PathlossModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let lg = draw_large_scale_gains(&g, &[0, 1], &m, &mut rng).unwrap();
            assert!(lg.g0_ue.iter().chain(lg.g0_bs.iter()).all(|v| *v >= 0.0));
            assert_eq!(lg.g0_bs[[0, 0]], 0.0);
            assert_eq!(lg.g0_bs[[1, 1]], 0.0);
            assert_eq!(lg.g0_bs[[0, 1]], lg.g0_bs[[1, 0]]);
            assert!(lg.norm_ue > 0.0 && lg.norm_bs > 0.0);
        }
    }

    #[test]
    fn wrong_active_count_is_rejected() {
        let g = two_cell();
        let m = PathlossModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(draw_large_scale_gains(&g, &[0], &m, &mut rng).is_err());
        assert!(draw_large_scale_gains(&g, &[0, 7], &m, &mut rng).is_err());
    }

    #[test]
    fn los_fraction_matches_probability() {
        let g = pair_geometry(30.0);
        let m = PathlossModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let los = (0..draws)
            .filter(|_| draw_large_scale_gains(&g, &[0], &m, &mut rng).unwrap().los_ue[[0, 0]])
            .count();
        let frac = los as f64 / draws as f64;
        let p = (-25.0f64 / 70.8).exp();
        assert!((frac - p).abs() < 0.01, "LOS fraction {frac} vs {p}");
    }

    #[test]
    fn normalizer_fallbacks() {
        assert!((gain_normalizer(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(gain_normalizer(&[2.0, 2.0]), 2.0);
        assert_eq!(gain_normalizer(&[0.0, 0.0]), 1.0);
        assert_eq!(gain_normalizer(&[]), 1.0);
    }

    #[test]
    fn link_table_select_matches_layout() {
        let g = two_cell();
        let m = PathlossModel::default();
        let table = draw_link_table(&g, &m, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let lg = table.select(&[0, 2]).unwrap();
        assert_eq!(lg.g0_ue[[1, 0]], table.bs_ue_gain[1][0]);
        assert_eq!(lg.g0_ue[[0, 1]], table.bs_ue_gain[0][2]);
        assert_eq!(lg.g0_bs[[0, 1]], table.bs_bs_gain[0][1]);
        assert_eq!(lg.norm_ue, table.norm_ue);
        let sub = table.restrict(&[1], &[1, 2]);
        assert_eq!(sub.bs_ue_gain, vec![vec![table.bs_ue_gain[1][1], table.bs_ue_gain[1][2]]]);
    }

    #[test]
    fn scenario_json_round_trip_is_lossless() {
        let geometry = two_cell();
        let pathloss = PathlossModel::default();
        let links = draw_link_table(&geometry, &pathloss, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let sc = Scenario {
            version: SCENARIO_FORMAT_VERSION,
            seed: 77,
            geometry,
            pathloss,
            links,
        };
        let text = sc.to_json().unwrap();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back, sc);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn scenario_version_is_checked() {
        let geometry = two_cell();
        let pathloss = PathlossModel::default();
        let links = draw_link_table(&geometry, &pathloss, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let sc = Scenario { version: 99, seed: 0, geometry, pathloss, links };
        assert!(matches!(Scenario::from_json(&sc.to_json().unwrap()), Err(Error::Version { .. })));
    }
}
