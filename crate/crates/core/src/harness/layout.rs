use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    draw_link_table, LinkTable, PathlossModel, Point3, Scenario, ScenarioGeometry, BS_HEIGHT_M, SCENARIO_FORMAT_VERSION,
    UE_HEIGHT_M,
};
use crate::env::EnvParams;
use crate::rng::stream;
use crate::{Error, Result};

/// Deployment area of the full grid.
pub const AREA_M: (f64, f64) = (120.0, 50.0);
pub const CARRIER_GHZ: f64 = 6.0;
pub const UES_PER_BS: usize = 10;
const GRID_X: [f64; 6] = [10.0, 30.0, 50.0, 70.0, 90.0, 110.0];
const GRID_Y: [f64; 2] = [15.0, 35.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutPreset {
    /// 4 BSs at the corners of a 100 m x 20 m rectangle.
    L1,
    /// 4 BSs at the corners of a 40 m x 20 m rectangle.
    L2,
    /// All 12 BSs of the grid.
    Full,
    /// Two BSs with identical gains on every link, two UEs each.
    Toy,
}

impl LayoutPreset {
    pub fn n_bs(self) -> usize {
        match self {
            LayoutPreset::L1 | LayoutPreset::L2 => 4,
            LayoutPreset::Full => 12,
            LayoutPreset::Toy => 2,
        }
    }

    /// Indices into the full grid of the BSs this preset keeps.
    fn grid_bs(self) -> Vec<usize> {
        match self {
            LayoutPreset::L1 => vec![0, 5, 6, 11],
            LayoutPreset::L2 => vec![1, 3, 7, 9],
            LayoutPreset::Full => (0..12).collect(),
            LayoutPreset::Toy => vec![],
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            LayoutPreset::L1 => "l1",
            LayoutPreset::L2 => "l2",
            LayoutPreset::Full => "full",
            LayoutPreset::Toy => "toy",
        }
    }
}

impl FromStr for LayoutPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(LayoutPreset::L1),
            "l2" => Ok(LayoutPreset::L2),
            "full" => Ok(LayoutPreset::Full),
            "toy" => Ok(LayoutPreset::Toy),
            other => Err(Error::Config(format!("unknown layout preset {other:?}"))),
        }
    }
}

/// How candidate UEs are placed and associated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UePlacement {
    /// Exactly [`UES_PER_BS`] UEs uniformly inside each BS's Voronoi cell
    /// (clipped to the area).
    #[default]
    VoronoiCell,
    /// UEs uniform over the whole area, each served by its nearest BS; cell
    /// sizes vary.
    NearestBs,
}

/// Gains of the toy preset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyGains {
    /// Linear gain of every BS -> UE link.
    pub ue_gain: f64,
    /// Linear gain of every BS -> BS link.
    pub bs_gain: f64,
}

impl Default for ToyGains {
    fn default() -> Self {
        Self {
            ue_gain: 1e-7,
            bs_gain: 1e-7,
        }
    }
}

/// Environment defaults of the toy preset: short episodes, a 2-slot
/// contention window and a short rate-smoothing window, so that keeping the
/// two average rates balanced (not just avoiding collisions) decides the
/// reward. A mild all-off penalty keeps labels on the scale of the per-slot
/// log-ratio rewards (`|r| <= N ln B`).
pub fn toy_env_params() -> EnvParams {
    EnvParams {
        episode_len: 200,
        cws: 2,
        smoothing_b: 3.0,
        all_off_kappa: 1.0,
        ..EnvParams::with_n_bs(2)
    }
}

pub fn grid_bs_positions() -> Vec<Point3> {
    GRID_Y
        .iter()
        .flat_map(|&y| GRID_X.iter().map(move |&x| Point3::new(x, y, BS_HEIGHT_M)))
        .collect()
}

fn nearest(bs: &[Point3], p: &Point3) -> usize {
    let mut best = 0;
    for (k, b) in bs.iter().enumerate() {
        if b.dist_2d(p) < bs[best].dist_2d(p) {
            best = k;
        }
    }
    best
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    Point3::new(rng.random_range(0.0..AREA_M.0), rng.random_range(0.0..AREA_M.1), UE_HEIGHT_M)
}

/// UE positions and association on the full grid.
pub fn place_ues<R: Rng + ?Sized>(bs: &[Point3], placement: UePlacement, rng: &mut R) -> (Vec<Point3>, Vec<Vec<usize>>) {
    let mut ues = Vec::with_capacity(bs.len() * UES_PER_BS);
    let mut assoc = vec![Vec::new(); bs.len()];
    match placement {
        UePlacement::VoronoiCell => {
            for (b, list) in assoc.iter_mut().enumerate() {
                while list.len() < UES_PER_BS {
                    let p = uniform_point(rng);
                    if nearest(bs, &p) == b {
                        list.push(ues.len());
                        ues.push(p);
                    }
                }
            }
        }
        UePlacement::NearestBs => {
            for _ in 0..bs.len() * UES_PER_BS {
                let p = uniform_point(rng);
                assoc[nearest(bs, &p)].push(ues.len());
                ues.push(p);
            }
        }
    }
    (ues, assoc)
}

fn toy_scenario(seed: u64, gains: ToyGains) -> Result<Scenario> {
    if !(gains.ue_gain > 0.0 && gains.bs_gain > 0.0) {
        return Err(Error::Config("toy gains must be positive".into()));
    }
    let bs = vec![Point3::new(0.0, 0.0, BS_HEIGHT_M), Point3::new(20.0, 0.0, BS_HEIGHT_M)];
    let ues = vec![
        Point3::new(8.0, 2.0, UE_HEIGHT_M),
        Point3::new(8.0, -2.0, UE_HEIGHT_M),
        Point3::new(12.0, 2.0, UE_HEIGHT_M),
        Point3::new(12.0, -2.0, UE_HEIGHT_M),
    ];
    let n_ue = ues.len();
    Ok(Scenario {
        version: SCENARIO_FORMAT_VERSION,
        seed,
        geometry: ScenarioGeometry {
            bs_positions: bs,
            ue_positions: ues,
            association: vec![vec![0, 1], vec![2, 3]],
            carrier_freq_ghz: CARRIER_GHZ,
            layout_id: LayoutPreset::Toy.id().into(),
        },
        pathloss: PathlossModel::default(),
        links: LinkTable {
            bs_ue_gain: vec![vec![gains.ue_gain; n_ue]; 2],
            bs_ue_los: vec![vec![true; n_ue]; 2],
            bs_bs_gain: vec![vec![0.0, gains.bs_gain], vec![gains.bs_gain, 0.0]],
            bs_bs_los: vec![vec![true; 2]; 2],
            norm_ue: gains.ue_gain,
            norm_bs: gains.bs_gain,
        },
    })
}

/// Builds a deployment. Grid presets always draw the full 12-BS grid (UE
/// positions, then every link) from `master_seed` and keep a subset, so L1
/// and L2 of one seed share their UE draws and normalizers.
pub fn build_layout(preset: LayoutPreset, master_seed: u64, placement: UePlacement, toy: ToyGains) -> Result<Scenario> {
    if preset == LayoutPreset::Toy {
        return toy_scenario(master_seed, toy);
    }
    let bs_all = grid_bs_positions();
    let (ues_all, assoc_all) = place_ues(&bs_all, placement, &mut stream(master_seed, "layout-ues", 0));
    let model = PathlossModel::default();
    let full = ScenarioGeometry {
        bs_positions: bs_all,
        ue_positions: ues_all,
        association: assoc_all,
        carrier_freq_ghz: CARRIER_GHZ,
        layout_id: LayoutPreset::Full.id().into(),
    };
    let table = draw_link_table(&full, &model, &mut stream(master_seed, "layout-links", 0))?;

    let keep = preset.grid_bs();
    let ues: Vec<usize> = keep.iter().flat_map(|&b| full.association[b].iter().copied()).collect();
    let mut association = Vec::with_capacity(keep.len());
    let mut next = 0;
    for &b in &keep {
        let n = full.association[b].len();
        association.push((next..next + n).collect());
        next += n;
    }
    let geometry = ScenarioGeometry {
        bs_positions: keep.iter().map(|&b| full.bs_positions[b]).collect(),
        ue_positions: ues.iter().map(|&u| full.ue_positions[u]).collect(),
        association,
        carrier_freq_ghz: CARRIER_GHZ,
        layout_id: preset.id().into(),
    };
    geometry.validate()?;
    Ok(Scenario {
        version: SCENARIO_FORMAT_VERSION,
        seed: master_seed,
        geometry,
        pathloss: model,
        links: table.restrict(&keep, &ues),
    })
}
