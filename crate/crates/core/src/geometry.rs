//! Scenario topology: UAV positions, operator base stations and the serving
//! base station of each UAV within every operator.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{distances, los_probability, path_loss_db};
use crate::config::{AssociationRule, BsPlacement, ScenarioConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Altitude above ground (m).
    pub h_u: f64,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    /// Global id, unique across operators.
    pub id: usize,
    pub mno_id: usize,
    pub x: f64,
    pub y: f64,
    pub height_m: f64,
}

/// Immutable snapshot of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub uavs: Vec<UavNode>,
    pub base_stations: Vec<BaseStation>,
    pub mno_count: usize,
    /// `serving[uav_id * mno_count + mno_id]` is the serving BS id.
    serving: Vec<usize>,
}

impl Topology {
    /// Builds a topology from explicit nodes, associating every UAV with one
    /// base station per operator.
    pub fn from_nodes(
        uavs: Vec<UavNode>,
        base_stations: Vec<BaseStation>,
        mno_count: usize,
        rule: AssociationRule,
    ) -> Result<Self> {
        for (i, uav) in uavs.iter().enumerate() {
            if uav.id != i {
                return Err(Error::Topology(format!("UAV at index {i} has id {}", uav.id)));
            }
        }
        for (i, bs) in base_stations.iter().enumerate() {
            if bs.id != i {
                return Err(Error::Topology(format!("base station at index {i} has id {}", bs.id)));
            }
            if bs.mno_id >= mno_count {
                return Err(Error::Topology(format!("base station {i} references unknown MNO {}", bs.mno_id)));
            }
            if !(bs.height_m > 0.0) {
                return Err(Error::Topology(format!("base station {i} has non-positive height")));
            }
        }
        let per_mno: Vec<Vec<BaseStation>> = (0..mno_count)
            .map(|o| base_stations.iter().filter(|b| b.mno_id == o).copied().collect())
            .collect();
        let mut serving = Vec::with_capacity(uavs.len() * mno_count);
        for uav in &uavs {
            for bss in &per_mno {
                serving.push(associate_serving_bs(uav, bss, rule)?);
            }
        }
        Ok(Self { uavs, base_stations, mno_count, serving })
    }

    pub fn serving_bs(&self, uav_id: usize, mno_id: usize) -> usize {
        self.serving[uav_id * self.mno_count + mno_id]
    }

    pub fn uav_count(&self) -> usize {
        self.uavs.len()
    }

    /// Number of (UAV, MNO) associations.
    pub fn serving_len(&self) -> usize {
        self.serving.len()
    }

    /// Line-oriented CSV export: `kind,id,mno_id,x,y,z`. UAV rows leave
    /// `mno_id` empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["kind", "id", "mno_id", "x", "y", "z"])?;
        for u in &self.uavs {
            writer.write_record(["uav".to_string(), u.id.to_string(), String::new(), u.x.to_string(), u.y.to_string(), u.h_u.to_string()])?;
        }
        for b in &self.base_stations {
            writer.write_record([
                "bs".to_string(),
                b.id.to_string(),
                b.mno_id.to_string(),
                b.x.to_string(),
                b.y.to_string(),
                b.height_m.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn association_metric(uav: &UavNode, bs: &BaseStation, rule: AssociationRule) -> Result<f64> {
    let (d2d, d3d) = distances(uav, bs);
    match rule {
        AssociationRule::Distance => Ok(d3d),
        AssociationRule::ExpectedPathLoss => {
            // Ratio of path losses does not depend on the carrier, any fixed value ranks identically.
            let p = los_probability(uav.h_u, d2d)?;
            let d3d = d3d.max(f64::MIN_POSITIVE);
            Ok(p * path_loss_db(uav.h_u, d3d, 2.0, true)? + (1.0 - p) * path_loss_db(uav.h_u, d3d, 2.0, false)?)
        }
    }
}

/// Serving base station of `uav` among `mno_bss` (all from one operator):
/// the minimiser of the association metric, lowest id on ties.
pub fn associate_serving_bs(uav: &UavNode, mno_bss: &[BaseStation], rule: AssociationRule) -> Result<usize> {
    let first = mno_bss
        .first()
        .ok_or_else(|| Error::Topology(format!("no base station available for UAV {}", uav.id)))?;
    if mno_bss.iter().any(|b| b.mno_id != first.mno_id) {
        return Err(Error::Topology("base stations from several operators passed to association".into()));
    }
    let mut best: Option<(f64, usize)> = None;
    for bs in mno_bss {
        let metric = association_metric(uav, bs, rule)?;
        best = match best {
            Some((m, id)) if m < metric || (m == metric && id < bs.id) => Some((m, id)),
            _ => Some((metric, bs.id)),
        };
    }
    Ok(best.expect("non-empty").1)
}

fn grid_sites(count: usize, width: f64, depth: f64) -> Vec<(f64, f64)> {
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    (0..count)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            ((c as f64 + 0.5) * width / cols as f64, (r as f64 + 0.5) * depth / rows as f64)
        })
        .collect()
}

/// Draws a topology. UAVs are uniform over the area with uniform altitude
/// in `[uav_alt_min_m, uav_alt_max_m]`; base stations follow
/// `config.bs_placement`. The same `(config, seed)` always yields the same
/// topology.
pub fn generate_topology(config: &ScenarioConfig, seed: u64) -> Result<Topology> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uavs: Vec<UavNode> = (0..config.uav_count)
        .map(|id| UavNode {
            id,
            x: rng.random_range(0.0..=config.area_width_m),
            y: rng.random_range(0.0..=config.area_depth_m),
            h_u: rng.random_range(config.uav_alt_min_m..=config.uav_alt_max_m),
            tx_power_dbm: config.tx_power_dbm,
        })
        .collect();

    let grid = grid_sites(config.bs_per_mno, config.area_width_m, config.area_depth_m);
    let mut base_stations = Vec::with_capacity(config.mno_count * config.bs_per_mno);
    for mno_id in 0..config.mno_count {
        for k in 0..config.bs_per_mno {
            let (x, y) = match config.bs_placement {
                BsPlacement::Uniform => (
                    rng.random_range(0.0..=config.area_width_m),
                    rng.random_range(0.0..=config.area_depth_m),
                ),
                BsPlacement::Grid => grid[k],
            };
            base_stations.push(BaseStation { id: base_stations.len(), mno_id, x, y, height_m: config.bs_height_m });
        }
    }
    Topology::from_nodes(uavs, base_stations, config.mno_count, config.association)
}
