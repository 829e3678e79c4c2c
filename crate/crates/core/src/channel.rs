//! Aerial-UE propagation model: LoS probability, LoS/NLoS path loss and the
//! per-link mean SNR statistics consumed by the outage computation.
//!
//! Conventions: `d2d` is horizontal distance, `d3d` the full Euclidean
//! distance between UAV and base-station antenna, carrier frequency in GHz,
//! altitudes in metres.

use std::f64::consts::PI;

use crate::config::{ScenarioConfig, MAX_UAV_ALTITUDE_M, MIN_UAV_ALTITUDE_M};
use crate::error::{Error, Result};
use crate::geometry::{BaseStation, Topology, UavNode};

/// Mean-SNR description of one UAV-to-BS link.
///
/// With probability `p_los` the instantaneous SNR is Gamma distributed with
/// shape `nakagami_m` and mean `a_mean` (Nakagami-m power); otherwise it is
/// exponential with mean `b_mean` (Rayleigh power). Both means are linear and
/// already normalised by the noise power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStatistics {
    pub p_los: f64,
    pub a_mean: f64,
    pub b_mean: f64,
    pub nakagami_m: u32,
}

impl LinkStatistics {
    pub fn new(p_los: f64, a_mean: f64, b_mean: f64, nakagami_m: u32) -> Result<Self> {
        let stats = Self { p_los, a_mean, b_mean, nakagami_m };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_los) {
            return Err(Error::Domain(format!("p_los must lie in [0, 1], got {}", self.p_los)));
        }
        if !(self.a_mean > 0.0 && self.b_mean > 0.0) {
            return Err(Error::Domain(format!(
                "mean SNRs must be positive, got a = {}, b = {}",
                self.a_mean, self.b_mean
            )));
        }
        if self.nakagami_m < 1 {
            return Err(Error::Domain("nakagami_m must be at least 1".into()));
        }
        Ok(())
    }

    /// Mean of the SNR mixture.
    pub fn mean_snr(&self) -> f64 {
        self.p_los * self.a_mean + (1.0 - self.p_los) * self.b_mean
    }

    /// Laplace transform E[exp(-s·γ)] of the SNR mixture, for s ≥ 0.
    pub fn laplace(&self, s: f64) -> f64 {
        let m = f64::from(self.nakagami_m);
        self.p_los * (1.0 + s * self.a_mean / m).powi(-(self.nakagami_m as i32))
            + (1.0 - self.p_los) / (1.0 + s * self.b_mean)
    }
}

fn check_altitude(h_u: f64) -> Result<()> {
    if (MIN_UAV_ALTITUDE_M..=MAX_UAV_ALTITUDE_M).contains(&h_u) {
        Ok(())
    } else {
        Err(Error::ModelApplicability { altitude_m: h_u })
    }
}

/// Probability of a line-of-sight condition for a UAV at altitude `h_u`
/// and horizontal distance `d2d` from the base station.
pub fn los_probability(h_u: f64, d2d: f64) -> Result<f64> {
    check_altitude(h_u)?;
    if !(d2d >= 0.0) {
        return Err(Error::Domain(format!("horizontal distance must be >= 0, got {d2d}")));
    }
    if h_u > 100.0 {
        return Ok(1.0);
    }
    let log_h = h_u.log10();
    let d1 = (460.0 * log_h - 700.0).max(18.0);
    if d2d <= d1 {
        return Ok(1.0);
    }
    let p1 = 4300.0 * log_h - 3800.0;
    let ratio = d1 / d2d;
    Ok((ratio + (-d2d / p1).exp() * (1.0 - ratio)).clamp(0.0, 1.0))
}

/// Path loss in dB for the LoS (`los = true`) or NLoS branch.
pub fn path_loss_db(h_u: f64, d3d: f64, fc_ghz: f64, los: bool) -> Result<f64> {
    if !(d3d > 0.0) {
        return Err(Error::Domain(format!("3D distance must be > 0, got {d3d}")));
    }
    if !(fc_ghz > 0.0) {
        return Err(Error::Domain(format!("carrier frequency must be > 0, got {fc_ghz}")));
    }
    check_altitude(h_u)?;
    let log_d = d3d.log10();
    Ok(if los {
        28.0 + 22.0 * log_d + 20.0 * fc_ghz.log10()
    } else {
        -17.5 + (46.0 - 7.0 * h_u.log10()) * log_d + 20.0 * (40.0 * PI * fc_ghz / 3.0).log10()
    })
}

/// Horizontal and 3D distance between a UAV and a base station.
pub fn distances(uav: &UavNode, bs: &BaseStation) -> (f64, f64) {
    let d2d = (uav.x - bs.x).hypot(uav.y - bs.y);
    let d3d = d2d.hypot(uav.h_u - bs.height_m);
    (d2d, d3d)
}

pub fn link_statistics(uav: &UavNode, bs: &BaseStation, config: &ScenarioConfig) -> Result<LinkStatistics> {
    let (d2d, d3d) = distances(uav, bs);
    let p_los = los_probability(uav.h_u, d2d)?;
    let budget = 10f64.powf((uav.tx_power_dbm - config.noise_dbm) / 10.0);
    let pl_los = path_loss_db(uav.h_u, d3d, config.carrier_ghz, true)?;
    let pl_nlos = path_loss_db(uav.h_u, d3d, config.carrier_ghz, false)?;
    LinkStatistics::new(
        p_los,
        budget * 10f64.powf(-pl_los / 10.0),
        budget * 10f64.powf(-pl_nlos / 10.0),
        config.nakagami_m,
    )
}

/// Link statistics of every (UAV, BS) pair of a topology, computed once.
#[derive(Debug, Clone)]
pub struct LinkTable {
    bs_count: usize,
    stats: Vec<LinkStatistics>,
}

impl LinkTable {
    pub fn build(topology: &Topology, config: &ScenarioConfig) -> Result<Self> {
        let bs_count = topology.base_stations.len();
        let mut stats = Vec::with_capacity(topology.uavs.len() * bs_count);
        for uav in &topology.uavs {
            for bs in &topology.base_stations {
                stats.push(link_statistics(uav, bs, config)?);
            }
        }
        Ok(Self { bs_count, stats })
    }

    pub fn get(&self, uav_id: usize, bs_id: usize) -> &LinkStatistics {
        &self.stats[uav_id * self.bs_count + bs_id]
    }

    /// Writes `uav_id,mno_id,bs_id,p_los,a_mean,b_mean` for every serving link.
    pub fn write_serving_csv<W: std::io::Write>(&self, topology: &Topology, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["uav_id", "mno_id", "bs_id", "p_los", "a_mean", "b_mean"])?;
        for uav in &topology.uavs {
            for mno in 0..topology.mno_count {
                let bs = topology.serving_bs(uav.id, mno);
                let s = self.get(uav.id, bs);
                writer.write_record([
                    uav.id.to_string(),
                    mno.to_string(),
                    bs.to_string(),
                    format!("{:e}", s.p_los),
                    format!("{:e}", s.a_mean),
                    format!("{:e}", s.b_mean),
                ])?;
            }
        }
        writer.flush()?;
        Ok(())
    }
}
