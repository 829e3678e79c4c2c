//! Scenario parameters.
//!
//! A scenario file is a flat key-value document (TOML syntax) whose keys are
//! exactly the field names of [`ScenarioConfig`]. Missing keys take their
//! default value, unknown keys are rejected:
//!
//! ```text
//! # 1 km x 1 km, 3 operators with 12 base stations each
//! uav_count = 120
//! mno_count = 3
//! gamma_th = 1e-3
//! bs_placement = "uniform"      # or "grid"
//! association = "distance"      # or "expected_path_loss"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest UAV altitude covered by the aerial path-loss model.
pub const MIN_UAV_ALTITUDE_M: f64 = 22.5;
/// Highest UAV altitude covered by the aerial path-loss model.
pub const MAX_UAV_ALTITUDE_M: f64 = 300.0;

/// How base stations are laid out inside the area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BsPlacement {
    #[default]
    Uniform,
    /// Cell centres of the smallest square grid holding `bs_per_mno` sites,
    /// identical for every operator.
    Grid,
}

/// Rule picking the serving base station of a UAV within one operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AssociationRule {
    /// Minimum 3D distance.
    #[default]
    Distance,
    /// Minimum LoS-probability-weighted path loss (dB).
    ExpectedPathLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_width_m: f64,
    pub area_depth_m: f64,
    pub uav_count: usize,
    pub mno_count: usize,
    pub bs_per_mno: usize,
    pub bs_height_m: f64,
    pub uav_alt_min_m: f64,
    pub uav_alt_max_m: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub carrier_ghz: f64,
    /// Nakagami shape of LoS fading. Integer by construction.
    pub nakagami_m: u32,
    /// Linear SINR threshold.
    pub gamma_th: f64,
    pub laguerre_order: usize,
    pub trials: usize,
    pub rng_seed: u64,
    pub bs_placement: BsPlacement,
    pub association: AssociationRule,
    /// Pass budget of the coalition game before it reports non-convergence.
    pub max_passes: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_width_m: 1000.0,
            area_depth_m: 1000.0,
            uav_count: 120,
            mno_count: 3,
            bs_per_mno: 12,
            bs_height_m: 25.0,
            uav_alt_min_m: MIN_UAV_ALTITUDE_M,
            uav_alt_max_m: MAX_UAV_ALTITUDE_M,
            tx_power_dbm: 23.0,
            noise_dbm: -130.0,
            carrier_ghz: 2.0,
            nakagami_m: 2,
            gamma_th: 1e-3,
            laguerre_order: 30,
            trials: 9,
            rng_seed: 2020,
            bs_placement: BsPlacement::Uniform,
            association: AssociationRule::Distance,
            max_passes: 100_000,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Config { field, reason: reason.into() }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Linear transmit-power-to-noise ratio P_u / N_0.
    pub fn power_to_noise(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - self.noise_dbm) / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("area_width_m", self.area_width_m)?;
        positive("area_depth_m", self.area_depth_m)?;
        positive("bs_height_m", self.bs_height_m)?;
        positive("carrier_ghz", self.carrier_ghz)?;
        positive("gamma_th", self.gamma_th)?;
        if self.uav_count < 1 {
            return Err(invalid("uav_count", "must be at least 1"));
        }
        if self.mno_count < 1 {
            return Err(invalid("mno_count", "must be at least 1"));
        }
        if self.bs_per_mno < 1 {
            return Err(invalid("bs_per_mno", "must be at least 1"));
        }
        if self.nakagami_m < 1 {
            return Err(invalid("nakagami_m", "must be at least 1"));
        }
        if !(2..=128).contains(&self.laguerre_order) {
            return Err(invalid("laguerre_order", format!("must be in [2, 128], got {}", self.laguerre_order)));
        }
        if self.trials < 1 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.max_passes < 1 {
            return Err(invalid("max_passes", "must be at least 1"));
        }
        if !(self.uav_alt_min_m >= MIN_UAV_ALTITUDE_M) {
            return Err(invalid("uav_alt_min_m", format!("must be >= {MIN_UAV_ALTITUDE_M}, got {}", self.uav_alt_min_m)));
        }
        if !(self.uav_alt_max_m <= MAX_UAV_ALTITUDE_M) {
            return Err(invalid("uav_alt_max_m", format!("must be <= {MAX_UAV_ALTITUDE_M}, got {}", self.uav_alt_max_m)));
        }
        if self.uav_alt_min_m > self.uav_alt_max_m {
            return Err(invalid("uav_alt_min_m", "must not exceed uav_alt_max_m"));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(invalid("tx_power_dbm", "must be finite"));
        }
        if !self.noise_dbm.is_finite() {
            return Err(invalid("noise_dbm", "must be finite"));
        }
        Ok(())
    }
}
