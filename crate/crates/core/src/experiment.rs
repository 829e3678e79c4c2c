//! Sweeps over UAV and operator counts, paired random-versus-game runs and
//! the closed-form against Monte Carlo validation gate. Results are emitted
//! as long-format CSV rows.

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::LinkStatistics;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::game::{CoalitionPartition, GameContext};
use crate::geometry::generate_topology;
use crate::montecarlo::{monte_carlo_outage, McConfig};
use crate::outage::{outage_closed_form_adaptive, outage_no_interference, outage_serving_residues, OutageMethod};

/// Interferer counts cycled through by the validation instances.
pub const VALIDATION_INTERFERERS: [usize; 5] = [0, 1, 3, 5, 8];
pub const MIN_VALIDATION_SAMPLES: u64 = 100_000;
/// Absolute floor of the validation tolerance.
pub const VALIDATION_FLOOR: f64 = 5e-3;
/// Fraction of instances that must agree for the gate to pass.
pub const VALIDATION_PASS_FRACTION: f64 = 0.95;

/// splitmix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one sweep cell and trial.
pub fn cell_seed(base_seed: u64, uav_count: usize, mno_count: usize, trial: usize) -> u64 {
    [uav_count as u64, mno_count as u64, trial as u64].iter().fold(mix64(base_seed), |acc, &v| mix64(acc ^ v))
}

/// Seeds of the topology and of the initial assignment of one cell.
pub fn cell_seeds(base_seed: u64, uav_count: usize, mno_count: usize, trial: usize) -> (u64, u64) {
    let seed = cell_seed(base_seed, uav_count, mno_count, trial);
    (mix64(seed ^ 0x746f_706f), mix64(seed ^ 0x6173_7369))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub uav_counts: Vec<usize>,
    pub mno_counts: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub output_path: Option<PathBuf>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.uav_counts.is_empty() || self.uav_counts.contains(&0) {
            return Err(Error::Config { field: "uav_counts", reason: "must be a non-empty list of positive counts".into() });
        }
        if self.mno_counts.is_empty() || self.mno_counts.contains(&0) {
            return Err(Error::Config { field: "mno_counts", reason: "must be a non-empty list of positive counts".into() });
        }
        if self.trials == 0 {
            return Err(Error::Config { field: "trials", reason: "must be at least 1".into() });
        }
        Ok(())
    }

    /// (uav_count, mno_count, trial) in output order.
    pub fn cells(&self) -> Vec<(usize, usize, usize)> {
        let mut cells = Vec::new();
        for &u in &self.uav_counts {
            for &o in &self.mno_counts {
                for t in 0..self.trials {
                    cells.push((u, o, t));
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub random_mean_outage: f64,
    pub game_mean_outage: f64,
    pub random_sum_payoff: f64,
    pub game_sum_payoff: f64,
    pub transfer_count: usize,
    pub passes: usize,
    pub strictly_increasing: bool,
    /// Admissible transfers left on the final partition, when audited.
    pub remaining_admissible: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub uav_count: usize,
    pub mno_count: usize,
    pub trial: usize,
    pub result: std::result::Result<CellMetrics, String>,
}

/// Runs the random baseline and the game on one cell. The game starts from
/// the baseline assignment so the two share topology and initial state.
pub fn run_cell(config: &ScenarioConfig, cell: (usize, usize, usize), base_seed: u64, audit: bool) -> CellOutcome {
    let (uav_count, mno_count, trial) = cell;
    let result = (|| -> Result<CellMetrics> {
        let config = ScenarioConfig { uav_count, mno_count, ..config.clone() };
        let (topology_seed, assignment_seed) = cell_seeds(base_seed, uav_count, mno_count, trial);
        let topology = generate_topology(&config, topology_seed)?;
        let ctx = GameContext::new(&topology, &config)?;
        let baseline = ctx.random_assignment(assignment_seed)?;
        let (game, trace) = ctx.run_from(baseline.clone())?;
        let remaining_admissible = if audit { Some(ctx.admissible_transfers(&game)?.len()) } else { None };
        Ok(CellMetrics {
            random_mean_outage: baseline.mean_outage(),
            game_mean_outage: game.mean_outage(),
            random_sum_payoff: baseline.sum_payoff(),
            game_sum_payoff: game.sum_payoff(),
            transfer_count: trace.transfers.len(),
            passes: trace.passes,
            strictly_increasing: trace.strictly_increasing(),
            remaining_admissible,
        })
    })();
    if let Err(e) = &result {
        log::error!("cell uavs={uav_count} mnos={mno_count} trial={trial} failed: {e}");
    }
    CellOutcome { uav_count, mno_count, trial, result: result.map_err(|e| e.to_string()) }
}

/// Runs every cell of `spec` in parallel; outcomes come back in cell order.
pub fn run_cells(spec: &SweepSpec, config: &ScenarioConfig, audit: bool) -> Result<Vec<CellOutcome>> {
    spec.validate()?;
    config.validate()?;
    Ok(spec.cells().into_par_iter().map(|cell| run_cell(config, cell, spec.base_seed, audit)).collect())
}

pub const METHOD_RANDOM: &str = "random";
pub const METHOD_GAME: &str = "game";
pub const METHOD_ERROR: &str = "error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageRow {
    pub uav_count: usize,
    pub mno_count: usize,
    pub trial: usize,
    pub method: String,
    pub mean_outage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffRow {
    pub mno_count: usize,
    pub trial: usize,
    pub method: String,
    pub sum_payoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub uav_count: usize,
    pub mno_count: usize,
    pub trial: usize,
    pub transfer_count: Option<usize>,
}

pub fn outage_rows(outcomes: &[CellOutcome]) -> Vec<OutageRow> {
    let mut rows = Vec::new();
    for c in outcomes {
        let row = |method: &str, mean_outage| OutageRow {
            uav_count: c.uav_count,
            mno_count: c.mno_count,
            trial: c.trial,
            method: method.into(),
            mean_outage,
        };
        match &c.result {
            Ok(m) => {
                rows.push(row(METHOD_RANDOM, Some(m.random_mean_outage)));
                rows.push(row(METHOD_GAME, Some(m.game_mean_outage)));
            }
            Err(_) => rows.push(row(METHOD_ERROR, None)),
        }
    }
    rows
}

pub fn payoff_rows(outcomes: &[CellOutcome]) -> Vec<PayoffRow> {
    let mut rows = Vec::new();
    for c in outcomes {
        let row = |method: &str, sum_payoff| PayoffRow { mno_count: c.mno_count, trial: c.trial, method: method.into(), sum_payoff };
        match &c.result {
            Ok(m) => {
                rows.push(row(METHOD_RANDOM, Some(m.random_sum_payoff)));
                rows.push(row(METHOD_GAME, Some(m.game_sum_payoff)));
            }
            Err(_) => rows.push(row(METHOD_ERROR, None)),
        }
    }
    rows
}

pub fn transfer_rows(outcomes: &[CellOutcome]) -> Vec<TransferRow> {
    outcomes
        .iter()
        .map(|c| TransferRow {
            uav_count: c.uav_count,
            mno_count: c.mno_count,
            trial: c.trial,
            transfer_count: c.result.as_ref().ok().map(|m| m.transfer_count),
        })
        .collect()
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>, R: std::io::Read>(input: R) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_reader(input);
    Ok(reader.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

fn write_to_spec_path<T: Serialize>(spec: &SweepSpec, rows: &[T]) -> Result<()> {
    if let Some(path) = &spec.output_path {
        write_rows(rows, std::fs::File::create(path)?)?;
    }
    Ok(())
}

/// Mean outage sweep: one random and one game row per cell and trial.
pub fn sweep_outage(spec: &SweepSpec, config: &ScenarioConfig) -> Result<Vec<OutageRow>> {
    let rows = outage_rows(&run_cells(spec, config, false)?);
    write_to_spec_path(spec, &rows)?;
    Ok(rows)
}

/// Total payoff sweep: one random and one game row per cell and trial.
pub fn sweep_payoff(spec: &SweepSpec, config: &ScenarioConfig) -> Result<Vec<PayoffRow>> {
    if spec.uav_counts.len() != 1 {
        return Err(Error::Config { field: "uav_counts", reason: "the payoff sweep takes a single UAV count".into() });
    }
    let rows = payoff_rows(&run_cells(spec, config, false)?);
    write_to_spec_path(spec, &rows)?;
    Ok(rows)
}

/// Transfer count sweep: one row per cell and trial.
pub fn sweep_transfers(spec: &SweepSpec, config: &ScenarioConfig) -> Result<Vec<TransferRow>> {
    let rows = transfer_rows(&run_cells(spec, config, false)?);
    write_to_spec_path(spec, &rows)?;
    Ok(rows)
}

/// Writes `uav_id,random_mno,game_mno,random_payoff,game_payoff`.
pub fn write_partition_csv<W: Write>(baseline: &CoalitionPartition, game: &CoalitionPartition, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["uav_id", "random_mno", "game_mno", "random_payoff", "game_payoff"])?;
    for u in 0..game.uav_count() {
        writer.write_record([
            u.to_string(),
            baseline.assignment[u].to_string(),
            game.assignment[u].to_string(),
            format!("{:e}", baseline.payoffs[u]),
            format!("{:e}", game.payoffs[u]),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub index: usize,
    pub interferers: usize,
    pub gamma_th: f64,
    pub method: &'static str,
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// |closed form - no-interference form| for empty interferer sets.
    pub no_interference_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }

    pub fn is_pass(&self) -> bool {
        self.passed() as f64 >= VALIDATION_PASS_FRACTION * self.rows.len() as f64
    }

    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{:>5} {:>3} {:>11} {:>16} {:>11} {:>11} {:>10} {:>10} {:>4}", "#", "N", "gamma_th", "method", "closed", "mc", "delta", "tol", "ok")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:>5} {:>3} {:>11.4e} {:>16} {:>11.5e} {:>11.5e} {:>10.3e} {:>10.3e} {:>4}",
                r.index,
                r.interferers,
                r.gamma_th,
                r.method,
                r.closed_form,
                r.monte_carlo,
                r.delta,
                r.tolerance,
                if r.pass { "pass" } else { "FAIL" }
            )?;
        }
        writeln!(out, "{}/{} instances within tolerance: {}", self.passed(), self.rows.len(), if self.is_pass() { "PASS" } else { "FAIL" })
    }
}

/// Random link statistics with means spread over ten decades.
pub fn random_instance(rng: &mut ChaCha8Rng, interferers: usize, m: u32) -> Result<(LinkStatistics, Vec<LinkStatistics>, f64)> {
    let draw = |rng: &mut ChaCha8Rng| -> Result<LinkStatistics> {
        let p: f64 = rng.random_range(0.0..1.0);
        let a = 10f64.powf(rng.random_range(-2.0..8.0));
        let b = 10f64.powf(rng.random_range(-2.0..8.0));
        LinkStatistics::new(p, a, b, m)
    };
    let serving = draw(rng)?;
    let list = (0..interferers).map(|_| draw(rng)).collect::<Result<Vec<_>>>()?;
    let gamma_th = 10f64.powf(rng.random_range(-4.0..1.0));
    Ok((serving, list, gamma_th))
}

/// Closed form against Monte Carlo on `instances` random instances. The
/// partial-fraction route is used when its rounding bound allows, the
/// serving-residue route otherwise.
pub fn validate_outage(instances: usize, samples: u64, seed: u64, laguerre_order: usize) -> Result<ValidationReport> {
    if samples < MIN_VALIDATION_SAMPLES {
        return Err(Error::Config { field: "samples", reason: format!("must be at least {MIN_VALIDATION_SAMPLES}") });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(instances);
    for index in 0..instances {
        let n = VALIDATION_INTERFERERS[index % VALIDATION_INTERFERERS.len()];
        let (serving, interferers, gamma_th) = random_instance(&mut rng, n, 2)?;
        let analytic = match outage_closed_form_adaptive(&serving, &interferers, gamma_th, laguerre_order) {
            Ok(r) => r,
            Err(Error::NumericalInstability { raw, error_bound }) => {
                log::info!("instance {index}: partial fractions refused (raw {raw:e}, bound {error_bound:e})");
                outage_serving_residues(&serving, &interferers, gamma_th)?
            }
            Err(e) => return Err(e),
        };
        let mc = monte_carlo_outage(&serving, &interferers, gamma_th, &McConfig::new(samples, mix64(seed ^ index as u64))?)?;
        let delta = (analytic.probability - mc.probability).abs();
        let tolerance = (3.0 * mc.std_error).max(VALIDATION_FLOOR);
        let no_interference_delta = if n == 0 {
            Some((analytic.probability - outage_no_interference(&serving, gamma_th)?.probability).abs())
        } else {
            None
        };
        let consistent = no_interference_delta.is_none_or(|d| d <= 1e-9);
        rows.push(ValidationRow {
            index,
            interferers: n,
            gamma_th,
            method: if analytic.method == OutageMethod::ClosedForm { "partial_fraction" } else { "serving_residues" },
            closed_form: analytic.probability,
            monte_carlo: mc.probability,
            std_error: mc.std_error,
            delta,
            tolerance,
            pass: delta <= tolerance && consistent,
            no_interference_delta,
        });
    }
    Ok(ValidationReport { rows })
}
