//! Monte Carlo outage estimator: draws the fading of every link and counts
//! SINR = γ_u / (1 + Σ_t γ_t) below the threshold. SNRs are already noise
//! normalised, so no separate noise draw is made.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::channel::LinkStatistics;
use crate::error::{Error, Result};
use crate::outage::{OutageMethod, OutageResult};

pub const MIN_SAMPLES: u64 = 10_000;
/// Samples per independent sub-stream.
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Result<Self> {
        let mc = Self { samples, seed };
        mc.validate()?;
        Ok(mc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::Config { field: "samples", reason: format!("must be at least {MIN_SAMPLES}") });
        }
        Ok(())
    }
}

/// One draw of the linear SNR mixture. The Gamma branch is a sum of m unit
/// exponentials scaled to mean `a_mean`.
pub fn sample_snr<R: Rng + ?Sized>(stats: &LinkStatistics, rng: &mut R) -> f64 {
    if rng.random::<f64>() < stats.p_los {
        let m = stats.nakagami_m;
        let total: f64 = (0..m).map(|_| -> f64 { Exp1.sample(rng) }).sum();
        total * stats.a_mean / f64::from(m)
    } else {
        let e: f64 = Exp1.sample(rng);
        e * stats.b_mean
    }
}

fn count_outages(serving: &LinkStatistics, interferers: &[LinkStatistics], gamma_th: f64, seed: u64, chunk: u64, n: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut count = 0;
    for _ in 0..n {
        let signal = sample_snr(serving, &mut rng);
        let interference: f64 = interferers.iter().map(|t| sample_snr(t, &mut rng)).sum();
        if signal < gamma_th * (1.0 + interference) {
            count += 1;
        }
    }
    count
}

/// Empirical outage probability. Samples are split into fixed chunks, each
/// on its own ChaCha stream, so the estimate is identical for any thread
/// count.
pub fn monte_carlo_outage(
    serving: &LinkStatistics,
    interferers: &[LinkStatistics],
    gamma_th: f64,
    mc: &McConfig,
) -> Result<OutageResult> {
    mc.validate()?;
    if !(gamma_th > 0.0 && gamma_th.is_finite()) {
        return Err(Error::Domain(format!("gamma_th must be finite and > 0, got {gamma_th}")));
    }
    serving.validate()?;
    for t in interferers {
        t.validate()?;
    }
    let chunks = mc.samples.div_ceil(CHUNK);
    let count: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let n = CHUNK.min(mc.samples - chunk * CHUNK);
            count_outages(serving, interferers, gamma_th, mc.seed, chunk, n)
        })
        .sum();
    let n = mc.samples as f64;
    let p = count as f64 / n;
    Ok(OutageResult { probability: p, method: OutageMethod::MonteCarlo, std_error: (p * (1.0 - p) / n).sqrt(), laguerre_order_used: 0 })
}
