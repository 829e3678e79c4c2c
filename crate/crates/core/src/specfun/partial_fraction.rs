//! Partial-fraction form of the SNR Laplace transforms entering the
//! closed-form outage expression.
//!
//! For a link with LoS probability p, Nakagami shape m and branch means A, B
//! write α = m/A and β = 1/B. The Laplace transform of its SNR is
//!
//! ```text
//!     M(s) = p α^m / (s + α)^m + (1 - p) β / (s + β)
//! ```
//!
//! The serving link is already in partial-fraction form:
//! `β_1j` is the coefficient of (s + α)^-j (only j = m is non-zero) and
//! `β_21` the coefficient of (s + β)^-1. The aggregate interference
//! I = Σ_i γ_i has transform Π_i M_i(s), a strictly proper rational function
//! with an order-m pole at -α_i and a simple pole at -β_i per interferer:
//!
//! ```text
//!     Π_i M_i(s) = Σ_i δ'_i / (s + β_i) + Σ_i Σ_j δ_ij / (s + α_i)^j
//! ```
//!
//! so the density of I is Σ_i δ'_i e^(-β_i x) + Σ_ij δ_ij x^(j-1) e^(-α_i x) / (j-1)!.
//! Branches with zero weight (p = 0 or p = 1) carry no pole.

use crate::channel::LinkStatistics;
use crate::error::{Error, Result};

/// Relative separation below which two poles count as coincident.
pub const POLE_SEPARATION: f64 = 1e-9;
/// Relative nudge applied to a mean whose pole coincides with another.
pub const POLE_PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractionCoefficients {
    pub nakagami_m: u32,
    /// `beta1[j - 1]` multiplies (s + α_u)^-j.
    pub beta1: Vec<f64>,
    pub beta21: f64,
    /// `delta_prime[i]` multiplies (s + β_i)^-1.
    pub delta_prime: Vec<f64>,
    /// `delta[i][j - 1]` multiplies (s + α_i)^-j.
    pub delta: Vec<Vec<f64>>,
    /// Serving decay rates (α_u, β_u).
    pub serving_rates: (f64, f64),
    /// Interferer decay rates (α_i, β_i).
    pub interferer_rates: Vec<(f64, f64)>,
}

impl PartialFractionCoefficients {
    pub fn interferer_count(&self) -> usize {
        self.delta_prime.len()
    }

    /// Serving transform rebuilt from its coefficients.
    pub fn serving_transform(&self, s: f64) -> f64 {
        let (alpha, beta) = self.serving_rates;
        let los: f64 = self.beta1.iter().enumerate().map(|(j, b)| b / (s + alpha).powi(j as i32 + 1)).sum();
        los + self.beta21 / (s + beta)
    }

    /// Interference transform rebuilt from its coefficients. With no
    /// interferers the aggregate is identically zero and the transform is 1.
    pub fn interference_transform(&self, s: f64) -> f64 {
        if self.interferer_count() == 0 {
            return 1.0;
        }
        let mut total = 0.0;
        for (i, &(alpha, beta)) in self.interferer_rates.iter().enumerate() {
            total += self.delta_prime[i] / (s + beta);
            for (j, d) in self.delta[i].iter().enumerate() {
                total += d / (s + alpha).powi(j as i32 + 1);
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy)]
struct Pole {
    rate: f64,
    owner: usize,
    branch: Branch,
}

fn rates(stats: &LinkStatistics, m: u32) -> (f64, f64) {
    (f64::from(m) / stats.a_mean, 1.0 / stats.b_mean)
}

fn present_poles(interferers: &[LinkStatistics], m: u32) -> Vec<Pole> {
    let mut poles = Vec::with_capacity(2 * interferers.len());
    for (owner, stats) in interferers.iter().enumerate() {
        let (alpha, beta) = rates(stats, m);
        if stats.p_los > 0.0 {
            poles.push(Pole { rate: alpha, owner, branch: Branch::Los });
        }
        if stats.p_los < 1.0 {
            poles.push(Pole { rate: beta, owner, branch: Branch::Nlos });
        }
    }
    poles
}

fn find_coincident(poles: &[Pole]) -> Option<(Pole, Pole)> {
    let mut sorted = poles.to_vec();
    sorted.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    sorted
        .windows(2)
        .find(|w| (w[1].rate - w[0].rate).abs() <= POLE_SEPARATION * w[1].rate.abs())
        .map(|w| (w[0], w[1]))
}

/// Truncated power series product, keeping orders `0..len`.
fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len();
    let mut out = vec![0.0; len];
    for (i, x) in a.iter().enumerate() {
        for (k, y) in b.iter().take(len - i).enumerate() {
            out[i + k] += x * y;
        }
    }
    out
}

/// Taylor coefficients in h of `leading · (1 + h/d)^-order`, orders `0..len`.
fn inverse_power_series(leading: f64, d: f64, order: u32, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut c = leading;
    for q in 0..len {
        out.push(c);
        // binom(-order, q+1) / binom(-order, q) = -(order + q) / (q + 1)
        c *= -f64::from(order + q as u32) / ((q + 1) as f64 * d);
    }
    out
}

/// Taylor series of the interferer transform M_t(s0 + h), orders `0..len`.
pub(crate) fn factor_series(stats: &LinkStatistics, m: u32, s0: f64, len: usize) -> Vec<f64> {
    let (alpha, beta) = rates(stats, m);
    let mut out = vec![0.0; len];
    if stats.p_los > 0.0 {
        let d = s0 + alpha;
        let los = inverse_power_series(stats.p_los * (alpha / d).powi(m as i32), d, m, len);
        out.iter_mut().zip(los).for_each(|(o, v)| *o += v);
    }
    if stats.p_los < 1.0 {
        let d = s0 + beta;
        let nlos = inverse_power_series((1.0 - stats.p_los) * beta / d, d, 1, len);
        out.iter_mut().zip(nlos).for_each(|(o, v)| *o += v);
    }
    out
}

fn check_inputs(serving: &LinkStatistics, interferers: &[LinkStatistics], m: u32) -> Result<()> {
    if m < 1 {
        return Err(Error::Domain("Nakagami m must be at least 1".into()));
    }
    for stats in std::iter::once(serving).chain(interferers) {
        stats.validate()?;
        if stats.nakagami_m != m {
            return Err(Error::Domain(format!("link has Nakagami m = {}, expected {m}", stats.nakagami_m)));
        }
    }
    Ok(())
}

/// Decomposes the serving transform and the aggregate interference
/// transform. Fails with [`Error::DegeneratePoles`] when two present
/// interferer poles coincide within [`POLE_SEPARATION`].
pub fn partial_fraction_decompose(
    serving: &LinkStatistics,
    interferers: &[LinkStatistics],
    m: u32,
) -> Result<PartialFractionCoefficients> {
    check_inputs(serving, interferers, m)?;
    let len = m as usize;
    let serving_rates = rates(serving, m);
    let mut beta1 = vec![0.0; len];
    beta1[len - 1] = serving.p_los * serving_rates.0.powi(m as i32);
    let beta21 = (1.0 - serving.p_los) * serving_rates.1;

    let poles = present_poles(interferers, m);
    if let Some((a, b)) = find_coincident(&poles) {
        return Err(Error::DegeneratePoles { first: -a.rate, second: -b.rate });
    }

    let n = interferers.len();
    let interferer_rates: Vec<(f64, f64)> = interferers.iter().map(|s| rates(s, m)).collect();
    let mut delta_prime = vec![0.0; n];
    let mut delta = vec![vec![0.0; len]; n];

    for pole in &poles {
        let i = pole.owner;
        let stats = &interferers[i];
        let s0 = -pole.rate;
        match pole.branch {
            Branch::Nlos => {
                // Cover-up: own factor times (s + β_i) is (1 - p_i) β_i at s = -β_i.
                let mut value = (1.0 - stats.p_los) * pole.rate;
                for (t, other) in interferers.iter().enumerate() {
                    if t != i {
                        value *= factor_series(other, m, s0, 1)[0];
                    }
                }
                delta_prime[i] = value;
            }
            Branch::Los => {
                // (s + α_i)^m M_i(s) = p_i α_i^m + O((s + α_i)^m), so only the
                // constant survives truncation at order m - 1.
                let mut series = vec![0.0; len];
                series[0] = stats.p_los * pole.rate.powi(m as i32);
                for (t, other) in interferers.iter().enumerate() {
                    if t != i {
                        series = series_mul(&series, &factor_series(other, m, s0, len));
                    }
                }
                // Coefficient of (s + α_i)^-j is the h^(m-j) Taylor coefficient.
                for j in 1..=len {
                    delta[i][j - 1] = series[len - j];
                }
            }
        }
    }

    Ok(PartialFractionCoefficients {
        nakagami_m: m,
        beta1,
        beta21,
        delta_prime,
        delta,
        serving_rates,
        interferer_rates,
    })
}

/// Like [`partial_fraction_decompose`], but resolves coincident poles by
/// nudging the offending interferer mean by a relative [`POLE_PERTURBATION`]
/// and retrying.
pub fn partial_fraction_decompose_perturbed(
    serving: &LinkStatistics,
    interferers: &[LinkStatistics],
    m: u32,
) -> Result<PartialFractionCoefficients> {
    check_inputs(serving, interferers, m)?;
    let mut working = interferers.to_vec();
    // Each retry separates at least one pair; bounded by the pole count.
    for attempt in 0..=4 * working.len() + 1 {
        let poles = present_poles(&working, m);
        let Some((_, second)) = find_coincident(&poles) else {
            return partial_fraction_decompose(serving, &working, m);
        };
        let stats = &mut working[second.owner];
        let factor = 1.0 + POLE_PERTURBATION * (attempt + 1) as f64;
        match second.branch {
            Branch::Los => stats.a_mean *= factor,
            Branch::Nlos => stats.b_mean *= factor,
        }
        log::warn!(
            "coincident interference poles near {:e}: perturbed interferer {} {:?} mean by relative {:e}",
            -second.rate,
            second.owner,
            second.branch,
            factor - 1.0
        );
    }
    partial_fraction_decompose(serving, &working, m)
}
