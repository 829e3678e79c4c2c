//! Uplink outage probability P(SINR < γ_th) of a UAV at its serving base
//! station, SINR = γ_u / (1 + Σ_t γ_t), every SNR following the LoS/NLoS
//! mixture of [`LinkStatistics`].
//!
//! Conditioning on the aggregate interference I,
//!
//! ```text
//!   P_out = 1 - E[ p Q(m, c(1 + I)) + (1 - p) e^(-γ_th (1 + I) / B) ],   c = m γ_th / A
//! ```
//!
//! Two closed-form evaluations of this expectation are provided:
//!
//! * [`outage_closed_form`] expands the density of I in partial fractions and
//!   integrates the incomplete-gamma terms with Gauss-Laguerre quadrature,
//!   while the exponential terms reduce to rational sums. The partial-fraction
//!   sum cancels heavily once interferers are numerous, so the routine tracks
//!   a rounding bound and refuses results it cannot vouch for.
//! * [`outage_serving_residues`] expands the same expectation through the
//!   derivatives of the interference Laplace transform at the serving-link
//!   poles. All terms are positive, so it stays accurate for any number of
//!   interferers; the coalition game uses it.

use crate::channel::LinkStatistics;
use crate::error::{Error, Result};
use crate::specfun::{
    cached_rule, factor_series, gamma_int, partial_fraction_decompose_perturbed, scaled_upper_gamma_int,
    upper_incomplete_gamma, regularized_lower_gamma, LaguerreRule, PartialFractionCoefficients,
    MAX_LAGUERRE_ORDER,
};

/// Raw values this far outside [0, 1] are rounding; beyond it they are failures.
pub const CLAMP_BAND: f64 = 1e-6;
/// Largest acceptable rounding bound on a closed-form value.
pub const MAX_ROUNDING_BOUND: f64 = 1e-6;
/// Quadrature orders agreeing within this are considered converged.
pub const ORDER_CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutageMethod {
    /// Partial fractions plus Gauss-Laguerre quadrature.
    ClosedForm,
    /// Residues at the serving-link poles.
    ServingResidues,
    MonteCarlo,
}

impl OutageMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OutageMethod::ClosedForm => "closed_form",
            OutageMethod::ServingResidues => "serving_residues",
            OutageMethod::MonteCarlo => "monte_carlo",
        }
    }

    pub fn is_analytic(self) -> bool {
        !matches!(self, OutageMethod::MonteCarlo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageResult {
    pub probability: f64,
    pub method: OutageMethod,
    /// Zero for analytic methods.
    pub std_error: f64,
    /// Zero unless quadrature was used.
    pub laguerre_order_used: usize,
}

impl OutageResult {
    pub(crate) fn analytic(probability: f64, method: OutageMethod, laguerre_order_used: usize) -> Self {
        Self { probability, method, std_error: 0.0, laguerre_order_used }
    }
}

fn check_common(serving: &LinkStatistics, interferers: &[LinkStatistics], gamma_th: f64) -> Result<u32> {
    if !(gamma_th > 0.0 && gamma_th.is_finite()) {
        return Err(Error::Domain(format!("gamma_th must be finite and > 0, got {gamma_th}")));
    }
    serving.validate()?;
    for t in interferers {
        t.validate()?;
        if t.nakagami_m != serving.nakagami_m {
            return Err(Error::Domain("all links must share one Nakagami m".into()));
        }
    }
    Ok(serving.nakagami_m)
}

fn finalize(raw: f64, error_bound: f64) -> Result<f64> {
    if !(-CLAMP_BAND..=1.0 + CLAMP_BAND).contains(&raw) || error_bound > MAX_ROUNDING_BOUND {
        return Err(Error::NumericalInstability { raw, error_bound });
    }
    if !(0.0..=1.0).contains(&raw) {
        log::debug!("clamping outage {raw:e} into [0, 1]");
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Outage without interference: the serving SNR mixture CDF at γ_th.
pub fn outage_no_interference(serving: &LinkStatistics, gamma_th: f64) -> Result<OutageResult> {
    let m = check_common(serving, &[], gamma_th)?;
    let los = regularized_lower_gamma(f64::from(m), f64::from(m) * gamma_th / serving.a_mean)?;
    let nlos = -(-gamma_th / serving.b_mean).exp_m1();
    let p = serving.p_los * los + (1.0 - serving.p_los) * nlos;
    Ok(OutageResult::analytic(p.clamp(0.0, 1.0), OutageMethod::ClosedForm, 0))
}

/// ∫_0^∞ x^(k-1) e^(-rate·x) Γ(j, c(1 + x)) dx.
///
/// Γ(j, c(1+x)) = e^(-c(1+x)) · e^(c(1+x)) Γ(j, c(1+x)), and the second factor
/// is a polynomial of degree j - 1 in x for integer j. Folding e^(-c x) into
/// the Laguerre weight via x = t / (rate + c) leaves a polynomial integrand
/// of degree j + k - 2, integrated exactly once the rule has order
/// ≥ (j + k) / 2 whatever the ratio c / rate.
pub fn laguerre_tail_integral(j: u32, k: u32, rate: f64, c: f64, rule: &LaguerreRule) -> Result<f64> {
    if j < 1 || k < 1 {
        return Err(Error::Domain("laguerre_tail_integral requires j, k >= 1".into()));
    }
    let scale = rate + c;
    let mut acc = 0.0;
    for (theta, lambda) in rule.iter() {
        let x = theta / scale;
        acc += lambda * theta.powi(k as i32 - 1) * scaled_upper_gamma_int(j, c * (1.0 + x))?;
    }
    Ok((-c).exp() * acc / scale.powi(k as i32))
}

/// Closed-form outage evaluated term by term from the partial-fraction
/// coefficients, using the quadrature `rule`.
pub fn outage_closed_form(
    serving: &LinkStatistics,
    interferers: &[LinkStatistics],
    gamma_th: f64,
    rule: &LaguerreRule,
) -> Result<OutageResult> {
    let m = check_common(serving, interferers, gamma_th)?;
    let pf = partial_fraction_decompose_perturbed(serving, interferers, m)?;
    let (raw, bound) = closed_form_terms(&pf, gamma_th, rule)?;
    let p = finalize(raw, bound)?;
    Ok(OutageResult::analytic(p, OutageMethod::ClosedForm, rule.order()))
}

/// Evaluates the closed form and returns `(raw, rounding_bound)`.
fn closed_form_terms(pf: &PartialFractionCoefficients, gamma_th: f64, rule: &LaguerreRule) -> Result<(f64, f64)> {
    let m = pf.nakagami_m;
    let (alpha, beta) = pf.serving_rates;
    let c = alpha * gamma_th;
    let n = pf.interferer_count();

    let mut los = 0.0;
    let mut los_abs = 0.0;
    for j in 1..=m {
        let beta1 = pf.beta1[j as usize - 1];
        if beta1 == 0.0 {
            continue;
        }
        // β_1j / (α^j Γ(j)) turns Γ(j, ·) into the serving CCDF contribution.
        let weight = beta1 * alpha.powi(-(j as i32)) / gamma_int(j)?;
        if n == 0 {
            let term = weight * upper_incomplete_gamma(f64::from(j), c)?;
            los += term;
            los_abs += term.abs();
            continue;
        }
        let mut expectation = 0.0;
        let mut expectation_abs = 0.0;
        for (i, &(alpha_i, beta_i)) in pf.interferer_rates.iter().enumerate() {
            let dp = pf.delta_prime[i];
            if dp != 0.0 {
                let term = dp * laguerre_tail_integral(j, 1, beta_i, c, rule)?;
                expectation += term;
                expectation_abs += term.abs();
            }
            for k in 1..=m {
                let d = pf.delta[i][k as usize - 1];
                if d != 0.0 {
                    let term = d / gamma_int(k)? * laguerre_tail_integral(j, k, alpha_i, c, rule)?;
                    expectation += term;
                    expectation_abs += term.abs();
                }
            }
        }
        los += weight * expectation;
        los_abs += weight.abs() * expectation_abs;
    }

    // NLoS serving branch: (β_21 / β) e^(-β γ_th) E[e^(-β γ_th I)], the last
    // factor being the rational sums at s = γ_th / B.
    let s = beta * gamma_th;
    let mut nlos = 0.0;
    let mut nlos_abs = 0.0;
    if pf.beta21 != 0.0 {
        let weight = pf.beta21 / beta * (-s).exp();
        if n == 0 {
            nlos = weight;
            nlos_abs = weight.abs();
        } else {
            let mut sum = 0.0;
            let mut sum_abs = 0.0;
            for (i, &(alpha_i, beta_i)) in pf.interferer_rates.iter().enumerate() {
                let term = pf.delta_prime[i] / (s + beta_i);
                sum += term;
                sum_abs += term.abs();
                for (k, d) in pf.delta[i].iter().enumerate() {
                    let term = d / (s + alpha_i).powi(k as i32 + 1);
                    sum += term;
                    sum_abs += term.abs();
                }
            }
            nlos = weight * sum;
            nlos_abs = weight.abs() * sum_abs;
        }
    }

    let raw = 1.0 - los - nlos;
    let ops = 16.0 + 8.0 * f64::from(m) * (n as f64 + 1.0);
    let bound = ops * f64::EPSILON * (1.0 + los_abs + nlos_abs);
    Ok((raw, bound))
}

/// [`outage_closed_form`] with an order-doubling convergence check: the
/// order starts at `order` and doubles (capped at 128) until consecutive
/// results agree within [`ORDER_CONVERGENCE_TOL`].
pub fn outage_closed_form_adaptive(
    serving: &LinkStatistics,
    interferers: &[LinkStatistics],
    gamma_th: f64,
    order: usize,
) -> Result<OutageResult> {
    let mut current = outage_closed_form(serving, interferers, gamma_th, &*cached_rule(order)?)?;
    let mut order = order;
    while order < MAX_LAGUERRE_ORDER {
        let next_order = (2 * order).min(MAX_LAGUERRE_ORDER);
        let next = outage_closed_form(serving, interferers, gamma_th, &*cached_rule(next_order)?)?;
        let settled = (next.probability - current.probability).abs() <= ORDER_CONVERGENCE_TOL;
        if settled {
            return Ok(current);
        }
        current = next;
        order = next_order;
    }
    log::warn!("Laguerre quadrature not converged at order {MAX_LAGUERRE_ORDER}");
    Ok(current)
}

/// Closed-form outage through the serving-link residues:
///
/// ```text
///   E[Q(m, c(1+I))] = e^(-c) Σ_{k<m} c^k / k! Σ_{q≤k} C(k, q) E[I^q e^(-cI)]
///   E[I^q e^(-cI)]  = (-1)^q L_I^(q)(c)
/// ```
///
/// with L_I = Π_t M_t the interference Laplace transform, differentiated
/// through truncated Taylor series of its factors.
pub fn outage_serving_residues(
    serving: &LinkStatistics,
    interferers: &[LinkStatistics],
    gamma_th: f64,
) -> Result<OutageResult> {
    let m = check_common(serving, interferers, gamma_th)?;
    let len = m as usize;
    let c = f64::from(m) * gamma_th / serving.a_mean;

    let mut series = vec![0.0; len];
    series[0] = 1.0;
    for t in interferers {
        let factor = factor_series(t, m, c, len);
        let mut next = vec![0.0; len];
        for (i, x) in series.iter().enumerate() {
            for (k, y) in factor.iter().take(len - i).enumerate() {
                next[i + k] += x * y;
            }
        }
        series = next;
    }
    // E[I^q e^(-cI)] = (-1)^q q! [h^q] L_I(c + h)
    let mut moments = Vec::with_capacity(len);
    let mut q_factorial = 1.0;
    for (q, coefficient) in series.iter().enumerate() {
        if q > 0 {
            q_factorial *= q as f64;
        }
        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
        moments.push(sign * q_factorial * coefficient);
    }
    let mut expectation = 0.0;
    let mut c_power_over_factorial = 1.0;
    for k in 0..len {
        if k > 0 {
            c_power_over_factorial *= c / k as f64;
        }
        let mut binom = 1.0;
        let mut inner = 0.0;
        for (q, moment) in moments.iter().enumerate().take(k + 1) {
            if q > 0 {
                binom = binom * (k + 1 - q) as f64 / q as f64;
            }
            inner += binom * moment;
        }
        expectation += c_power_over_factorial * inner;
    }
    let los_success = (-c).exp() * expectation;

    let s = gamma_th / serving.b_mean;
    let interference_laplace: f64 = interferers.iter().map(|t| t.laplace(s)).product();
    let nlos_success = (-s).exp() * interference_laplace;

    let success = serving.p_los * los_success + (1.0 - serving.p_los) * nlos_success;
    let raw = 1.0 - success;
    if !(-CLAMP_BAND..=1.0 + CLAMP_BAND).contains(&raw) {
        return Err(Error::NumericalInstability { raw, error_bound: f64::NAN });
    }
    Ok(OutageResult::analytic(raw.clamp(0.0, 1.0), OutageMethod::ServingResidues, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gauss_laguerre_rule;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn link(p_los: f64, a_mean: f64, b_mean: f64) -> LinkStatistics {
        LinkStatistics::new(p_los, a_mean, b_mean, 2).unwrap()
    }

    fn rule() -> LaguerreRule {
        gauss_laguerre_rule(30).unwrap()
    }

    #[test]
    fn rayleigh_only_is_exponential_cdf() {
        let serving = link(0.0, 7.0, 3.0);
        let expected = 1.0 - (-0.5f64 / 3.0).exp();
        assert_relative_eq!(outage_closed_form(&serving, &[], 0.5, &rule()).unwrap().probability, expected, max_relative = 1e-13);
        assert_relative_eq!(outage_serving_residues(&serving, &[], 0.5).unwrap().probability, expected, max_relative = 1e-13);
    }

    #[test]
    fn nakagami_only_gamma_cdf() {
        // Gamma(shape 2, mean 10) CDF at 1: 1 - e^-0.2 (1 + 0.2)
        let serving = link(1.0, 10.0, 1.0);
        let expected = 1.0 - (-0.2f64).exp() * 1.2;
        assert_relative_eq!(expected, 0.01752, epsilon = 1e-5);
        assert_relative_eq!(outage_closed_form(&serving, &[], 1.0, &rule()).unwrap().probability, expected, max_relative = 1e-12);
        assert_relative_eq!(outage_no_interference(&serving, 1.0).unwrap().probability, expected, max_relative = 1e-12);
    }

    #[test]
    fn no_interference_values() {
        let huge = link(1.0, 1e300, 1.0);
        assert_eq!(outage_no_interference(&huge, 1.0).unwrap().probability, 0.0);
        let rayleigh = link(0.0, 1.0, 2.5);
        assert_relative_eq!(outage_no_interference(&rayleigh, 2.5).unwrap().probability, 1.0 - (-1.0f64).exp(), max_relative = 1e-14);
        let mixed = link(0.5, 10.0, 10.0);
        let expected = 0.5 * (1.0 - (-0.2f64).exp() * 1.2) + 0.5 * (1.0 - (-0.1f64).exp());
        assert_relative_eq!(outage_no_interference(&mixed, 1.0).unwrap().probability, expected, max_relative = 1e-13);
        assert_relative_eq!(expected, 0.05634, epsilon = 1e-5);
    }

    #[test]
    fn single_rayleigh_interferer_exact() {
        // Rayleigh serving (B) vs one Rayleigh interferer (b):
        // P_out = 1 - e^(-γ/B) / (1 + γ b / B)
        let serving = link(0.0, 1.0, 20.0);
        let interferer = link(0.0, 1.0, 4.0);
        let gamma = 0.7;
        let expected = 1.0 - (-gamma / 20.0f64).exp() / (1.0 + gamma * 4.0 / 20.0);
        let cf = outage_closed_form(&serving, &[interferer], gamma, &rule()).unwrap();
        assert_relative_eq!(cf.probability, expected, max_relative = 1e-12);
        assert_eq!(cf.laguerre_order_used, 30);
        assert_relative_eq!(outage_serving_residues(&serving, &[interferer], gamma).unwrap().probability, expected, max_relative = 1e-12);
    }

    #[test]
    fn tail_integral_against_direct_sum() {
        // j = 2, k = 1: ∫ e^(-r x) e^(-c(1+x)) (1 + c(1+x)) dx
        let (r, c): (f64, f64) = (0.3, 2.0);
        let expected = (-c).exp() * ((1.0 + c) / (r + c) + c / (r + c).powi(2));
        assert_relative_eq!(laguerre_tail_integral(2, 1, r, c, &rule()).unwrap(), expected, max_relative = 1e-13);
        // Extreme ratio c / r stays exact.
        let (r, c): (f64, f64) = (1e-9, 5e-3);
        let expected = (-c).exp() * ((1.0 + c) / (r + c) + c / (r + c).powi(2));
        assert_relative_eq!(laguerre_tail_integral(2, 1, r, c, &rule()).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn invalid_threshold() {
        let s = link(0.5, 1.0, 1.0);
        assert!(outage_closed_form(&s, &[], 0.0, &rule()).is_err());
        assert!(outage_serving_residues(&s, &[], -1.0).is_err());
        assert!(outage_no_interference(&s, f64::NAN).is_err());
    }

    #[test]
    fn ill_conditioned_decomposition_is_refused() {
        // Forty interferers with closely packed poles: the partial-fraction sum
        // cancels far beyond double precision.
        let serving = link(0.7, 1e6, 1e4);
        let interferers: Vec<_> = (0..40)
            .map(|i| link(0.5, 1e5 * (1.0 + 0.03 * i as f64), 2e3 * (1.0 + 0.05 * i as f64)))
            .collect();
        let err = outage_closed_form(&serving, &interferers, 1e-3, &rule()).unwrap_err();
        assert!(matches!(err, Error::NumericalInstability { .. }));
        let stable = outage_serving_residues(&serving, &interferers, 1e-3).unwrap();
        assert!((0.0..=1.0).contains(&stable.probability));
    }

    #[test]
    fn adaptive_order_settles_immediately() {
        let serving = link(0.6, 50.0, 8.0);
        let interferers = [link(0.3, 5.0, 2.0), link(1.0, 9.0, 1.0)];
        let r = outage_closed_form_adaptive(&serving, &interferers, 0.4, 30).unwrap();
        assert_eq!(r.laguerre_order_used, 30);
    }

    fn arb_link() -> impl Strategy<Value = LinkStatistics> {
        (prop_oneof![Just(0.0), Just(1.0), 0.0f64..1.0], -2.0f64..4.0, -2.0f64..4.0)
            .prop_map(|(p, a, b)| link(p, 10f64.powf(a), 10f64.powf(b)))
    }

    proptest! {
        #[test]
        fn empty_closed_form_matches_mixture_cdf(serving in arb_link(), g in -4.0f64..1.0) {
            let gamma = 10f64.powf(g);
            let cf = outage_closed_form(&serving, &[], gamma, &rule()).unwrap().probability;
            let direct = outage_no_interference(&serving, gamma).unwrap().probability;
            prop_assert!((cf - direct).abs() <= 1e-9);
        }

        #[test]
        fn routes_agree(serving in arb_link(), interferers in prop::collection::vec(arb_link(), 0..6), g in -3.0f64..1.0) {
            let gamma = 10f64.powf(g);
            let residues = outage_serving_residues(&serving, &interferers, gamma).unwrap().probability;
            if let Ok(cf) = outage_closed_form(&serving, &interferers, gamma, &rule()) {
                prop_assert!((cf.probability - residues).abs() <= 1e-7, "{} vs {residues}", cf.probability);
            }
        }

        #[test]
        fn quadrature_order_doubling_is_stable(serving in arb_link(), interferers in prop::collection::vec(arb_link(), 1..5), g in -3.0f64..1.0) {
            let gamma = 10f64.powf(g);
            let low = outage_closed_form(&serving, &interferers, gamma, &gauss_laguerre_rule(30).unwrap());
            let high = outage_closed_form(&serving, &interferers, gamma, &gauss_laguerre_rule(60).unwrap());
            if let (Ok(low), Ok(high)) = (low, high) {
                prop_assert!((low.probability - high.probability).abs() < 1e-6);
            }
        }

        #[test]
        fn non_decreasing_in_threshold(serving in arb_link(), interferers in prop::collection::vec(arb_link(), 0..6), g in -3.0f64..1.0, step in 1.0f64..10.0) {
            let gamma = 10f64.powf(g);
            let lo = outage_serving_residues(&serving, &interferers, gamma).unwrap().probability;
            let hi = outage_serving_residues(&serving, &interferers, gamma * step).unwrap().probability;
            prop_assert!(hi >= lo - 1e-14);
        }

        #[test]
        fn stronger_interference_hurts(serving in arb_link(), interferers in prop::collection::vec(arb_link(), 1..6), g in -3.0f64..1.0, boost in 1.0f64..100.0, which in 0usize..6) {
            let gamma = 10f64.powf(g);
            let base = outage_serving_residues(&serving, &interferers, gamma).unwrap().probability;
            let mut boosted = interferers.clone();
            let idx = which % boosted.len();
            boosted[idx].a_mean *= boost;
            boosted[idx].b_mean *= boost;
            let worse = outage_serving_residues(&serving, &boosted, gamma).unwrap().probability;
            prop_assert!(worse >= base - 1e-14);
        }

        #[test]
        fn stronger_serving_helps(serving in arb_link(), interferers in prop::collection::vec(arb_link(), 0..6), g in -3.0f64..1.0, boost in 1.0f64..100.0) {
            let gamma = 10f64.powf(g);
            let base = outage_serving_residues(&serving, &interferers, gamma).unwrap().probability;
            let mut better = serving;
            better.a_mean *= boost;
            better.b_mean *= boost;
            let improved = outage_serving_residues(&better, &interferers, gamma).unwrap().probability;
            prop_assert!(improved <= base + 1e-14);
        }

        #[test]
        fn extra_interferer_never_helps(serving in arb_link(), interferers in prop::collection::vec(arb_link(), 0..6), extra in arb_link(), g in -3.0f64..1.0) {
            let gamma = 10f64.powf(g);
            let base = outage_serving_residues(&serving, &interferers, gamma).unwrap().probability;
            let mut more = interferers.clone();
            more.push(extra);
            prop_assert!(outage_serving_residues(&serving, &more, gamma).unwrap().probability >= base - 1e-14);
        }
    }
}
