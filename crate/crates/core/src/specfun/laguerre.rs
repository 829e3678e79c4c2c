//! Gauss-Laguerre quadrature: ∫_0^∞ e^(-t) f(t) dt ≈ Σ_p λ_p f(θ_p).
//!
//! Nodes are the roots of the Laguerre polynomial L_n, located by Newton
//! iteration on the three-term recurrence from asymptotic initial guesses.
//! Weights follow from λ_p = 1 / (θ_p · L_n'(θ_p)²).

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LaguerreRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(t, w)| w * f(t)).sum()
    }
}

/// Evaluates (L_n(x), L_{n-1}(x)) by the three-term recurrence.
fn laguerre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        p1 = ((2 * j - 1) as f64 - x) * p2 / j as f64 - (j - 1) as f64 * p3 / j as f64;
    }
    (p1, p2)
}

pub fn gauss_laguerre_rule(n: usize) -> Result<LaguerreRule> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&n) {
        return Err(Error::Domain(format!("Laguerre order must be in [{MIN_ORDER}, {MAX_ORDER}], got {n}")));
    }
    let nf = n as f64;
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut z = 0.0;
    for i in 0..n {
        // Initial guesses for the i-th smallest root.
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut converged = false;
        for _ in 0..100 {
            let (p1, p2) = laguerre_pair(n, z);
            // x L_n'(x) = n (L_n(x) - L_{n-1}(x))
            let step = p1 * z / (nf * (p1 - p2));
            z -= step;
            if step.abs() <= 1e-13 * z.abs() {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Domain(format!("Newton iteration failed for Laguerre root {i} of order {n}")));
        }
        // At a root L_n'(θ) = -n L_{n-1}(θ) / θ, so λ = θ / (n L_{n-1}(θ))².
        let (_, below) = laguerre_pair(n, z);
        weights.push(z / (nf * below).powi(2));
        nodes.push(z);
    }
    if nodes.windows(2).any(|w| !(w[0] < w[1])) || nodes[0] <= 0.0 {
        return Err(Error::Domain(format!("Laguerre roots of order {n} are not strictly increasing")));
    }
    Ok(LaguerreRule { nodes, weights })
}

/// Memoized rule of order `n`.
pub fn cached_rule(n: usize) -> Result<Arc<LaguerreRule>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<LaguerreRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.read().expect("rule cache poisoned").get(&n) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(gauss_laguerre_rule(n)?);
    cache.write().expect("rule cache poisoned").insert(n, Arc::clone(&rule));
    Ok(rule)
}
