//! Special functions and decompositions used by the closed-form outage.

mod gamma;
mod laguerre;
mod partial_fraction;

pub use gamma::{
    gamma_int, ln_gamma, regularized_lower_gamma, regularized_upper_gamma, scaled_upper_gamma_int,
    upper_incomplete_gamma,
};
pub use laguerre::{cached_rule, gauss_laguerre_rule, LaguerreRule, MAX_ORDER as MAX_LAGUERRE_ORDER};
pub(crate) use partial_fraction::factor_series;
pub use partial_fraction::{
    partial_fraction_decompose, partial_fraction_decompose_perturbed, PartialFractionCoefficients,
    POLE_PERTURBATION, POLE_SEPARATION,
};
