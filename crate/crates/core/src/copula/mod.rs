//! Rank transforms, Kendall's tau, the Gaussian / Clayton / Gumbel families,
//! tail dependence and simulation.

pub mod family;
pub mod normal;
pub mod pseudo;
pub mod sample;
pub mod tau;

pub use family::{
    fit, fit_clayton, fit_gaussian, fit_gumbel, tail_dependence, CopulaModel, Family,
};
pub use normal::{bivariate_normal_cdf, norm_cdf, norm_quantile};
pub use pseudo::{average_ranks, pseudo_observations, PseudoSample};
pub use sample::sample;
pub use tau::{kendall_tau, kendall_tau_with, TauVariant};

/// Copula CDF at `(u, v)`, validating the model parameter first.
pub fn copula_cdf(model: &CopulaModel, u: f64, v: f64) -> crate::Result<f64> {
    model.family.validate(model.param)?;
    Ok(model.cdf(u, v))
}
