//! Bayesian target models.
//!
//! A model owns its observations and exposes the log prior and the
//! log likelihood of any subset of rows, with gradients. Tempering wraps a
//! model into per-level densities; see [`crate::tempering::TemperedTarget`].

mod gp;
mod mvn;
pub mod priors;

pub use gp::{ard_kernel, simulate_gp_data, simulate_gp_data_with, GpHyper, GpPriors, GpRegressionModel};
pub use mvn::{equicorrelated, simulate_mvn_data, MvnMeanModel};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Behavioral contract for a posterior `p(X | theta) p(theta)`.
///
/// `log_likelihood` sums per-observation terms over the given rows, so it is
/// additive over disjoint row sets (for the GP the "observation" is the joint
/// marginal of the selected rows). An empty row set contributes zero.
pub trait LogTarget: Send + Sync {
    /// Parameter count `|theta|`.
    fn dim(&self) -> usize;

    /// Number of observations `N`.
    fn n_obs(&self) -> usize;

    fn log_prior(&self, theta: &[f64]) -> Result<f64>;

    fn grad_log_prior(&self, theta: &[f64]) -> Result<Vec<f64>>;

    fn log_likelihood(&self, theta: &[f64], rows: &[usize]) -> Result<f64>;

    fn grad_log_likelihood(&self, theta: &[f64], rows: &[usize]) -> Result<Vec<f64>> {
        self.log_likelihood_and_grad(theta, rows).map(|(_, g)| g)
    }

    /// Value and gradient together; models sharing work between the two
    /// override this.
    fn log_likelihood_and_grad(&self, theta: &[f64], rows: &[usize]) -> Result<(f64, Vec<f64>)>;

    /// Prior expectation of the parameters on their natural scale.
    fn prior_mean(&self) -> Vec<f64>;

    /// Map natural-scale parameters to sampling coordinates.
    #[allow(clippy::wrong_self_convention)]
    fn from_natural(&self, natural: &[f64]) -> Vec<f64> {
        natural.to_vec()
    }

    /// Map sampling coordinates back to the natural scale.
    fn to_natural(&self, theta: &[f64]) -> Vec<f64> {
        theta.to_vec()
    }

    /// A draw from the prior, in sampling coordinates.
    fn sample_prior(&self, rng: &mut RngStream) -> Vec<f64>;

    fn name(&self) -> &'static str;
}

pub(crate) fn check_theta(theta: &[f64], dim: usize) -> Result<()> {
    if theta.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: theta.len(),
        });
    }
    if let Some(v) = theta.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("parameter entry {v}")));
    }
    Ok(())
}
