//! Mean of a multivariate normal with known covariance.
//!
//! `x_n ~ N(theta, Sigma)` with prior `theta_d ~ N(0, sigma0^2)`. The
//! posterior is Gaussian and available in closed form, which makes this
//! model the exactness oracle for every sampler.

use super::{check_theta, LogTarget};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::rng::RngStream;
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct MvnMeanModel {
    dim: usize,
    sigma: Vec<f64>,
    chol: Cholesky,
    sigma0: f64,
    data: Dataset,
    // rows of L^{-1} x_n, row-major
    whitened: Vec<f64>,
    // D log(2 pi) + log |Sigma|
    log_norm: f64,
}

/// Covariance with unit variances and constant off-diagonal `rho`.
pub fn equicorrelated(dim: usize, rho: f64) -> Vec<f64> {
    let mut s = vec![rho; dim * dim];
    for d in 0..dim {
        s[d * dim + d] = 1.0;
    }
    s
}

impl MvnMeanModel {
    /// `sigma` is the row-major `D x D` observation covariance.
    pub fn new(sigma: Vec<f64>, sigma0: f64, data: Dataset) -> Result<Self> {
        let dim = data.dim();
        if sigma.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                got: sigma.len(),
            });
        }
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::config(format!("prior sd must be positive, got {sigma0}")));
        }
        for i in 0..dim {
            for j in 0..i {
                if sigma[i * dim + j] != sigma[j * dim + i] {
                    return Err(Error::config("observation covariance must be symmetric"));
                }
            }
        }
        let chol = Cholesky::factor(&sigma, dim)
            .ok_or_else(|| Error::config("observation covariance is not positive definite"))?;
        let mut whitened = data.covariates().to_vec();
        for row in whitened.chunks_mut(dim) {
            chol.solve_lower_in_place(row);
        }
        let log_norm = dim as f64 * (2.0 * PI).ln() + chol.log_det();
        Ok(Self {
            dim,
            sigma,
            chol,
            sigma0,
            data,
            whitened,
            log_norm,
        })
    }

    pub fn identity(sigma0: f64, data: Dataset) -> Result<Self> {
        let d = data.dim();
        Self::new(equicorrelated(d, 0.0), sigma0, data)
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn covariance(&self) -> &[f64] {
        &self.sigma
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Exact posterior `(mean, covariance)` given the model's own data.
    pub fn analytic_posterior(&self) -> (Vec<f64>, Vec<f64>) {
        self.analytic_posterior_for(&self.data)
    }

    /// Exact posterior given `data`:
    /// `cov = (sigma0^-2 I + N Sigma^-1)^-1`, `mean = cov Sigma^-1 sum_n x_n`.
    pub fn analytic_posterior_for(&self, data: &Dataset) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let n = data.len() as f64;
        let sigma_inv = self.chol.inverse();
        let mut precision: Vec<f64> = sigma_inv.iter().map(|v| n * v).collect();
        for k in 0..d {
            precision[k * d + k] += 1.0 / (self.sigma0 * self.sigma0);
        }
        let cov = Cholesky::factor(&precision, d)
            .expect("posterior precision is positive definite")
            .inverse();
        let mut sum = vec![0.0; d];
        for i in 0..data.len() {
            for (s, x) in sum.iter_mut().zip(data.row(i)) {
                *s += x;
            }
        }
        let b: Vec<f64> = (0..d)
            .map(|r| (0..d).map(|c| sigma_inv[r * d + c] * sum[c]).sum())
            .collect();
        let mean = (0..d).map(|r| (0..d).map(|c| cov[r * d + c] * b[c]).sum()).collect();
        (mean, cov)
    }

    fn whiten_theta(&self, theta: &[f64]) -> Vec<f64> {
        let mut u = theta.to_vec();
        self.chol.solve_lower_in_place(&mut u);
        u
    }

    fn check_rows(&self, rows: &[usize]) -> Result<()> {
        match rows.iter().find(|&&r| r >= self.data.len()) {
            Some(&r) => Err(Error::config(format!(
                "row {r} out of range for {} observations",
                self.data.len()
            ))),
            None => Ok(()),
        }
    }
}

impl LogTarget for MvnMeanModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_obs(&self) -> usize {
        self.data.len()
    }

    fn log_prior(&self, theta: &[f64]) -> Result<f64> {
        check_theta(theta, self.dim)?;
        let s2 = self.sigma0 * self.sigma0;
        let q: f64 = theta.iter().map(|t| t * t).sum();
        Ok(-0.5 * self.dim as f64 * (2.0 * PI * s2).ln() - 0.5 * q / s2)
    }

    fn grad_log_prior(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_theta(theta, self.dim)?;
        let s2 = self.sigma0 * self.sigma0;
        Ok(theta.iter().map(|t| -t / s2).collect())
    }

    fn log_likelihood(&self, theta: &[f64], rows: &[usize]) -> Result<f64> {
        check_theta(theta, self.dim)?;
        self.check_rows(rows)?;
        let d = self.dim;
        let u = self.whiten_theta(theta);
        let mut quad = 0.0;
        for &r in rows {
            let w = &self.whitened[r * d..(r + 1) * d];
            quad += w.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(-0.5 * quad - 0.5 * rows.len() as f64 * self.log_norm)
    }

    fn log_likelihood_and_grad(&self, theta: &[f64], rows: &[usize]) -> Result<(f64, Vec<f64>)> {
        check_theta(theta, self.dim)?;
        self.check_rows(rows)?;
        let d = self.dim;
        let u = self.whiten_theta(theta);
        let mut quad = 0.0;
        let mut resid = vec![0.0; d];
        for &r in rows {
            let w = &self.whitened[r * d..(r + 1) * d];
            for k in 0..d {
                let e = w[k] - u[k];
                quad += e * e;
                resid[k] += e;
            }
        }
        // Sigma^{-1} sum (x_n - theta) = L^{-T} sum (w_n - u)
        self.chol.solve_upper_in_place(&mut resid);
        Ok((-0.5 * quad - 0.5 * rows.len() as f64 * self.log_norm, resid))
    }

    fn prior_mean(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn sample_prior(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.dim).map(|_| self.sigma0 * rng.normal()).collect()
    }

    fn name(&self) -> &'static str {
        "mvn"
    }
}

/// `n` rows from `N(theta_true, sigma)`, drawn row by row so that a shorter
/// simulation with the same stream is a prefix of a longer one.
pub fn simulate_mvn_data(sigma: &[f64], theta_true: &[f64], n: usize, rng: &mut RngStream) -> Result<Dataset> {
    let d = theta_true.len();
    if sigma.len() != d * d {
        return Err(Error::Dimension {
            expected: d * d,
            got: sigma.len(),
        });
    }
    let chol =
        Cholesky::factor(sigma, d).ok_or_else(|| Error::config("observation covariance is not positive definite"))?;
    let mut x = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let row = chol.mul_lower(&z);
        x.extend(row.iter().zip(theta_true).map(|(a, b)| a + b));
    }
    Dataset::new(d, x, None)
}
