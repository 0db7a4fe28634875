//! Gaussian process regression hyperparameters.
//!
//! Observations `y ~ N(0, K + sigma_n^2 I)` with a squared-exponential ARD
//! kernel. Sampling happens in log coordinates
//! `theta = (log l_1 .. log l_D, log sigma_f, log sigma_n)`; the prior
//! density therefore carries the Jacobian `sum_k theta_k` of the exp map.

use super::priors::{gamma_log_density, log_normal_log_density};
use super::{check_theta, LogTarget};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::rng::{RngStream, DATA_CHAIN};
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Hyperprior settings: log-normal length scales, gamma (shape, rate) scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpPriors {
    pub ls_mu: f64,
    pub ls_sigma: f64,
    pub sf_shape: f64,
    pub sf_rate: f64,
    pub sn_shape: f64,
    pub sn_rate: f64,
}

impl Default for GpPriors {
    fn default() -> Self {
        Self {
            ls_mu: 0.5,
            ls_sigma: 1.0,
            sf_shape: 4.0,
            sf_rate: 1.0,
            sn_shape: 2.0,
            sn_rate: 2.0,
        }
    }
}

impl GpPriors {
    fn validate(&self) -> Result<()> {
        let all = [self.ls_sigma, self.sf_shape, self.sf_rate, self.sn_shape, self.sn_rate];
        if !self.ls_mu.is_finite() || all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::config(format!("invalid GP hyperprior {self:?}")));
        }
        Ok(())
    }

    /// A draw of natural-scale hyperparameters.
    pub fn sample(&self, dim: usize, rng: &mut RngStream) -> GpHyper {
        let lengthscales = (0..dim)
            .map(|_| (self.ls_mu + self.ls_sigma * rng.normal()).exp())
            .collect();
        let sf = Gamma::new(self.sf_shape, 1.0 / self.sf_rate).expect("validated gamma");
        let sn = Gamma::new(self.sn_shape, 1.0 / self.sn_rate).expect("validated gamma");
        GpHyper {
            lengthscales,
            sigma_f: sf.sample(rng),
            sigma_n: sn.sample(rng),
        }
    }
}

/// Natural-scale hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub lengthscales: Vec<f64>,
    pub sigma_f: f64,
    pub sigma_n: f64,
}

impl GpHyper {
    pub fn to_theta(&self) -> Vec<f64> {
        self.lengthscales
            .iter()
            .chain([&self.sigma_f, &self.sigma_n])
            .map(|v| v.ln())
            .collect()
    }

    pub fn from_theta(theta: &[f64]) -> Self {
        let k = theta.len();
        Self {
            lengthscales: theta[..k - 2].iter().map(|v| v.exp()).collect(),
            sigma_f: theta[k - 2].exp(),
            sigma_n: theta[k - 1].exp(),
        }
    }
}

/// `sigma_f^2 exp(-sum_d (x_d - x'_d)^2 / (2 l_d^2))`.
pub fn ard_kernel(x: &[f64], x2: &[f64], lengthscales: &[f64], sigma_f: f64) -> f64 {
    let r2: f64 = x
        .iter()
        .zip(x2)
        .zip(lengthscales)
        .map(|((a, b), l)| {
            let z = (a - b) / l;
            z * z
        })
        .sum();
    sigma_f * sigma_f * (-0.5 * r2).exp()
}

#[derive(Clone, Debug)]
pub struct GpRegressionModel {
    dim: usize,
    data: Dataset,
    y: Vec<f64>,
    priors: GpPriors,
}

/// Factorized covariance of a row subset.
struct Factorized {
    chol: Cholesky,
    // kernel part of the covariance, without noise or jitter
    kernel: Vec<f64>,
    // covariates scaled by 1 / l_d, row-major n x D
    scaled: Vec<f64>,
    y: Vec<f64>,
}

impl GpRegressionModel {
    pub fn new(data: Dataset, priors: GpPriors) -> Result<Self> {
        priors.validate()?;
        let y = data
            .responses()
            .ok_or_else(|| Error::config("GP regression needs a response column `y`"))?
            .to_vec();
        Ok(Self {
            dim: data.dim(),
            data,
            y,
            priors,
        })
    }

    /// Input dimension `D` (the parameter count is `D + 2`).
    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn priors(&self) -> &GpPriors {
        &self.priors
    }

    fn factorize(&self, theta: &[f64], rows: &[usize]) -> Result<Factorized> {
        let d = self.dim;
        let n = rows.len();
        let hyper = GpHyper::from_theta(theta);
        let sf2 = hyper.sigma_f * hyper.sigma_f;
        let sn2 = hyper.sigma_n * hyper.sigma_n;
        let mut scaled = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        for &r in rows {
            if r >= self.data.len() {
                return Err(Error::config(format!("row {r} out of range")));
            }
            scaled.extend(self.data.row(r).iter().zip(&hyper.lengthscales).map(|(x, l)| x / l));
            y.push(self.y[r]);
        }
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            let zi = &scaled[i * d..(i + 1) * d];
            for j in 0..i {
                let zj = &scaled[j * d..(j + 1) * d];
                let r2: f64 = zi.iter().zip(zj).map(|(a, b)| (a - b) * (a - b)).sum();
                let k = sf2 * (-0.5 * r2).exp();
                kernel[i * n + j] = k;
                kernel[j * n + i] = k;
            }
            kernel[i * n + i] = sf2;
        }
        let mut cov = kernel.clone();
        for i in 0..n {
            cov[i * n + i] += sn2;
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("GP covariance at theta {theta:?}")));
        }
        let chol = factor_with_jitter(&cov, n, theta)?;
        Ok(Factorized {
            chol,
            kernel,
            scaled,
            y,
        })
    }

    /// `log N(y_s | 0, K_s + sigma_n^2 I)` over the selected rows.
    pub fn log_marginal(&self, theta: &[f64], rows: &[usize]) -> Result<f64> {
        check_theta(theta, self.dim + 2)?;
        if rows.is_empty() {
            return Ok(0.0);
        }
        let f = self.factorize(theta, rows)?;
        let mut v = f.y.clone();
        f.chol.solve_lower_in_place(&mut v);
        let quad: f64 = v.iter().map(|a| a * a).sum();
        Ok(-0.5 * quad - 0.5 * f.chol.log_det() - 0.5 * rows.len() as f64 * (2.0 * PI).ln())
    }

    /// Log marginal and its gradient in log coordinates.
    pub fn log_marginal_and_grad(&self, theta: &[f64], rows: &[usize]) -> Result<(f64, Vec<f64>)> {
        check_theta(theta, self.dim + 2)?;
        let k = self.dim + 2;
        if rows.is_empty() {
            return Ok((0.0, vec![0.0; k]));
        }
        let d = self.dim;
        let n = rows.len();
        let f = self.factorize(theta, rows)?;
        let mut v = f.y.clone();
        f.chol.solve_lower_in_place(&mut v);
        let quad: f64 = v.iter().map(|a| a * a).sum();
        let value = -0.5 * quad - 0.5 * f.chol.log_det() - 0.5 * n as f64 * (2.0 * PI).ln();

        let mut alpha = v;
        f.chol.solve_upper_in_place(&mut alpha);
        let inv = f.chol.inverse();
        // d/dtheta_j = 1/2 sum_ab (alpha_a alpha_b - Cinv_ab) dC_ab/dtheta_j
        let mut grad = vec![0.0; k];
        let mut diag_q = 0.0;
        let mut kq = 0.0;
        for a in 0..n {
            let za = &f.scaled[a * d..(a + 1) * d];
            for b in 0..a {
                let q = alpha[a] * alpha[b] - inv[a * n + b];
                // off-diagonal pairs appear twice
                let w = 2.0 * q * f.kernel[a * n + b];
                kq += w;
                let zb = &f.scaled[b * d..(b + 1) * d];
                for (g, (x, y)) in grad[..d].iter_mut().zip(za.iter().zip(zb)) {
                    *g += w * (x - y) * (x - y);
                }
            }
            let q = alpha[a] * alpha[a] - inv[a * n + a];
            kq += q * f.kernel[a * n + a];
            diag_q += q;
        }
        for g in &mut grad[..d] {
            *g *= 0.5;
        }
        // dK/dlog sigma_f = 2K, dC/dlog sigma_n = 2 sigma_n^2 I
        grad[d] = kq;
        let sn2 = (2.0 * theta[d + 1]).exp();
        grad[d + 1] = sn2 * diag_q;
        Ok((value, grad))
    }
}

fn factor_with_jitter(cov: &[f64], n: usize, theta: &[f64]) -> Result<Cholesky> {
    if let Some(c) = Cholesky::factor(cov, n) {
        return Ok(c);
    }
    let scale = (0..n).map(|i| cov[i * n + i]).sum::<f64>() / n as f64;
    let mut level = JITTER_START;
    loop {
        if let Some(c) = Cholesky::factor_jittered(cov, n, level * scale) {
            return Ok(c);
        }
        if level >= JITTER_MAX * 0.5 {
            return Err(Error::Cholesky {
                theta: theta.to_vec(),
                jitter: level * scale,
            });
        }
        level *= 10.0;
    }
}

impl LogTarget for GpRegressionModel {
    fn dim(&self) -> usize {
        self.dim + 2
    }

    fn n_obs(&self) -> usize {
        self.y.len()
    }

    fn log_prior(&self, theta: &[f64]) -> Result<f64> {
        check_theta(theta, self.dim + 2)?;
        let p = &self.priors;
        let d = self.dim;
        let nat: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
        if nat.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "natural-scale hyperparameter out of range at {theta:?}"
            )));
        }
        let mut lp: f64 = nat[..d]
            .iter()
            .map(|&l| log_normal_log_density(l, p.ls_mu, p.ls_sigma))
            .sum();
        lp += gamma_log_density(nat[d], p.sf_shape, p.sf_rate);
        lp += gamma_log_density(nat[d + 1], p.sn_shape, p.sn_rate);
        // Jacobian of the exp map
        lp += theta.iter().sum::<f64>();
        Ok(lp)
    }

    fn grad_log_prior(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_theta(theta, self.dim + 2)?;
        let p = &self.priors;
        let d = self.dim;
        let mut g: Vec<f64> = theta[..d]
            .iter()
            .map(|t| -(t - p.ls_mu) / (p.ls_sigma * p.ls_sigma))
            .collect();
        g.push(p.sf_shape - p.sf_rate * theta[d].exp());
        g.push(p.sn_shape - p.sn_rate * theta[d + 1].exp());
        Ok(g)
    }

    fn log_likelihood(&self, theta: &[f64], rows: &[usize]) -> Result<f64> {
        self.log_marginal(theta, rows)
    }

    fn log_likelihood_and_grad(&self, theta: &[f64], rows: &[usize]) -> Result<(f64, Vec<f64>)> {
        self.log_marginal_and_grad(theta, rows)
    }

    fn prior_mean(&self) -> Vec<f64> {
        let p = &self.priors;
        let mut m = vec![(p.ls_mu + 0.5 * p.ls_sigma * p.ls_sigma).exp(); self.dim];
        m.push(p.sf_shape / p.sf_rate);
        m.push(p.sn_shape / p.sn_rate);
        m
    }

    fn from_natural(&self, natural: &[f64]) -> Vec<f64> {
        natural.iter().map(|v| v.ln()).collect()
    }

    fn to_natural(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|v| v.exp()).collect()
    }

    fn sample_prior(&self, rng: &mut RngStream) -> Vec<f64> {
        self.priors.sample(self.dim, rng).to_theta()
    }

    fn name(&self) -> &'static str {
        "gp"
    }
}

/// Simulate a GP dataset at fixed hyperparameters.
///
/// Coordinates are isotropic Gaussian with per-axis standard deviation
/// `mean(l_d)`; responses are drawn jointly as `y = L z`. Coordinates and
/// noise come from separate streams and the factor is row-stable, so the
/// first `n'` rows of an `n`-row simulation equal the `n'`-row simulation.
pub fn simulate_gp_data_with(hyper: &GpHyper, n: usize, seed: u64) -> Result<Dataset> {
    let d = hyper.lengthscales.len();
    if d == 0 {
        return Err(Error::config("GP input dimension must be positive"));
    }
    let mut coord_rng = RngStream::for_chain(seed, DATA_CHAIN, 1);
    let mut noise_rng = RngStream::for_chain(seed, DATA_CHAIN, 2);
    let spread = hyper.lengthscales.iter().sum::<f64>() / d as f64;
    let x: Vec<f64> = (0..n * d).map(|_| spread * coord_rng.normal()).collect();
    let z: Vec<f64> = (0..n).map(|_| noise_rng.normal()).collect();
    let sn2 = hyper.sigma_n * hyper.sigma_n;
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = ard_kernel(
                &x[i * d..(i + 1) * d],
                &x[j * d..(j + 1) * d],
                &hyper.lengthscales,
                hyper.sigma_f,
            );
            cov[i * n + j] = k;
            cov[j * n + i] = k;
        }
        cov[i * n + i] += sn2;
    }
    let chol = factor_with_jitter(&cov, n, &hyper.to_theta())?;
    let y = chol.mul_lower(&z);
    Dataset::new(d, x, Some(y))
}

/// Draw hyperparameters from the prior, then simulate `n` observations.
pub fn simulate_gp_data(dim: usize, priors: &GpPriors, n: usize, seed: u64) -> Result<(Dataset, GpHyper)> {
    priors.validate()?;
    let mut hyper_rng = RngStream::for_chain(seed, DATA_CHAIN, 0);
    let hyper = priors.sample(dim, &mut hyper_rng);
    let data = simulate_gp_data_with(&hyper, n, seed)?;
    Ok((data, hyper))
}
