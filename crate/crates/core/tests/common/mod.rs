#![allow(dead_code)]

use std::sync::Arc;
use subtemper::data::Dataset;
use subtemper::error::Result;
use subtemper::models::{LogTarget, MvnMeanModel};
use subtemper::rng::RngStream;

/// Two-sided Kolmogorov-Smirnov p-value of `xs` against `cdf`, using the
/// asymptotic distribution with Stephens' small-sample correction.
pub fn ks_pvalue(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = 2.0 * if k as i64 % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * k * k * lambda * lambda).exp();
        s += term;
        if term.abs() < 1e-14 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

pub fn normal_cdf(x: f64, mu: f64, sd: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(mu, sd).unwrap().cdf(x)
}

/// MVN mean model with identity covariance on simulated data.
pub fn mvn_model(dim: usize, n: usize, seed: u64) -> Arc<MvnMeanModel> {
    let mut rng = RngStream::new(seed, 7);
    let theta: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let x: Vec<f64> = (0..n * dim).map(|i| theta[i % dim] + rng.normal()).collect();
    Arc::new(MvnMeanModel::identity(1.0, Dataset::new(dim, x, None).unwrap()).unwrap())
}

/// Per-dimension mean and sd of `w * loglik(rows) + logprior` for an
/// identity-covariance MVN model with unit prior sd.
pub fn tempered_gaussian(model: &MvnMeanModel, rows: &[usize], w: f64) -> (Vec<f64>, f64) {
    let d = model.dim();
    let data = model.data();
    let prec = w * rows.len() as f64 + 1.0;
    let mean = (0..d)
        .map(|k| w * rows.iter().map(|&r| data.row(r)[k]).sum::<f64>() / prec)
        .collect();
    (mean, prec.sqrt().recip())
}

/// Exact draw from a diagonal Gaussian.
pub fn draw(mean: &[f64], sd: f64, rng: &mut RngStream) -> Vec<f64> {
    mean.iter().map(|m| m + sd * rng.normal()).collect()
}

/// Standard normal in `dim` dimensions, with no data.
pub struct StdNormal(pub usize);

impl LogTarget for StdNormal {
    fn dim(&self) -> usize {
        self.0
    }
    fn n_obs(&self) -> usize {
        1
    }
    fn log_prior(&self, theta: &[f64]) -> Result<f64> {
        Ok(-0.5 * theta.iter().map(|t| t * t).sum::<f64>())
    }
    fn grad_log_prior(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(theta.iter().map(|t| -t).collect())
    }
    fn log_likelihood(&self, _: &[f64], _: &[usize]) -> Result<f64> {
        Ok(0.0)
    }
    fn log_likelihood_and_grad(&self, theta: &[f64], _: &[usize]) -> Result<(f64, Vec<f64>)> {
        Ok((0.0, vec![0.0; theta.len()]))
    }
    fn prior_mean(&self) -> Vec<f64> {
        vec![0.0; self.0]
    }
    fn sample_prior(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.0).map(|_| rng.normal()).collect()
    }
    fn name(&self) -> &'static str {
        "std-normal"
    }
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}
