mod common;

use subtemper::data::{draw_nested_subsamples, Dataset};
use subtemper::harness::{ExperimentConfig, ModelKind, Problem};
use subtemper::models::{
    equicorrelated, simulate_gp_data, simulate_mvn_data, GpHyper, GpPriors, GpRegressionModel, LogTarget, MvnMeanModel,
};
use subtemper::rng::RngStream;

const FD_STEP: f64 = 1e-5;
const FD_POINTS: usize = 20;

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    diff / scale
}

fn central_diff(f: impl Fn(&[f64]) -> f64, theta: &[f64]) -> Vec<f64> {
    (0..theta.len())
        .map(|k| {
            let mut hi = theta.to_vec();
            let mut lo = theta.to_vec();
            hi[k] += FD_STEP;
            lo[k] -= FD_STEP;
            (f(&hi) - f(&lo)) / (2.0 * FD_STEP)
        })
        .collect()
}

fn gp_model(n: usize, dim: usize, seed: u64) -> GpRegressionModel {
    let priors = GpPriors::default();
    let (data, _) = simulate_gp_data(dim, &priors, n, seed).unwrap();
    GpRegressionModel::new(data, priors).unwrap()
}

#[test]
fn gp_gradient_matches_finite_differences() {
    let model = gp_model(32, 3, 11);
    let rows: Vec<usize> = (0..32).collect();
    let mut rng = RngStream::new(5, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..FD_POINTS {
        let theta = model.sample_prior(&mut rng);
        let (_, g) = model.log_likelihood_and_grad(&theta, &rows).unwrap();
        let fd = central_diff(|t| model.log_likelihood(t, &rows).unwrap(), &theta);
        worst = worst.max(relative_error(&g, &fd));
        let gp = model.grad_log_prior(&theta).unwrap();
        let fdp = central_diff(|t| model.log_prior(t).unwrap(), &theta);
        assert!(relative_error(&gp, &fdp) < 1e-5);
    }
    assert!(worst < 1e-5, "worst relative error {worst:e}");
}

#[test]
fn gp_gradient_on_subsets() {
    let model = gp_model(32, 2, 3);
    let mut rng = RngStream::new(9, 1);
    let fam = draw_nested_subsamples(32, &[32, 16], &mut rng).unwrap();
    let rows = fam.level(1).to_vec();
    for _ in 0..5 {
        let theta = model.sample_prior(&mut rng);
        let (v, g) = model.log_likelihood_and_grad(&theta, &rows).unwrap();
        assert_eq!(v, model.log_likelihood(&theta, &rows).unwrap());
        let fd = central_diff(|t| model.log_likelihood(t, &rows).unwrap(), &theta);
        assert!(relative_error(&g, &fd) < 1e-5);
    }
}

#[test]
fn mvn_gradient_matches_finite_differences() {
    let mut rng = RngStream::new(2, 0);
    let sigma = equicorrelated(4, 0.4);
    let data = simulate_mvn_data(&sigma, &[0.5, -1.0, 0.0, 2.0], 32, &mut rng).unwrap();
    let model = MvnMeanModel::new(sigma, 1.5, data).unwrap();
    let rows: Vec<usize> = (0..32).step_by(2).collect();
    for _ in 0..FD_POINTS {
        let theta = model.sample_prior(&mut rng);
        let (_, g) = model.log_likelihood_and_grad(&theta, &rows).unwrap();
        let fd = central_diff(|t| model.log_likelihood(t, &rows).unwrap(), &theta);
        assert!(relative_error(&g, &fd) < 1e-5);
        let fdp = central_diff(|t| model.log_prior(t).unwrap(), &theta);
        assert!(relative_error(&model.grad_log_prior(&theta).unwrap(), &fdp) < 1e-5);
    }
}

#[test]
fn mvn_likelihood_is_additive() {
    let model = common::mvn_model(3, 40, 1);
    let theta = [0.2, -0.3, 1.1];
    let all: Vec<usize> = (0..40).collect();
    let (a, b): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| i % 3 == 0);
    let total = model.log_likelihood(&theta, &all).unwrap();
    let split = model.log_likelihood(&theta, &a).unwrap() + model.log_likelihood(&theta, &b).unwrap();
    assert!((total - split).abs() < 1e-9 * total.abs());
    let (_, g) = model.log_likelihood_and_grad(&theta, &all).unwrap();
    let (_, ga) = model.log_likelihood_and_grad(&theta, &a).unwrap();
    let (_, gb) = model.log_likelihood_and_grad(&theta, &b).unwrap();
    for k in 0..3 {
        assert!((g[k] - ga[k] - gb[k]).abs() < 1e-9);
    }
}

/// Dense log N(y | 0, C) through Gauss-Jordan elimination with partial pivoting.
fn dense_log_marginal(c: &[f64], y: &[f64]) -> f64 {
    let n = y.len();
    let mut a = c.to_vec();
    let mut b = y.to_vec();
    let mut log_det = 0.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        log_det += p.abs().ln();
        for r in 0..n {
            if r != col {
                let f = a[r * n + col] / p;
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let quad: f64 = (0..n).map(|i| y[i] * b[i] / a[i * n + i]).sum();
    -0.5 * quad - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

#[test]
fn gp_cholesky_matches_dense_evaluation() {
    let model = gp_model(24, 2, 4);
    let data = model.data();
    let y = data.responses().unwrap();
    let mut rng = RngStream::new(3, 3);
    for _ in 0..5 {
        let theta = model.sample_prior(&mut rng);
        let h = GpHyper::from_theta(&theta);
        let n = data.len();
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] = subtemper::models::ard_kernel(data.row(i), data.row(j), &h.lengthscales, h.sigma_f);
            }
            c[i * n + i] += h.sigma_n * h.sigma_n;
        }
        let rows: Vec<usize> = (0..n).collect();
        let chol = model.log_likelihood(&theta, &rows).unwrap();
        let dense = dense_log_marginal(&c, y);
        assert!((chol - dense).abs() < 1e-10 * dense.abs().max(1.0), "{chol} vs {dense}");
    }
}

#[test]
fn mvn_simulation_moments() {
    let sigma = equicorrelated(3, 0.5);
    let mut rng = RngStream::new(8, 0);
    let n = 10_000;
    let data = simulate_mvn_data(&sigma, &[1.0, 0.0, -1.0], n, &mut rng).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            let xa: Vec<f64> = (0..n).map(|i| data.row(i)[a]).collect();
            let xb: Vec<f64> = (0..n).map(|i| data.row(i)[b]).collect();
            let (ma, _) = common::mean_var(&xa);
            let (mb, _) = common::mean_var(&xb);
            let cov = xa.iter().zip(&xb).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1) as f64;
            // sd of a sample covariance is at most sqrt(2 / n) for unit variances
            assert!((cov - sigma[a * 3 + b]).abs() < 4.0 * (2.0 / n as f64).sqrt());
        }
    }
}

fn csv_bytes(d: &Dataset) -> Vec<u8> {
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn simulated_data_prefix_property() {
    for kind in [ModelKind::Mvn, ModelKind::Gp] {
        let mut small = ExperimentConfig::default();
        small.model.kind = kind;
        small.model.dim = 3;
        small.model.n = 64;
        small.sampler.seed = 21;
        let mut large = small.clone();
        large.model.n = 128;
        let a = Problem::build(&small).unwrap().data;
        let b = Problem::build(&large).unwrap().data;
        assert_eq!(b.prefix(64), a, "{kind}");
        assert_eq!(csv_bytes(&b.prefix(64)), csv_bytes(&a));
    }
}

#[test]
fn gp_models_have_d_plus_two_parameters() {
    for d in [3, 8] {
        let m = gp_model(8, d, 1);
        assert_eq!(m.dim(), d + 2);
    }
}
