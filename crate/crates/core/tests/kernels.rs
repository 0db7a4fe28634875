mod common;

use common::{ks_pvalue, mean_var, normal_cdf, StdNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::sync::Arc;
use subtemper::data::IndexSet;
use subtemper::error::Result;
use subtemper::kernels::metropolis_accept;
use subtemper::kernels::{leapfrog, KernelConfig, LevelState};
use subtemper::models::LogTarget;
use subtemper::rng::RngStream;
use subtemper::tempering::TemperedTarget;

fn std_target(dim: usize) -> TemperedTarget {
    let rows: IndexSet = vec![0].into();
    TemperedTarget::powered(Arc::new(StdNormal(dim)), 1.0, rows, 0)
}

/// Gradient of a non-quadratic log density `-sum(q^2/2 + q^4/40)`.
fn quartic_grad(q: &[f64]) -> Vec<f64> {
    q.iter().map(|v| -v - 0.1 * v.powi(3)).collect()
}

fn quartic_energy(q: &[f64], p: &[f64]) -> f64 {
    q.iter().map(|v| 0.5 * v * v + v.powi(4) / 40.0).sum::<f64>() + 0.5 * p.iter().map(|v| v * v).sum::<f64>()
}

#[test]
fn leapfrog_is_reversible() {
    let q0 = [0.3, -1.2, 0.8];
    let p0 = [1.0, 0.5, -0.7];
    let (q1, p1) = leapfrog(&q0, &p0, 0.05, 25, quartic_grad).unwrap().unwrap();
    let flipped: Vec<f64> = p1.iter().map(|v| -v).collect();
    let (q2, p2) = leapfrog(&q1, &flipped, 0.05, 25, quartic_grad).unwrap().unwrap();
    for k in 0..3 {
        assert!((q2[k] - q0[k]).abs() < 1e-10);
        assert!((p2[k] + p0[k]).abs() < 1e-10);
    }
}

fn determinant(mut a: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))
            .unwrap();
        if piv != c {
            for k in 0..n {
                a.swap(c * n + k, piv * n + k);
            }
            det = -det;
        }
        let p = a[c * n + c];
        det *= p;
        for r in c + 1..n {
            let f = a[r * n + c] / p;
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
        }
    }
    det
}

#[test]
fn leapfrog_preserves_volume() {
    let d = 2;
    let z0 = [0.4, -0.9, 0.2, 1.1];
    let map = |z: &[f64]| {
        let (q, p) = leapfrog(&z[..d], &z[d..], 0.1, 15, quartic_grad).unwrap().unwrap();
        [q, p].concat()
    };
    let h = 1e-6;
    let n = 2 * d;
    let mut jac = vec![0.0; n * n];
    for j in 0..n {
        let mut hi = z0.to_vec();
        let mut lo = z0.to_vec();
        hi[j] += h;
        lo[j] -= h;
        let (fh, fl) = (map(&hi), map(&lo));
        for i in 0..n {
            jac[i * n + j] = (fh[i] - fl[i]) / (2.0 * h);
        }
    }
    let det = determinant(jac, n);
    assert!((det - 1.0).abs() < 1e-6, "det = {det}");
}

#[test]
fn leapfrog_energy_error_is_small() {
    let mut rng = RngStream::new(1, 0);
    for _ in 0..20 {
        let q: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let p: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let (q1, p1) = leapfrog(&q, &p, 0.01, 10, quartic_grad).unwrap().unwrap();
        assert!((quartic_energy(&q1, &p1) - quartic_energy(&q, &p)).abs() < 1e-4);
    }
}

#[test]
fn hmc_recovers_standard_normal_moments() {
    let dim = 50;
    let target = std_target(dim);
    let kernel = KernelConfig::hmc(0.2, 10);
    let mut rng = RngStream::new(3, 0);
    let mut state = LevelState::new(vec![0.0; dim], &target, true).unwrap();
    let mut draws = Vec::new();
    let mut accepts = 0;
    for i in 0..4000 {
        accepts += kernel.transition(&mut state, &target, &mut rng).unwrap() as usize;
        if i >= 200 {
            draws.extend_from_slice(&state.theta);
        }
    }
    let (m, v) = mean_var(&draws);
    assert!(m.abs() < 0.02, "mean {m}");
    assert!((v - 1.0).abs() < 0.03, "var {v}");
    assert!(accepts > 3000);
}

#[test]
fn mh_recovers_standard_normal_moments() {
    let target = std_target(2);
    let kernel = KernelConfig::mh(1.0);
    let mut rng = RngStream::new(4, 0);
    let mut state = LevelState::new(vec![0.0; 2], &target, false).unwrap();
    let mut draws = Vec::new();
    for i in 0..60_000 {
        kernel.transition(&mut state, &target, &mut rng).unwrap();
        if i >= 1000 {
            draws.extend_from_slice(&state.theta);
        }
    }
    let (m, v) = mean_var(&draws);
    assert!(m.abs() < 0.03, "mean {m}");
    assert!((v - 1.0).abs() < 0.06, "var {v}");
}

/// Exact posterior starts stay exact after a few kernel steps.
fn check_stationarity(kernel: &KernelConfig, steps: usize, seed: u64) {
    let (dim, n) = (2, 64);
    let model = common::mvn_model(dim, n, seed);
    let rows: IndexSet = (0..n).collect();
    let (mean, sd) = common::tempered_gaussian(&model, &rows, 1.0);
    let dyn_model: Arc<dyn LogTarget> = model;
    let target = TemperedTarget::powered(dyn_model, 1.0, rows, 0);
    let mut draw_rng = RngStream::new(seed, 100);
    let mut cols = vec![Vec::new(); dim];
    let mut moved = 0;
    for r in 0..2000 {
        let start = common::draw(&mean, sd, &mut draw_rng);
        let mut state = LevelState::new(start.clone(), &target, kernel.needs_gradient()).unwrap();
        let mut rng = RngStream::new(seed, r);
        for _ in 0..steps {
            kernel.transition(&mut state, &target, &mut rng).unwrap();
        }
        moved += (state.theta != start) as usize;
        for k in 0..dim {
            cols[k].push(state.theta[k]);
        }
    }
    assert!(moved > 1000);
    for k in 0..dim {
        let p = ks_pvalue(cols[k].clone(), |x| normal_cdf(x, mean[k], sd));
        assert!(p > 0.01, "{:?} dim {k}: KS p = {p}", kernel.kind);
    }
    // Squared standardized distance from the posterior mean is chi-squared with D dof.
    let chi2: Vec<f64> = (0..cols[0].len())
        .map(|i| (0..dim).map(|k| ((cols[k][i] - mean[k]) / sd).powi(2)).sum())
        .collect();
    let law = ChiSquared::new(dim as f64).unwrap();
    let p = ks_pvalue(chi2, |x| law.cdf(x));
    assert!(p > 0.01, "{:?} chi-squared: KS p = {p}", kernel.kind);
}

#[test]
fn hmc_preserves_exact_posterior() {
    check_stationarity(&KernelConfig::hmc(0.05, 10), 3, 5);
}

#[test]
fn mh_preserves_exact_posterior() {
    check_stationarity(&KernelConfig::mh(0.1), 5, 6);
}

#[test]
fn hmc_recomputes_missing_gradient() {
    let target = std_target(3);
    let mut state = LevelState::new(vec![0.5; 3], &target, false).unwrap();
    assert!(state.eval.grad.is_none());
    let mut rng = RngStream::new(0, 0);
    KernelConfig::hmc(0.1, 5)
        .transition(&mut state, &target, &mut rng)
        .unwrap();
    assert!(state.eval.grad.is_some());
}

#[test]
fn invalid_kernels_are_rejected() {
    assert!(KernelConfig::hmc(0.0, 10).validate().is_err());
    assert!(KernelConfig::hmc(0.01, 0).validate().is_err());
    assert!(KernelConfig::mh(-1.0).validate().is_err());
    assert!(KernelConfig::default().validate().is_ok());
}

struct Flat(usize);

impl LogTarget for Flat {
    fn dim(&self) -> usize {
        self.0
    }
    fn n_obs(&self) -> usize {
        1
    }
    fn log_prior(&self, _: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
    fn grad_log_prior(&self, t: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; t.len()])
    }
    fn log_likelihood(&self, _: &[f64], _: &[usize]) -> Result<f64> {
        Ok(0.0)
    }
    fn log_likelihood_and_grad(&self, t: &[f64], _: &[usize]) -> Result<(f64, Vec<f64>)> {
        Ok((0.0, vec![0.0; t.len()]))
    }
    fn prior_mean(&self) -> Vec<f64> {
        vec![0.0; self.0]
    }
    fn sample_prior(&self, _: &mut RngStream) -> Vec<f64> {
        vec![0.0; self.0]
    }
    fn name(&self) -> &'static str {
        "flat"
    }
}

#[test]
fn flat_targets_accept_everything() {
    let rows: IndexSet = vec![0].into();
    let target = TemperedTarget::powered(Arc::new(Flat(3)), 1.0, rows, 0);
    let mut rng = RngStream::new(2, 0);
    let mut state = LevelState::new(vec![0.0; 3], &target, true).unwrap();
    for _ in 0..500 {
        assert!(KernelConfig::mh(0.1).transition(&mut state, &target, &mut rng).unwrap());
    }
    // HMC moves along a straight line: theta + eps L p.
    let (eps, steps) = (0.01, 10);
    for _ in 0..100 {
        let before = state.theta.clone();
        let mut probe = rng.clone();
        let p: Vec<f64> = (0..3).map(|_| probe.normal()).collect();
        assert!(KernelConfig::hmc(eps, steps)
            .transition(&mut state, &target, &mut rng)
            .unwrap());
        for k in 0..3 {
            assert!((state.theta[k] - (before[k] + eps * steps as f64 * p[k])).abs() < 1e-12);
        }
    }
}

#[test]
fn leapfrog_single_step_is_euler_to_first_order() {
    let (q, p) = ([0.5, -0.2], [1.0, 2.0]);
    for eps in [1e-3, 1e-4, 1e-5] {
        let (q1, _) = leapfrog(&q, &p, eps, 1, quartic_grad).unwrap().unwrap();
        for k in 0..2 {
            assert!((q1[k] - (q[k] + eps * p[k])).abs() < eps * eps);
        }
    }
    assert!(leapfrog(&q, &p, 0.1, 0, quartic_grad).is_err());
}

#[test]
fn leapfrog_energy_on_unit_gaussian() {
    let grad = |q: &[f64]| vec![-q[0]];
    let mut rng = RngStream::new(6, 0);
    for _ in 0..100 {
        let (q, p) = ([rng.normal()], [rng.normal()]);
        let (q1, p1) = leapfrog(&q, &p, 0.01, 10, grad).unwrap().unwrap();
        let dh = 0.5 * (q1[0] * q1[0] + p1[0] * p1[0]) - 0.5 * (q[0] * q[0] + p[0] * p[0]);
        assert!(dh.abs() < 1e-4);
    }
}

#[test]
fn mh_with_small_steps_on_one_dimension() {
    let target = std_target(1);
    let kernel = KernelConfig::mh(0.1);
    let mut rng = RngStream::new(8, 0);
    let mut state = LevelState::new(vec![0.0], &target, false).unwrap();
    let draws: Vec<f64> = (0..100_000)
        .map(|_| {
            kernel.transition(&mut state, &target, &mut rng).unwrap();
            state.theta[0]
        })
        .collect();
    let (m, v) = mean_var(&draws);
    assert!(m.abs() < 0.05, "mean {m}");
    assert!((v - 1.0).abs() < 0.1, "var {v}");
}

#[test]
fn hmc_default_settings_on_fifty_dimensions() {
    let dim = 50;
    let target = std_target(dim);
    let kernel = KernelConfig::hmc(0.01, 10);
    let mut rng = RngStream::new(9, 0);
    let start: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let mut state = LevelState::new(start, &target, true).unwrap();
    let steps = 50_000;
    let mut accepts = 0;
    let mut sum = vec![0.0; dim];
    let mut sq = vec![0.0; dim];
    for _ in 0..steps {
        accepts += kernel.transition(&mut state, &target, &mut rng).unwrap() as usize;
        for k in 0..dim {
            sum[k] += state.theta[k];
            sq[k] += state.theta[k] * state.theta[k];
        }
    }
    assert!(accepts as f64 > 0.95 * steps as f64);
    let n = steps as f64;
    let var: Vec<f64> = (0..dim).map(|k| sq[k] / n - (sum[k] / n).powi(2)).collect();
    let pooled = var.iter().sum::<f64>() / dim as f64;
    assert!((pooled - 1.0).abs() < 0.1, "pooled variance {pooled}");
}

/// Five-point target with a +-1 proposal; off-grid proposals reject.
#[test]
fn grid_chain_satisfies_detailed_balance() {
    let logp = [0.0f64, 1.0, 0.5, -0.3, 0.8];
    let z: f64 = logp.iter().map(|l| l.exp()).sum();
    let pi: Vec<f64> = logp.iter().map(|l| l.exp() / z).collect();
    let mut rng = RngStream::new(10, 0);
    let mut counts = [[0u64; 5]; 5];
    let mut x = 0usize;
    let n = 1_000_000;
    for _ in 0..n {
        let up = rng.uniform() < 0.5;
        let y = if up { x as i64 + 1 } else { x as i64 - 1 };
        let ratio = if (0..5).contains(&y) {
            logp[y as usize] - logp[x]
        } else {
            f64::NAN
        };
        let next = if metropolis_accept(ratio, &mut rng) {
            y as usize
        } else {
            x
        };
        counts[x][next] += 1;
        x = next;
    }
    for i in 0..5 {
        for j in i + 1..5 {
            let (fij, fji) = (counts[i][j] as f64 / n as f64, counts[j][i] as f64 / n as f64);
            // Flows pi_i T_ij and pi_j T_ji as empirical pair frequencies.
            let se = ((fij + fji) / n as f64).sqrt().max(1.0 / n as f64);
            assert!((fij - fji).abs() < 3.0 * se, "{i}<->{j}: {fij} vs {fji}");
            if j == i + 1 {
                let exact = pi[i] * 0.5 * (logp[j] - logp[i]).exp().min(1.0);
                assert!((fij - exact).abs() < 5.0 * (exact / n as f64).sqrt());
            }
        }
    }
}
