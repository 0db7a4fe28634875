use proptest::prelude::*;
use subtemper::diagnostics::{
    checkpoints, convergence_time, dim_stats, median, median_r_hat, ChainSet, DiagnosticReport, R_HAT_THRESHOLD,
};
use subtemper::rng::RngStream;
use subtemper::tempering::ChainTrace;

fn iid_set(chains: usize, samples: usize, dim: usize, rng: &mut RngStream) -> ChainSet {
    let data: Vec<Vec<f64>> = (0..chains)
        .map(|_| (0..samples * dim).map(|_| rng.normal()).collect())
        .collect();
    ChainSet::new(dim, &data, vec![1.0; chains]).unwrap()
}

fn ar1_traces(phi: f64, samples: usize, starts: &[f64], dim: usize, seed: u64) -> Vec<ChainTrace> {
    starts
        .iter()
        .enumerate()
        .map(|(c, &x0)| {
            let mut rng = RngStream::new(seed, c as u64);
            let mut t = ChainTrace::new(c, dim);
            let mut x = vec![x0; dim];
            for s in 0..samples {
                for v in x.iter_mut() {
                    *v = phi * *v + rng.normal();
                }
                t.push(&x, 0.001 * (s + 1) as f64, true);
            }
            t
        })
        .collect()
}

#[test]
fn hand_computed_example() {
    let set = ChainSet::new(1, &[vec![1.0, 3.0], vec![5.0, 7.0]], vec![2.0, 4.0]).unwrap();
    let d = dim_stats(&set, 0).unwrap();
    assert_eq!(d.b, 16.0);
    assert_eq!(d.w, 2.0);
    assert_eq!(d.var_hat, 9.0);
    assert!((d.r_hat - 4.5f64.sqrt()).abs() < 1e-15);
    assert_eq!(d.ess, 2.25);
    let r = DiagnosticReport::from_set(&set).unwrap();
    assert_eq!(r.mean_chain_duration_s, 3.0);
    assert_eq!(r.ess_per_sec, Some(0.75));
}

proptest! {
    #[test]
    fn statistics_are_affine_invariant(
        values in prop::collection::vec(-10.0f64..10.0, 30),
        scale in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        shift in -100.0f64..100.0,
    ) {
        let chains: Vec<Vec<f64>> = values.chunks(10).map(<[f64]>::to_vec).collect();
        let moved: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|v| scale * v + shift).collect()).collect();
        let a = dim_stats(&ChainSet::new(1, &chains, vec![1.0; 3]).unwrap(), 0).unwrap();
        let b = dim_stats(&ChainSet::new(1, &moved, vec![1.0; 3]).unwrap(), 0).unwrap();
        prop_assert!((a.r_hat - b.r_hat).abs() <= 1e-8 * a.r_hat);
        prop_assert!((a.ess - b.ess).abs() <= 1e-8 * a.ess);
    }

    #[test]
    fn separating_one_chain_raises_r_hat(values in prop::collection::vec(-1.0f64..1.0, 30), d1 in 0.0f64..5.0, extra in 0.01f64..5.0) {
        let shifted = |d: f64| {
            let mut chains: Vec<Vec<f64>> = values.chunks(10).map(<[f64]>::to_vec).collect();
            let m0: f64 = chains[0].iter().sum::<f64>() / 10.0;
            let rest: f64 = chains[1..].iter().flatten().sum::<f64>() / 20.0;
            // Push chain 0 away from the others.
            let dir = if m0 >= rest { 1.0 } else { -1.0 };
            for v in chains[0].iter_mut() {
                *v += dir * d;
            }
            dim_stats(&ChainSet::new(1, &chains, vec![1.0; 3]).unwrap(), 0).unwrap().r_hat
        };
        prop_assert!(shifted(d1 + extra) >= shifted(d1));
    }
}

#[test]
fn iid_chains_have_r_hat_near_one() {
    let mut rng = RngStream::new(1, 0);
    let set = iid_set(4, 10_000, 3, &mut rng);
    for k in 0..3 {
        let r = dim_stats(&set, k).unwrap().r_hat;
        assert!((r - 1.0).abs() < 0.02, "r_hat {r}");
    }
}

#[test]
fn iid_ess_fraction_matches_its_law() {
    // With C = 3 iid chains, var_hat / B is about 1 / Exp(1), so
    // P(ESS >= 0.8 C S) = P(Exp(1) <= 1.25).
    let (c, s, reps) = (3, 200, 2000);
    let mut rng = RngStream::new(2, 0);
    let mut hits = 0;
    for _ in 0..reps {
        let set = iid_set(c, s, 1, &mut rng);
        let e = dim_stats(&set, 0).unwrap().ess;
        assert!(e <= (c * s) as f64);
        hits += (e >= 0.8 * (c * s) as f64) as usize;
    }
    let p = 1.0 - (-1.25f64).exp();
    let frac = hits as f64 / reps as f64;
    let tol = 4.0 * (p * (1.0 - p) / reps as f64).sqrt();
    assert!((frac - p).abs() < tol, "fraction {frac}, expected {p:.4} +- {tol:.4}");
}

#[test]
fn slow_ar1_chains_need_many_samples() {
    let starts = [-20.0, 0.0, 20.0];
    let short = ar1_traces(0.99, 200, &starts, 3, 5);
    assert!(!DiagnosticReport::from_traces(&short, &[200]).unwrap().converged);
    let long = ar1_traces(0.99, 50_000, &starts, 3, 5);
    let report = DiagnosticReport::from_traces(&long, &checkpoints(50_000, 500)).unwrap();
    assert!(report.converged, "median r_hat {}", report.median_r_hat);
    let n = report.convergence_samples.unwrap();
    assert!(n > 200 && n <= 50_000);
    // Wall time of sample n is 0.001 n in every chain.
    assert!((report.convergence_time_s.unwrap() - 0.001 * n as f64).abs() < 1e-9);
}

#[test]
fn median_ignores_one_broken_dimension() {
    let mut rng = RngStream::new(3, 0);
    let mut chains: Vec<Vec<f64>> = (0..3).map(|_| (0..3000).map(|_| rng.normal()).collect()).collect();
    // Dimension 2 is constant within each chain but differs across chains.
    for (c, chain) in chains.iter_mut().enumerate() {
        for s in 0..1000 {
            chain[3 * s + 2] = c as f64;
        }
    }
    let set = ChainSet::new(3, &chains, vec![1.0; 3]).unwrap();
    assert_eq!(dim_stats(&set, 2).unwrap().r_hat, f64::INFINITY);
    let m = median_r_hat(&set).unwrap();
    assert!(m.is_finite() && m < R_HAT_THRESHOLD);
    assert_eq!(median(&[f64::INFINITY, 1.0, 2.0]), 2.0);
    assert!(median(&[]).is_nan());
}

#[test]
fn convergence_scan_rehalves_burn_in() {
    let starts = [-50.0, 50.0];
    let traces = ar1_traces(0.98, 2000, &starts, 1, 7);
    let prefixes = checkpoints(2000, 100);
    assert_eq!(prefixes.len(), 20);
    let curve = convergence_time(&traces, &prefixes).unwrap();
    assert_eq!(curve.points.len(), 20);
    // Early prefixes still contain the transient; later ones have burnt it off.
    assert!(curve.points[0].median_r_hat > R_HAT_THRESHOLD);
    let first = curve.first.unwrap();
    assert!(first.samples > 100);
    for p in &curve.points {
        let set = ChainSet::from_prefix(&traces, p.samples).unwrap();
        assert_eq!(set.samples(), p.samples - p.samples / 2);
        assert_eq!(median_r_hat(&set).unwrap(), p.median_r_hat);
    }
}

#[test]
fn single_chains_and_empty_runs_give_the_sentinel() {
    let one = ar1_traces(0.5, 100, &[0.0], 2, 1);
    let r = DiagnosticReport::from_traces(&one, &[100]).unwrap();
    assert!(r.median_r_hat.is_nan() && !r.converged && r.ess_per_sec.is_none());
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert!(json["median_r_hat"].is_null());
    assert!(json["convergence_time_s"].is_null());
    let empty = vec![ChainTrace::new(0, 2), ChainTrace::new(1, 2)];
    assert!(DiagnosticReport::from_traces(&empty, &[]).unwrap().per_dim.is_empty());
}

#[test]
fn mismatched_chains_error() {
    assert!(ChainSet::new(1, &[vec![1.0, 2.0], vec![1.0]], vec![1.0; 2]).is_err());
    assert!(ChainSet::new(1, &[vec![1.0, 2.0]], vec![]).is_err());
    let mut traces = ar1_traces(0.5, 10, &[0.0, 1.0], 1, 1);
    traces[1] = traces[1].prefix(8);
    assert!(ChainSet::from_traces(&traces).is_err());
}
