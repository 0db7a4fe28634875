//! Multi-chain convergence and efficiency metrics.
//!
//! All statistics follow the Gelman-Rubin construction: between-chain
//! variance `B`, within-chain variance `W`, the pooled estimate
//! `var_hat = (S-1)/S W + B/S`, the scale reduction `r_hat =
//! sqrt(var_hat / W)` and the multi-chain effective sample size
//! `C S min(1, var_hat / B)`. Every per-dimension value is aggregated by
//! its median.

use crate::error::{Error, Result};
use crate::tempering::ChainTrace;
use serde::{Deserialize, Serialize};

/// Median `r_hat` below which chains count as mixed.
pub const R_HAT_THRESHOLD: f64 = 1.1;

/// Post-burn-in samples of `C` chains, each `S x K`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSet {
    chains: usize,
    samples: usize,
    dim: usize,
    /// Chain-major, then sample, then dimension.
    data: Vec<f64>,
    /// Wall-clock duration of each chain in seconds.
    durations: Vec<f64>,
}

impl ChainSet {
    /// Build from already burnt-in chains given as flat `S x K` buffers.
    pub fn new(dim: usize, chains: &[Vec<f64>], durations: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("chain set needs at least one dimension"));
        }
        if durations.len() != chains.len() {
            return Err(Error::Dimension {
                expected: chains.len(),
                got: durations.len(),
            });
        }
        let len = chains.first().map_or(0, Vec::len);
        if !len.is_multiple_of(dim) {
            return Err(Error::config("chain length is not a multiple of the dimension"));
        }
        if let Some(bad) = chains.iter().find(|c| c.len() != len) {
            return Err(Error::Dimension {
                expected: len,
                got: bad.len(),
            });
        }
        Ok(Self {
            chains: chains.len(),
            samples: len / dim,
            dim,
            data: chains.concat(),
            durations,
        })
    }

    /// Discard the first half (rounded down) of every trace.
    pub fn from_traces(traces: &[ChainTrace]) -> Result<Self> {
        let n = traces.first().map_or(0, ChainTrace::len);
        if traces.iter().any(|t| t.len() != n) {
            return Err(Error::config("chains have different lengths"));
        }
        Self::from_prefix(traces, n)
    }

    /// Burnt-in view of the first `n` samples of every trace. Durations are
    /// the wall time up to sample `n`.
    pub fn from_prefix(traces: &[ChainTrace], n: usize) -> Result<Self> {
        let dim = traces.first().map_or(0, |t| t.dim);
        if traces.iter().any(|t| t.len() < n || t.dim != dim) {
            return Err(Error::config("prefix longer than a chain or mismatched dimensions"));
        }
        let start = n / 2;
        let chains: Vec<Vec<f64>> = traces
            .iter()
            .map(|t| t.samples[start * dim..n * dim].to_vec())
            .collect();
        let durations = traces
            .iter()
            .map(|t| if n == 0 { 0.0 } else { t.wall_time[n - 1] })
            .collect();
        Self::new(dim.max(1), &chains, durations)
    }

    pub fn chains(&self) -> usize {
        self.chains
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn value(&self, c: usize, s: usize, k: usize) -> f64 {
        self.data[(c * self.samples + s) * self.dim + k]
    }

    pub fn mean_duration(&self) -> f64 {
        if self.durations.is_empty() {
            0.0
        } else {
            self.durations.iter().sum::<f64>() / self.durations.len() as f64
        }
    }
}

/// `(B, W)` for dimension `k`.
pub fn between_within(set: &ChainSet, k: usize) -> Result<(f64, f64)> {
    let (c, s) = (set.chains, set.samples);
    if c < 2 || s < 2 {
        return Err(Error::config(format!(
            "between/within variances need C >= 2 and S >= 2, got C={c}, S={s}"
        )));
    }
    if k >= set.dim {
        return Err(Error::Dimension {
            expected: set.dim,
            got: k,
        });
    }
    let means: Vec<f64> = (0..c)
        .map(|ci| (0..s).map(|si| set.value(ci, si, k)).sum::<f64>() / s as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / c as f64;
    let b = s as f64 / (c - 1) as f64 * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let w = means
        .iter()
        .enumerate()
        .map(|(ci, m)| (0..s).map(|si| (set.value(ci, si, k) - m).powi(2)).sum::<f64>() / (s - 1) as f64)
        .sum::<f64>()
        / c as f64;
    Ok((b, w))
}

pub fn var_hat(b: f64, w: f64, s: usize) -> f64 {
    let s = s as f64;
    (s - 1.0) / s * w + b / s
}

pub fn r_hat(var_hat: f64, w: f64) -> f64 {
    if w > 0.0 {
        (var_hat / w).sqrt()
    } else if var_hat > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

pub fn ess(var_hat: f64, b: f64, c: usize, s: usize) -> f64 {
    let cs = (c * s) as f64;
    if b > 0.0 {
        cs * (var_hat / b).min(1.0)
    } else {
        cs
    }
}

/// Median of a slice; NaN for an empty one. Infinite values sort last.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimStats {
    pub b: f64,
    pub w: f64,
    pub var_hat: f64,
    pub r_hat: f64,
    pub ess: f64,
}

pub fn dim_stats(set: &ChainSet, k: usize) -> Result<DimStats> {
    let (b, w) = between_within(set, k)?;
    let v = var_hat(b, w, set.samples);
    Ok(DimStats {
        b,
        w,
        var_hat: v,
        r_hat: r_hat(v, w),
        ess: ess(v, b, set.chains, set.samples),
    })
}

pub fn median_r_hat(set: &ChainSet) -> Result<f64> {
    let r = (0..set.dim)
        .map(|k| dim_stats(set, k).map(|d| d.r_hat))
        .collect::<Result<Vec<_>>>()?;
    Ok(median(&r))
}

pub fn converged(set: &ChainSet) -> Result<bool> {
    Ok(median_r_hat(set)? < R_HAT_THRESHOLD)
}

/// Median ESS divided by the mean chain duration.
pub fn ess_per_second(report: &DiagnosticReport, set: &ChainSet) -> Result<f64> {
    let t = set.mean_duration();
    if !(t > 0.0) {
        return Err(Error::config("ESS per second needs a positive chain duration"));
    }
    Ok(report.median_ess / t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Prefix length per chain, before burn-in.
    pub samples: usize,
    /// Mean chain wall time at the end of the prefix.
    pub wall_time_s: f64,
    pub median_r_hat: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub points: Vec<CurvePoint>,
    /// First prefix at which the chains count as converged.
    pub first: Option<CurvePoint>,
}

/// Evenly spaced prefix lengths: every multiple of `step` up to `total`,
/// plus `total` itself. Prefixes too short for two post-burn-in samples are
/// skipped.
pub fn checkpoints(total: usize, step: usize) -> Vec<usize> {
    let step = step.max(1);
    let mut out: Vec<usize> = (1..=total / step).map(|i| i * step).filter(|&n| n >= 4).collect();
    if total >= 4 && out.last() != Some(&total) {
        out.push(total);
    }
    out
}

/// Median `r_hat` over growing prefixes, re-halving burn-in at each one.
pub fn convergence_time(traces: &[ChainTrace], prefixes: &[usize]) -> Result<ConvergenceCurve> {
    let mut curve = ConvergenceCurve::default();
    for &n in prefixes {
        let set = ChainSet::from_prefix(traces, n)?;
        let point = CurvePoint {
            samples: n,
            wall_time_s: set.mean_duration(),
            median_r_hat: median_r_hat(&set)?,
        };
        if curve.first.is_none() && point.median_r_hat < R_HAT_THRESHOLD {
            curve.first = Some(point.clone());
        }
        curve.points.push(point);
    }
    Ok(curve)
}

/// Summary of a multi-chain run. Undefined quantities serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub per_dim: Vec<DimStats>,
    pub median_r_hat: f64,
    pub median_ess: f64,
    pub ess_per_sec: Option<f64>,
    /// Time normalization used for `ess_per_sec`.
    pub mean_chain_duration_s: f64,
    pub converged: bool,
    pub convergence_time_s: Option<f64>,
    pub convergence_samples: Option<usize>,
}

impl DiagnosticReport {
    /// Report for runs too short to diagnose.
    pub fn sentinel() -> Self {
        Self {
            per_dim: vec![],
            median_r_hat: f64::NAN,
            median_ess: f64::NAN,
            ess_per_sec: None,
            mean_chain_duration_s: 0.0,
            converged: false,
            convergence_time_s: None,
            convergence_samples: None,
        }
    }

    pub fn from_set(set: &ChainSet) -> Result<Self> {
        let per_dim = (0..set.dim).map(|k| dim_stats(set, k)).collect::<Result<Vec<_>>>()?;
        let r: Vec<f64> = per_dim.iter().map(|d| d.r_hat).collect();
        let e: Vec<f64> = per_dim.iter().map(|d| d.ess).collect();
        let mut report = Self {
            median_r_hat: median(&r),
            median_ess: median(&e),
            converged: median(&r) < R_HAT_THRESHOLD,
            mean_chain_duration_s: set.mean_duration(),
            per_dim,
            ..Self::sentinel()
        };
        report.ess_per_sec = ess_per_second(&report, set).ok();
        Ok(report)
    }

    /// Full report for equal-length traces: burn-in, statistics and the
    /// convergence scan over `prefixes`. Too few chains or samples yield
    /// the sentinel.
    pub fn from_traces(traces: &[ChainTrace], prefixes: &[usize]) -> Result<Self> {
        let set = ChainSet::from_traces(traces)?;
        if set.chains < 2 || set.samples < 2 {
            return Ok(Self::sentinel());
        }
        let mut report = Self::from_set(&set)?;
        let curve = convergence_time(traces, prefixes)?;
        if let Some(p) = curve.first {
            report.convergence_time_s = Some(p.wall_time_s);
            report.convergence_samples = Some(p.samples);
        }
        Ok(report)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
