//! Closed-form relative cost of tempering versus the bare inner sampler.
//!
//! With per-evaluation cost `tau N^alpha`, level `m` of a subsampled ladder
//! costs `beta_m^alpha` relative to the target, so a sweep costs
//! `sum_{m=0}^{M} x^m` with `x = beta_*^{alpha/M}`. Tempered transitions
//! visit every auxiliary level twice and the target once.

use crate::error::{Error, Result};
use crate::tempering::{ChainTrace, Method};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Auxiliary level count `M`.
    pub levels: usize,
    pub beta_star: f64,
    /// Cost exponent: 1 for the Gaussian mean model, 3 for GP regression.
    pub alpha: f64,
}

impl CostParams {
    pub fn new(levels: usize, beta_star: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            levels,
            beta_star,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::config("cost model needs M >= 1"));
        }
        if !(self.beta_star > 0.0 && self.beta_star <= 1.0) {
            return Err(Error::config(format!(
                "beta_star must lie in (0, 1], got {}",
                self.beta_star
            )));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Per-level cost ratio `beta_*^{alpha/M}`.
    fn ratio(&self) -> f64 {
        self.beta_star.powf(self.alpha / self.levels as f64)
    }
}

/// Predicted cost per sample relative to the inner sampler alone.
///
/// The geometric sum is evaluated term by term, which is exact at
/// `beta_* = 1` and needs no limit.
pub fn relative_cost(method: Method, params: &CostParams) -> Result<f64> {
    params.validate()?;
    let m = params.levels;
    let x = params.ratio();
    let spt = || (0..=m).map(|i| x.powi(i as i32)).sum::<f64>();
    Ok(match method {
        Method::None => 1.0,
        Method::Pt => (m + 1) as f64,
        Method::Tt => (2 * m) as f64,
        Method::Spt => spt(),
        Method::Stt => 2.0 * spt() - (1.0 + x),
    })
}

/// Timings of one method under a fixed model and kernel configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct CostRun {
    pub method: Method,
    /// Everything that must match across compared runs.
    pub fingerprint: String,
    /// Mean wall time per sample over chains.
    pub per_sample_time: f64,
}

impl CostRun {
    pub fn from_traces(method: Method, fingerprint: impl Into<String>, traces: &[ChainTrace]) -> Result<Self> {
        let n: usize = traces.iter().map(ChainTrace::len).sum();
        if n == 0 {
            return Err(Error::config("cost comparison needs recorded samples"));
        }
        let total: f64 = traces.iter().map(ChainTrace::duration).sum();
        Ok(Self {
            method,
            fingerprint: fingerprint.into(),
            per_sample_time: total / n as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostComparison {
    pub method: Method,
    pub measured_ratio: f64,
    pub predicted_ratio: f64,
}

pub fn compare_measured(baseline: &CostRun, runs: &[CostRun], params: &CostParams) -> Result<Vec<CostComparison>> {
    if !(baseline.per_sample_time > 0.0) {
        return Err(Error::config("baseline per-sample time must be positive"));
    }
    runs.iter()
        .map(|r| {
            if r.fingerprint != baseline.fingerprint {
                return Err(Error::config(format!(
                    "run `{}` does not match the baseline configuration: `{}` vs `{}`",
                    r.method, r.fingerprint, baseline.fingerprint
                )));
            }
            Ok(CostComparison {
                method: r.method,
                measured_ratio: r.per_sample_time / baseline.per_sample_time,
                predicted_ratio: relative_cost(r.method, params)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostRow {
    pub levels: usize,
    pub beta_star: f64,
    pub alpha: f64,
    pub pt: f64,
    pub tt: f64,
    pub spt: f64,
    pub stt: f64,
}

/// Predicted ratios over the Cartesian grid of parameters.
pub fn cost_table(levels: &[usize], beta_stars: &[f64], alphas: &[f64]) -> Result<Vec<CostRow>> {
    let mut rows = Vec::new();
    for &m in levels {
        for &b in beta_stars {
            for &a in alphas {
                let p = CostParams::new(m, b, a)?;
                rows.push(CostRow {
                    levels: m,
                    beta_star: b,
                    alpha: a,
                    pt: relative_cost(Method::Pt, &p)?,
                    tt: relative_cost(Method::Tt, &p)?,
                    spt: relative_cost(Method::Spt, &p)?,
                    stt: relative_cost(Method::Stt, &p)?,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_cost_csv<W: Write>(rows: &[CostRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned plain-text rendering.
pub fn format_cost_table(rows: &[CostRow]) -> String {
    let mut s = format!(
        "{:>3} {:>10} {:>6} {:>8} {:>8} {:>8} {:>8}\n",
        "M", "beta_star", "alpha", "pt", "tt", "spt", "stt"
    );
    for r in rows {
        s.push_str(&format!(
            "{:>3} {:>10.6} {:>6.2} {:>8.4} {:>8.4} {:>8.4} {:>8.4}\n",
            r.levels, r.beta_star, r.alpha, r.pt, r.tt, r.spt, r.stt
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_ratios() {
        let p1 = CostParams::new(6, 0.125, 1.0).unwrap();
        let p3 = CostParams::new(6, 0.125, 3.0).unwrap();
        assert!((relative_cost(Method::Spt, &p1).unwrap() - 3.11).abs() < 0.005);
        assert!((relative_cost(Method::Stt, &p1).unwrap() - 4.52).abs() < 0.005);
        assert!((relative_cost(Method::Spt, &p3).unwrap() - 1.55).abs() < 0.005);
        assert!((relative_cost(Method::Stt, &p3).unwrap() - 1.74).abs() < 0.005);
        assert_eq!(relative_cost(Method::Pt, &p1).unwrap(), 7.0);
        assert_eq!(relative_cost(Method::Tt, &p1).unwrap(), 12.0);
    }

    #[test]
    fn closed_form_agrees() {
        for &(m, b, a) in &[(6, 0.125, 1.0), (3, 0.5, 2.0), (10, 0.01, 3.0)] {
            let p = CostParams::new(m, b, a).unwrap();
            let closed = (1.0 - b.powf(a * (1.0 + 1.0 / m as f64))) / (1.0 - b.powf(a / m as f64));
            assert!((relative_cost(Method::Spt, &p).unwrap() - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_params() {
        assert!(CostParams::new(0, 0.5, 1.0).is_err());
        assert!(CostParams::new(2, 0.0, 1.0).is_err());
        assert!(CostParams::new(2, 0.5, 0.5).is_err());
    }

    #[test]
    fn baseline_against_itself() {
        let b = CostRun {
            method: Method::None,
            fingerprint: "x".into(),
            per_sample_time: 0.2,
        };
        let p = CostParams::new(6, 0.125, 1.0).unwrap();
        let c = compare_measured(&b, std::slice::from_ref(&b), &p).unwrap();
        assert_eq!(c[0].measured_ratio, 1.0);
        let other = CostRun {
            fingerprint: "y".into(),
            ..b.clone()
        };
        assert!(compare_measured(&b, &[other], &p).is_err());
    }
}
