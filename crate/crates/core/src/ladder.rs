//! Inverse-temperature ladders and the subsample sizes they imply.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Inverse temperatures `1 = beta_0 >= beta_1 >= ... >= beta_M > 0`.
///
/// Levels are strictly decreasing unless the ladder is isothermal
/// (`beta_star == 1`), which is kept for degenerate-case testing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    betas: Vec<f64>,
}

impl Ladder {
    /// Geometric ladder `beta_m = beta_star^(m / levels)` for `m = 0..=levels`.
    pub fn geometric(levels: usize, beta_star: f64) -> Result<Self> {
        if levels == 0 {
            return Err(Error::config("ladder needs at least one auxiliary level"));
        }
        if !(beta_star > 0.0 && beta_star <= 1.0) {
            return Err(Error::config(format!("beta_star must lie in (0, 1], got {beta_star}")));
        }
        let betas = (0..=levels)
            .map(|m| match m {
                0 => 1.0,
                m if m == levels => beta_star,
                m => beta_star.powf(m as f64 / levels as f64),
            })
            .collect();
        Ok(Self { betas })
    }

    /// A ladder holding only the target (`M = 0`).
    pub fn target_only() -> Self {
        Self { betas: vec![1.0] }
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.first() != Some(&1.0) {
            return Err(Error::config("ladder must start at beta_0 = 1"));
        }
        let isothermal = betas.iter().all(|&b| b == 1.0);
        for w in betas.windows(2) {
            let ok = if isothermal { true } else { w[1] < w[0] && w[1] > 0.0 };
            if !ok || !w[1].is_finite() {
                return Err(Error::config(format!(
                    "ladder must be strictly decreasing and positive: {betas:?}"
                )));
            }
        }
        Ok(Self { betas })
    }

    /// Number of auxiliary levels `M`.
    pub fn levels(&self) -> usize {
        self.betas.len() - 1
    }

    /// Number of densities including the target (`M + 1`).
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn beta(&self, m: usize) -> f64 {
        self.betas[m]
    }

    pub fn beta_star(&self) -> f64 {
        *self.betas.last().expect("ladder is never empty")
    }

    /// Per-level subsample sizes `N_m = round(beta_m N)`.
    pub fn subsample_sizes(&self, n: usize) -> Result<Vec<usize>> {
        subsample_sizes(self, n)
    }
}

pub fn make_geometric_ladder(levels: usize, beta_star: f64) -> Result<Ladder> {
    Ladder::geometric(levels, beta_star)
}

/// `N_m = round(beta_m * N)`, rounding half away from zero, with `N_0 = N`.
pub fn subsample_sizes(ladder: &Ladder, n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::config("dataset must hold at least one observation"));
    }
    let sizes: Vec<usize> = ladder
        .betas()
        .iter()
        .enumerate()
        .map(|(m, &b)| if m == 0 { n } else { (b * n as f64).round() as usize })
        .collect();
    if let Some(m) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::config(format!(
            "level {m} (beta = {}) gets an empty subsample of N = {n}; ladder too cold for the dataset",
            ladder.beta(m)
        )));
    }
    Ok(sizes)
}
