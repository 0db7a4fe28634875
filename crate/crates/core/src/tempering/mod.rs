//! Tempering schedulers.
//!
//! Four outer loops wrap an inner kernel:
//!
//! * `pt`: parallel tempering over `beta`-powered full-data densities,
//! * `spt`: the same schedule over nested subsamples fixed at start-up,
//! * `tt`: tempered transitions over `beta`-powered densities,
//! * `stt`: tempered transitions whose nested subsamples are redrawn on
//!   every upward sweep.
//!
//! All acceptance arithmetic stays in log space.

mod chain;
mod parallel;
mod target;
mod trace;
mod transitions;

pub use chain::{run_chain, ChainRunner};
pub use parallel::{pt_iteration, spt_iteration, swap_log_ratio, EnsembleState};
pub use target::{Evaluation, Heating, TemperedTarget};
pub use trace::{ChainStats, ChainTrace};
pub use transitions::{stt_iteration, tt_iteration};

use crate::data::{draw_nested_subsamples, IndexSet};
use crate::error::{Error, Result};
use crate::kernels::KernelConfig;
use crate::ladder::Ladder;
use crate::models::LogTarget;
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// The inner sampler alone.
    None,
    Pt,
    Tt,
    Spt,
    Stt,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::None, Method::Pt, Method::Tt, Method::Spt, Method::Stt];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Pt => "pt",
            Method::Tt => "tt",
            Method::Spt => "spt",
            Method::Stt => "stt",
        }
    }

    pub fn is_subsampled(&self) -> bool {
        matches!(self, Method::Spt | Method::Stt)
    }

    pub fn is_ensemble(&self) -> bool {
        matches!(self, Method::Pt | Method::Spt)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "plain" => Ok(Method::None),
            "pt" => Ok(Method::Pt),
            "tt" => Ok(Method::Tt),
            "spt" => Ok(Method::Spt),
            "stt" => Ok(Method::Stt),
            other => Err(Error::config(format!("unknown method `{other}`"))),
        }
    }
}

/// Everything a single chain needs besides the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: Method,
    pub kernel: KernelConfig,
    pub ladder: Ladder,
    /// Number of recorded target-level samples.
    pub samples: usize,
}

impl SamplerConfig {
    pub fn validate(&self, n_obs: usize) -> Result<()> {
        self.kernel.validate()?;
        if self.method.is_subsampled() {
            self.ladder.subsample_sizes(n_obs)?;
        }
        if matches!(self.method, Method::Tt | Method::Stt) && self.ladder.levels() == 0 {
            return Err(Error::config("tempered transitions need at least one auxiliary level"));
        }
        Ok(())
    }

    /// The ladder actually used: the bare target for `none`.
    pub fn effective_ladder(&self) -> Ladder {
        match self.method {
            Method::None => Ladder::target_only(),
            _ => self.ladder.clone(),
        }
    }
}

/// `beta`-powered full-data targets, one per rung.
pub fn powered_targets(model: &Arc<dyn LogTarget>, ladder: &Ladder) -> Vec<TemperedTarget> {
    let rows: IndexSet = (0..model.n_obs()).collect();
    ladder
        .betas()
        .iter()
        .enumerate()
        .map(|(m, &b)| TemperedTarget::powered(model.clone(), b, rows.clone(), m))
        .collect()
}

/// Subsampled targets over a freshly drawn nested family.
pub fn subsampled_targets(
    model: &Arc<dyn LogTarget>,
    ladder: &Ladder,
    rng: &mut RngStream,
) -> Result<Vec<TemperedTarget>> {
    let n = model.n_obs();
    let sizes = ladder.subsample_sizes(n)?;
    let family = draw_nested_subsamples(n, &sizes, rng)?;
    Ok(family
        .sets()
        .iter()
        .zip(ladder.betas())
        .enumerate()
        .map(|(m, (rows, &b))| TemperedTarget::subsampled(model.clone(), b, rows.clone(), m))
        .collect())
}
