//! Inner transition kernels.
//!
//! Kernels are stateless: a transition mutates a caller-owned
//! [`LevelState`] using a caller-owned random stream.

mod hmc;
mod mh;

pub use hmc::{hmc_step, integrate, leapfrog, Trajectory, DIVERGENCE_THRESHOLD};
pub use mh::{mh_proposal_scale, mh_step};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tempering::{Evaluation, TemperedTarget};
use serde::{Deserialize, Serialize};
use std::time::Duration;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Mh,
    Hmc,
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelKind::Mh => "mh",
            KernelKind::Hmc => "hmc",
        })
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mh" => Ok(KernelKind::Mh),
            "hmc" => Ok(KernelKind::Hmc),
            other => Err(Error::config(format!("unknown inner sampler `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// Random-walk scale at `beta = 1`; level `m` uses `mh_base_step / sqrt(beta_m)`.
    pub mh_base_step: f64,
    pub hmc_eps: f64,
    pub hmc_steps: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            kind: KernelKind::Hmc,
            mh_base_step: 0.1,
            hmc_eps: 0.01,
            hmc_steps: 10,
        }
    }
}

impl KernelConfig {
    pub fn mh(base_step: f64) -> Self {
        Self {
            kind: KernelKind::Mh,
            mh_base_step: base_step,
            ..Self::default()
        }
    }

    pub fn hmc(eps: f64, steps: usize) -> Self {
        Self {
            kind: KernelKind::Hmc,
            hmc_eps: eps,
            hmc_steps: steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Mh if !(self.mh_base_step > 0.0 && self.mh_base_step.is_finite()) => Err(Error::config(
                format!("MH step must be positive, got {}", self.mh_base_step),
            )),
            KernelKind::Hmc if !(self.hmc_eps > 0.0 && self.hmc_eps.is_finite()) => Err(Error::config(format!(
                "HMC step size must be positive, got {}",
                self.hmc_eps
            ))),
            KernelKind::Hmc if self.hmc_steps == 0 => Err(Error::config("HMC needs at least one leapfrog step")),
            _ => Ok(()),
        }
    }

    pub fn needs_gradient(&self) -> bool {
        self.kind == KernelKind::Hmc
    }

    /// One transition invariant for `target`; returns whether the proposal was accepted.
    pub fn transition(&self, state: &mut LevelState, target: &TemperedTarget, rng: &mut RngStream) -> Result<bool> {
        match self.kind {
            KernelKind::Mh => mh_step(state, target, self.mh_base_step, rng),
            KernelKind::Hmc => hmc_step(state, target, self.hmc_eps, self.hmc_steps, rng),
        }
    }

    /// [`transition`](Self::transition) with bookkeeping into `stats`.
    pub fn timed_transition(
        &self,
        state: &mut LevelState,
        target: &TemperedTarget,
        rng: &mut RngStream,
        stats: &mut TransitionStats,
    ) -> Result<bool> {
        let start = std::time::Instant::now();
        let accepted = self.transition(state, target, rng)?;
        stats.record(accepted, start.elapsed());
        Ok(accepted)
    }
}

/// A point with its cached evaluation under the level it currently occupies.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelState {
    pub theta: Vec<f64>,
    pub eval: Evaluation,
}

impl LevelState {
    pub fn new(theta: Vec<f64>, target: &TemperedTarget, with_grad: bool) -> Result<Self> {
        let eval = target.evaluate(&theta, with_grad)?;
        if !eval.log_density.is_finite() {
            return Err(Error::NonFinite(format!(
                "log density {} at starting point {theta:?}",
                eval.log_density
            )));
        }
        Ok(Self { theta, eval })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionStats {
    pub proposals: u64,
    pub accepts: u64,
    /// Seconds spent in the transitions.
    pub wall_time: f64,
}

impl TransitionStats {
    pub fn record(&mut self, accepted: bool, elapsed: Duration) {
        self.proposals += 1;
        self.accepts += accepted as u64;
        self.wall_time += elapsed.as_secs_f64();
    }

    pub fn rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepts as f64 / self.proposals as f64
        }
    }
}

/// Metropolis test in log space: accept iff `log u < min(0, log_ratio)`.
///
/// Always consumes exactly one uniform. Non-finite ratios reject.
pub fn metropolis_accept(log_ratio: f64, rng: &mut RngStream) -> bool {
    let u = rng.uniform();
    log_ratio.is_finite() && u.ln() < log_ratio.min(0.0)
}

/// Treat numerical failures of a proposal as a rejection.
pub(crate) fn soft<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_numerical() => Ok(None),
        Err(e) => Err(e),
    }
}
