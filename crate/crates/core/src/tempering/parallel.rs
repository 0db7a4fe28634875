use super::target::{Heating, TemperedTarget};
use crate::error::{Error, Result};
use crate::kernels::{metropolis_accept, soft, KernelConfig, LevelState, TransitionStats};
use crate::rng::RngStream;
use std::time::Instant;

/// `log h_a(theta_b) + log h_b(theta_a) - log h_a(theta_a) - log h_b(theta_b)`,
/// evaluated from scratch. Grouped per target so that identical targets give
/// exactly zero.
pub fn swap_log_ratio(h_a: &TemperedTarget, h_b: &TemperedTarget, theta_a: &[f64], theta_b: &[f64]) -> Result<f64> {
    let a_of_b = h_a.log_density(theta_b)?;
    let a_of_a = h_a.log_density(theta_a)?;
    let b_of_a = h_b.log_density(theta_a)?;
    let b_of_b = h_b.log_density(theta_b)?;
    Ok((a_of_b - a_of_a) + (b_of_a - b_of_b))
}

/// Joint state of an ensemble: one point per level plus counters.
#[derive(Clone, Debug)]
pub struct EnsembleState {
    pub levels: Vec<LevelState>,
    pub kernel_stats: Vec<TransitionStats>,
    /// Entry `m - 1` counts swaps between levels `m - 1` and `m`.
    pub swap_stats: Vec<TransitionStats>,
}

impl EnsembleState {
    /// Every level starts from `theta`.
    pub fn new(theta: &[f64], targets: &[TemperedTarget], with_grad: bool) -> Result<Self> {
        let levels = targets
            .iter()
            .map(|t| LevelState::new(theta.to_vec(), t, with_grad))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernel_stats: vec![TransitionStats::default(); levels.len()],
            swap_stats: vec![TransitionStats::default(); levels.len().saturating_sub(1)],
            levels,
        })
    }

    pub fn target_state(&self) -> &LevelState {
        &self.levels[0]
    }
}

/// One ensemble iteration: a kernel transition per level, then a systematic
/// downward sweep of swap proposals between `(m - 1, m)` for `m = M..1`.
///
/// Returns whether the level-0 point changed.
pub fn pt_iteration(
    state: &mut EnsembleState,
    kernel: &KernelConfig,
    targets: &[TemperedTarget],
    level_rngs: &mut [RngStream],
    control: &mut RngStream,
) -> Result<bool> {
    if state.levels.len() != targets.len() || level_rngs.len() < targets.len() {
        return Err(Error::config("ensemble, targets and streams disagree on level count"));
    }
    let mut moved = false;
    for (m, target) in targets.iter().enumerate() {
        let acc = kernel.timed_transition(
            &mut state.levels[m],
            target,
            &mut level_rngs[m],
            &mut state.kernel_stats[m],
        )?;
        if m == 0 {
            moved = acc;
        }
    }
    for m in (1..targets.len()).rev() {
        let start = Instant::now();
        let accepted = propose_swap(state, targets, m - 1, m, control)?;
        state.swap_stats[m - 1].record(accepted, start.elapsed());
        if accepted && m == 1 {
            moved = true;
        }
    }
    Ok(moved)
}

/// Ensemble iteration over subsampled targets; identical schedule to
/// [`pt_iteration`].
pub fn spt_iteration(
    state: &mut EnsembleState,
    kernel: &KernelConfig,
    targets: &[TemperedTarget],
    level_rngs: &mut [RngStream],
    control: &mut RngStream,
) -> Result<bool> {
    if targets.iter().any(|t| t.heating() != Heating::Subsample) {
        return Err(Error::config("subsampled tempering needs subsampled targets"));
    }
    pt_iteration(state, kernel, targets, level_rngs, control)
}

fn propose_swap(
    state: &mut EnsembleState,
    targets: &[TemperedTarget],
    a: usize,
    b: usize,
    control: &mut RngStream,
) -> Result<bool> {
    let (lo, hi) = state.levels.split_at_mut(b);
    let (sa, sb) = (&mut lo[a], &mut hi[0]);
    let (ta, tb) = (&targets[a], &targets[b]);
    let a_of_b = soft(ta.transfer(&sb.theta, &sb.eval, tb, false))?;
    let b_of_a = soft(tb.transfer(&sa.theta, &sa.eval, ta, false))?;
    let log_ratio = match (&a_of_b, &b_of_a) {
        (Some(ab), Some(ba)) => (ab.log_density - sa.eval.log_density) + (ba.log_density - sb.eval.log_density),
        _ => f64::NAN,
    };
    let accepted = metropolis_accept(log_ratio, control);
    if accepted {
        std::mem::swap(&mut sa.theta, &mut sb.theta);
        sa.eval = a_of_b.expect("evaluated");
        sb.eval = b_of_a.expect("evaluated");
    }
    Ok(accepted)
}
