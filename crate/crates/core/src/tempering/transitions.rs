use super::target::TemperedTarget;
use crate::data::{subsample, IndexSet, SubsampleFamily};
use crate::error::{Error, Result};
use crate::kernels::{metropolis_accept, soft, KernelConfig, LevelState, TransitionStats};
use crate::rng::RngStream;

/// One tempered-transition iteration over fixed targets.
///
/// The trajectory applies the kernels of levels `1, .., M, .., 1` (the top
/// level once), accumulating the log density ratio at every level change,
/// and is accepted iff `log u < min(0, sum)`. A target-level kernel step
/// follows regardless of the outcome. Returns the trajectory acceptance.
pub fn tt_iteration(
    state: &mut LevelState,
    kernel: &KernelConfig,
    targets: &[TemperedTarget],
    level_rngs: &mut [RngStream],
    control: &mut RngStream,
    kernel_stats: &mut [TransitionStats],
) -> Result<bool> {
    let levels = targets.len().saturating_sub(1);
    let mut owned = targets.to_vec();
    let mut fixed = |_: &TemperedTarget, _: usize, _: &mut RngStream| -> TemperedTarget {
        unreachable!("fixed targets cover every level")
    };
    sweep(
        state,
        kernel,
        &mut owned,
        levels,
        &mut fixed,
        level_rngs,
        control,
        kernel_stats,
    )
}

/// One subsampled tempered-transition proposal.
///
/// `level0` is the full-data target. On the way up `X_m` is drawn uniformly
/// without replacement from `X_{m-1}` with size `sizes[m]`, just before the
/// level-`m` transition; the descent reuses the same subsamples. Returns the
/// acceptance flag and the family drawn this iteration.
#[allow(clippy::too_many_arguments)]
pub fn stt_iteration(
    state: &mut LevelState,
    kernel: &KernelConfig,
    level0: &TemperedTarget,
    betas: &[f64],
    sizes: &[usize],
    level_rngs: &mut [RngStream],
    control: &mut RngStream,
    kernel_stats: &mut [TransitionStats],
) -> Result<(bool, SubsampleFamily)> {
    if sizes.len() != betas.len() || sizes.first() != Some(&level0.rows().len()) {
        return Err(Error::config("subsample sizes must start at N and match the ladder"));
    }
    let levels = sizes.len() - 1;
    let mut targets = vec![level0.clone()];
    let mut grow = |parent: &TemperedTarget, m: usize, rng: &mut RngStream| {
        let rows: IndexSet = subsample(parent.rows(), sizes[m], rng).into();
        TemperedTarget::subsampled(parent.model().clone(), betas[m], rows, m)
    };
    let accepted = sweep(
        state,
        kernel,
        &mut targets,
        levels,
        &mut grow,
        level_rngs,
        control,
        kernel_stats,
    )?;
    let family = SubsampleFamily::from_sets(targets.iter().map(|t| t.rows().clone()).collect());
    Ok((accepted, family))
}

type Grow<'a> = dyn FnMut(&TemperedTarget, usize, &mut RngStream) -> TemperedTarget + 'a;

#[allow(clippy::too_many_arguments)]
fn sweep(
    state: &mut LevelState,
    kernel: &KernelConfig,
    targets: &mut Vec<TemperedTarget>,
    levels: usize,
    grow: &mut Grow<'_>,
    level_rngs: &mut [RngStream],
    control: &mut RngStream,
    kernel_stats: &mut [TransitionStats],
) -> Result<bool> {
    if levels == 0 {
        return kernel.timed_transition(state, &targets[0], &mut level_rngs[0], &mut kernel_stats[0]);
    }
    let grad = kernel.needs_gradient();
    let mut cur = state.clone();
    let mut log_accept = 0.0;

    // Ascent: rho_hat_m = log h_m(theta_hat_{m-1}) - log h_{m-1}(theta_hat_{m-1}).
    for m in 1..=levels {
        if targets.len() == m {
            let next = grow(&targets[m - 1], m, control);
            targets.push(next);
        }
        let Some(e) = soft(targets[m].transfer(&cur.theta, &cur.eval, &targets[m - 1], grad))? else {
            return finish(state, false, kernel, targets, level_rngs, kernel_stats);
        };
        log_accept += e.log_density - cur.eval.log_density;
        cur.eval = e;
        kernel.timed_transition(&mut cur, &targets[m], &mut level_rngs[m], &mut kernel_stats[m])?;
    }

    // Descent: leave level m at the current point, contributing
    // log h_{m-1} - log h_m there, then move with the level-(m-1) kernel.
    for m in (1..=levels).rev() {
        let Some(e) = soft(targets[m - 1].transfer(&cur.theta, &cur.eval, &targets[m], grad))? else {
            return finish(state, false, kernel, targets, level_rngs, kernel_stats);
        };
        log_accept += e.log_density - cur.eval.log_density;
        cur.eval = e;
        if m > 1 {
            kernel.timed_transition(
                &mut cur,
                &targets[m - 1],
                &mut level_rngs[m - 1],
                &mut kernel_stats[m - 1],
            )?;
        }
    }

    let accepted = metropolis_accept(log_accept, control);
    if accepted {
        *state = cur;
    }
    finish(state, accepted, kernel, targets, level_rngs, kernel_stats)
}

/// Close an iteration with one target-level kernel step.
fn finish(
    state: &mut LevelState,
    accepted: bool,
    kernel: &KernelConfig,
    targets: &[TemperedTarget],
    level_rngs: &mut [RngStream],
    kernel_stats: &mut [TransitionStats],
) -> Result<bool> {
    kernel.timed_transition(state, &targets[0], &mut level_rngs[0], &mut kernel_stats[0])?;
    Ok(accepted)
}
