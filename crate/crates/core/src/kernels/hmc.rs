use super::{metropolis_accept, soft, LevelState};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tempering::TemperedTarget;

/// Energy error beyond which a trajectory counts as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// End point of a leapfrog trajectory and the payload of its last gradient call.
#[derive(Clone, Debug)]
pub struct Trajectory<E> {
    pub theta: Vec<f64>,
    pub momentum: Vec<f64>,
    pub end: E,
}

/// Leapfrog integration of `H = U(theta) + |p|^2 / 2` with `grad` returning
/// `grad log h` (the negative of `grad U`).
///
/// `eval` returns the gradient at a position plus a payload kept for the
/// final position. `Ok(None)` marks a diverged trajectory: a non-finite
/// state or an evaluation that returned `None`.
pub fn integrate<E>(
    theta: &[f64],
    momentum: &[f64],
    eps: f64,
    steps: usize,
    grad0: &[f64],
    mut eval: impl FnMut(&[f64]) -> Result<Option<(Vec<f64>, E)>>,
) -> Result<Option<Trajectory<E>>> {
    if steps == 0 {
        return Err(Error::config("leapfrog needs at least one step"));
    }
    let mut q = theta.to_vec();
    let mut p: Vec<f64> = momentum.iter().zip(grad0).map(|(p, g)| p + 0.5 * eps * g).collect();
    let mut last = None;
    for step in 0..steps {
        for (q, p) in q.iter_mut().zip(&p) {
            *q += eps * p;
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        let Some((g, payload)) = eval(&q)? else {
            return Ok(None);
        };
        let h = if step + 1 == steps { 0.5 * eps } else { eps };
        for (p, g) in p.iter_mut().zip(&g) {
            *p += h * g;
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        last = Some(payload);
    }
    Ok(Some(Trajectory {
        theta: q,
        momentum: p,
        end: last.expect("at least one step"),
    }))
}

/// Plain leapfrog over a gradient function; `None` if the trajectory diverged.
pub fn leapfrog(
    theta: &[f64],
    momentum: &[f64],
    eps: f64,
    steps: usize,
    mut grad: impl FnMut(&[f64]) -> Vec<f64>,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let g0 = grad(theta);
    let t = integrate(theta, momentum, eps, steps, &g0, |q| Ok(Some((grad(q), ()))))?;
    Ok(t.map(|t| (t.theta, t.momentum)))
}

/// One HMC transition with identity mass matrix.
pub fn hmc_step(
    state: &mut LevelState,
    target: &TemperedTarget,
    eps: f64,
    steps: usize,
    rng: &mut RngStream,
) -> Result<bool> {
    if state.eval.grad.is_none() {
        state.eval = target.evaluate(&state.theta, true)?;
    }
    let grad0 = state.eval.grad.clone().expect("gradient just computed");
    let p0: Vec<f64> = (0..state.theta.len()).map(|_| rng.normal()).collect();
    let traj = integrate(&state.theta, &p0, eps, steps, &grad0, |q| {
        Ok(soft(target.evaluate(q, true))?
            .filter(|e| e.log_density.is_finite())
            .map(|e| (e.grad.clone().expect("requested gradient"), e)))
    })?;
    let (delta_h, proposal) = match traj {
        Some(t) => {
            let e = t.end;
            let k0: f64 = 0.5 * p0.iter().map(|p| p * p).sum::<f64>();
            let k1: f64 = 0.5 * t.momentum.iter().map(|p| p * p).sum::<f64>();
            let dh = (-e.log_density + k1) - (-state.eval.log_density + k0);
            (dh, Some((t.theta, e)))
        }
        None => (f64::NAN, None),
    };
    let diverged = !(delta_h.abs() <= DIVERGENCE_THRESHOLD);
    let accepted = metropolis_accept(if diverged { f64::NAN } else { -delta_h }, rng);
    if accepted {
        let (theta, eval) = proposal.expect("accepted proposals exist");
        state.theta = theta;
        state.eval = eval;
    }
    Ok(accepted)
}
