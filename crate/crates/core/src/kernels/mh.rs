use super::{metropolis_accept, soft, LevelState};
use crate::error::Result;
use crate::rng::RngStream;
use crate::tempering::TemperedTarget;

/// Proposal scale `base / sqrt(beta)`.
pub fn mh_proposal_scale(base_step: f64, beta: f64) -> f64 {
    base_step / beta.sqrt()
}

/// One random-walk Metropolis step with an isotropic Gaussian proposal.
pub fn mh_step(state: &mut LevelState, target: &TemperedTarget, base_step: f64, rng: &mut RngStream) -> Result<bool> {
    let sigma = mh_proposal_scale(base_step, target.beta());
    let proposal: Vec<f64> = state.theta.iter().map(|t| t + sigma * rng.normal()).collect();
    let eval = soft(target.evaluate(&proposal, false))?;
    let log_ratio = eval
        .as_ref()
        .map_or(f64::NAN, |e| e.log_density - state.eval.log_density);
    let accepted = metropolis_accept(log_ratio, rng);
    if accepted {
        state.theta = proposal;
        state.eval = eval.expect("accepted proposals are evaluated");
    }
    Ok(accepted)
}
