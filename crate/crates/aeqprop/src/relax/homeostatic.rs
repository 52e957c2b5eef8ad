//! Analytic homeostatic control.
//!
//! With the parameters frozen, relax the state at the phase-one nudging,
//! then set the knobs to the unique value that makes the frozen
//! parameters an equilibrium of the global energy:
//! `d/d(theta) [U/eps + E + beta C] = 0  =>  u = theta + eps . dE/d(theta)`
//! (the cost never touches theta). Requires the quadratic coupling.

use crate::core::batch::Batch;
use crate::core::coupling::CouplingSpec;
use crate::core::model::EnergyModel;
use crate::core::outcome::{BatchState, RelaxOutcome};
use crate::error::{AeqError, Result};
use crate::relax::coordinate::batch_mean_grad_theta;
use crate::relax::relaxer::Relaxer;
use rand_chacha::ChaCha8Rng;

/// Returns the knob setting together with the phase-one equilibrium.
pub fn homeostatic_control_analytic(
    model: &dyn EnergyModel,
    theta_fix: &[f64],
    batch: &Batch,
    beta1: f64,
    coupling: &CouplingSpec,
    relaxer: &Relaxer,
    rng: &mut ChaCha8Rng,
    state: BatchState,
) -> Result<(Vec<f64>, RelaxOutcome)> {
    if !coupling.is_quadratic() {
        return Err(AeqError::Unsupported(
            "analytic homeostatic control requires the quadratic coupling form",
        ));
    }
    let outcome = relaxer.relax_state(model, theta_fix, batch, beta1, rng, state)?;

    let mut grad = vec![0.0; theta_fix.len()];
    let mut scratch = vec![0.0; theta_fix.len()];
    batch_mean_grad_theta(model, theta_fix, batch, &outcome.state, &mut grad, &mut scratch);
    let u = theta_fix
        .iter()
        .zip(grad.iter().zip(coupling.epsilon()))
        .map(|(t, (g, eps))| t + eps * g)
        .collect();
    Ok((u, outcome))
}
