//! Relaxation by adaptive gradient descent on the global energy, with a
//! proportional controller on the knobs during the homeostatic phase.
//!
//! One iteration applies, in order: a state step, a parameter step, and
//! (homeostatic mode, when the parameter step was accepted) a controller
//! step `u += eta_u (theta_target - theta)` with `eta_u = eta_theta/(4 eps)`
//! per component, the critically damped pairing for the quadratic
//! coupling. Each descent step is accepted only if the energy decreases;
//! accepted steps grow their step size by 5%, rejected ones are undone
//! and halve it, and an unchanged energy rescales by 1.05 up or down
//! with probability one half.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::core::batch::Batch;
use crate::core::coupling::CouplingSpec;
use crate::core::model::{effective_beta, EnergyModel};
use crate::core::outcome::{BatchState, RelaxOutcome};
use crate::core::vector::{l1_diff, linf_norm, ParamVector};
use crate::error::{AeqError, Result};
use crate::relax::coordinate::batch_global_energy;

/// Magnitude at which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct GradFlowConfig {
    pub n_steps: usize,
    pub eta_s0: f64,
    /// Initial parameter step size; defaults to the smallest coupling
    /// epsilon when unset.
    pub eta_theta0: Option<f64>,
    pub accept_grow: f64,
    pub reject_shrink: f64,
    /// Absolute tolerance under which an energy change counts as "unchanged".
    pub tie_tol: f64,
    /// Keep per-iteration parameter snapshots (test instrumentation).
    pub record_history: bool,
}

impl Default for GradFlowConfig {
    fn default() -> Self {
        GradFlowConfig {
            n_steps: 50,
            eta_s0: 1.0,
            eta_theta0: None,
            accept_grow: 1.05,
            reject_shrink: 0.5,
            tie_tol: 1e-14,
            record_history: false,
        }
    }
}

/// What floats besides the state.
pub enum GradFlowMode<'a> {
    /// Parameters frozen; only the state relaxes.
    StateOnly { theta: &'a [f64] },
    /// Knobs frozen; state and parameters relax (the nudged phase).
    ClampedU { theta_start: Vec<f64> },
    /// Knobs driven by the proportional controller so the parameters
    /// settle at `theta_target` (the homeostatic phase).
    Homeostatic {
        theta_target: &'a [f64],
        theta_start: Vec<f64>,
    },
}

/// Per-iteration probe kept when `record_history` is set.
#[derive(Debug, Clone)]
pub struct GradFlowSnapshot {
    pub theta: Vec<f64>,
    pub energy: f64,
}

pub struct GradFlowResult {
    pub outcome: RelaxOutcome,
    /// Knob values after the run (moved only in homeostatic mode).
    pub u: Vec<f64>,
    pub eta_s: f64,
    pub eta_theta: f64,
    pub history: Option<Vec<GradFlowSnapshot>>,
}

enum StepVerdict {
    Accepted,
    Rejected,
}

fn adapt_step(
    e0: f64,
    e1: f64,
    eta: &mut f64,
    cfg: &GradFlowConfig,
    rng: &mut ChaCha8Rng,
) -> StepVerdict {
    if (e1 - e0).abs() <= cfg.tie_tol {
        if rng.random::<bool>() {
            *eta *= cfg.accept_grow;
        } else {
            *eta /= cfg.accept_grow;
        }
        StepVerdict::Accepted
    } else if e1 < e0 {
        *eta *= cfg.accept_grow;
        StepVerdict::Accepted
    } else {
        *eta *= cfg.reject_shrink;
        StepVerdict::Rejected
    }
}

fn check_divergence(value: f64, what: &'static str) -> Result<()> {
    if !value.is_finite() || value.abs() > DIVERGENCE_LIMIT {
        return Err(AeqError::Diverged {
            phase: "gradflow",
            what,
            value,
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn relax_gradflow(
    model: &dyn EnergyModel,
    coupling: &CouplingSpec,
    u_start: Vec<f64>,
    mode: GradFlowMode<'_>,
    batch: &Batch,
    beta: f64,
    cfg: &GradFlowConfig,
    rng: &mut ChaCha8Rng,
    mut state: BatchState,
) -> Result<GradFlowResult> {
    let n = batch.len().max(1);
    let dim = state.dim();
    let eff_beta = effective_beta(model, beta);
    let layout = model.state_layout();
    let out_seg = layout.segment(layout.n_segments() - 1);

    let mut u = u_start;
    let (mut theta, theta_target, theta_floats): (Vec<f64>, Option<&[f64]>, bool) = match &mode {
        GradFlowMode::StateOnly { theta } => (theta.to_vec(), None, false),
        GradFlowMode::ClampedU { theta_start } => (theta_start.clone(), None, true),
        GradFlowMode::Homeostatic {
            theta_target,
            theta_start,
        } => (theta_start.clone(), Some(*theta_target), true),
    };

    let mut eta_s = cfg.eta_s0;
    let mut eta_theta = cfg
        .eta_theta0
        .unwrap_or_else(|| coupling.epsilon().iter().cloned().fold(f64::INFINITY, f64::min));
    let mut history = cfg.record_history.then(Vec::new);

    let mut energy = batch_global_energy(model, &u, coupling, &theta, batch, beta, &state)?;
    let mut grad_s = vec![0.0; dim];
    let mut grad_cost = vec![0.0; out_seg.len()];
    let mut trial_state = vec![0.0; dim * n];
    let mut grad_theta = vec![0.0; theta.len()];
    let mut scratch_theta = vec![0.0; theta.len()];
    let mut residual = 0.0;

    for _ in 0..cfg.n_steps {
        let mut change = 0.0;

        // state step on the batch-mean energy
        trial_state.copy_from_slice(state.as_slice());
        for i in 0..n.min(batch.len()) {
            let s = state.replica(i);
            model.grad_s_energy(&theta, batch.x(i), s, &mut grad_s);
            if eff_beta != 0.0 {
                model.grad_s_cost(&s[out_seg.range()], batch.y(i), &mut grad_cost);
                for (g, c) in grad_s[out_seg.range()].iter_mut().zip(&grad_cost) {
                    *g += eff_beta * c;
                }
            }
            let t = &mut trial_state[i * dim..(i + 1) * dim];
            for (tv, g) in t.iter_mut().zip(&grad_s) {
                *tv -= eta_s * g / n as f64;
            }
            model.state_domain().clamp(layout, t);
        }
        let trial = BatchState::from_flat(trial_state.clone(), dim);
        let e1 = coupling.energy(&u, &theta)?
            + crate::relax::coordinate::batch_nudged_energy(model, &theta, batch, beta, &trial);
        if let StepVerdict::Accepted = adapt_step(energy, e1, &mut eta_s, cfg, rng) {
            change += l1_diff(state.as_slice(), trial.as_slice());
            state = trial;
            energy = e1;
            check_divergence(linf_norm(state.as_slice()), "state")?;
            check_divergence(energy, "energy")?;
        }

        if theta_floats {
            // parameter step
            crate::relax::coordinate::batch_mean_grad_theta(
                model,
                &theta,
                batch,
                &state,
                &mut grad_theta,
                &mut scratch_theta,
            );
            coupling.grad_theta(&u, &theta, &mut scratch_theta);
            let trial_theta: Vec<f64> = theta
                .iter()
                .zip(grad_theta.iter().zip(&scratch_theta))
                .map(|(t, (ge, gc))| t - eta_theta * (ge + gc))
                .collect();
            let e1 = batch_global_energy(model, &u, coupling, &trial_theta, batch, beta, &state)?;
            let eta_theta_used = eta_theta;
            let verdict = adapt_step(energy, e1, &mut eta_theta, cfg, rng);
            if let StepVerdict::Accepted = verdict {
                change += l1_diff(&theta, &trial_theta);
                theta = trial_theta;
                energy = e1;
                check_divergence(linf_norm(&theta), "params")?;
                check_divergence(energy, "energy")?;

                // controller step, critically damped pairing
                if let Some(target) = theta_target {
                    for k in 0..u.len() {
                        let eta_u = eta_theta_used / (4.0 * coupling.epsilon()[k]);
                        u[k] += eta_u * (target[k] - theta[k]);
                    }
                    energy = batch_global_energy(model, &u, coupling, &theta, batch, beta, &state)?;
                }
            }
        }

        residual = change;
        if let Some(h) = history.as_mut() {
            h.push(GradFlowSnapshot {
                theta: theta.clone(),
                energy,
            });
        }
    }

    let params = theta_floats
        .then(|| ParamVector::new(theta.clone(), model.param_layout().clone()))
        .transpose()?;
    Ok(GradFlowResult {
        outcome: RelaxOutcome {
            state,
            params,
            iterations: cfg.n_steps,
            residual,
            energy,
            converged: true,
        },
        u,
        eta_s,
        eta_theta,
        history,
    })
}
