//! Exact coordinate relaxation: each variable is set to the minimizer
//! of its quadratic slice of the global energy, layer block by layer
//! block, until the per-iteration L1 state change falls under the
//! threshold. Valid whenever every slice is a positive-curvature
//! quadratic, which holds for the Hopfield and regression models with
//! quadratic cost and coupling.

use rayon::prelude::*;

use crate::core::batch::Batch;
use crate::core::coupling::CouplingSpec;
use crate::core::model::{effective_beta, nudged_energy, EnergyModel};
use crate::core::outcome::{BatchState, RelaxOutcome};
use crate::core::vector::ParamVector;
use crate::error::{AeqError, Result};
use crate::relax::quad::slice_min;

/// Direction of one layer sweep. Free phases relax toward the output
/// (the external signal enters at the input); nudged phases relax from
/// the output back (the new signal enters there).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Forward,
    Backward,
}

/// Sweep direction that matches where the driving signal enters.
pub fn order_for_beta(eff_beta: f64) -> SweepOrder {
    if eff_beta == 0.0 {
        SweepOrder::Forward
    } else {
        SweepOrder::Backward
    }
}

#[derive(Debug, Clone)]
pub struct CoordConfig {
    pub max_iters: usize,
    /// Convergence threshold on the per-replica L1 state change of one
    /// full iteration.
    pub xi: f64,
    /// Verify that no single layer update ever increases the energy
    /// (test instrumentation; the parameter update is always guarded).
    pub check_energy: bool,
}

impl Default for CoordConfig {
    fn default() -> Self {
        CoordConfig {
            max_iters: 100,
            xi: 1e-3,
            check_energy: false,
        }
    }
}

impl CoordConfig {
    /// Tight settings for oracle-grade equilibria.
    pub fn exact() -> Self {
        CoordConfig {
            max_iters: 50_000,
            xi: 1e-12,
            check_energy: false,
        }
    }
}

/// Whether the parameters float during the relaxation.
pub enum ThetaMode<'a> {
    Fixed(&'a [f64]),
    /// Control knobs clamped at `u`; parameters relax jointly with the
    /// state, all components updated in parallel each iteration.
    Floating {
        u: &'a [f64],
        coupling: &'a CouplingSpec,
        start: Vec<f64>,
    },
}

/// One full relaxation. The warm-start state is consumed and returned
/// inside the outcome. For `Fixed` parameters the reported energy is the
/// batch-mean nudged energy `E + beta C`; for `Floating` it additionally
/// includes the coupling term.
pub fn relax_coordinate(
    model: &dyn EnergyModel,
    mode: ThetaMode<'_>,
    batch: &Batch,
    beta: f64,
    order: SweepOrder,
    cfg: &CoordConfig,
    state: BatchState,
) -> Result<RelaxOutcome> {
    if !model.exact_coordinate() {
        return Err(AeqError::Unsupported(
            "model does not support exact coordinate relaxation",
        ));
    }
    match mode {
        ThetaMode::Fixed(theta) => relax_state_fixed(model, theta, batch, beta, order, cfg, state),
        ThetaMode::Floating { u, coupling, start } => {
            relax_joint(model, u, coupling, start, batch, beta, order, cfg, state)
        }
    }
}

fn relax_state_fixed(
    model: &dyn EnergyModel,
    theta: &[f64],
    batch: &Batch,
    beta: f64,
    order: SweepOrder,
    cfg: &CoordConfig,
    mut state: BatchState,
) -> Result<RelaxOutcome> {
    let dim = state.dim();
    let n = batch.len();
    let run = |(i, s): (usize, &mut [f64])| -> Result<(usize, f64, bool)> {
        let (x, y) = (batch.x(i), batch.y(i));
        let mut last = f64::INFINITY;
        for iter in 1..=cfg.max_iters {
            last = sweep_layers(model, theta, x, y, beta, order, cfg, s)?;
            if last < cfg.xi {
                return Ok((iter, last, true));
            }
        }
        Ok((cfg.max_iters, last, false))
    };
    let results: Result<Vec<_>> = if n >= 4 {
        state
            .data_mut()
            .par_chunks_mut(dim)
            .enumerate()
            .map(run)
            .collect()
    } else {
        state.data_mut().chunks_mut(dim).enumerate().map(run).collect()
    };
    let results = results?;

    let iterations = results.iter().map(|r| r.0).max().unwrap_or(0);
    let residual = results.iter().map(|r| r.1).sum::<f64>() / n.max(1) as f64;
    let converged = results.iter().all(|r| r.2);
    let energy = batch_nudged_energy(model, theta, batch, beta, &state);
    Ok(RelaxOutcome {
        state,
        params: None,
        iterations,
        residual,
        energy,
        converged,
    })
}

/// One sweep over all layers of a single replica; returns the L1 change.
fn sweep_layers(
    model: &dyn EnergyModel,
    theta: &[f64],
    x: &[f64],
    y: &[f64],
    beta: f64,
    order: SweepOrder,
    cfg: &CoordConfig,
    s: &mut [f64],
) -> Result<f64> {
    let n_seg = model.state_layout().n_segments();
    let mut l1 = 0.0;
    match order {
        SweepOrder::Forward => {
            for k in 0..n_seg {
                l1 += relax_layer(model, theta, x, y, beta, k, cfg, s)?;
            }
        }
        SweepOrder::Backward => {
            for k in (0..n_seg).rev() {
                l1 += relax_layer(model, theta, x, y, beta, k, cfg, s)?;
            }
        }
    }
    Ok(l1)
}

/// Exact block update of one layer. Units within a layer do not
/// interact, so the whole block lands on its conditional minimum at
/// once: per unit the slice has second derivative `state_hess`
/// (+ `beta * cost_hess` on the output layer) and first derivative read
/// off the layer gradient.
fn relax_layer(
    model: &dyn EnergyModel,
    theta: &[f64],
    x: &[f64],
    y: &[f64],
    beta: f64,
    k: usize,
    cfg: &CoordConfig,
    s: &mut [f64],
) -> Result<f64> {
    let layout = model.state_layout();
    let seg = layout.segment(k);
    let (p, q) = model.state_domain().segment_bounds(k);
    let eff_beta = effective_beta(model, beta);
    let is_output = k == layout.n_segments() - 1;

    let e_before = if cfg.check_energy {
        Some(nudged_energy(model, theta, x, s, y, beta))
    } else {
        None
    };

    let mut g = vec![0.0; seg.len()];
    model.grad_s_energy_layer(theta, x, s, k, &mut g);
    let mut h = model.state_hess(k);
    if is_output && eff_beta != 0.0 {
        let mut gc = vec![0.0; seg.len()];
        model.grad_s_cost(&s[seg.range()], y, &mut gc);
        for (gv, cv) in g.iter_mut().zip(&gc) {
            *gv += eff_beta * cv;
        }
        h += eff_beta * model.cost_hess();
    }

    let mut l1 = 0.0;
    for (j, slot) in s[seg.range()].iter_mut().enumerate() {
        let z = slice_min(*slot, g[j], h, p, q)?;
        l1 += (z - *slot).abs();
        *slot = z;
    }

    if let Some(e0) = e_before {
        let e1 = nudged_energy(model, theta, x, s, y, beta);
        assert!(
            e1 <= e0 + 1e-12,
            "layer update increased the energy: {e0} -> {e1}"
        );
    }
    Ok(l1)
}

fn relax_joint(
    model: &dyn EnergyModel,
    u: &[f64],
    coupling: &CouplingSpec,
    mut theta: Vec<f64>,
    batch: &Batch,
    beta: f64,
    order: SweepOrder,
    cfg: &CoordConfig,
    mut state: BatchState,
) -> Result<RelaxOutcome> {
    let dim = state.dim();
    let n = batch.len().max(1);
    let n_params = theta.len();
    let guard = !model.energy_linear_in_params();

    let mut residual = f64::INFINITY;
    let mut iterations = cfg.max_iters;
    let mut converged = false;
    let mut g_mean = vec![0.0; n_params];
    let mut h_mean = vec![0.0; n_params];
    let mut scratch = vec![0.0; n_params];

    for iter in 1..=cfg.max_iters {
        // layer sweeps, replicas independent given theta
        let theta_ref = &theta;
        let sweeps: Result<Vec<f64>> = if batch.len() >= 4 {
            state
                .data_mut()
                .par_chunks_mut(dim)
                .enumerate()
                .map(|(i, s)| {
                    sweep_layers(model, theta_ref, batch.x(i), batch.y(i), beta, order, cfg, s)
                })
                .collect()
        } else {
            state
                .data_mut()
                .chunks_mut(dim)
                .enumerate()
                .map(|(i, s)| {
                    sweep_layers(model, theta_ref, batch.x(i), batch.y(i), beta, order, cfg, s)
                })
                .collect()
        };
        residual = sweeps?.iter().sum::<f64>() / n as f64;

        // all parameters relaxed in parallel (exact joint step when E is
        // linear in theta; otherwise guarded by the energy check)
        batch_mean_grad_theta(model, &theta, batch, &state, &mut g_mean, &mut scratch);
        batch_mean_param_hess(model, batch, &mut h_mean, &mut scratch);
        let e_before = if guard {
            Some(batch_global_energy(model, u, coupling, &theta, batch, beta, &state)?)
        } else {
            None
        };
        let old_theta = if guard { Some(theta.clone()) } else { None };
        for c in 0..n_params {
            let g_tot = coupling_grad_component(coupling, u, &theta, c)? + g_mean[c];
            let h_tot = coupling.quadratic_hess_diag(c)? + h_mean[c];
            theta[c] = slice_min(theta[c], g_tot, h_tot, f64::NEG_INFINITY, f64::INFINITY)?;
        }
        if let Some(e0) = e_before {
            let e1 = batch_global_energy(model, u, coupling, &theta, batch, beta, &state)?;
            if e1 > e0 + 1e-12 {
                // simultaneous update overshot; redo it sequentially
                theta = old_theta.expect("guarded update keeps a copy");
                seidel_param_pass(model, u, coupling, &mut theta, batch, &state, &mut g_mean, &mut h_mean, &mut scratch)?;
            }
        }

        if residual < cfg.xi {
            iterations = iter;
            converged = true;
            break;
        }
    }

    let energy = batch_global_energy(model, u, coupling, &theta, batch, beta, &state)?;
    let params = ParamVector::new(theta, model.param_layout().clone())?;
    Ok(RelaxOutcome {
        state,
        params: Some(params),
        iterations,
        residual,
        energy,
        converged,
    })
}

fn coupling_grad_component(
    coupling: &CouplingSpec,
    u: &[f64],
    theta: &[f64],
    c: usize,
) -> Result<f64> {
    // exact relaxation is only defined for the quadratic form
    let h = coupling.quadratic_hess_diag(c)?;
    Ok((theta[c] - u[c]) * h)
}

/// Gauss-Seidel fallback: one pass over the parameters with the batch
/// gradient refreshed after every component. Slow but safe; only small
/// models with parameter-nonlinear energies ever take this path.
#[allow(clippy::too_many_arguments)]
fn seidel_param_pass(
    model: &dyn EnergyModel,
    u: &[f64],
    coupling: &CouplingSpec,
    theta: &mut Vec<f64>,
    batch: &Batch,
    state: &BatchState,
    g_mean: &mut [f64],
    h_mean: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    batch_mean_param_hess(model, batch, h_mean, scratch);
    for c in 0..theta.len() {
        batch_mean_grad_theta(model, theta, batch, state, g_mean, scratch);
        let g_tot = coupling_grad_component(coupling, u, theta, c)? + g_mean[c];
        let h_tot = coupling.quadratic_hess_diag(c)? + h_mean[c];
        theta[c] = slice_min(theta[c], g_tot, h_tot, f64::NEG_INFINITY, f64::INFINITY)?;
    }
    Ok(())
}

pub(crate) fn batch_mean_grad_theta(
    model: &dyn EnergyModel,
    theta: &[f64],
    batch: &Batch,
    state: &BatchState,
    out: &mut [f64],
    scratch: &mut [f64],
) {
    out.fill(0.0);
    let n = batch.len().max(1) as f64;
    for i in 0..batch.len() {
        model.grad_theta_energy(theta, batch.x(i), state.replica(i), scratch);
        for (o, g) in out.iter_mut().zip(scratch.iter()) {
            *o += g / n;
        }
    }
}

fn batch_mean_param_hess(model: &dyn EnergyModel, batch: &Batch, out: &mut [f64], scratch: &mut [f64]) {
    if model.energy_linear_in_params() {
        out.fill(0.0);
        return;
    }
    out.fill(0.0);
    let n = batch.len().max(1) as f64;
    for i in 0..batch.len() {
        model.param_hess(batch.x(i), scratch);
        for (o, h) in out.iter_mut().zip(scratch.iter()) {
            *o += h / n;
        }
    }
}

/// Batch-mean `E + beta C` (the state-dependent part of the global energy).
pub(crate) fn batch_nudged_energy(
    model: &dyn EnergyModel,
    theta: &[f64],
    batch: &Batch,
    beta: f64,
    state: &BatchState,
) -> f64 {
    let n = batch.len().max(1) as f64;
    (0..batch.len())
        .map(|i| nudged_energy(model, theta, batch.x(i), state.replica(i), batch.y(i), beta))
        .sum::<f64>()
        / n
}

/// Full global energy: coupling + batch-mean `E + beta C`.
pub(crate) fn batch_global_energy(
    model: &dyn EnergyModel,
    u: &[f64],
    coupling: &CouplingSpec,
    theta: &[f64],
    batch: &Batch,
    beta: f64,
    state: &BatchState,
) -> Result<f64> {
    let e = coupling.energy(u, theta)? + batch_nudged_energy(model, theta, batch, beta, state);
    if !e.is_finite() {
        return Err(AeqError::NonFinite {
            what: "global energy",
            value: e,
        });
    }
    Ok(e)
}

/// Batch-mean cost at the current state.
pub(crate) fn batch_cost(model: &dyn EnergyModel, batch: &Batch, state: &BatchState) -> f64 {
    let n = batch.len().max(1) as f64;
    let layout = model.state_layout();
    let seg = layout.segment(layout.n_segments() - 1);
    (0..batch.len())
        .map(|i| model.cost(&state.replica(i)[seg.range()], batch.y(i)))
        .sum::<f64>()
        / n
}

/// Deterministic cold start: the projection of zero onto the state box,
/// replicated over the batch.
pub fn cold_state(model: &dyn EnergyModel, n_replicas: usize) -> BatchState {
    let layout = model.state_layout();
    let mut proto = vec![0.0; layout.total_len()];
    model.state_domain().clamp(layout, &mut proto);
    let mut data = Vec::with_capacity(proto.len() * n_replicas);
    for _ in 0..n_replicas {
        data.extend_from_slice(&proto);
    }
    BatchState::from_flat(data, layout.total_len())
}
