//! The energy-model contract shared by every engine.
//!
//! A model bundles a parameter space, a state space with box bounds, an
//! energy `E(theta, x, s)` and a cost `C(s_out, y)` together with their
//! hand-supplied partial derivatives. Only the simulated physics ever
//! calls these evaluators; the two-phase training procedure itself sees
//! nothing but equilibria.
//!
//! Contract notes:
//! - the cost reads only the **last** state segment (the output units)
//!   and never depends on `theta`;
//! - every evaluator must be re-entrant: models are immutable after
//!   construction and shared freely across threads;
//! - `nudge_offset` supports reducing a `(beta1, beta2)` schedule to a
//!   `(0, beta2 - beta1)` one: engines add the offset to every nudging
//!   strength, which makes the effective energy `E + offset * C`.

use std::sync::Arc;

use crate::core::layout::Layout;
use crate::error::{AeqError, Result};

/// Per-segment closed box bounds for the state space. Unbounded
/// segments use `(-inf, +inf)`; clamping is then the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDomain {
    bounds: Vec<(f64, f64)>,
}

impl StateDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for &(p, q) in &bounds {
            if !(p <= q) {
                return Err(AeqError::Config(format!(
                    "state box requires p <= q, got [{p}, {q}]"
                )));
            }
        }
        Ok(StateDomain { bounds })
    }

    pub fn unbounded(n_segments: usize) -> Self {
        StateDomain {
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n_segments],
        }
    }

    pub fn segment_bounds(&self, k: usize) -> (f64, f64) {
        self.bounds[k]
    }

    pub fn n_segments(&self) -> usize {
        self.bounds.len()
    }

    /// Project a full state vector onto the box, segment by segment.
    pub fn clamp(&self, layout: &Layout, s: &mut [f64]) {
        for (k, seg) in layout.segments().iter().enumerate() {
            let (p, q) = self.bounds[k];
            for v in &mut s[seg.range()] {
                *v = v.clamp(p, q);
            }
        }
    }

    pub fn contains(&self, layout: &Layout, s: &[f64]) -> bool {
        layout.segments().iter().enumerate().all(|(k, seg)| {
            let (p, q) = self.bounds[k];
            s[seg.range()].iter().all(|&v| v >= p && v <= q)
        })
    }
}

/// Energy model contract. See the module docs for the fine print.
pub trait EnergyModel: Send + Sync {
    fn param_layout(&self) -> &Arc<Layout>;
    fn state_layout(&self) -> &Arc<Layout>;
    fn state_domain(&self) -> &StateDomain;
    fn input_dim(&self) -> usize;
    fn target_dim(&self) -> usize;

    /// `E(theta, x, s)`.
    fn energy(&self, theta: &[f64], x: &[f64], s: &[f64]) -> f64;

    /// `C(s_out, y)` over the output segment of the state.
    fn cost(&self, s_out: &[f64], y: &[f64]) -> f64;

    /// dE/ds, full state length.
    fn grad_s_energy(&self, theta: &[f64], x: &[f64], s: &[f64], out: &mut [f64]);

    /// dE/d(theta), full parameter length.
    fn grad_theta_energy(&self, theta: &[f64], x: &[f64], s: &[f64], out: &mut [f64]);

    /// dC/d(s_out), output segment length.
    fn grad_s_cost(&self, s_out: &[f64], y: &[f64], out: &mut [f64]);

    /// Constant nudge baked into the effective energy (zero for base
    /// models; see module docs).
    fn nudge_offset(&self) -> f64 {
        0.0
    }

    // --- exact per-variable relaxation support (optional) ---

    /// Whether every slice of E in a single state or parameter scalar is
    /// quadratic with model-reported curvature, enabling exact
    /// coordinate minimization.
    fn exact_coordinate(&self) -> bool {
        false
    }

    /// d2E/dz2 for any unit z of state segment `k` (constant across the
    /// segment for supporting models).
    fn state_hess(&self, _k: usize) -> f64 {
        unimplemented!("model does not support exact coordinate relaxation")
    }

    /// d2C/dz2 for any output unit z (constant for supporting models).
    fn cost_hess(&self) -> f64 {
        unimplemented!("model does not support exact coordinate relaxation")
    }

    /// dE/ds restricted to state segment `k`; `out` has the segment's length.
    fn grad_s_energy_layer(&self, theta: &[f64], x: &[f64], s: &[f64], k: usize, out: &mut [f64]) {
        let mut full = vec![0.0; self.state_layout().total_len()];
        self.grad_s_energy(theta, x, s, &mut full);
        out.copy_from_slice(&full[self.state_layout().segment(k).range()]);
    }

    /// d2E/d(theta_k)^2 for every parameter component (may depend on x).
    fn param_hess(&self, _x: &[f64], _out: &mut [f64]) {
        unimplemented!("model does not support exact coordinate relaxation")
    }

    /// True when E is linear in theta for fixed state (all Hopfield-like
    /// interactions). The simultaneous parameter relaxation is then an
    /// exact joint minimization and needs no energy guard.
    fn energy_linear_in_params(&self) -> bool {
        false
    }
}

/// Offset view of the output segment within a state slice.
pub fn output_segment<'a>(model: &dyn EnergyModel, s: &'a [f64]) -> &'a [f64] {
    let layout = model.state_layout();
    let seg = layout.segment(layout.n_segments() - 1);
    &s[seg.range()]
}

/// Effective nudging strength seen by the physics: the caller's `beta`
/// plus any lift offset carried by the model.
pub fn effective_beta(model: &dyn EnergyModel, beta: f64) -> f64 {
    beta + model.nudge_offset()
}

/// `E + (offset + beta) * C` - the energy the system actually descends
/// at nudging strength `beta`.
pub fn nudged_energy(model: &dyn EnergyModel, theta: &[f64], x: &[f64], s: &[f64], y: &[f64], beta: f64) -> f64 {
    let eb = effective_beta(model, beta);
    let mut e = model.energy(theta, x, s);
    if eb != 0.0 {
        e += eb * model.cost(output_segment(model, s), y);
    }
    e
}

/// d/ds of [`nudged_energy`], full state length.
pub fn nudged_grad_s(
    model: &dyn EnergyModel,
    theta: &[f64],
    x: &[f64],
    s: &[f64],
    y: &[f64],
    beta: f64,
    out: &mut [f64],
) {
    model.grad_s_energy(theta, x, s, out);
    let eb = effective_beta(model, beta);
    if eb != 0.0 {
        let layout = model.state_layout();
        let seg = layout.segment(layout.n_segments() - 1);
        let mut gc = vec![0.0; seg.len()];
        model.grad_s_cost(&s[seg.range()], y, &mut gc);
        for (o, g) in out[seg.range()].iter_mut().zip(&gc) {
            *o += eb * g;
        }
    }
}

/// A model with a constant extra nudge folded into its energy:
/// effectively `E' = E + beta0 * C`, cost unchanged.
pub struct LiftedModel<'a> {
    inner: &'a dyn EnergyModel,
    offset: f64,
}

/// Shift a model's energy by `beta0 * C`. Relaxing the lifted model at
/// nudging `beta` reproduces the original model at `beta0 + beta`, which
/// reduces any `(beta1, beta2)` schedule to `(0, beta2 - beta1)`.
pub fn lift_nudge(model: &dyn EnergyModel, beta0: f64) -> LiftedModel<'_> {
    LiftedModel {
        inner: model,
        offset: beta0,
    }
}

impl EnergyModel for LiftedModel<'_> {
    fn param_layout(&self) -> &Arc<Layout> {
        self.inner.param_layout()
    }
    fn state_layout(&self) -> &Arc<Layout> {
        self.inner.state_layout()
    }
    fn state_domain(&self) -> &StateDomain {
        self.inner.state_domain()
    }
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }
    fn target_dim(&self) -> usize {
        self.inner.target_dim()
    }
    fn energy(&self, theta: &[f64], x: &[f64], s: &[f64]) -> f64 {
        self.inner.energy(theta, x, s)
    }
    fn cost(&self, s_out: &[f64], y: &[f64]) -> f64 {
        self.inner.cost(s_out, y)
    }
    fn grad_s_energy(&self, theta: &[f64], x: &[f64], s: &[f64], out: &mut [f64]) {
        self.inner.grad_s_energy(theta, x, s, out)
    }
    fn grad_theta_energy(&self, theta: &[f64], x: &[f64], s: &[f64], out: &mut [f64]) {
        self.inner.grad_theta_energy(theta, x, s, out)
    }
    fn grad_s_cost(&self, s_out: &[f64], y: &[f64], out: &mut [f64]) {
        self.inner.grad_s_cost(s_out, y, out)
    }
    fn nudge_offset(&self) -> f64 {
        self.inner.nudge_offset() + self.offset
    }
    fn exact_coordinate(&self) -> bool {
        self.inner.exact_coordinate()
    }
    fn state_hess(&self, k: usize) -> f64 {
        self.inner.state_hess(k)
    }
    fn cost_hess(&self) -> f64 {
        self.inner.cost_hess()
    }
    fn grad_s_energy_layer(&self, theta: &[f64], x: &[f64], s: &[f64], k: usize, out: &mut [f64]) {
        self.inner.grad_s_energy_layer(theta, x, s, k, out)
    }
    fn param_hess(&self, x: &[f64], out: &mut [f64]) {
        self.inner.param_hess(x, out)
    }
    fn energy_linear_in_params(&self) -> bool {
        self.inner.energy_linear_in_params()
    }
}
