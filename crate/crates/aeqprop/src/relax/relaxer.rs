//! Engine selection: exact coordinate sweeps or adaptive gradient flow.

use rand_chacha::ChaCha8Rng;

use crate::core::batch::Batch;
use crate::core::coupling::CouplingSpec;
use crate::core::model::{effective_beta, EnergyModel};
use crate::core::outcome::{BatchState, RelaxOutcome};
use crate::error::Result;
use crate::relax::coordinate::{order_for_beta, relax_coordinate, CoordConfig, ThetaMode};
use crate::relax::gradflow::{relax_gradflow, GradFlowConfig, GradFlowMode};

#[derive(Debug, Clone)]
pub enum Relaxer {
    Coordinate(CoordConfig),
    GradFlow(GradFlowConfig),
}

impl Relaxer {
    /// Coordinate relaxation tightened for oracle-grade equilibria.
    pub fn exact() -> Self {
        Relaxer::Coordinate(CoordConfig::exact())
    }

    /// Override the coordinate convergence threshold, if applicable.
    pub fn set_xi(&mut self, xi: f64) {
        if let Relaxer::Coordinate(cfg) = self {
            cfg.xi = xi;
        }
    }

    /// Relax the state with frozen parameters.
    pub fn relax_state(
        &self,
        model: &dyn EnergyModel,
        theta: &[f64],
        batch: &Batch,
        beta: f64,
        rng: &mut ChaCha8Rng,
        state: BatchState,
    ) -> Result<RelaxOutcome> {
        match self {
            Relaxer::Coordinate(cfg) => relax_coordinate(
                model,
                ThetaMode::Fixed(theta),
                batch,
                beta,
                order_for_beta(effective_beta(model, beta)),
                cfg,
                state,
            ),
            Relaxer::GradFlow(cfg) => {
                // coupling term constant while theta is frozen
                let coupling = CouplingSpec::uniform(1.0, theta.len())?;
                let res = relax_gradflow(
                    model,
                    &coupling,
                    theta.to_vec(),
                    GradFlowMode::StateOnly { theta },
                    batch,
                    beta,
                    cfg,
                    rng,
                    state,
                )?;
                Ok(res.outcome)
            }
        }
    }

    /// Relax state and parameters jointly with the knobs clamped at `u`.
    #[allow(clippy::too_many_arguments)]
    pub fn relax_joint(
        &self,
        model: &dyn EnergyModel,
        u: &[f64],
        coupling: &CouplingSpec,
        theta_start: Vec<f64>,
        batch: &Batch,
        beta: f64,
        rng: &mut ChaCha8Rng,
        state: BatchState,
    ) -> Result<RelaxOutcome> {
        match self {
            Relaxer::Coordinate(cfg) => relax_coordinate(
                model,
                ThetaMode::Floating {
                    u,
                    coupling,
                    start: theta_start,
                },
                batch,
                beta,
                order_for_beta(effective_beta(model, beta)),
                cfg,
                state,
            ),
            Relaxer::GradFlow(cfg) => {
                let res = relax_gradflow(
                    model,
                    coupling,
                    u.to_vec(),
                    GradFlowMode::ClampedU { theta_start },
                    batch,
                    beta,
                    cfg,
                    rng,
                    state,
                )?;
                Ok(res.outcome)
            }
        }
    }
}
