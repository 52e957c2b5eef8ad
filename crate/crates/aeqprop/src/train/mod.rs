//! The two-phase training step, its variants, and the epoch loop.

pub mod baseline;
pub mod trace;

pub use baseline::{eqprop_estimator, sgd_baseline, LossGradSource};
pub use trace::{smooth, DivergenceInfo, EpochRecord, StepRecord, TrainTrace};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::core::batch::Batch;
use crate::core::coupling::CouplingSpec;
use crate::core::model::EnergyModel;
use crate::core::nudge::NudgeVariant;
use crate::core::outcome::BatchState;
use crate::core::vector::{l2_diff, ParamVector};
use crate::data::Dataset;
use crate::error::{AeqError, Result};
use crate::relax::coordinate::{batch_cost, cold_state};
use crate::relax::gradflow::{relax_gradflow, GradFlowMode};
use crate::relax::homeostatic::homeostatic_control_analytic;
use crate::relax::relaxer::Relaxer;
use crate::relax::threshold::{update_threshold, ThresholdState};
use crate::verify::{lyapunov_value, BetaGrid};

/// How phase one finds the knob setting that holds the parameters still.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomeostaticMode {
    /// Proportional controller integrated into the gradient flow.
    Controller,
    /// Relax the state with frozen parameters, then solve for the knobs
    /// directly.
    Analytic,
}

/// Per-step Lyapunov descent verification.
#[derive(Debug, Clone)]
pub struct LyapunovCheck {
    pub grid_points: usize,
    /// Absolute slack added to the quadrature/solver error budget.
    pub tol: f64,
}

impl Default for LyapunovCheck {
    fn default() -> Self {
        LyapunovCheck {
            grid_points: 21,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AeqpropConfig {
    pub variant: NudgeVariant,
    /// Coupling spec; its epsilon vector is the per-component learning
    /// rate factor and decays by `lr_decay` each epoch.
    pub coupling: CouplingSpec,
    pub homeostatic_mode: HomeostaticMode,
    pub relaxer: Relaxer,
    /// Extra free phase to measure the loss when phase one is nudged
    /// (pessimistic/centered); ignored when `beta1 == 0`.
    pub monitor_free_phase: bool,
    /// Assert the per-step Lyapunov inequality and record the value.
    pub check_lyapunov: Option<LyapunovCheck>,
    pub lr_decay: f64,
    pub seed: u64,
    pub batch_size: usize,
    /// Adaptive threshold driving the coordinate relaxer.
    pub threshold: ThresholdState,
}

impl AeqpropConfig {
    pub fn new(variant: NudgeVariant, coupling: CouplingSpec, relaxer: Relaxer) -> Self {
        AeqpropConfig {
            variant,
            coupling,
            homeostatic_mode: HomeostaticMode::Analytic,
            relaxer,
            monitor_free_phase: true,
            check_lyapunov: None,
            lr_decay: 0.99,
            seed: 0,
            batch_size: 1,
            threshold: ThresholdState::default(),
        }
    }
}

pub struct StepOutput {
    pub theta: ParamVector,
    pub record: StepRecord,
    pub u: Vec<f64>,
}

fn phase_err(e: AeqError, phase: &'static str) -> AeqError {
    match e {
        AeqError::Diverged { what, value, .. } => AeqError::Diverged { phase, what, value },
        other => other,
    }
}

/// One two-phase step: find `u_t` so the parameters equilibrate at their
/// previous value under nudging `beta1`, then clamp the knobs, switch to
/// `beta2`, and let state and parameters settle jointly. The returned
/// parameters are the new equilibrium.
pub fn aeqprop_step(
    model: &dyn EnergyModel,
    theta_prev: &ParamVector,
    batch: &Batch,
    cfg: &AeqpropConfig,
    rng: &mut ChaCha8Rng,
) -> Result<StepOutput> {
    let beta1 = cfg.variant.beta1();
    let beta2 = cfg.variant.beta2();
    let mut iterations = 0;

    // optional monitoring phase: free equilibrium for the loss readout
    let mut loss = f64::NAN;
    let mut warm = cold_state(model, batch.len());
    if beta1 != 0.0 && cfg.monitor_free_phase {
        let out = cfg
            .relaxer
            .relax_state(model, theta_prev.as_slice(), batch, 0.0, rng, warm)
            .map_err(|e| phase_err(e, "monitor"))?;
        loss = batch_cost(model, batch, &out.state);
        iterations += out.iterations;
        warm = out.state;
    }

    // phase one: homeostatic control at beta1
    let (u, state_a, controller_residual, theta_b_start) = match cfg.homeostatic_mode {
        HomeostaticMode::Analytic => {
            let (u, out) = homeostatic_control_analytic(
                model,
                theta_prev.as_slice(),
                batch,
                beta1,
                &cfg.coupling,
                &cfg.relaxer,
                rng,
                warm,
            )
            .map_err(|e| phase_err(e, "homeostatic"))?;
            iterations += out.iterations;
            if beta1 == 0.0 {
                loss = batch_cost(model, batch, &out.state);
            }
            (u, out.state, 0.0, theta_prev.as_slice().to_vec())
        }
        HomeostaticMode::Controller => {
            let Relaxer::GradFlow(gf_cfg) = &cfg.relaxer else {
                return Err(AeqError::Config(
                    "controller homeostatic mode requires the gradient-flow relaxer".into(),
                ));
            };
            let res = relax_gradflow(
                model,
                &cfg.coupling,
                theta_prev.as_slice().to_vec(),
                GradFlowMode::Homeostatic {
                    theta_target: theta_prev.as_slice(),
                    theta_start: theta_prev.as_slice().to_vec(),
                },
                batch,
                beta1,
                gf_cfg,
                rng,
                warm,
            )
            .map_err(|e| phase_err(e, "homeostatic"))?;
            let theta_end = res.outcome.params.expect("homeostatic mode floats theta");
            let residual = l2_diff(theta_end.as_slice(), theta_prev.as_slice());
            iterations += res.outcome.iterations;
            if beta1 == 0.0 {
                loss = batch_cost(model, batch, &res.outcome.state);
            }
            (res.u, res.outcome.state, residual, theta_end.into_vec())
        }
    };

    // phase two: knobs clamped, nudging beta2, state and parameters float
    let out_b = cfg
        .relaxer
        .relax_joint(
            model,
            &u,
            &cfg.coupling,
            theta_b_start,
            batch,
            beta2,
            rng,
            state_a.clone(),
        )
        .map_err(|e| phase_err(e, "clamped"))?;
    iterations += out_b.iterations;
    let theta_new = out_b.params.expect("clamped phase floats theta");
    let phase_gap = out_b.state.mean_l1_gap(&state_a);

    let mut lyapunov = f64::NAN;
    if let Some(check) = &cfg.check_lyapunov {
        let grid = BetaGrid::uniform(beta1, beta2, check.grid_points)?;
        let exact = Relaxer::exact();
        let before = lyapunov_value(model, theta_prev.as_slice(), batch, &grid, &exact)?;
        let after = lyapunov_value(model, theta_new.as_slice(), batch, &grid, &exact)?;
        lyapunov = after.f_difference;
        let budget_f = check.tol;
        let budget_q = after.quad_error + before.quad_error + check.tol;
        if after.f_difference > before.f_difference + budget_f
            || after.trapezoid > before.trapezoid + budget_q
        {
            return Err(AeqError::SelfCheck {
                what: "per-step Lyapunov descent",
                gap: after.f_difference - before.f_difference,
                budget: budget_f,
            });
        }
    }

    let record = StepRecord {
        step: 0,
        loss,
        lyapunov,
        dtheta_norm: l2_diff(theta_new.as_slice(), theta_prev.as_slice()),
        phase_gap,
        controller_residual,
        iterations,
    };
    Ok(StepOutput {
        theta: theta_new,
        record,
        u,
    })
}

/// Iterate [`aeqprop_step`] over shuffled mini-batches with per-epoch
/// learning-rate decay and threshold tightening. A divergent step aborts
/// the run and preserves the partial trace.
pub fn train(
    model: &dyn EnergyModel,
    data: &Dataset,
    test: Option<&Dataset>,
    theta0: &ParamVector,
    cfg: &AeqpropConfig,
    epochs: usize,
) -> Result<TrainTrace> {
    if data.is_empty() {
        return Err(AeqError::Config("training dataset is empty".into()));
    }
    let mut cfg = cfg.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = theta0.clone();
    let mut trace = TrainTrace::default();
    let mut step_no = 0;

    'epochs: for epoch in 0..epochs {
        cfg.relaxer.set_xi(cfg.threshold.xi);
        let mut gap_sum = 0.0;
        let mut gap_count = 0usize;
        for indices in data.batches(cfg.batch_size, cfg.seed, epoch) {
            let batch = data.batch(&indices);
            match aeqprop_step(model, &theta, &batch, &cfg, &mut rng) {
                Ok(out) => {
                    theta = out.theta;
                    let mut rec = out.record;
                    rec.step = step_no;
                    gap_sum += rec.phase_gap;
                    gap_count += 1;
                    trace.steps.push(rec);
                }
                Err(AeqError::Diverged { phase, what, value }) => {
                    trace.diverged = Some(DivergenceInfo {
                        step: step_no,
                        phase: phase.to_string(),
                        reason: format!("{what} reached {value:e}"),
                    });
                    break 'epochs;
                }
                Err(AeqError::Curvature { curvature }) => {
                    trace.diverged = Some(DivergenceInfo {
                        step: step_no,
                        phase: "relaxation".to_string(),
                        reason: format!("energy unbounded below (slice curvature {curvature})"),
                    });
                    break 'epochs;
                }
                Err(other) => return Err(other),
            }
            step_no += 1;
        }

        let mu = if gap_count > 0 {
            gap_sum / gap_count as f64
        } else {
            0.0
        };
        cfg.threshold = update_threshold(&cfg.threshold, mu);

        let train_error = if data.has_labels() {
            classification_error(model, data, theta.as_slice(), &cfg.relaxer, &mut rng)?
        } else {
            // mean step loss over the epoch
            let recent = &trace.steps[trace.steps.len().saturating_sub(gap_count)..];
            let finite: Vec<f64> = recent.iter().map(|r| r.loss).filter(|l| l.is_finite()).collect();
            if finite.is_empty() {
                f64::NAN
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            }
        };
        let test_error = match test {
            Some(t) if t.has_labels() => {
                Some(classification_error(model, t, theta.as_slice(), &cfg.relaxer, &mut rng)?)
            }
            _ => None,
        };
        trace.epochs.push(EpochRecord {
            epoch,
            train_error,
            test_error,
            xi: cfg.threshold.xi,
        });

        cfg.coupling.scale_epsilon(cfg.lr_decay);
    }

    trace.final_params = theta.into_vec();
    Ok(trace)
}

/// Fraction of samples whose free-equilibrium output argmax misses the
/// label. Evaluation relaxes in chunks so replicas run in parallel.
pub fn classification_error(
    model: &dyn EnergyModel,
    data: &Dataset,
    theta: &[f64],
    relaxer: &Relaxer,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let layout = model.state_layout();
    let out_seg = layout.segment(layout.n_segments() - 1).clone();
    let mut wrong = 0usize;
    let chunk = 256;
    let n = data.len();
    let mut i = 0;
    while i < n {
        let hi = (i + chunk).min(n);
        let indices: Vec<usize> = (i..hi).collect();
        let batch = data.batch(&indices);
        let out = relaxer.relax_state(
            model,
            theta,
            &batch,
            0.0,
            rng,
            cold_state(model, indices.len()),
        )?;
        for (j, &idx) in indices.iter().enumerate() {
            let label = data.label(idx).ok_or_else(|| {
                AeqError::Config("classification eval needs labeled data".into())
            })? as usize;
            let units = &out.state.replica(j)[out_seg.range()];
            let pred = units
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite outputs"))
                .map(|(k, _)| k)
                .unwrap_or(0);
            if pred != label {
                wrong += 1;
            }
        }
        i = hi;
    }
    Ok(wrong as f64 / n.max(1) as f64)
}

/// Per-component learning rate of the equivalent SGD step:
/// `eps_k * (beta2 - beta1)`.
pub fn sgd_learning_rate(coupling: &CouplingSpec, variant: &NudgeVariant) -> Vec<f64> {
    coupling
        .epsilon()
        .iter()
        .map(|e| e * variant.span())
        .collect()
}

/// Warm helper shared by tests: cold batch state sized to the model.
pub fn fresh_state(model: &dyn EnergyModel, n: usize) -> BatchState {
    cold_state(model, n)
}
