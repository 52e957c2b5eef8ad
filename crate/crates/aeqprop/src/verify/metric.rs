//! Finite-difference estimate of the preconditioning metric and the
//! step prediction it implies.
//!
//! The metric is the Hessian in theta of
//! `G(theta) = U(u_t, theta) + F(beta1, theta)` at the previous
//! parameters, with `u_t` the homeostatic knob setting. The predicted
//! step is `-(beta2 - beta1) M^{-1} dL/dtheta`; with the quadratic
//! coupling this reduces to the familiar `eps * span` step as the
//! coupling stiffens.

use crate::core::batch::Batch;
use crate::core::coupling::{CouplingForm, CouplingSpec};
use crate::core::model::EnergyModel;
use crate::core::nudge::NudgeVariant;
use crate::error::{AeqError, Result};
use crate::relax::homeostatic::homeostatic_control_analytic;
use crate::relax::relaxer::Relaxer;
use crate::verify::{free_energy_f, lyapunov_grad};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct MetricEstimate {
    pub n: usize,
    /// Row-major symmetric Hessian of `U/eps + F(beta1, .)`.
    pub matrix: Vec<f64>,
    /// `sqrt(eps_i) M_ij sqrt(eps_j)`: tends to the identity as the
    /// coupling stiffens (quadratic form only; equals `matrix` otherwise).
    pub rescaled: Vec<f64>,
    /// Cholesky succeeded; a failed factorization flags an indefinite
    /// estimate (the strict-minimum assumption failed).
    pub positive_definite: bool,
    /// Knob setting the metric was taken at.
    pub u: Vec<f64>,
}

impl MetricEstimate {
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.matrix[i * n + j] - self.matrix[j * n + i]).abs());
            }
        }
        worst
    }
}

/// Lower-triangular Cholesky factor of a symmetric matrix, or None when
/// the matrix is not positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve `L L^T x = b`.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

/// Estimate the metric at `theta` by symmetrized central differences of
/// `G` with step `h`. Parameter counts are expected to stay small (a few
/// hundred); every probe re-relaxes the state.
pub fn riemannian_metric(
    model: &dyn EnergyModel,
    theta: &[f64],
    batch: &Batch,
    beta1: f64,
    coupling: &CouplingSpec,
    relaxer: &Relaxer,
    h: f64,
) -> Result<MetricEstimate> {
    let n = theta.len();
    if n > 400 {
        return Err(AeqError::Config(format!(
            "metric estimation is restricted to <= 400 parameters, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ca1c);
    let (u, _) = homeostatic_control_analytic(
        model,
        theta,
        batch,
        beta1,
        coupling,
        relaxer,
        &mut rng,
        crate::relax::coordinate::cold_state(model, batch.len()),
    )?;

    let g = |point: &[f64]| -> Result<f64> {
        Ok(coupling.energy(&u, point)? + free_energy_f(model, point, batch, beta1, relaxer)?)
    };

    let mut probe = theta.to_vec();
    let g0 = g(&probe)?;
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        probe[i] = theta[i] + h;
        let up = g(&probe)?;
        probe[i] = theta[i] - h;
        let down = g(&probe)?;
        probe[i] = theta[i];
        matrix[i * n + i] = (up - 2.0 * g0 + down) / (h * h);
        for j in 0..i {
            probe[i] = theta[i] + h;
            probe[j] = theta[j] + h;
            let pp = g(&probe)?;
            probe[j] = theta[j] - h;
            let pm = g(&probe)?;
            probe[i] = theta[i] - h;
            let mm = g(&probe)?;
            probe[j] = theta[j] + h;
            let mp = g(&probe)?;
            probe[i] = theta[i];
            probe[j] = theta[j];
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            matrix[i * n + j] = v;
            matrix[j * n + i] = v;
        }
    }

    let rescaled = match coupling.form {
        CouplingForm::Quadratic => {
            let eps = coupling.epsilon();
            let mut r = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    r[i * n + j] = (eps[i] * eps[j]).sqrt() * matrix[i * n + j];
                }
            }
            r
        }
        CouplingForm::Custom(_) => matrix.clone(),
    };
    let positive_definite = cholesky(&matrix, n).is_some();
    Ok(MetricEstimate {
        n,
        matrix,
        rescaled,
        positive_definite,
        u,
    })
}

/// Predicted parameter delta of one two-phase step:
/// `-(beta2 - beta1) M^{-1} dL_{b1;b2}/dtheta` at the current point.
pub fn theorem3_prediction(
    model: &dyn EnergyModel,
    theta: &[f64],
    batch: &Batch,
    variant: &NudgeVariant,
    metric: &MetricEstimate,
    relaxer: &Relaxer,
) -> Result<Vec<f64>> {
    if !metric.positive_definite {
        return Err(AeqError::Config(
            "metric estimate is not positive definite".into(),
        ));
    }
    let grad = lyapunov_grad(model, theta, batch, variant.beta1(), variant.beta2(), relaxer)?;
    let l = cholesky(&metric.matrix, metric.n).expect("checked positive definite");
    let step = cholesky_solve(&l, metric.n, &grad);
    Ok(step.iter().map(|v| -variant.span() * v).collect())
}
