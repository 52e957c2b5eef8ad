//! The control-knob coupling energy `U(u, theta)` and its strength.
//!
//! The default form is the per-component quadratic
//! `sum_k (u_k - theta_k)^2 / (2 eps_k)`; `eps_k` doubles as the
//! per-component learning-rate factor of the training step. A scalar
//! epsilon is sugar for a constant vector.

use std::sync::Arc;

use crate::core::layout::Layout;
use crate::error::{AeqError, Result};

/// A non-quadratic coupling energy, supplied with its own derivatives.
/// Implementations own any epsilon-like scaling internally.
pub trait CustomCoupling: Send + Sync {
    fn value(&self, u: &[f64], theta: &[f64]) -> f64;
    fn grad_theta(&self, u: &[f64], theta: &[f64], out: &mut [f64]);
    /// Hessian in theta, row-major dense. Used by metric estimation only.
    fn hess_theta(&self, u: &[f64], theta: &[f64], out: &mut [f64]);
}

#[derive(Clone)]
pub enum CouplingForm {
    Quadratic,
    Custom(Arc<dyn CustomCoupling>),
}

impl std::fmt::Debug for CouplingForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CouplingForm::Quadratic => write!(f, "Quadratic"),
            CouplingForm::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CouplingSpec {
    pub form: CouplingForm,
    epsilon: Vec<f64>,
}

impl CouplingSpec {
    /// Quadratic coupling with one epsilon per component.
    pub fn quadratic(epsilon: Vec<f64>) -> Result<Self> {
        if epsilon.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(AeqError::Config(
                "coupling epsilon components must be positive and finite".into(),
            ));
        }
        Ok(CouplingSpec {
            form: CouplingForm::Quadratic,
            epsilon,
        })
    }

    /// Scalar epsilon broadcast over `len` components.
    pub fn uniform(eps: f64, len: usize) -> Result<Self> {
        CouplingSpec::quadratic(vec![eps; len])
    }

    /// Per-segment scalars broadcast over a parameter layout.
    /// `pairs` maps segment name to its epsilon; every segment must appear.
    pub fn per_segment(layout: &Layout, pairs: &[(&str, f64)]) -> Result<Self> {
        let mut epsilon = vec![f64::NAN; layout.total_len()];
        for seg in layout.segments() {
            let eps = pairs
                .iter()
                .find(|(n, _)| *n == seg.name)
                .map(|(_, e)| *e)
                .ok_or_else(|| {
                    AeqError::Config(format!("no epsilon given for segment '{}'", seg.name))
                })?;
            epsilon[seg.range()].fill(eps);
        }
        CouplingSpec::quadratic(epsilon)
    }

    pub fn custom(custom: Arc<dyn CustomCoupling>, epsilon: Vec<f64>) -> Result<Self> {
        if epsilon.iter().any(|&e| !(e > 0.0)) {
            return Err(AeqError::Config("epsilon components must be positive".into()));
        }
        Ok(CouplingSpec {
            form: CouplingForm::Custom(custom),
            epsilon,
        })
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn len(&self) -> usize {
        self.epsilon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilon.is_empty()
    }

    /// Scale every epsilon component (per-epoch learning-rate decay).
    pub fn scale_epsilon(&mut self, factor: f64) {
        for e in &mut self.epsilon {
            *e *= factor;
        }
    }

    /// Coupling energy, with the per-component scaling already applied.
    pub fn energy(&self, u: &[f64], theta: &[f64]) -> Result<f64> {
        if u.len() != theta.len() || u.len() != self.epsilon.len() {
            return Err(AeqError::Shape {
                context: "coupling energy",
                expected: self.epsilon.len(),
                actual: u.len().max(theta.len()),
            });
        }
        Ok(match &self.form {
            CouplingForm::Quadratic => u
                .iter()
                .zip(theta)
                .zip(&self.epsilon)
                .map(|((&uk, &tk), &ek)| (uk - tk) * (uk - tk) / (2.0 * ek))
                .sum(),
            CouplingForm::Custom(c) => c.value(u, theta),
        })
    }

    /// d/d(theta) of the scaled coupling energy.
    pub fn grad_theta(&self, u: &[f64], theta: &[f64], out: &mut [f64]) {
        match &self.form {
            CouplingForm::Quadratic => {
                for k in 0..theta.len() {
                    out[k] = (theta[k] - u[k]) / self.epsilon[k];
                }
            }
            CouplingForm::Custom(c) => c.grad_theta(u, theta, out),
        }
    }

    /// Diagonal of d^2/d(theta)^2 for the quadratic form: `1/eps_k`.
    /// The exact parameter relaxation is only defined for this form.
    pub fn quadratic_hess_diag(&self, k: usize) -> Result<f64> {
        match &self.form {
            CouplingForm::Quadratic => Ok(1.0 / self.epsilon[k]),
            CouplingForm::Custom(_) => Err(AeqError::Unsupported(
                "exact parameter relaxation requires the quadratic coupling form",
            )),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.form, CouplingForm::Quadratic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_energy_and_grad() {
        let c = CouplingSpec::uniform(0.5, 2).unwrap();
        // (1-0)^2/(2*0.5) + (2-0)^2/(2*0.5) = 1 + 4
        let e = c.energy(&[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert!((e - 5.0).abs() < 1e-15);
        let mut g = [0.0; 2];
        c.grad_theta(&[1.0, 2.0], &[0.0, 0.0], &mut g);
        assert_eq!(g, [-2.0, -4.0]);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        assert!(CouplingSpec::uniform(0.0, 3).is_err());
        assert!(CouplingSpec::quadratic(vec![0.1, -1.0]).is_err());
    }

    #[test]
    fn per_segment_broadcast() {
        let layout = Layout::new([("w".to_string(), vec![2]), ("b".to_string(), vec![1])]);
        let c = CouplingSpec::per_segment(&layout, &[("w", 0.2), ("b", 0.04)]).unwrap();
        assert_eq!(c.epsilon(), &[0.2, 0.2, 0.04]);
        assert!(CouplingSpec::per_segment(&layout, &[("w", 0.2)]).is_err());
    }
}
