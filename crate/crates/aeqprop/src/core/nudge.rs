//! Nudging schedules for the two training phases.

use serde::{Deserialize, Serialize};

use crate::error::{AeqError, Result};

/// The pair of nudging strengths `(beta1, beta2)` used in the
/// homeostatic and clamped phases. The named constructors cover the
/// three standard schedules; `custom` admits any `beta1 < beta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NudgeVariant {
    beta1: f64,
    beta2: f64,
}

impl NudgeVariant {
    /// `(0, beta)`: plain nudging toward the target in phase two.
    pub fn optimistic(beta: f64) -> Result<Self> {
        Self::custom(0.0, beta)
    }

    /// `(-beta, 0)`: adversarial nudging in phase one; minimizes an
    /// upper bound of the loss.
    pub fn pessimistic(beta: f64) -> Result<Self> {
        Self::custom(-beta, 0.0)
    }

    /// `(-beta/2, beta/2)`: symmetric schedule, second-order accurate.
    pub fn centered(beta: f64) -> Result<Self> {
        Self::custom(-beta / 2.0, beta / 2.0)
    }

    pub fn custom(beta1: f64, beta2: f64) -> Result<Self> {
        if !(beta1 < beta2) || !beta1.is_finite() || !beta2.is_finite() {
            return Err(AeqError::Config(format!(
                "nudge variant requires beta1 < beta2, got ({beta1}, {beta2})"
            )));
        }
        Ok(NudgeVariant { beta1, beta2 })
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    /// Overall nudging span `beta2 - beta1`; the effective step size of
    /// one training step is `eps * span`.
    pub fn span(&self) -> f64 {
        self.beta2 - self.beta1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_schedules() {
        let o = NudgeVariant::optimistic(0.5).unwrap();
        assert_eq!((o.beta1(), o.beta2()), (0.0, 0.5));
        let p = NudgeVariant::pessimistic(0.5).unwrap();
        assert_eq!((p.beta1(), p.beta2()), (-0.5, 0.0));
        let c = NudgeVariant::centered(0.5).unwrap();
        assert_eq!((c.beta1(), c.beta2()), (-0.25, 0.25));
        assert_eq!(o.span(), 0.5);
    }

    #[test]
    fn rejects_bad_pairs() {
        assert!(NudgeVariant::custom(0.1, 0.1).is_err());
        assert!(NudgeVariant::custom(0.2, 0.1).is_err());
        assert!(NudgeVariant::optimistic(-0.5).is_err());
    }
}
