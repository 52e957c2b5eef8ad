//! Training trace records for CSV/JSON emission.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Batch-mean cost at the free equilibrium of this step's sample.
    pub loss: f64,
    /// Lyapunov value of this step's sample at the post-step parameters
    /// (NaN when not recorded).
    pub lyapunov: f64,
    pub dtheta_norm: f64,
    /// Mean per-replica L1 gap between the two phase equilibria.
    pub phase_gap: f64,
    /// Distance of the homeostatic phase's parameter drift from its
    /// target (zero in analytic mode).
    pub controller_residual: f64,
    /// Relaxation iterations summed over the step's phases.
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_error: f64,
    pub test_error: Option<f64>,
    pub xi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceInfo {
    pub step: usize,
    pub phase: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
    pub diverged: Option<DivergenceInfo>,
    /// Final parameters, flat.
    pub final_params: Vec<f64>,
}

impl TrainTrace {
    pub fn losses(&self) -> Vec<f64> {
        self.steps.iter().map(|r| r.loss).collect()
    }
}

/// Moving average with the given window, same length as the input
/// (leading entries average the available prefix).
pub fn smooth(series: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for i in 0..series.len() {
        acc += series[i];
        if i >= w {
            acc -= series[i - w];
        }
        out.push(acc / (i.min(w - 1) + 1) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_window_means() {
        let s = smooth(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(s, vec![1.0, 1.5, 2.5, 3.5]);
        let id = smooth(&[5.0, 7.0], 1);
        assert_eq!(id, vec![5.0, 7.0]);
    }
}
