//! Result record of one relaxation run.

use crate::core::vector::ParamVector;

/// State of a batch of independent replicas, stored back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchState {
    data: Vec<f64>,
    dim: usize,
}

impl BatchState {
    pub fn zeros(dim: usize, n: usize) -> Self {
        BatchState {
            data: vec![0.0; dim * n],
            dim,
        }
    }

    pub fn from_flat(data: Vec<f64>, dim: usize) -> Self {
        assert_eq!(data.len() % dim.max(1), 0);
        BatchState { data, dim }
    }

    pub fn n_replicas(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn replica(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn replica_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn replicas_mut(&mut self) -> std::slice::ChunksMut<'_, f64> {
        self.data.chunks_mut(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Mean over replicas of the per-replica L1 distance to `other`.
    pub fn mean_l1_gap(&self, other: &BatchState) -> f64 {
        let n = self.n_replicas();
        if n == 0 {
            return 0.0;
        }
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        sum / n as f64
    }
}

/// Equilibrium state plus diagnostics. `residual` is the L1 change of
/// the final sweep (batch mean); `energy` is the global energy at the
/// returned point.
#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub state: BatchState,
    /// Present when the parameters floated during the relaxation.
    pub params: Option<ParamVector>,
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    /// Unconverged runs are flagged, not failed, so long training runs
    /// degrade gracefully.
    pub converged: bool,
}
