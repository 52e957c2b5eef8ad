//! Simulation and verification laboratory for agnostic equilibrium
//! propagation: physical systems that learn by energy minimization,
//! homeostatic control of their parameters, and nudging toward the
//! desired response.
//!
//! The crate emulates such systems numerically (two interchangeable
//! equilibration engines), runs the two-phase training procedure and its
//! optimistic/pessimistic/centered variants, and numerically certifies
//! the procedure's guarantees - SGD equivalence, per-step Lyapunov
//! descent, loss bounds - on a synthetic regression task and on
//! Hopfield-like networks over MNIST-class data.
//!
//! Module map:
//! - [`core`]: layouts, vectors, coupling, the energy-model contract
//! - [`models`]: linear regression, dense/conv Hopfield networks
//! - [`relax`]: coordinate and gradient-flow equilibration, homeostatic control
//! - [`train`]: the two-phase step, epoch loop, SGD and two-measurement baselines
//! - [`verify`]: independent oracles and the theorem certification suite
//! - [`data`]: IDX ingestion and the synthetic regression stream

pub mod core;
pub mod data;
pub mod error;
pub mod models;
pub mod relax;
pub mod train;
pub mod verify;

pub use error::{AeqError, Result};
