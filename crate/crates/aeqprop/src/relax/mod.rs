//! Equilibration engines and the homeostatic controller.

pub mod coordinate;
pub mod gradflow;
pub mod homeostatic;
pub mod quad;
pub mod relaxer;
pub mod threshold;

pub use coordinate::{cold_state, order_for_beta, relax_coordinate, CoordConfig, SweepOrder, ThetaMode};
pub use gradflow::{relax_gradflow, GradFlowConfig, GradFlowMode, GradFlowResult, DIVERGENCE_LIMIT};
pub use homeostatic::homeostatic_control_analytic;
pub use quad::{quadratic_box_min, slice_min};
pub use relaxer::Relaxer;
pub use threshold::{update_threshold, ThresholdState, XI_FLOOR};
