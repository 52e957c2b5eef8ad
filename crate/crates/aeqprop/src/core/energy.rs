//! The global energy: coupling + model energy + nudged cost.

use crate::core::coupling::CouplingSpec;
use crate::core::model::{nudged_energy, EnergyModel};
use crate::core::vector::{ControlVector, ParamVector, StateVector};
use crate::error::{AeqError, Result};

/// `U(u, theta)/eps + E(theta, x, s) + beta * C(s_out, y)`, the scalar
/// the whole system descends. The per-component epsilon lives inside the
/// coupling term; any lift offset carried by the model is added to beta.
pub fn global_energy(
    u: &ControlVector,
    theta: &ParamVector,
    s: &StateVector,
    x: &[f64],
    y: &[f64],
    coupling: &CouplingSpec,
    beta: f64,
    model: &dyn EnergyModel,
) -> Result<f64> {
    let expect = |context, expected: usize, actual: usize| -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(AeqError::Shape {
                context,
                expected,
                actual,
            })
        }
    };
    expect("global_energy params", model.param_layout().total_len(), theta.len())?;
    expect("global_energy controls", theta.len(), u.len())?;
    expect("global_energy state", model.state_layout().total_len(), s.len())?;
    expect("global_energy input", model.input_dim(), x.len())?;
    expect("global_energy target", model.target_dim(), y.len())?;
    if !model.state_domain().contains(model.state_layout(), s.as_slice()) {
        return Err(AeqError::Config(
            "state lies outside its box domain".into(),
        ));
    }

    let total = coupling.energy(u.as_slice(), theta.as_slice())?
        + nudged_energy(model, theta.as_slice(), x, s.as_slice(), y, beta);
    if !total.is_finite() {
        return Err(AeqError::NonFinite {
            what: "global energy",
            value: total,
        });
    }
    Ok(total)
}

/// Raw-slice variant used inside the engines, where shapes are already
/// established and states may sit transiently outside their boxes.
pub(crate) fn global_energy_raw(
    u: &[f64],
    theta: &[f64],
    s: &[f64],
    x: &[f64],
    y: &[f64],
    coupling: &CouplingSpec,
    beta: f64,
    model: &dyn EnergyModel,
) -> Result<f64> {
    let total =
        coupling.energy(u, theta)? + nudged_energy(model, theta, x, s, y, beta);
    if !total.is_finite() {
        return Err(AeqError::NonFinite {
            what: "global energy",
            value: total,
        });
    }
    Ok(total)
}
