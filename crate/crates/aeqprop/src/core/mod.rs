//! Domain types and the global-energy evaluation shared by all engines.

pub mod batch;
pub mod coupling;
pub mod energy;
pub mod layout;
pub mod model;
pub mod nudge;
pub mod outcome;
pub mod vector;

pub use batch::Batch;
pub use coupling::{CouplingForm, CouplingSpec, CustomCoupling};
pub use energy::global_energy;
pub use layout::{Layout, Segment};
pub use model::{
    effective_beta, lift_nudge, nudged_energy, nudged_grad_s, output_segment, EnergyModel,
    LiftedModel, StateDomain,
};
pub use nudge::NudgeVariant;
pub use outcome::{BatchState, RelaxOutcome};
pub use vector::{ControlVector, ParamVector, StateVector};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinRegModel;

    fn linreg_fixture() -> (LinRegModel, ParamVector, StateVector, ControlVector) {
        let model = LinRegModel::new(10, false);
        let mut theta = ParamVector::zeros(model.param_layout().clone());
        theta.as_mut_slice()[0] = 1.0;
        let s = StateVector::new(vec![2.0], model.state_layout().clone()).unwrap();
        let u = ControlVector::from_params(&theta);
        (model, theta, s, u)
    }

    #[test]
    fn coupling_and_nudge_vanish_at_u_eq_theta_beta_zero() {
        let (model, theta, s, u) = linreg_fixture();
        let coupling = CouplingSpec::uniform(0.5, theta.len()).unwrap();
        let x = [0.25];
        let y = [0.7];
        let e = global_energy(&u, &theta, &s, &x, &y, &coupling, 0.0, &model).unwrap();
        assert_eq!(e, model.energy(theta.as_slice(), &x, s.as_slice()));
    }

    #[test]
    fn all_terms_zero() {
        let model = LinRegModel::new(10, false);
        let theta = ParamVector::zeros(model.param_layout().clone());
        let s = StateVector::zeros(model.state_layout().clone());
        let u = ControlVector::from_params(&theta);
        let coupling = CouplingSpec::uniform(1.0, theta.len()).unwrap();
        let e = global_energy(&u, &theta, &s, &[0.3], &[0.0], &coupling, 0.2, &model).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn linreg_hand_arithmetic() {
        // theta = e0, x = 0 so the prediction is 1; s = 2, y = 1, u = theta,
        // eps = 0.5, beta = 0.1: E = 0.5*(2-1)^2, C-term = 0.1*0.5*(2-1)^2.
        let (model, theta, s, u) = linreg_fixture();
        let coupling = CouplingSpec::uniform(0.5, theta.len()).unwrap();
        let e = global_energy(&u, &theta, &s, &[0.0], &[1.0], &coupling, 0.1, &model).unwrap();
        assert!((e - 0.55).abs() < 1e-15, "got {e}");
    }

    #[test]
    fn additive_in_its_three_terms() {
        let (model, mut theta, s, _) = linreg_fixture();
        theta.as_mut_slice()[3] = -0.4;
        let u = ControlVector::new(vec![0.1; theta.len()], theta.layout().clone()).unwrap();
        let coupling = CouplingSpec::uniform(0.2, theta.len()).unwrap();
        let (x, y) = ([0.5], [-0.3]);
        let beta = 0.7;
        let total = global_energy(&u, &theta, &s, &x, &y, &coupling, beta, &model).unwrap();
        let parts = coupling.energy(u.as_slice(), theta.as_slice()).unwrap()
            + model.energy(theta.as_slice(), &x, s.as_slice())
            + beta * model.cost(output_segment(&model, s.as_slice()), &y);
        assert_eq!(total, parts);
    }

    #[test]
    fn quadratic_coupling_is_symmetric_under_u_theta_swap() {
        let (model, mut theta, s, _) = linreg_fixture();
        theta.as_mut_slice()[2] = 0.8;
        let u = ControlVector::new(vec![-0.2; theta.len()], theta.layout().clone()).unwrap();
        let coupling = CouplingSpec::uniform(0.3, theta.len()).unwrap();
        let a = coupling.energy(u.as_slice(), theta.as_slice()).unwrap();
        let b = coupling.energy(theta.as_slice(), u.as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lift_identity_and_definition() {
        let (model, theta, s, _) = linreg_fixture();
        let (x, y) = ([0.0], [1.0]);
        let id = lift_nudge(&model, 0.0);
        assert_eq!(
            nudged_energy(&id, theta.as_slice(), &x, s.as_slice(), &y, 0.0),
            model.energy(theta.as_slice(), &x, s.as_slice())
        );
        let lifted = lift_nudge(&model, 0.3);
        let expect = model.energy(theta.as_slice(), &x, s.as_slice())
            + 0.3 * model.cost(output_segment(&model, s.as_slice()), &y);
        assert_eq!(
            nudged_energy(&lifted, theta.as_slice(), &x, s.as_slice(), &y, 0.0),
            expect
        );
    }

    #[test]
    fn lift_composes_additively() {
        let (model, theta, s, _) = linreg_fixture();
        let (x, y) = ([0.4], [0.9]);
        let once = lift_nudge(&model, 0.5);
        let twice = lift_nudge(&once, 0.25);
        let direct = lift_nudge(&model, 0.75);
        for beta in [0.0, 0.1, -0.2] {
            let a = nudged_energy(&twice, theta.as_slice(), &x, s.as_slice(), &y, beta);
            let b = nudged_energy(&direct, theta.as_slice(), &x, s.as_slice(), &y, beta);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn global_energy_rejects_shape_mismatch() {
        let (model, theta, s, u) = linreg_fixture();
        let coupling = CouplingSpec::uniform(0.5, theta.len()).unwrap();
        let err = global_energy(&u, &theta, &s, &[0.0, 0.0], &[1.0], &coupling, 0.1, &model);
        assert!(matches!(err, Err(crate::error::AeqError::Shape { .. })));
    }
}
