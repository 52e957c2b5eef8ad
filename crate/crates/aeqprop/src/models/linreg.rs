//! Fourier-feature linear regression as an energy model.
//!
//! `E(theta, x, s) = 1/2 (s - sum_i theta_i phi_i(x))^2`, with scalar
//! state `s`; the cost is `C(s, y) = 1/2 (s - y)^2`. In the free phase
//! the system relaxes to `s = sum_i theta_i phi_i(x)`. The optional
//! `|s|^2` stabilizer keeps the energy bounded below under strong
//! negative nudging.

use std::sync::Arc;

use crate::core::layout::Layout;
use crate::core::model::{EnergyModel, StateDomain};
use crate::models::features::fourier_features;

#[derive(Debug, Clone)]
pub struct LinRegModel {
    n_freq: usize,
    regularize_state: bool,
    param_layout: Arc<Layout>,
    state_layout: Arc<Layout>,
    domain: StateDomain,
}

impl LinRegModel {
    pub fn new(n_freq: usize, regularize_state: bool) -> Self {
        let n_features = 2 * n_freq + 1;
        LinRegModel {
            n_freq,
            regularize_state,
            param_layout: Layout::new([("theta".to_string(), vec![n_features])]),
            state_layout: Layout::scalar("s"),
            domain: StateDomain::unbounded(1),
        }
    }

    pub fn n_features(&self) -> usize {
        2 * self.n_freq + 1
    }

    pub fn regularized(&self) -> bool {
        self.regularize_state
    }

    pub fn features(&self, x: f64) -> Vec<f64> {
        // The training data generator keeps x inside [-1, 1].
        fourier_features(x, self.n_freq).expect("input outside [-1, 1]")
    }

    fn prediction(&self, theta: &[f64], x: &[f64]) -> f64 {
        let phi = self.features(x[0]);
        theta.iter().zip(&phi).map(|(t, p)| t * p).sum()
    }

    /// Closed-form free equilibrium `argmin_s E`: the prediction itself,
    /// shrunk to `p/3` when the stabilizer is on.
    pub fn free_equilibrium(&self, theta: &[f64], x: &[f64]) -> f64 {
        let p = self.prediction(theta, x);
        if self.regularize_state {
            p / 3.0
        } else {
            p
        }
    }

    /// d/d(theta) of the loss `C(s(theta, x), y)` for the plain model;
    /// the SGD baseline uses this closed form.
    pub fn loss_grad_closed_form(&self, theta: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) {
        let phi = self.features(x[0]);
        let s = self.free_equilibrium(theta, x);
        let resid = s - y[0];
        // ds/dtheta_i = phi_i (or phi_i/3 with the stabilizer)
        let shrink = if self.regularize_state { 1.0 / 3.0 } else { 1.0 };
        for (o, p) in out.iter_mut().zip(&phi) {
            *o = resid * p * shrink;
        }
    }
}

impl EnergyModel for LinRegModel {
    fn param_layout(&self) -> &Arc<Layout> {
        &self.param_layout
    }

    fn state_layout(&self) -> &Arc<Layout> {
        &self.state_layout
    }

    fn state_domain(&self) -> &StateDomain {
        &self.domain
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn target_dim(&self) -> usize {
        1
    }

    fn energy(&self, theta: &[f64], x: &[f64], s: &[f64]) -> f64 {
        let r = s[0] - self.prediction(theta, x);
        let mut e = 0.5 * r * r;
        if self.regularize_state {
            e += s[0] * s[0];
        }
        e
    }

    fn cost(&self, s_out: &[f64], y: &[f64]) -> f64 {
        let d = s_out[0] - y[0];
        0.5 * d * d
    }

    fn grad_s_energy(&self, theta: &[f64], x: &[f64], s: &[f64], out: &mut [f64]) {
        out[0] = s[0] - self.prediction(theta, x);
        if self.regularize_state {
            out[0] += 2.0 * s[0];
        }
    }

    fn grad_theta_energy(&self, theta: &[f64], x: &[f64], s: &[f64], out: &mut [f64]) {
        let phi = self.features(x[0]);
        let r = s[0] - self.prediction(theta, x);
        for (o, p) in out.iter_mut().zip(&phi) {
            *o = -r * p;
        }
    }

    fn grad_s_cost(&self, s_out: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = s_out[0] - y[0];
    }

    fn exact_coordinate(&self) -> bool {
        true
    }

    fn state_hess(&self, _k: usize) -> f64 {
        if self.regularize_state {
            3.0
        } else {
            1.0
        }
    }

    fn cost_hess(&self) -> f64 {
        1.0
    }

    fn param_hess(&self, x: &[f64], out: &mut [f64]) {
        let phi = self.features(x[0]);
        for (o, p) in out.iter_mut().zip(&phi) {
            *o = p * p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_equilibrium_matches_brute_force_scan() {
        let model = LinRegModel::new(3, false);
        let theta: Vec<f64> = (0..7).map(|i| 0.1 * (i as f64) - 0.3).collect();
        let x = [0.42];
        let exact = model.free_equilibrium(&theta, &x);
        let mut best = (f64::INFINITY, 0.0);
        let mut z = -5.0;
        while z <= 5.0 {
            let e = model.energy(&theta, &x, &[z]);
            if e < best.0 {
                best = (e, z);
            }
            z += 1e-4;
        }
        assert!((best.1 - exact).abs() < 2e-4, "scan {} vs exact {}", best.1, exact);
    }

    #[test]
    fn regularized_minimizer_is_one_third_of_prediction() {
        let model = LinRegModel::new(3, true);
        let theta: Vec<f64> = (0..7).map(|i| 0.05 * (i as f64 + 1.0)).collect();
        let x = [-0.3];
        let p: f64 = theta
            .iter()
            .zip(model.features(x[0]).iter())
            .map(|(t, f)| t * f)
            .sum();
        let exact = model.free_equilibrium(&theta, &x);
        assert!((exact - p / 3.0).abs() < 1e-15);
        let mut best = (f64::INFINITY, 0.0);
        let mut z = -5.0;
        while z <= 5.0 {
            let e = model.energy(&theta, &x, &[z]);
            if e < best.0 {
                best = (e, z);
            }
            z += 1e-4;
        }
        assert!((best.1 - exact).abs() < 2e-4);
    }
}
