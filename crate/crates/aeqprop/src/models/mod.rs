//! Concrete energy models: Fourier-feature linear regression and
//! Hopfield-like networks, plus the synthetic ground-truth generator.

pub mod features;
pub mod hopfield;
pub mod linreg;

pub use features::{fourier_features, legendre_eval, sample_target, target_eval, LegendreTarget};
pub use hopfield::{
    conv_mnist_preset, dense_mnist_preset, init_params, HopfieldModel, HopfieldPreset,
    Interaction, HIDDEN_BOX, OUTPUT_BOX,
};
pub use linreg::LinRegModel;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::model::{output_segment, EnergyModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn central_diff(f: impl Fn(&[f64]) -> f64, point: &[f64], h: f64) -> Vec<f64> {
        let mut g = Vec::with_capacity(point.len());
        let mut p = point.to_vec();
        for i in 0..point.len() {
            p[i] = point[i] + h;
            let fp = f(&p);
            p[i] = point[i] - h;
            let fm = f(&p);
            p[i] = point[i];
            g.push((fp - fm) / (2.0 * h));
        }
        g
    }

    fn assert_close(analytic: &[f64], fd: &[f64], tol: f64, what: &str) {
        for (i, (a, f)) in analytic.iter().zip(fd).enumerate() {
            let scale = a.abs().max(f.abs()).max(1.0);
            assert!(
                (a - f).abs() <= tol * scale,
                "{what}[{i}]: analytic {a} vs fd {f}"
            );
        }
    }

    /// Spec invariant: analytic gradients match central differences to
    /// relative error < 1e-5 at random interior points, for every model.
    fn grad_check(model: &dyn EnergyModel, rng: &mut ChaCha8Rng, points: usize) {
        let sd = model.state_layout().total_len();
        let pd = model.param_layout().total_len();
        for _ in 0..points {
            let theta: Vec<f64> = (0..pd).map(|_| rng.random_range(-0.5..0.5)).collect();
            let x: Vec<f64> = (0..model.input_dim())
                .map(|_| rng.random_range(-0.9..0.9))
                .collect();
            let y: Vec<f64> = (0..model.target_dim())
                .map(|_| rng.random_range(-0.9..0.9))
                .collect();
            // interior points: stay away from the box walls
            let mut s = vec![0.0; sd];
            for (k, seg) in model.state_layout().segments().iter().enumerate() {
                let (p, q) = model.state_domain().segment_bounds(k);
                let (lo, hi) = (p.max(-1.0) + 0.2, q.min(2.0) - 0.2);
                for v in &mut s[seg.range()] {
                    *v = rng.random_range(lo..hi);
                }
            }

            let mut gs = vec![0.0; sd];
            model.grad_s_energy(&theta, &x, &s, &mut gs);
            let fd_s = central_diff(|sv| model.energy(&theta, &x, sv), &s, 1e-5);
            assert_close(&gs, &fd_s, 1e-5, "dE/ds");

            let mut gt = vec![0.0; pd];
            model.grad_theta_energy(&theta, &x, &s, &mut gt);
            let fd_t = central_diff(|tv| model.energy(tv, &x, &s), &theta, 1e-5);
            assert_close(&gt, &fd_t, 1e-5, "dE/dtheta");

            let s_out = output_segment(model, &s).to_vec();
            let mut gc = vec![0.0; s_out.len()];
            model.grad_s_cost(&s_out, &y, &mut gc);
            let fd_c = central_diff(|sv| model.cost(sv, &y), &s_out, 1e-5);
            assert_close(&gc, &fd_c, 1e-5, "dC/ds");
        }
    }

    #[test]
    fn linreg_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        grad_check(&LinRegModel::new(10, false), &mut rng, 50);
        grad_check(&LinRegModel::new(4, true), &mut rng, 50);
    }

    #[test]
    fn dense_hopfield_gradients_match_finite_differences() {
        let model = HopfieldModel::dense(&[3, 5, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        grad_check(&model, &mut rng, 100);
    }

    #[test]
    fn conv_hopfield_gradients_match_finite_differences() {
        let model = HopfieldModel::new(
            vec![vec![2, 8, 8], vec![3, 2, 2], vec![4]],
            vec![
                Interaction::Conv {
                    in_ch: 2,
                    in_h: 8,
                    in_w: 8,
                    out_ch: 3,
                    kernel: 5,
                    pool: 2,
                },
                Interaction::Dense { rows: 12, cols: 4 },
            ],
            vec![HIDDEN_BOX, OUTPUT_BOX],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        grad_check(&model, &mut rng, 25);
    }

    #[test]
    fn zero_parameter_energy_is_pure_confinement() {
        let model = HopfieldModel::dense(&[2, 3, 2]).unwrap();
        let theta = vec![0.0; model.param_layout().total_len()];
        let s = vec![0.5, -0.25, 1.0, 0.75, 0.1];
        let x = vec![0.9, 0.2];
        let expect: f64 = s.iter().map(|v| 0.5 * v * v).sum();
        assert_eq!(model.energy(&theta, &x, &s), expect);
    }

    #[test]
    fn single_dense_layer_hand_arithmetic() {
        // x = (1, 0), w = [[2], [0]] mapping 2 -> 1, b = 0, s1 = (3):
        // E = 0.5 * 9 - 3 * 2 * 1 = -1.5
        let model = HopfieldModel::new(
            vec![vec![2], vec![1]],
            vec![Interaction::Dense { rows: 2, cols: 1 }],
            vec![OUTPUT_BOX],
        )
        .unwrap();
        let mut theta = vec![0.0; model.param_layout().total_len()];
        theta[0] = 2.0; // w[0][0]
        let e = model.energy(&theta, &[1.0, 0.0], &[3.0]);
        assert_eq!(e, -1.5);
    }

    #[test]
    fn conv_shapes_chain_per_table() {
        let model = HopfieldModel::conv_mnist().unwrap();
        let st = model.state_layout();
        assert_eq!(st.segment(0).shape, vec![32, 12, 12]);
        assert_eq!(st.segment(1).shape, vec![64, 4, 4]);
        assert_eq!(st.segment(2).shape, vec![10]);
        let pl = model.param_layout();
        assert_eq!(pl.by_name("w1").unwrap().shape, vec![32, 1, 5, 5]);
        assert_eq!(pl.by_name("w2").unwrap().shape, vec![64, 32, 5, 5]);
        assert_eq!(pl.by_name("w3").unwrap().shape, vec![64 * 4 * 4, 10]);
    }

    #[test]
    fn every_scalar_slice_is_an_exact_parabola() {
        // fit a parabola through three probes of the energy in one unit;
        // the quadratic coefficient must equal half the reported second
        // derivative, to machine precision
        let model = HopfieldModel::dense(&[2, 3, 2]).unwrap();
        let theta = init_params(&model, &[0.8, 1.2], 21).unwrap();
        let x = [0.3, 0.8];
        let s = vec![0.2, 0.6, 0.4, 0.9, 0.1];
        let probe = |k: usize, j: usize, dz: f64| {
            let mut sv = s.clone();
            let off = model.state_layout().segment(k).offset + j;
            sv[off] += dz;
            model.energy(theta.as_slice(), &x, &sv)
        };
        for k in 0..2 {
            for j in 0..model.state_layout().segment(k).len() {
                let h = 0.5;
                let (em, e0, ep) = (probe(k, j, -h), probe(k, j, 0.0), probe(k, j, h));
                let a = (ep - 2.0 * e0 + em) / (2.0 * h * h);
                assert!(
                    (a - model.state_hess(k) / 2.0).abs() < 1e-12,
                    "layer {k} unit {j}: fitted a = {a}"
                );
                assert!(a > 0.0);
            }
        }
    }

    #[test]
    fn init_zero_gain_gives_zero_weights() {
        let model = HopfieldModel::dense(&[4, 3, 2]).unwrap();
        let theta = init_params(&model, &[0.0, 0.0], 1).unwrap();
        assert!(theta.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_dense_respects_bound_and_centering() {
        let model = HopfieldModel::dense(&[784, 2048, 10]).unwrap();
        let theta = init_params(&model, &[0.8, 1.2], 7).unwrap();
        let w1 = theta.segment("w1").unwrap();
        let c = 0.4 * (6.0 / (784.0 + 2048.0)).sqrt();
        let max = w1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max <= c, "max |w| = {max} > c = {c}");
        let mean = w1.iter().sum::<f64>() / w1.len() as f64;
        assert!(mean.abs() < 1e-2 * c.max(1e-3), "mean {mean}");
        assert!(theta.segment("b1").unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_conv_normal_scale() {
        let (model, _) = conv_mnist_preset();
        let theta = init_params(&model, &[0.6, 0.6, 1.5], 3).unwrap();
        let w2 = theta.segment("w2").unwrap();
        let c = 0.3 * (1.0f64 / (32.0 * 25.0)).sqrt();
        let var = w2.iter().map(|v| v * v).sum::<f64>() / w2.len() as f64;
        let std = var.sqrt();
        assert!(
            (std - c).abs() < 0.05 * c,
            "sample std {std} vs target {c}"
        );
    }

    #[test]
    fn presets_carry_the_published_hyperparameters() {
        let (_, dense) = dense_mnist_preset(2048);
        assert_eq!(dense.gains, vec![0.8, 1.2]);
        assert_eq!(dense.beta, 0.5);
        assert_eq!(dense.batch_size, 32);
        assert_eq!(dense.lr_decay, 0.99);
        // epsilon = lr / beta
        let eps = dense.epsilon_pairs();
        assert_eq!(eps[0], ("w1".to_string(), 0.2));
        assert_eq!(eps[2], ("b1".to_string(), 0.04));

        let (_, conv) = conv_mnist_preset();
        assert_eq!(conv.gains, vec![0.6, 0.6, 1.5]);
        assert_eq!(conv.beta, 0.2);
        assert_eq!(conv.batch_size, 16);
    }
}
