//! Fourier feature map and the random Legendre-polynomial ground truth
//! for the synthetic regression task.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{AeqError, Result};

/// `(1, sin(pi z), cos(pi z), sin(2 pi z), cos(2 pi z), ...)` up to
/// frequency `n_freq`, so `2 n_freq + 1` features on `z in [-1, 1]`.
pub fn fourier_features(z: f64, n_freq: usize) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&z) {
        return Err(AeqError::Domain {
            value: z,
            lo: -1.0,
            hi: 1.0,
        });
    }
    let mut phi = Vec::with_capacity(2 * n_freq + 1);
    phi.push(1.0);
    for i in 1..=n_freq {
        let arg = i as f64 * std::f64::consts::PI * z;
        phi.push(arg.sin());
        phi.push(arg.cos());
    }
    Ok(phi)
}

/// Legendre polynomial values `L_0(z) .. L_degree(z)` by the three-term
/// recurrence `(i+1) L_{i+1} = (2i+1) z L_i - i L_{i-1}`.
pub fn legendre_eval(z: f64, degree: usize) -> Vec<f64> {
    let mut vals = Vec::with_capacity(degree + 1);
    vals.push(1.0);
    if degree == 0 {
        return vals;
    }
    vals.push(z);
    for i in 1..degree {
        let i_f = i as f64;
        let next = ((2.0 * i_f + 1.0) * z * vals[i] - i_f * vals[i - 1]) / (i_f + 1.0);
        vals.push(next);
    }
    vals
}

/// Random polynomial `f(z) = sum_i w_i L_i(z)` with i.i.d. standard
/// normal coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreTarget {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl LegendreTarget {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty());
        LegendreTarget {
            degree: coeffs.len() - 1,
            coeffs,
        }
    }
}

/// Draw a degree-`degree` target from the seeded generator.
pub fn sample_target(seed: u64, degree: usize) -> LegendreTarget {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..=degree)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    LegendreTarget {
        degree,
        coeffs,
    }
}

pub fn target_eval(target: &LegendreTarget, z: f64) -> f64 {
    let basis = legendre_eval(z, target.degree);
    basis
        .iter()
        .zip(&target.coeffs)
        .map(|(l, w)| l * w)
        .sum()
}
