//! The three flat vector roles: parameters, state, and control knobs.

use std::sync::Arc;

use crate::core::layout::Layout;
use crate::error::{AeqError, Result};

fn check_finite(data: &[f64], what: &'static str) -> Result<()> {
    for &v in data {
        if !v.is_finite() {
            return Err(AeqError::NonFinite { what, value: v });
        }
    }
    Ok(())
}

fn check_len(data: &[f64], layout: &Layout, context: &'static str) -> Result<()> {
    if data.len() != layout.total_len() {
        return Err(AeqError::Shape {
            context,
            expected: layout.total_len(),
            actual: data.len(),
        });
    }
    Ok(())
}

macro_rules! flat_vector {
    ($(#[$doc:meta])* $name:ident, $ctx:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            data: Vec<f64>,
            layout: Arc<Layout>,
        }

        impl $name {
            pub fn new(data: Vec<f64>, layout: Arc<Layout>) -> Result<Self> {
                check_len(&data, &layout, $ctx)?;
                check_finite(&data, $ctx)?;
                Ok(Self { data, layout })
            }

            pub fn zeros(layout: Arc<Layout>) -> Self {
                Self {
                    data: vec![0.0; layout.total_len()],
                    layout,
                }
            }

            pub fn layout(&self) -> &Arc<Layout> {
                &self.layout
            }

            pub fn len(&self) -> usize {
                self.data.len()
            }

            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.data
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.data
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.data
            }

            pub fn segment(&self, name: &str) -> Option<&[f64]> {
                self.layout.by_name(name).map(|s| &self.data[s.range()])
            }
        }
    };
}

flat_vector!(
    /// Trainable parameters, packed per the model's parameter layout.
    ParamVector,
    "ParamVector"
);
flat_vector!(
    /// Physical state (one replica), packed per the model's state layout.
    StateVector,
    "StateVector"
);
flat_vector!(
    /// Control knobs; always shares the coupled parameter layout.
    ControlVector,
    "ControlVector"
);

impl ControlVector {
    /// Control knobs clamped onto an existing parameter value.
    pub fn from_params(theta: &ParamVector) -> Self {
        ControlVector {
            data: theta.as_slice().to_vec(),
            layout: theta.layout().clone(),
        }
    }
}

// Small dense helpers shared by the engines. Kept free of any layout
// knowledge on purpose.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l1_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn linf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `a += scale * b`
pub fn axpy(a: &mut [f64], scale: f64, b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += scale * y;
    }
}
