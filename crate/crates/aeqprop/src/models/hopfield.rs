//! Dense and convolutional Hopfield-like networks.
//!
//! The energy is
//! `sum_k 1/2 ||s_k||^2 + sum_k E_k(w_k, s_{k-1}, s_k) - sum_k b_k^T s_k`
//! with `s_0 = x`, where each interaction is either the dense bilinear
//! form `-s_{k-1}^T w_k s_k` or the convolutional form
//! `-s_k . pool(w_k * s_{k-1})` (valid 5x5 convolution, stride 1,
//! 2x2 average pooling - the index arithmetic that reproduces the
//! 1x28x28 -> 32x12x12 -> 64x4x4 layer chain). The cost is the squared
//! error `||s_N - y||^2` on the output layer. Every slice of the energy
//! in a single unit or weight is quadratic, which the exact coordinate
//! relaxation relies on.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::core::layout::Layout;
use crate::core::model::{EnergyModel, StateDomain};
use crate::core::vector::ParamVector;
use crate::error::{AeqError, Result};

/// One inter-layer interaction.
#[derive(Debug, Clone, PartialEq)]
pub enum Interaction {
    /// `-prev^T w next`, `w` stored row-major `rows x cols` with
    /// `rows = dim(prev)`, `cols = dim(next)`.
    Dense { rows: usize, cols: usize },
    /// `-next . pool(w * prev)` with a `kernel x kernel` valid
    /// convolution (stride 1) followed by `pool x pool` average pooling.
    Conv {
        in_ch: usize,
        in_h: usize,
        in_w: usize,
        out_ch: usize,
        kernel: usize,
        pool: usize,
    },
}

impl Interaction {
    pub fn weight_shape(&self) -> Vec<usize> {
        match self {
            Interaction::Dense { rows, cols } => vec![*rows, *cols],
            Interaction::Conv {
                in_ch,
                out_ch,
                kernel,
                ..
            } => vec![*out_ch, *in_ch, *kernel, *kernel],
        }
    }

    pub fn weight_len(&self) -> usize {
        self.weight_shape().iter().product()
    }

    /// Output layer shape produced by this interaction.
    pub fn out_shape(&self) -> Result<Vec<usize>> {
        match self {
            Interaction::Dense { cols, .. } => Ok(vec![*cols]),
            Interaction::Conv {
                in_h,
                in_w,
                out_ch,
                kernel,
                pool,
                ..
            } => {
                let ch = in_h.checked_sub(kernel - 1).ok_or(AeqError::Config(
                    "kernel larger than input".into(),
                ))?;
                let cw = in_w.checked_sub(kernel - 1).ok_or(AeqError::Config(
                    "kernel larger than input".into(),
                ))?;
                if ch % pool != 0 || cw % pool != 0 {
                    return Err(AeqError::Config(format!(
                        "convolution output {ch}x{cw} not divisible by pool {pool}"
                    )));
                }
                Ok(vec![*out_ch, ch / pool, cw / pool])
            }
        }
    }

    fn fan_in(&self) -> usize {
        match self {
            Interaction::Dense { rows, .. } => *rows,
            Interaction::Conv { in_ch, kernel, .. } => in_ch * kernel * kernel,
        }
    }

    fn fan_out(&self) -> usize {
        match self {
            Interaction::Dense { cols, .. } => *cols,
            Interaction::Conv { out_ch, kernel, .. } => out_ch * kernel * kernel,
        }
    }
}

// --- convolution kernels (plain loops; shapes are desk scale) ---

fn conv_valid(
    w: &[f64],
    input: &[f64],
    in_ch: usize,
    in_h: usize,
    in_w: usize,
    out_ch: usize,
    k: usize,
    out: &mut [f64],
) {
    let oh = in_h - k + 1;
    let ow = in_w - k + 1;
    out.fill(0.0);
    for o in 0..out_ch {
        for c in 0..in_ch {
            let wbase = ((o * in_ch) + c) * k * k;
            let ibase = c * in_h * in_w;
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = 0.0;
                    for a in 0..k {
                        let irow = ibase + (i + a) * in_w + j;
                        let wrow = wbase + a * k;
                        for b in 0..k {
                            acc += w[wrow + b] * input[irow + b];
                        }
                    }
                    out[(o * oh + i) * ow + j] += acc;
                }
            }
        }
    }
}

fn avg_pool(z: &[f64], ch: usize, h: usize, w: usize, p: usize, out: &mut [f64]) {
    let ph = h / p;
    let pw = w / p;
    let inv = 1.0 / (p * p) as f64;
    for c in 0..ch {
        for i in 0..ph {
            for j in 0..pw {
                let mut acc = 0.0;
                for a in 0..p {
                    let row = (c * h + i * p + a) * w + j * p;
                    for b in 0..p {
                        acc += z[row + b];
                    }
                }
                out[(c * ph + i) * pw + j] = acc * inv;
            }
        }
    }
}

/// Transpose of average pooling: spread each pooled value over its
/// window, divided by the window area.
fn pool_transpose(g: &[f64], ch: usize, h: usize, w: usize, p: usize, out: &mut [f64]) {
    let ph = h / p;
    let pw = w / p;
    let inv = 1.0 / (p * p) as f64;
    for c in 0..ch {
        for i in 0..ph {
            for j in 0..pw {
                let v = g[(c * ph + i) * pw + j] * inv;
                for a in 0..p {
                    let row = (c * h + i * p + a) * w + j * p;
                    for b in 0..p {
                        out[row + b] = v;
                    }
                }
            }
        }
    }
}

/// d(conv)/d(input) applied to an upstream gradient over the conv output.
fn conv_input_grad(
    w: &[f64],
    gout: &[f64],
    in_ch: usize,
    in_h: usize,
    in_w: usize,
    out_ch: usize,
    k: usize,
    out: &mut [f64],
) {
    let oh = in_h - k + 1;
    let ow = in_w - k + 1;
    out.fill(0.0);
    for o in 0..out_ch {
        for c in 0..in_ch {
            let wbase = ((o * in_ch) + c) * k * k;
            let obase = c * in_h * in_w;
            for i in 0..oh {
                for j in 0..ow {
                    let g = gout[(o * oh + i) * ow + j];
                    if g == 0.0 {
                        continue;
                    }
                    for a in 0..k {
                        let orow = obase + (i + a) * in_w + j;
                        let wrow = wbase + a * k;
                        for b in 0..k {
                            out[orow + b] += w[wrow + b] * g;
                        }
                    }
                }
            }
        }
    }
}

/// d(conv)/d(w) applied to an upstream gradient over the conv output.
fn conv_weight_grad(
    input: &[f64],
    gout: &[f64],
    in_ch: usize,
    in_h: usize,
    in_w: usize,
    out_ch: usize,
    k: usize,
    out: &mut [f64],
) {
    let oh = in_h - k + 1;
    let ow = in_w - k + 1;
    out.fill(0.0);
    for o in 0..out_ch {
        for c in 0..in_ch {
            let wbase = ((o * in_ch) + c) * k * k;
            let ibase = c * in_h * in_w;
            for a in 0..k {
                for b in 0..k {
                    let mut acc = 0.0;
                    for i in 0..oh {
                        let grow = (o * oh + i) * ow;
                        let irow = ibase + (i + a) * in_w + b;
                        for j in 0..ow {
                            acc += gout[grow + j] * input[irow + j];
                        }
                    }
                    out[wbase + a * k + b] += acc;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct HopfieldModel {
    /// Layer shapes including the input at index 0.
    shapes: Vec<Vec<usize>>,
    interactions: Vec<Interaction>,
    param_layout: Arc<Layout>,
    state_layout: Arc<Layout>,
    domain: StateDomain,
}

pub const HIDDEN_BOX: (f64, f64) = (0.0, 1.0);
pub const OUTPUT_BOX: (f64, f64) = (-1.0, 2.0);

impl HopfieldModel {
    pub fn new(
        shapes: Vec<Vec<usize>>,
        interactions: Vec<Interaction>,
        boxes: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if shapes.len() != interactions.len() + 1 {
            return Err(AeqError::Config(
                "need one interaction per consecutive layer pair".into(),
            ));
        }
        if boxes.len() != interactions.len() {
            return Err(AeqError::Config("need one box per state layer".into()));
        }
        for (i, inter) in interactions.iter().enumerate() {
            let expect_in: usize = shapes[i].iter().product();
            let got_in = match inter {
                Interaction::Dense { rows, .. } => *rows,
                Interaction::Conv { in_ch, in_h, in_w, .. } => in_ch * in_h * in_w,
            };
            if expect_in != got_in {
                return Err(AeqError::Shape {
                    context: "hopfield interaction fan-in",
                    expected: expect_in,
                    actual: got_in,
                });
            }
            let out = inter.out_shape()?;
            if out.iter().product::<usize>() != shapes[i + 1].iter().product::<usize>() {
                return Err(AeqError::Shape {
                    context: "hopfield interaction fan-out",
                    expected: shapes[i + 1].iter().product(),
                    actual: out.iter().product(),
                });
            }
        }

        let mut param_parts = Vec::new();
        let mut state_parts = Vec::new();
        for (i, inter) in interactions.iter().enumerate() {
            param_parts.push((format!("w{}", i + 1), inter.weight_shape()));
            param_parts.push((format!("b{}", i + 1), vec![layer_len(&shapes[i + 1])]));
            state_parts.push((format!("s{}", i + 1), shapes[i + 1].clone()));
        }
        Ok(HopfieldModel {
            domain: StateDomain::new(boxes)?,
            param_layout: Layout::new(param_parts),
            state_layout: Layout::new(state_parts),
            shapes,
            interactions,
        })
    }

    /// Fully dense network; hidden layers boxed to [0, 1], output to
    /// [-1, 2].
    pub fn dense(layer_dims: &[usize]) -> Result<Self> {
        let n = layer_dims.len() - 1;
        let shapes = layer_dims.iter().map(|&d| vec![d]).collect();
        let interactions = (0..n)
            .map(|i| Interaction::Dense {
                rows: layer_dims[i],
                cols: layer_dims[i + 1],
            })
            .collect();
        let mut boxes = vec![HIDDEN_BOX; n];
        boxes[n - 1] = OUTPUT_BOX;
        HopfieldModel::new(shapes, interactions, boxes)
    }

    /// The 1x28x28 -> 32x12x12 -> 64x4x4 -> 10 convolutional network.
    pub fn conv_mnist() -> Result<Self> {
        let shapes = vec![
            vec![1, 28, 28],
            vec![32, 12, 12],
            vec![64, 4, 4],
            vec![10],
        ];
        let interactions = vec![
            Interaction::Conv {
                in_ch: 1,
                in_h: 28,
                in_w: 28,
                out_ch: 32,
                kernel: 5,
                pool: 2,
            },
            Interaction::Conv {
                in_ch: 32,
                in_h: 12,
                in_w: 12,
                out_ch: 64,
                kernel: 5,
                pool: 2,
            },
            Interaction::Dense {
                rows: 64 * 4 * 4,
                cols: 10,
            },
        ];
        HopfieldModel::new(shapes, interactions, vec![HIDDEN_BOX, HIDDEN_BOX, OUTPUT_BOX])
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    pub fn n_layers(&self) -> usize {
        self.interactions.len()
    }

    fn layer_len_at(&self, layer: usize) -> usize {
        layer_len(&self.shapes[layer])
    }

    /// Values of network layer `layer` (0 is the input).
    fn layer_values<'a>(&self, layer: usize, x: &'a [f64], s: &'a [f64]) -> &'a [f64] {
        if layer == 0 {
            x
        } else {
            let seg = self.state_layout.segment(layer - 1);
            &s[seg.range()]
        }
    }

    /// Interaction energy `E_i(w, prev, next)`.
    fn interaction_energy(&self, i: usize, w: &[f64], prev: &[f64], next: &[f64]) -> f64 {
        match &self.interactions[i] {
            Interaction::Dense { rows, cols } => {
                let mut acc = 0.0;
                for r in 0..*rows {
                    let pr = prev[r];
                    if pr == 0.0 {
                        continue;
                    }
                    let row = &w[r * cols..(r + 1) * cols];
                    acc += pr * row.iter().zip(next).map(|(a, b)| a * b).sum::<f64>();
                }
                -acc
            }
            Interaction::Conv {
                in_ch,
                in_h,
                in_w,
                out_ch,
                kernel,
                pool,
            } => {
                let oh = in_h - kernel + 1;
                let ow = in_w - kernel + 1;
                let mut z = vec![0.0; out_ch * oh * ow];
                conv_valid(w, prev, *in_ch, *in_h, *in_w, *out_ch, *kernel, &mut z);
                let mut pooled = vec![0.0; out_ch * (oh / pool) * (ow / pool)];
                avg_pool(&z, *out_ch, oh, ow, *pool, &mut pooled);
                -pooled.iter().zip(next).map(|(a, b)| a * b).sum::<f64>()
            }
        }
    }

    /// `-d E_i / d next`: the drive this interaction puts on its output
    /// layer (dense: w^T prev; conv: pool(w * prev)).
    fn forward_drive(&self, i: usize, w: &[f64], prev: &[f64], out: &mut [f64]) {
        match &self.interactions[i] {
            Interaction::Dense { rows, cols } => {
                out.fill(0.0);
                for r in 0..*rows {
                    let pr = prev[r];
                    if pr == 0.0 {
                        continue;
                    }
                    let row = &w[r * cols..(r + 1) * cols];
                    for (o, wv) in out.iter_mut().zip(row) {
                        *o += pr * wv;
                    }
                }
            }
            Interaction::Conv {
                in_ch,
                in_h,
                in_w,
                out_ch,
                kernel,
                pool,
            } => {
                let oh = in_h - kernel + 1;
                let ow = in_w - kernel + 1;
                let mut z = vec![0.0; out_ch * oh * ow];
                conv_valid(w, prev, *in_ch, *in_h, *in_w, *out_ch, *kernel, &mut z);
                avg_pool(&z, *out_ch, oh, ow, *pool, out);
            }
        }
    }

    /// `-d E_i / d prev`: the drive on the input layer of interaction `i`
    /// (dense: w next; conv: conv^T(w, pool^T(next))).
    fn backward_drive(&self, i: usize, w: &[f64], next: &[f64], out: &mut [f64]) {
        match &self.interactions[i] {
            Interaction::Dense { rows, cols } => {
                for r in 0..*rows {
                    let row = &w[r * cols..(r + 1) * cols];
                    out[r] = row.iter().zip(next).map(|(a, b)| a * b).sum();
                }
            }
            Interaction::Conv {
                in_ch,
                in_h,
                in_w,
                out_ch,
                kernel,
                pool,
            } => {
                let oh = in_h - kernel + 1;
                let ow = in_w - kernel + 1;
                let mut spread = vec![0.0; out_ch * oh * ow];
                pool_transpose(next, *out_ch, oh, ow, *pool, &mut spread);
                conv_input_grad(w, &spread, *in_ch, *in_h, *in_w, *out_ch, *kernel, out);
            }
        }
    }
}

fn layer_len(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl EnergyModel for HopfieldModel {
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
        self.layer_len_at(0)
    }

    fn target_dim(&self) -> usize {
        self.layer_len_at(self.shapes.len() - 1)
    }

    fn energy(&self, theta: &[f64], x: &[f64], s: &[f64]) -> f64 {
        let mut e = 0.0;
        for (i, _) in self.interactions.iter().enumerate() {
            let prev = self.layer_values(i, x, s);
            let next = self.layer_values(i + 1, x, s);
            let w = &theta[self.param_layout.segment(2 * i).range()];
            let b = &theta[self.param_layout.segment(2 * i + 1).range()];
            e += 0.5 * next.iter().map(|v| v * v).sum::<f64>();
            e += self.interaction_energy(i, w, prev, next);
            e -= b.iter().zip(next).map(|(bv, sv)| bv * sv).sum::<f64>();
        }
        e
    }

    fn cost(&self, s_out: &[f64], y: &[f64]) -> f64 {
        s_out
            .iter()
            .zip(y)
            .map(|(s, t)| (s - t) * (s - t))
            .sum()
    }

    fn grad_s_energy(&self, theta: &[f64], x: &[f64], s: &[f64], out: &mut [f64]) {
        for k in 0..self.n_layers() {
            let seg = self.state_layout.segment(k);
            let mut layer_out = vec![0.0; seg.len()];
            self.grad_s_energy_layer(theta, x, s, k, &mut layer_out);
            out[seg.range()].copy_from_slice(&layer_out);
        }
    }

    fn grad_s_energy_layer(&self, theta: &[f64], x: &[f64], s: &[f64], k: usize, out: &mut [f64]) {
        let seg = self.state_layout.segment(k);
        let sk = &s[seg.range()];
        // quadratic confinement
        out.copy_from_slice(sk);
        // incoming interaction k
        let prev = self.layer_values(k, x, s);
        let w = &theta[self.param_layout.segment(2 * k).range()];
        let b = &theta[self.param_layout.segment(2 * k + 1).range()];
        let mut drive = vec![0.0; seg.len()];
        self.forward_drive(k, w, prev, &mut drive);
        for ((o, d), bv) in out.iter_mut().zip(&drive).zip(b) {
            *o -= d + bv;
        }
        // outgoing interaction k+1, when present
        if k + 1 < self.n_layers() {
            let next = self.layer_values(k + 2, x, s);
            let w_up = &theta[self.param_layout.segment(2 * (k + 1)).range()];
            let mut back = vec![0.0; seg.len()];
            self.backward_drive(k + 1, w_up, next, &mut back);
            for (o, d) in out.iter_mut().zip(&back) {
                *o -= d;
            }
        }
    }

    fn grad_theta_energy(&self, theta: &[f64], x: &[f64], s: &[f64], out: &mut [f64]) {
        let _ = theta; // E is linear in theta; the gradient ignores it
        for (i, inter) in self.interactions.iter().enumerate() {
            let prev = self.layer_values(i, x, s);
            let next = self.layer_values(i + 1, x, s);
            let wseg = self.param_layout.segment(2 * i);
            let bseg = self.param_layout.segment(2 * i + 1);
            let gw = &mut out[wseg.range()];
            match inter {
                Interaction::Dense { rows, cols } => {
                    for r in 0..*rows {
                        let pr = prev[r];
                        let row = &mut gw[r * cols..(r + 1) * cols];
                        for (g, nv) in row.iter_mut().zip(next) {
                            *g = -pr * nv;
                        }
                    }
                }
                Interaction::Conv {
                    in_ch,
                    in_h,
                    in_w,
                    out_ch,
                    kernel,
                    pool,
                } => {
                    let oh = in_h - kernel + 1;
                    let ow = in_w - kernel + 1;
                    let mut spread = vec![0.0; out_ch * oh * ow];
                    pool_transpose(next, *out_ch, oh, ow, *pool, &mut spread);
                    conv_weight_grad(prev, &spread, *in_ch, *in_h, *in_w, *out_ch, *kernel, gw);
                    for g in gw.iter_mut() {
                        *g = -*g;
                    }
                }
            }
            for (g, nv) in out[bseg.range()].iter_mut().zip(next) {
                *g = -nv;
            }
        }
    }

    fn grad_s_cost(&self, s_out: &[f64], y: &[f64], out: &mut [f64]) {
        for ((o, s), t) in out.iter_mut().zip(s_out).zip(y) {
            *o = 2.0 * (s - t);
        }
    }

    fn exact_coordinate(&self) -> bool {
        true
    }

    fn state_hess(&self, _k: usize) -> f64 {
        1.0
    }

    fn cost_hess(&self) -> f64 {
        2.0
    }

    fn param_hess(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn energy_linear_in_params(&self) -> bool {
        true
    }
}

/// Weight initialization: dense interactions draw from half the
/// xavier-uniform scheme, convolutional ones from half the
/// kaiming-normal scheme; biases start at zero. `gains` has one entry
/// per interaction.
pub fn init_params(model: &HopfieldModel, gains: &[f64], seed: u64) -> Result<ParamVector> {
    if gains.len() != model.interactions().len() {
        return Err(AeqError::Shape {
            context: "init gains",
            expected: model.interactions().len(),
            actual: gains.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = ParamVector::zeros(model.param_layout().clone());
    for (i, inter) in model.interactions().iter().enumerate() {
        let seg = model.param_layout().segment(2 * i);
        let data = &mut theta.as_mut_slice()[seg.range()];
        match inter {
            Interaction::Dense { .. } => {
                let c = gains[i] / 2.0
                    * (6.0 / (inter.fan_in() + inter.fan_out()) as f64).sqrt();
                if c > 0.0 {
                    let dist = Uniform::new_inclusive(-c, c).expect("valid range");
                    for v in data.iter_mut() {
                        *v = dist.sample(&mut rng);
                    }
                }
            }
            Interaction::Conv { .. } => {
                let c = gains[i] / 2.0 * (1.0 / inter.fan_in() as f64).sqrt();
                if c > 0.0 {
                    let dist = Normal::new(0.0, c).expect("valid std");
                    for v in data.iter_mut() {
                        *v = dist.sample(&mut rng);
                    }
                }
            }
        }
    }
    Ok(theta)
}

/// Hyperparameter presets for the MNIST-class experiments. Learning
/// rates are per segment; the coupling strength is `lr / beta`.
#[derive(Debug, Clone)]
pub struct HopfieldPreset {
    pub gains: Vec<f64>,
    pub beta: f64,
    pub batch_size: usize,
    /// (segment name, learning rate) for every weight and bias segment.
    pub learning_rates: Vec<(String, f64)>,
    pub lr_decay: f64,
    pub xi0: f64,
    pub max_iters: usize,
}

impl HopfieldPreset {
    /// Coupling epsilons `lr_k / beta`, per segment.
    pub fn epsilon_pairs(&self) -> Vec<(String, f64)> {
        self.learning_rates
            .iter()
            .map(|(n, lr)| (n.clone(), lr / self.beta))
            .collect()
    }
}

/// Dense 784-2048-10 network preset; `hidden` overrides the hidden
/// width for desk-scale runs.
pub fn dense_mnist_preset(hidden: usize) -> (HopfieldModel, HopfieldPreset) {
    let model = HopfieldModel::dense(&[28 * 28, hidden, 10]).expect("static shapes");
    let preset = HopfieldPreset {
        gains: vec![0.8, 1.2],
        beta: 0.5,
        batch_size: 32,
        learning_rates: vec![
            ("w1".into(), 0.1),
            ("w2".into(), 0.05),
            ("b1".into(), 0.02),
            ("b2".into(), 0.01),
        ],
        lr_decay: 0.99,
        xi0: 1e-3,
        max_iters: 100,
    };
    (model, preset)
}

pub fn conv_mnist_preset() -> (HopfieldModel, HopfieldPreset) {
    let model = HopfieldModel::conv_mnist().expect("static shapes");
    let preset = HopfieldPreset {
        gains: vec![0.6, 0.6, 1.5],
        beta: 0.2,
        batch_size: 16,
        learning_rates: vec![
            ("w1".into(), 0.128),
            ("w2".into(), 0.032),
            ("w3".into(), 0.008),
            ("b1".into(), 0.032),
            ("b2".into(), 0.008),
            ("b3".into(), 0.002),
        ],
        lr_decay: 0.99,
        xi0: 1e-3,
        max_iters: 100,
    };
    (model, preset)
}
