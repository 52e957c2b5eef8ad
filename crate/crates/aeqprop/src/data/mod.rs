//! Dataset ingestion and synthetic sampling.

pub mod idx;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::core::batch::Batch;
use crate::error::{AeqError, Result};
use crate::models::features::{target_eval, LegendreTarget};
pub use idx::{encode_idx, parse_idx, IdxTensor, IMAGE_MAGIC, LABEL_MAGIC};

/// Images in `[0, 1]` with integer labels and their one-hot codes.
#[derive(Debug, Clone)]
pub struct LabeledImageSet {
    pub images: Vec<f64>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
    pub n_classes: usize,
}

impl LabeledImageSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image_dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn one_hot(&self, i: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.n_classes];
        y[self.labels[i] as usize] = 1.0;
        y
    }

    pub fn from_idx(images: &IdxTensor, labels: &IdxTensor) -> Result<Self> {
        if images.magic != IMAGE_MAGIC || images.dims.len() != 3 {
            return Err(AeqError::IdxParse {
                offset: 0,
                reason: format!("expected image tensor, magic 0x{:08x}", images.magic),
            });
        }
        if labels.magic != LABEL_MAGIC || labels.dims.len() != 1 {
            return Err(AeqError::IdxParse {
                offset: 0,
                reason: format!("expected label tensor, magic 0x{:08x}", labels.magic),
            });
        }
        if images.dims[0] != labels.dims[0] {
            return Err(AeqError::Shape {
                context: "image/label counts",
                expected: images.dims[0],
                actual: labels.dims[0],
            });
        }
        Ok(LabeledImageSet {
            images: images.data.iter().map(|&b| b as f64 / 255.0).collect(),
            labels: labels.data.clone(),
            rows: images.dims[1],
            cols: images.dims[2],
            n_classes: 10,
        })
    }
}

/// Standard IDX file names for one split, with optional `.gz` variants.
fn split_files(dir: &Path, train: bool) -> Option<(PathBuf, PathBuf)> {
    let (img, lab) = if train {
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
    } else {
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")
    };
    let pick = |stem: &str| -> Option<PathBuf> {
        for cand in [dir.join(stem), dir.join(format!("{stem}.gz"))] {
            if cand.is_file() {
                return Some(cand);
            }
        }
        None
    };
    Some((pick(img)?, pick(lab)?))
}

/// Whether the split's files are present under `dir`.
pub fn split_available(dir: &Path, train: bool) -> bool {
    split_files(dir, train).is_some()
}

/// Load one MNIST-format split from a directory.
pub fn load_idx_split(dir: &Path, train: bool) -> Result<LabeledImageSet> {
    let (img_path, lab_path) = split_files(dir, train).ok_or_else(|| AeqError::Io {
        path: dir.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "IDX files not found"),
    })?;
    let read = |p: &Path| -> Result<Vec<u8>> {
        std::fs::read(p).map_err(|e| AeqError::Io {
            path: p.display().to_string(),
            source: e,
        })
    };
    let images = parse_idx(&read(&img_path)?)?;
    let labels = parse_idx(&read(&lab_path)?)?;
    LabeledImageSet::from_idx(&images, &labels)
}

/// Procedurally generated stand-in for MNIST-class data: ten smooth
/// class prototypes plus pixel noise, clamped to [0, 1]. Used by tests
/// and examples when no real dataset is on disk.
pub fn synthetic_class_images(n: usize, rows: usize, cols: usize, seed: u64) -> LabeledImageSet {
    let dim = rows * cols;
    let mut proto_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prototypes = vec![0.0; 10 * dim];
    for c in 0..10 {
        // a handful of soft bumps per class
        for _ in 0..4 {
            let cy = proto_rng.random_range(0.15..0.85) * rows as f64;
            let cx = proto_rng.random_range(0.15..0.85) * cols as f64;
            let rad = proto_rng.random_range(2.0..4.5);
            for r in 0..rows {
                for col in 0..cols {
                    let d2 = (r as f64 - cy).powi(2) + (col as f64 - cx).powi(2);
                    prototypes[c * dim + r * cols + col] += (-d2 / (2.0 * rad * rad)).exp();
                }
            }
        }
        for v in &mut prototypes[c * dim..(c + 1) * dim] {
            *v = v.min(1.0);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut images = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = (i % 10) as u8;
        labels.push(c);
        let base = &prototypes[c as usize * dim..(c as usize + 1) * dim];
        for &p in base {
            let noise: f64 = StandardNormal.sample(&mut rng);
            images.push((p + 0.12 * noise).clamp(0.0, 1.0));
        }
    }
    LabeledImageSet {
        images,
        labels,
        rows,
        cols,
        n_classes: 10,
    }
}

/// Generic in-memory dataset of (x, y) pairs, flat storage.
#[derive(Debug, Clone)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
    x_dim: usize,
    y_dim: usize,
    labels: Option<Vec<u8>>,
}

impl Dataset {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, x_dim: usize, y_dim: usize) -> Self {
        assert_eq!(xs.len() % x_dim, 0);
        assert_eq!(ys.len() % y_dim, 0);
        assert_eq!(xs.len() / x_dim, ys.len() / y_dim);
        Dataset {
            xs,
            ys,
            x_dim,
            y_dim,
            labels: None,
        }
    }

    pub fn from_labeled(set: &LabeledImageSet) -> Self {
        let n = set.len();
        let mut ys = Vec::with_capacity(n * set.n_classes);
        for i in 0..n {
            ys.extend_from_slice(&set.one_hot(i));
        }
        Dataset {
            xs: set.images.clone(),
            ys,
            x_dim: set.image_dim(),
            y_dim: set.n_classes,
            labels: Some(set.labels.clone()),
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len() / self.x_dim
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.x_dim..(i + 1) * self.x_dim]
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.ys[i * self.y_dim..(i + 1) * self.y_dim]
    }

    pub fn label(&self, i: usize) -> Option<u8> {
        self.labels.as_ref().map(|l| l[i])
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    /// Epoch-seeded shuffled batches of indices; the last partial batch
    /// is kept.
    pub fn batches(&self, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
        assert!(batch_size >= 1);
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        idx.shuffle(&mut rng);
        idx.chunks(batch_size).map(|c| c.to_vec()).collect()
    }

    pub fn batch(&self, indices: &[usize]) -> Batch {
        let mut xs = Vec::with_capacity(indices.len() * self.x_dim);
        let mut ys = Vec::with_capacity(indices.len() * self.y_dim);
        for &i in indices {
            xs.extend_from_slice(self.x(i));
            ys.extend_from_slice(self.y(i));
        }
        Batch::new(xs, ys, self.x_dim, self.y_dim)
    }

    /// Seeded sample of `n` items without replacement.
    pub fn subset(&self, n: usize, seed: u64) -> Dataset {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        idx.truncate(n.min(self.len()));
        let mut xs = Vec::with_capacity(idx.len() * self.x_dim);
        let mut ys = Vec::with_capacity(idx.len() * self.y_dim);
        let mut labels = self.labels.as_ref().map(|_| Vec::with_capacity(idx.len()));
        for &i in &idx {
            xs.extend_from_slice(self.x(i));
            ys.extend_from_slice(self.y(i));
            if let (Some(out), Some(src)) = (labels.as_mut(), self.labels.as_ref()) {
                out.push(src[i]);
            }
        }
        Dataset {
            xs,
            ys,
            x_dim: self.x_dim,
            y_dim: self.y_dim,
            labels,
        }
    }
}

/// Seeded stream of regression samples `(z, f(z))`, `z ~ U[-1, 1]`.
#[derive(Debug, Clone)]
pub struct RegressionStream {
    pub target: LegendreTarget,
    pub seed: u64,
}

impl RegressionStream {
    pub fn new(target: LegendreTarget, seed: u64) -> Self {
        RegressionStream { target, seed }
    }

    /// Draw the first `n` samples as a dataset (deterministic in seed).
    pub fn materialize(&self, n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let z = rng.random_range(-1.0..=1.0);
            xs.push(z);
            ys.push(target_eval(&self.target, z));
        }
        Dataset::new(xs, ys, 1, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::features::sample_target;
    use std::collections::BTreeMap;

    fn toy_set() -> Dataset {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        Dataset::new(xs, ys, 1, 1)
    }

    #[test]
    fn single_batch_is_identity_multiset() {
        let d = toy_set();
        let batches = d.batches(10, 3, 0);
        assert_eq!(batches.len(), 1);
        let mut got = batches[0].clone();
        got.sort_unstable();
        assert_eq!(got, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_and_epoch_give_identical_order() {
        let d = toy_set();
        assert_eq!(d.batches(3, 7, 2), d.batches(3, 7, 2));
        assert_ne!(d.batches(3, 7, 2), d.batches(3, 7, 3));
    }

    #[test]
    fn emitted_samples_form_the_dataset_multiset() {
        let d = toy_set();
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for b in d.batches(3, 11, 5) {
            for i in b {
                *counts.entry(i).or_default() += 1;
            }
        }
        assert_eq!(counts.len(), 10);
        assert!(counts.values().all(|&c| c == 1));
    }

    #[test]
    fn partial_batch_is_kept() {
        let d = toy_set();
        let batches = d.batches(4, 0, 0);
        assert_eq!(batches.len(), 3);
        assert_eq!(batches[2].len(), 2);
    }

    #[test]
    fn one_hot_rows_sum_to_one() {
        let set = synthetic_class_images(30, 8, 8, 9);
        for i in 0..set.len() {
            let y = set.one_hot(i);
            assert_eq!(y.iter().sum::<f64>(), 1.0);
            assert_eq!(y.iter().filter(|&&v| v == 1.0).count(), 1);
        }
        assert!(set.images.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn stream_is_deterministic_and_in_range() {
        let target = sample_target(1, 10);
        let s = RegressionStream::new(target, 42);
        let a = s.materialize(100);
        let b = s.materialize(100);
        assert_eq!(a.x(7), b.x(7));
        assert_eq!(a.y(99), b.y(99));
        for i in 0..a.len() {
            assert!((-1.0..=1.0).contains(&a.x(i)[0]));
        }
    }

    #[test]
    fn labeled_conversion_and_subset() {
        let set = synthetic_class_images(25, 6, 6, 2);
        let d = Dataset::from_labeled(&set);
        assert_eq!(d.len(), 25);
        assert_eq!(d.x_dim(), 36);
        assert_eq!(d.y_dim(), 10);
        let sub = d.subset(10, 3);
        assert_eq!(sub.len(), 10);
        assert!(sub.has_labels());
        let sub2 = d.subset(10, 3);
        assert_eq!(sub.x(4), sub2.x(4));
    }
}
