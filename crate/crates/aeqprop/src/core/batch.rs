//! A mini-batch of input/target pairs, stored flat.
//!
//! A batch is modeled as independent replicas of the state coupled
//! through the shared parameters; energies and costs are averaged over
//! the batch so the effective step size stays independent of batch size.

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    xs: Vec<f64>,
    ys: Vec<f64>,
    x_dim: usize,
    y_dim: usize,
}

impl Batch {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, x_dim: usize, y_dim: usize) -> Self {
        assert!(x_dim > 0 && y_dim > 0);
        assert_eq!(xs.len() % x_dim, 0);
        assert_eq!(ys.len() % y_dim, 0);
        assert_eq!(xs.len() / x_dim, ys.len() / y_dim);
        Batch { xs, ys, x_dim, y_dim }
    }

    pub fn single(x: Vec<f64>, y: Vec<f64>) -> Self {
        let (x_dim, y_dim) = (x.len(), y.len());
        Batch::new(x, y, x_dim, y_dim)
    }

    pub fn len(&self) -> usize {
        self.xs.len() / self.x_dim
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.x_dim..(i + 1) * self.x_dim]
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.ys[i * self.y_dim..(i + 1) * self.y_dim]
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }
}
