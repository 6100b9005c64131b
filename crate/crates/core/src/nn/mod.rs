//! Minimal dense-network engine: forward pass with trace, backpropagation of
//! the MSE objective, Adam, Glorot initialization and JSON persistence.

mod adam;
mod network;

pub use adam::{AdamConfig, AdamState};
pub use network::{
    backward, forward, init_network, Activation, DenseLayer, ForwardTrace, Gradients, LayerGrad,
    LayerSpec, NetworkModel,
};

use crate::error::{Error, Result};

/// Row-major batch of vectors: one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Stacks equally sized rows. An empty slice gives a 0×`cols` matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }
}

/// Mean over batch and dimensions of squared differences.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<f64> {
    if pred.rows != target.rows || pred.cols != target.cols {
        return Err(Error::InvalidArgument(format!(
            "mse shape mismatch: {}x{} vs {}x{}",
            pred.rows, pred.cols, target.rows, target.cols
        )));
    }
    if pred.data.is_empty() {
        return Err(Error::Empty("mse of an empty batch"));
    }
    let sum: f64 = pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_hand_values() {
        let p = Matrix::from_rows(&[[1.0, 1.0]], 2).unwrap();
        let t = Matrix::from_rows(&[[0.0, 0.0]], 2).unwrap();
        assert_eq!(mse_loss(&p, &t).unwrap(), 1.0);
        assert_eq!(mse_loss(&p, &p).unwrap(), 0.0);
        let short = Matrix::from_rows(&[[0.0]], 1).unwrap();
        assert!(mse_loss(&p, &short).is_err());
    }

    #[test]
    fn mse_matches_scalar_loop() {
        let mut rng = crate::seed::rng(4);
        use rand::Rng;
        let (b, d) = (7, 5);
        let p: Vec<f64> = (0..b * d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let t: Vec<f64> = (0..b * d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut acc = 0.0;
        for i in 0..b {
            for j in 0..d {
                let diff = p[i * d + j] - t[i * d + j];
                acc += diff * diff;
            }
        }
        let expected = acc / (b * d) as f64;
        let got = mse_loss(
            &Matrix::from_vec(b, d, p).unwrap(),
            &Matrix::from_vec(b, d, t).unwrap(),
        )
        .unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn mse_nonnegative_and_zero_only_on_equality(
            a in prop::collection::vec(-10.0f64..10.0, 6),
            b in prop::collection::vec(-10.0f64..10.0, 6),
        ) {
            let pa = Matrix::from_vec(2, 3, a.clone()).unwrap();
            let pb = Matrix::from_vec(2, 3, b.clone()).unwrap();
            let loss = mse_loss(&pa, &pb).unwrap();
            prop_assert!(loss >= 0.0);
            prop_assert_eq!(loss == 0.0, a == b);
        }
    }
}
