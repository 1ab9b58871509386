use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{gemm, gemv_rows, Matrix, Operand};
use crate::{Error, Result};

/// Fully connected affine layer `y = x·Wᵀ + bias`, `W` stored `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Matrix,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::DimensionMismatch {
                expected: weights.rows(),
                actual: bias.len(),
            });
        }
        if weights.as_slice().iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Model("dense parameters must be finite".into()));
        }
        Ok(DenseLayer { weights, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            weights: Matrix::zeros(outputs, inputs),
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs(),
                actual: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), self.outputs());
        if x.rows() == 1 {
            gemv_rows(&self.weights, x.row(0), out.row_mut(0));
        } else {
            gemm(
                x.rows(),
                self.inputs(),
                self.outputs(),
                Operand::plain(x),
                Operand::transposed(&self.weights),
                &mut out,
                false,
            );
        }
        for s in 0..out.rows() {
            for (o, b) in out.row_mut(s).iter_mut().zip(&self.bias) {
                *o += b;
            }
        }
        Ok(out)
    }

    /// `∂L/∂W = Gᵀ·X`, `∂L/∂bias = Σ_s G[s]`, and optionally `∂L/∂X = G·W`.
    pub fn backward(
        &self,
        x: &Matrix,
        g: &Matrix,
        need_input_grad: bool,
    ) -> Result<(DenseGrad, Option<Matrix>)> {
        if x.cols() != self.inputs() || g.cols() != self.outputs() || x.rows() != g.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs(),
                actual: x.cols(),
            });
        }
        let mut dw = Matrix::zeros(self.outputs(), self.inputs());
        gemm(
            self.outputs(),
            x.rows(),
            self.inputs(),
            Operand::transposed(g),
            Operand::plain(x),
            &mut dw,
            false,
        );
        let input_grad = need_input_grad.then(|| {
            let mut dx = Matrix::zeros(x.rows(), self.inputs());
            gemm(
                x.rows(),
                self.outputs(),
                self.inputs(),
                Operand::plain(g),
                Operand::plain(&self.weights),
                &mut dx,
                false,
            );
            dx
        });
        Ok((
            DenseGrad {
                weights: dw,
                bias: g.column_sums(),
            },
            input_grad,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_layer() {
        let layer = DenseLayer::new(Matrix::from_rows(&[[2.5]]).unwrap(), vec![0.0]).unwrap();
        let y = layer.forward(&Matrix::from_rows(&[[4.0]]).unwrap()).unwrap();
        assert_eq!(y.as_slice(), &[10.0]);
    }

    #[test]
    fn zero_input_yields_bias() {
        let w = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let layer = DenseLayer::new(w, vec![0.5, -1.0, 2.0]).unwrap();
        let y = layer.forward(&Matrix::zeros(3, 2)).unwrap();
        for s in 0..3 {
            assert_eq!(y.row(s), &[0.5, -1.0, 2.0]);
        }
    }

    #[test]
    fn single_row_and_batched_paths_agree() {
        let w = Matrix::from_rows(&[[1.0, -2.0, 0.5], [0.25, 3.0, -1.0]]).unwrap();
        let layer = DenseLayer::new(w, vec![0.1, 0.2]).unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0], [-1.0, 0.5, 2.0]]).unwrap();
        let batched = layer.forward(&x).unwrap();
        for s in 0..2 {
            let single = layer.forward(&x.select_rows(&[s])).unwrap();
            for (a, b) in single.row(0).iter().zip(batched.row(s)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bias_length_checked() {
        assert!(DenseLayer::new(Matrix::zeros(2, 3), vec![0.0; 3]).is_err());
    }
}
