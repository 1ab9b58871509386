use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, z: &Matrix) -> Matrix {
        match self {
            Activation::Relu => relu(z),
            Activation::Identity => z.clone(),
        }
    }
}

pub fn relu(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for v in out.as_mut_slice() {
        *v = v.max(0.0);
    }
    out
}

/// Masks `grad` in place where the pre-activation was not positive.
pub fn relu_backward(pre_activation: &Matrix, grad: &mut Matrix) {
    for (g, &z) in grad.as_mut_slice().iter_mut().zip(pre_activation.as_slice()) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Mean softmax cross-entropy over the batch and its gradient w.r.t. the
/// logits, `(softmax − one_hot) / batch`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if logits.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: logits.rows(),
            actual: labels.len(),
        });
    }
    let classes = logits.cols();
    let batch = logits.rows();
    let mut grad = Matrix::zeros(batch, classes);
    let mut total = 0.0;
    let inv_batch = 1.0 / batch.max(1) as f64;
    let mut probs: Vec<f64> = Vec::with_capacity(classes);
    for (s, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::LabelOutOfRange {
                index: s,
                label,
                classes,
            });
        }
        let row = logits.row(s);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        probs.clear();
        probs.extend(row.iter().map(|&v| libm::exp(v - max)));
        let sum: f64 = probs.iter().sum();
        total += libm::log(sum) - (row[label] - max);
        let g = grad.row_mut(s);
        for (gi, p) in g.iter_mut().zip(&probs) {
            *gi = p / sum * inv_batch;
        }
        g[label] -= inv_batch;
    }
    Ok((total * inv_batch, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_k() {
        let logits = Matrix::zeros(3, 7);
        let (loss, _) = softmax_cross_entropy(&logits, &[0, 3, 6]).unwrap();
        assert!((loss - libm::log(7.0)).abs() < 1e-14);
    }

    #[test]
    fn peaked_logits_give_near_zero_loss() {
        let logits = Matrix::from_rows(&[[0.0, 200.0, 0.0]]).unwrap();
        let (loss, grad) = softmax_cross_entropy(&logits, &[1]).unwrap();
        assert!(loss < 1e-80);
        assert!(grad.max_abs() < 1e-80);
    }

    #[test]
    fn large_logits_stay_finite() {
        let logits = Matrix::from_rows(&[[1e4, -1e4, 0.0]]).unwrap();
        let (loss, grad) = softmax_cross_entropy(&logits, &[2]).unwrap();
        assert!((loss - 1e4).abs() < 1e-9);
        assert!(grad.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn label_range_checked() {
        let logits = Matrix::zeros(2, 3);
        assert_eq!(
            softmax_cross_entropy(&logits, &[0, 3]).unwrap_err(),
            Error::LabelOutOfRange {
                index: 1,
                label: 3,
                classes: 3
            }
        );
    }

    #[test]
    fn relu_masks_non_positive() {
        let z = Matrix::from_rows(&[[-1.0, 0.0, 2.0]]).unwrap();
        assert_eq!(relu(&z).as_slice(), &[0.0, 0.0, 2.0]);
        let mut g = Matrix::from_rows(&[[5.0, 5.0, 5.0]]).unwrap();
        relu_backward(&z, &mut g);
        assert_eq!(g.as_slice(), &[0.0, 0.0, 5.0]);
    }
}
