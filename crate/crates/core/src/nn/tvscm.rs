//! The two-valued symmetric circulant layer.
//!
//! Forward: `z = W x (+ bias)` with `W` the symmetrized circulant built from
//! `(a, b)`. Backward uses the mask decomposition `v_sym = a·M_A + b·M_B`:
//! with the batch correlation `T[k] = Σ_s Σ_i G[s,i]·X[s,(i+k) mod n]`,
//! `∂L/∂a = ⟨M_A, T⟩` and `∂L/∂b = ⟨M_B, T⟩`. Since `W = Wᵀ`, the input
//! gradient is the forward product applied to `G`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::fft::{Complex64, FftPlan};
use crate::linalg::{dot, Matrix};
use crate::structmat::{
    mask_decomposition, matvec_naive_into, tvscm, MaskPair, SpectralOperator, SymmetricCirculant,
    TwoValueParams,
};
use crate::{Error, Result};

/// Dimension at and above which products go through the FFT.
pub const DEFAULT_FFT_THRESHOLD: usize = 64;

#[derive(Debug, Clone)]
pub struct TvscmLayer {
    params: TwoValueParams,
    sym: SymmetricCirculant,
    masks: MaskPair,
    bias: Option<Vec<f64>>,
    fft_threshold: usize,
    plan: Option<Arc<FftPlan>>,
    op: Option<SpectralOperator>,
}

/// Gradients of one TVSCM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TvscmGrad {
    pub a: f64,
    pub b: f64,
    pub bias: Option<Vec<f64>>,
}

impl TvscmLayer {
    pub fn new(a: f64, b: f64, n: usize, use_bias: bool) -> Result<Self> {
        Self::with_threshold(a, b, n, use_bias, DEFAULT_FFT_THRESHOLD)
    }

    pub fn with_threshold(
        a: f64,
        b: f64,
        n: usize,
        use_bias: bool,
        fft_threshold: usize,
    ) -> Result<Self> {
        let params = TwoValueParams::new(a, b, n)?;
        let mut layer = TvscmLayer {
            params,
            sym: tvscm(&params),
            masks: mask_decomposition(&params),
            bias: use_bias.then(|| vec![0.0; n]),
            fft_threshold,
            plan: None,
            op: None,
        };
        layer.rebuild()?;
        Ok(layer)
    }

    fn rebuild(&mut self) -> Result<()> {
        self.sym = tvscm(&self.params);
        if self.params.n() >= self.fft_threshold {
            let n = self.params.n();
            let plan = self
                .plan
                .get_or_insert_with(|| Arc::new(FftPlan::new(n)))
                .clone();
            self.sym.cache_spectrum(&plan)?;
            self.op = Some(SpectralOperator::new(&self.sym, plan)?);
        } else {
            self.plan = None;
            self.op = None;
        }
        Ok(())
    }

    /// Replaces `(a, b)` and rebuilds the cached operator.
    pub fn set_values(&mut self, a: f64, b: f64) -> Result<()> {
        self.params = TwoValueParams::new(a, b, self.params.n())?;
        self.rebuild()
    }

    pub fn set_fft_threshold(&mut self, threshold: usize) -> Result<()> {
        self.fft_threshold = threshold;
        self.rebuild()
    }

    pub fn set_bias(&mut self, bias: Option<Vec<f64>>) -> Result<()> {
        if let Some(b) = &bias {
            if b.len() != self.n() {
                return Err(Error::DimensionMismatch {
                    expected: self.n(),
                    actual: b.len(),
                });
            }
        }
        self.bias = bias;
        Ok(())
    }

    pub fn params(&self) -> TwoValueParams {
        self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn symmetric(&self) -> &SymmetricCirculant {
        &self.sym
    }

    pub fn bias(&self) -> Option<&[f64]> {
        self.bias.as_deref()
    }

    pub(crate) fn bias_mut(&mut self) -> Option<&mut [f64]> {
        self.bias.as_deref_mut()
    }

    pub fn use_bias(&self) -> bool {
        self.bias.is_some()
    }

    pub fn fft_threshold(&self) -> usize {
        self.fft_threshold
    }

    pub fn uses_fft(&self) -> bool {
        self.op.is_some()
    }

    pub fn parameter_count(&self) -> usize {
        2 + self.bias.as_ref().map_or(0, Vec::len)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: x.cols(),
            });
        }
        Ok(())
    }

    /// Row-wise `W x` without bias.
    fn apply_rows(&self, x: &Matrix) -> Matrix {
        let n = self.n();
        let mut out = Matrix::zeros(x.rows(), n);
        match &self.op {
            None => {
                let v = self.sym.defining_vector();
                for s in 0..x.rows() {
                    matvec_naive_into(v, x.row(s), out.row_mut(s));
                }
            }
            Some(op) => {
                let mut scratch = op.scratch();
                let rows = x.rows();
                let mut s = 0;
                while s + 1 < rows {
                    let (lo, hi) = out.as_mut_slice()[s * n..(s + 2) * n].split_at_mut(n);
                    op.apply_pair(x.row(s), x.row(s + 1), lo, hi, &mut scratch);
                    s += 2;
                }
                if s < rows {
                    op.apply_checked(x.row(s), out.row_mut(s), &mut scratch);
                }
            }
        }
        out
    }

    /// `tvscm_forward`: row `s` of the result is `W·X[s] (+ bias)`.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut out = self.apply_rows(x);
        if let Some(bias) = &self.bias {
            for s in 0..out.rows() {
                for (o, b) in out.row_mut(s).iter_mut().zip(bias) {
                    *o += b;
                }
            }
        }
        Ok(out)
    }

    /// Batch correlation `T[k] = Σ_s Σ_i G[s,i]·X[s,(i+k) mod n]`.
    pub fn correlation(&self, x: &Matrix, g: &Matrix) -> Vec<f64> {
        match &self.op {
            None => correlation_naive(x, g),
            Some(op) => correlation_fft(op.plan(), x, g),
        }
    }

    /// `tvscm_backward`: parameter gradients and, if requested, `∂L/∂X`.
    pub fn backward(
        &self,
        x: &Matrix,
        g: &Matrix,
        need_input_grad: bool,
    ) -> Result<(TvscmGrad, Option<Matrix>)> {
        self.check_input(x)?;
        self.check_input(g)?;
        if x.rows() != g.rows() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                actual: g.rows(),
            });
        }
        let t = self.correlation(x, g);
        let grad = TvscmGrad {
            a: dot(&self.masks.a_mask, &t),
            b: dot(&self.masks.b_mask, &t),
            bias: self.bias.as_ref().map(|_| g.column_sums()),
        };
        let input_grad = need_input_grad.then(|| self.apply_rows(g));
        Ok((grad, input_grad))
    }
}

pub(crate) fn correlation_naive(x: &Matrix, g: &Matrix) -> Vec<f64> {
    let n = x.cols();
    let mut t = vec![0.0; n];
    for (xs, gs) in x.iter_rows().zip(g.iter_rows()) {
        for (k, tk) in t.iter_mut().enumerate() {
            // Σ_i G[i]·X[i+k]: split the rotation into two contiguous dots.
            let (x_lo, x_hi) = xs.split_at(k);
            let (g_lo, g_hi) = gs.split_at(n - k);
            *tk += dot(g_lo, x_hi) + dot(g_hi, x_lo);
        }
    }
    t
}

fn correlation_fft(plan: &FftPlan, x: &Matrix, g: &Matrix) -> Vec<f64> {
    let n = x.cols();
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = vec![zero; n];
    let mut buf = vec![zero; n];
    let mut scratch = vec![zero; plan.scratch_len()];
    for (xs, gs) in x.iter_rows().zip(g.iter_rows()) {
        // One transform carries both real signals: Z = X̂ + i·Ĝ.
        for ((z, &xr), &gr) in buf.iter_mut().zip(xs).zip(gs) {
            *z = Complex64::new(xr, gr);
        }
        plan.forward_with_scratch(&mut buf, &mut scratch);
        for j in 0..n {
            let zj = buf[j];
            let zc = buf[(n - j) % n].conj();
            let x_hat = (zj + zc) * 0.5;
            let d = zj - zc;
            // (zj − zc)/(2i)
            let g_hat = Complex64::new(d.im * 0.5, -d.re * 0.5);
            acc[j] += g_hat.conj() * x_hat;
        }
    }
    plan.inverse_with_scratch(&mut acc, &mut scratch);
    acc.into_iter().map(|z| z.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn zero_values_give_zero_output() {
        let layer = TvscmLayer::new(0.0, 0.0, 6, false).unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]).unwrap();
        assert!(layer.forward(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_examples() {
        let layer = TvscmLayer::new(1.0, 2.0, 4, false).unwrap();
        let x = Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().as_slice(), &[1.0, 2.0, 1.0, 2.0]);

        let mut layer = TvscmLayer::new(1.0, 3.0, 3, true).unwrap();
        layer.set_bias(Some(vec![1.0; 3])).unwrap();
        let x = Matrix::from_rows(&[[1.0, -1.0, 0.0]]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().as_slice(), &[0.0, 2.0, 1.0]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let layer = TvscmLayer::new(1.0, 2.0, 4, false).unwrap();
        let x = Matrix::zeros(2, 5);
        assert!(matches!(
            layer.forward(&x),
            Err(Error::DimensionMismatch { expected: 4, actual: 5 })
        ));
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(TvscmLayer::new(0.1, 0.2, 784, false).unwrap().parameter_count(), 2);
        assert_eq!(TvscmLayer::new(0.1, 0.2, 784, true).unwrap().parameter_count(), 786);
    }

    #[test]
    fn path_selection_follows_threshold() {
        assert!(!TvscmLayer::new(1.0, 2.0, 63, false).unwrap().uses_fft());
        assert!(TvscmLayer::new(1.0, 2.0, 64, false).unwrap().uses_fft());
        let mut layer = TvscmLayer::new(1.0, 2.0, 16, false).unwrap();
        layer.set_fft_threshold(1).unwrap();
        assert!(layer.uses_fft());
    }

    #[test]
    fn fft_and_naive_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &n in &[4, 5, 16, 187] {
            for &rows in &[1, 2, 7] {
                let naive = TvscmLayer::with_threshold(0.3, -0.7, n, false, usize::MAX).unwrap();
                let fast = TvscmLayer::with_threshold(0.3, -0.7, n, false, 1).unwrap();
                let x = random_matrix(&mut rng, rows, n);
                let g = random_matrix(&mut rng, rows, n);
                let a = naive.forward(&x).unwrap();
                let b = fast.forward(&x).unwrap();
                let scale = a.max_abs() + 1e-12;
                for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
                    assert!((p - q).abs() <= 1e-9 * scale, "n={n} rows={rows}");
                }
                let ta = correlation_naive(&x, &g);
                let tb = fast.correlation(&x, &g);
                let scale = ta.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1e-12;
                for (p, q) in ta.iter().zip(&tb) {
                    assert!((p - q).abs() <= 1e-9 * scale, "corr n={n} rows={rows}");
                }
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let layer = TvscmLayer::new(0.5, 1.5, 5, true).unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0, 4.0, 5.0]]).unwrap();
        let g = Matrix::zeros(1, 5);
        let (grad, dx) = layer.backward(&x, &g, true).unwrap();
        assert_eq!(grad.a, 0.0);
        assert_eq!(grad.b, 0.0);
        assert_eq!(grad.bias, Some(vec![0.0; 5]));
        assert!(dx.unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_impulse_gradient() {
        let layer = TvscmLayer::new(1.0, 2.0, 4, false).unwrap();
        let x = Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0]]).unwrap();
        let g = Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(layer.correlation(&x, &g), vec![1.0, 0.0, 0.0, 0.0]);
        let (grad, _) = layer.backward(&x, &g, false).unwrap();
        assert_eq!((grad.a, grad.b), (1.0, 0.0));
    }
}
