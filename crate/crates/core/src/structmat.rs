//! Circulant algebra for two-valued symmetric circulant matrices.
//!
//! Index convention: the circulant `C(v)` generated by a defining vector `v`
//! has `C[i][j] = v[(j − i) mod n]`, i.e. row `i` is row `i − 1` cyclically
//! shifted one place to the right. The opposite (left) shift produces `C(v)ᵀ`,
//! so the symmetrized operator `(C + Cᵀ)/2` does not depend on the choice.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::fft::{Complex64, FftPlan};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Default guard for [`materialize`].
pub const MATERIALIZE_LIMIT: usize = 4096;

/// The two weight values and the dimension that fully determine a TVSCM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoValueParams {
    a: f64,
    b: f64,
    n: usize,
}

impl TwoValueParams {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        check_finite("a", a)?;
        check_finite("b", b)?;
        Ok(TwoValueParams { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name, value })
    }
}

/// First row of a (not necessarily symmetric) circulant matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantVector(Vec<f64>);

impl CirculantVector {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::ZeroDimension);
        }
        for &x in &v {
            check_finite("v", x)?;
        }
        Ok(CirculantVector(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Defining vector of a symmetric circulant, with an optional cached spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCirculant {
    v_sym: Vec<f64>,
    spectrum: Option<Vec<f64>>,
}

impl SymmetricCirculant {
    pub fn n(&self) -> usize {
        self.v_sym.len()
    }

    pub fn defining_vector(&self) -> &[f64] {
        &self.v_sym
    }

    pub fn cached_spectrum(&self) -> Option<&[f64]> {
        self.spectrum.as_deref()
    }

    /// Computes and stores the spectrum.
    pub fn cache_spectrum(&mut self, plan: &FftPlan) -> Result<&[f64]> {
        let lambda = spectrum_with(&self.v_sym, plan)?;
        Ok(self.spectrum.insert(lambda))
    }

    fn max_abs(&self) -> f64 {
        self.v_sym.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// `[a, b, a, b, …]` of length `n`.
pub fn build_defining_vector(p: &TwoValueParams) -> CirculantVector {
    let v = (0..p.n)
        .map(|k| if k % 2 == 0 { p.a } else { p.b })
        .collect();
    CirculantVector(v)
}

/// First row of `(C(v) + C(v)ᵀ)/2`.
pub fn symmetrize(v: &CirculantVector) -> SymmetricCirculant {
    let v = &v.0;
    let n = v.len();
    let v_sym = (0..n).map(|k| 0.5 * (v[k] + v[(n - k) % n])).collect();
    SymmetricCirculant {
        v_sym,
        spectrum: None,
    }
}

/// Convenience: `symmetrize(build_defining_vector(p))`.
pub fn tvscm(p: &TwoValueParams) -> SymmetricCirculant {
    symmetrize(&build_defining_vector(p))
}

/// Dense `n × n` matrix with `M[i][j] = v_sym[(j − i) mod n]`, guarded by
/// [`MATERIALIZE_LIMIT`].
pub fn materialize(s: &SymmetricCirculant) -> Result<Matrix> {
    materialize_with_limit(s, MATERIALIZE_LIMIT)
}

pub fn materialize_with_limit(s: &SymmetricCirculant, limit: usize) -> Result<Matrix> {
    let n = s.n();
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    Ok(circulant_matrix(&s.v_sym))
}

/// Materializes the circulant of an arbitrary defining vector (right shifts).
pub fn circulant_matrix(v: &[f64]) -> Matrix {
    let n = v.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        let row = m.row_mut(i);
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = v[(j + n - i) % n];
        }
    }
    m
}

/// Eigenvalues `λ_j = Σ_k v_sym[k]·exp(−2πi·jk/n)` in DFT order.
pub fn spectrum(s: &SymmetricCirculant) -> Result<Vec<f64>> {
    if let Some(cached) = &s.spectrum {
        return Ok(cached.clone());
    }
    spectrum_with(&s.v_sym, &FftPlan::new(s.n()))
}

fn spectrum_with(v_sym: &[f64], plan: &FftPlan) -> Result<Vec<f64>> {
    let n = v_sym.len();
    if plan.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: plan.len(),
        });
    }
    let mut buf: Vec<Complex64> = v_sym.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.forward(&mut buf);
    let max_v = v_sym.iter().fold(0.0, |m, v| f64::max(m, v.abs()));
    let tolerance = 1e-9 * n as f64 * max_v;
    let worst = buf.iter().fold(0.0, |m, z| f64::max(m, z.im.abs()));
    if worst > tolerance {
        return Err(Error::ImaginaryResidual {
            magnitude: worst,
            tolerance,
        });
    }
    Ok(buf.into_iter().map(|z| z.re).collect())
}

fn check_len(s: &SymmetricCirculant, x: &[f64]) -> Result<()> {
    if x.len() != s.n() {
        return Err(Error::DimensionMismatch {
            expected: s.n(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// `O(n²)` reference product `y[i] = Σ_j v_sym[(j − i) mod n]·x[j]`.
pub fn matvec_naive(s: &SymmetricCirculant, x: &[f64]) -> Result<Vec<f64>> {
    check_len(s, x)?;
    let mut y = vec![0.0; s.n()];
    matvec_naive_into(&s.v_sym, x, &mut y);
    Ok(y)
}

pub(crate) fn matvec_naive_into(v: &[f64], x: &[f64], y: &mut [f64]) {
    let n = v.len();
    for (i, out) in y.iter_mut().enumerate() {
        // Row i is v rotated right by i: entries v[n-i..] then v[..n-i].
        let split = (n - i) % n;
        let (head, tail) = v.split_at(split);
        let (x_lo, x_hi) = x.split_at(n - split);
        *out = crate::linalg::dot(tail, x_lo) + crate::linalg::dot(head, x_hi);
    }
}

/// Spectral product `y = IDFT(λ ⊙ DFT(x))`.
pub fn matvec_fft(s: &SymmetricCirculant, x: &[f64]) -> Result<Vec<f64>> {
    check_len(s, x)?;
    let plan = Arc::new(FftPlan::new(s.n()));
    let op = SpectralOperator::new(s, plan)?;
    let mut y = vec![0.0; s.n()];
    let mut scratch = op.scratch();
    let residual = op.apply_checked(x, &mut y, &mut scratch);
    let max_x = x.iter().fold(0.0, |m, v| f64::max(m, v.abs()));
    let tolerance = 1e-9 * s.n() as f64 * s.max_abs() * max_x;
    if residual > tolerance {
        return Err(Error::ImaginaryResidual {
            magnitude: residual,
            tolerance,
        });
    }
    Ok(y)
}

/// Coefficient vectors with `v_sym = a·M_A + b·M_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair {
    pub a_mask: Vec<f64>,
    pub b_mask: Vec<f64>,
}

pub fn mask_decomposition(p: &TwoValueParams) -> MaskPair {
    let n = p.n;
    let (a_mask, b_mask) = if n % 2 == 0 {
        (0..n)
            .map(|k| if k % 2 == 0 { (1.0, 0.0) } else { (0.0, 1.0) })
            .unzip()
    } else {
        (0..n)
            .map(|k| if k == 0 { (1.0, 0.0) } else { (0.5, 0.5) })
            .unzip()
    };
    MaskPair { a_mask, b_mask }
}

/// Number of eigenvalues with magnitude above `tolerance`.
pub fn numerical_rank(spectrum: &[f64], tolerance: f64) -> usize {
    spectrum.iter().filter(|l| l.abs() > tolerance).count()
}

/// Reusable FFT-domain operator for repeated products with one matrix.
///
/// Because the matrix is real, two real vectors can share one complex
/// transform: `W(x₁ + i·x₂) = Wx₁ + i·Wx₂`.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    plan: Arc<FftPlan>,
    spectrum: Vec<f64>,
}

/// Scratch buffers for [`SpectralOperator`].
#[derive(Debug, Clone)]
pub struct SpectralScratch {
    pub(crate) buf: Vec<Complex64>,
    pub(crate) fft: Vec<Complex64>,
}

impl SpectralOperator {
    pub fn new(s: &SymmetricCirculant, plan: Arc<FftPlan>) -> Result<Self> {
        let spectrum = match &s.spectrum {
            Some(l) => l.clone(),
            None => spectrum_with(&s.v_sym, &plan)?,
        };
        if plan.len() != s.n() {
            return Err(Error::DimensionMismatch {
                expected: s.n(),
                actual: plan.len(),
            });
        }
        Ok(SpectralOperator { plan, spectrum })
    }

    pub fn n(&self) -> usize {
        self.spectrum.len()
    }

    pub fn plan(&self) -> &Arc<FftPlan> {
        &self.plan
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn scratch(&self) -> SpectralScratch {
        SpectralScratch {
            buf: vec![Complex64::new(0.0, 0.0); self.n()],
            fft: vec![Complex64::new(0.0, 0.0); self.plan.scratch_len()],
        }
    }

    /// Forward transform, spectral multiply, inverse transform, leaving the
    /// conjugate of the result in `scratch.buf`.
    ///
    /// The inverse is `conj(F(conj(·)))/n`; the inner conjugation and the
    /// scale are folded into the spectral multiply.
    fn multiply_conj(&self, scratch: &mut SpectralScratch) {
        let SpectralScratch { buf, fft } = scratch;
        self.plan.forward_with_scratch(buf, fft);
        let inv_n = 1.0 / self.n() as f64;
        for (z, &l) in buf.iter_mut().zip(&self.spectrum) {
            let g = l * inv_n;
            *z = Complex64::new(z.re * g, -z.im * g);
        }
        self.plan.forward_with_scratch(buf, fft);
    }

    /// `y = W x`; returns the largest discarded imaginary magnitude.
    pub fn apply_checked(&self, x: &[f64], y: &mut [f64], scratch: &mut SpectralScratch) -> f64 {
        for (z, &v) in scratch.buf.iter_mut().zip(x) {
            *z = Complex64::new(v, 0.0);
        }
        self.multiply_conj(scratch);
        let mut worst = 0.0f64;
        for (out, z) in y.iter_mut().zip(&scratch.buf) {
            *out = z.re;
            worst = worst.max(z.im.abs());
        }
        worst
    }

    /// `y₁ = W x₁`, `y₂ = W x₂` with a single complex transform pair.
    pub fn apply_pair(
        &self,
        x1: &[f64],
        x2: &[f64],
        y1: &mut [f64],
        y2: &mut [f64],
        scratch: &mut SpectralScratch,
    ) {
        for ((z, &r), &i) in scratch.buf.iter_mut().zip(x1).zip(x2) {
            *z = Complex64::new(r, i);
        }
        self.multiply_conj(scratch);
        for ((a, b), z) in y1.iter_mut().zip(y2.iter_mut()).zip(&scratch.buf) {
            *a = z.re;
            *b = -z.im;
        }
    }
}
