//! Complex FFT for arbitrary lengths.
//!
//! Lengths whose prime factors are all at most [`MAX_DIRECT_RADIX`] use a
//! self-sorting (Stockham) mixed-radix decimation-in-frequency transform with
//! dedicated radix-2 and radix-4 butterflies and a generic odd-radix
//! butterfly that exploits the `t ↔ r − t` symmetry of the DFT kernel. Any
//! other length goes through Bluestein's chirp-z algorithm on a power-of-two
//! inner transform.
//!
//! Conventions: the forward transform is `X[j] = Σ_k x[k]·exp(−2πi·jk/n)`; the
//! inverse includes the `1/n` factor.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;


/// Largest prime radix handled by a direct butterfly.
pub const MAX_DIRECT_RADIX: usize = 31;

/// A precomputed transform of a fixed length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Identity,
    Stockham(Vec<Stage>),
    Bluestein(Box<Bluestein>),
}

#[derive(Debug, Clone)]
struct Stage {
    radix: usize,
    /// Length of the sub-transforms this stage splits.
    len: usize,
    /// Number of interleaved sub-transforms.
    stride: usize,
    /// `w^(p·u)` for `p < len/radix`, `1 ≤ u < radix`, `w = exp(−2πi/len)`;
    /// row-major in `p`.
    twiddles: Vec<Complex64>,
    /// `(cos, sin)` of `2π·k/radix` for `k < radix` (odd radices only).
    roots: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
struct Bluestein {
    inner: FftPlan,
    /// `exp(−iπ·k²/n)` for `k < n`.
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp, wrapped to the inner length.
    kernel: Vec<Complex64>,
}

fn unit(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

fn factorize(mut n: usize) -> Option<Vec<usize>> {
    let mut radices = Vec::new();
    while n % 4 == 0 {
        radices.push(4);
        n /= 4;
    }
    if n % 2 == 0 {
        radices.push(2);
        n /= 2;
    }
    let mut p = 3;
    while n > 1 {
        if p > MAX_DIRECT_RADIX {
            return None;
        }
        if n % p == 0 {
            radices.push(p);
            n /= p;
        } else {
            p += 2;
        }
    }
    Some(radices)
}

impl FftPlan {
    /// Plans a transform of length `n` (`n ≥ 1`).
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "FFT length must be positive");
        let kind = if n == 1 {
            Kind::Identity
        } else if let Some(radices) = factorize(n) {
            Kind::Stockham(stockham_stages(n, &radices))
        } else {
            Kind::Bluestein(Box::new(Bluestein::new(n)))
        };
        FftPlan { n, kind }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when the length is served by the chirp-z fallback.
    pub fn uses_bluestein(&self) -> bool {
        matches!(self.kind, Kind::Bluestein(_))
    }

    /// Scratch length required by [`FftPlan::forward_with_scratch`].
    pub fn scratch_len(&self) -> usize {
        match &self.kind {
            Kind::Identity => 0,
            Kind::Stockham(_) => self.n,
            Kind::Bluestein(b) => 2 * b.inner.n,
        }
    }

    /// In-place forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len()];
        self.forward_with_scratch(data, &mut scratch);
    }

    /// In-place inverse transform, scaled by `1/n`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len()];
        self.inverse_with_scratch(data, &mut scratch);
    }

    pub fn forward_with_scratch(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "FFT input length");
        assert!(scratch.len() >= self.scratch_len(), "FFT scratch too short");
        match &self.kind {
            Kind::Identity => {}
            Kind::Stockham(stages) => run_stockham(stages, data, &mut scratch[..self.n]),
            Kind::Bluestein(b) => b.run(data, scratch),
        }
    }

    pub fn inverse_with_scratch(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        for z in data.iter_mut() {
            *z = z.conj();
        }
        self.forward_with_scratch(data, scratch);
        let scale = 1.0 / self.n as f64;
        for z in data.iter_mut() {
            *z = Complex64::new(z.re * scale, -z.im * scale);
        }
    }
}

fn stockham_stages(n: usize, radices: &[usize]) -> Vec<Stage> {
    let mut stages = Vec::with_capacity(radices.len());
    let mut len = n;
    let mut stride = 1;
    for &radix in radices {
        let m = len / radix;
        let base = -2.0 * PI / len as f64;
        let mut twiddles = Vec::with_capacity(m * (radix - 1));
        for p in 0..m {
            for u in 1..radix {
                // Reduce the exponent first so large lengths keep full precision.
                let k = (p * u) % len;
                twiddles.push(unit(base * k as f64));
            }
        }
        let roots = if radix % 2 == 1 {
            (0..radix)
                .map(|k| {
                    let angle = 2.0 * PI * k as f64 / radix as f64;
                    (libm::cos(angle), libm::sin(angle))
                })
                .collect()
        } else {
            Vec::new()
        };
        stages.push(Stage {
            radix,
            len,
            stride,
            twiddles,
            roots,
        });
        len = m;
        stride *= radix;
    }
    stages
}

fn run_stockham(stages: &[Stage], data: &mut [Complex64], scratch: &mut [Complex64]) {
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
        // SAFETY: the required CPU features were just detected.
        return unsafe { run_stockham_avx2(stages, data, scratch) };
    }
    stockham_passes(stages, data, scratch);
}

/// The same passes compiled for AVX2. Rust never fuses multiply-add on its
/// own, so results are bit-identical to the baseline build.
#[cfg(all(feature = "std", target_arch = "x86_64"))]
#[target_feature(enable = "avx2,fma")]
unsafe fn run_stockham_avx2(stages: &[Stage], data: &mut [Complex64], scratch: &mut [Complex64]) {
    stockham_passes(stages, data, scratch);
}

#[inline(always)]
fn stockham_passes(stages: &[Stage], data: &mut [Complex64], scratch: &mut [Complex64]) {
    let mut in_data = true;
    for stage in stages {
        if in_data {
            stage.apply(data, scratch);
        } else {
            stage.apply(scratch, data);
        }
        in_data = !in_data;
    }
    if !in_data {
        data.copy_from_slice(scratch);
    }
}

#[inline(always)]
fn twiddle<const TW: bool>(z: Complex64, w: Complex64) -> Complex64 {
    if TW {
        z * w
    } else {
        z
    }
}

impl Stage {
    #[inline(always)]
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        // The last stage is a single block whose twiddles are all one.
        if self.len == self.radix {
            self.apply_with::<false>(x, y)
        } else {
            self.apply_with::<true>(x, y)
        }
    }

    #[inline(always)]
    fn apply_with<const TW: bool>(&self, x: &[Complex64], y: &mut [Complex64]) {
        match self.radix {
            2 => self.radix2::<TW>(x, y),
            4 => self.radix4::<TW>(x, y),
            3 => self.odd_fixed::<TW, 3, 1>(x, y),
            5 => self.odd_fixed::<TW, 5, 2>(x, y),
            7 => self.odd_fixed::<TW, 7, 3>(x, y),
            _ => self.odd(x, y),
        }
    }

    #[inline(always)]
    fn radix2<const TW: bool>(&self, x: &[Complex64], y: &mut [Complex64]) {
        let s = self.stride;
        let m = self.len / 2;
        let (x0, x1) = x.split_at(m * s);
        for (p, yb) in y.chunks_exact_mut(2 * s).enumerate() {
            let w = self.twiddles[p];
            let a = &x0[p * s..][..s];
            let b = &x1[p * s..][..s];
            let (y0, y1) = yb.split_at_mut(s);
            for q in 0..s {
                y0[q] = a[q] + b[q];
                y1[q] = twiddle::<TW>(a[q] - b[q], w);
            }
        }
    }

    #[inline(always)]
    fn radix4<const TW: bool>(&self, x: &[Complex64], y: &mut [Complex64]) {
        let s = self.stride;
        let m = self.len / 4;
        let (x0, rest) = x.split_at(m * s);
        let (x1, rest) = rest.split_at(m * s);
        let (x2, x3) = rest.split_at(m * s);
        for (p, (yb, tw)) in y
            .chunks_exact_mut(4 * s)
            .zip(self.twiddles.chunks_exact(3))
            .enumerate()
        {
            let (w1, w2, w3) = (tw[0], tw[1], tw[2]);
            let a0 = &x0[p * s..][..s];
            let a1 = &x1[p * s..][..s];
            let a2 = &x2[p * s..][..s];
            let a3 = &x3[p * s..][..s];
            let (y0, yr) = yb.split_at_mut(s);
            let (y1, yr) = yr.split_at_mut(s);
            let (y2, y3) = yr.split_at_mut(s);
            for q in 0..s {
                let t0 = a0[q] + a2[q];
                let t1 = a0[q] - a2[q];
                let t2 = a1[q] + a3[q];
                let d = a1[q] - a3[q];
                // (a1 − a3)·(−i)
                let t3 = Complex64::new(d.im, -d.re);
                y0[q] = t0 + t2;
                y1[q] = twiddle::<TW>(t1 + t3, w1);
                y2[q] = twiddle::<TW>(t0 - t2, w2);
                y3[q] = twiddle::<TW>(t1 - t3, w3);
            }
        }
    }

    /// Same butterfly as [`Stage::odd`] with the radix known at compile time.
    #[inline(always)]
    fn odd_fixed<const TW: bool, const R: usize, const H: usize>(
        &self,
        x: &[Complex64],
        y: &mut [Complex64],
    ) {
        let s = self.stride;
        let m = self.len / R;
        let zero = Complex64::new(0.0, 0.0);
        let mut roots = [(0.0, 0.0); R];
        roots.copy_from_slice(&self.roots[..R]);
        let blocks: [&[Complex64]; R] = core::array::from_fn(|t| &x[t * m * s..][..m * s]);
        for (p, (yb, tw)) in y
            .chunks_exact_mut(R * s)
            .zip(self.twiddles.chunks_exact(R - 1))
            .enumerate()
        {
            let ins: [&[Complex64]; R] = core::array::from_fn(|t| &blocks[t][p * s..][..s]);
            for q in 0..s {
                let a0 = ins[0][q];
                let mut sums = [zero; H];
                let mut diffs = [zero; H];
                let mut dc = a0;
                for t in 1..=H {
                    let (l, r) = (ins[t][q], ins[R - t][q]);
                    sums[t - 1] = l + r;
                    diffs[t - 1] = l - r;
                    dc += sums[t - 1];
                }
                yb[q] = dc;
                for u in 1..=H {
                    let mut re_part = a0;
                    let mut im_part = zero;
                    for t in 1..=H {
                        let (c, sn) = roots[(u * t) % R];
                        re_part += sums[t - 1] * c;
                        im_part += diffs[t - 1] * sn;
                    }
                    let i_b = Complex64::new(-im_part.im, im_part.re);
                    yb[s * u + q] = twiddle::<TW>(re_part - i_b, tw[u - 1]);
                    yb[s * (R - u) + q] = twiddle::<TW>(re_part + i_b, tw[R - u - 1]);
                }
            }
        }
    }

    #[inline(always)]
    fn odd(&self, x: &[Complex64], y: &mut [Complex64]) {
        let r = self.radix;
        let h = (r - 1) / 2;
        let s = self.stride;
        let m = self.len / r;
        let zero = Complex64::new(0.0, 0.0);
        let roots = &self.roots[..r];
        let mut a = [zero; MAX_DIRECT_RADIX];
        let mut sums = [zero; MAX_DIRECT_RADIX / 2];
        let mut diffs = [zero; MAX_DIRECT_RADIX / 2];
        for (p, (yb, tw)) in y
            .chunks_exact_mut(r * s)
            .zip(self.twiddles.chunks_exact(r - 1))
            .enumerate()
        {
            for q in 0..s {
                for (t, slot) in a[..r].iter_mut().enumerate() {
                    *slot = x[q + s * (p + t * m)];
                }
                let mut dc = a[0];
                for t in 1..=h {
                    sums[t - 1] = a[t] + a[r - t];
                    diffs[t - 1] = a[t] - a[r - t];
                    dc += sums[t - 1];
                }
                yb[q] = dc;
                for u in 1..=h {
                    let mut re_part = a[0];
                    let mut im_part = zero;
                    let mut k = 0;
                    for (sum, diff) in sums[..h].iter().zip(&diffs[..h]) {
                        k += u;
                        if k >= r {
                            k -= r;
                        }
                        let (c, sn) = roots[k];
                        re_part += sum * c;
                        im_part += diff * sn;
                    }
                    // b_u = A − i·B, b_{r−u} = A + i·B
                    let i_b = Complex64::new(-im_part.im, im_part.re);
                    yb[s * u + q] = (re_part - i_b) * tw[u - 1];
                    yb[s * (r - u) + q] = (re_part + i_b) * tw[r - u - 1];
                }
            }
        }
    }
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let inner_len = (2 * n - 1).next_power_of_two();
        let inner = FftPlan::new(inner_len);
        let two_n = 2 * n as u128;
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = ((k as u128 * k as u128) % two_n) as f64;
                unit(-PI * k2 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); inner_len];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[inner_len - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Bluestein {
            inner,
            chirp,
            kernel,
        }
    }

    fn run(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        let len = self.inner.n;
        let (work, inner_scratch) = scratch.split_at_mut(len);
        for (w, (x, c)) in work.iter_mut().zip(data.iter().zip(&self.chirp)) {
            *w = *x * *c;
        }
        for w in work[data.len()..].iter_mut() {
            *w = Complex64::new(0.0, 0.0);
        }
        self.inner.forward_with_scratch(work, inner_scratch);
        for (w, k) in work.iter_mut().zip(&self.kernel) {
            *w *= *k;
        }
        self.inner.inverse_with_scratch(work, inner_scratch);
        for (x, (w, c)) in data.iter_mut().zip(work.iter().zip(&self.chirp)) {
            *x = *w * *c;
        }
    }
}

/// Direct `O(n²)` DFT; reference for tests and tiny lengths.
pub fn dft_naive(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    (0..n)
        .map(|j| {
            input
                .iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (k, &x)| {
                    let idx = (j * k) % n;
                    acc + x * unit(-2.0 * PI * idx as f64 / n as f64)
                })
        })
        .collect()
}
