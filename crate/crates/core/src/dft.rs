//! Unitary DFT helpers.
//!
//! The forward transform is `X[k] = N^{-1/2} sum_l x[l] exp(-j 2 pi k l / N)`
//! and the inverse uses the conjugate kernel with the same scale.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Planned forward and inverse unitary transforms of one length.
#[derive(Clone)]
pub struct UnitaryDft {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("len", &self.len).finish()
    }
}

impl UnitaryDft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DFT length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform of one block of `len` samples.
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    /// In-place inverse transform of one block of `len` samples.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }
}

/// Index of the mirror bin `(N - k) mod N`.
#[inline]
pub fn mirror(k: usize, n: usize) -> usize {
    (n - k % n) % n
}

/// Returns `v[(N - n) mod N]` for every `n`.
pub fn mirrored<T: Copy>(v: &[T]) -> Vec<T> {
    let n = v.len();
    (0..n).map(|k| v[mirror(k, n)]).collect()
}
