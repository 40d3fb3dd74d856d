//! Transmitter IQ imbalance and additive white Gaussian noise.
//!
//! An amplitude mismatch `epsilon` and phase mismatch `phi` give the widely
//! linear model `r = K1 s + K2 conj(s)` with
//! `K1 = cos(phi/2) - j epsilon sin(phi/2)` and
//! `K2 = epsilon cos(phi/2) + j sin(phi/2)`. The image-rejection coefficient
//! is `alpha = K2 / conj(K1)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::waveform::TimeDomainFrame;

/// Amplitude and phase mismatch of the IQ modulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImbalanceParams {
    pub epsilon: f64,
    pub phi: f64,
}

impl ImbalanceParams {
    pub fn new(epsilon: f64, phi: f64) -> Result<Self> {
        if !(epsilon.is_finite() && phi.is_finite()) {
            return invalid("imbalance parameters must be finite");
        }
        let p = Self { epsilon, phi };
        if p.k1().norm() < 1e-12 {
            return invalid("imbalance with K1 = 0 has no direct path");
        }
        Ok(p)
    }

    /// No imbalance.
    pub fn ideal() -> Self {
        Self { epsilon: 0.0, phi: 0.0 }
    }

    pub fn k1(&self) -> Complex64 {
        let (s, c) = (self.phi / 2.0).sin_cos();
        Complex64::new(c, -self.epsilon * s)
    }

    pub fn k2(&self) -> Complex64 {
        let (s, c) = (self.phi / 2.0).sin_cos();
        Complex64::new(self.epsilon * c, s)
    }

    pub fn alpha(&self) -> Complex64 {
        self.k2() / self.k1().conj()
    }

    /// Image leakage ratio `10 log10 |alpha|^2`.
    pub fn ilr_db(&self) -> f64 {
        crate::to_db(self.alpha().norm_sqr())
    }

    /// Solves for the mismatch pair that produces `alpha` exactly.
    ///
    /// Writing `t = tan(phi/2)` turns the model into
    /// `alpha - epsilon = j t (1 - alpha epsilon)`, which has a real solution
    /// pair whenever `|alpha| <= 1`.
    pub fn from_alpha(alpha: Complex64) -> Result<Self> {
        let mag_sq = alpha.norm_sqr();
        if !mag_sq.is_finite() || mag_sq > 1.0 + 1e-12 {
            return invalid(format!("|alpha| = {} is not realisable", mag_sq.sqrt()));
        }
        let b = 1.0 + mag_sq;
        let disc = (b * b - 4.0 * alpha.re * alpha.re).max(0.0);
        let epsilon = 2.0 * alpha.re / (b + disc.sqrt());
        let t = ((alpha - epsilon) / (Complex64::i() * (1.0 - alpha * epsilon))).re;
        Self::new(epsilon, 2.0 * t.atan())
    }

    /// Draws `arg(alpha)` uniformly on `[0, 2 pi)` with `|alpha|` fixed by
    /// the target image leakage ratio.
    pub fn from_target_ilr<R: Rng + ?Sized>(ilr_db: f64, rng: &mut R) -> Result<Self> {
        if !ilr_db.is_finite() || ilr_db > 0.0 {
            return invalid(format!("target ILR must be finite and at most 0 dB, got {ilr_db}"));
        }
        let phase = rng.random::<f64>() * 2.0 * PI;
        Self::from_alpha(Complex64::from_polar(10f64.powf(ilr_db / 20.0), phase))
    }
}

/// Applies `r = K1 s + K2 conj(s)` sample by sample.
pub fn apply_imbalance(frame: &TimeDomainFrame, params: &ImbalanceParams) -> TimeDomainFrame {
    let (k1, k2) = (params.k1(), params.k2());
    TimeDomainFrame { layout: frame.layout, samples: frame.samples.iter().map(|s| k1 * s + k2 * s.conj()).collect() }
}

/// Adds circular complex Gaussian noise of variance `sigma_sq` per sample.
pub fn add_awgn<R: Rng + ?Sized>(frame: &TimeDomainFrame, sigma_sq: f64, rng: &mut R) -> Result<TimeDomainFrame> {
    if !(sigma_sq.is_finite() && sigma_sq >= 0.0) {
        return invalid(format!("noise variance must be non-negative, got {sigma_sq}"));
    }
    if sigma_sq == 0.0 {
        return Ok(frame.clone());
    }
    let s = (sigma_sq / 2.0).sqrt();
    let samples = frame
        .samples
        .iter()
        .map(|v| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            v + Complex64::new(re * s, im * s)
        })
        .collect();
    Ok(TimeDomainFrame { layout: frame.layout, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::FrameLayout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ideal_has_no_image() {
        let p = ImbalanceParams::ideal();
        assert_eq!(p.k1(), Complex64::new(1.0, 0.0));
        assert_eq!(p.k2(), Complex64::new(0.0, 0.0));
        assert_eq!(p.ilr_db(), crate::DB_FLOOR);
    }

    #[test]
    fn amplitude_only_mismatch() {
        let p = ImbalanceParams::new(0.1, 0.0).unwrap();
        assert!((p.alpha() - Complex64::new(0.1, 0.0)).norm() < 1e-15);
        assert!((p.ilr_db() + 20.0).abs() < 1e-12);
    }

    #[test]
    fn from_alpha_roundtrip() {
        for &(m, a) in &[(0.1, 0.3), (1e-3, -2.0), (0.5, 1.0), (0.9, 3.0), (0.2, 0.0), (0.3, PI / 2.0)] {
            let alpha = Complex64::from_polar(m, a);
            let p = ImbalanceParams::from_alpha(alpha).unwrap();
            assert!((p.alpha() - alpha).norm() < 1e-12, "{alpha}");
        }
        assert!(ImbalanceParams::from_alpha(Complex64::new(1.5, 0.0)).is_err());
    }

    #[test]
    fn target_ilr_is_hit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for ilr in [-60.0, -20.0, -5.0, 0.0] {
            let p = ImbalanceParams::from_target_ilr(ilr, &mut rng).unwrap();
            assert!((p.ilr_db() - ilr).abs() < 1e-9);
        }
        assert!(ImbalanceParams::from_target_ilr(1.0, &mut rng).is_err());
        assert!(ImbalanceParams::from_target_ilr(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn imbalance_and_noise_on_frames() {
        let layout = FrameLayout { n_dft: 4, l_cp: 0, n_ofdm: 1 };
        let f = TimeDomainFrame::new(layout, vec![Complex64::new(1.0, 2.0); 4]).unwrap();
        let p = ImbalanceParams::new(0.05, 0.1).unwrap();
        let r = apply_imbalance(&f, &p);
        let expect = p.k1() * Complex64::new(1.0, 2.0) + p.k2() * Complex64::new(1.0, -2.0);
        assert!((r.samples[0] - expect).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(add_awgn(&f, 0.0, &mut rng).unwrap(), f);
        assert!(add_awgn(&f, -1.0, &mut rng).is_err());
    }
}
