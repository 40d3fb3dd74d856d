//! Cramér-Rao bounds on the image-rejection coefficient.
//!
//! The unknowns are the complex pair `theta = [K1, alpha]` and the Fisher
//! information is `J[k][l] = 1/2 tr(C^-1 dC/dtheta_k C^-1 dC/dconj(theta_l))`
//! for the augmented received covariance `C`. The bound on `alpha` is the
//! lower-right entry of `J^-1`.
//!
//! Two independent evaluations are provided: [`fim_full`] works on dense
//! matrices and [`fim_fast`] uses the per-bin block structure of the
//! prefix-free model. [`crlb_simplified`] is the small-imbalance
//! approximation and [`closed_form_symmetric`] / [`closed_form_asymmetric`]
//! cover flat channels.

mod fast;
mod full;

pub use fast::fim_fast;
pub use full::fim_full;

use num_complex::Complex64;

use crate::covariance::SpectralCovariances;
use crate::error::{Error, Result};
use crate::impairment::ImbalanceParams;

/// Which routine produced a Fisher matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FimPath {
    Full,
    Fast,
}

/// 2x2 Fisher information for `[K1, alpha]`.
///
/// `unbounded` is set when the model is degenerate in a way that pins
/// `alpha` exactly, for example noiseless asymmetric allocations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fim2x2 {
    pub j: [[Complex64; 2]; 2],
    pub unbounded: bool,
    pub path: FimPath,
}

/// Whether the bound is an ordinary finite value or exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStatus {
    Finite,
    /// Infinite information: `alpha` is identifiable without error.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbResult {
    pub var_alpha: f64,
    pub status: BoundStatus,
    pub fim: Option<Fim2x2>,
}

impl CrlbResult {
    pub fn var_db(&self) -> f64 {
        crate::to_db(self.var_alpha)
    }

    fn exact(fim: Option<Fim2x2>) -> Self {
        Self { var_alpha: 0.0, status: BoundStatus::Exact, fim }
    }
}

/// Bound on `alpha` from the Fisher matrix, `J11 / (J11 J22 - |J12|^2)`.
pub fn crlb_alpha(fim: &Fim2x2) -> Result<CrlbResult> {
    if fim.unbounded {
        return Ok(CrlbResult::exact(Some(*fim)));
    }
    let j11 = fim.j[0][0].re;
    let j22 = fim.j[1][1].re;
    let j12 = fim.j[0][1].norm_sqr();
    if !(j11 > 0.0 && j22 > 0.0 && j11.is_finite() && j22.is_finite()) {
        return Err(Error::Numerical(format!("non-positive Fisher diagonal ({j11:e}, {j22:e})")));
    }
    let det = j11 * j22 - j12;
    if det <= 1e-12 * j11 * j22 {
        return Err(Error::IllConditionedFim { excess: j12 / (j11 * j22) - 1.0 });
    }
    Ok(CrlbResult { var_alpha: j11 / det, status: BoundStatus::Finite, fim: Some(*fim) })
}

/// Small-imbalance approximation
/// `(2 / N_OFDM) / sum_n (s[n] + s_img[n])^2 / ((s[n] + q)(s_img[n] + q))`
/// with `q` the post-imbalance noise variance.
pub fn crlb_simplified(spectral: &SpectralCovariances) -> Result<CrlbResult> {
    let q = spectral.sigma_eta_r_sq;
    let mut sum = 0.0;
    for (a, b) in spectral.s.iter().zip(&spectral.s_img) {
        let num = (a + b) * (a + b);
        if num == 0.0 {
            continue;
        }
        let den = (a + q) * (b + q);
        if den == 0.0 {
            return Ok(CrlbResult::exact(None));
        }
        sum += num / den;
    }
    if sum <= 0.0 {
        return Err(Error::Numerical("no bin carries information".into()));
    }
    Ok(CrlbResult { var_alpha: 2.0 / (spectral.n_ofdm as f64 * sum), status: BoundStatus::Finite, fim: None })
}

/// Post-imbalance SNR `sigma_r^2 / sigma_eta_r^2` with
/// `sigma_r^2 = sigma_d^2 / N_DFT |K1|^2 (1 + |alpha|^2)`.
pub fn post_imbalance_snr(sigma_d_sq: f64, n_dft: usize, params: &ImbalanceParams, sigma_eta_r_sq: f64) -> f64 {
    let sigma_r_sq = sigma_d_sq / n_dft as f64 * params.k1().norm_sqr() * (1.0 + params.alpha().norm_sqr());
    sigma_r_sq / sigma_eta_r_sq
}

/// Pre-imbalance SNR `(sigma_d^2 / N_DFT) / sigma_eta_s^2`.
pub fn pre_imbalance_snr(sigma_d_sq: f64, n_dft: usize, sigma_eta_s_sq: f64) -> f64 {
    sigma_d_sq / n_dft as f64 / sigma_eta_s_sq
}

/// Flat channel, mirror-symmetric allocation, no pre-imbalance noise:
/// `(1 + L_s / (xi_r N_DFT))^2 / (2 L_s N_OFDM)`.
pub fn closed_form_symmetric(l_s: usize, n_ofdm: usize, n_dft: usize, xi_r: f64) -> f64 {
    let t = 1.0 + l_s as f64 / (xi_r * n_dft as f64);
    t * t / (2.0 * l_s as f64 * n_ofdm as f64)
}

/// Flat channel, fully asymmetric allocation, no pre-imbalance noise:
/// `(1 + L_s / (xi_r N_DFT)) / (xi_r N_OFDM N_DFT)`.
pub fn closed_form_asymmetric(l_s: usize, n_ofdm: usize, n_dft: usize, xi_r: f64) -> f64 {
    let inv = 1.0 / xi_r;
    inv / (n_ofdm as f64 * n_dft as f64) * (1.0 + inv * l_s as f64 / n_dft as f64)
}
