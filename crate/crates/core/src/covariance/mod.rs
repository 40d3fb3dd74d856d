//! Second-order statistics of the received signal.
//!
//! [`spectral_covariances`] gives the per-bin variances and
//! pseudo-covariances of the prefix-free model, which is block diagonal in
//! the unitary DFT basis. The [`dense`] submodule builds the same quantities
//! as full matrices and serves as the reference implementation.

pub mod dense;

use num_complex::Complex64;

use crate::channel::{frequency_response, ChannelRealization};
use crate::dft::mirrored;
use crate::error::{invalid, Error, Result};
use crate::impairment::ImbalanceParams;
use crate::waveform::{AllocationPattern, OfdmConfig};

/// Noise variances before (`sigma_eta_s_sq`) and after (`sigma_eta_r_sq`)
/// the IQ imbalance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma_eta_s_sq: f64,
    pub sigma_eta_r_sq: f64,
}

impl NoiseSpec {
    pub fn new(sigma_eta_s_sq: f64, sigma_eta_r_sq: f64) -> Result<Self> {
        for v in [sigma_eta_s_sq, sigma_eta_r_sq] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("noise variance must be non-negative, got {v}"));
            }
        }
        Ok(Self { sigma_eta_s_sq, sigma_eta_r_sq })
    }

    pub fn noiseless() -> Self {
        Self { sigma_eta_s_sq: 0.0, sigma_eta_r_sq: 0.0 }
    }
}

/// Everything needed to evaluate the received-signal statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub config: OfdmConfig,
    pub alloc: AllocationPattern,
    pub channel: ChannelRealization,
    pub noise: NoiseSpec,
    pub params: ImbalanceParams,
}

impl ModelSpec {
    pub fn new(
        config: OfdmConfig,
        alloc: AllocationPattern,
        channel: ChannelRealization,
        noise: NoiseSpec,
        params: ImbalanceParams,
    ) -> Result<Self> {
        if alloc.n_dft() != config.n_dft {
            return Err(Error::DimensionMismatch { expected: config.n_dft, got: alloc.n_dft() });
        }
        if channel.len() > config.n_dft {
            return invalid(format!("channel length {} exceeds n_dft {}", channel.len(), config.n_dft));
        }
        Ok(Self { config, alloc, channel, noise, params })
    }
}

/// Diagonal of the per-symbol data covariance, `sigma_d_sq / L_s` on every
/// allocated bin.
pub fn cov_data(config: &OfdmConfig, alloc: &AllocationPattern) -> Result<Vec<f64>> {
    if alloc.n_dft() != config.n_dft {
        return Err(Error::DimensionMismatch { expected: config.n_dft, got: alloc.n_dft() });
    }
    let p = config.sigma_d_sq / alloc.l_s() as f64;
    Ok(alloc.indicator().into_iter().map(|v| v * p).collect())
}

/// Per-bin statistics of the prefix-free received signal.
///
/// For bin `n` and its mirror `m = (N - n) mod N` the augmented 2x2 block is
/// `[[r[n], gamma[n]], [conj(gamma[n]), r_img[n]]]` with `r_img[n] = r[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCovariances {
    pub n_ofdm: usize,
    pub k1: Complex64,
    pub alpha: Complex64,
    pub sigma_eta_r_sq: f64,
    /// Variance of the pre-imbalance signal per bin, noise included.
    pub s: Vec<f64>,
    pub s_img: Vec<f64>,
    /// Variance of the received signal per bin.
    pub r: Vec<f64>,
    pub r_img: Vec<f64>,
    /// Pseudo-covariance of the received signal per bin.
    pub gamma: Vec<Complex64>,
}

impl SpectralCovariances {
    /// Assembles the received statistics from a pre-imbalance spectrum.
    pub fn from_signal_spectrum(
        s: Vec<f64>,
        n_ofdm: usize,
        k1: Complex64,
        alpha: Complex64,
        sigma_eta_r_sq: f64,
    ) -> Self {
        let s_img = mirrored(&s);
        let g1 = k1.norm_sqr();
        let a2 = alpha.norm_sqr();
        let r: Vec<f64> = s.iter().zip(&s_img).map(|(a, b)| g1 * (a + a2 * b) + sigma_eta_r_sq).collect();
        let r_img = mirrored(&r);
        let gamma = s.iter().zip(&s_img).map(|(a, b)| alpha * g1 * (a + b)).collect();
        Self { n_ofdm, k1, alpha, sigma_eta_r_sq, s, s_img, r, r_img, gamma }
    }

    /// The same spectrum evaluated at `|K1| = 1`, `alpha = 0`.
    pub fn at_small_imbalance(&self) -> Self {
        Self::from_signal_spectrum(
            self.s.clone(),
            self.n_ofdm,
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            self.sigma_eta_r_sq,
        )
    }

    pub fn n_dft(&self) -> usize {
        self.s.len()
    }

    /// The augmented 2x2 covariance of bin `n`.
    pub fn bin_matrix(&self, n: usize) -> [[Complex64; 2]; 2] {
        [[Complex64::new(self.r[n], 0.0), self.gamma[n]], [self.gamma[n].conj(), Complex64::new(self.r_img[n], 0.0)]]
    }
}

/// Per-bin statistics of the prefix-free model.
pub fn spectral_covariances(model: &ModelSpec) -> Result<SpectralCovariances> {
    let cd = cov_data(&model.config, &model.alloc)?;
    let hf = frequency_response(&model.channel, model.config.n_dft)?;
    let s = cd.iter().zip(&hf).map(|(d, h)| h.norm_sqr() * d + model.noise.sigma_eta_s_sq).collect();
    Ok(SpectralCovariances::from_signal_spectrum(
        s,
        model.config.n_ofdm,
        model.params.k1(),
        model.params.alpha(),
        model.noise.sigma_eta_r_sq,
    ))
}

/// Draws a random model for cross-checking the bound routines.
///
/// The allocation is a random subset of the non-DC bins, the channel has up
/// to `max_taps` Rayleigh taps (normalised over the allocation), the data
/// power is one per sample, the pre- and post-imbalance SNRs are uniform in
/// 0..30 dB and 10..40 dB, and the image leakage is `ilr_db` with a uniform
/// phase.
pub fn random_model<R: rand::Rng + ?Sized>(
    rng: &mut R,
    n_dft: usize,
    l_cp: usize,
    n_ofdm: usize,
    max_taps: usize,
    ilr_db: f64,
) -> Result<ModelSpec> {
    use rand_distr::{Distribution, StandardNormal};

    let config = OfdmConfig::with_unit_sample_power(n_dft, l_cp, n_ofdm)?;
    let l_s = rng.random_range(1..n_dft);
    let mut bins: Vec<usize> = (1..n_dft).collect();
    for i in 0..l_s {
        let j = rng.random_range(i..bins.len());
        bins.swap(i, j);
    }
    let mut mask = vec![false; n_dft];
    bins[..l_s].iter().for_each(|&k| mask[k] = true);
    let alloc = AllocationPattern::from_mask(mask)?;

    let q = rng.random_range(1..=max_taps.max(1));
    let taps = (0..q)
        .map(|i| {
            let s = (0.5 * 0.5f64.powi(i as i32)).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * s, im * s)
        })
        .collect();
    let channel = crate::channel::normalize_power(&ChannelRealization::new(taps)?, &alloc)?;

    let p = config.sample_power();
    let noise = NoiseSpec::new(
        p * 10f64.powf(-rng.random_range(0.0..30.0) / 10.0),
        p * 10f64.powf(-rng.random_range(10.0..40.0) / 10.0),
    )?;
    let params = ImbalanceParams::from_target_ilr(ilr_db, rng)?;
    ModelSpec::new(config, alloc, channel, noise, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{make_allocation, AllocationKind};

    #[test]
    fn data_covariance_trace() {
        let cfg = OfdmConfig::new(64, 0, 1, 3.0).unwrap();
        let a = make_allocation(&AllocationKind::ContiguousLow, 10, 64).unwrap();
        let cd = cov_data(&cfg, &a).unwrap();
        assert!((cd.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        assert!((cd[1] - 0.3).abs() < 1e-15);
        assert_eq!(cd[0], 0.0);
    }

    #[test]
    fn zero_alpha_has_no_pseudo_covariance() {
        let cfg = OfdmConfig::new(16, 0, 2, 1.0).unwrap();
        let a = make_allocation(&AllocationKind::ContiguousLow, 5, 16).unwrap();
        let m = ModelSpec::new(
            cfg,
            a,
            ChannelRealization::flat(),
            NoiseSpec::new(0.01, 0.001).unwrap(),
            ImbalanceParams::ideal(),
        )
        .unwrap();
        let sc = spectral_covariances(&m).unwrap();
        assert!(sc.gamma.iter().all(|g| g.norm() == 0.0));
        assert!((sc.r[1] - (1.0 / 5.0 + 0.011)).abs() < 1e-15);
        assert!((sc.r_img[1] - 0.011).abs() < 1e-15);
    }
}
