//! Blind moment-based estimation and compensation of the image-rejection
//! coefficient.

use num_complex::Complex64;

use crate::dft::UnitaryDft;
use crate::error::{invalid, Result};
use crate::waveform::{AllocationPattern, FrameLayout, TimeDomainFrame};

/// Moment-based estimate `c2 / (p + sqrt(p^2 - |c2|^2))` with
/// `c2 = mean(r^2)` and `p = mean(|r|^2)`.
///
/// Exact in expectation for a proper input signal. The square-root argument
/// is clamped at zero when sampling noise drives it negative.
pub fn mbe_estimate(samples: &[Complex64]) -> Result<Complex64> {
    if samples.is_empty() {
        return invalid("no samples to estimate from");
    }
    let n = samples.len() as f64;
    let c2 = samples.iter().map(|r| r * r).sum::<Complex64>() / n;
    let p = samples.iter().map(|r| r.norm_sqr()).sum::<f64>() / n;
    if !(p > 0.0 && p.is_finite()) {
        return invalid("input power is zero or not finite");
    }
    Ok(c2 / (p + (p * p - c2.norm_sqr()).max(0.0).sqrt()))
}

/// Removes the mirror-symmetric bins of every symbol.
///
/// Each prefix is dropped, the symbol is taken to the frequency domain, the
/// symmetric bins are zeroed and the result is transformed back. The output
/// has no prefix.
pub fn prefilter_symmetric(frame: &TimeDomainFrame, alloc: &AllocationPattern) -> Result<TimeDomainFrame> {
    let FrameLayout { n_dft, n_ofdm, .. } = frame.layout;
    if alloc.n_dft() != n_dft {
        return invalid(format!("allocation has {} bins, frame uses {n_dft}", alloc.n_dft()));
    }
    let dft = UnitaryDft::new(n_dft);
    let mut samples = frame.without_cp();
    for sym in samples.chunks_exact_mut(n_dft) {
        dft.forward(sym);
        for (v, &drop) in sym.iter_mut().zip(alloc.sym_mask()) {
            if drop {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        dft.inverse(sym);
    }
    TimeDomainFrame::new(FrameLayout { n_dft, l_cp: 0, n_ofdm }, samples)
}

/// Estimator variant used in simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Moment estimate on the prefix-free samples.
    Plain,
    /// Moment estimate after [`prefilter_symmetric`].
    Prefiltered,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Plain => "mbe",
            Policy::Prefiltered => "mbe_prefiltered",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub alpha_hat: Complex64,
    pub n_samples_used: usize,
    pub prefiltered: bool,
    pub warning: Option<String>,
}

/// Runs the moment estimator under the given policy.
pub fn estimate_with_policy(
    frame: &TimeDomainFrame,
    alloc: &AllocationPattern,
    policy: Policy,
) -> Result<EstimationReport> {
    match policy {
        Policy::Plain => {
            let samples = frame.without_cp();
            Ok(EstimationReport {
                alpha_hat: mbe_estimate(&samples)?,
                n_samples_used: samples.len(),
                prefiltered: false,
                warning: None,
            })
        }
        Policy::Prefiltered => {
            let warning = (alloc.asymmetric_count() == 0)
                .then(|| "every allocated bin is mirror-symmetric; only noise remains after prefiltering".to_string());
            let filtered = prefilter_symmetric(frame, alloc)?;
            Ok(EstimationReport {
                alpha_hat: mbe_estimate(&filtered.samples)?,
                n_samples_used: filtered.samples.len(),
                prefiltered: true,
                warning,
            })
        }
    }
}

/// Removes the estimated image, `r - alpha_hat conj(r)`.
pub fn compensate(frame: &TimeDomainFrame, alpha_hat: Complex64) -> TimeDomainFrame {
    TimeDomainFrame { layout: frame.layout, samples: frame.samples.iter().map(|r| r - alpha_hat * r.conj()).collect() }
}

/// Image leakage left after compensating with `alpha_hat`, in dB.
///
/// The exact value is `|alpha - alpha_hat|^2 / |1 - alpha_hat conj(alpha)|^2`;
/// the approximate one drops the denominator.
pub fn residual_ilr_db(alpha: Complex64, alpha_hat: Complex64, exact: bool) -> f64 {
    let num = (alpha - alpha_hat).norm_sqr();
    let v = if exact { num / (1.0 - alpha_hat * alpha.conj()).norm_sqr() } else { num };
    crate::to_db(v)
}
