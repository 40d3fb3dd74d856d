//! Multipath channels: tapped-delay-line profiles, random realizations,
//! power normalisation, time-domain filtering and per-bin responses.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::waveform::{AllocationPattern, TimeDomainFrame};

const TDLB100_TABLE: &str = include_str!("../data/tdlb100.csv");

/// Small-scale fading law of one tap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    Rayleigh,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay_s: f64,
    pub power_db: f64,
    pub fading: Fading,
}

/// Power delay profile of a tapped-delay-line channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    pub name: String,
    pub taps: Vec<Tap>,
}

impl DelayProfile {
    pub fn new(name: impl Into<String>, taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return invalid("delay profile has no taps");
        }
        if taps.iter().any(|t| !(t.delay_s.is_finite() && t.delay_s >= 0.0 && t.power_db.is_finite())) {
            return invalid("tap delays must be finite and non-negative, powers finite");
        }
        Ok(Self { name: name.into(), taps })
    }

    /// Parses `delay_ns,power_db,fading` rows. Lines starting with `#` and a
    /// header row are skipped.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut taps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("delay") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse { line: i + 1, msg: format!("expected 3 fields, got {}", fields.len()) });
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: format!("{s:?}: {e}") });
            let fading = match fields[2].to_ascii_lowercase().as_str() {
                "rayleigh" => Fading::Rayleigh,
                "fixed" | "los" => Fading::Fixed,
                other => return Err(Error::Parse { line: i + 1, msg: format!("unknown fading {other:?}") }),
            };
            taps.push(Tap { delay_s: num(fields[0])? * 1e-9, power_db: num(fields[1])?, fading });
        }
        Self::new(name, taps)
    }

    /// The TDLB100 profile shipped with the crate.
    pub fn tdlb100() -> Self {
        Self::parse("TDLB100", TDLB100_TABLE).expect("bundled TDLB100 table is well formed")
    }

    /// Synthetic Rayleigh profile with `n_taps` taps spaced `spacing_s` apart
    /// and power decaying by `decay_db` per tap.
    pub fn exponential(n_taps: usize, spacing_s: f64, decay_db: f64) -> Result<Self> {
        if n_taps == 0 {
            return invalid("exponential profile needs at least one tap");
        }
        let taps = (0..n_taps)
            .map(|i| Tap { delay_s: i as f64 * spacing_s, power_db: -decay_db * i as f64, fading: Fading::Rayleigh })
            .collect();
        Self::new(format!("exponential-{n_taps}"), taps)
    }

    /// Number of discrete taps after quantising delays at `sample_rate`.
    pub fn discrete_len(&self, sample_rate: f64) -> usize {
        self.taps.iter().map(|t| (t.delay_s * sample_rate).round() as usize).max().unwrap_or(0) + 1
    }
}

/// Discrete-time impulse response `h[0..Q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    taps: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return invalid("channel needs at least one tap");
        }
        if taps.iter().any(|t| !(t.re.is_finite() && t.im.is_finite())) {
            return invalid("channel taps must be finite");
        }
        Ok(Self { taps })
    }

    /// Frequency-flat unit channel.
    pub fn flat() -> Self {
        Self { taps: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// Draws one channel from a profile. Tap delays are rounded to the nearest
/// sample at `sample_rate`, and taps landing on the same sample add up.
pub fn realize_tdl<R: Rng + ?Sized>(
    profile: &DelayProfile,
    sample_rate: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return invalid(format!("sample rate must be positive, got {sample_rate}"));
    }
    let mut h = vec![Complex64::new(0.0, 0.0); profile.discrete_len(sample_rate)];
    for tap in &profile.taps {
        let idx = (tap.delay_s * sample_rate).round() as usize;
        let power = 10f64.powf(tap.power_db / 10.0);
        h[idx] += match tap.fading {
            Fading::Fixed => Complex64::new(power.sqrt(), 0.0),
            Fading::Rayleigh => {
                let s = (power / 2.0).sqrt();
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re * s, im * s)
            }
        };
    }
    ChannelRealization::new(h)
}

/// Per-bin channel response `H[k] = sum_q h[q] exp(-j 2 pi k q / N)`.
///
/// These are the eigenvalues of the circulant matrix that acts on each
/// prefix-free symbol, so the unitary DFT diagonalises that matrix into
/// `diag(H)`.
pub fn frequency_response(channel: &ChannelRealization, n_dft: usize) -> Result<Vec<Complex64>> {
    if channel.len() > n_dft {
        return invalid(format!("channel length {} exceeds n_dft {n_dft}", channel.len()));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n_dft];
    buf[..channel.len()].copy_from_slice(channel.taps());
    rustfft::FftPlanner::new().plan_fft_forward(n_dft).process(&mut buf);
    Ok(buf)
}

/// Rescales the channel so that its mean power gain over the allocated bins
/// is one.
pub fn normalize_power(channel: &ChannelRealization, alloc: &AllocationPattern) -> Result<ChannelRealization> {
    let hf = frequency_response(channel, alloc.n_dft())?;
    let gain: f64 =
        hf.iter().zip(alloc.mask()).filter(|(_, &on)| on).map(|(h, _)| h.norm_sqr()).sum::<f64>() / alloc.l_s() as f64;
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(Error::Numerical("channel has no energy on the allocated bins".into()));
    }
    let scale = 1.0 / gain.sqrt();
    ChannelRealization::new(channel.taps().iter().map(|t| t * scale).collect())
}

/// Causal linear convolution over the whole frame, truncated to its length.
pub fn apply_linear(channel: &ChannelRealization, frame: &TimeDomainFrame) -> Result<TimeDomainFrame> {
    let l_cp = frame.layout.l_cp;
    if l_cp > 0 && channel.len() >= l_cp {
        return invalid(format!("channel length {} must be shorter than the prefix {l_cp}", channel.len()));
    }
    let x = &frame.samples;
    let h = channel.taps();
    let y = (0..x.len())
        .map(|n| h.iter().enumerate().take(n + 1).fold(Complex64::new(0.0, 0.0), |acc, (q, hq)| acc + hq * x[n - q]))
        .collect();
    TimeDomainFrame::new(frame.layout, y)
}
