//! OFDM frame construction: configuration, subcarrier allocations, square
//! QAM alphabets, symbol drawing and cyclic-prefix modulation.

use num_complex::Complex64;
use rand::Rng;

use crate::dft::{mirror, UnitaryDft};
use crate::error::{invalid, Error, Result};

/// Frame dimensions and data power.
///
/// `sigma_d_sq` is the expected data energy per OFDM symbol, spread evenly
/// over the allocated subcarriers. The average time-domain sample power is
/// therefore `sigma_d_sq / n_dft`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    pub n_dft: usize,
    pub l_cp: usize,
    pub n_ofdm: usize,
    pub sigma_d_sq: f64,
}

impl OfdmConfig {
    pub fn new(n_dft: usize, l_cp: usize, n_ofdm: usize, sigma_d_sq: f64) -> Result<Self> {
        if n_dft < 2 {
            return Err(Error::InvalidConfig(format!("n_dft must be at least 2, got {n_dft}")));
        }
        if l_cp >= n_dft {
            return Err(Error::InvalidConfig(format!("cyclic prefix {l_cp} must be shorter than n_dft {n_dft}")));
        }
        if n_ofdm == 0 {
            return Err(Error::InvalidConfig("n_ofdm must be positive".into()));
        }
        if !(sigma_d_sq.is_finite() && sigma_d_sq > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma_d_sq must be positive, got {sigma_d_sq}")));
        }
        Ok(Self { n_dft, l_cp, n_ofdm, sigma_d_sq })
    }

    /// Configuration whose average time-domain sample power is one.
    pub fn with_unit_sample_power(n_dft: usize, l_cp: usize, n_ofdm: usize) -> Result<Self> {
        Self::new(n_dft, l_cp, n_ofdm, n_dft as f64)
    }

    /// Samples per OFDM symbol including the prefix.
    pub fn n_sym(&self) -> usize {
        self.n_dft + self.l_cp
    }

    /// Samples per frame including prefixes.
    pub fn n_total(&self) -> usize {
        self.n_ofdm * self.n_sym()
    }

    /// Samples per frame once prefixes are dropped.
    pub fn n_useful(&self) -> usize {
        self.n_ofdm * self.n_dft
    }

    /// Average time-domain sample power of the data signal.
    pub fn sample_power(&self) -> f64 {
        self.sigma_d_sq / self.n_dft as f64
    }

    pub fn layout(&self) -> FrameLayout {
        FrameLayout { n_dft: self.n_dft, l_cp: self.l_cp, n_ofdm: self.n_ofdm }
    }
}

/// Shape of a time-domain frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub n_dft: usize,
    pub l_cp: usize,
    pub n_ofdm: usize,
}

impl FrameLayout {
    pub fn n_sym(&self) -> usize {
        self.n_dft + self.l_cp
    }

    pub fn n_total(&self) -> usize {
        self.n_ofdm * self.n_sym()
    }
}

/// How allocated subcarriers are chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AllocationKind {
    /// Bins `1..=l_s`.
    ContiguousLow,
    /// Bins `±1..=±l_s/2` around DC.
    SymmetricDc,
    /// Arbitrary mask of length `n_dft`.
    Custom(Vec<bool>),
}

/// Allocated subcarriers split into mirror-symmetric and asymmetric parts.
///
/// A bin is symmetric when its mirror `(N - k) mod N` is also allocated. DC
/// and, for even `N`, bin `N/2` are their own mirrors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationPattern {
    mask: Vec<bool>,
    sym_mask: Vec<bool>,
}

impl AllocationPattern {
    pub fn from_mask(mask: Vec<bool>) -> Result<Self> {
        let n = mask.len();
        if n < 2 {
            return invalid("allocation mask needs at least two bins");
        }
        if !mask.iter().any(|&b| b) {
            return invalid("allocation mask is empty");
        }
        let sym_mask = (0..n).map(|k| mask[k] && mask[mirror(k, n)]).collect();
        Ok(Self { mask, sym_mask })
    }

    pub fn n_dft(&self) -> usize {
        self.mask.len()
    }

    /// Number of allocated bins.
    pub fn l_s(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn sym_mask(&self) -> &[bool] {
        &self.sym_mask
    }

    pub fn asym_mask(&self) -> Vec<bool> {
        self.mask.iter().zip(&self.sym_mask).map(|(&a, &s)| a && !s).collect()
    }

    pub fn is_allocated(&self, k: usize) -> bool {
        self.mask[k]
    }

    pub fn symmetric_count(&self) -> usize {
        self.sym_mask.iter().filter(|&&b| b).count()
    }

    pub fn asymmetric_count(&self) -> usize {
        self.l_s() - self.symmetric_count()
    }

    /// Indicator vector with ones on allocated bins.
    pub fn indicator(&self) -> Vec<f64> {
        self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// Builds an allocation of `l_s` bins for an `n_dft`-point grid.
///
/// DC is never allocated by the contiguous and symmetric kinds. For
/// [`AllocationKind::Custom`] the mask is used as given and `l_s` must equal
/// its population count.
pub fn make_allocation(kind: &AllocationKind, l_s: usize, n_dft: usize) -> Result<AllocationPattern> {
    if l_s == 0 {
        return invalid("l_s must be positive");
    }
    let mut mask = vec![false; n_dft];
    match kind {
        AllocationKind::ContiguousLow => {
            if l_s > n_dft.saturating_sub(1) {
                return invalid(format!("l_s {l_s} exceeds {} non-DC bins", n_dft.saturating_sub(1)));
            }
            mask[1..=l_s].iter_mut().for_each(|b| *b = true);
        }
        AllocationKind::SymmetricDc => {
            if !l_s.is_multiple_of(2) {
                return invalid(format!("symmetric allocation needs an even l_s, got {l_s}"));
            }
            let half = l_s / 2;
            if half > (n_dft - 1) / 2 {
                return invalid(format!("l_s {l_s} does not fit symmetrically into {n_dft} bins"));
            }
            for k in 1..=half {
                mask[k] = true;
                mask[n_dft - k] = true;
            }
        }
        AllocationKind::Custom(m) => {
            if m.len() != n_dft {
                return Err(Error::DimensionMismatch { expected: n_dft, got: m.len() });
            }
            let count = m.iter().filter(|&&b| b).count();
            if count != l_s {
                return invalid(format!("custom mask has {count} bins, expected {l_s}"));
            }
            mask.copy_from_slice(m);
        }
    }
    AllocationPattern::from_mask(mask)
}

/// Unit-power square QAM constellation with Gray-coded axes.
#[derive(Debug, Clone, PartialEq)]
pub struct QamAlphabet {
    order: usize,
    points: Vec<Complex64>,
}

impl QamAlphabet {
    /// Square `M`-QAM for `M` in 4, 16, 64, 256, 1024.
    pub fn square(order: usize) -> Result<Self> {
        if ![4, 16, 64, 256, 1024].contains(&order) {
            return invalid(format!("unsupported QAM order {order}"));
        }
        let side = (order as f64).sqrt().round() as usize;
        let bits = side.trailing_zeros();
        let norm = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let level = |g: usize| {
            let mut b = g;
            let mut shift = g >> 1;
            while shift > 0 {
                b ^= shift;
                shift >>= 1;
            }
            (2 * b) as f64 - (side as f64 - 1.0)
        };
        let points = (0..order).map(|i| Complex64::new(level(i >> bits), level(i & (side - 1))) / norm).collect();
        Ok(Self { order, points })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// `E|d|^4 / (E|d|^2)^2 - 2` over the equiprobable alphabet.
    pub fn kurtosis(&self) -> f64 {
        let m2: f64 = self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order as f64;
        let m4: f64 = self.points.iter().map(|p| p.norm_sqr().powi(2)).sum::<f64>() / self.order as f64;
        m4 / (m2 * m2) - 2.0
    }

    /// Closed-form kurtosis of square QAM, `-(3/5)(M+1)/(M-1)`.
    pub fn kurtosis_closed_form(&self) -> f64 {
        let m = self.order as f64;
        -0.6 * (m + 1.0) / (m - 1.0)
    }
}

/// Frequency-domain symbols, one vector of `n_dft` bins per OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub n_dft: usize,
    pub symbols: Vec<Vec<Complex64>>,
}

/// Draws equiprobable QAM symbols on the allocated bins, scaled so that each
/// symbol carries `sigma_d_sq` expected energy.
pub fn draw_symbols<R: Rng + ?Sized>(
    config: &OfdmConfig,
    alloc: &AllocationPattern,
    alphabet: &QamAlphabet,
    rng: &mut R,
) -> Result<SymbolBlock> {
    if alloc.n_dft() != config.n_dft {
        return Err(Error::DimensionMismatch { expected: config.n_dft, got: alloc.n_dft() });
    }
    let amp = (config.sigma_d_sq / alloc.l_s() as f64).sqrt();
    let pts = alphabet.points();
    let symbols = (0..config.n_ofdm)
        .map(|_| {
            alloc
                .mask()
                .iter()
                .map(|&on| if on { pts[rng.random_range(0..pts.len())] * amp } else { Complex64::new(0.0, 0.0) })
                .collect()
        })
        .collect();
    Ok(SymbolBlock { n_dft: config.n_dft, symbols })
}

/// Time-domain samples of a frame together with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainFrame {
    pub layout: FrameLayout,
    pub samples: Vec<Complex64>,
}

impl TimeDomainFrame {
    pub fn new(layout: FrameLayout, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != layout.n_total() {
            return Err(Error::DimensionMismatch { expected: layout.n_total(), got: samples.len() });
        }
        Ok(Self { layout, samples })
    }

    /// Samples with each symbol's prefix dropped.
    pub fn without_cp(&self) -> Vec<Complex64> {
        let FrameLayout { n_dft, l_cp, .. } = self.layout;
        self.samples.chunks_exact(self.layout.n_sym()).flat_map(|sym| sym[l_cp..l_cp + n_dft].iter().copied()).collect()
    }

    /// The same frame with prefixes removed.
    pub fn cp_removed(&self) -> TimeDomainFrame {
        TimeDomainFrame { layout: FrameLayout { l_cp: 0, ..self.layout }, samples: self.without_cp() }
    }

    /// Mean sample power over the whole frame.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Inverse unitary DFT per symbol followed by cyclic-prefix insertion.
pub fn modulate(symbols: &SymbolBlock, config: &OfdmConfig) -> Result<TimeDomainFrame> {
    if symbols.n_dft != config.n_dft {
        return Err(Error::DimensionMismatch { expected: config.n_dft, got: symbols.n_dft });
    }
    if symbols.symbols.len() != config.n_ofdm {
        return Err(Error::DimensionMismatch { expected: config.n_ofdm, got: symbols.symbols.len() });
    }
    let dft = UnitaryDft::new(config.n_dft);
    let mut samples = Vec::with_capacity(config.n_total());
    let mut buf = vec![Complex64::new(0.0, 0.0); config.n_dft];
    for d in &symbols.symbols {
        if d.len() != config.n_dft {
            return Err(Error::DimensionMismatch { expected: config.n_dft, got: d.len() });
        }
        buf.copy_from_slice(d);
        dft.inverse(&mut buf);
        samples.extend_from_slice(&buf[config.n_dft - config.l_cp..]);
        samples.extend_from_slice(&buf);
    }
    TimeDomainFrame::new(config.layout(), samples)
}

/// Draws symbols and modulates them into one frame.
pub fn generate_frame<R: Rng + ?Sized>(
    config: &OfdmConfig,
    alloc: &AllocationPattern,
    alphabet: &QamAlphabet,
    rng: &mut R,
) -> Result<TimeDomainFrame> {
    modulate(&draw_symbols(config, alloc, alphabet, rng)?, config)
}

/// Sample kurtosis `mean|x|^4 / (mean|x|^2)^2 - 2`.
pub fn empirical_kurtosis(samples: &[Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return invalid("no samples");
    }
    let n = samples.len() as f64;
    let m2 = samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
    if m2 == 0.0 {
        return invalid("all-zero samples");
    }
    let m4 = samples.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() / n;
    Ok(m4 / (m2 * m2) - 2.0)
}

/// Kurtosis with a delta-method standard error, treating consecutive blocks of
/// `block_len` samples as independent draws.
pub fn blockwise_kurtosis(samples: &[Complex64], block_len: usize) -> Result<(f64, f64)> {
    if block_len == 0 || samples.len() < 2 * block_len {
        return invalid("need at least two full blocks");
    }
    let (a, c): (Vec<f64>, Vec<f64>) = samples
        .chunks_exact(block_len)
        .map(|b| (b.iter().map(|v| v.norm_sqr()).sum::<f64>(), b.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>()))
        .unzip();
    let nb = a.len() as f64;
    let ma = a.iter().sum::<f64>() / nb;
    let mc = c.iter().sum::<f64>() / nb;
    if ma == 0.0 {
        return invalid("all-zero samples");
    }
    let (mut saa, mut scc, mut sac) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(&c) {
        saa += (x - ma) * (x - ma);
        scc += (y - mc) * (y - mc);
        sac += (x - ma) * (y - mc);
    }
    let denom = nb - 1.0;
    let (saa, scc, sac) = (saa / denom, scc / denom, sac / denom);
    let l = block_len as f64;
    let ga = -2.0 * l * mc / ma.powi(3);
    let gc = l / (ma * ma);
    let var = (ga * ga * saa + gc * gc * scc + 2.0 * ga * gc * sac) / nb;
    Ok((l * mc / (ma * ma) - 2.0, var.max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn contiguous_low_is_asymmetric_below_half() {
        let a = make_allocation(&AllocationKind::ContiguousLow, 8, 64).unwrap();
        assert_eq!(a.l_s(), 8);
        assert!((1..=8).all(|k| a.is_allocated(k)));
        assert!(!a.is_allocated(0));
        assert_eq!(a.symmetric_count(), 0);
    }

    #[test]
    fn symmetric_dc_is_fully_symmetric() {
        let a = make_allocation(&AllocationKind::SymmetricDc, 8, 64).unwrap();
        assert_eq!(a.asymmetric_count(), 0);
        assert!(a.is_allocated(1) && a.is_allocated(63) && a.is_allocated(4) && a.is_allocated(60));
        assert!(!a.is_allocated(0) && !a.is_allocated(5));
    }

    #[test]
    fn allocation_rejects_oversize_and_odd() {
        assert!(make_allocation(&AllocationKind::ContiguousLow, 64, 64).is_err());
        assert!(make_allocation(&AllocationKind::SymmetricDc, 7, 64).is_err());
        assert!(make_allocation(&AllocationKind::ContiguousLow, 0, 64).is_err());
    }

    #[test]
    fn nyquist_bin_is_self_mirrored() {
        let a = make_allocation(&AllocationKind::ContiguousLow, 8, 16).unwrap();
        assert_eq!(a.symmetric_count(), 1);
        assert!(a.sym_mask()[8]);
    }

    #[test]
    fn qam_unit_power_and_kurtosis() {
        for m in [4, 16, 64, 256, 1024] {
            let q = QamAlphabet::square(m).unwrap();
            let p: f64 = q.points().iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
            assert!((p - 1.0).abs() < 1e-12);
            assert!((q.kurtosis() - q.kurtosis_closed_form()).abs() < 1e-12);
            let mut pts: Vec<(i64, i64)> =
                q.points().iter().map(|z| ((z.re * 1e9) as i64, (z.im * 1e9) as i64)).collect();
            pts.sort();
            pts.dedup();
            assert_eq!(pts.len(), m);
        }
        assert!((QamAlphabet::square(4).unwrap().kurtosis() + 1.0).abs() < 1e-12);
        assert!(QamAlphabet::square(8).is_err());
    }

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        let q = QamAlphabet::square(16).unwrap();
        let step = 2.0 / (10.0f64).sqrt();
        for (i, a) in q.points().iter().enumerate() {
            for (j, b) in q.points().iter().enumerate() {
                if ((a - b).norm() - step).abs() < 1e-9 {
                    assert_eq!((i ^ j).count_ones(), 1, "{i} {j}");
                }
            }
        }
    }

    #[test]
    fn single_bin_carries_full_energy() {
        let cfg = OfdmConfig::new(16, 0, 4, 2.5).unwrap();
        let a = make_allocation(&AllocationKind::ContiguousLow, 1, 16).unwrap();
        let q = QamAlphabet::square(4).unwrap();
        let s = draw_symbols(&cfg, &a, &q, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for sym in &s.symbols {
            assert!((sym[1].norm_sqr() - 2.5).abs() < 1e-12);
            assert_eq!(sym.iter().filter(|z| z.norm_sqr() > 0.0).count(), 1);
        }
    }

    #[test]
    fn prefix_repeats_tail() {
        let cfg = OfdmConfig::new(16, 4, 3, 1.0).unwrap();
        let a = make_allocation(&AllocationKind::ContiguousLow, 6, 16).unwrap();
        let q = QamAlphabet::square(16).unwrap();
        let f = generate_frame(&cfg, &a, &q, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(f.samples.len(), 60);
        for sym in f.samples.chunks_exact(20) {
            for i in 0..4 {
                assert!((sym[i] - sym[16 + i]).norm() < 1e-15);
            }
        }
        assert_eq!(f.without_cp().len(), 48);
    }

    #[test]
    fn modulate_all_zero_and_dimension_checks() {
        let cfg = OfdmConfig::new(8, 2, 2, 1.0).unwrap();
        let zeros = SymbolBlock { n_dft: 8, symbols: vec![vec![Complex64::new(0.0, 0.0); 8]; 2] };
        let f = modulate(&zeros, &cfg).unwrap();
        assert!(f.samples.iter().all(|z| z.norm() == 0.0));
        let bad = SymbolBlock { n_dft: 8, symbols: vec![vec![Complex64::new(0.0, 0.0); 8]; 3] };
        assert!(modulate(&bad, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OfdmConfig::new(1, 0, 1, 1.0).is_err());
        assert!(OfdmConfig::new(8, 8, 1, 1.0).is_err());
        assert!(OfdmConfig::new(8, 0, 0, 1.0).is_err());
        assert!(OfdmConfig::new(8, 0, 1, 0.0).is_err());
        let c = OfdmConfig::with_unit_sample_power(64, 16, 2).unwrap();
        assert_eq!(c.n_total(), 160);
        assert_eq!(c.sample_power(), 1.0);
    }

    #[test]
    fn empirical_kurtosis_of_constant_modulus() {
        let x: Vec<Complex64> = (0..100).map(|i| Complex64::from_polar(2.0, i as f64)).collect();
        assert!((empirical_kurtosis(&x).unwrap() + 1.0).abs() < 1e-12);
        assert!(empirical_kurtosis(&[]).is_err());
    }
}
