//! Dense-matrix construction of the received-signal covariance.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{cov_data, ModelSpec};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest frame length accepted by the dense routines.
pub const MAX_DENSE_SAMPLES: usize = 1024;

/// Which samples the dense model describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseLayout {
    /// Every transmitted sample including prefixes, with the channel acting
    /// as a linear convolution over the whole frame.
    WithCp,
    /// Prefix-free symbols with the channel acting circularly on each one.
    Circular,
}

/// Unitary DFT matrix.
pub fn dft_matrix(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |k, l| {
        let ang = -2.0 * std::f64::consts::PI * ((k * l) % n) as f64 / n as f64;
        Complex64::from_polar(scale, ang)
    })
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn block_diag(block: &CMatrix, count: usize) -> CMatrix {
    let b = block.nrows();
    let mut out = CMatrix::from_element(b * count, b * count, zero());
    for i in 0..count {
        out.view_mut((i * b, i * b), (b, b)).copy_from(block);
    }
    out
}

/// Covariance of one prefix-free symbol, `F^H C_d F`.
fn symbol_cov(model: &ModelSpec) -> Result<CMatrix> {
    let n = model.config.n_dft;
    let f = dft_matrix(n);
    let cd = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        cov_data(&model.config, &model.alloc)?.into_iter().map(|v| Complex64::new(v, 0.0)),
    ));
    Ok(f.adjoint() * cd * f)
}

/// Covariance of the transmitted frame before the channel.
pub fn cov_x(model: &ModelSpec, layout: DenseLayout) -> Result<CMatrix> {
    let c = &model.config;
    let inner = symbol_cov(model)?;
    let block = match layout {
        DenseLayout::Circular => inner,
        DenseLayout::WithCp => {
            let cp = CMatrix::from_fn(c.n_sym(), c.n_dft, |i, j| {
                let src = if i < c.l_cp { c.n_dft - c.l_cp + i } else { i - c.l_cp };
                if src == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    zero()
                }
            });
            &cp * inner * cp.adjoint()
        }
    };
    Ok(block_diag(&block, c.n_ofdm))
}

fn frame_len(model: &ModelSpec, layout: DenseLayout) -> usize {
    match layout {
        DenseLayout::WithCp => model.config.n_total(),
        DenseLayout::Circular => model.config.n_useful(),
    }
}

/// Channel matrix: lower-triangular Toeplitz over the frame, or circulant
/// per symbol.
pub fn channel_matrix(model: &ModelSpec, layout: DenseLayout) -> CMatrix {
    let h = model.channel.taps();
    match layout {
        DenseLayout::WithCp => {
            let n = model.config.n_total();
            CMatrix::from_fn(n, n, |i, j| if i >= j && i - j < h.len() { h[i - j] } else { zero() })
        }
        DenseLayout::Circular => {
            let n = model.config.n_dft;
            let circ = CMatrix::from_fn(n, n, |i, j| {
                let d = (i + n - j) % n;
                if d < h.len() {
                    h[d]
                } else {
                    zero()
                }
            });
            block_diag(&circ, model.config.n_ofdm)
        }
    }
}

fn check_size(model: &ModelSpec, layout: DenseLayout) -> Result<usize> {
    let n = frame_len(model, layout);
    if n > MAX_DENSE_SAMPLES {
        return Err(Error::TooLarge { size: n, limit: MAX_DENSE_SAMPLES });
    }
    Ok(n)
}

/// Covariance of the pre-imbalance signal, noise included.
pub fn cov_s(model: &ModelSpec, layout: DenseLayout) -> Result<CMatrix> {
    let n = check_size(model, layout)?;
    let h = channel_matrix(model, layout);
    let mut cs = &h * cov_x(model, layout)? * h.adjoint();
    for i in 0..n {
        cs[(i, i)] += model.noise.sigma_eta_s_sq;
    }
    Ok(cs)
}

/// Covariance and pseudo-covariance of a complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCovariance {
    pub c: CMatrix,
    pub gamma: CMatrix,
}

impl AugmentedCovariance {
    /// `[[C, Gamma], [conj(Gamma), conj(C)]]`.
    pub fn assemble(&self) -> CMatrix {
        let n = self.c.nrows();
        let mut out = CMatrix::from_element(2 * n, 2 * n, zero());
        out.view_mut((0, 0), (n, n)).copy_from(&self.c);
        out.view_mut((0, n), (n, n)).copy_from(&self.gamma);
        out.view_mut((n, 0), (n, n)).copy_from(&self.gamma.map(|z| z.conj()));
        out.view_mut((n, n), (n, n)).copy_from(&self.c.map(|z| z.conj()));
        out
    }

    /// Restriction to the samples listed in `idx`.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let pick = |m: &CMatrix| CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
        Self { c: pick(&self.c), gamma: pick(&self.gamma) }
    }
}

/// Indices of the non-prefix samples of a frame.
pub fn useful_indices(model: &ModelSpec) -> Vec<usize> {
    let c = &model.config;
    (0..c.n_ofdm).flat_map(|s| (0..c.n_dft).map(move |i| s * c.n_sym() + c.l_cp + i)).collect()
}

/// Received-signal statistics after imbalance and post-imbalance noise.
pub fn cov_r_augmented_full(model: &ModelSpec, layout: DenseLayout) -> Result<AugmentedCovariance> {
    let cs = cov_s(model, layout)?;
    Ok(received_from_cov_s(&cs, model))
}

pub(crate) fn received_from_cov_s(cs: &CMatrix, model: &ModelSpec) -> AugmentedCovariance {
    let n = cs.nrows();
    let k1 = model.params.k1();
    let alpha = model.params.alpha();
    let g1 = k1.norm_sqr();
    let cs_conj = cs.map(|z| z.conj());
    let mut c = (cs + &cs_conj * Complex64::new(alpha.norm_sqr(), 0.0)) * Complex64::new(g1, 0.0);
    for i in 0..n {
        c[(i, i)] += model.noise.sigma_eta_r_sq;
    }
    let gamma = (cs + &cs_conj) * (alpha * g1);
    AugmentedCovariance { c, gamma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelRealization;
    use crate::covariance::{spectral_covariances, NoiseSpec};
    use crate::impairment::ImbalanceParams;
    use crate::waveform::{make_allocation, AllocationKind, OfdmConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model(l_cp: usize, n_ofdm: usize) -> ModelSpec {
        let cfg = OfdmConfig::new(16, l_cp, n_ofdm, 16.0).unwrap();
        let alloc = make_allocation(&AllocationKind::ContiguousLow, 11, 16).unwrap();
        let h = ChannelRealization::new(vec![c(0.9, 0.1), c(-0.3, 0.25), c(0.1, -0.05)]).unwrap();
        ModelSpec::new(cfg, alloc, h, NoiseSpec::new(0.02, 0.003).unwrap(), ImbalanceParams::new(0.07, 0.12).unwrap())
            .unwrap()
    }

    #[test]
    fn dft_matrix_is_unitary() {
        let f = dft_matrix(12);
        let id = &f * f.adjoint();
        for i in 0..12 {
            for j in 0..12 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - c(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn prefix_drop_matches_circular_model() {
        let m = model(4, 2);
        let full = cov_r_augmented_full(&m, DenseLayout::WithCp).unwrap();
        let circ = cov_r_augmented_full(&m, DenseLayout::Circular).unwrap();
        let dropped = full.principal(&useful_indices(&m));
        assert!((dropped.c - circ.c).norm() < 1e-12);
        assert!((dropped.gamma - circ.gamma).norm() < 1e-12);
    }

    #[test]
    fn dft_conjugation_gives_spectral_statistics() {
        let m = model(0, 1);
        let aug = cov_r_augmented_full(&m, DenseLayout::Circular).unwrap();
        let sc = spectral_covariances(&m).unwrap();
        let f = dft_matrix(16);
        let cf = &f * &aug.c * f.adjoint();
        let gf = &f * &aug.gamma * f.adjoint();
        for i in 0..16 {
            for j in 0..16 {
                let (ec, eg) = if i == j { (c(sc.r[i], 0.0), sc.gamma[i]) } else { (c(0.0, 0.0), c(0.0, 0.0)) };
                assert!((cf[(i, j)] - ec).norm() < 1e-12, "C[{i},{j}]");
                assert!((gf[(i, j)] - eg).norm() < 1e-12, "G[{i},{j}]");
            }
        }
    }

    #[test]
    fn augmented_is_hermitian_psd() {
        let m = model(3, 2);
        let a = cov_r_augmented_full(&m, DenseLayout::WithCp).unwrap().assemble();
        assert!((&a - a.adjoint()).norm() < 1e-12);
        let eig = a.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn size_guard() {
        let cfg = OfdmConfig::new(512, 0, 3, 1.0).unwrap();
        let alloc = make_allocation(&AllocationKind::ContiguousLow, 11, 512).unwrap();
        let m =
            ModelSpec::new(cfg, alloc, ChannelRealization::flat(), NoiseSpec::noiseless(), ImbalanceParams::ideal())
                .unwrap();
        assert!(matches!(cov_s(&m, DenseLayout::Circular), Err(Error::TooLarge { .. })));
    }
}
