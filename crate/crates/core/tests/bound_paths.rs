use iqcrlb_core::channel::ChannelRealization;
use iqcrlb_core::covariance::dense::DenseLayout;
use iqcrlb_core::covariance::{random_model, spectral_covariances, ModelSpec, NoiseSpec};
use iqcrlb_core::crlb::{
    closed_form_asymmetric, closed_form_symmetric, crlb_alpha, crlb_simplified, fim_fast, fim_full, post_imbalance_snr,
    BoundStatus, Fim2x2,
};
use iqcrlb_core::impairment::ImbalanceParams;
use iqcrlb_core::waveform::{make_allocation, AllocationKind, OfdmConfig};
use iqcrlb_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_rel(a: &Fim2x2, b: &Fim2x2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let (x, y) = (a.j[i][j], b.j[i][j]);
            worst = worst.max((x - y).norm() / x.norm().max(y.norm()));
        }
    }
    worst
}

#[test]
fn fast_and_dense_fisher_agree_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for i in 0..60 {
        let n_dft = [8, 16, 32][i % 3];
        let ilr = rng.random_range(-40.0..-10.0);
        let m = random_model(&mut rng, n_dft, 0, 1 + i % 2, 4, ilr).unwrap();
        let full = fim_full(&m, DenseLayout::Circular).unwrap();
        let fast = fim_fast(&spectral_covariances(&m).unwrap()).unwrap();
        worst = worst.max(max_rel(&full, &fast));
    }
    assert!(worst < 1e-8, "worst relative entry error {worst:e}");
}

fn flat_model(
    kind: AllocationKind,
    l_s: usize,
    n_dft: usize,
    n_ofdm: usize,
    noise: NoiseSpec,
    alpha: Complex64,
) -> ModelSpec {
    let cfg = OfdmConfig::new(n_dft, 0, n_ofdm, 1.0).unwrap();
    let alloc = make_allocation(&kind, l_s, n_dft).unwrap();
    ModelSpec::new(cfg, alloc, ChannelRealization::flat(), noise, ImbalanceParams::from_alpha(alpha).unwrap()).unwrap()
}

#[test]
fn noiseless_asymmetric_bound_is_zero_on_both_paths() {
    let m = flat_model(AllocationKind::ContiguousLow, 5, 16, 1, NoiseSpec::noiseless(), Complex64::new(0.01, 0.02));
    let fast = crlb_alpha(&fim_fast(&spectral_covariances(&m).unwrap()).unwrap()).unwrap();
    let full = crlb_alpha(&fim_full(&m, DenseLayout::Circular).unwrap()).unwrap();
    assert_eq!(fast.status, BoundStatus::Exact);
    assert_eq!(full.status, BoundStatus::Exact);
    assert_eq!(fast.var_alpha, 0.0);
}

#[test]
fn noiseless_symmetric_partial_allocation_uses_range() {
    let alpha = Complex64::from_polar(0.01, 0.7);
    let m = flat_model(AllocationKind::SymmetricDc, 6, 16, 2, NoiseSpec::noiseless(), alpha);
    let fast = crlb_alpha(&fim_fast(&spectral_covariances(&m).unwrap()).unwrap()).unwrap();
    let full = crlb_alpha(&fim_full(&m, DenseLayout::Circular).unwrap()).unwrap();
    assert_eq!(fast.status, BoundStatus::Finite);
    assert!((fast.var_alpha / full.var_alpha - 1.0).abs() < 1e-8);
    assert!((fast.var_alpha * 2.0 * 6.0 * 2.0 - 1.0).abs() < 1e-3);
}

#[test]
fn full_allocation_noiseless_dense_bound() {
    let mask = AllocationKind::Custom(vec![true; 16]);
    let m = flat_model(mask, 16, 16, 3, NoiseSpec::noiseless(), Complex64::from_polar(0.01, -1.2));
    let full = crlb_alpha(&fim_full(&m, DenseLayout::Circular).unwrap()).unwrap();
    let expect = 1.0 / (2.0 * 16.0 * 3.0);
    assert!((full.var_alpha / expect - 1.0).abs() < 0.01, "{} vs {expect}", full.var_alpha);
}

#[test]
fn closed_forms_match_simplified_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let n_dft = [16, 64, 256][rng.random_range(0..3)];
        let n_ofdm = rng.random_range(1..12);
        let sigma_d_sq = 10f64.powf(rng.random_range(-1.0..3.0));
        let q = sigma_d_sq / n_dft as f64 * 10f64.powf(-rng.random_range(-10.0..40.0) / 10.0);
        let noise = NoiseSpec::new(0.0, q).unwrap();
        let xi_r = post_imbalance_snr(sigma_d_sq, n_dft, &ImbalanceParams::ideal(), q);
        for sym in [true, false] {
            let (kind, l_s) = if sym {
                let l = 2 * rng.random_range(1..n_dft / 2);
                (AllocationKind::SymmetricDc, l)
            } else {
                (AllocationKind::ContiguousLow, rng.random_range(1..n_dft / 2))
            };
            let cfg = OfdmConfig::new(n_dft, 0, n_ofdm, sigma_d_sq).unwrap();
            let alloc = make_allocation(&kind, l_s, n_dft).unwrap();
            let m = ModelSpec::new(cfg, alloc, ChannelRealization::flat(), noise, ImbalanceParams::ideal()).unwrap();
            let simp = crlb_simplified(&spectral_covariances(&m).unwrap()).unwrap().var_alpha;
            let closed = if sym {
                closed_form_symmetric(l_s, n_ofdm, n_dft, xi_r)
            } else {
                closed_form_asymmetric(l_s, n_ofdm, n_dft, xi_r)
            };
            assert!((simp / closed - 1.0).abs() < 1e-10, "sym={sym} {simp} {closed}");
        }
    }
}
