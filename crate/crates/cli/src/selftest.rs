//! Built-in oracle checks run by `iqcrlb selftest`.

use iqcrlb_core::channel::ChannelRealization;
use iqcrlb_core::covariance::dense::{cov_r_augmented_full, useful_indices, DenseLayout};
use iqcrlb_core::covariance::{random_model, spectral_covariances, ModelSpec, NoiseSpec};
use iqcrlb_core::crlb::{
    closed_form_asymmetric, closed_form_symmetric, crlb_simplified, fim_fast, fim_full, post_imbalance_snr,
};
use iqcrlb_core::impairment::ImbalanceParams;
use iqcrlb_core::waveform::{make_allocation, AllocationKind, OfdmConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Worst relative entry difference between the dense and per-bin Fisher
/// matrices over `count` random models.
pub fn fast_vs_full(seed: u64, count: usize) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..count {
        let n_dft = [8, 16, 32][i % 3];
        let ilr = rng.random_range(-40.0..-10.0);
        let m = random_model(&mut rng, n_dft, 0, 1 + i % 2, 4, ilr).map_err(|e| e.to_string())?;
        let full = fim_full(&m, DenseLayout::Circular).map_err(|e| e.to_string())?;
        let sc = spectral_covariances(&m).map_err(|e| e.to_string())?;
        let fast = fim_fast(&sc).map_err(|e| e.to_string())?;
        for r in 0..2 {
            for c in 0..2 {
                let (a, b) = (full.j[r][c], fast.j[r][c]);
                worst = worst.max((a - b).norm() / a.norm().max(b.norm()));
            }
        }
    }
    Ok(worst)
}

/// Worst relative gap between the small-imbalance bound and the flat-channel
/// closed forms, with the post-imbalance signal power scaled by
/// `sigma_r_scale` before forming the SNR.
pub fn closed_form_identity(seed: u64, count: usize, sigma_r_scale: f64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let n_dft = [16, 64, 256][rng.random_range(0..3)];
        let n_ofdm = rng.random_range(1..12);
        let sigma_d_sq = 10f64.powf(rng.random_range(-1.0..3.0));
        let q = sigma_d_sq / n_dft as f64 * 10f64.powf(-rng.random_range(-10.0..40.0) / 10.0);
        let xi_r = post_imbalance_snr(sigma_d_sq, n_dft, &ImbalanceParams::ideal(), q) * sigma_r_scale;
        for symmetric in [true, false] {
            let (kind, l_s) = if symmetric {
                (AllocationKind::SymmetricDc, 2 * rng.random_range(1..n_dft / 2))
            } else {
                (AllocationKind::ContiguousLow, rng.random_range(1..n_dft / 2))
            };
            let cfg = OfdmConfig::new(n_dft, 0, n_ofdm, sigma_d_sq).map_err(|e| e.to_string())?;
            let alloc = make_allocation(&kind, l_s, n_dft).map_err(|e| e.to_string())?;
            let noise = NoiseSpec::new(0.0, q).map_err(|e| e.to_string())?;
            let m = ModelSpec::new(cfg, alloc, ChannelRealization::flat(), noise, ImbalanceParams::ideal())
                .map_err(|e| e.to_string())?;
            let sc = spectral_covariances(&m).map_err(|e| e.to_string())?;
            let simp = crlb_simplified(&sc).map_err(|e| e.to_string())?.var_alpha;
            let closed = if symmetric {
                closed_form_symmetric(l_s, n_ofdm, n_dft, xi_r)
            } else {
                closed_form_asymmetric(l_s, n_ofdm, n_dft, xi_r)
            };
            worst = worst.max((simp / closed - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Largest entry difference between the prefix-dropped full model and the
/// circular model.
pub fn prefix_drop(seed: u64, count: usize) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let m0 = random_model(&mut rng, 16, 4, 2, 4, -20.0).map_err(|e| e.to_string())?;
        let full = cov_r_augmented_full(&m0, DenseLayout::WithCp).map_err(|e| e.to_string())?;
        let circ = cov_r_augmented_full(&m0, DenseLayout::Circular).map_err(|e| e.to_string())?;
        let dropped = full.principal(&useful_indices(&m0));
        let scale = circ.c.norm();
        worst = worst.max(((dropped.c - circ.c).norm() + (dropped.gamma - circ.gamma).norm()) / scale);
    }
    Ok(worst)
}

pub fn run_all(seed: u64, models: usize) -> Vec<Check> {
    let mut out = Vec::new();
    let mut push = |name, res: Result<f64, String>, ok: &dyn Fn(f64) -> bool, tol: &str| {
        out.push(match res {
            Ok(v) => Check { name, passed: ok(v), detail: format!("worst {v:.3e} ({tol})") },
            Err(e) => Check { name, passed: false, detail: e },
        })
    };
    push("fim_fast_vs_full", fast_vs_full(seed, models), &|v| v < 1e-8, "limit 1e-8");
    push("closed_form_identity", closed_form_identity(seed, models, 1.0), &|v| v < 1e-10, "limit 1e-10");
    push(
        "closed_form_mutation_detected",
        closed_form_identity(seed, models, 1.01),
        &|v| v >= 1e-10,
        "perturbed convention must exceed 1e-10",
    );
    push("prefix_drop_is_circular", prefix_drop(seed, models.min(10)), &|v| v < 1e-12, "limit 1e-12");
    out
}
