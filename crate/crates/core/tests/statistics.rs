//! Monte Carlo checks of the generators and estimators.

use iqcrlb_core::channel::{normalize_power, ChannelRealization};
use iqcrlb_core::covariance::{spectral_covariances, ModelSpec, NoiseSpec};
use iqcrlb_core::crlb::{crlb_alpha, fim_fast};
use iqcrlb_core::estimators::Policy;
use iqcrlb_core::impairment::ImbalanceParams;
use iqcrlb_core::montecarlo::{run_once, ChannelModel, Scenario};
use iqcrlb_core::waveform::{draw_symbols, make_allocation, AllocationKind, OfdmConfig, QamAlphabet};
use iqcrlb_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn symbol_moments_match_data_covariance() {
    let n = 16;
    let cfg = OfdmConfig::new(n, 0, 1, 3.0).unwrap();
    let alloc =
        make_allocation(&AllocationKind::Custom((0..n).map(|k| [1, 2, 5, 11, 15].contains(&k)).collect()), 5, n)
            .unwrap();
    let alphabet = QamAlphabet::square(16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 100_000;
    let mut p = vec![0.0; n];
    let mut p_sq = vec![0.0; n];
    let mut c2 = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..draws {
        let d = &draw_symbols(&cfg, &alloc, &alphabet, &mut rng).unwrap().symbols[0];
        for k in 0..n {
            p[k] += d[k].norm_sqr();
            p_sq[k] += d[k].norm_sqr().powi(2);
            c2[k] += d[k] * d[k];
        }
    }
    let f = draws as f64;
    let expect = 3.0 / 5.0;
    for k in 0..n {
        let mean = p[k] / f;
        if !alloc.is_allocated(k) {
            assert_eq!(mean, 0.0);
            continue;
        }
        let se = ((p_sq[k] / f - mean * mean) / f).sqrt();
        assert!((mean - expect).abs() < 4.0 * se, "bin {k}: {mean} vs {expect}");
        // |d^2| = |d|^2, so the same spread bounds each part of the pseudo-variance.
        let se_c2 = (p_sq[k] / f / f).sqrt();
        assert!((c2[k] / f).norm() < 4.0 * se_c2, "bin {k}: pseudo-variance {}", c2[k] / f);
    }
}

#[test]
fn imbalance_phase_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 4000;
    let mut u: Vec<f64> = (0..n)
        .map(|_| {
            let a = ImbalanceParams::from_target_ilr(-25.0, &mut rng).unwrap().alpha();
            (a.arg() + std::f64::consts::PI) / std::f64::consts::TAU
        })
        .collect();
    u.sort_by(f64::total_cmp);
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - x).abs()))
        .fold(0.0, f64::max);
    // 1% critical value of the Kolmogorov-Smirnov statistic.
    assert!(d < 1.63 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn estimator_error_shrinks_with_frame_length() {
    let runs = 600;
    let counts = [2usize, 8, 32];
    let mse: Vec<f64> = counts
        .iter()
        .map(|&n_ofdm| {
            let scenario = Scenario {
                config: OfdmConfig::with_unit_sample_power(64, 0, n_ofdm).unwrap(),
                modulation_order: 16,
                alloc_kind: AllocationKind::ContiguousLow,
                l_s: 20,
                channel: ChannelModel::Flat,
                noise: NoiseSpec::new(1e-2, 1e-3).unwrap(),
                ilr_db: -20.0,
            };
            (0..runs)
                .map(|i| {
                    let rec = run_once(&scenario, &[Policy::Plain], &[], 5, i).unwrap();
                    (rec.estimates[0].unwrap() - rec.alpha).norm_sqr()
                })
                .sum::<f64>()
                / runs as f64
        })
        .collect();
    let x: Vec<f64> = counts.iter().map(|&c| (c as f64).log10()).collect();
    let y: Vec<f64> = mse.iter().map(|m| m.log10()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() <= 0.15, "slope {slope}, mse {mse:?}");
}

#[test]
fn selective_channel_lowers_symmetric_bound() {
    let n = 64;
    let cfg = OfdmConfig::with_unit_sample_power(n, 0, 4).unwrap();
    let alloc = make_allocation(&AllocationKind::SymmetricDc, 62, n).unwrap();
    let noise = NoiseSpec::new(1e-2, 1e-3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let draws = 200;
    let (mut selective, mut flat) = (0.0, 0.0);
    for _ in 0..draws {
        let params = ImbalanceParams::from_target_ilr(-20.0, &mut rng).unwrap();
        let taps = (0..2).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let h = normalize_power(&ChannelRealization::new(taps).unwrap(), &alloc).unwrap();
        let bound = |ch: ChannelRealization| {
            let m = ModelSpec::new(cfg, alloc.clone(), ch, noise, params).unwrap();
            crlb_alpha(&fim_fast(&spectral_covariances(&m).unwrap()).unwrap()).unwrap().var_alpha
        };
        selective += bound(h);
        flat += bound(ChannelRealization::flat());
    }
    assert!(selective < flat, "selective {} flat {}", selective / draws as f64, flat / draws as f64);
}
