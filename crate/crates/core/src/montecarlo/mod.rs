//! Reproducible Monte Carlo sweeps comparing estimators with bounds.
//!
//! Run `i` of a sweep draws all its randomness from a ChaCha stream keyed by
//! `(seed, i)`, so results do not depend on the worker count and the same
//! run index sees the same channel and imbalance phase at every sweep point.

mod csv;

pub use csv::write_csv;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{normalize_power, realize_tdl, ChannelRealization, DelayProfile};
use crate::covariance::{spectral_covariances, ModelSpec, NoiseSpec};
use crate::crlb::{crlb_alpha, crlb_simplified, fim_fast};
use crate::error::{invalid, Error, Result};
use crate::estimators::{estimate_with_policy, Policy};
use crate::impairment::{add_awgn, apply_imbalance, ImbalanceParams};
use crate::waveform::{generate_frame, make_allocation, AllocationKind, AllocationPattern, OfdmConfig, QamAlphabet};

/// Channel used by a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Flat,
    Tdl { profile: DelayProfile, sample_rate: f64 },
}

/// One operating point of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: OfdmConfig,
    pub modulation_order: usize,
    pub alloc_kind: AllocationKind,
    pub l_s: usize,
    pub channel: ChannelModel,
    pub noise: NoiseSpec,
    pub ilr_db: f64,
}

impl Scenario {
    pub fn allocation(&self) -> Result<AllocationPattern> {
        make_allocation(&self.alloc_kind, self.l_s, self.config.n_dft)
    }

    /// The scenario with the swept quantity set to `value`.
    pub fn at(&self, axis: &SweepAxis, value: f64) -> Result<Scenario> {
        let mut s = self.clone();
        match axis.kind {
            AxisKind::Alloc => {
                if value < 1.0 || value.fract() != 0.0 {
                    return invalid(format!("allocation size must be a positive integer, got {value}"));
                }
                if matches!(self.alloc_kind, AllocationKind::Custom(_)) {
                    return invalid("cannot sweep the size of a custom allocation");
                }
                s.l_s = value as usize;
            }
            AxisKind::SnrDb => {
                s.noise.sigma_eta_s_sq = self.config.sample_power() / 10f64.powf(value / 10.0);
            }
            AxisKind::IlrDb => s.ilr_db = value,
        }
        Ok(s)
    }

    fn describe(&self) -> Vec<(String, String)> {
        let alloc = match &self.alloc_kind {
            AllocationKind::ContiguousLow => format!("contiguous:{}", self.l_s),
            AllocationKind::SymmetricDc => format!("symmetric:{}", self.l_s),
            AllocationKind::Custom(m) => {
                format!("custom:{}", m.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
            }
        };
        let channel = match &self.channel {
            ChannelModel::Flat => "flat".to_string(),
            ChannelModel::Tdl { profile, sample_rate } => format!(
                "{}@{sample_rate}Hz[{}]",
                profile.name,
                profile
                    .taps
                    .iter()
                    .map(|t| format!("{}ns:{}:{:?}", (t.delay_s * 1e12).round() / 1e3, t.power_db, t.fading))
                    .collect::<Vec<_>>()
                    .join(";")
            ),
        };
        vec![
            ("n_dft".into(), self.config.n_dft.to_string()),
            ("l_cp".into(), self.config.l_cp.to_string()),
            ("n_ofdm".into(), self.config.n_ofdm.to_string()),
            ("sigma_d_sq".into(), self.config.sigma_d_sq.to_string()),
            ("modulation".into(), format!("{}-QAM", self.modulation_order)),
            ("alloc".into(), alloc),
            ("channel".into(), channel),
            ("sigma_eta_s_sq".into(), self.noise.sigma_eta_s_sq.to_string()),
            ("sigma_eta_r_sq".into(), self.noise.sigma_eta_r_sq.to_string()),
            ("ilr_db".into(), self.ilr_db.to_string()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Alloc,
    SnrDb,
    IlrDb,
}

impl AxisKind {
    pub fn name(&self) -> &'static str {
        match self {
            AxisKind::Alloc => "alloc",
            AxisKind::SnrDb => "snr-db",
            AxisKind::IlrDb => "ilr-db",
        }
    }
}

/// Swept quantity and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub kind: AxisKind,
    pub values: Vec<f64>,
}

/// Bound evaluated alongside the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// Exact bound for the realised channel.
    Exact,
    /// Exact bound with the channel replaced by a unit flat one.
    Flat,
    /// Small-imbalance approximation for the realised channel.
    Simplified,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Exact => "crlb_exact",
            BoundKind::Flat => "crlb_flat",
            BoundKind::Simplified => "crlb_simplified",
        }
    }
}

/// Complete description of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub axis: Option<SweepAxis>,
    pub policies: Vec<Policy>,
    pub bounds: Vec<BoundKind>,
    pub runs: usize,
    pub seed: u64,
}

impl RunConfig {
    /// Key/value echo of everything that influences the results.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![("seed".to_string(), self.seed.to_string()), ("runs".to_string(), self.runs.to_string())];
        match &self.axis {
            Some(a) => {
                out.push(("axis".into(), a.kind.name().into()));
                out.push(("axis_values".into(), a.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")));
            }
            None => out.push(("axis".into(), "none".into())),
        }
        out.push(("policies".into(), self.policies.iter().map(|p| p.name()).collect::<Vec<_>>().join(" ")));
        out.push(("bounds".into(), self.bounds.iter().map(|b| b.name()).collect::<Vec<_>>().join(" ")));
        out.extend(self.scenario.describe());
        out
    }

    /// Short SHA-256 digest of [`RunConfig::describe`].
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for (k, v) in self.describe() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Random generator for run `run_index` of a sweep seeded with `seed`.
pub fn stream_rng(seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    rng
}

/// Outcome of one simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub alpha: Complex64,
    /// One entry per policy; `None` if the estimator failed.
    pub estimates: Vec<Option<Complex64>>,
    /// One bound variance per bound kind; `None` if evaluation failed.
    pub bounds: Vec<Option<f64>>,
}

/// Simulates one frame of `scenario` and evaluates estimators and bounds.
pub fn run_once(
    scenario: &Scenario,
    policies: &[Policy],
    bounds: &[BoundKind],
    seed: u64,
    run_index: u64,
) -> Result<RunRecord> {
    let mut rng = stream_rng(seed, run_index);
    let alloc = scenario.allocation()?;
    let alphabet = QamAlphabet::square(scenario.modulation_order)?;
    let channel = match &scenario.channel {
        ChannelModel::Flat => ChannelRealization::flat(),
        ChannelModel::Tdl { profile, sample_rate } => {
            normalize_power(&realize_tdl(profile, *sample_rate, &mut rng)?, &alloc)?
        }
    };
    let params = ImbalanceParams::from_target_ilr(scenario.ilr_db, &mut rng)?;
    let x = generate_frame(&scenario.config, &alloc, &alphabet, &mut rng)?;
    let s = add_awgn(&crate::channel::apply_linear(&channel, &x)?, scenario.noise.sigma_eta_s_sq, &mut rng)?;
    let r = add_awgn(&apply_imbalance(&s, &params), scenario.noise.sigma_eta_r_sq, &mut rng)?;

    let estimates = policies.iter().map(|&p| estimate_with_policy(&r, &alloc, p).ok().map(|e| e.alpha_hat)).collect();

    let model = ModelSpec::new(scenario.config, alloc, channel, scenario.noise, params)?;
    let bounds = bounds
        .iter()
        .map(|b| {
            let res = match b {
                BoundKind::Exact => spectral_covariances(&model).and_then(|sc| crlb_alpha(&fim_fast(&sc)?)),
                BoundKind::Flat => {
                    let flat = ModelSpec { channel: ChannelRealization::flat(), ..model.clone() };
                    spectral_covariances(&flat).and_then(|sc| crlb_alpha(&fim_fast(&sc)?))
                }
                BoundKind::Simplified => {
                    spectral_covariances(&model).and_then(|sc| crlb_simplified(&sc.at_small_imbalance()))
                }
            };
            res.ok().map(|r| r.var_alpha)
        })
        .collect();
    Ok(RunRecord { alpha: params.alpha(), estimates, bounds })
}

/// Linear-domain average of one series with its dB summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub name: String,
    pub mean_linear: f64,
    pub stderr_linear: f64,
    pub mean_db: f64,
    pub stderr_db: f64,
    pub runs: usize,
}

impl SeriesStats {
    /// Mean and standard error of `values`; the dB error uses the delta
    /// method.
    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Self {
        let n = values.len();
        let mean = if n == 0 { f64::NAN } else { values.iter().sum::<f64>() / n as f64 };
        let se = if n < 2 {
            f64::NAN
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        let stderr_db = if mean > 0.0 { 10.0 / std::f64::consts::LN_10 * se / mean } else { 0.0 };
        Self {
            name: name.into(),
            mean_linear: mean,
            stderr_linear: se,
            mean_db: if n == 0 { f64::NAN } else { crate::to_db(mean) },
            stderr_db,
            runs: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub series: Vec<SeriesStats>,
}

impl SweepPoint {
    pub fn get(&self, name: &str) -> Option<&SeriesStats> {
        self.series.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

/// Runs every sweep point with `workers` threads.
pub fn sweep(cfg: &RunConfig, workers: usize) -> Result<SweepResult> {
    if cfg.runs == 0 {
        return invalid("runs must be positive");
    }
    if workers == 0 {
        return invalid("workers must be positive");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    let points: Vec<(f64, Scenario)> = match &cfg.axis {
        Some(axis) => axis.values.iter().map(|&v| cfg.scenario.at(axis, v).map(|s| (v, s))).collect::<Result<_>>()?,
        None => vec![(f64::NAN, cfg.scenario.clone())],
    };
    for (_, s) in &points {
        s.allocation()?;
        QamAlphabet::square(s.modulation_order)?;
    }
    let mut out = Vec::with_capacity(points.len());
    for (value, scenario) in points {
        let records: Vec<RunRecord> = pool.install(|| {
            (0..cfg.runs as u64)
                .into_par_iter()
                .map(|i| run_once(&scenario, &cfg.policies, &cfg.bounds, cfg.seed, i))
                .collect::<Result<_>>()
        })?;
        out.push(SweepPoint { value, series: summarize(&records, &cfg.policies, &cfg.bounds) });
    }
    Ok(SweepResult { points: out })
}

/// Aggregates run records into per-series statistics, in index order.
pub fn summarize(records: &[RunRecord], policies: &[Policy], bounds: &[BoundKind]) -> Vec<SeriesStats> {
    let mut series = Vec::new();
    for (i, p) in policies.iter().enumerate() {
        let v: Vec<f64> = records.iter().filter_map(|r| r.estimates[i].map(|a| (a - r.alpha).norm_sqr())).collect();
        series.push(SeriesStats::from_values(p.name(), &v));
    }
    for (i, b) in bounds.iter().enumerate() {
        let v: Vec<f64> = records.iter().filter_map(|r| r.bounds[i]).collect();
        series.push(SeriesStats::from_values(b.name(), &v));
    }
    series
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> Scenario {
        Scenario {
            config: OfdmConfig::with_unit_sample_power(64, 8, 4).unwrap(),
            modulation_order: 16,
            alloc_kind: AllocationKind::ContiguousLow,
            l_s: 20,
            channel: ChannelModel::Tdl { profile: DelayProfile::exponential(3, 1e-6, 3.0).unwrap(), sample_rate: 1e6 },
            noise: NoiseSpec::new(1e-2, 1e-3).unwrap(),
            ilr_db: -20.0,
        }
    }

    #[test]
    fn run_is_deterministic() {
        let s = scenario();
        let a = run_once(&s, &[Policy::Plain], &[BoundKind::Exact], 7, 3).unwrap();
        let b = run_once(&s, &[Policy::Plain], &[BoundKind::Exact], 7, 3).unwrap();
        let c = run_once(&s, &[Policy::Plain], &[BoundKind::Exact], 7, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_flat_asymmetric_run_is_exact() {
        let mut s = scenario();
        s.channel = ChannelModel::Flat;
        s.noise = NoiseSpec::noiseless();
        let r = run_once(&s, &[Policy::Plain], &[BoundKind::Exact], 1, 0).unwrap();
        assert!((r.estimates[0].unwrap() - r.alpha).norm_sqr() < 1e-10);
        assert_eq!(r.bounds[0], Some(0.0));
    }

    #[test]
    fn series_stats_delta_method() {
        let s = SeriesStats::from_values("x", &[1.0, 3.0]);
        assert_eq!(s.mean_linear, 2.0);
        assert!((s.stderr_linear - 1.0).abs() < 1e-12);
        assert!((s.stderr_db - 10.0 / std::f64::consts::LN_10 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn snr_axis_sets_noise() {
        let s = scenario();
        let axis = SweepAxis { kind: AxisKind::SnrDb, values: vec![20.0] };
        let t = s.at(&axis, 20.0).unwrap();
        assert!((t.noise.sigma_eta_s_sq - 0.01).abs() < 1e-15);
        let bad = SweepAxis { kind: AxisKind::Alloc, values: vec![2.5] };
        assert!(s.at(&bad, 2.5).is_err());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = RunConfig {
            scenario: scenario(),
            axis: Some(SweepAxis { kind: AxisKind::Alloc, values: vec![12.0, 40.0] }),
            policies: vec![Policy::Plain, Policy::Prefiltered],
            bounds: vec![BoundKind::Exact, BoundKind::Simplified],
            runs: 16,
            seed: 11,
        };
        assert_eq!(sweep(&cfg, 1).unwrap(), sweep(&cfg, 3).unwrap());
    }
}
