//! Layered key/value settings: built-in defaults, then a preset, then a
//! config file, then command-line flags.

use std::collections::BTreeMap;

use iqcrlb_core::channel::DelayProfile;
use iqcrlb_core::covariance::NoiseSpec;
use iqcrlb_core::estimators::Policy;
use iqcrlb_core::montecarlo::{AxisKind, BoundKind, ChannelModel, RunConfig, Scenario, SweepAxis};
use iqcrlb_core::waveform::{AllocationKind, OfdmConfig};

pub const KEYS: &[&str] = &[
    "n-dft",
    "l-cp",
    "n-ofdm",
    "sigma-d-sq",
    "qam",
    "alloc",
    "channel",
    "sample-rate",
    "sigma-eta-s-sq",
    "sigma-eta-r-sq",
    "snr-db",
    "ilr",
    "seed",
    "runs",
    "axis",
    "policies",
    "bounds",
];

pub type Settings = BTreeMap<String, String>;

fn preset_entries(name: &str) -> Option<Vec<(&'static str, String)>> {
    let desk = vec![
        ("n-dft", "256".to_string()),
        ("l-cp", "18".into()),
        ("n-ofdm", "10".into()),
        ("sigma-d-sq", "256".into()),
        ("qam", "1024".into()),
        ("alloc", "contiguous:102".into()),
        ("channel", "tdlb100".into()),
        ("sample-rate", "7.68e6".into()),
        ("sigma-eta-s-sq", "1e-2".into()),
        ("sigma-eta-r-sq", "1e-3".into()),
        ("ilr", "-20".into()),
        ("runs", "1000".into()),
    ];
    let full_scale = vec![
        ("n-dft", "4096".to_string()),
        ("l-cp", "288".into()),
        ("n-ofdm", "10".into()),
        ("sigma-d-sq", "4096".into()),
        ("qam", "1024".into()),
        ("alloc", "contiguous:1649".into()),
        ("channel", "tdlb100".into()),
        ("sample-rate", "122.88e6".into()),
        ("sigma-eta-s-sq", "1e-2".into()),
        ("sigma-eta-r-sq", "1e-3".into()),
        ("ilr", "-20".into()),
        ("runs", "100000".into()),
    ];
    let with = |mut base: Vec<(&'static str, String)>, axis: &str| {
        base.push(("axis", axis.to_string()));
        base
    };
    Some(match name {
        "desk" => desk,
        "desk-fig3" => with(desk, "alloc:12..204:12"),
        "desk-fig4" => with(desk, "snr-db:-10..50:10"),
        "desk-fig5" => with(desk, "ilr-db:-60..0:10"),
        "paper-fig3" => with(full_scale, "alloc:12..3300:12"),
        "paper-fig4" => with(full_scale, "snr-db:-10..50:5"),
        "paper-fig5" => with(full_scale, "ilr-db:-60..0:5"),
        _ => return None,
    })
}

pub fn preset_names() -> &'static str {
    "desk, desk-fig3, desk-fig4, desk-fig5, paper-fig3, paper-fig4, paper-fig5"
}

pub fn apply_preset(settings: &mut Settings, name: &str) -> Result<(), String> {
    let entries = preset_entries(name).ok_or_else(|| format!("unknown preset {name:?} (known: {})", preset_names()))?;
    for (k, v) in entries {
        settings.insert(k.to_string(), v);
    }
    Ok(())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<Settings, String> {
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "flat" | "no-noise" => {
                if v != "true" && v != "false" {
                    return Err(format!("line {}: {k} expects true or false", i + 1));
                }
            }
            "preset" => {}
            _ if KEYS.contains(&k) => {}
            _ => return Err(format!("line {}: unknown key {k:?}", i + 1)),
        }
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

fn get<T: std::str::FromStr>(s: &Settings, key: &str) -> Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.get(key).map(|v| v.parse::<T>().map_err(|e| format!("{key}: cannot parse {v:?}: {e}"))).transpose()
}

fn parse_alloc(spec: &str, n_dft: usize) -> Result<(AllocationKind, usize), String> {
    let (kind, arg) = spec.split_once(':').ok_or_else(|| format!("alloc {spec:?}: expected kind:value"))?;
    let num = |a: &str| a.parse::<usize>().map_err(|e| format!("alloc {spec:?}: {e}"));
    match kind {
        "contiguous" => Ok((AllocationKind::ContiguousLow, num(arg)?)),
        "symmetric" => Ok((AllocationKind::SymmetricDc, num(arg)?)),
        "mask" => {
            let mask: Vec<bool> = arg
                .chars()
                .map(|c| match c {
                    '1' => Ok(true),
                    '0' => Ok(false),
                    _ => Err(format!("alloc mask may only contain 0 and 1, got {c:?}")),
                })
                .collect::<Result<_, _>>()?;
            if mask.len() != n_dft {
                return Err(format!("alloc mask has {} bins, n-dft is {n_dft}", mask.len()));
            }
            let l_s = mask.iter().filter(|&&b| b).count();
            Ok((AllocationKind::Custom(mask), l_s))
        }
        _ => Err(format!("alloc kind {kind:?} must be contiguous, symmetric or mask")),
    }
}

fn parse_channel(spec: &str, sample_rate: Option<f64>) -> Result<ChannelModel, String> {
    if spec == "flat" {
        return Ok(ChannelModel::Flat);
    }
    let profile = if spec == "tdlb100" {
        DelayProfile::tdlb100()
    } else if let Some(rest) = spec.strip_prefix("exponential:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err("exponential channel expects exponential:taps:spacing_ns:decay_db".into());
        }
        let taps = parts[0].parse::<usize>().map_err(|e| format!("channel taps: {e}"))?;
        let spacing = parts[1].parse::<f64>().map_err(|e| format!("channel spacing: {e}"))?;
        let decay = parts[2].parse::<f64>().map_err(|e| format!("channel decay: {e}"))?;
        DelayProfile::exponential(taps, spacing * 1e-9, decay).map_err(|e| e.to_string())?
    } else if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path).map_err(|e| format!("channel file {path}: {e}"))?;
        DelayProfile::parse(path, &text).map_err(|e| e.to_string())?
    } else {
        return Err(format!("unknown channel {spec:?} (flat, tdlb100, exponential:..., file:PATH)"));
    };
    let sample_rate = sample_rate.ok_or_else(|| format!("channel {spec} needs --sample-rate"))?;
    Ok(ChannelModel::Tdl { profile, sample_rate })
}

/// Parses `kind:a..b[:step]` or `kind:v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<SweepAxis, String> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| format!("axis {spec:?}: expected kind:range"))?;
    let (kind, default_step) = match kind {
        "alloc" => (AxisKind::Alloc, 12.0),
        "snr-db" => (AxisKind::SnrDb, 10.0),
        "ilr-db" => (AxisKind::IlrDb, 10.0),
        _ => return Err(format!("axis kind {kind:?} must be alloc, snr-db or ilr-db")),
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("axis {spec:?}: {s:?}: {e}"));
    let values = if let Some((a, b)) = rest.split_once("..") {
        let (b, step) = match b.split_once(':') {
            Some((b, s)) => (num(b)?, num(s)?),
            None => (num(b)?, default_step),
        };
        let a = num(a)?;
        if step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || b < a {
            return Err(format!("axis {spec:?}: need a <= b and a positive step"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| a + step * i as f64).collect()
    } else {
        rest.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(format!("axis {spec:?} has no values"));
    }
    Ok(SweepAxis { kind, values })
}

fn parse_list<T>(spec: &str, lookup: impl Fn(&str) -> Option<T>, what: &str) -> Result<Vec<T>, String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| lookup(s).ok_or_else(|| format!("unknown {what} {s:?}")))
        .collect()
}

/// Resolves the settings into a run configuration.
pub fn resolve(s: &Settings) -> Result<RunConfig, String> {
    let n_dft: usize = get(s, "n-dft")?.unwrap_or(256);
    let l_cp: usize = get(s, "l-cp")?.unwrap_or(n_dft * 9 / 128);
    let n_ofdm: usize = get(s, "n-ofdm")?.unwrap_or(10);
    let sigma_d_sq: f64 = get(s, "sigma-d-sq")?.unwrap_or(n_dft as f64);
    let config = OfdmConfig::new(n_dft, l_cp, n_ofdm, sigma_d_sq).map_err(|e| e.to_string())?;

    let default_alloc = format!("contiguous:{}", ((n_dft as f64 * 1650.0 / 4096.0).round() as usize).max(2) - 1);
    let (alloc_kind, l_s) = parse_alloc(s.get("alloc").unwrap_or(&default_alloc), n_dft)?;

    let channel = if s.get("flat").is_some_and(|v| v == "true") {
        ChannelModel::Flat
    } else {
        parse_channel(s.get("channel").map(String::as_str).unwrap_or("flat"), get(s, "sample-rate")?)?
    };

    let no_noise = s.get("no-noise").is_some_and(|v| v == "true");
    let mut eta_s: f64 = get(s, "sigma-eta-s-sq")?.unwrap_or(1e-2);
    let mut eta_r: f64 = get(s, "sigma-eta-r-sq")?.unwrap_or(1e-3);
    if let Some(snr) = get::<f64>(s, "snr-db")? {
        eta_s = config.sample_power() / 10f64.powf(snr / 10.0);
    }
    if no_noise {
        eta_s = 0.0;
        eta_r = 0.0;
    }
    let noise = NoiseSpec::new(eta_s, eta_r).map_err(|e| e.to_string())?;

    let scenario = Scenario {
        config,
        modulation_order: get(s, "qam")?.unwrap_or(1024),
        alloc_kind,
        l_s,
        channel,
        noise,
        ilr_db: get(s, "ilr")?.unwrap_or(-20.0),
    };
    scenario.allocation().map_err(|e| e.to_string())?;

    let axis = s.get("axis").filter(|v| v.as_str() != "none").map(|v| parse_axis(v)).transpose()?;
    let policies = parse_list(
        s.get("policies").map(String::as_str).unwrap_or("mbe,mbe_prefiltered"),
        |n| [Policy::Plain, Policy::Prefiltered].into_iter().find(|p| p.name() == n),
        "policy",
    )?;
    let bounds = parse_list(
        s.get("bounds").map(String::as_str).unwrap_or("crlb_exact,crlb_flat,crlb_simplified"),
        |n| [BoundKind::Exact, BoundKind::Flat, BoundKind::Simplified].into_iter().find(|b| b.name() == n),
        "bound",
    )?;
    Ok(RunConfig {
        scenario,
        axis,
        policies,
        bounds,
        runs: get(s, "runs")?.unwrap_or(1000),
        seed: get(s, "seed")?.unwrap_or(0),
    })
}
