//! `iqcrlb`: bounds and Monte Carlo sweeps for transmitter IQ imbalance.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for
//! numerical failures (including a failing self-test).

mod selftest;
mod settings;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iqcrlb_core::channel::{normalize_power, realize_tdl, ChannelRealization};
use iqcrlb_core::covariance::dense::DenseLayout;
use iqcrlb_core::covariance::{spectral_covariances, ModelSpec};
use iqcrlb_core::crlb::{crlb_alpha, crlb_simplified, fim_fast, fim_full, BoundStatus, CrlbResult};
use iqcrlb_core::impairment::ImbalanceParams;
use iqcrlb_core::montecarlo::{stream_rng, sweep, write_csv, ChannelModel, RunConfig};
use iqcrlb_core::{to_db, Error};

use settings::Settings;

#[derive(Parser)]
#[command(
    name = "iqcrlb",
    version,
    about = "Cramér-Rao bounds and blind estimation of transmitter IQ imbalance in OFDM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the bound on alpha for one model realisation.
    Crlb(CrlbArgs),
    /// Run a Monte Carlo sweep and write CSV.
    Sweep(SweepArgs),
    /// Run the built-in oracle checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Default)]
struct ScenarioArgs {
    /// Named parameter set (desk, desk-fig3..5, paper-fig3..5).
    #[arg(long)]
    preset: Option<String>,
    /// File of `key = value` lines using the long option names as keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_dft: Option<String>,
    #[arg(long)]
    l_cp: Option<String>,
    #[arg(long)]
    n_ofdm: Option<String>,
    /// Data energy per OFDM symbol; defaults to n-dft (unit sample power).
    #[arg(long)]
    sigma_d_sq: Option<String>,
    /// Square QAM order.
    #[arg(long)]
    qam: Option<String>,
    /// contiguous:L, symmetric:L or mask:0110...
    #[arg(long)]
    alloc: Option<String>,
    /// flat, tdlb100, exponential:TAPS:SPACING_NS:DECAY_DB or file:PATH.
    #[arg(long)]
    channel: Option<String>,
    /// Sample rate in Hz used to quantise tapped-delay-line profiles.
    #[arg(long)]
    sample_rate: Option<String>,
    #[arg(long)]
    sigma_eta_s_sq: Option<String>,
    #[arg(long)]
    sigma_eta_r_sq: Option<String>,
    /// Pre-imbalance SNR in dB; overrides sigma-eta-s-sq.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Target image leakage ratio in dB.
    #[arg(long, allow_hyphen_values = true)]
    ilr: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Shorthand for --channel flat.
    #[arg(long)]
    flat: bool,
    /// Set both noise variances to zero.
    #[arg(long)]
    no_noise: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathChoice {
    All,
    Full,
    FullCp,
    Fast,
    Simplified,
}

#[derive(Args)]
struct CrlbArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "all")]
    path: PathChoice,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// alloc:A..B[:STEP], snr-db:A..B[:STEP], ilr-db:A..B[:STEP] or kind:V1,V2,...
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    /// Comma-separated subset of mbe, mbe_prefiltered.
    #[arg(long)]
    policies: Option<String>,
    /// Comma-separated subset of crlb_exact, crlb_flat, crlb_simplified.
    #[arg(long)]
    bounds: Option<String>,
    #[arg(long, env = "IQCRLB_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random models per check.
    #[arg(long, default_value_t = 20)]
    models: usize,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Parse { .. } | Error::Io(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn collect_settings(a: &ScenarioArgs, extra: &[(&str, &Option<String>)]) -> Result<Settings, Failure> {
    let mut s = Settings::new();
    let mut preset = a.preset.clone();
    let mut file = Settings::new();
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        file = settings::parse_config_file(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if preset.is_none() {
            preset = file.remove("preset");
        } else {
            file.remove("preset");
        }
    }
    if let Some(p) = preset {
        settings::apply_preset(&mut s, &p).map_err(Failure::Usage)?;
    }
    s.extend(file);
    let flags: [(&str, &Option<String>); 14] = [
        ("n-dft", &a.n_dft),
        ("l-cp", &a.l_cp),
        ("n-ofdm", &a.n_ofdm),
        ("sigma-d-sq", &a.sigma_d_sq),
        ("qam", &a.qam),
        ("alloc", &a.alloc),
        ("channel", &a.channel),
        ("sample-rate", &a.sample_rate),
        ("sigma-eta-s-sq", &a.sigma_eta_s_sq),
        ("sigma-eta-r-sq", &a.sigma_eta_r_sq),
        ("snr-db", &a.snr_db),
        ("ilr", &a.ilr),
        ("seed", &a.seed),
        ("preset", &None),
    ];
    for (k, v) in flags.iter().chain(extra) {
        if let Some(v) = v {
            s.insert(k.to_string(), v.clone());
        }
    }
    if a.channel.is_some() {
        s.remove("flat");
    }
    if a.flat {
        s.insert("flat".into(), "true".into());
    }
    if a.no_noise {
        s.insert("no-noise".into(), "true".into());
    }
    Ok(s)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Usage(format!("write failed: {e}"))
}

fn build_model(cfg: &RunConfig) -> Result<ModelSpec, Failure> {
    let sc = &cfg.scenario;
    let alloc = sc.allocation()?;
    let mut rng = stream_rng(cfg.seed, 0);
    let channel = match &sc.channel {
        ChannelModel::Flat => ChannelRealization::flat(),
        ChannelModel::Tdl { profile, sample_rate } => {
            normalize_power(&realize_tdl(profile, *sample_rate, &mut rng)?, &alloc)?
        }
    };
    let params = ImbalanceParams::from_target_ilr(sc.ilr_db, &mut rng)?;
    Ok(ModelSpec::new(sc.config, alloc, channel, sc.noise, params)?)
}

fn status_text(r: &CrlbResult) -> &'static str {
    match r.status {
        BoundStatus::Finite => "finite",
        BoundStatus::Exact => "exact",
    }
}

fn cmd_crlb(args: &CrlbArgs) -> Result<(), Failure> {
    let settings = collect_settings(&args.scenario, &[])?;
    let cfg = settings::resolve(&settings).map_err(Failure::Usage)?;
    let model = build_model(&cfg)?;
    let sc = spectral_covariances(&model)?;

    let wanted: &[&str] = match args.path {
        PathChoice::All => &["full", "fast", "simplified"],
        PathChoice::Full => &["full"],
        PathChoice::FullCp => &["full_cp"],
        PathChoice::Fast => &["fast"],
        PathChoice::Simplified => &["simplified"],
    };
    let explicit = !matches!(args.path, PathChoice::All);
    let mut rows = Vec::new();
    for &name in wanted {
        let res = match name {
            "full" => fim_full(&model, DenseLayout::Circular).and_then(|f| crlb_alpha(&f)),
            "full_cp" => fim_full(&model, DenseLayout::WithCp).and_then(|f| crlb_alpha(&f)),
            "fast" => fim_fast(&sc).and_then(|f| crlb_alpha(&f)),
            _ => crlb_simplified(&sc.at_small_imbalance()),
        };
        match res {
            Ok(r) => rows.push((name, Some(r), String::new())),
            Err(Error::TooLarge { size, limit }) if !explicit => {
                rows.push((name, None, format!("skipped: {size} samples exceed dense limit {limit}")))
            }
            Err(e) => return Err(Failure::Numerical(format!("{name} path: {e}"))),
        }
    }

    let mut out = open_output(&args.output)?;
    writeln!(out, "# iqcrlb crlb").map_err(io_err)?;
    writeln!(out, "# version = {}", env!("CARGO_PKG_VERSION")).map_err(io_err)?;
    for (k, v) in
        cfg.describe().into_iter().filter(|(k, _)| !matches!(k.as_str(), "runs" | "axis" | "policies" | "bounds"))
    {
        writeln!(out, "# {k} = {v}").map_err(io_err)?;
    }
    let c = &model.config;
    let alpha = model.params.alpha();
    writeln!(out, "# sample_power = {}", c.sample_power()).map_err(io_err)?;
    writeln!(out, "# pre_snr_db = {:.4}", to_db(c.sample_power() / model.noise.sigma_eta_s_sq)).map_err(io_err)?;
    writeln!(out, "# alpha = {:.6e}{:+.6e}j", alpha.re, alpha.im).map_err(io_err)?;
    writeln!(out, "# alloc_symmetric_bins = {}", model.alloc.symmetric_count()).map_err(io_err)?;
    writeln!(out, "path,var_alpha,var_db,status").map_err(io_err)?;
    for (name, r, note) in &rows {
        match r {
            Some(r) => writeln!(out, "{name},{:.6e},{:.4},{}", r.var_alpha, r.var_db(), status_text(r)),
            None => writeln!(out, "{name},,,{note}"),
        }
        .map_err(io_err)?;
    }
    let dbs: Vec<f64> = rows.iter().filter_map(|(_, r, _)| r.map(|r| r.var_db())).collect();
    if dbs.len() > 1 {
        let spread = dbs.iter().cloned().fold(f64::MIN, f64::max) - dbs.iter().cloned().fold(f64::MAX, f64::min);
        writeln!(out, "# spread_db = {spread:.4}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let extra = [("axis", &args.axis), ("runs", &args.runs), ("policies", &args.policies), ("bounds", &args.bounds)];
    let settings = collect_settings(&args.scenario, &extra)?;
    let cfg = settings::resolve(&settings).map_err(Failure::Usage)?;
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let result = sweep(&cfg, workers)?;
    let mut out = open_output(&args.output)?;
    write_csv(&mut out, &cfg, &result)?;
    out.flush().map_err(io_err)
}

fn cmd_selftest(args: &SelftestArgs) -> Result<(), Failure> {
    let checks = selftest::run_all(args.seed, args.models.max(1));
    let mut failed = 0;
    for c in &checks {
        println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Crlb(a) => cmd_crlb(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
