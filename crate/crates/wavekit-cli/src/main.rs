//! Command-line front end: configuration loading, environment overrides,
//! subcommand dispatch, and run manifests.
//!
//! Exit codes: 0 success, 2 configuration/schema violation, 3 numeric or
//! runtime failure. A manifest.json is written to the output directory even
//! when a run fails.

mod commands;
mod config;
mod manifest;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use commands::ConfigError;
use config::RunConfig;
use manifest::{sha256_hex, Manifest};
use std::path::{Path, PathBuf};

const ENV_PREFIX: &str = "WAVEKIT_";

#[derive(Parser)]
#[command(
    name = "wavekit",
    about = "Resonance enumeration, effective-equation dynamics, and wave-kinetic scans on truncated Fourier lattices",
    version
)]
struct Cli {
    /// JSON configuration file (env: WAVEKIT_CONFIG)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed override (env: WAVEKIT_SEED)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections (env: WAVEKIT_WORKERS)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (env: WAVEKIT_OUT; default: run-<command>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Enumerate resonant tuples as JSON lines
    Resonances,
    /// Partition the lattice into resonance clusters (CSV)
    Clusters,
    /// Integrate one trajectory or an ensemble
    Simulate,
    /// Closed-form beta-plane cluster tables and trajectories
    ChmOracle,
    /// Collision-integral exponent scan or forward kinetic integration
    Kinetic,
    /// Ensemble moment tables
    Moments,
    /// Aggregate artifacts of a previous run into tidy tables
    Report {
        /// Directory holding the run to aggregate
        #[arg(long)]
        run: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Resonances => "resonances",
            Command::Clusters => "clusters",
            Command::Simulate => "simulate",
            Command::ChmOracle => "chm-oracle",
            Command::Kinetic => "kinetic",
            Command::Moments => "moments",
            Command::Report { .. } => "report",
        }
    }
}

fn env_override<T: std::str::FromStr>(name: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match std::env::var(format!("{ENV_PREFIX}{name}")) {
        Ok(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|e| anyhow!("bad {ENV_PREFIX}{name}={v:?}: {e}")),
        Err(_) => Ok(None),
    }
}

fn is_config_error(err: &anyhow::Error) -> bool {
    err.chain().any(|c| c.is::<ConfigError>())
        || err
            .chain()
            .any(|c| c.downcast_ref::<serde_json::Error>().is_some())
}

fn run(cli: &Cli) -> Result<i32> {
    let config_path: Option<PathBuf> = match &cli.config {
        Some(p) => Some(p.clone()),
        None => env_override::<PathBuf>("CONFIG").map_err(ConfigError::wrap)?,
    };
    let seed_override = match cli.seed {
        Some(s) => Some(s),
        None => env_override::<u64>("SEED").map_err(ConfigError::wrap)?,
    };
    let workers = match cli.workers {
        Some(w) => Some(w),
        None => env_override::<usize>("WORKERS").map_err(ConfigError::wrap)?,
    };
    let out_dir: PathBuf = match &cli.out {
        Some(p) => p.clone(),
        None => env_override::<PathBuf>("OUT")
            .map_err(ConfigError::wrap)?
            .unwrap_or_else(|| PathBuf::from(format!("run-{}", cli.command.name()))),
    };

    if let Some(n) = workers {
        // ignore failure when a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    let mut manifest = Manifest::new(
        cli.command.name(),
        seed_override.unwrap_or(0),
        workers,
        serde_json::Value::Null,
    );

    let result = load_and_dispatch(
        cli,
        &config_path,
        seed_override,
        &out_dir,
        &mut manifest,
    );
    match &result {
        Ok(()) => {
            manifest.status = "ok".into();
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(format!("{e:#}"));
        }
    }
    manifest.write(&out_dir).context("writing manifest")?;
    result.map(|()| 0)
}

fn load_and_dispatch(
    cli: &Cli,
    config_path: &Option<PathBuf>,
    seed_override: Option<u64>,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> Result<()> {
    let mut cfg = match config_path {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(ConfigError::wrap)?;
            manifest.config_hash = Some(sha256_hex(raw.as_bytes()));
            RunConfig::from_json(&raw).map_err(ConfigError::wrap)?
        }
        None => {
            if !matches!(cli.command, Command::Report { .. }) {
                return Err(ConfigError::wrap(anyhow!(
                    "--config (or {ENV_PREFIX}CONFIG) is required for this subcommand"
                )));
            }
            RunConfig::from_json("{}").expect("empty config parses")
        }
    };
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    manifest.seed = cfg.seed;
    manifest.config = serde_json::to_value(&cfg).expect("config reserializes");
    dispatch(&cli.command, &cfg, out_dir, manifest)
}

fn dispatch(
    command: &Command,
    cfg: &RunConfig,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<()> {
    match command {
        Command::Resonances => commands::cmd_resonances(cfg, out, manifest),
        Command::Clusters => commands::cmd_clusters(cfg, out, manifest),
        Command::Simulate => commands::cmd_simulate(cfg, out, manifest),
        Command::ChmOracle => commands::cmd_chm_oracle(cfg, out, manifest),
        Command::Kinetic => commands::cmd_kinetic(cfg, out, manifest),
        Command::Moments => commands::cmd_moments(cfg, out, manifest),
        Command::Report { run } => commands::cmd_report(run, out, manifest),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) {
                2
            } else {
                3
            }
        }
    };
    std::process::exit(code);
}
