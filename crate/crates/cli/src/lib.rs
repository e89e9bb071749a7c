//! `wetting-lab`: runs the verification suites and simulations of
//! `wetting-core` from a plain-text configuration and writes CSV, PGM and
//! text artifacts.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 a verification
//! suite failed (its report is still written).

pub mod config;
mod output;
mod scans;
mod simulate;
mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{parse_onto, preset, render, ConfigError, ExperimentConfig, PRESETS};
use output::Artifacts;

/// Stream identifiers under the master seed. Every random quantity is drawn
/// from `stream_rng(derive_seed(seed, STREAM), k)` or from a chain seeded
/// with `derive_seed(derive_seed(seed, STREAM), k)`, `k` counting instances,
/// chains or ladder rungs.
pub mod streams {
    pub const EXACT_INSTANCES: u64 = 1;
    pub const EXACT_TRIALS: u64 = 2;
    pub const GRAPHICAL_INSTANCES: u64 = 3;
    pub const GRAPHICAL_TRIALS: u64 = 4;
    pub const EDGE_SAMPLER: u64 = 5;
    pub const PROFILE_CHAINS: u64 = 10;
    pub const GAP_CHAINS: u64 = 11;
    pub const SNAPSHOT: u64 = 12;
    pub const FIGURES: u64 = 13;
    pub const TAU_SCAN: u64 = 20;
    pub const LAMBDA_C: u64 = 21;
}

#[derive(Parser, Debug)]
#[command(name = "wetting-lab", version, about = "Semi-infinite Ising wetting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact-enumeration invariant suites on generated instances.
    VerifyExact(Common),
    /// Random-cluster and Edwards–Sokal suites on generated instances.
    VerifyGraphical(Common),
    /// Final configuration of one heat-bath chain as a PGM raster.
    Snapshot(Common),
    /// Layer magnetisation profile (and optionally the plus/minus gap).
    Profile(Common),
    /// Wall free energy along a grid of wall strengths.
    TauScan(Common),
    /// Integrand crossing scan over the box ladder, decay and wall fields.
    LambdaC(Common),
    /// Snapshots and wall magnetisations at lambda = 1 and lambda = 0.03.
    Figures(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Starting configuration: default, desk, tiny or figures.
    #[arg(long)]
    preset: Option<String>,
    /// Master seed (overrides run.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<String>,
    /// Worker threads for independent experiments.
    #[arg(long)]
    jobs: Option<usize>,
    /// Extra assignment, applied last; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// How a run ended, mapped onto the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Verification(_) => 2,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(format!("config error: {e}"))
    }
}

impl From<wetting_core::Error> for Failure {
    fn from(e: wetting_core::Error) -> Self {
        Failure::Usage(format!("error: {e}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("i/o error: {e}"))
    }
}

pub type Outcome = Result<(), Failure>;

/// Entry point; `argv[0]` is the program name.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("{m}"),
                Failure::Verification(m) => eprintln!("verification failed: {m}"),
            }
            f.code()
        }
    }
}

fn execute(command: Command) -> Outcome {
    let (name, common) = match &command {
        Command::VerifyExact(c) => ("verify-exact", c),
        Command::VerifyGraphical(c) => ("verify-graphical", c),
        Command::Snapshot(c) => ("snapshot", c),
        Command::Profile(c) => ("profile", c),
        Command::TauScan(c) => ("tau-scan", c),
        Command::LambdaC(c) => ("lambda-c", c),
        Command::Figures(c) => ("figures", c),
    };
    let cfg = resolve(name, common)?;
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        // only fails when a pool already exists, e.g. in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let out = Artifacts::new(&cfg.output);
    out.write_always("config.txt", &render(&cfg))?;
    match name {
        "verify-exact" => verify::verify_exact(&cfg, &out),
        "verify-graphical" => verify::verify_graphical(&cfg, &out),
        "snapshot" => simulate::snapshot(&cfg, &out),
        "profile" => simulate::profile(&cfg, &out),
        "tau-scan" => scans::tau_scan(&cfg, &out),
        "lambda-c" => scans::lambda_c(&cfg, &out),
        "figures" => simulate::figures(&cfg, &out),
        _ => unreachable!(),
    }
}

/// Preset, then config file, then `--set`, then the dedicated flags.
fn resolve(command: &str, common: &Common) -> Result<ExperimentConfig, Failure> {
    let preset_name = common.preset.as_deref().unwrap_or(if command == "figures" { "figures" } else { "default" });
    let mut cfg = preset(preset_name)
        .ok_or_else(|| Failure::Usage(format!("unknown preset `{preset_name}` (known: {})", PRESETS.join(", "))))?;
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        cfg = parse_onto(cfg, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    for assignment in &common.set {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(Failure::Usage(format!("--set expects KEY=VALUE, got `{assignment}`")));
        };
        let key = key.trim();
        cfg.set(key, value).map_err(|message| ConfigError { line: 0, key: key.into(), message })?;
    }
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.set("output.dir", out).map_err(|message| ConfigError { line: 0, key: "output.dir".into(), message })?;
    }
    cfg.command = command.to_string();
    cfg.validate()?;
    Ok(cfg)
}
