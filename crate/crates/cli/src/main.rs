mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Overrides};
use report::Report;

#[derive(Parser)]
#[command(name = "pluripot-lab", version, about = "Grid-scale experiments on pluripolar sets, extremal functions and cross envelopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration with one section per command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for the report and grid dumps.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Grid resolution for every grid the command builds.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Number of series terms.
    #[arg(long, global = true)]
    terms: Option<usize>,
    /// Solver stopping tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Thinness of 𝒜_n at 0 and non-separation of its complement.
    PropA,
    /// The two-factor counterexample set and its strict envelope.
    PropB,
    /// The three-factor counterexample set and its strict envelope.
    PropC,
    /// Relative extremal function of a disc in the unit disc.
    Solve,
    /// Zero-or-one classification of an extremal function.
    Dichotomy,
    /// Flood fill of cube complements.
    Connectivity,
    /// Certified path through 𝒜_n between two points.
    Path,
    /// Pole sum with prescribed boundary blow-up.
    Blowup,
    /// Cross envelope built from a planar region.
    Envelope,
}

impl Command {
    fn run(self, cfg: &ExperimentConfig, out: &std::path::Path) -> Result<Report> {
        match self {
            Command::PropA => commands::prop_a(cfg, out),
            Command::PropB => commands::prop_b(cfg, out),
            Command::PropC => commands::prop_c(cfg, out),
            Command::Solve => commands::solve(cfg, out),
            Command::Dichotomy => commands::dichotomy(cfg, out),
            Command::Connectivity => commands::connectivity(cfg, out),
            Command::Path => commands::path(cfg, out),
            Command::Blowup => commands::blowup(cfg, out),
            Command::Envelope => commands::envelope(cfg, out),
        }
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PLURIPOT_THREADS") {
        let n: usize = v.parse().with_context(|| format!("PLURIPOT_THREADS={v}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    cfg.apply(Overrides { resolution: cli.resolution, terms: cli.terms, tolerance: cli.tolerance });
    cfg.validate()?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let mut report = cli.command.run(&cfg, &cli.out)?;
    let path = cli.out.join("report.json");
    report.artifacts.push(path.clone());
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    println!("{text}");
    for name in report.failed_checks() {
        eprintln!("check failed: {name}");
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
