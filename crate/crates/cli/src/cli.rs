use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

/// Integrated guidance and control for a fixed-wing micro air vehicle.
///
/// Every subcommand reads the same config file (built-in defaults when
/// `--config` is absent) and writes only under `--out`.
#[derive(Debug, Parser)]
#[command(name = "igc", version, after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Config file (TOML; angles in degrees).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Genetic-search seed; overrides `ga.seed` (default 7).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Scenario to fly: line, rectangle or custom; overrides `scenario.name`.
    #[arg(long, global = true)]
    pub scenario: Option<String>,

    /// Gain source: `synth`, `fixture` (the published gain) or `file:<path>`.
    #[arg(long, global = true, default_value = "synth")]
    pub gain: GainSource,

    /// Progress messages on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trim the design and operating points.
    Trim,
    /// Linearize at the design trim and build the fifteen-state model.
    Linearize,
    /// Synthesize (or load) the output-feedback gain and its certificate.
    Synth,
    /// Fly the scenario and write telemetry, metrics and plot scripts.
    Simulate,
    /// Recompute metrics and plot scripts from a telemetry file.
    Report {
        /// Telemetry CSV; defaults to `<out>/telemetry.csv`.
        #[arg(long, value_name = "PATH")]
        telemetry: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GainSource {
    Synth,
    Fixture,
    File(PathBuf),
}

impl FromStr for GainSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "synth" => Ok(Self::Synth),
            "fixture" => Ok(Self::Fixture),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
                _ => Err(format!("expected synth, fixture or file:<path>, got '{s}'")),
            },
        }
    }
}

pub const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O or other runtime error
  2  bad command line
  3  config or input-file error
  4  trim failure
  5  synthesis failure (no certified gain)
  6  simulation diverged";
