mod analyze;
mod config;
mod output;
mod session;
mod stream;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::ConfigArgs;

/// Knee rehabilitation session engine.
#[derive(Debug, Parser)]
#[command(name = "rehab", version, about)]
struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulated patient through a session.
    Simulate {
        #[command(flatten)]
        config: ConfigOpts,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Re-run the engine over a recorded trace (text or binary).
    Replay {
        trace: PathBuf,
        #[command(flatten)]
        config: ConfigOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Run the engine live over a byte stream: a file, `-` for stdin, or
    /// `tcp:HOST:PORT`.
    Stream {
        source: String,
        #[command(flatten)]
        config: ConfigOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Compare two sets of session reports with a paired signed-rank test.
    Analyze {
        /// Report file or directory of *.json reports (condition A).
        set_a: PathBuf,
        /// Report file or directory of *.json reports (condition B).
        set_b: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::EffectiveTime)]
        metric: Metric,
        #[arg(long, value_enum, default_value_t = Format::Summary)]
        format: Format,
    },
}

#[derive(Debug, Args)]
struct ConfigOpts {
    /// Scenario TOML file. Defaults to $REHAB_CONFIG when set.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override a configuration value, e.g. `patient.fatigue_droop=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Debug, Args)]
struct OutputOpts {
    /// Directory for report.json, haptic.log, events.log and recordings.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the haptic command log here.
    #[arg(long)]
    haptic_log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Report)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Full JSON.
    Report,
    /// Human-readable text.
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Metric {
    UnderstandingTime,
    AngleDeviation,
    EffectiveTime,
}

impl Metric {
    pub fn key(self) -> &'static str {
        match self {
            Metric::UnderstandingTime => "understanding_time",
            Metric::AngleDeviation => "angle_deviation",
            Metric::EffectiveTime => "effective_time",
        }
    }
}

/// How a command that ran to the end went.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    /// The input was damaged; outputs were still written.
    Corrupt,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_CORRUPT: u8 = 3;

impl ConfigOpts {
    fn into_args(self, seed: Option<u64>) -> ConfigArgs {
        ConfigArgs {
            scenario: self.scenario,
            sets: self.sets,
            seed,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Simulate { config, seed, output } => session::simulate(&config.into_args(seed), &output.into()),
        Command::Replay { trace, config, output } => session::replay(&trace, &config.into_args(None), &output.into()),
        Command::Stream { source, config, output } => {
            stream::run(&source, &config.into_args(None), &output.into())
        }
        Command::Analyze {
            set_a,
            set_b,
            metric,
            format,
        } => analyze::run(&set_a, &set_b, metric, format),
    };
    match result {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::Corrupt) => ExitCode::from(EXIT_CORRUPT),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

impl From<OutputOpts> for output::Outputs {
    fn from(o: OutputOpts) -> Self {
        output::Outputs {
            dir: o.out,
            haptic_log: o.haptic_log,
            format: o.format,
        }
    }
}
