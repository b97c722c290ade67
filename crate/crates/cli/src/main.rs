//! Command-line entry point for the dual-period backtesting harness.
//!
//! Exit codes: 0 on success, 1 for configuration or validation failures,
//! 2 for runtime failures.

mod commands;
mod config;
mod data;
mod remote;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use commands::{cmd_bench, cmd_run, cmd_validate, CmdResult, Overrides};

#[derive(Parser)]
#[command(
    name = "lookahead",
    version,
    about = "Deterministic dual-period backtesting harness with alpha-decay reporting"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the dataset against the config: CSV schema, universe
    /// coverage, calendar intersection, and warm-up depth.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one strategy or agent over one period and write the result
    /// JSON and trade log.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Strategy key (e.g. buy_hold, momentum) or an agent label.
        #[arg(long)]
        strategy: String,
        /// Period label from the config (e.g. P1).
        #[arg(long)]
        period: String,
        /// Override the noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full dual-period benchmark and write the text, CSV, and
    /// JSON reports.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Override the noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Which rendering to print to stdout (all three are written).
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

impl From<Format> for commands::OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => commands::OutputFormat::Text,
            Format::Csv => commands::OutputFormat::Csv,
            Format::Json => commands::OutputFormat::Json,
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successes; anything else is a usage
            // problem, which falls in the config/validation exit class.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);

    let outcome: CmdResult = match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Run {
            config,
            strategy,
            period,
            seed,
            out,
        } => cmd_run(&config, &strategy, &period, &Overrides { seed, out }),
        Command::Bench {
            config,
            seed,
            out,
            format,
        } => cmd_bench(&config, &Overrides { seed, out }, format.into()),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
