//! Argument parsing and dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::commands::{self, Command, Context};
use crate::config::{Format, RunConfig};
use crate::error::{exit, CliError};
use crate::scan::thread_cap;

#[derive(Debug, Parser)]
#[command(
    name = "gravnoise",
    version,
    about = "Decoherence-diffusion tradeoff and entanglement thresholds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Shorthand for `--format json`.
    #[arg(long, global = true, conflicts_with_all = ["csv", "format"])]
    pub json: bool,
    /// Shorthand for `--format csv`.
    #[arg(long, global = true, conflicts_with = "format")]
    pub csv: bool,
    /// Seed of the random draws in `validate`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the time trace of `evolve` next to the output, or to stderr.
    #[arg(long, global = true)]
    pub trace: bool,
}

impl Cli {
    fn format(&self, config: &RunConfig) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            self.format
                .or(config.output.format)
                .unwrap_or_else(|| self.command.default_format())
        }
    }
}

/// `report.json` → `report.trace.csv`.
pub fn trace_path(out: &Path) -> PathBuf {
    out.with_extension("trace.csv")
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context {
        format: cli.format(&config),
        seed: cli.seed,
        threads: thread_cap()?,
        config,
    };
    let outcome = commands::run(cli.command, &ctx)?;
    let out = cli
        .out
        .clone()
        .or_else(|| ctx.config.output.path.as_ref().map(PathBuf::from));
    match &out {
        Some(path) => write_file(path, &outcome.body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(outcome.body.as_bytes()).and_then(|_| stdout.flush()) {
                // A closed reader (`| head`) is not an error.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r.map_err(|e| CliError::io(Path::new("<stdout>"), e))?,
            }
        }
    }
    if cli.trace {
        if let Some(trace) = &outcome.trace {
            match &out {
                Some(path) => write_file(&trace_path(path), trace)?,
                None => eprint!("{trace}"),
            }
        }
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Numeric(msg)),
        None => Ok(()),
    }
}

/// Runs the tool on `args` and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG } else { exit::OK };
        }
    };
    match run(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("gravnoise: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}
