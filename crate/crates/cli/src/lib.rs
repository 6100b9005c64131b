//! Command-line driver: `synth`, `run`, `attribute` and `export-latent`.
//!
//! Every command is deterministic for a fixed seed. Failures print
//! `error[stage=<stage>]: <message>` to stderr and exit with 1 (usage),
//! 2 (data) or 3 (numerical failure).

pub mod args;
pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::{FileConfig, RunConfig};
use error::{CliError, EXIT_OK, EXIT_USAGE};

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => commands::cmd_synth(&args).map(|_| ()),
        Command::Run(args) => {
            let file = match &args.config {
                Some(path) => FileConfig::load(path)?,
                None => FileConfig::default(),
            };
            let cfg = RunConfig::resolve(&args, file, commands::env_out_dir())?;
            let outcome = commands::cmd_run(&cfg)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let _ = commands::print_summary(&mut out, "all classes", &outcome.summary);
            for (name, rows) in &outcome.triad_summaries {
                let _ = commands::print_summary(&mut out, &format!("triad {name}"), rows);
            }
            let _ = writeln!(out, "report written to {}", cfg.out_dir.display());
            Ok(())
        }
        Command::Attribute(args) => commands::cmd_attribute(&args).map(|_| ()),
        Command::ExportLatent(args) => {
            let files = commands::cmd_export_latent(&args, commands::env_out_dir())?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error[stage={}]: {e}", e.stage());
            e.exit_code()
        }
    }
}
