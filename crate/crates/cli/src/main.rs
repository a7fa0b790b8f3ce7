use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qpm_cli::{presets, run, CliError, ExperimentConfig, RunOptions};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  i/o error
  2  invalid configuration or arguments
  3  numerical failure during the simulation";

#[derive(Parser)]
#[command(name = "qpm", version, about = "Dipole-dipole transfer and quasi-phase-matched field-jump simulations", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in preset, see `qpm presets`.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSVs plus a JSON manifest.
    #[command(after_help = EXIT_CODES)]
    Run {
        #[command(flatten)]
        source: Source,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's output_dir, else out/<name>).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        /// Progress on stderr and extra per-group dumps.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Check a config and report every problem found.
    #[command(after_help = EXIT_CODES)]
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// List presets, or print one as TOML.
    Presets { name: Option<String> },
}

fn load(source: &Source) -> Result<ExperimentConfig, CliError> {
    match (&source.config, &source.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text).map_err(|e| match e {
                CliError::Validation(v) => CliError::Validation(
                    v.into_iter()
                        .map(|m| format!("{}: {m}", path.display()))
                        .collect(),
                ),
                other => other,
            })
        }
        (None, Some(name)) => presets::load(name),
        (None, None) => unreachable!("clap requires a source"),
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            source,
            seed,
            out,
            workers,
            verbose,
        } => {
            let mut cfg = load(&source)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let m = run(
                &cfg,
                &RunOptions {
                    out_dir: out,
                    workers,
                    verbose,
                },
            )?;
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: {} files in {} ({:.2} s, config {})",
                m.name,
                m.outputs.len() + 1,
                m.output_dir.display(),
                m.wall_time_s,
                m.config_hash
            );
        }
        Command::Validate { source } => {
            let cfg = load(&source)?;
            cfg.validate()?;
            for w in cfg.warnings() {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: valid {} experiment, config {}",
                cfg.name,
                cfg.experiment.as_str(),
                cfg.hash()
            );
        }
        Command::Presets { name: None } => {
            for n in presets::names() {
                println!("{n}");
            }
        }
        Command::Presets { name: Some(n) } => match presets::source(&n) {
            Some(text) => print!("{text}"),
            None => return Err(presets::load(&n).unwrap_err()),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
