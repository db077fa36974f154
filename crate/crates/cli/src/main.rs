use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use qphase_cli::{parse_config, run, RunConfig, EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};

#[derive(Parser)]
#[command(
    name = "qphase",
    version,
    about = "Phase-space wave mechanics scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its result files.
    Run {
        config: PathBuf,
        /// Exit with status 4 when a scenario check fails.
        #[arg(long)]
        check: bool,
        /// Output directory; overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a configuration without running it.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<RunConfig, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        EXIT_CONFIG
    })?;
    parse_config(&text).map_err(|errs| {
        for e in &errs.0 {
            eprintln!("{}: {e}", path.display());
        }
        EXIT_CONFIG
    })
}

fn set_threads() -> Result<(), u8> {
    let Ok(raw) = std::env::var("QPHASE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        eprintln!("QPHASE_THREADS must be a non-negative integer, got `{raw}`");
        EXIT_CONFIG
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| {
                eprintln!("cannot start {n} worker threads: {e}");
                EXIT_RUNTIME
            })?;
    }
    Ok(())
}

fn main_inner() -> Result<u8, u8> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    set_threads()?;
    match cli.command {
        Command::Validate { config } => {
            let c = load(&config)?;
            println!("{}: ok ({})", config.display(), c.scenario.name());
            Ok(EXIT_OK)
        }
        Command::Run { config, check, out } => {
            let c = load(&config)?;
            let dir = out.unwrap_or_else(|| c.output.directory.clone());
            info!("running {} into {}", c.scenario.name(), dir.display());
            let report = run(&c, &dir).map_err(|e| {
                eprintln!("{}: run aborted: {e}", c.scenario.name());
                EXIT_RUNTIME
            })?;
            for (k, v) in &report.results {
                println!("{k} = {v}");
            }
            for ch in &report.checks {
                println!(
                    "{} {}: {}",
                    if ch.passed { "PASS" } else { "FAIL" },
                    ch.name,
                    ch.detail
                );
            }
            if check && !report.all_passed() {
                eprintln!("{}: check failed", c.scenario.name());
                return Ok(EXIT_CHECK);
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(code) | Err(code) => ExitCode::from(code),
    }
}
