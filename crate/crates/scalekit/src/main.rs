use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scalekit::cli::{self, Command};

#[derive(Parser)]
#[command(
    name = "scalekit",
    version,
    about = "Scale functions of spectrally negative Levy processes via an \
             upwards-skip-free chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML manifest describing the model and the experiment.
    #[arg(long)]
    config: PathBuf,
    /// Prefix for emitted CSV files.
    #[arg(long, default_value = "scalekit-")]
    out: String,
    /// Worker threads (falls back to SCALEKIT_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate W and Z on a grid.
    Scale(Common),
    /// Grid-refinement error sweep against an oracle.
    Sweep(Common),
    /// Density of the deficit at ruin.
    Ruin(Common),
    /// Killing function of the branching-with-immigration representation.
    Cbi(Common),
    /// Small-jump diagnostics and step admissibility report.
    Diagnose(Common),
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("SCALEKIT_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("SCALEKIT_THREADS must be a positive integer, got {v:?}")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match &cli.command {
        Cmd::Scale(c) => (Command::Scale, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Ruin(c) => (Command::Ruin, c),
        Cmd::Cbi(c) => (Command::Cbi, c),
        Cmd::Diagnose(c) => (Command::Diagnose, c),
    };
    let threads = match thread_count(common.threads) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: invalid-config: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: invalid-config: thread count must be at least 1");
            return ExitCode::from(2);
        }
        // ignore a repeat initialization; the first pool wins
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let config = match cli::load_config(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli::error_category(&e));
            return ExitCode::from(cli::exit_code(&e) as u8);
        }
    };
    match cli::run(cmd, &config, &common.out) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {e}", cli::error_category(&e));
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
