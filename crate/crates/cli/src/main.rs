use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSub};
use freeclt_cli::{run, ExperimentConfig, RunError, RunOptions, Subcommand};

#[derive(Parser)]
#[command(name = "freeclt", version, about = "Free central limit theorem experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSub)]
enum Command {
    /// Run one experiment described by a JSON config.
    Run {
        #[arg(value_enum)]
        subcommand: Subcommand,
        #[arg(long)]
        config: PathBuf,
        /// Seed for the Monte Carlo oracle (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Record wall-clock milliseconds in the wall_ms column.
        #[arg(long)]
        timing: bool,
    },
}

fn execute(cmd: Subcommand, config: &Path, opts: RunOptions, threads: Option<usize>) -> Result<Vec<String>, RunError> {
    let cfg = ExperimentConfig::load(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(RunError::Config("--threads must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
    let out = pool.install(|| run(cmd, &cfg, &opts))?;
    let mut lines: Vec<String> = out.files.iter().map(|f| format!("wrote {}", f.display())).collect();
    lines.extend(out.notes);
    Ok(lines)
}

fn main() -> ExitCode {
    let Command::Run { subcommand, config, seed, threads, timing } = Cli::parse().command;
    match execute(subcommand, &config, RunOptions { seed, timing }, threads) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
