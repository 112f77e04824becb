use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdcluster::scenario::{run_scenario, RunOptions, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "qdcluster", version, about = "Run quantum-dot cluster-state scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one JSON scenario and write its reports.
    Run {
        /// Scenario file.
        path: PathBuf,
        /// Dotted-path override, e.g. `lattice.rows=3`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Report directory; defaults to the scenario's `output_path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overwrite an existing report.
        #[arg(long)]
        force: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let Command::Run { path, overrides, out, seed, force } = cli.command;
    let opts = RunOptions { overrides, out, seed, force };
    match run_scenario(&path, &opts) {
        Ok(report) => {
            for c in &report.outcome.checks {
                let mark = if c.pass { "ok  " } else { "FAIL" };
                println!("{mark} {:<36} {:>12.4e}  {}", c.name, c.value, c.tolerance);
            }
            println!("report: {}", report.dir.display());
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
