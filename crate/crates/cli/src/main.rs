use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use starrep_cli::{run_path, Overrides};

#[derive(Parser)]
#[command(name = "starrep", version, about = "Batch sessions over representation structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every command of a session config.
    Run {
        config: PathBuf,
        /// Override the session seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json and CSV files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the session tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn main() -> ExitCode {
    let Command::Run { config, seed, out, tolerance } = Cli::parse().command;
    let (report, code) = run_path(&config, Overrides { seed, tolerance }, &out);
    if let Some(e) = &report.error {
        eprintln!("starrep: {e}");
    }
    for c in &report.commands {
        let status = serde_json::to_value(c.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        println!("{:<24} {:<12} {status}", c.name, c.kind);
        for m in &c.messages {
            println!("    {m}");
        }
    }
    ExitCode::from(code as u8)
}
