use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stefan_relax::config::{Mode, Overrides};
use stefan_relax::run::{exit_code, run_file};

#[derive(Parser, Debug)]
#[command(name = "stefan-relax", version, about = "Relaxed and enthalpy Stefan solvers")]
struct Cli {
    /// run-relaxed, run-stefan, sweep, check-estimates, compare or contdep
    mode: Mode,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        mode: Some(cli.mode),
        out: cli.out,
        eps: cli.eps,
        dt: cli.dt,
        nodes: cli.nodes,
    };
    match run_file(&cli.config, &overrides) {
        Ok(report) => {
            for line in report.failures.iter().chain(&report.violations) {
                eprintln!("{line}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
