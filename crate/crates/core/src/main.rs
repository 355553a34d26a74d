use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inoue_core::cli::{run, CliError, Command, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "inoue", about = "Inoue-Bombieri surfaces: leafwise flat representatives and normalized Chern-Ricci flow")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    tmax: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Build the surface and report its arithmetic data.
    Surface,
    /// Fiber integrals and obstruction pairings of the initial metric.
    CheckGauduchon,
    /// Strongly leafwise flat representative of the initial metric.
    SolveSlf,
    /// Normalized Chern-Ricci flow with diagnostics.
    Flow,
    /// All of the above.
    Report,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd = match args.cmd {
        Cmd::Surface => Command::Surface,
        Cmd::CheckGauduchon => Command::CheckGauduchon,
        Cmd::SolveSlf => Command::SolveSlf,
        Cmd::Flow => Command::Flow,
        Cmd::Report => Command::Report,
    };
    let overrides = Overrides { out: args.out, seed: args.seed, resolution: args.resolution, tmax: args.tmax, dt: args.dt };
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
    .and_then(|c| c.apply(&overrides));
    let result: Result<_, CliError> = cfg.and_then(|c| run(cmd, &c));
    match result {
        Ok(report) => {
            for (name, pass) in &report.checks {
                println!("{name}: {}", if *pass { "pass" } else { "fail" });
            }
            println!("report written to {}", report.config.output.join("report.toml").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
