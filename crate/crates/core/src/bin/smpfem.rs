use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smpfem::scenario::{emit_outputs, parse_config, run, validate, Mode, Overrides, Scenario};

/// Overrides the output directory of every run.
const OUT_ENV: &str = "SMPFEM_OUT";

#[derive(Parser)]
#[command(name = "smpfem", version, about = "Coil-heated shape memory polymer finite elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its outputs.
    Solve {
        config: PathBuf,
        /// Output directory (precedence: --out, then $SMPFEM_OUT, then the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = ["sec", "cvs"])]
        scenario: Option<String>,
        #[arg(long, value_parser = ["imposed", "coupled"])]
        mode: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        /// Parse the config, print the validity estimates and exit.
        #[arg(long)]
        validate_only: bool,
    },
}

fn solve(
    config: &Path,
    out: Option<PathBuf>,
    scenario: Option<String>,
    mode: Option<String>,
    dt: Option<f64>,
    validate_only: bool,
) -> smpfem::Result<()> {
    let overrides = Overrides {
        scenario: scenario.map(|s| s.parse::<Scenario>()).transpose()?,
        mode: mode.map(|s| s.parse::<Mode>()).transpose()?,
        dt,
        out: out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)),
    };
    let cfg = parse_config(config, &overrides)?;
    let base = config.parent().unwrap_or(Path::new("."));
    if validate_only {
        let v = validate(&cfg, base)?;
        println!("{}", serde_json::to_string_pretty(&v).expect("plain data serializes"));
        return Ok(());
    }
    eprintln!("{} ({} mode), writing to {}", cfg.scenario, cfg.mode, cfg.output.dir.display());
    let result = run(&cfg, base)?;
    let files = emit_outputs(&result, &cfg.output.dir)?;
    let iterations: usize = result.reports.iter().map(|r| r.iterations).sum();
    let cuts: usize = result.reports.iter().map(|r| r.cuts).sum();
    eprintln!(
        "{} steps, {} Newton iterations, {} cuts, {} files",
        result.reports.len(),
        iterations,
        cuts,
        files.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Solve {
        config,
        out,
        scenario,
        mode,
        dt,
        validate_only,
    } = cli.command;
    match solve(&config, out, scenario, mode, dt, validate_only) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
