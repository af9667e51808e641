use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mhd1d::config::{MmsConfig, RunConfig, SweepConfig};
use mhd1d::format::create_dir;
use mhd1d::run::{describe, read_h1_series, FitReport};
use mhd1d::{mms, run_simulation, run_sweep, verify, HarnessError, OUTPUT_ENV};
use mhd1d_core::fit_decay_rate;

/// Planar compressible MHD in Lagrangian mass coordinates.
#[derive(Debug, Parser)]
#[command(name = "mhd1d", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write its output directory.
    Run { config: PathBuf },
    /// Run one simulation per value of a swept parameter.
    Sweep { config: PathBuf },
    /// Manufactured-solution convergence study.
    Mms { config: PathBuf },
    /// Run the acceptance suite.
    Verify {
        /// Only evaluate these criteria (e.g. c03); repeatable.
        #[arg(long = "only")]
        only: Vec<String>,
        /// Also write the report as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fit an exponential decay rate to the h1_dist column of a diagnostics file.
    FitDecay {
        diagnostics: PathBuf,
        /// Fit window; defaults to the whole time range.
        #[arg(long, num_args = 2, value_names = ["T_LO", "T_HI"], allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
    },
}

fn output_override(directory: &mut PathBuf) {
    if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|d| !d.is_empty()) {
        *directory = PathBuf::from(dir);
    }
}

fn load_run(path: &Path) -> Result<RunConfig, HarnessError> {
    let mut cfg = RunConfig::from_file(path)?;
    output_override(&mut cfg.output.directory);
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { config } => {
            let cfg = load_run(&config)?;
            let (dir, summary) = run_simulation(&cfg)?;
            println!("{}", describe(&summary));
            println!("wrote {}", dir.display());
        }
        Command::Sweep { config } => {
            let mut cfg = SweepConfig::from_file(&config)?;
            if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|d| !d.is_empty()) {
                cfg.base.output.directory = PathBuf::from(dir);
            }
            let (dir, rows) = run_sweep(&cfg)?;
            for row in &rows {
                match &row.result {
                    Ok(m) => println!(
                        "{} = {}: eta_hat {}, min v {:.6}, min theta {:.6}",
                        cfg.axis,
                        row.axis_value,
                        m.eta_hat.map_or("n/a".into(), |e| format!("{e:.6}")),
                        m.min_v_overall,
                        m.min_theta_overall
                    ),
                    Err(e) => println!("{} = {}: error: {e}", cfg.axis, row.axis_value),
                }
            }
            println!("wrote {}", dir.join("sweep.csv").display());
        }
        Command::Mms { config } => {
            let mut cfg = MmsConfig::from_file(&config)?;
            output_override(&mut cfg.base.output.directory);
            let report = mms::mms_convergence(&cfg)?;
            print!("{}", mms::render(&report));
            mms::write_report(&cfg.base.output.directory, &report)?;
            println!("wrote {}", cfg.base.output.directory.join("mms.csv").display());
        }
        Command::Verify { only, json } => {
            let known: Vec<&str> = verify::registry().iter().map(|c| c.id()).collect();
            if let Some(bad) = only.iter().find(|id| !known.contains(&id.as_str())) {
                return Err(HarnessError::Usage(format!(
                    "unknown criterion {bad:?}; known: {}",
                    known.join(", ")
                )));
            }
            let reports = verify::evaluate_all(&only);
            for r in &reports {
                println!("{}", r.line());
            }
            if let Some(path) = json {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    create_dir(parent)?;
                }
                let text = serde_json::to_string_pretty(&reports)? + "\n";
                mhd1d::format::write_text(&path, &text)?;
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed", reports.len() - failed, reports.len());
            if failed > 0 {
                return Err(HarnessError::Acceptance { failed });
            }
        }
        Command::FitDecay { diagnostics, window } => {
            let series = read_h1_series(&diagnostics).map_err(|e| match e {
                HarnessError::Csv(e) => HarnessError::Usage(e.to_string()),
                other => other,
            })?;
            let window = match window.as_deref() {
                Some([lo, hi]) => (*lo, *hi),
                _ => {
                    let lo = series.first().map_or(0.0, |s| s.0);
                    let hi = series.last().map_or(0.0, |s| s.0);
                    (lo, hi)
                }
            };
            let fit = fit_decay_rate(&series, window)?;
            let report = FitReport {
                window,
                fit: Some(fit),
                error: None,
            };
            println!("{}", serde_json::to_string(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
