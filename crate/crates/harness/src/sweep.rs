//! Parameter sweeps: one independent run directory per axis value.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::SweepConfig;
use crate::error::HarnessError;
use crate::format::{create_dir, fmt_f64, write_text};
use crate::run::{run_simulation, RunSummary};

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub directory: PathBuf,
    pub result: Result<SweepMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMetrics {
    pub eta_hat: Option<f64>,
    pub r_squared: Option<f64>,
    pub min_v_overall: f64,
    pub min_theta_overall: f64,
    pub entropy_residual: f64,
}

impl SweepMetrics {
    fn from_summary(summary: &RunSummary) -> Self {
        let fit = summary.decay_fit.fit;
        Self {
            eta_hat: fit.map(|f| f.eta_hat),
            r_squared: fit.and_then(|f| f.r_squared),
            min_v_overall: summary.extremes.min_v,
            min_theta_overall: summary.extremes.min_theta,
            entropy_residual: summary.entropy_budget.max_residual,
        }
    }
}

pub const SWEEP_HEADER: &str = "axis_value,eta_hat,r_squared,min_v_overall,min_theta_overall,entropy_residual";

/// Name of the run directory for one axis value.
pub fn run_dir_name(axis: &str, value: f64) -> String {
    format!("{axis}={}", fmt_f64(value))
}

/// Runs every value with at most `cfg.workers` runs in flight, writes
/// `sweep.csv` into the base output directory and returns the rows in the
/// order of `cfg.values`. A failed run becomes an `error` row.
pub fn run_sweep(cfg: &SweepConfig) -> Result<(PathBuf, Vec<SweepRow>), HarnessError> {
    let root = cfg.base.output.directory.clone();
    create_dir(&root)?;
    let jobs: Vec<_> = cfg
        .values
        .iter()
        .zip(&cfg.runs)
        .map(|(&value, run)| {
            let mut run = run.clone();
            run.output.directory = root.join(run_dir_name(&cfg.axis, value));
            (value, run)
        })
        .collect();

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; jobs.len()]);
    let workers = cfg.workers.min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((value, run)) = jobs.get(i) else {
                    break;
                };
                let result = match run_simulation(run) {
                    Ok((_, summary)) => Ok(SweepMetrics::from_summary(&summary)),
                    Err(e) => {
                        let message = e.to_string();
                        let _ = create_dir(&run.output.directory)
                            .and_then(|_| write_text(&run.output.directory.join("error.txt"), &format!("{message}\n")));
                        Err(message)
                    }
                };
                let row = SweepRow {
                    axis_value: *value,
                    directory: run.output.directory.clone(),
                    result,
                };
                slots.lock().expect("sweep results lock")[i] = Some(row);
            });
        }
    });
    let rows: Vec<SweepRow> = slots
        .into_inner()
        .expect("sweep results lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect();

    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&format_row(row));
        csv.push('\n');
    }
    write_text(&root.join("sweep.csv"), &csv)?;
    Ok((root, rows))
}

fn format_row(row: &SweepRow) -> String {
    let value = fmt_f64(row.axis_value);
    match &row.result {
        Ok(m) => {
            let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), fmt_f64);
            format!(
                "{value},{},{},{},{},{}",
                opt(m.eta_hat),
                opt(m.r_squared),
                fmt_f64(m.min_v_overall),
                fmt_f64(m.min_theta_overall),
                fmt_f64(m.entropy_residual)
            )
        }
        Err(_) => format!("{value},error,error,error,error,error"),
    }
}
