//! A single simulation: time loop, per-step diagnostics and the files a run
//! directory holds.

use std::path::{Path, PathBuf};

use mhd1d_core::diagnostics::invariant_target;
use mhd1d_core::{
    advance_to, alpha_bracket, check_entropy_budget, compute_e0, equilibrium_state, fit_decay_rate,
    h1_distance, make_initial, normalize, snapshot_diagnostics, AlphaBracket, DecayFit,
    DiagnosticsRecord, EntropyBudget, EquilibriumTarget, Grid, PhysParams, ReconstructionAccumulator,
    SimState,
};
use serde::Serialize;

use crate::config::{RunConfig, TargetMode};
use crate::error::HarnessError;
use crate::format::{create_dir, fmt_f64, write_float_csv, write_text};
use crate::svg::{line_chart, Series};

/// Volume-representation check after one accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructionSample {
    pub t: f64,
    pub log_y: f64,
    pub max_abs_error: f64,
    /// `max |v_rec - v| / v` over cells.
    pub max_rel_error: f64,
}

impl ReconstructionSample {
    pub const CSV_HEADER: [&'static str; 4] = ["t", "log_y", "max_abs_error", "max_rel_error"];

    fn values(&self) -> [f64; 4] {
        [self.t, self.log_y, self.max_abs_error, self.max_rel_error]
    }
}

/// Everything a run produced, held in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub physics: PhysParams,
    pub initial: SimState,
    pub final_state: SimState,
    /// One record for the initial state and one per accepted step.
    pub records: Vec<DiagnosticsRecord>,
    /// H¹ distance to the initial target, parallel to `records`.
    pub h1_initial_target: Vec<f64>,
    /// Parallel to `records`; empty outside normalized mode.
    pub reconstruction: Vec<ReconstructionSample>,
    pub accepted_steps: usize,
    pub retries: usize,
    pub picard_warnings: usize,
}

impl RunOutcome {
    pub fn min_v_overall(&self) -> f64 {
        self.records.iter().map(|r| r.min_v).fold(f64::INFINITY, f64::min)
    }

    pub fn min_theta_overall(&self) -> f64 {
        self.records.iter().map(|r| r.min_theta).fold(f64::INFINITY, f64::min)
    }

    pub fn h1_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.h1_dist)).collect()
    }

    pub fn entropy_budget(&self) -> EntropyBudget {
        check_entropy_budget(&self.records)
    }

    pub fn e0(&self) -> f64 {
        compute_e0(&self.initial, &self.physics)
    }
}

/// Initial state of a run: the named family, rescaled in normalized mode.
pub fn initial_state(cfg: &RunConfig) -> Result<SimState, HarnessError> {
    let grid = Grid::new(cfg.n_cells)?;
    let raw = make_initial(&cfg.init, grid)?;
    Ok(if cfg.normalized_mode {
        normalize(&raw, &cfg.physics)?
    } else {
        raw
    })
}

fn initial_target(cfg: &RunConfig, s0: &SimState) -> Result<EquilibriumTarget, HarnessError> {
    if cfg.normalized_mode {
        Ok(EquilibriumTarget::normalized())
    } else {
        Ok(invariant_target(s0, &cfg.physics)?)
    }
}

/// Runs the configuration in memory. `on_step` sees the step index
/// (0 for the initial state) and the state after it.
pub fn simulate_with<F>(cfg: &RunConfig, mut on_step: F) -> Result<RunOutcome, HarnessError>
where
    F: FnMut(usize, &SimState) -> Result<(), HarnessError>,
{
    let p = cfg.physics;
    let s0 = initial_state(cfg)?;
    let fixed = initial_target(cfg, &s0)?;
    let target_for = |s: &SimState| -> Result<EquilibriumTarget, HarnessError> {
        match cfg.target_mode {
            TargetMode::Initial => Ok(fixed),
            TargetMode::Invariant => Ok(invariant_target(s, &p)?),
        }
    };

    let mut records = vec![snapshot_diagnostics(&s0, &p, &target_for(&s0)?, 0.0)?];
    let mut h1_initial_target = vec![h1_distance(&s0, &fixed)?];
    let mut accumulator = if cfg.normalized_mode {
        Some(ReconstructionAccumulator::new(&s0, &p)?)
    } else {
        None
    };
    let mut reconstruction = Vec::new();
    if let Some(acc) = &accumulator {
        reconstruction.push(reconstruction_sample(acc, &s0)?);
    }
    on_step(0, &s0)?;

    let mut failure: Option<HarnessError> = None;
    let mut index = 0;
    let summary = advance_to(&s0, &p, &cfg.controls, cfg.t_end, |s, dt, _| {
        if failure.is_some() {
            return;
        }
        index += 1;
        let result = (|| -> Result<(), HarnessError> {
            records.push(snapshot_diagnostics(s, &p, &target_for(s)?, dt)?);
            h1_initial_target.push(h1_distance(s, &fixed)?);
            if let Some(acc) = accumulator.as_mut() {
                acc.update(s, dt)?;
                reconstruction.push(reconstruction_sample(acc, s)?);
            }
            on_step(index, s)
        })();
        if let Err(e) = result {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    Ok(RunOutcome {
        physics: p,
        initial: s0,
        final_state: summary.state,
        records,
        h1_initial_target,
        reconstruction,
        accepted_steps: summary.accepted_steps,
        retries: summary.retries,
        picard_warnings: summary.picard_warnings,
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<RunOutcome, HarnessError> {
    simulate_with(cfg, |_, _| Ok(()))
}

fn reconstruction_sample(
    acc: &ReconstructionAccumulator,
    s: &SimState,
) -> Result<ReconstructionSample, HarnessError> {
    let rebuilt = acc.reconstruct_v(s)?;
    let (mut max_abs_error, mut max_rel_error) = (0.0f64, 0.0f64);
    for (r, v) in rebuilt.iter().zip(&s.v) {
        max_abs_error = max_abs_error.max((r - v).abs());
        max_rel_error = max_rel_error.max(((r - v) / v).abs());
    }
    Ok(ReconstructionSample {
        t: s.t,
        log_y: acc.log_y(),
        max_abs_error,
        max_rel_error,
    })
}

/// Outcome of a decay fit, kept even when the fit is impossible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub window: (f64, f64),
    #[serde(flatten)]
    pub fit: Option<DecayFit>,
    pub error: Option<String>,
}

impl FitReport {
    pub fn new(series: &[(f64, f64)], window: (f64, f64)) -> Self {
        match fit_decay_rate(series, window) {
            Ok(fit) => Self {
                window,
                fit: Some(fit),
                error: None,
            },
            Err(e) => Self {
                window,
                fit: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremes {
    pub min_v: f64,
    pub max_v: f64,
    pub min_theta: f64,
    pub max_theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionSummary {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub n_cells: usize,
    pub t_end: f64,
    pub beta: f64,
    pub normalized_mode: bool,
    pub h1_target: &'static str,
    pub accepted_steps: usize,
    pub retries: usize,
    pub picard_warnings: usize,
    pub final_diagnostics: DiagnosticsRecord,
    pub extremes: Extremes,
    /// `max |mass(t) - mass(0)|`.
    pub max_mass_error: f64,
    /// `max |E_tot(t) - E_tot(0)| / E_tot(0)`.
    pub max_energy_drift: f64,
    pub e0: f64,
    /// Present in normalized mode.
    pub alpha_bracket: Option<AlphaBracket>,
    pub theta_bar_range: (f64, f64),
    pub entropy_budget: EntropyBudget,
    pub decay_fit: FitReport,
    /// The same fit against the fixed initial equilibrium.
    pub decay_fit_initial_target: FitReport,
    pub reconstruction: Option<ReconstructionSummary>,
}

impl RunSummary {
    pub fn new(cfg: &RunConfig, run: &RunOutcome) -> Self {
        let first = run.records[0];
        let fold = |f: fn(&DiagnosticsRecord) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
            run.records.iter().map(f).fold(init, pick)
        };
        let extremes = Extremes {
            min_v: fold(|r| r.min_v, f64::INFINITY, f64::min),
            max_v: fold(|r| r.max_v, f64::NEG_INFINITY, f64::max),
            min_theta: fold(|r| r.min_theta, f64::INFINITY, f64::min),
            max_theta: fold(|r| r.max_theta, f64::NEG_INFINITY, f64::max),
        };
        let max_mass_error = run
            .records
            .iter()
            .map(|r| (r.mass - first.mass).abs())
            .fold(0.0, f64::max);
        let max_energy_drift = run
            .records
            .iter()
            .map(|r| ((r.total_energy - first.total_energy) / first.total_energy).abs())
            .fold(0.0, f64::max);
        let e0 = run.e0();
        let alpha_bracket = if cfg.normalized_mode {
            alpha_bracket(e0).ok()
        } else {
            None
        };
        let fixed_series: Vec<(f64, f64)> = run
            .records
            .iter()
            .zip(&run.h1_initial_target)
            .map(|(r, &h)| (r.t, h))
            .collect();
        let reconstruction = (!run.reconstruction.is_empty()).then(|| ReconstructionSummary {
            max_rel_error: run.reconstruction.iter().map(|r| r.max_rel_error).fold(0.0, f64::max),
            max_abs_error: run.reconstruction.iter().map(|r| r.max_abs_error).fold(0.0, f64::max),
        });
        Self {
            n_cells: cfg.n_cells,
            t_end: cfg.t_end,
            beta: cfg.physics.beta,
            normalized_mode: cfg.normalized_mode,
            h1_target: match cfg.target_mode {
                TargetMode::Invariant => "invariant",
                TargetMode::Initial => "initial",
            },
            accepted_steps: run.accepted_steps,
            retries: run.retries,
            picard_warnings: run.picard_warnings,
            final_diagnostics: *run.records.last().expect("records start with the initial state"),
            extremes,
            max_mass_error,
            max_energy_drift,
            e0,
            alpha_bracket,
            theta_bar_range: (
                fold(|r| r.theta_bar, f64::INFINITY, f64::min),
                fold(|r| r.theta_bar, f64::NEG_INFINITY, f64::max),
            ),
            entropy_budget: run.entropy_budget(),
            decay_fit: FitReport::new(&run.h1_series(), cfg.fit_window),
            decay_fit_initial_target: FitReport::new(&fixed_series, cfg.fit_window),
            reconstruction,
        }
    }
}

/// Runs the configuration and writes its directory:
/// `diagnostics.csv`, `snapshots/`, `reconstruction.csv` (normalized mode),
/// `summary.json` and, if enabled, SVG plots.
pub fn run_simulation(cfg: &RunConfig) -> Result<(PathBuf, RunSummary), HarnessError> {
    let dir = cfg.output.directory.clone();
    let snap_dir = dir.join("snapshots");
    create_dir(&snap_dir)?;

    let every = cfg.output.snapshot_every;
    let mut last_written = None;
    let run = simulate_with(cfg, |index, s| {
        if index == 0 || (every > 0 && index % every == 0) {
            write_snapshot(&snap_dir, s)?;
            last_written = Some(index);
        }
        Ok(())
    })?;
    if last_written != Some(run.accepted_steps) {
        write_snapshot(&snap_dir, &run.final_state)?;
    }

    let stride = cfg.output.diag_every;
    let rows: Vec<[f64; 13]> = run.records.iter().step_by(stride).map(|r| r.values()).collect();
    write_float_csv(
        &dir.join("diagnostics.csv"),
        &DiagnosticsRecord::CSV_HEADER,
        rows.iter().map(|r| r.as_slice()),
    )?;
    if cfg.normalized_mode {
        let rows: Vec<[f64; 4]> = run.reconstruction.iter().step_by(stride).map(|r| r.values()).collect();
        write_float_csv(
            &dir.join("reconstruction.csv"),
            &ReconstructionSample::CSV_HEADER,
            rows.iter().map(|r| r.as_slice()),
        )?;
    }

    let summary = RunSummary::new(cfg, &run);
    write_text(&dir.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    if cfg.output.emit_plots {
        write_plots(&dir, &run)?;
    }
    Ok((dir, summary))
}

fn snapshot_name(kind: &str, t: f64) -> String {
    format!("snap_{kind}_{t:.6}.csv")
}

pub fn write_snapshot(dir: &Path, s: &SimState) -> Result<(), HarnessError> {
    let cells: Vec<[f64; 3]> = (0..s.n_cells())
        .map(|c| [s.grid.cell_x(c), s.v[c], s.theta[c]])
        .collect();
    write_float_csv(
        &dir.join(snapshot_name("cells", s.t)),
        &["x", "v", "theta"],
        cells.iter().map(|r| r.as_slice()),
    )?;
    let nodes: Vec<[f64; 6]> = (0..=s.n_cells())
        .map(|j| [s.grid.node_x(j), s.u[j], s.w[j][0], s.w[j][1], s.b[j][0], s.b[j][1]])
        .collect();
    write_float_csv(
        &dir.join(snapshot_name("nodes", s.t)),
        &["x", "u", "w1", "w2", "b1", "b2"],
        nodes.iter().map(|r| r.as_slice()),
    )
}

fn write_plots(dir: &Path, run: &RunOutcome) -> Result<(), HarnessError> {
    let ln_h1: Vec<(f64, f64)> = run
        .records
        .iter()
        .filter(|r| r.h1_dist > 0.0)
        .map(|r| (r.t, r.h1_dist.ln()))
        .collect();
    let chart = line_chart(
        "ln H1 distance to equilibrium",
        "t",
        "ln h1_dist",
        &[Series::new("h1_dist", ln_h1)],
    );
    write_text(&dir.join("h1_decay.svg"), &chart)?;

    let min_v = run.records.iter().map(|r| (r.t, r.min_v)).collect();
    let min_theta = run.records.iter().map(|r| (r.t, r.min_theta)).collect();
    let chart = line_chart(
        "Lower bounds of v and theta",
        "t",
        "minimum",
        &[Series::new("min v", min_v), Series::new("min theta", min_theta)],
    );
    write_text(&dir.join("positivity.svg"), &chart)
}

/// The diagnostics record of a constant state, for comparisons.
pub fn equilibrium_record(cfg: &RunConfig) -> Result<DiagnosticsRecord, HarnessError> {
    let grid = Grid::new(cfg.n_cells)?;
    let target = EquilibriumTarget::normalized();
    let s = equilibrium_state(grid, target)?;
    Ok(snapshot_diagnostics(&s, &cfg.physics, &target, 0.0)?)
}

/// Reads `t` and `h1_dist` columns from a diagnostics file.
pub fn read_h1_series(path: &Path) -> Result<Vec<(f64, f64)>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Usage(format!("{} has no {name} column", path.display())))
    };
    let (t_col, h_col) = (column("t")?, column("h1_dist")?);
    let mut series = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |col: usize| {
            record[col].parse::<f64>().map_err(|e| {
                HarnessError::Usage(format!("{} row {}: {e}", path.display(), line + 2))
            })
        };
        series.push((parse(t_col)?, parse(h_col)?));
    }
    Ok(series)
}

/// Prints a one-line description of a finished run.
pub fn describe(summary: &RunSummary) -> String {
    let fit = match (&summary.decay_fit.fit, &summary.decay_fit.error) {
        (Some(f), _) => format!(
            "eta_hat {} r2 {}",
            fmt_f64(f.eta_hat),
            f.r_squared.map_or("n/a".into(), fmt_f64)
        ),
        (None, Some(e)) => format!("no decay fit ({e})"),
        (None, None) => "no decay fit".into(),
    };
    format!(
        "{} steps to t = {}; min v {}, min theta {}; {fit}",
        summary.accepted_steps,
        fmt_f64(summary.final_diagnostics.t),
        fmt_f64(summary.extremes.min_v),
        fmt_f64(summary.extremes.min_theta),
    )
}
