//! The acceptance suite: a registry of named criteria evaluated against a
//! shared cache of reference runs.
//!
//! Criteria that look at the same simulation share one run; each run is
//! computed at most once per process, whichever criterion asks first.
//! Runtime budgets are checked against the wall time of the runs a
//! criterion owns, so they do not depend on evaluation order.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use mhd1d_core::{
    alpha_bracket, compute_dt, compute_e0, equilibrium_state, DiagnosticsRecord, fit_decay_rate, make_initial,
    snapshot_diagnostics, solve_tridiagonal, step, EquilibriumTarget, Grid, InitFamily, PhysParams,
    SimState, StepControls,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{MmsConfig, RunConfig};
use crate::error::HarnessError;
use crate::mms::{mms_convergence, FIELDS};
use crate::run::{simulate, RunOutcome};

/// The verdict of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub passed: bool,
    pub measured: String,
    pub required: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub measured: String,
    pub required: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "{} {} {}: measured {}; required {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.measured,
            self.required,
            self.seconds
        )
    }
}

pub trait Criterion: Send + Sync {
    fn id(&self) -> &'static str;
    fn title(&self) -> &'static str;
    fn evaluate(&self, cache: &RunCache) -> Result<Check, HarnessError>;
}

/// Reference simulations used by the suite: normalized single-mode data,
/// every amplitude 0.1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub n_cells: usize,
    pub cfl: f64,
    pub beta: f64,
    pub t_end: f64,
}

impl RunSpec {
    pub fn key(&self) -> String {
        format!("n{}_cfl{}_beta{}_t{}", self.n_cells, self.cfl, self.beta, self.t_end)
    }

    pub fn config(&self) -> RunConfig {
        let mut cfg = RunConfig::parse("init.amplitude = 0.1").expect("built-in config parses");
        cfg.n_cells = self.n_cells;
        cfg.controls.cfl = self.cfl;
        cfg.physics = PhysParams::normalized(self.beta).expect("valid beta");
        cfg.t_end = self.t_end;
        cfg
    }
}

pub const ENERGY_RUN: RunSpec = RunSpec {
    n_cells: 200,
    cfl: 0.4,
    beta: 1.0,
    t_end: 5.0,
};
pub const ENERGY_RUN_HALF_DT: RunSpec = RunSpec {
    cfl: 0.2,
    ..ENERGY_RUN
};
pub const ENERGY_RUN_REFINED: RunSpec = RunSpec {
    n_cells: 400,
    ..ENERGY_RUN
};
pub const LONG_RUN: RunSpec = RunSpec {
    n_cells: 100,
    cfl: 0.4,
    beta: 1.0,
    t_end: 50.0,
};
pub const RECONSTRUCTION_RUN: RunSpec = RunSpec {
    n_cells: 400,
    cfl: 0.4,
    beta: 1.0,
    t_end: 2.0,
};
/// Twice the resolution; the CFL step halves with `dx`.
pub const RECONSTRUCTION_RUN_REFINED: RunSpec = RunSpec {
    n_cells: 800,
    ..RECONSTRUCTION_RUN
};
pub const DECAY_BETAS: [f64; 3] = [0.0, 1.0, 2.0];

pub fn decay_run(beta: f64, n_cells: usize) -> RunSpec {
    RunSpec {
        n_cells,
        cfl: 0.4,
        beta,
        t_end: 10.0,
    }
}

/// Every reference run, for the criteria that quantify over all of them.
pub fn all_runs() -> Vec<RunSpec> {
    let mut runs = vec![ENERGY_RUN, ENERGY_RUN_HALF_DT, ENERGY_RUN_REFINED];
    for beta in DECAY_BETAS {
        runs.push(decay_run(beta, 100));
        runs.push(decay_run(beta, 200));
    }
    runs.extend([LONG_RUN, RECONSTRUCTION_RUN, RECONSTRUCTION_RUN_REFINED]);
    runs
}

#[derive(Debug)]
pub struct TimedRun {
    pub spec: RunSpec,
    pub outcome: RunOutcome,
    pub seconds: f64,
}

type Slot = Arc<OnceLock<Result<Arc<TimedRun>, String>>>;

/// Runs computed at most once, shareable across threads.
#[derive(Default)]
pub struct RunCache {
    slots: Mutex<BTreeMap<String, Slot>>,
}

impl RunCache {
    pub fn get(&self, spec: RunSpec) -> Result<Arc<TimedRun>, HarnessError> {
        let slot = {
            let mut slots = self.slots.lock().expect("run cache lock");
            slots.entry(spec.key()).or_default().clone()
        };
        slot.get_or_init(|| {
            let start = Instant::now();
            simulate(&spec.config())
                .map(|outcome| {
                    Arc::new(TimedRun {
                        spec,
                        outcome,
                        seconds: start.elapsed().as_secs_f64(),
                    })
                })
                .map_err(|e| format!("run {}: {e}", spec.key()))
        })
        .clone()
        .map_err(HarnessError::Failed)
    }
}

/// The process-wide cache used by [`evaluate_all`].
pub fn shared_cache() -> &'static RunCache {
    static CACHE: OnceLock<RunCache> = OnceLock::new();
    CACHE.get_or_init(RunCache::default)
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn max_by<T>(items: &[T], f: impl Fn(&T) -> f64) -> f64 {
    items.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
}

fn min_by<T>(items: &[T], f: impl Fn(&T) -> f64) -> f64 {
    items.iter().map(f).fold(f64::INFINITY, f64::min)
}

// 1 -------------------------------------------------------------------------

pub const EQUILIBRIUM_STEPS: usize = 10_000;
pub const EQUILIBRIUM_TOL: f64 = 1e-12;
pub const EQUILIBRIUM_BUDGET_S: f64 = 5.0;

struct EquilibriumFixedPoint;

fn linf(a: &SimState, b: &SimState) -> f64 {
    let cells = a.v.iter().zip(&b.v).chain(a.theta.iter().zip(&b.theta));
    let nodes = a.u.iter().zip(&b.u);
    let pairs = a.w.iter().zip(&b.w).chain(a.b.iter().zip(&b.b));
    cells
        .chain(nodes)
        .map(|(x, y)| (x - y).abs())
        .chain(pairs.map(|(x, y)| (x[0] - y[0]).abs().max((x[1] - y[1]).abs())))
        .fold(0.0, f64::max)
}

impl Criterion for EquilibriumFixedPoint {
    fn id(&self) -> &'static str {
        "c01"
    }
    fn title(&self) -> &'static str {
        "equilibrium fixed point"
    }
    fn evaluate(&self, _: &RunCache) -> Result<Check, HarnessError> {
        let start = Instant::now();
        let p = PhysParams::normalized(1.0)?;
        let target = EquilibriumTarget::normalized();
        let s0 = equilibrium_state(Grid::new(100)?, target)?;
        let controls = StepControls::default();
        let d0 = snapshot_diagnostics(&s0, &p, &target, 0.0)?.values();
        let (mut field_drift, mut diag_drift) = (0.0f64, 0.0f64);
        let mut s = s0.clone();
        for _ in 0..EQUILIBRIUM_STEPS {
            let dt = compute_dt(&s, &p, &controls)?;
            s = step(&s, &p, &controls, dt, None)?.0;
            field_drift = field_drift.max(linf(&s, &s0));
            let d = snapshot_diagnostics(&s, &p, &target, dt)?.values();
            // Skip t and dt.
            for (a, b) in d.iter().zip(&d0).skip(2) {
                diag_drift = diag_drift.max((a - b).abs());
            }
        }
        let seconds = start.elapsed().as_secs_f64();
        Ok(Check {
            passed: field_drift <= EQUILIBRIUM_TOL
                && diag_drift <= EQUILIBRIUM_TOL
                && seconds < EQUILIBRIUM_BUDGET_S,
            measured: format!(
                "field drift {}, diagnostics drift {} over {EQUILIBRIUM_STEPS} steps in {seconds:.2} s",
                sci(field_drift),
                sci(diag_drift)
            ),
            required: format!("both <= {EQUILIBRIUM_TOL:e}, runtime < {EQUILIBRIUM_BUDGET_S} s"),
        })
    }
}

// 2 -------------------------------------------------------------------------

pub const MASS_TOL: f64 = 1e-13;

struct MassConservation;

impl Criterion for MassConservation {
    fn id(&self) -> &'static str {
        "c02"
    }
    fn title(&self) -> &'static str {
        "exact mass conservation"
    }
    fn evaluate(&self, cache: &RunCache) -> Result<Check, HarnessError> {
        let mut worst = 0.0f64;
        let mut samples = 0;
        let runs = all_runs();
        for spec in &runs {
            let run = cache.get(*spec)?;
            worst = worst.max(max_by(&run.outcome.records, |r| (r.mass - 1.0).abs()));
            samples += run.outcome.records.len();
        }
        Ok(Check {
            passed: worst < MASS_TOL,
            measured: format!("max |mass - 1| = {} over {samples} steps of {} runs", sci(worst), runs.len()),
            required: format!("< {MASS_TOL:e}"),
        })
    }
}

// 3 -------------------------------------------------------------------------

pub const DRIFT_TOL: f64 = 1e-3;
pub const DRIFT_RATIO: (f64, f64) = (1.5, 3.0);
pub const ENERGY_BUDGET_S: f64 = 30.0;

struct EnergyDrift;

fn max_drift(run: &TimedRun) -> f64 {
    max_by(&run.outcome.records, |r| (r.total_energy - 1.0).abs())
}

impl Criterion for EnergyDrift {
    fn id(&self) -> &'static str {
        "c03"
    }
    fn title(&self) -> &'static str {
        "total-energy drift"
    }
    fn evaluate(&self, cache: &RunCache) -> Result<Check, HarnessError> {
        let coarse = cache.get(ENERGY_RUN)?;
        let fine = cache.get(ENERGY_RUN_HALF_DT)?;
        let (d1, d2) = (max_drift(&coarse), max_drift(&fine));
        let ratio = d1 / d2;
        Ok(Check {
            passed: d1 < DRIFT_TOL
                && ratio >= DRIFT_RATIO.0
                && ratio <= DRIFT_RATIO.1
                && coarse.seconds < ENERGY_BUDGET_S,
            measured: format!(
                "max drift {} (cfl 0.4), {} (cfl 0.2), ratio {ratio:.3}; run {:.2} s",
                sci(d1),
                sci(d2),
                coarse.seconds
            ),
            required: format!(
                "drift < {DRIFT_TOL:e}, ratio in [{}, {}], runtime < {ENERGY_BUDGET_S} s",
                DRIFT_RATIO.0, DRIFT_RATIO.1
            ),
        })
    }
}

// 4 -------------------------------------------------------------------------

pub const ENTROPY_RESIDUAL_TOL: f64 = 5e-3;
pub const ENTROPY_REFINEMENT_FACTOR: f64 = 1.5;

struct EntropyBudgetCheck;

impl Criterion for EntropyBudgetCheck {
    fn id(&self) -> &'static str {
        "c04"
    }
    fn title(&self) -> &'static str {
        "entropy budget"
    }
    fn evaluate(&self, cache: &RunCache) -> Result<Check, HarnessError> {
        let coarse = cache.get(ENERGY_RUN)?.outcome.entropy_budget();
        let fine = cache.get(ENERGY_RUN_REFINED)?.outcome.entropy_budget();
        let factor = coarse.max_residual / fine.max_residual;
        let excess = coarse.max_bound_excess.max(fine.max_bound_excess);
        Ok(Check {
            passed: coarse.max_residual < ENTROPY_RESIDUAL_TOL
                && factor >= ENTROPY_REFINEMENT_FACTOR
                && coarse.bound_holds
                && fine.bound_holds,
            measured: format!(
                "residual {} (N=200), {} (N=400), factor {factor:.3}; max E + int V - e0 = {}",
                sci(coarse.max_residual),
                sci(fine.max_residual),
                sci(excess)
            ),
            required: format!(
                "residual < {ENTROPY_RESIDUAL_TOL:e}, factor >= {ENTROPY_REFINEMENT_FACTOR}, bound excess <= {:e}",
                mhd1d_core::diagnostics::ENTROPY_BOUND_SLACK
            ),
        })
    }
}

// 5 -------------------------------------------------------------------------

pub const BRACKET_TOL: f64 = 1e-6;

struct MeanTemperatureBracket;

impl Criterion for MeanTemperatureBracket {
    fn id(&self) -> &'static str {
        "c05"
    }
    fn title(&self) -> &'static str {
        "mean-temperature bracket"
    }
    fn evaluate(&self, cache: &RunCache) -> Result<Check, HarnessError> {
        let mut passed = true;
        let (mut lowest_margin, mut highest) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut alpha1_min = f64::INFINITY;
        for spec in all_runs() {
            let run = cache.get(spec)?;
            let bracket = alpha_bracket(compute_e0(&run.outcome.initial, &run.outcome.physics))?;
            let lo = min_by(&run.outcome.records, |r| r.theta_bar);
            let hi = max_by(&run.outcome.records, |r| r.theta_bar);
            passed &= lo >= bracket.alpha1 - BRACKET_TOL && hi <= 1.0 + BRACKET_TOL;
            lowest_margin = lowest_margin.min(lo - bracket.alpha1);
            highest = highest.max(hi);
            alpha1_min = alpha1_min.min(bracket.alpha1);
        }
        Ok(Check {
            passed,
            measured: format!(
                "min (theta_bar - alpha1) = {lowest_margin:.4}, max theta_bar - 1 = {}, alpha1 >= {alpha1_min:.4}",
                sci(highest - 1.0)
            ),
            required: format!("theta_bar in [alpha1 - {BRACKET_TOL:e}, 1 + {BRACKET_TOL:e}] on every run"),
        })
    }
}

// 6 -------------------------------------------------------------------------

pub const DECAY_WINDOW: (f64, f64) = (2.0, 10.0);
pub const DECAY_R2_MIN: f64 = 0.98;
pub const DECAY_AGREEMENT: f64 = 0.2;
pub const DECAY_BUDGET_S: f64 = 60.0;

struct ExponentialDecay;

impl Criterion for ExponentialDecay {
    fn id(&self) -> &'static str {
        "c06"
    }
    fn title(&self) -> &'static str {
        "exponential decay"
    }
    fn evaluate(&self, cache: &RunCache) -> Result<Check, HarnessError> {
        let mut passed = true;
        let mut parts = Vec::new();
        for beta in DECAY_BETAS {
            let mut etas = Vec::new();
            let mut seconds = 0.0;
            let mut worst_r2 = f64::INFINITY;
            for n in [100, 200] {
                let run = cache.get(decay_run(beta, n))?;
                seconds += run.seconds;
                match fit_decay_rate(&run.outcome.h1_series(), DECAY_WINDOW) {
                    Ok(fit) => {
                        let r2 = fit.r_squared.unwrap_or(f64::NAN);
                        passed &= fit.eta_hat > 0.0 && r2 >= DECAY_R2_MIN;
                        worst_r2 = worst_r2.min(r2);
                        etas.push(fit.eta_hat);
                    }
                    Err(e) => {
                        passed = false;
                        parts.push(format!("beta {beta} N={n}: {e}"));
                    }
                }
            }
            passed &= seconds < DECAY_BUDGET_S;
            if let [coarse, fine] = etas[..] {
                let disagreement = (coarse - fine).abs() / fine.abs();
                passed &= disagreement <= DECAY_AGREEMENT;
                parts.push(format!(
                    "beta {beta}: eta {coarse:.4}/{fine:.4} (rel diff {disagreement:.3}), min r2 {worst_r2:.6}, {seconds:.1} s"
                ));
            }
        }
        Ok(Check {
            passed,
            measured: parts.join("; "),
            required: format!(
                "eta_hat > 0, r2 >= {DECAY_R2_MIN}, N=100 vs N=200 within {DECAY_AGREEMENT}, < {DECAY_BUDGET_S} s per beta"
            ),
        })
    }
}

// 7 -------------------------------------------------------------------------

pub const POSITIVITY_FLOOR_RATIO: f64 = 0.8;
pub const POSITIVITY_CEILING_RATIO: f64 = 1.1;
pub const LONG_BUDGET_S: f64 = 180.0;

struct UniformPositivity;

impl Criterion for UniformPositivity {
    fn id(&self) -> &'static str {
        "c07"
    }
    fn title(&self) -> &'static str {
        "uniform positivity"
    }
    fn evaluate(&self, cache: &RunCache) -> Result<Check, HarnessError> {
        let run = cache.get(LONG_RUN)?;
        let half = 0.5 * LONG_RUN.t_end;
        let (first, second): (Vec<&DiagnosticsRecord>, Vec<&DiagnosticsRecord>) =
            run.outcome.records.iter().partition(|r| r.t <= half);
        let min_v = (min_by(&first, |r| r.min_v), min_by(&second, |r| r.min_v));
        let min_theta = (min_by(&first, |r| r.min_theta), min_by(&second, |r| r.min_theta));
        let max_v = (max_by(&first, |r| r.max_v), max_by(&second, |r| r.max_v));
        Ok(Check {
            passed: min_v.1 >= POSITIVITY_FLOOR_RATIO * min_v.0
                && min_theta.1 >= POSITIVITY_FLOOR_RATIO * min_theta.0
                && max_v.1 <= POSITIVITY_CEILING_RATIO * max_v.0
                && run.seconds < LONG_BUDGET_S,
            measured: format!(
                "min v {:.5} -> {:.5}, min theta {:.5} -> {:.5}, max v {:.5} -> {:.5} (first -> second half); {:.1} s",
                min_v.0, min_v.1, min_theta.0, min_theta.1, max_v.0, max_v.1, run.seconds
            ),
            required: format!(
                "second-half minima >= {POSITIVITY_FLOOR_RATIO} x first, max v <= {POSITIVITY_CEILING_RATIO} x first, < {LONG_BUDGET_S} s"
            ),
        })
    }
}

// 8 -------------------------------------------------------------------------

pub const RECONSTRUCTION_TOL: f64 = 5e-3;
pub const RECONSTRUCTION_RATIO: f64 = 0.7;

struct VolumeRepresentation;

fn max_reconstruction_error(run: &TimedRun) -> f64 {
    max_by(&run.outcome.reconstruction, |r| r.max_rel_error)
}

impl Criterion for VolumeRepresentation {
    fn id(&self) -> &'static str {
        "c08"
    }
    fn title(&self) -> &'static str {
        "volume representation"
    }
    fn evaluate(&self, cache: &RunCache) -> Result<Check, HarnessError> {
        let coarse = max_reconstruction_error(&*cache.get(RECONSTRUCTION_RUN)?);
        let fine = max_reconstruction_error(&*cache.get(RECONSTRUCTION_RUN_REFINED)?);
        let ratio = fine / coarse;
        Ok(Check {
            passed: coarse < RECONSTRUCTION_TOL && ratio <= RECONSTRUCTION_RATIO,
            measured: format!(
                "max relative error {} (N=400), {} (N=800, dt halved), ratio {ratio:.3}",
                sci(coarse),
                sci(fine)
            ),
            required: format!("< {RECONSTRUCTION_TOL:e}, ratio <= {RECONSTRUCTION_RATIO}"),
        })
    }
}

// 9 -------------------------------------------------------------------------

pub const MMS_ORDER_MIN: f64 = 1.8;
pub const MMS_BUDGET_S: f64 = 120.0;

struct MmsOrder;

impl Criterion for MmsOrder {
    fn id(&self) -> &'static str {
        "c09"
    }
    fn title(&self) -> &'static str {
        "manufactured-solution spatial order"
    }
    fn evaluate(&self, _: &RunCache) -> Result<Check, HarnessError> {
        let start = Instant::now();
        let cfg = MmsConfig::parse("mms.resolutions = 50, 100, 200\nmms.dt_coeff = 1\nmms.control_dt_coeff = 0.1")?;
        let report = mms_convergence(&cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        let orders = report.study.min_orders();
        let passed = orders.iter().all(|o| o.is_some_and(|o| o >= MMS_ORDER_MIN)) && seconds < MMS_BUDGET_S;
        let show = |orders: [Option<f64>; 5]| {
            FIELDS
                .iter()
                .zip(orders)
                .map(|(f, o)| format!("{f} {}", o.map_or("n/a".into(), |o| format!("{o:.2}"))))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let control = report
            .control
            .as_ref()
            .map_or(String::new(), |c| format!("; dt ~ dx control: {}", show(c.min_orders())));
        Ok(Check {
            passed,
            measured: format!("min order {}{control}; {seconds:.1} s", show(orders)),
            required: format!("every field >= {MMS_ORDER_MIN} with dt ~ dx^2, < {MMS_BUDGET_S} s"),
        })
    }
}

// 10 ------------------------------------------------------------------------

pub const SYMMETRY_STEPS: usize = 100;
pub const SYMMETRY_TOL: f64 = 1e-12;

struct Symmetries;

/// Rotates every transverse vector by `angle`.
pub fn rotate(s: &SimState, angle: f64) -> SimState {
    let (sin, cos) = angle.sin_cos();
    let turn = |a: [f64; 2]| [cos * a[0] - sin * a[1], sin * a[0] + cos * a[1]];
    SimState {
        w: s.w.iter().map(|&a| turn(a)).collect(),
        b: s.b.iter().map(|&a| turn(a)).collect(),
        ..s.clone()
    }
}

/// `x -> 1 - x` with `u` and `b` negated; `v`, `theta` and `w` are even.
pub fn reflect(s: &SimState) -> SimState {
    let rev = |x: &[f64]| x.iter().rev().copied().collect::<Vec<_>>();
    SimState {
        v: rev(&s.v),
        theta: rev(&s.theta),
        u: s.u.iter().rev().map(|u| -u).collect(),
        w: s.w.iter().rev().copied().collect(),
        b: s.b.iter().rev().map(|b| [-b[0], -b[1]]).collect(),
        ..s.clone()
    }
}

impl Criterion for Symmetries {
    fn id(&self) -> &'static str {
        "c10"
    }
    fn title(&self) -> &'static str {
        "symmetry suite"
    }
    fn evaluate(&self, _: &RunCache) -> Result<Check, HarnessError> {
        let p = PhysParams::normalized(1.0)?;
        let controls = StepControls {
            picard_tol: 1e-15,
            ..StepControls::default()
        };
        let grid = Grid::new(64)?;
        let family = InitFamily {
            a_v: 0.1,
            a_u: 0.1,
            a_theta: 0.1,
            a_w: [0.1, -0.05],
            a_b: [0.08, 0.06],
            ..InitFamily::default()
        };
        let s0 = make_initial(&family, grid)?;
        let quiet0 = SimState {
            w: vec![[0.0; 2]; grid.n_nodes()],
            b: vec![[0.0; 2]; grid.n_nodes()],
            ..s0.clone()
        };

        let angle = 0.7;
        let (mut s, mut rot, mut refl, mut quiet) = (s0.clone(), rotate(&s0, angle), reflect(&s0), quiet0);
        let (mut rot_err, mut refl_err, mut zero_max) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..SYMMETRY_STEPS {
            let dt = compute_dt(&s, &p, &controls)?;
            s = step(&s, &p, &controls, dt, None)?.0;
            rot = step(&rot, &p, &controls, dt, None)?.0;
            refl = step(&refl, &p, &controls, dt, None)?.0;
            quiet = step(&quiet, &p, &controls, compute_dt(&quiet, &p, &controls)?, None)?.0;
            rot_err = rot_err.max(linf(&rotate(&s, angle), &rot));
            refl_err = refl_err.max(linf(&reflect(&s), &refl));
            let transverse = quiet.w.iter().chain(&quiet.b).flatten();
            zero_max = zero_max.max(transverse.fold(0.0, |m, x| m.max(x.abs())));
        }
        Ok(Check {
            passed: zero_max == 0.0 && rot_err <= SYMMETRY_TOL && refl_err <= SYMMETRY_TOL,
            measured: format!(
                "zero-field max {}, rotation {}, reflection {} over {SYMMETRY_STEPS} steps",
                sci(zero_max),
                sci(rot_err),
                sci(refl_err)
            ),
            required: format!("zero field exactly 0, others <= {SYMMETRY_TOL:e}"),
        })
    }
}

// 11 ------------------------------------------------------------------------

pub const ALPHA_RESIDUAL_TOL: f64 = 1e-12;
pub const FIT_RATE_TOL: f64 = 1e-10;
pub const TRIDIAGONAL_TOL: f64 = 1e-12;
pub const TRIDIAGONAL_CASES: usize = 1000;

struct Oracles;

/// Largest relative residual `|A x - d|_inf / |d|_inf` over random strictly
/// diagonally dominant systems.
pub fn tridiagonal_residual(cases: usize, seed: u64) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = rng.gen_range(1..=200);
        let lower: Vec<f64> = (1..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (1..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n)
            .map(|i: usize| {
                let off = lower.get(i.wrapping_sub(1)).map_or(0.0, |x: &f64| x.abs())
                    + upper.get(i).map_or(0.0, |x: &f64| x.abs());
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * (off + rng.gen_range(0.1..2.0))
            })
            .collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let ax = mhd1d_core::tridiag::tridiagonal_matvec(&lower, &diag, &upper, &x);
        let scale = rhs.iter().fold(0.0f64, |m, r| m.max(r.abs())).max(f64::MIN_POSITIVE);
        let res = ax.iter().zip(&rhs).fold(0.0f64, |m, (a, r)| m.max((a - r).abs()));
        worst = worst.max(res / scale);
    }
    Ok(worst)
}

impl Criterion for Oracles {
    fn id(&self) -> &'static str {
        "c11"
    }
    fn title(&self) -> &'static str {
        "oracle checks"
    }
    fn evaluate(&self, _: &RunCache) -> Result<Check, HarnessError> {
        let mut alpha_res = 0.0f64;
        for e0 in [1.0, 2.0, 4.0] {
            let b = alpha_bracket(e0)?;
            for x in [b.alpha1, b.alpha2] {
                alpha_res = alpha_res.max((x - x.ln() - e0).abs());
            }
        }

        let rate = 0.731;
        let series: Vec<(f64, f64)> = (0..=400)
            .map(|i| {
                let t = i as f64 * 0.025;
                (t, 3.2 * (-rate * t).exp())
            })
            .collect();
        let fit = fit_decay_rate(&series, DECAY_WINDOW)?;
        let fit_err = (fit.eta_hat - rate).abs();

        let tri = tridiagonal_residual(TRIDIAGONAL_CASES, 20_240_601)?;
        Ok(Check {
            passed: alpha_res < ALPHA_RESIDUAL_TOL && fit_err < FIT_RATE_TOL && tri < TRIDIAGONAL_TOL,
            measured: format!(
                "alpha residual {}, fitted-rate error {}, tridiagonal residual {} ({TRIDIAGONAL_CASES} cases)",
                sci(alpha_res),
                sci(fit_err),
                sci(tri)
            ),
            required: format!(
                "< {ALPHA_RESIDUAL_TOL:e}, < {FIT_RATE_TOL:e}, < {TRIDIAGONAL_TOL:e}"
            ),
        })
    }
}

/// All criteria, in report order.
pub fn registry() -> Vec<Box<dyn Criterion>> {
    vec![
        Box::new(EquilibriumFixedPoint),
        Box::new(MassConservation),
        Box::new(EnergyDrift),
        Box::new(EntropyBudgetCheck),
        Box::new(MeanTemperatureBracket),
        Box::new(ExponentialDecay),
        Box::new(UniformPositivity),
        Box::new(VolumeRepresentation),
        Box::new(MmsOrder),
        Box::new(Symmetries),
        Box::new(Oracles),
    ]
}

fn report(criterion: &dyn Criterion, cache: &RunCache) -> CriterionReport {
    let start = Instant::now();
    let check = criterion.evaluate(cache).unwrap_or_else(|e| Check {
        passed: false,
        measured: format!("error: {e}"),
        required: "criterion runs to completion".into(),
    });
    CriterionReport {
        id: criterion.id(),
        title: criterion.title(),
        passed: check.passed,
        measured: check.measured,
        required: check.required,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Evaluates one criterion by id against the shared cache.
pub fn evaluate(id: &str) -> Option<CriterionReport> {
    registry()
        .into_iter()
        .find(|c| c.id() == id)
        .map(|c| report(c.as_ref(), shared_cache()))
}

/// Evaluates the selected criteria (all when `only` is empty), running
/// independent criteria concurrently. Reports come back in registry order.
pub fn evaluate_all(only: &[String]) -> Vec<CriterionReport> {
    let selected: Vec<Box<dyn Criterion>> = registry()
        .into_iter()
        .filter(|c| only.is_empty() || only.iter().any(|id| id == c.id()))
        .collect();
    let cache = shared_cache();
    std::thread::scope(|scope| {
        let handles: Vec<_> = selected
            .iter()
            .map(|c| scope.spawn(move || report(c.as_ref(), cache)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion panicked"))
            .collect()
    })
}
