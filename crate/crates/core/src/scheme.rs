//! Split semi-implicit time step.
//!
//! Substeps, in this fixed order:
//!
//! 1. `v_t = u_x`, explicit, conservative cell form.
//! 2. Momentum: explicit gradient of `P + |b|^2/2`, backward-Euler viscosity.
//! 3. Transverse velocity: explicit `b_x`, backward-Euler `(lambda w_x / v)_x`.
//! 4. Magnetic field in node form
//!    `v b_t = w_x - b u_x + (nu b_x / v)_x`, explicit coupling, implicit
//!    diffusion.
//! 5. Temperature from the internal-energy equation: implicit conduction
//!    with the conductivity lagged and Picard-iterated, explicit compression
//!    work and viscous/resistive heating from end-of-substep gradients.
//!
//! All implicit solves are written in increment form, so a state with
//! vanishing gradients produces exactly zero right-hand sides.

use crate::error::{ModelError, SchemeError};
use crate::params::PhysParams;
use crate::state::{Field, SimState};
use crate::tridiag::solve_tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub cfl: f64,
    pub max_picard: usize,
    pub picard_tol: f64,
    pub max_retries: usize,
}

impl Default for StepControls {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            max_picard: 20,
            picard_tol: 1e-10,
            max_retries: 20,
        }
    }
}

impl StepControls {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(ModelError::InvalidParameter {
                name: "cfl",
                value: self.cfl,
                reason: "must lie in (0, 1]",
            });
        }
        if self.max_picard < 1 {
            return Err(ModelError::InvalidParameter {
                name: "max_picard",
                value: self.max_picard as f64,
                reason: "at least one conduction solve is required",
            });
        }
        if !(self.picard_tol > 0.0 && self.picard_tol.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "picard_tol",
                value: self.picard_tol,
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

pub type ScalarSource = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorSource = Box<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Optional forcing `f(x, t)` added to the right-hand side of each evolution
/// equation. Used by manufactured-solution runs; absent fields contribute
/// nothing.
///
/// The forcing is expressed per unit time of the evolved variable:
/// `v_t`, `u_t`, `w_t`, `b_t` (after dividing the magnetic equation by `v`)
/// and `theta_t` (after dividing by `c_v`).
#[derive(Default)]
pub struct SourceFields {
    pub v: Option<ScalarSource>,
    pub u: Option<ScalarSource>,
    pub w: Option<VectorSource>,
    pub b: Option<VectorSource>,
    pub theta: Option<ScalarSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepReport {
    pub picard_iterations: usize,
    pub picard_converged: bool,
}

fn check_finite(s: &SimState) -> Result<(), SchemeError> {
    for (field, values) in [(Field::V, &s.v), (Field::Theta, &s.theta), (Field::U, &s.u)] {
        if let Some(index) = values.iter().position(|x| !x.is_finite()) {
            return Err(SchemeError::NonFinite { field, index });
        }
    }
    for (field, values) in [(Field::W, &s.w), (Field::B, &s.b)] {
        if let Some(index) = values.iter().position(|x| !(x[0].is_finite() && x[1].is_finite())) {
            return Err(SchemeError::NonFinite { field, index });
        }
    }
    Ok(())
}

/// Lagrangian magneto-acoustic timestep
/// `cfl * dx * min_c v / sqrt(gamma R theta + v |b_cell|^2)`.
pub fn compute_dt(s: &SimState, p: &PhysParams, controls: &StepControls) -> Result<f64, SchemeError> {
    s.check_shape()?;
    check_finite(s)?;
    let dx = s.grid.dx();
    let gr = p.gamma() * p.r_gas;
    let mut ratio = f64::INFINITY;
    for c in 0..s.n_cells() {
        let b1 = 0.5 * (s.b[c][0] + s.b[c + 1][0]);
        let b2 = 0.5 * (s.b[c][1] + s.b[c + 1][1]);
        let speed = (gr * s.theta[c] + s.v[c] * (b1 * b1 + b2 * b2)).sqrt();
        ratio = ratio.min(s.v[c] / speed);
    }
    let dt = controls.cfl * dx * ratio;
    if dt.is_finite() && dt > 0.0 {
        Ok(dt)
    } else {
        Err(SchemeError::BadTimestep(dt))
    }
}

/// Backward-Euler diffusion of a node field over the interior nodes.
///
/// Solves `(new - old) / dt = explicit + K(new)` with
/// `K(q)_j = coef / (dx^2 m_j) * ((q_{j+1} - q_j) / v_j - (q_j - q_{j-1}) / v_{j-1})`,
/// where `m_j` is a per-node mass factor. End nodes stay at zero.
fn diffuse_nodes(
    old: &[f64],
    explicit: &[f64],
    v: &[f64],
    mass: &[f64],
    coef: f64,
    dt: f64,
    dx: f64,
) -> Result<Vec<f64>, SchemeError> {
    let n = v.len();
    let m = n - 1;
    let mut lower = vec![0.0; m - 1];
    let mut upper = vec![0.0; m - 1];
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for j in 1..n {
        let i = j - 1;
        let scale = coef / (dx * dx * mass[j]);
        let left = scale / v[j - 1];
        let right = scale / v[j];
        let k_old = right * (old[j + 1] - old[j]) - left * (old[j] - old[j - 1]);
        diag[i] = 1.0 + dt * (left + right);
        if i > 0 {
            lower[i - 1] = -dt * left;
        }
        if i + 1 < m {
            upper[i] = -dt * right;
        }
        rhs[i] = dt * (explicit[j] + k_old);
    }
    let delta = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let mut new = vec![0.0; n + 1];
    for j in 1..n {
        new[j] = old[j] + delta[j - 1];
    }
    Ok(new)
}

fn cell_positive(values: &[f64], field: Field) -> Result<(), SchemeError> {
    for (index, &value) in values.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(SchemeError::Positivity { field, index, value });
        }
    }
    Ok(())
}

/// Advances the state by `dt`.
///
/// A positivity failure of `v` or `theta` is returned as a retryable error
/// (the caller shrinks `dt`). If the Picard loop for the conductivity does
/// not reach `picard_tol` within `max_picard` solves, the last iterate is
/// accepted and [`StepReport::picard_converged`] is false.
pub fn step(
    s: &SimState,
    p: &PhysParams,
    controls: &StepControls,
    dt: f64,
    sources: Option<&SourceFields>,
) -> Result<(SimState, StepReport), SchemeError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SchemeError::BadTimestep(dt));
    }
    s.check_shape()?;
    check_finite(s)?;
    let grid = s.grid;
    let n = grid.n_cells();
    let dx = grid.dx();
    let t1 = s.t + dt;
    let sources = sources.unwrap_or(&NO_SOURCES);

    // (a) specific volume
    let mut v1: Vec<f64> = (0..n)
        .map(|c| s.v[c] + dt * (s.u[c + 1] - s.u[c]) / dx)
        .collect();
    if let Some(src) = &sources.v {
        for (c, x) in grid.cell_xs().enumerate() {
            v1[c] += dt * src(x, t1);
        }
    }
    cell_positive(&v1, Field::V)?;

    // (b) momentum; magnetic pressure on a cell is the mean of |b|^2/2 at
    // its two nodes.
    let bsq: Vec<f64> = s.b.iter().map(|b| b[0] * b[0] + b[1] * b[1]).collect();
    let total_pressure: Vec<f64> = (0..n)
        .map(|c| p.pressure(v1[c], s.theta[c]) + 0.25 * (bsq[c] + bsq[c + 1]))
        .collect();
    let gradient_sign = if cfg!(feature = "mutant-pressure-sign") { 1.0 } else { -1.0 };
    let mut forcing = vec![0.0; n + 1];
    for j in 1..n {
        forcing[j] = gradient_sign * (total_pressure[j] - total_pressure[j - 1]) / dx;
    }
    if let Some(src) = &sources.u {
        for (j, f) in forcing.iter_mut().enumerate().take(n).skip(1) {
            *f += src(grid.node_x(j), t1);
        }
    }
    let unit_mass = vec![1.0; n + 1];
    let u1 = diffuse_nodes(&s.u, &forcing, &v1, &unit_mass, p.mu, dt, dx)?;

    // (c) transverse velocity, per component
    let w_src: Vec<[f64; 2]> = match &sources.w {
        Some(src) => grid.node_xs().map(|x| src(x, t1)).collect(),
        None => vec![[0.0; 2]; n + 1],
    };
    let mut w1 = vec![[0.0; 2]; n + 1];
    for k in 0..2 {
        let old: Vec<f64> = s.w.iter().map(|w| w[k]).collect();
        let mut forcing = vec![0.0; n + 1];
        for j in 1..n {
            forcing[j] = (s.b[j + 1][k] - s.b[j - 1][k]) / (2.0 * dx) + w_src[j][k];
        }
        let new = diffuse_nodes(&old, &forcing, &v1, &unit_mass, p.lambda, dt, dx)?;
        for j in 0..=n {
            w1[j][k] = new[j];
        }
    }

    // (d) magnetic field, non-conservative node form
    let v_bar: Vec<f64> = (0..=n)
        .map(|j| {
            if j == 0 {
                v1[0]
            } else if j == n {
                v1[n - 1]
            } else {
                0.5 * (v1[j - 1] + v1[j])
            }
        })
        .collect();
    let b_src: Vec<[f64; 2]> = match &sources.b {
        Some(src) => grid.node_xs().map(|x| src(x, t1)).collect(),
        None => vec![[0.0; 2]; n + 1],
    };
    let mut b1 = vec![[0.0; 2]; n + 1];
    for k in 0..2 {
        let old: Vec<f64> = s.b.iter().map(|b| b[k]).collect();
        let mut forcing = vec![0.0; n + 1];
        for j in 1..n {
            let ux = (u1[j + 1] - u1[j - 1]) / (2.0 * dx);
            let wx = (w1[j + 1][k] - w1[j - 1][k]) / (2.0 * dx);
            forcing[j] = (wx - old[j] * ux) / v_bar[j] + b_src[j][k];
        }
        let new = diffuse_nodes(&old, &forcing, &v1, &v_bar, p.nu, dt, dx)?;
        for j in 0..=n {
            b1[j][k] = new[j];
        }
    }

    // (e) temperature
    let mut explicit = vec![0.0; n];
    for c in 0..n {
        let ux = (u1[c + 1] - u1[c]) / dx;
        let mut heating = p.mu * ux * ux;
        for k in 0..2 {
            let wx = (w1[c + 1][k] - w1[c][k]) / dx;
            let bx = (b1[c + 1][k] - b1[c][k]) / dx;
            heating += p.lambda * wx * wx + p.nu * bx * bx;
        }
        explicit[c] = heating / v1[c] - p.pressure(v1[c], s.theta[c]) * ux;
    }
    let mut explicit_theta: Vec<f64> = explicit.iter().map(|e| e / p.c_v).collect();
    if let Some(src) = &sources.theta {
        for (c, x) in grid.cell_xs().enumerate() {
            explicit_theta[c] += src(x, t1);
        }
    }

    let (theta1, report) = conduct(&s.theta, &explicit_theta, &v_bar, p, controls, dt, dx)?;

    Ok((
        SimState {
            t: t1,
            grid,
            v: v1,
            theta: theta1,
            u: u1,
            w: w1,
            b: b1,
        },
        report,
    ))
}

static NO_SOURCES: SourceFields = SourceFields {
    v: None,
    u: None,
    w: None,
    b: None,
    theta: None,
};

/// Backward-Euler conduction with zero flux through the end faces and
/// face conductivity `(kappa(theta_c) + kappa(theta_{c+1})) / 2` lagged at
/// the previous Picard iterate.
fn conduct(
    theta: &[f64],
    explicit: &[f64],
    v_face: &[f64],
    p: &PhysParams,
    controls: &StepControls,
    dt: f64,
    dx: f64,
) -> Result<(Vec<f64>, StepReport), SchemeError> {
    let n = theta.len();
    let scale = dt / p.c_v;
    let mut iterate = theta.to_vec();
    let mut report = StepReport::default();

    let mut lower = vec![0.0; n - 1];
    let mut upper = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut face = vec![0.0; n - 1];

    for iteration in 1..=controls.max_picard {
        let kappa: Vec<f64> = iterate.iter().map(|&th| p.conductivity(th)).collect();
        for f in 0..n - 1 {
            face[f] = 0.5 * (kappa[f] + kappa[f + 1]) / (v_face[f + 1] * dx * dx);
        }
        for c in 0..n {
            let left = if c > 0 { face[c - 1] } else { 0.0 };
            let right = if c + 1 < n { face[c] } else { 0.0 };
            let mut flux_old = 0.0;
            if c > 0 {
                flux_old -= left * (theta[c] - theta[c - 1]);
            }
            if c + 1 < n {
                flux_old += right * (theta[c + 1] - theta[c]);
            }
            diag[c] = 1.0 + scale * (left + right);
            if c > 0 {
                lower[c - 1] = -scale * left;
            }
            if c + 1 < n {
                upper[c] = -scale * right;
            }
            rhs[c] = scale * flux_old + dt * explicit[c];
        }
        let delta = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let next: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + d).collect();
        cell_positive(&next, Field::Theta)?;

        let mut change = 0.0f64;
        let mut size = 0.0f64;
        for (a, b) in next.iter().zip(&iterate) {
            change = change.max((a - b).abs());
            size = size.max(a.abs());
        }
        iterate = next;
        report.picard_iterations = iteration;
        // Conductivity independent of theta: one solve is exact.
        if p.beta == 0.0 || change <= controls.picard_tol * size {
            report.picard_converged = true;
            break;
        }
    }
    Ok((iterate, report))
}

/// How the time loop picks its step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// [`compute_dt`] every step.
    Cfl,
    /// A fixed step, e.g. `dt ~ dx^2` in convergence studies.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct AdvanceSummary {
    pub state: SimState,
    pub accepted_steps: usize,
    pub retries: usize,
    pub picard_warnings: usize,
}

/// Integrates to `t_end` with CFL-controlled steps and no sources.
///
/// `observer` is called after every accepted step with the new state, the
/// step size used and the step report.
pub fn advance_to<F>(
    s: &SimState,
    p: &PhysParams,
    controls: &StepControls,
    t_end: f64,
    observer: F,
) -> Result<AdvanceSummary, SchemeError>
where
    F: FnMut(&SimState, f64, &StepReport),
{
    advance_with(s, p, controls, t_end, DtRule::Cfl, None, observer)
}

pub fn advance_with<F>(
    s: &SimState,
    p: &PhysParams,
    controls: &StepControls,
    t_end: f64,
    rule: DtRule,
    sources: Option<&SourceFields>,
    mut observer: F,
) -> Result<AdvanceSummary, SchemeError>
where
    F: FnMut(&SimState, f64, &StepReport),
{
    controls.validate()?;
    if !(t_end > s.t) {
        return Err(SchemeError::BadEndTime { t: s.t, t_end });
    }
    let mut state = s.clone();
    let mut summary_steps = 0;
    let mut total_retries = 0;
    let mut picard_warnings = 0;

    while state.t < t_end {
        let nominal = match rule {
            DtRule::Cfl => compute_dt(&state, p, controls)?,
            DtRule::Fixed(dt) => dt,
        };
        let remaining = t_end - state.t;
        let last = nominal >= remaining * (1.0 - 1e-10);
        let mut dt = if last { remaining } else { nominal };
        let mut retries = 0;
        let (mut next, report) = loop {
            match step(&state, p, controls, dt, sources) {
                Ok(ok) => break ok,
                Err(e) if e.is_retryable() => {
                    if retries == controls.max_retries {
                        return Err(SchemeError::RetriesExhausted {
                            retries,
                            cause: Box::new(e),
                            last_good: Box::new(state),
                        });
                    }
                    retries += 1;
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        if last && retries == 0 {
            next.t = t_end;
        }
        total_retries += retries;
        summary_steps += 1;
        if !report.picard_converged {
            picard_warnings += 1;
        }
        observer(&next, dt, &report);
        state = next;
    }

    Ok(AdvanceSummary {
        state,
        accepted_steps: summary_steps,
        retries: total_retries,
        picard_warnings,
    })
}
