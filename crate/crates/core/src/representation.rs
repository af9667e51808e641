//! Closed-form reconstruction of the specific volume.
//!
//! With unit constants and unit mass, the momentum equation integrates to
//!
//! ```text
//! v(x,t) = D(x,t) Y(t) (1 + ∫_0^t (theta + v|b|^2/2)(x,s) / (D(x,s) Y(s)) ds)
//! D(x,t) = v0(x) exp(∫_0^x (u - u0) dy) exp(-∫ v ∫_0^x u dy dx + ∫ v0 ∫_0^x u0 dy dx)
//! Y(t)   = exp(-∫_0^t ∫ (u^2 + v|b|^2/2 + theta) dx ds)
//! ```
//!
//! The accumulator carries `ln Y` and the per-cell time integral along a run
//! so `v` can be rebuilt at any accepted step and compared with the evolved
//! field. Time integrals use the trapezoid rule over accepted steps.

use crate::error::ReconstructionError;
use crate::params::PhysParams;
use crate::state::SimState;

/// `∫_0^x u dy` at cell centers, exact for piecewise-linear `u`.
pub fn cumulative_u_integral(s: &SimState) -> Vec<f64> {
    let n = s.n_cells();
    let dx = s.grid.dx();
    let mut out = Vec::with_capacity(n);
    let mut running = 0.0;
    for c in 0..n {
        let (left, right) = (s.u[c], s.u[c + 1]);
        out.push(running + dx * (3.0 * left + right) / 8.0);
        running += 0.5 * dx * (left + right);
    }
    out
}

fn require_normalized(p: &PhysParams) -> Result<(), ReconstructionError> {
    if p.is_normalized() {
        Ok(())
    } else {
        Err(ReconstructionError::NotNormalized)
    }
}

fn same_grid(a: &SimState, b: &SimState) -> Result<(), ReconstructionError> {
    if a.n_cells() == b.n_cells() {
        Ok(())
    } else {
        Err(ReconstructionError::GridMismatch(a.n_cells(), b.n_cells()))
    }
}

/// `∫ v ∫_0^x u dy dx` with midpoint quadrature.
fn weighted_double_integral(v: &[f64], cumulative: &[f64], dx: f64) -> f64 {
    v.iter().zip(cumulative).map(|(v, c)| v * c * dx).sum()
}

fn d_from_parts(v0: &[f64], u0_cum: &[f64], initial_double: f64, s: &SimState) -> Vec<f64> {
    let dx = s.grid.dx();
    let cum = cumulative_u_integral(s);
    let shift = -weighted_double_integral(&s.v, &cum, dx) + initial_double;
    v0.iter()
        .zip(cum.iter().zip(u0_cum))
        .map(|(v0, (c, c0))| v0 * (c - c0 + shift).exp())
        .collect()
}

/// `D(x, t)` per cell for state `s` started from `initial`.
pub fn compute_d(s: &SimState, initial: &SimState, p: &PhysParams) -> Result<Vec<f64>, ReconstructionError> {
    require_normalized(p)?;
    same_grid(s, initial)?;
    let u0_cum = cumulative_u_integral(initial);
    let double0 = weighted_double_integral(&initial.v, &u0_cum, initial.grid.dx());
    Ok(d_from_parts(&initial.v, &u0_cum, double0, s))
}

/// `theta + v |b|^2 / 2` per cell, `|b|^2` averaged from the two nodes.
fn cell_source(s: &SimState) -> Vec<f64> {
    (0..s.n_cells())
        .map(|c| {
            let b_sq = |j: usize| s.b[j][0] * s.b[j][0] + s.b[j][1] * s.b[j][1];
            s.theta[c] + 0.25 * s.v[c] * (b_sq(c) + b_sq(c + 1))
        })
        .collect()
}

/// `∫ (u^2 + v |b|^2 / 2 + theta) dx`.
fn y_integrand(s: &SimState) -> f64 {
    let n = s.n_cells();
    let dx = s.grid.dx();
    let mut acc: f64 = s.theta.iter().map(|th| th * dx).sum();
    for j in 0..=n {
        let weight = if j == 0 || j == n { 0.5 * dx } else { dx };
        let b_sq = s.b[j][0] * s.b[j][0] + s.b[j][1] * s.b[j][1];
        acc += weight * (s.u[j] * s.u[j] + 0.5 * s.v_node(j) * b_sq);
    }
    acc
}

#[derive(Debug, Clone)]
pub struct ReconstructionAccumulator {
    t: f64,
    log_y: f64,
    per_cell_integral: Vec<f64>,
    v0: Vec<f64>,
    u0_cumulative: Vec<f64>,
    initial_double: f64,
    prev_y_integrand: f64,
    prev_cell_integrand: Vec<f64>,
}

/// Unit mass is needed for the boundary stress identity behind the formula.
const MASS_TOLERANCE: f64 = 1e-10;

impl ReconstructionAccumulator {
    pub fn new(initial: &SimState, p: &PhysParams) -> Result<Self, ReconstructionError> {
        require_normalized(p)?;
        let dx = initial.grid.dx();
        let mass: f64 = initial.v.iter().map(|v| v * dx).sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(ReconstructionError::MassNotUnit(mass));
        }
        let u0_cumulative = cumulative_u_integral(initial);
        let initial_double = weighted_double_integral(&initial.v, &u0_cumulative, dx);
        // At t = 0, D = v0 and Y = 1.
        let prev_cell_integrand = cell_source(initial)
            .iter()
            .zip(&initial.v)
            .map(|(g, v0)| g / v0)
            .collect();
        Ok(Self {
            t: initial.t,
            log_y: 0.0,
            per_cell_integral: vec![0.0; initial.n_cells()],
            v0: initial.v.clone(),
            u0_cumulative,
            initial_double,
            prev_y_integrand: y_integrand(initial),
            prev_cell_integrand,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `ln Y(t)`.
    pub fn log_y(&self) -> f64 {
        self.log_y
    }

    pub fn per_cell_integral(&self) -> &[f64] {
        &self.per_cell_integral
    }

    /// `D(x, t)` for a state of this run.
    pub fn d_field(&self, s: &SimState) -> Result<Vec<f64>, ReconstructionError> {
        if s.n_cells() != self.v0.len() {
            return Err(ReconstructionError::GridMismatch(s.n_cells(), self.v0.len()));
        }
        Ok(d_from_parts(&self.v0, &self.u0_cumulative, self.initial_double, s))
    }

    /// Folds in the accepted state `s`, reached from the accumulator's
    /// current time by a step of `dt`.
    pub fn update(&mut self, s: &SimState, dt: f64) -> Result<(), ReconstructionError> {
        let expected = self.t + dt;
        if (expected - s.t).abs() > 1e-12 * s.t.abs().max(1.0) {
            return Err(ReconstructionError::TimeMismatch {
                acc_t: self.t,
                dt,
                state_t: s.t,
            });
        }
        let d = self.d_field(s)?;
        let current_y = y_integrand(s);
        self.log_y -= 0.5 * dt * (self.prev_y_integrand + current_y);
        let y = self.log_y.exp();
        let current: Vec<f64> = cell_source(s)
            .iter()
            .zip(&d)
            .map(|(g, d)| g / (d * y))
            .collect();
        for ((acc, prev), cur) in self
            .per_cell_integral
            .iter_mut()
            .zip(&self.prev_cell_integrand)
            .zip(&current)
        {
            *acc += 0.5 * dt * (prev + cur);
        }
        self.prev_cell_integrand = current;
        self.prev_y_integrand = current_y;
        self.t = s.t;
        Ok(())
    }

    /// `v = D Y (1 + ∫ (theta + v|b|^2/2) / (D Y) dt)` per cell.
    pub fn reconstruct_v(&self, s: &SimState) -> Result<Vec<f64>, ReconstructionError> {
        if (self.t - s.t).abs() > 1e-12 * s.t.abs().max(1.0) {
            return Err(ReconstructionError::Stale {
                acc_t: self.t,
                state_t: s.t,
            });
        }
        let d = self.d_field(s)?;
        let y = self.log_y.exp();
        Ok(d.iter()
            .zip(&self.per_cell_integral)
            .map(|(d, integral)| d * y * (1.0 + integral))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::Grid;
    use crate::state::{equilibrium_state, EquilibriumTarget};

    fn eq(n: usize) -> SimState {
        equilibrium_state(Grid::new(n).unwrap(), EquilibriumTarget::normalized()).unwrap()
    }

    #[test]
    fn cumulative_integral_of_zero_and_sine() {
        let s = eq(32);
        assert!(cumulative_u_integral(&s).iter().all(|&x| x == 0.0));

        let err = |n: usize| {
            let mut s = eq(n);
            for j in 1..n {
                s.u[j] = (PI * s.grid.node_x(j)).sin();
            }
            cumulative_u_integral(&s)
                .iter()
                .enumerate()
                .map(|(c, val)| (val - (1.0 - (PI * s.grid.cell_x(c)).cos()) / PI).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(50), err(100));
        assert!(e1 < 1e-3);
        assert!((e1 / e2).log2() > 1.9, "{e1} {e2}");
    }

    #[test]
    fn cumulative_integral_is_linear() {
        let mut a = eq(16);
        let mut b = eq(16);
        for j in 1..16 {
            a.u[j] = (j as f64).sin();
            b.u[j] = (j as f64 * 0.3).cos();
        }
        let mut sum = eq(16);
        for j in 0..=16 {
            sum.u[j] = 2.0 * a.u[j] - 3.0 * b.u[j];
        }
        let (ca, cb, cs) = (cumulative_u_integral(&a), cumulative_u_integral(&b), cumulative_u_integral(&sum));
        for c in 0..16 {
            assert!((cs[c] - (2.0 * ca[c] - 3.0 * cb[c])).abs() < 1e-14);
        }
    }

    #[test]
    fn d_is_v0_at_start_and_one_at_equilibrium() {
        let p = PhysParams::normalized(1.0).unwrap();
        let mut s = eq(40);
        for c in 0..40 {
            s.v[c] = 1.0 + 0.1 * (2.0 * PI * s.grid.cell_x(c)).sin();
        }
        for j in 1..40 {
            s.u[j] = 0.1 * (PI * s.grid.node_x(j)).sin();
        }
        assert_eq!(compute_d(&s, &s, &p).unwrap(), s.v);

        let e = eq(40);
        let mut later = e.clone();
        later.t = 3.0;
        assert!(compute_d(&later, &e, &p).unwrap().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn requires_unit_constants() {
        let p = PhysParams::new(2.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(compute_d(&eq(8), &eq(8), &p), Err(ReconstructionError::NotNormalized));
        assert!(ReconstructionAccumulator::new(&eq(8), &p).is_err());
    }

    #[test]
    fn equilibrium_reconstruction() {
        let p = PhysParams::normalized(0.0).unwrap();
        let mut s = eq(20);
        let mut acc = ReconstructionAccumulator::new(&s, &p).unwrap();
        assert_eq!(acc.reconstruct_v(&s).unwrap(), s.v);
        let dt = 1e-3;
        for _ in 0..2000 {
            s.t += dt;
            acc.update(&s, dt).unwrap();
        }
        let t = s.t;
        assert!((acc.log_y() + t).abs() < 1e-12);
        for &integral in acc.per_cell_integral() {
            // Trapezoid error of ∫ e^s ds is dt^2 t e^t / 12.
            assert!((integral - (t.exp() - 1.0)).abs() < 1e-6);
        }
        for v in acc.reconstruct_v(&s).unwrap() {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn time_bookkeeping_errors() {
        let p = PhysParams::normalized(0.0).unwrap();
        let mut s = eq(8);
        let mut acc = ReconstructionAccumulator::new(&s, &p).unwrap();
        s.t = 0.5;
        assert!(matches!(acc.update(&s, 0.1), Err(ReconstructionError::TimeMismatch { .. })));
        assert!(matches!(acc.reconstruct_v(&s), Err(ReconstructionError::Stale { .. })));
    }

    #[test]
    fn rejects_non_unit_mass() {
        let p = PhysParams::normalized(0.0).unwrap();
        let mut s = eq(8);
        s.v.iter_mut().for_each(|v| *v = 2.0);
        assert!(matches!(
            ReconstructionAccumulator::new(&s, &p),
            Err(ReconstructionError::MassNotUnit(_))
        ));
    }
}
