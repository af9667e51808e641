//! Manufactured-solution convergence studies.
//!
//! The manufactured fields are
//! `v = 1 + a sin(2 pi x) e^-t`, `u = a sin(pi x) e^-t`,
//! `w = b = a (sin(pi x), sin(2 pi x)) e^-t`, `theta = 1 + a cos(pi x) e^-t`.
//! They satisfy the boundary conditions, so only interior residuals are
//! injected. Residuals come from five-point central differences of the
//! field callbacks, nested for second derivatives.

use std::f64::consts::PI;
use std::path::Path;

use mhd1d_core::{
    advance_with, DtRule, Grid, PhysParams, SimState, SourceFields, StepControls,
};
use serde::Serialize;

use crate::config::MmsConfig;
use crate::error::HarnessError;
use crate::format::{create_dir, fmt_f64, write_text};

/// Finite-difference spacing for the residual evaluation.
pub const FD_STEP: f64 = 1e-4;

pub const FIELDS: [&str; 5] = ["v", "u", "w", "b", "theta"];

/// Fourth-order central first derivative.
pub fn d5<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = FD_STEP;
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub amplitude: f64,
}

impl Manufactured {
    fn decay(&self, t: f64) -> f64 {
        self.amplitude * (-t).exp()
    }

    pub fn v(&self, x: f64, t: f64) -> f64 {
        1.0 + self.decay(t) * (2.0 * PI * x).sin()
    }

    pub fn u(&self, x: f64, t: f64) -> f64 {
        self.decay(t) * (PI * x).sin()
    }

    pub fn w(&self, x: f64, t: f64, k: usize) -> f64 {
        self.decay(t) * ((k + 1) as f64 * PI * x).sin()
    }

    pub fn b(&self, x: f64, t: f64, k: usize) -> f64 {
        self.w(x, t, k)
    }

    pub fn theta(&self, x: f64, t: f64) -> f64 {
        1.0 + self.decay(t) * (PI * x).cos()
    }

    /// The manufactured solution sampled on `grid` at time `t`.
    pub fn state(&self, grid: Grid, t: f64) -> SimState {
        let n = grid.n_cells();
        let node = |f: &dyn Fn(f64) -> f64, j: usize| {
            if j == 0 || j == n {
                0.0
            } else {
                f(grid.node_x(j))
            }
        };
        SimState {
            t,
            grid,
            v: grid.cell_xs().map(|x| self.v(x, t)).collect(),
            theta: grid.cell_xs().map(|x| self.theta(x, t)).collect(),
            u: (0..=n).map(|j| node(&|x| self.u(x, t), j)).collect(),
            w: (0..=n)
                .map(|j| [node(&|x| self.w(x, t, 0), j), node(&|x| self.w(x, t, 1), j)])
                .collect(),
            b: (0..=n)
                .map(|j| [node(&|x| self.b(x, t, 0), j), node(&|x| self.b(x, t, 1), j)])
                .collect(),
        }
    }

    /// Forcing that makes this solution exact for the PDE system in the
    /// form the scheme advances it.
    pub fn sources(self, p: PhysParams) -> SourceFields {
        let m = self;
        let ux = move |x: f64, t: f64| d5(|y| m.u(y, t), x);
        let wx = move |x: f64, t: f64, k: usize| d5(|y| m.w(y, t, k), x);
        let bx = move |x: f64, t: f64, k: usize| d5(|y| m.b(y, t, k), x);
        SourceFields {
            v: Some(Box::new(move |x, t| d5(|s| m.v(x, s), t) - ux(x, t))),
            u: Some(Box::new(move |x, t| {
                let total_pressure = |y: f64| {
                    let bsq = m.b(y, t, 0).powi(2) + m.b(y, t, 1).powi(2);
                    p.pressure(m.v(y, t), m.theta(y, t)) + 0.5 * bsq
                };
                let viscous = d5(|y| p.mu * ux(y, t) / m.v(y, t), x);
                d5(|s| m.u(x, s), t) + d5(total_pressure, x) - viscous
            })),
            w: Some(Box::new(move |x, t| {
                [0, 1].map(|k| {
                    let viscous = d5(|y| p.lambda * wx(y, t, k) / m.v(y, t), x);
                    d5(|s| m.w(x, s, k), t) - bx(x, t, k) - viscous
                })
            })),
            b: Some(Box::new(move |x, t| {
                [0, 1].map(|k| {
                    let resistive = d5(|y| p.nu * bx(y, t, k) / m.v(y, t), x);
                    let rhs = wx(x, t, k) - m.b(x, t, k) * ux(x, t) + resistive;
                    d5(|s| m.b(x, s, k), t) - rhs / m.v(x, t)
                })
            })),
            theta: Some(Box::new(move |x, t| {
                let v = m.v(x, t);
                let theta = m.theta(x, t);
                let conduction = d5(
                    |y| {
                        let th = m.theta(y, t);
                        p.conductivity(th) * d5(|z| m.theta(z, t), y) / m.v(y, t)
                    },
                    x,
                );
                let u_x = ux(x, t);
                let mut heating = p.mu * u_x * u_x;
                for k in 0..2 {
                    heating += p.lambda * wx(x, t, k).powi(2) + p.nu * bx(x, t, k).powi(2);
                }
                let rhs = conduction - p.pressure(v, theta) * u_x + heating / v;
                d5(|s| m.theta(x, s), t) - rhs / p.c_v
            })),
        }
    }
}

/// Maximum nodal error of each field, in [`FIELDS`] order.
pub fn field_errors(s: &SimState, m: &Manufactured) -> [f64; 5] {
    let exact = m.state(s.grid, s.t);
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let max_diff2 = |a: &[[f64; 2]], b: &[[f64; 2]]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x[0] - y[0]).abs().max((x[1] - y[1]).abs()))
            .fold(0.0, f64::max)
    };
    [
        max_diff(&s.v, &exact.v),
        max_diff(&s.u, &exact.u),
        max_diff2(&s.w, &exact.w),
        max_diff2(&s.b, &exact.b),
        max_diff(&s.theta, &exact.theta),
    ]
}

/// How the step size scales with the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DtScaling {
    /// `dt = c dx^2`: temporal error matches a second-order spatial error.
    Parabolic(f64),
    /// `dt = c dx`: temporal error dominates.
    Linear(f64),
}

impl DtScaling {
    fn nominal(self, dx: f64) -> f64 {
        match self {
            DtScaling::Parabolic(c) => c * dx * dx,
            DtScaling::Linear(c) => c * dx,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsRow {
    pub n_cells: usize,
    pub dt: f64,
    pub steps: usize,
    pub errors: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderRow {
    pub n_coarse: usize,
    pub n_fine: usize,
    /// `None` when either error is zero.
    pub orders: [Option<f64>; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub scaling: DtScaling,
    pub rows: Vec<MmsRow>,
    pub orders: Vec<OrderRow>,
    /// Fields whose error failed to decrease under refinement.
    pub non_monotone: Vec<String>,
}

impl ConvergenceStudy {
    /// Smallest observed order per field over all refinement pairs.
    pub fn min_orders(&self) -> [Option<f64>; 5] {
        let mut out = [None; 5];
        for row in &self.orders {
            for (slot, order) in out.iter_mut().zip(row.orders) {
                if let Some(o) = order {
                    *slot = Some(slot.map_or(o, |s: f64| s.min(o)));
                }
            }
        }
        out
    }
}

/// Integrates the manufactured problem on one grid and measures the error
/// at `t_end`.
pub fn mms_run(
    n_cells: usize,
    m: Manufactured,
    p: &PhysParams,
    controls: &StepControls,
    t_end: f64,
    scaling: DtScaling,
) -> Result<MmsRow, HarnessError> {
    let grid = Grid::new(n_cells)?;
    let steps = (t_end / scaling.nominal(grid.dx())).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let sources = m.sources(*p);
    let s0 = m.state(grid, 0.0);
    let summary = advance_with(&s0, p, controls, t_end, DtRule::Fixed(dt), Some(&sources), |_, _, _| {})?;
    Ok(MmsRow {
        n_cells,
        dt,
        steps: summary.accepted_steps,
        errors: field_errors(&summary.state, &m),
    })
}

pub fn convergence_study(cfg: &MmsConfig, scaling: DtScaling) -> Result<ConvergenceStudy, HarnessError> {
    let m = Manufactured {
        amplitude: cfg.amplitude,
    };
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .resolutions
            .iter()
            .map(|&n| {
                scope.spawn(move || {
                    mms_run(n, m, &cfg.base.physics, &cfg.base.controls, cfg.t_end, scaling)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("convergence run panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut orders = Vec::new();
    let mut non_monotone = Vec::new();
    for pair in rows.windows(2) {
        let (coarse, fine) = (&pair[0], &pair[1]);
        let ratio = (fine.n_cells as f64 / coarse.n_cells as f64).ln();
        let mut row = OrderRow {
            n_coarse: coarse.n_cells,
            n_fine: fine.n_cells,
            orders: [None; 5],
        };
        for (i, field) in FIELDS.iter().enumerate() {
            let (ec, ef) = (coarse.errors[i], fine.errors[i]);
            if ec > 0.0 && ef > 0.0 {
                row.orders[i] = Some((ec / ef).ln() / ratio);
            }
            if ef > ec {
                non_monotone.push(format!("{field}: {} -> {}", coarse.n_cells, fine.n_cells));
            }
        }
        orders.push(row);
    }
    Ok(ConvergenceStudy {
        scaling,
        rows,
        orders,
        non_monotone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsReport {
    pub study: ConvergenceStudy,
    pub control: Option<ConvergenceStudy>,
}

pub fn mms_convergence(cfg: &MmsConfig) -> Result<MmsReport, HarnessError> {
    let study = convergence_study(cfg, DtScaling::Parabolic(cfg.dt_coeff))?;
    let control = cfg
        .control_dt_coeff
        .map(|c| convergence_study(cfg, DtScaling::Linear(c)))
        .transpose()?;
    Ok(MmsReport { study, control })
}

fn fmt_order(order: Option<f64>) -> String {
    order.map_or_else(|| "n/a".to_string(), |o| format!("{o:.3}"))
}

/// Human-readable order table.
pub fn render(report: &MmsReport) -> String {
    let mut out = String::new();
    let studies = std::iter::once(&report.study).chain(&report.control);
    for study in studies {
        let label = match study.scaling {
            DtScaling::Parabolic(c) => format!("dt = {c} dx^2"),
            DtScaling::Linear(c) => format!("dt = {c} dx (control)"),
        };
        out.push_str(&format!("{label}\n"));
        out.push_str(&format!("{:>8} {:>12}", "N", "dt"));
        for f in FIELDS {
            out.push_str(&format!(" {f:>12}"));
        }
        out.push('\n');
        for row in &study.rows {
            out.push_str(&format!("{:>8} {:>12.4e}", row.n_cells, row.dt));
            for e in row.errors {
                out.push_str(&format!(" {e:>12.4e}"));
            }
            out.push('\n');
        }
        for row in &study.orders {
            out.push_str(&format!("{:>21}", format!("order {}->{}", row.n_coarse, row.n_fine)));
            for o in row.orders {
                out.push_str(&format!(" {:>12}", fmt_order(o)));
            }
            out.push('\n');
        }
        for flag in &study.non_monotone {
            out.push_str(&format!("warning: non-monotone error in {flag}\n"));
        }
        out.push('\n');
    }
    out
}

/// Writes `mms.csv` (errors) and `mms_orders.csv` into `dir`.
pub fn write_report(dir: &Path, report: &MmsReport) -> Result<(), HarnessError> {
    create_dir(dir)?;
    let mut errors = String::from("study,n_cells,dt,steps,err_v,err_u,err_w,err_b,err_theta\n");
    let mut orders = String::from("study,n_coarse,n_fine,order_v,order_u,order_w,order_b,order_theta\n");
    for study in std::iter::once(&report.study).chain(&report.control) {
        let name = match study.scaling {
            DtScaling::Parabolic(_) => "dx2",
            DtScaling::Linear(_) => "dx",
        };
        for row in &study.rows {
            let errs: Vec<String> = row.errors.iter().map(|&e| fmt_f64(e)).collect();
            errors.push_str(&format!("{name},{},{},{},{}\n", row.n_cells, fmt_f64(row.dt), row.steps, errs.join(",")));
        }
        for row in &study.orders {
            let ords: Vec<String> = row.orders.iter().map(|o| o.map_or(String::new(), fmt_f64)).collect();
            orders.push_str(&format!("{name},{},{},{}\n", row.n_coarse, row.n_fine, ords.join(",")));
        }
    }
    write_text(&dir.join("mms.csv"), &errors)?;
    write_text(&dir.join("mms_orders.csv"), &orders)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_derivative_is_accurate() {
        let d = d5(f64::sin, 0.3);
        assert!((d - 0.3f64.cos()).abs() < 1e-11);
        let dd = d5(|y| d5(f64::sin, y), 0.3);
        assert!((dd + 0.3f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn manufactured_state_honours_boundaries() {
        let m = Manufactured { amplitude: 0.1 };
        let s = m.state(Grid::new(16).unwrap(), 0.2);
        assert!(mhd1d_core::validate_state(&s).is_empty());
    }

    #[test]
    fn zero_amplitude_is_equilibrium_with_zero_sources() {
        let m = Manufactured { amplitude: 0.0 };
        let p = PhysParams::normalized(1.0).unwrap();
        let src = m.sources(p);
        for x in [0.1, 0.5, 0.9] {
            assert_eq!(src.v.as_ref().unwrap()(x, 0.3), 0.0);
            assert_eq!(src.u.as_ref().unwrap()(x, 0.3), 0.0);
            assert_eq!(src.w.as_ref().unwrap()(x, 0.3), [0.0; 2]);
            assert_eq!(src.b.as_ref().unwrap()(x, 0.3), [0.0; 2]);
            assert_eq!(src.theta.as_ref().unwrap()(x, 0.3), 0.0);
        }
        let row = mms_run(16, m, &p, &StepControls::default(), 0.1, DtScaling::Parabolic(1.0)).unwrap();
        assert_eq!(row.errors, [0.0; 5]);
    }
}
