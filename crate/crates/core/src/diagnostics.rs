//! Monitored scalars: conserved quantities, the entropy functional and its
//! dissipation, the mean-temperature bracket and exponential decay fits.
//!
//! Quadrature is midpoint on cells and trapezoid on nodes. The magnetic
//! energy density `v |b|^2 / 2` lives on nodes with node-averaged `v`.

use serde::{Deserialize, Serialize};

use crate::error::{DiagnosticsError, ModelError};
use crate::norms::deviation_parts;
use crate::params::PhysParams;
use crate::state::{EquilibriumTarget, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub total_energy: f64,
    pub entropy_e: f64,
    pub dissipation_v: f64,
    pub theta_bar: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub min_theta: f64,
    pub max_theta: f64,
    pub h1_dist: f64,
    pub l2_dist: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: [&'static str; 13] = [
        "t",
        "dt",
        "mass",
        "total_energy",
        "entropy_E",
        "dissipation_V",
        "theta_bar",
        "min_v",
        "max_v",
        "min_theta",
        "max_theta",
        "h1_dist",
        "l2_dist",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.dt,
            self.mass,
            self.total_energy,
            self.entropy_e,
            self.dissipation_v,
            self.theta_bar,
            self.min_v,
            self.max_v,
            self.min_theta,
            self.max_theta,
            self.h1_dist,
            self.l2_dist,
        ]
    }
}

fn node_weight(j: usize, n: usize, dx: f64) -> f64 {
    if j == 0 || j == n {
        0.5 * dx
    } else {
        dx
    }
}

/// `∫ v dx`, as a cell mean so that constant fields integrate exactly.
pub fn mass(s: &SimState) -> f64 {
    s.v.iter().sum::<f64>() / s.n_cells() as f64
}

/// `∫ (u^2 + |w|^2 + v |b|^2) / 2 dx`.
pub fn kinetic_magnetic(s: &SimState) -> f64 {
    let n = s.n_cells();
    let dx = s.grid.dx();
    (0..=n)
        .map(|j| {
            let [w1, w2] = s.w[j];
            let [b1, b2] = s.b[j];
            let density = s.u[j] * s.u[j] + w1 * w1 + w2 * w2 + s.v_node(j) * (b1 * b1 + b2 * b2);
            0.5 * node_weight(j, n, dx) * density
        })
        .sum()
}

/// `∫ theta dx`, as a cell mean.
pub fn theta_bar(s: &SimState) -> f64 {
    s.theta.iter().sum::<f64>() / s.n_cells() as f64
}

/// `∫ (c_v theta + (u^2 + |w|^2 + v |b|^2) / 2) dx`.
pub fn total_energy(s: &SimState, p: &PhysParams) -> f64 {
    p.c_v * theta_bar(s) + kinetic_magnetic(s)
}

/// `∫ ((u^2 + |w|^2 + v |b|^2)/2 + R (v - ln v) + c_v (theta - ln theta)) dx`.
///
/// With unit `R` and `c_v` this is the functional whose time derivative is
/// minus [`dissipation`].
pub fn entropy_functional(s: &SimState, p: &PhysParams) -> f64 {
    let dx = s.grid.dx();
    let thermal: f64 = s
        .v
        .iter()
        .zip(&s.theta)
        .map(|(&v, &th)| dx * (p.r_gas * (v - v.ln()) + p.c_v * (th - th.ln())))
        .sum();
    thermal + kinetic_magnetic(s)
}

/// `∫ (kappa theta_x^2 / (v theta^2) + (mu u_x^2 + lambda |w_x|^2 + nu |b_x|^2) / (v theta)) dx`.
///
/// The conduction part sits on interior faces with the face conductivity
/// and `theta^2` replaced by the product of the neighbouring temperatures;
/// the viscous part sits on cells.
pub fn dissipation(s: &SimState, p: &PhysParams) -> f64 {
    let n = s.n_cells();
    let dx = s.grid.dx();
    let mut acc = 0.0;
    for j in 1..n {
        let (tl, tr) = (s.theta[j - 1], s.theta[j]);
        let kappa = 0.5 * (p.conductivity(tl) + p.conductivity(tr));
        let grad = (tr - tl) / dx;
        acc += dx * kappa * grad * grad / (s.v_node(j) * tl * tr);
    }
    for c in 0..n {
        let ux = (s.u[c + 1] - s.u[c]) / dx;
        let mut heat = p.mu * ux * ux;
        for k in 0..2 {
            let wx = (s.w[c + 1][k] - s.w[c][k]) / dx;
            let bx = (s.b[c + 1][k] - s.b[c][k]) / dx;
            heat += p.lambda * wx * wx + p.nu * bx * bx;
        }
        acc += dx * heat / (s.v[c] * s.theta[c]);
    }
    acc
}

pub fn snapshot_diagnostics(
    s: &SimState,
    p: &PhysParams,
    target: &EquilibriumTarget,
    dt_used: f64,
) -> Result<DiagnosticsRecord, DiagnosticsError> {
    s.ensure_valid()?;
    let (l2, d2) = deviation_parts(s, target);
    let (min_v, max_v) = extrema(&s.v);
    let (min_theta, max_theta) = extrema(&s.theta);
    Ok(DiagnosticsRecord {
        t: s.t,
        dt: dt_used,
        mass: mass(s),
        total_energy: total_energy(s, p),
        entropy_e: entropy_functional(s, p),
        dissipation_v: dissipation(s, p),
        theta_bar: theta_bar(s),
        min_v,
        max_v,
        min_theta,
        max_theta,
        h1_dist: (l2 + d2).sqrt(),
        l2_dist: l2.sqrt(),
    })
}

fn extrema(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// The constant state carrying the mass and total energy of `s`:
/// `v_s = ∫ v dx`, `theta_s = E_tot / c_v`.
///
/// Along a run this tracks the equilibrium the discrete trajectory actually
/// relaxes to, which differs from the initial target by the accumulated
/// time-discretization energy drift.
pub fn invariant_target(s: &SimState, p: &PhysParams) -> Result<EquilibriumTarget, ModelError> {
    EquilibriumTarget::new(mass(s), total_energy(s, p) / p.c_v)
}

/// Twice the entropy functional of the initial state.
pub fn compute_e0(initial: &SimState, p: &PhysParams) -> f64 {
    2.0 * entropy_functional(initial, p)
}

/// The two roots of `x - ln x = e0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBracket {
    pub e0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

fn root_residual(x: f64, e0: f64) -> f64 {
    x - x.ln() - e0
}

/// Bisection on a bracket where `f(lo)` and `f(hi)` differ in sign, run
/// until the interval cannot shrink further in floating point.
fn bisect(mut lo: f64, mut hi: f64, e0: f64) -> f64 {
    let f_lo_positive = root_residual(lo, e0) > 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = root_residual(mid, e0);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == f_lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if root_residual(lo, e0).abs() <= root_residual(hi, e0).abs() {
        lo
    } else {
        hi
    }
}

pub fn alpha_bracket(e0: f64) -> Result<AlphaBracket, DiagnosticsError> {
    if !(e0 >= 1.0) || !e0.is_finite() {
        return Err(DiagnosticsError::NoRealRoot(e0));
    }
    if e0 == 1.0 {
        return Ok(AlphaBracket {
            e0,
            alpha1: 1.0,
            alpha2: 1.0,
        });
    }
    // x - ln x > e0 whenever x < exp(-e0).
    let lo = (0.5 * (-e0).exp()).max(f64::MIN_POSITIVE);
    let alpha1 = bisect(lo, 1.0, e0);
    let mut hi = 2.0;
    while root_residual(hi, e0) <= 0.0 {
        hi *= 2.0;
    }
    let alpha2 = bisect(1.0, hi, e0);
    Ok(AlphaBracket { e0, alpha1, alpha2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Minus the slope of `ln y` against `t`.
    pub eta_hat: f64,
    pub intercept: f64,
    /// `None` when `ln y` is constant over the window.
    pub r_squared: Option<f64>,
    pub samples: usize,
}

/// Least-squares line through `(t, ln y)` for samples with `t` in
/// `[t_lo, t_hi]`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, DiagnosticsError> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(DiagnosticsError::DegenerateWindow { lo, hi });
    }
    let mut points = Vec::new();
    for &(t, y) in series.iter().filter(|(t, _)| *t >= lo && *t <= hi) {
        if !(y > 0.0) {
            return Err(DiagnosticsError::NonPositiveNorm { t, value: y });
        }
        points.push((t, y.ln()));
    }
    if points.len() < 10 {
        return Err(DiagnosticsError::TooFewSamples(points.len()));
    }
    let count = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / count;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / count;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &points {
        stt += (t - t_mean) * (t - t_mean);
        sty += (t - t_mean) * (y - y_mean);
        syy += (y - y_mean) * (y - y_mean);
    }
    if stt == 0.0 {
        return Err(DiagnosticsError::DegenerateWindow { lo, hi });
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let ss_res: f64 = points
        .iter()
        .map(|&(t, y)| {
            let r = y - (intercept + slope * t);
            r * r
        })
        .sum();
    let scale = y_mean.abs().max(1.0);
    let r_squared = if syy <= 1e-28 * count * scale * scale {
        None
    } else {
        Some(1.0 - ss_res / syy)
    };
    Ok(DecayFit {
        eta_hat: -slope,
        intercept,
        r_squared,
        samples: points.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBudget {
    /// `max_n |E(t_n) + ∫_0^{t_n} V - E(0)|`, trapezoid in time.
    pub max_residual: f64,
    pub e0: f64,
    /// `max_n (E(t_n) + ∫_0^{t_n} V - e0)`; non-positive when the bound holds.
    pub max_bound_excess: f64,
    pub bound_holds: bool,
}

/// Slack allowed on `E(t) + ∫ V <= e0`.
pub const ENTROPY_BOUND_SLACK: f64 = 1e-6;

/// Discrete entropy balance over one run; records must be time-ordered and
/// start at the initial state.
pub fn check_entropy_budget(records: &[DiagnosticsRecord]) -> EntropyBudget {
    let Some(first) = records.first() else {
        return EntropyBudget {
            max_residual: 0.0,
            e0: 0.0,
            max_bound_excess: 0.0,
            bound_holds: true,
        };
    };
    let e_start = first.entropy_e;
    let e0 = 2.0 * e_start;
    let mut paid = 0.0;
    let mut max_residual = 0.0f64;
    let mut max_bound_excess = first.entropy_e - e0;
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        paid += 0.5 * (a.dissipation_v + b.dissipation_v) * (b.t - a.t);
        let budget = b.entropy_e + paid;
        max_residual = max_residual.max((budget - e_start).abs());
        max_bound_excess = max_bound_excess.max(budget - e0);
    }
    EntropyBudget {
        max_residual,
        e0,
        max_bound_excess,
        bound_holds: max_bound_excess <= ENTROPY_BOUND_SLACK,
    }
}
