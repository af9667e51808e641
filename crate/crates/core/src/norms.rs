//! Discrete L2 and H1 distances to a constant equilibrium.
//!
//! Cell fields use midpoint quadrature, node fields trapezoid quadrature.
//! Derivatives of cell fields are interior cell-to-cell differences
//! (`n_cells - 1` values, no boundary extrapolation); derivatives of node
//! fields are node-to-node differences living on cells.

use crate::error::ModelError;
use crate::state::{EquilibriumTarget, SimState};

/// Squared L2 norm and squared derivative seminorm of the deviation
/// `(v - v_s, u, theta - theta_s, b, w)`.
pub(crate) fn deviation_parts(s: &SimState, target: &EquilibriumTarget) -> (f64, f64) {
    let n = s.n_cells();
    let dx = s.grid.dx();

    let mut l2 = 0.0;
    for c in 0..n {
        let dv = s.v[c] - target.v_s;
        let dth = s.theta[c] - target.theta_s;
        l2 += dx * (dv * dv + dth * dth);
    }
    for j in 0..=n {
        let weight = if j == 0 || j == n { 0.5 * dx } else { dx };
        let [w1, w2] = s.w[j];
        let [b1, b2] = s.b[j];
        l2 += weight * (s.u[j] * s.u[j] + w1 * w1 + w2 * w2 + b1 * b1 + b2 * b2);
    }

    let mut d2 = 0.0;
    for c in 0..n - 1 {
        let gv = (s.v[c + 1] - s.v[c]) / dx;
        let gth = (s.theta[c + 1] - s.theta[c]) / dx;
        d2 += dx * (gv * gv + gth * gth);
    }
    for c in 0..n {
        let gu = (s.u[c + 1] - s.u[c]) / dx;
        let mut acc = gu * gu;
        for k in 0..2 {
            let gw = (s.w[c + 1][k] - s.w[c][k]) / dx;
            let gb = (s.b[c + 1][k] - s.b[c][k]) / dx;
            acc += gw * gw + gb * gb;
        }
        d2 += dx * acc;
    }
    (l2, d2)
}

/// Root-sum-square H1 distance of the state to `target` over all five
/// components.
pub fn h1_distance(s: &SimState, target: &EquilibriumTarget) -> Result<f64, ModelError> {
    s.check_shape()?;
    let (l2, d2) = deviation_parts(s, target);
    Ok((l2 + d2).sqrt())
}

pub fn l2_distance(s: &SimState, target: &EquilibriumTarget) -> Result<f64, ModelError> {
    s.check_shape()?;
    Ok(deviation_parts(s, target).0.sqrt())
}
