use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::grid::Grid;

/// Discrete unknowns at one time instant.
///
/// `v` and `theta` hold one value per cell; `u`, `w` and `b` hold one value
/// per node, with `w` and `b` two-component transverse vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub grid: Grid,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
}

/// The constant state the solution relaxes to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumTarget {
    pub v_s: f64,
    pub theta_s: f64,
}

impl EquilibriumTarget {
    pub fn new(v_s: f64, theta_s: f64) -> Result<Self, ModelError> {
        for (name, value) in [("v_s", v_s), ("theta_s", theta_s)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name,
                    value,
                    reason: "equilibrium values must be positive",
                });
            }
        }
        Ok(Self { v_s, theta_s })
    }

    pub fn normalized() -> Self {
        Self {
            v_s: 1.0,
            theta_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    V,
    Theta,
    U,
    W,
    B,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::V => "v",
            Field::Theta => "theta",
            Field::U => "u",
            Field::W => "w",
            Field::B => "b",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// Field length does not match the grid.
    Length,
    NonFinite,
    /// `v` and `theta` must be strictly positive.
    Positivity,
    /// `u`, `w`, `b` must vanish at both end nodes.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: Field,
    pub index: usize,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} violated by {}[{}]", self.rule, self.field, self.index)
    }
}

impl SimState {
    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    /// Specific volume averaged to node `j`; end nodes take the adjacent cell.
    #[inline]
    pub fn v_node(&self, j: usize) -> f64 {
        let n = self.n_cells();
        if j == 0 {
            self.v[0]
        } else if j == n {
            self.v[n - 1]
        } else {
            0.5 * (self.v[j - 1] + self.v[j])
        }
    }

    /// Checks that every field has the length the grid implies.
    pub fn check_shape(&self) -> Result<(), ModelError> {
        let n = self.n_cells();
        let lens = [
            (Field::V, self.v.len(), n),
            (Field::Theta, self.theta.len(), n),
            (Field::U, self.u.len(), n + 1),
            (Field::W, self.w.len(), n + 1),
            (Field::B, self.b.len(), n + 1),
        ];
        for (field, got, expected) in lens {
            if got != expected {
                return Err(ModelError::ShapeMismatch {
                    field,
                    got,
                    expected,
                });
            }
        }
        Ok(())
    }

    /// Errors with the full violation list if the state is not admissible.
    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let violations = validate_state(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidState(violations))
        }
    }
}

pub fn equilibrium_state(grid: Grid, target: EquilibriumTarget) -> Result<SimState, ModelError> {
    let target = EquilibriumTarget::new(target.v_s, target.theta_s)?;
    let n = grid.n_cells();
    Ok(SimState {
        t: 0.0,
        grid,
        v: vec![target.v_s; n],
        theta: vec![target.theta_s; n],
        u: vec![0.0; n + 1],
        w: vec![[0.0; 2]; n + 1],
        b: vec![[0.0; 2]; n + 1],
    })
}

/// Lists every violated state invariant. Empty means admissible.
pub fn validate_state(s: &SimState) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = s.n_cells();
    let lens = [
        (Field::V, s.v.len(), n),
        (Field::Theta, s.theta.len(), n),
        (Field::U, s.u.len(), n + 1),
        (Field::W, s.w.len(), n + 1),
        (Field::B, s.b.len(), n + 1),
    ];
    for (field, got, expected) in lens {
        if got != expected {
            out.push(Violation {
                field,
                index: got,
                rule: Rule::Length,
            });
        }
    }
    if !out.is_empty() {
        return out;
    }

    for (field, values) in [(Field::V, &s.v), (Field::Theta, &s.theta)] {
        for (index, &x) in values.iter().enumerate() {
            if !x.is_finite() {
                out.push(Violation { field, index, rule: Rule::NonFinite });
            } else if x <= 0.0 {
                out.push(Violation { field, index, rule: Rule::Positivity });
            }
        }
    }

    let u_rows = s.u.iter().map(|&x| [x, 0.0]);
    type Rows<'a> = Box<dyn Iterator<Item = [f64; 2]> + 'a>;
    let nodal: [(Field, Rows<'_>); 3] = [
        (Field::U, Box::new(u_rows)),
        (Field::W, Box::new(s.w.iter().copied())),
        (Field::B, Box::new(s.b.iter().copied())),
    ];
    for (field, values) in nodal {
        for (index, x) in values.enumerate() {
            if !(x[0].is_finite() && x[1].is_finite()) {
                out.push(Violation { field, index, rule: Rule::NonFinite });
            } else if (index == 0 || index == n) && (x[0] != 0.0 || x[1] != 0.0) {
                out.push(Violation { field, index, rule: Rule::Boundary });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn equilibrium_fields() {
        let s = equilibrium_state(grid(100), EquilibriumTarget::normalized()).unwrap();
        assert_eq!(s.t, 0.0);
        assert!(s.v.iter().all(|&v| v == 1.0));
        assert!(s.theta.iter().all(|&th| th == 1.0));
        assert!(s.u.iter().all(|&u| u == 0.0));
        assert!(s.w.iter().chain(&s.b).all(|x| *x == [0.0, 0.0]));
        assert_eq!(s.u.len(), 101);
        assert!(validate_state(&s).is_empty());

        let s = equilibrium_state(grid(10), EquilibriumTarget { v_s: 2.0, theta_s: 0.5 }).unwrap();
        assert!(s.v.iter().all(|&v| v == 2.0));
        assert!(s.theta.iter().all(|&th| th == 0.5));
    }

    #[test]
    fn equilibrium_rejects_nonpositive_target() {
        let bad = EquilibriumTarget { v_s: 0.0, theta_s: 1.0 };
        assert!(equilibrium_state(grid(10), bad).is_err());
        let bad = EquilibriumTarget { v_s: 1.0, theta_s: -2.0 };
        assert!(equilibrium_state(grid(10), bad).is_err());
    }

    #[test]
    fn negative_volume_reported_at_its_cell() {
        let mut s = equilibrium_state(grid(10), EquilibriumTarget::normalized()).unwrap();
        s.v[3] = -0.1;
        assert_eq!(
            validate_state(&s),
            vec![Violation { field: Field::V, index: 3, rule: Rule::Positivity }]
        );
    }

    #[test]
    fn boundary_velocity_reported() {
        let mut s = equilibrium_state(grid(10), EquilibriumTarget::normalized()).unwrap();
        s.u[0] = 0.2;
        assert_eq!(
            validate_state(&s),
            vec![Violation { field: Field::U, index: 0, rule: Rule::Boundary }]
        );
        s.u[0] = 0.0;
        s.b[10][1] = 1e-3;
        assert_eq!(
            validate_state(&s),
            vec![Violation { field: Field::B, index: 10, rule: Rule::Boundary }]
        );
    }

    #[test]
    fn length_and_nan_checks() {
        let mut s = equilibrium_state(grid(10), EquilibriumTarget::normalized()).unwrap();
        s.theta[2] = f64::NAN;
        assert_eq!(validate_state(&s)[0].rule, Rule::NonFinite);
        s.theta.pop();
        let v = validate_state(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::Length);
        assert!(s.check_shape().is_err());
    }
}
