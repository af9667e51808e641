use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Uniform partition of the mass interval `(0, 1)`.
///
/// Nodes sit at `j * dx` for `j = 0..=n_cells`, cell centers at
/// `(c + 1/2) * dx` for `c = 0..n_cells`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n_cells: usize,
}

impl Grid {
    pub fn new(n_cells: usize) -> Result<Self, ModelError> {
        if n_cells < 4 {
            return Err(ModelError::GridTooSmall(n_cells));
        }
        Ok(Self { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn node_x(&self, j: usize) -> f64 {
        j as f64 / self.n_cells as f64
    }

    pub fn cell_x(&self, c: usize) -> f64 {
        (c as f64 + 0.5) / self.n_cells as f64
    }

    pub fn node_xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|j| self.node_x(j))
    }

    pub fn cell_xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|c| self.cell_x(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let g = Grid::new(8).unwrap();
        assert_eq!(g.n_nodes(), 9);
        assert_eq!(g.node_x(0), 0.0);
        assert_eq!(g.node_x(8), 1.0);
        assert_eq!(g.cell_x(0), 1.0 / 16.0);
        assert_eq!(g.dx(), 0.125);
        assert!(Grid::new(3).is_err());
    }
}
