//! Time discretizations of a finite horizon.

use crate::error::{Error, Result};

/// Partition `0 = t_0 < t_1 < ... < t_N = T` of a finite horizon `T`.
///
/// Every process in the crate lives on one of these grids; `N` is the number
/// of steps and the grid stores `N + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// Equally spaced grid with `steps` intervals over `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::invalid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        let mut nodes = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            nodes.push(horizon * i as f64 / steps as f64);
        }
        // The end points are pinned exactly; intermediate nodes may carry
        // the usual rounding of the division.
        nodes[0] = 0.0;
        nodes[steps] = horizon;
        Ok(Self { nodes })
    }

    /// Grid from explicit nodes; the first node must be exactly 0 and the
    /// sequence strictly increasing.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("a grid needs at least two nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::invalid("first grid node must be exactly 0"));
        }
        if !nodes.iter().all(|t| t.is_finite()) {
            return Err(Error::invalid("grid nodes must be finite"));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("grid nodes must be strictly increasing"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Number of steps `N`; the grid has `N + 1` nodes.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Width of step `i`, i.e. `t_{i+1} - t_i`.
    pub fn dt(&self, step: usize) -> f64 {
        self.nodes[step + 1] - self.nodes[step]
    }

    pub fn dts(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_places_expected_nodes() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.steps(), 4);
        assert_eq!(g.horizon(), 1.0);
    }

    #[test]
    fn single_step_grid() {
        let g = TimeGrid::uniform(2.0, 1).unwrap();
        assert_eq!(g.nodes(), &[0.0, 2.0]);
    }

    #[test]
    fn zero_horizon_rejected() {
        assert!(matches!(
            TimeGrid::uniform(0.0, 4),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            TimeGrid::uniform(1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn endpoints_are_exact_even_for_awkward_horizons() {
        let g = TimeGrid::uniform(0.1, 3).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(3), 0.1);
    }

    #[test]
    fn explicit_nodes_validated() {
        assert!(TimeGrid::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::from_nodes(vec![0.1, 0.5]).is_err());
        assert!(TimeGrid::from_nodes(vec![0.0]).is_err());
        let g = TimeGrid::from_nodes(vec![0.0, 0.1, 0.7, 1.0]).unwrap();
        assert_eq!(g.dt(1), 0.7 - 0.1);
    }
}
