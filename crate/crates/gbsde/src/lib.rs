//! Monte Carlo laboratory for backward stochastic differential equations:
//! reproducible Brownian path batches, driver specifications with envelope
//! checks, a least-squares backward solver, nonlinear (g-)expectation
//! evaluation, pathwise moment statistics with two-sided ratio estimates,
//! and the quadratic-driver family on which those ratios blow up.

pub mod brownian;
pub mod config;
pub mod counterexample;
pub mod error;
pub mod generator;
pub mod gexp;
pub mod grid;
pub mod reduce;
pub mod regression;
pub mod report;
pub mod runner;
pub mod solver;
pub mod stats;
pub mod svg;

pub use brownian::{BrownianBatch, SeedSpec};
pub use error::{Error, Result};
pub use generator::{GeneratorSpec, TimeEnvelope};
pub use grid::TimeGrid;
pub use regression::RegressionBasis;
pub use solver::{analytic_solution, solve_backward, AnalyticFamily, BsdeSolution, TerminalSpec};
