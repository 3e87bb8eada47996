//! Nonlinear (g-)expectation built on the backward solver: the operator
//! value at time zero, conditional values at grid nodes, and an
//! evidence-based martingale test for supplied processes.

use crate::brownian::BrownianBatch;
use crate::error::{Error, Result};
use crate::generator::GeneratorSpec;
use crate::reduce::{det_mean_se, det_rms};
use crate::regression::{RegressionBasis, StepRegression};
use crate::solver::{solve_backward, solve_window, BsdeSolution, TerminalSpec};

/// Value of the expectation operator: `Y` at time zero.
///
/// The time-zero state is degenerate, so the node-0 projection is a plain
/// sample mean and `per_path_y0` holds one repeated value. The standard
/// error comes from the pathwise accumulation `xi + sum_i g(t_i, Y_i, Z_i)
/// dt_i`, whose sample mean the intercept-preserving projections reproduce
/// exactly.
#[derive(Debug, Clone)]
pub struct GExpectationResult {
    pub value: f64,
    pub per_path_y0: Vec<f64>,
    pub std_error: f64,
}

/// Per-path accumulation whose sample mean equals `Y_0`.
fn pathwise_estimator(sol: &BsdeSolution, g: &GeneratorSpec) -> Vec<f64> {
    let grid = sol.grid();
    let n = grid.steps();
    let d = sol.dims();
    (0..sol.paths())
        .map(|p| {
            let ypath = sol.y_path(p);
            let zpath = sol.z_path(p);
            let mut acc = ypath[n];
            for i in 0..n {
                acc += grid.dt(i) * g.eval(grid.node(i), ypath[i], &zpath[i * d..(i + 1) * d]);
            }
            acc
        })
        .collect()
}

pub fn g_expect(
    batch: &BrownianBatch,
    g: &GeneratorSpec,
    terminal: &TerminalSpec,
    basis: RegressionBasis,
    picard_iters: usize,
) -> Result<GExpectationResult> {
    let sol = solve_backward(batch, g, terminal, basis, picard_iters)?;
    g_expect_from_solution(&sol, g)
}

/// Expectation result from an already computed solution.
pub fn g_expect_from_solution(sol: &BsdeSolution, g: &GeneratorSpec) -> Result<GExpectationResult> {
    let per_path_y0 = sol.y_column(0);
    let value = per_path_y0[0];
    let psi = pathwise_estimator(sol, g);
    let (_, se) = det_mean_se(&psi);
    Ok(GExpectationResult {
        value,
        per_path_y0,
        std_error: se,
    })
}

/// Conditional expectation at a grid node: `Y` per path at that node.
pub fn conditional_g_expect(
    batch: &BrownianBatch,
    g: &GeneratorSpec,
    terminal: &TerminalSpec,
    basis: RegressionBasis,
    picard_iters: usize,
    node: usize,
) -> Result<Vec<f64>> {
    if node > batch.grid().steps() {
        return Err(Error::invalid(format!(
            "node {node} out of range for a grid with {} steps",
            batch.grid().steps()
        )));
    }
    let sol = solve_backward(batch, g, terminal, basis, picard_iters)?;
    Ok(sol.y_column(node))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MartingaleVerdict {
    Martingale,
    Supermartingale,
    Submartingale,
    Inconclusive,
    /// The process at the later node is not (numerically) a function of the
    /// Brownian state there, so the regression re-solve would be meaningless.
    NotCheckable,
}

#[derive(Debug, Clone)]
pub struct MartingaleReport {
    pub verdict: MartingaleVerdict,
    /// RMSE between the re-solved value at the earlier node and the process.
    pub rmse: f64,
    /// Mean of (re-solved - process) at the earlier node.
    pub mean_deviation: f64,
    pub deviation_std_error: f64,
    /// Relative projection residual of the process at the later node.
    pub screen_residual: f64,
    pub tolerance: f64,
}

/// Relative projection residual above which the process is declared not
/// checkable by a state regression.
const SCREEN_TOLERANCE: f64 = 0.05;

/// Evidence-based martingale test: re-solve the equation on
/// `[t_s, t_t]` with the process at `t_t` as explicit terminal and compare
/// the recovered values at `t_s` with the process there.
///
/// The verdict is statistical evidence, never a proof: `martingale` when the
/// RMSE stays below `tol`, `super`/`sub` when every sampled deviation clears
/// `tol` with one sign, `inconclusive` otherwise.
#[allow(clippy::too_many_arguments)]
pub fn is_g_martingale(
    batch: &BrownianBatch,
    g: &GeneratorSpec,
    process: &[f64],
    s_node: usize,
    t_node: usize,
    tol: f64,
    basis: RegressionBasis,
    picard_iters: usize,
) -> Result<MartingaleReport> {
    let grid = batch.grid();
    let n = grid.steps();
    let m = batch.paths();
    let d = batch.dims();
    let node_count = n + 1;
    if s_node >= t_node || t_node > n {
        return Err(Error::invalid(format!(
            "need s < t <= {n}, got s = {s_node}, t = {t_node}"
        )));
    }
    if process.len() != m * node_count {
        return Err(Error::invalid(format!(
            "process has {} entries, expected paths * (N + 1) = {}",
            process.len(),
            m * node_count
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tolerance must be positive and finite"));
    }
    if !process.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("process values must be finite"));
    }

    let at_t: Vec<f64> = (0..m).map(|p| process[p * node_count + t_node]).collect();
    let at_s: Vec<f64> = (0..m).map(|p| process[p * node_count + s_node]).collect();

    // Projection-residual screen at the later node.
    let values = batch.values_flat();
    let state: Vec<f64> = (0..m)
        .flat_map(|p| {
            let start = (p * node_count + t_node) * d;
            values[start..start + d].to_vec()
        })
        .collect();
    let reg = StepRegression::fit(&state, m, d, basis, t_node)?;
    let fitted = reg.project(&at_t, t_node)?;
    let resid: Vec<f64> = at_t.iter().zip(&fitted).map(|(a, f)| a - f).collect();
    let (_, var) = crate::reduce::det_mean_var(&at_t);
    let scale = var.sqrt();
    let screen_residual = det_rms(&resid) / (scale + 1e-12);
    if screen_residual > SCREEN_TOLERANCE {
        return Ok(MartingaleReport {
            verdict: MartingaleVerdict::NotCheckable,
            rmse: f64::INFINITY,
            mean_deviation: 0.0,
            deviation_std_error: 0.0,
            screen_residual,
            tolerance: tol,
        });
    }

    let sub = solve_window(
        batch,
        g,
        &TerminalSpec::explicit(at_t),
        basis,
        picard_iters,
        s_node,
        t_node,
    )?;
    let recovered = sub.y_column(s_node);
    let deviations: Vec<f64> = recovered.iter().zip(&at_s).map(|(r, s)| r - s).collect();
    let rmse = det_rms(&deviations);
    let (mean_dev, se_dev) = det_mean_se(&deviations);

    let verdict = if rmse <= tol {
        MartingaleVerdict::Martingale
    } else if deviations.iter().all(|dv| *dv <= -tol) {
        MartingaleVerdict::Supermartingale
    } else if deviations.iter().all(|dv| *dv >= tol) {
        MartingaleVerdict::Submartingale
    } else {
        MartingaleVerdict::Inconclusive
    };

    Ok(MartingaleReport {
        verdict,
        rmse,
        mean_deviation: mean_dev,
        deviation_std_error: se_dev,
        screen_residual,
        tolerance: tol,
    })
}
