//! Backward solver for `Y_t = xi + int_t^T g(s, Y_s, Z_s) ds - int_t^T Z_s dB_s`.
//!
//! The scheme walks the grid backwards. At step `i` it projects `Y_{i+1}`
//! onto polynomial features of the Brownian state `B_{t_i}` to get the
//! conditional mean, estimates `Z_i` componentwise by projecting the
//! *residual* of that fit times `dB_i / dt_i` (centering keeps constants
//! exactly constant: a constant terminal has zero residual, hence `Z = 0`
//! bitwise, and a driver vanishing at `z = 0` then cannot move `Y`), and
//! resolves the implicit `Y_i = E[Y_{i+1} | B_{t_i}] + g(t_i, Y_i, Z_i) dt_i`
//! with a fixed number of Picard sweeps.

use std::sync::Arc;

use rayon::prelude::*;

use crate::brownian::BrownianBatch;
use crate::error::{Error, Result};
use crate::generator::GeneratorSpec;
use crate::grid::TimeGrid;
use crate::regression::{RegressionBasis, StepRegression};

pub type TerminalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Terminal condition of the backward equation.
pub enum TerminalKind {
    /// `xi = phi(B_T)`; the function must be pure.
    Markovian(TerminalFn),
    /// One terminal value per path. The caller is responsible for the values
    /// being a function of the terminal state when they feed a regression
    /// solve; `is_g_martingale` screens for this before re-solving.
    ExplicitPaths(Vec<f64>),
}

pub struct TerminalSpec {
    pub kind: TerminalKind,
    /// Declared, not verified: the terminal lives in L^2.
    pub square_integrable: bool,
}

impl TerminalSpec {
    pub fn markovian(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind: TerminalKind::Markovian(Arc::new(f)),
            square_integrable: true,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::markovian(move |_| c)
    }

    /// `xi = B_T` (first coordinate).
    pub fn terminal_brownian() -> Self {
        Self::markovian(|b| b[0])
    }

    /// `xi = B_T + shift` (first coordinate).
    pub fn terminal_brownian_shifted(shift: f64) -> Self {
        Self::markovian(move |b| b[0] + shift)
    }

    pub fn explicit(values: Vec<f64>) -> Self {
        Self {
            kind: TerminalKind::ExplicitPaths(values),
            square_integrable: true,
        }
    }

    pub fn declare_non_square_integrable(mut self) -> Self {
        self.square_integrable = false;
        self
    }
}

/// Per-step solver diagnostics.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub step: usize,
    /// RMS of the Y-projection residual at this step.
    pub regression_residual: f64,
    pub picard_sweeps: usize,
    /// Max-abs change of Y per Picard sweep, in sweep order.
    pub picard_update_norms: Vec<f64>,
    pub kept_features: usize,
    pub rank: usize,
}

/// Discrete solution pair on a grid: `Y` per path per node, `Z` per path
/// per step per dimension.
#[derive(Debug, Clone)]
pub struct BsdeSolution {
    grid: TimeGrid,
    dims: usize,
    paths: usize,
    /// Row-major `[path][node]`.
    y: Vec<f64>,
    /// Row-major `[path][step][dim]`.
    z: Vec<f64>,
    diagnostics: Vec<StepDiagnostics>,
}

impl BsdeSolution {
    /// Wrap externally computed arrays (analytic families, scaling studies).
    pub fn from_arrays(
        grid: TimeGrid,
        dims: usize,
        paths: usize,
        y: Vec<f64>,
        z: Vec<f64>,
    ) -> Result<Self> {
        let nodes = grid.node_count();
        let steps = grid.steps();
        if y.len() != paths * nodes {
            return Err(Error::invalid(format!(
                "y has length {} but paths*(N+1) = {}",
                y.len(),
                paths * nodes
            )));
        }
        if z.len() != paths * steps * dims {
            return Err(Error::invalid(format!(
                "z has length {} but paths*N*dims = {}",
                z.len(),
                paths * steps * dims
            )));
        }
        if !y.iter().all(|v| v.is_finite()) || !z.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("solution entries must be finite"));
        }
        Ok(Self {
            grid,
            dims,
            paths,
            y,
            z,
            diagnostics: Vec::new(),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    #[inline]
    pub fn y(&self, path: usize, node: usize) -> f64 {
        self.y[path * self.grid.node_count() + node]
    }

    #[inline]
    pub fn z(&self, path: usize, step: usize, dim: usize) -> f64 {
        self.z[(path * self.grid.steps() + step) * self.dims + dim]
    }

    pub fn y_path(&self, path: usize) -> &[f64] {
        let n = self.grid.node_count();
        &self.y[path * n..(path + 1) * n]
    }

    pub fn z_path(&self, path: usize) -> &[f64] {
        let n = self.grid.steps() * self.dims;
        &self.z[path * n..(path + 1) * n]
    }

    pub fn y_column(&self, node: usize) -> Vec<f64> {
        let n = self.grid.node_count();
        (0..self.paths).map(|p| self.y[p * n + node]).collect()
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    /// `(Y, Z) -> (lambda Y, lambda Z)` on the same paths.
    pub fn scale(&self, lambda: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            dims: self.dims,
            paths: self.paths,
            y: self.y.iter().map(|v| lambda * v).collect(),
            z: self.z.iter().map(|v| lambda * v).collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Solve over the whole grid.
pub fn solve_backward(
    batch: &BrownianBatch,
    g: &GeneratorSpec,
    terminal: &TerminalSpec,
    basis: RegressionBasis,
    picard_iters: usize,
) -> Result<BsdeSolution> {
    solve_window(batch, g, terminal, basis, picard_iters, 0, batch.grid().steps())
}

/// Solve on the sub-interval `[t_{start_node}, t_{end_node}]`; `Y` and `Z`
/// outside the window are left at zero. `is_g_martingale` drives this with
/// explicit terminal values.
pub fn solve_window(
    batch: &BrownianBatch,
    g: &GeneratorSpec,
    terminal: &TerminalSpec,
    basis: RegressionBasis,
    picard_iters: usize,
    start_node: usize,
    end_node: usize,
) -> Result<BsdeSolution> {
    let grid = batch.grid();
    let n = grid.steps();
    let d = batch.dims();
    let m = batch.paths();

    if picard_iters == 0 {
        return Err(Error::invalid("picard_iters must be at least 1"));
    }
    if start_node >= end_node || end_node > n {
        return Err(Error::invalid(format!(
            "window [{start_node}, {end_node}] invalid for a grid with {n} steps"
        )));
    }
    if !(g.claims_lipschitz() && g.claims_zero_at_zero()) {
        return Err(Error::contract(format!(
            "solver requires a generalized-Lipschitz driver vanishing at z = 0; \
             '{}' declares lipschitz={} zero_at_zero={}",
            g.name(),
            g.claims_lipschitz(),
            g.claims_zero_at_zero()
        )));
    }
    if !terminal.square_integrable {
        return Err(Error::contract(
            "terminal condition is declared non-square-integrable".to_string(),
        ));
    }
    let features = basis.feature_count(d);
    if features * 10 >= m {
        return Err(Error::invalid(format!(
            "basis has {features} functions for {m} paths; need fewer than paths/10"
        )));
    }

    // Brownian levels per path per node, used both for the terminal and as
    // the regression state.
    let values = batch.values_flat();
    let state_at = |node: usize| -> Vec<f64> {
        (0..m)
            .into_par_iter()
            .flat_map_iter(|p| {
                let start = (p * (n + 1) + node) * d;
                values[start..start + d].iter().copied().collect::<Vec<_>>()
            })
            .collect()
    };

    let terminal_values: Vec<f64> = match &terminal.kind {
        TerminalKind::Markovian(phi) => {
            let state = state_at(end_node);
            (0..m)
                .into_par_iter()
                .map(|p| phi(&state[p * d..(p + 1) * d]))
                .collect()
        }
        TerminalKind::ExplicitPaths(vals) => {
            if vals.len() != m {
                return Err(Error::invalid(format!(
                    "explicit terminal has {} values for {m} paths",
                    vals.len()
                )));
            }
            vals.clone()
        }
    };
    if !terminal_values.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("terminal values must be finite"));
    }

    let node_count = n + 1;
    let mut y = vec![0.0_f64; m * node_count];
    let mut z = vec![0.0_f64; m * n * d];

    y.par_chunks_mut(node_count)
        .enumerate()
        .for_each(|(p, row)| row[end_node] = terminal_values[p]);

    let mut y_next = terminal_values;
    let mut diagnostics = Vec::with_capacity(end_node - start_node);

    for i in (start_node..end_node).rev() {
        let t_i = grid.node(i);
        let dt = grid.dt(i);
        let state = state_at(i);
        let reg = StepRegression::fit(&state, m, d, basis, i)?;

        let conditional_mean = reg.project(&y_next, i)?;
        let residual: Vec<f64> = y_next
            .par_iter()
            .zip(conditional_mean.par_iter())
            .map(|(ynext, mean)| ynext - mean)
            .collect();
        let regression_residual = crate::reduce::det_rms(&residual);

        // Componentwise martingale-increment estimate of Z on the centered
        // response, then evaluated through the same basis.
        let mut z_fits: Vec<Vec<f64>> = Vec::with_capacity(d);
        for j in 0..d {
            let response: Vec<f64> = (0..m)
                .into_par_iter()
                .map(|p| residual[p] * batch.increment(p, i, j) / dt)
                .collect();
            z_fits.push(reg.project(&response, i)?);
        }
        z.par_chunks_mut(n * d).enumerate().for_each(|(p, row)| {
            for (j, fit) in z_fits.iter().enumerate() {
                row[i * d + j] = fit[p];
            }
        });

        // Picard sweeps for the implicit Y.
        let mut y_cur = conditional_mean.clone();
        let mut update_norms = Vec::with_capacity(picard_iters);
        let mut sweeps = 0;
        for _ in 0..picard_iters {
            let y_new: Vec<f64> = (0..m)
                .into_par_iter()
                .map(|p| {
                    let zrow = &z[(p * n + i) * d..(p * n + i) * d + d];
                    conditional_mean[p] + dt * g.eval(t_i, y_cur[p], zrow)
                })
                .collect();
            let norm = y_new
                .par_iter()
                .zip(y_cur.par_iter())
                .map(|(a, b)| (a - b).abs())
                .reduce(|| 0.0, f64::max);
            update_norms.push(norm);
            sweeps += 1;
            y_cur = y_new;
            if norm == 0.0 {
                break;
            }
        }

        if !y_cur.iter().all(|v| v.is_finite()) {
            return Err(Error::numerical(i, "non-finite Y produced".to_string()));
        }

        y.par_chunks_mut(node_count)
            .enumerate()
            .for_each(|(p, row)| row[i] = y_cur[p]);

        diagnostics.push(StepDiagnostics {
            step: i,
            regression_residual,
            picard_sweeps: sweeps,
            picard_update_norms: update_norms,
            kept_features: reg.kept_features,
            rank: reg.rank,
        });

        y_next = y_cur;
    }

    diagnostics.reverse();
    Ok(BsdeSolution {
        grid: grid.clone(),
        dims: d,
        paths: m,
        y,
        z,
        diagnostics,
    })
}

/// Closed-form solution families used as solver oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticFamily {
    /// `Y = c`, `Z = 0` (driver irrelevant as long as it vanishes at z = 0).
    Constant(f64),
    /// `Y_t = B_t`, `Z = 1`: the zero-driver solution with terminal `B_T`.
    ClassicalMartingale,
    /// `Y_t = B_t + mu (T - t)`, `Z = 1`: driver `mu z` with terminal `B_T`.
    LinearZDrift(f64),
    /// `Y_t = n B_t - n^2 t`, `Z = n`: the quadratic-driver family (d = 1).
    Quadratic(f64),
}

pub fn analytic_solution(family: AnalyticFamily, batch: &BrownianBatch) -> Result<BsdeSolution> {
    let grid = batch.grid().clone();
    let n = grid.steps();
    let d = batch.dims();
    let m = batch.paths();
    let horizon = grid.horizon();

    match family {
        AnalyticFamily::Constant(c) if !c.is_finite() => {
            return Err(Error::invalid("constant family needs a finite value"));
        }
        AnalyticFamily::LinearZDrift(mu) if !mu.is_finite() => {
            return Err(Error::invalid("linear drift family needs a finite coefficient"));
        }
        AnalyticFamily::Quadratic(nn) => {
            if !nn.is_finite() || nn < 0.0 {
                return Err(Error::invalid("quadratic family needs a finite n >= 0"));
            }
            if d != 1 {
                return Err(Error::invalid(format!(
                    "quadratic family is one-dimensional; batch has dims = {d}"
                )));
            }
        }
        _ => {}
    }

    let values = batch.values_flat();
    let node_count = n + 1;
    let mut y = vec![0.0_f64; m * node_count];
    let mut z = vec![0.0_f64; m * n * d];

    y.par_chunks_mut(node_count).enumerate().for_each(|(p, row)| {
        for (i, slot) in row.iter_mut().enumerate() {
            let b1 = values[(p * node_count + i) * d];
            let t = grid.node(i);
            *slot = match family {
                AnalyticFamily::Constant(c) => c,
                AnalyticFamily::ClassicalMartingale => b1,
                AnalyticFamily::LinearZDrift(mu) => b1 + mu * (horizon - t),
                AnalyticFamily::Quadratic(nn) => nn * b1 - nn * nn * t,
            };
        }
    });

    let z_first = match family {
        AnalyticFamily::Constant(_) => 0.0,
        AnalyticFamily::ClassicalMartingale | AnalyticFamily::LinearZDrift(_) => 1.0,
        AnalyticFamily::Quadratic(nn) => nn,
    };
    z.par_chunks_mut(n * d).enumerate().for_each(|(_, row)| {
        for i in 0..n {
            row[i * d] = z_first;
        }
    });

    Ok(BsdeSolution {
        grid,
        dims: d,
        paths: m,
        y,
        z,
        diagnostics: Vec::new(),
    })
}

/// Max over steps of the one-step defect
/// `|Y_{i+1} - Y_i + g(t_i, Y_i, Z_i) dt_i - Z_i . dB_i|`, per path.
/// Zero (to rounding) for analytic families under their own driver.
pub fn solution_residual(
    sol: &BsdeSolution,
    batch: &BrownianBatch,
    g: &GeneratorSpec,
) -> Result<Vec<f64>> {
    if sol.grid.nodes() != batch.grid().nodes() {
        return Err(Error::invalid("solution and batch grids differ"));
    }
    if sol.paths != batch.paths() || sol.dims != batch.dims() {
        return Err(Error::invalid("solution and batch shapes differ"));
    }
    let n = sol.grid.steps();
    let d = sol.dims;
    let residuals: Vec<f64> = (0..sol.paths)
        .into_par_iter()
        .map(|p| {
            let ypath = sol.y_path(p);
            let zpath = sol.z_path(p);
            let mut worst = 0.0_f64;
            for i in 0..n {
                let zrow = &zpath[i * d..(i + 1) * d];
                let inc = batch.increment_row(p, i);
                let z_db: f64 = zrow.iter().zip(inc).map(|(zj, db)| zj * db).sum();
                let defect = ypath[i + 1] - ypath[i]
                    + g.eval(sol.grid.node(i), ypath[i], zrow) * sol.grid.dt(i)
                    - z_db;
                worst = worst.max(defect.abs());
            }
            worst
        })
        .collect();
    Ok(residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::SeedSpec;
    use crate::reduce::det_rms;

    fn batch(paths: usize, steps: usize, seed: u64) -> BrownianBatch {
        BrownianBatch::simulate(
            TimeGrid::uniform(1.0, steps).unwrap(),
            1,
            paths,
            SeedSpec::new(seed),
        )
        .unwrap()
    }

    #[test]
    fn constant_terminal_is_reproduced_exactly() {
        let batch = batch(2000, 20, 3);
        for c in [-1.0, 0.0, 2.5] {
            let sol = solve_backward(
                &batch,
                &GeneratorSpec::linear_z(0.5),
                &TerminalSpec::constant(c),
                RegressionBasis::polynomial(3),
                3,
            )
            .unwrap();
            for p in (0..2000).step_by(157) {
                for i in 0..=20 {
                    assert!(
                        (sol.y(p, i) - c).abs() < 1e-12,
                        "path {p} node {i}: {} vs {c}",
                        sol.y(p, i)
                    );
                }
                for i in 0..20 {
                    assert!(sol.z(p, i, 0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn terminal_node_matches_xi_bitwise() {
        let batch = batch(500, 10, 9);
        let sol = solve_backward(
            &batch,
            &GeneratorSpec::zero(),
            &TerminalSpec::terminal_brownian(),
            RegressionBasis::polynomial(2),
            1,
        )
        .unwrap();
        for p in 0..500 {
            let values = batch.path_values(p).unwrap();
            assert_eq!(sol.y(p, 10).to_bits(), values[10].to_bits());
        }
    }

    #[test]
    fn zero_driver_recovers_brownian_levels() {
        let batch = batch(50_000, 25, 21);
        let sol = solve_backward(
            &batch,
            &GeneratorSpec::zero(),
            &TerminalSpec::terminal_brownian(),
            RegressionBasis::polynomial(3),
            3,
        )
        .unwrap();
        let values = batch.values_flat();
        let mut worst = 0.0_f64;
        for i in 0..=25 {
            let devs: Vec<f64> = (0..50_000)
                .map(|p| sol.y(p, i) - values[p * 26 + i])
                .collect();
            worst = worst.max(det_rms(&devs));
        }
        assert!(worst < 0.02, "max-node RMSE {worst}");
    }

    #[test]
    fn linear_driver_matches_closed_form() {
        let batch = batch(50_000, 25, 22);
        let mu = 0.5;
        let sol = solve_backward(
            &batch,
            &GeneratorSpec::linear_z(mu),
            &TerminalSpec::terminal_brownian(),
            RegressionBasis::polynomial(3),
            3,
        )
        .unwrap();
        let values = batch.values_flat();
        let grid = batch.grid();
        let mut worst = 0.0_f64;
        for i in 0..=25 {
            let t = grid.node(i);
            let devs: Vec<f64> = (0..50_000)
                .map(|p| sol.y(p, i) - (values[p * 26 + i] + mu * (1.0 - t)))
                .collect();
            worst = worst.max(det_rms(&devs));
        }
        assert!(worst < 0.02, "max-node RMSE {worst}");
    }

    #[test]
    fn quadratic_driver_is_rejected() {
        let batch = batch(200, 4, 1);
        let err = solve_backward(
            &batch,
            &GeneratorSpec::quadratic(),
            &TerminalSpec::constant(1.0),
            RegressionBasis::polynomial(2),
            3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
    }

    #[test]
    fn oversized_basis_is_rejected() {
        let batch = batch(30, 4, 1);
        let err = solve_backward(
            &batch,
            &GeneratorSpec::zero(),
            &TerminalSpec::constant(1.0),
            RegressionBasis::polynomial(3),
            3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn picard_updates_contract_for_y_dependent_driver() {
        // g = a sin(y) tanh(z); Lipschitz with u = v = a, vanishing at z = 0.
        let a = 0.8;
        let g = GeneratorSpec::custom(
            "sin_tanh",
            Arc::new(move |_, y: f64, z: &[f64]| a * y.sin() * z[0].tanh()),
            Some(Arc::new(move |_| a)),
            Some(Arc::new(move |_| a)),
            true,
            true,
        );
        let batch = batch(5000, 10, 77);
        let sol = solve_backward(
            &batch,
            &g,
            &TerminalSpec::terminal_brownian(),
            RegressionBasis::polynomial(3),
            4,
        )
        .unwrap();
        for diag in sol.diagnostics() {
            let norms = &diag.picard_update_norms;
            assert!(norms[0] > 0.0);
            for w in norms.windows(2) {
                assert!(
                    w[1] <= w[0] * (a * batch.grid().dt(diag.step)).max(1e-12) * 1.01 || w[1] == 0.0,
                    "step {}: updates {:?} do not contract",
                    diag.step,
                    norms
                );
            }
        }
    }

    #[test]
    fn analytic_families_evaluate_closed_forms() {
        let batch = batch(100, 8, 5);
        let values = batch.values_flat();

        let con = analytic_solution(AnalyticFamily::Constant(2.0), &batch).unwrap();
        assert_eq!(con.y(7, 3), 2.0);
        assert_eq!(con.z(7, 3, 0), 0.0);

        let classical = analytic_solution(AnalyticFamily::ClassicalMartingale, &batch).unwrap();
        assert_eq!(classical.y(4, 5), values[4 * 9 + 5]);
        assert_eq!(classical.z(4, 5, 0), 1.0);

        let lin = analytic_solution(AnalyticFamily::LinearZDrift(0.5), &batch).unwrap();
        assert!((lin.y(0, 0) - 0.5).abs() < 1e-15);

        let quad = analytic_solution(AnalyticFamily::Quadratic(3.0), &batch).unwrap();
        let b_t = values[2 * 9 + 8];
        assert!((quad.y(2, 8) - (3.0 * b_t - 9.0)).abs() < 1e-12);
        assert_eq!(quad.z(2, 4, 0), 3.0);

        let zero_n = analytic_solution(AnalyticFamily::Quadratic(0.0), &batch).unwrap();
        assert_eq!(zero_n.y(1, 4), 0.0);
        assert_eq!(zero_n.z(1, 3, 0), 0.0);
    }

    #[test]
    fn residual_vanishes_for_analytic_families() {
        let batch = batch(300, 16, 13);

        let con = analytic_solution(AnalyticFamily::Constant(1.5), &batch).unwrap();
        let res = solution_residual(&con, &batch, &GeneratorSpec::zero()).unwrap();
        assert!(res.iter().all(|r| *r == 0.0));

        let lin = analytic_solution(AnalyticFamily::LinearZDrift(0.5), &batch).unwrap();
        let res = solution_residual(&lin, &batch, &GeneratorSpec::linear_z(0.5)).unwrap();
        assert!(res.iter().all(|r| *r < 1e-12), "max {:?}", res.iter().cloned().fold(0.0, f64::max));

        let quad = analytic_solution(AnalyticFamily::Quadratic(3.0), &batch).unwrap();
        let res = solution_residual(&quad, &batch, &GeneratorSpec::quadratic()).unwrap();
        assert!(
            res.iter().all(|r| *r < 1e-10),
            "max {:?}",
            res.iter().cloned().fold(0.0, f64::max)
        );
    }

    #[test]
    fn solver_residual_is_noise_sized_for_linear_driver() {
        let batch = batch(20_000, 10, 301);
        let sol = solve_backward(
            &batch,
            &GeneratorSpec::linear_z(0.5),
            &TerminalSpec::terminal_brownian(),
            RegressionBasis::polynomial(3),
            3,
        )
        .unwrap();
        let res = solution_residual(&sol, &batch, &GeneratorSpec::linear_z(0.5)).unwrap();
        let max_res = res.iter().cloned().fold(0.0, f64::max);
        let max_reg = sol
            .diagnostics()
            .iter()
            .map(|s| s.regression_residual)
            .fold(0.0, f64::max);
        assert!(
            max_res <= 10.0 * max_reg,
            "pathwise defect {max_res} vs regression residual {max_reg}"
        );
    }

    #[test]
    fn residual_shape_mismatch_rejected() {
        let b1 = batch(100, 8, 5);
        let b2 = batch(100, 9, 5);
        let sol = analytic_solution(AnalyticFamily::Constant(0.0), &b1).unwrap();
        assert!(matches!(
            solution_residual(&sol, &b2, &GeneratorSpec::zero()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn terminal_comparison_is_monotone_statistically() {
        let batch = batch(20_000, 10, 55);
        let basis = RegressionBasis::polynomial(3);
        let hi = solve_backward(
            &batch,
            &GeneratorSpec::linear_z(0.5),
            &TerminalSpec::terminal_brownian_shifted(0.1),
            basis,
            3,
        )
        .unwrap();
        let lo = solve_backward(
            &batch,
            &GeneratorSpec::linear_z(0.5),
            &TerminalSpec::terminal_brownian(),
            basis,
            3,
        )
        .unwrap();
        let (m_hi, se_hi) = crate::reduce::det_mean_se(&hi.y_column(0));
        let (m_lo, se_lo) = crate::reduce::det_mean_se(&lo.y_column(0));
        let combined = (se_hi * se_hi + se_lo * se_lo).sqrt();
        assert!(m_hi >= m_lo - 3.0 * combined);
    }
}
