//! Least-squares projections on polynomial features of the conditioning
//! state, the workhorse behind every conditional expectation estimate.
//!
//! Features are standardized column by column before the solve; columns
//! with zero sample spread (the constant column aside) are dropped, which
//! is what makes the time-zero node — where the state is identically
//! zero — degrade gracefully to a plain sample mean.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::reduce::det_mean_var;

/// Polynomial basis: monomials of total degree `<= degree` in the `d`
/// coordinates of the conditioning state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegressionBasis {
    degree: usize,
}

impl RegressionBasis {
    pub fn polynomial(degree: usize) -> Self {
        Self { degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions in dimension `dims`: C(dims + degree, degree).
    pub fn feature_count(&self, dims: usize) -> usize {
        let mut count = 1_usize;
        // C(d + k, k) computed incrementally to stay in usize range.
        for i in 1..=self.degree {
            count = count * (dims + i) / i;
        }
        count
    }

    pub fn rule(&self, dims: usize) -> String {
        format!(
            "monomials of total degree <= {} in {} state coordinate(s)",
            self.degree, dims
        )
    }

    /// Exponent tuples in graded lexicographic order, constant first.
    pub fn exponents(&self, dims: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::with_capacity(self.feature_count(dims));
        for total in 0..=self.degree as u32 {
            let mut current = vec![0_u32; dims];
            fill_exponents(&mut out, &mut current, 0, total);
        }
        out
    }
}

fn fill_exponents(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_exponents(out, current, pos + 1, remaining - e);
        current[pos] = 0;
    }
}

/// Relative singular-value cutoff for the least-squares solve.
const SV_RELATIVE_EPS: f64 = 1e-10;
/// Columns whose sample standard deviation falls below this (relative)
/// threshold carry no usable signal and are dropped.
const DEGENERATE_STD: f64 = 1e-14;

/// A fitted design for one time node: standardized kept columns plus their
/// SVD, reused across the responses projected at that node.
pub(crate) struct StepRegression {
    design: DMatrix<f64>,
    svd: nalgebra::linalg::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    sv_eps: f64,
    pub rank: usize,
    pub kept_features: usize,
}

impl StepRegression {
    /// Build from per-path states (`paths x dims`, row-major).
    pub fn fit(
        states: &[f64],
        paths: usize,
        dims: usize,
        basis: RegressionBasis,
        step: usize,
    ) -> Result<Self> {
        assert_eq!(states.len(), paths * dims);
        let exponents = basis.exponents(dims);
        let k = exponents.len();

        // Raw features, column-major so columns can be standardized in place.
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k);
        for expo in &exponents {
            let mut col = Vec::with_capacity(paths);
            for p in 0..paths {
                let state = &states[p * dims..(p + 1) * dims];
                let mut value = 1.0_f64;
                for (j, &e) in expo.iter().enumerate() {
                    for _ in 0..e {
                        value *= state[j];
                    }
                }
                col.push(value);
            }
            columns.push(col);
        }

        // Keep the constant column as-is; standardize the rest, dropping
        // degenerate ones.
        let mut kept: Vec<Vec<f64>> = vec![columns[0].clone()];
        for col in columns.into_iter().skip(1) {
            let (mean, var) = det_mean_var(&col);
            let std = var.sqrt();
            if !std.is_finite() || std <= DEGENERATE_STD * (1.0 + mean.abs()) {
                continue;
            }
            let inv = 1.0 / std;
            kept.push(col.iter().map(|x| (x - mean) * inv).collect());
        }
        let kept_features = kept.len();

        let mut design = DMatrix::<f64>::zeros(paths, kept_features);
        for (j, col) in kept.iter().enumerate() {
            design.column_mut(j).copy_from_slice(col);
        }

        let svd = design.clone().svd(true, true);
        let smax = svd
            .singular_values
            .iter()
            .cloned()
            .fold(0.0_f64, f64::max);
        let sv_eps = smax * SV_RELATIVE_EPS;
        let rank = svd.singular_values.iter().filter(|&&s| s > sv_eps).count();
        if rank < kept_features {
            return Err(Error::numerical(
                step,
                format!("rank-deficient regression design: rank {rank} of {kept_features} kept features"),
            ));
        }
        Ok(Self {
            design,
            svd,
            sv_eps,
            rank,
            kept_features,
        })
    }

    /// Least-squares projection of `response` onto the design span; returns
    /// the fitted value per path.
    pub fn project(&self, response: &[f64], step: usize) -> Result<Vec<f64>> {
        let y = DVector::from_column_slice(response);
        let beta = self
            .svd
            .solve(&y, self.sv_eps)
            .map_err(|e| Error::numerical(step, format!("least-squares solve failed: {e}")))?;
        let fitted = &self.design * beta;
        Ok(fitted.data.into())
    }
}
