//! Pathwise functionals and moment statistics: running supremum, discrete
//! quadratic variation, Monte Carlo moment estimates with normal confidence
//! intervals, the two-sided sup-vs-bracket ratio, and the Lenglart
//! domination bound with constant `(2 - k) / (1 - k)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::reduce::{det_cov, det_mean_se, det_mean_var};
use crate::solver::BsdeSolution;

/// 97.5% standard normal quantile, for 95% two-sided intervals.
const Z95: f64 = 1.959963984540054;

/// Supremum of |Y| over grid nodes and the bracket `sum_i |Z_i|^2 dt_i`,
/// per path. The bracket curve is cumulative and nondecreasing.
#[derive(Debug, Clone)]
pub struct PathFunctionals {
    pub paths: usize,
    pub node_count: usize,
    pub sup_abs: Vec<f64>,
    pub qv_total: Vec<f64>,
    /// Row-major `[path][node]`, starting at 0.
    pub qv_curve: Vec<f64>,
}

pub fn path_functionals(sol: &BsdeSolution) -> PathFunctionals {
    let grid = sol.grid();
    let n = grid.steps();
    let d = sol.dims();
    let m = sol.paths();
    let dts = grid.dts();
    let node_count = n + 1;

    let mut qv_curve = vec![0.0_f64; m * node_count];
    let mut sup_abs = vec![0.0_f64; m];
    let mut qv_total = vec![0.0_f64; m];

    qv_curve
        .par_chunks_mut(node_count)
        .zip(sup_abs.par_iter_mut())
        .zip(qv_total.par_iter_mut())
        .enumerate()
        .for_each(|(p, ((curve, sup), total))| {
            let ypath = sol.y_path(p);
            let zpath = sol.z_path(p);
            let mut acc = 0.0_f64;
            let mut worst = 0.0_f64;
            for i in 0..n {
                worst = worst.max(ypath[i].abs());
                let z2: f64 = zpath[i * d..(i + 1) * d].iter().map(|zj| zj * zj).sum();
                acc += z2 * dts[i];
                curve[i + 1] = acc;
            }
            worst = worst.max(ypath[n].abs());
            *sup = worst;
            *total = acc;
        });

    PathFunctionals {
        paths: m,
        node_count,
        sup_abs,
        qv_total,
        qv_curve,
    }
}

/// Monte Carlo estimate of `E[|X|^p]` with standard error and normal 95% CI.
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub p: f64,
    pub mean: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
}

fn abs_pow(v: f64, p: f64) -> f64 {
    if p == 1.0 {
        v.abs()
    } else if p == 2.0 {
        v * v
    } else {
        v.abs().powf(p)
    }
}

pub fn moment(values: &[f64], p: f64) -> Result<MomentEstimate> {
    if values.is_empty() {
        return Err(Error::invalid("moment of an empty sample"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("exponent must satisfy p >= 1, got {p}")));
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("moment input must be finite"));
    }
    let xs: Vec<f64> = values.par_iter().map(|v| abs_pow(*v, p)).collect();
    let (mean, se) = det_mean_se(&xs);
    Ok(MomentEstimate {
        p,
        mean,
        std_error: se,
        ci95: (mean - Z95 * se, mean + Z95 * se),
    })
}

/// Both orientations of the sup-vs-bracket moment comparison at exponent `p`:
/// `lhs = E[<Y>_T^{p/2}]`, `rhs = E[(sup|Y|)^p]`, with a delta-method CI for
/// the upper ratio `rhs / lhs`.
#[derive(Debug, Clone, Copy)]
pub struct RatioReport {
    pub p: f64,
    pub lhs: MomentEstimate,
    pub rhs: MomentEstimate,
    pub ratio_upper: f64,
    pub ratio_lower: f64,
    pub ratio_upper_ci: (f64, f64),
}

/// Tolerance on `|Y_0|` for the vanishing-at-zero gate.
const START_TOLERANCE: f64 = 1e-9;

pub fn bdg_ratio(sol: &BsdeSolution, p: f64, allow_nonzero_start: bool) -> Result<RatioReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("exponent must satisfy p >= 1, got {p}")));
    }
    if !allow_nonzero_start {
        let worst = (0..sol.paths())
            .map(|pth| sol.y(pth, 0).abs())
            .fold(0.0_f64, f64::max);
        if worst > START_TOLERANCE {
            return Err(Error::contract(format!(
                "solution does not vanish at time zero (max |Y_0| = {worst:.3e}); \
                 set allow_nonzero_start to study such processes"
            )));
        }
    }
    let pf = path_functionals(sol);
    let roots: Vec<f64> = pf.qv_total.par_iter().map(|q| q.sqrt()).collect();
    let lhs = moment(&roots, p)?;
    let rhs = moment(&pf.sup_abs, p)?;

    let tiny = 1e-15 * rhs.mean.max(1.0);
    if lhs.mean <= tiny || rhs.mean <= tiny {
        return Err(Error::DegenerateRatio(format!(
            "moment means too small to form a ratio (lhs {:.3e}, rhs {:.3e})",
            lhs.mean, rhs.mean
        )));
    }

    let ratio_upper = rhs.mean / lhs.mean;
    let ratio_lower = lhs.mean / rhs.mean;

    // Delta method on correlated means: per-path a = sup^p, b = bracket^{p/2}.
    let a: Vec<f64> = pf.sup_abs.par_iter().map(|v| abs_pow(*v, p)).collect();
    let b: Vec<f64> = roots.par_iter().map(|v| abs_pow(*v, p)).collect();
    let m = a.len() as f64;
    let (abar, var_a) = det_mean_var(&a);
    let (bbar, var_b) = det_mean_var(&b);
    let cov = det_cov(&a, &b);
    let var_ratio = (var_a / (bbar * bbar) + abar * abar * var_b / bbar.powi(4)
        - 2.0 * abar * cov / bbar.powi(3))
        / m;
    let se = var_ratio.max(0.0).sqrt();

    Ok(RatioReport {
        p,
        lhs,
        rhs,
        ratio_upper,
        ratio_lower,
        ratio_upper_ci: (ratio_upper - Z95 * se, ratio_upper + Z95 * se),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LenglartVerdict {
    Pass,
    Fail,
    /// The domination screen failed; the bound was not judged.
    NotDominated,
}

/// Outcome of the domination bound
/// `E[(sup X)^k] <= (2 - k)/(1 - k) * E[A_T^k]` within 3 combined standard
/// errors, screened first by `E[X_i] <= E[A_i] + 3 SE` at every node.
#[derive(Debug, Clone)]
pub struct LenglartReport {
    pub k: f64,
    pub constant: f64,
    pub dominated: bool,
    pub lhs_mean: f64,
    pub lhs_std_error: f64,
    pub rhs_mean: f64,
    pub rhs_std_error: f64,
    /// `(constant * rhs - lhs) / combined SE`; positive means slack.
    pub margin_std_errors: f64,
    pub verdict: LenglartVerdict,
}

pub fn lenglart_check(
    x: &[f64],
    a: &[f64],
    paths: usize,
    node_count: usize,
    k: f64,
) -> Result<LenglartReport> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::invalid(format!("k must lie in (0, 1), got {k}")));
    }
    if node_count == 0 || paths == 0 {
        return Err(Error::invalid("need at least one path and one node"));
    }
    if x.len() != paths * node_count || a.len() != paths * node_count {
        return Err(Error::invalid("X and A must both be paths x nodes"));
    }
    if !x.iter().all(|v| v.is_finite() && *v >= 0.0) {
        return Err(Error::invalid("X must be finite and nonnegative"));
    }
    if !a.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("A must be finite"));
    }
    for p in 0..paths {
        let row = &a[p * node_count..(p + 1) * node_count];
        if !row.windows(2).all(|w| w[1] >= w[0]) {
            return Err(Error::invalid(format!("A must be nondecreasing per path (path {p})")));
        }
    }

    let constant = (2.0 - k) / (1.0 - k);

    // Domination screen at every node.
    let mut dominated = true;
    for i in 0..node_count {
        let diffs: Vec<f64> = (0..paths)
            .map(|p| x[p * node_count + i] - a[p * node_count + i])
            .collect();
        let (mean, se) = det_mean_se(&diffs);
        if mean > 3.0 * se {
            dominated = false;
            break;
        }
    }

    let sup_x: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|p| {
            x[p * node_count..(p + 1) * node_count]
                .iter()
                .cloned()
                .fold(0.0_f64, f64::max)
        })
        .collect();
    let lhs_vals: Vec<f64> = sup_x.par_iter().map(|v| v.powf(k)).collect();
    let rhs_vals: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|p| a[p * node_count + node_count - 1].max(0.0).powf(k))
        .collect();
    let (lhs_mean, lhs_se) = det_mean_se(&lhs_vals);
    let (rhs_mean, rhs_se) = det_mean_se(&rhs_vals);
    let combined = (lhs_se * lhs_se + constant * constant * rhs_se * rhs_se).sqrt();
    let slack = constant * rhs_mean - lhs_mean;
    let margin = if combined > 0.0 {
        slack / combined
    } else if slack >= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };

    let verdict = if !dominated {
        LenglartVerdict::NotDominated
    } else if lhs_mean <= constant * rhs_mean + 3.0 * combined {
        LenglartVerdict::Pass
    } else {
        LenglartVerdict::Fail
    };

    Ok(LenglartReport {
        k,
        constant,
        dominated,
        lhs_mean,
        lhs_std_error: lhs_se,
        rhs_mean,
        rhs_std_error: rhs_se,
        margin_std_errors: margin,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::{BrownianBatch, SeedSpec};
    use crate::grid::TimeGrid;
    use crate::solver::{analytic_solution, AnalyticFamily};

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
    fn unit_z_gives_unit_bracket() {
        let batch = batch(100, 10, 1);
        let sol = analytic_solution(AnalyticFamily::ClassicalMartingale, &batch).unwrap();
        let pf = path_functionals(&sol);
        for q in &pf.qv_total {
            assert!((q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_family_bracket_is_n_squared_t() {
        let batch = batch(100, 16, 2);
        let sol = analytic_solution(AnalyticFamily::Quadratic(3.0), &batch).unwrap();
        let pf = path_functionals(&sol);
        for q in &pf.qv_total {
            assert!((q - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_abs_over_explicit_path() {
        let grid = TimeGrid::from_nodes(vec![0.0, 1.0, 2.0]).unwrap();
        let sol = BsdeSolution::from_arrays(
            grid,
            1,
            1,
            vec![0.0, 1.0, -3.0],
            vec![0.5, 0.5],
        )
        .unwrap();
        let pf = path_functionals(&sol);
        assert_eq!(pf.sup_abs[0], 3.0);
        assert!(pf.qv_curve.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn moment_of_constant_vector() {
        let est = moment(&vec![1.5_f64; 400], 2.0).unwrap();
        assert_eq!(est.mean, 2.25);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.ci95, (2.25, 2.25));
    }

    #[test]
    fn moment_of_terminal_brownian_squares_to_t() {
        let batch = batch(50_000, 4, 3);
        let est = moment(&batch.terminal_component(0), 2.0).unwrap();
        assert!(
            (est.mean - 1.0).abs() <= 3.0 * est.std_error,
            "mean {} se {}",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn fractional_exponent_rejected() {
        assert!(matches!(
            moment(&[1.0, 2.0], 0.5),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(moment(&[], 2.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_solution_ratio_is_degenerate() {
        let batch = batch(50, 4, 4);
        let sol = analytic_solution(AnalyticFamily::Quadratic(0.0), &batch).unwrap();
        assert!(matches!(
            bdg_ratio(&sol, 1.0, false),
            Err(Error::DegenerateRatio(_))
        ));
    }

    #[test]
    fn classical_band_for_p_two() {
        let batch = batch(50_000, 50, 5);
        let sol = analytic_solution(AnalyticFamily::ClassicalMartingale, &batch).unwrap();
        let report = bdg_ratio(&sol, 2.0, false).unwrap();
        assert!((report.lhs.mean - 1.0).abs() < 1e-12);
        assert!(report.rhs.mean >= 1.0 && report.rhs.mean <= 4.0);
        assert!(report.ratio_upper >= 1.0 && report.ratio_upper <= 4.0);
        assert!(report.ratio_upper_ci.0 <= report.ratio_upper);
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let batch = batch(5000, 20, 6);
        let sol = analytic_solution(AnalyticFamily::ClassicalMartingale, &batch).unwrap();
        let scaled = sol.scale(3.0);
        for p in [1.0, 2.0, 4.0] {
            let base = bdg_ratio(&sol, p, false).unwrap();
            let lam = bdg_ratio(&scaled, p, false).unwrap();
            assert!(
                (base.ratio_upper - lam.ratio_upper).abs() < 1e-12,
                "p = {p}: {} vs {}",
                base.ratio_upper,
                lam.ratio_upper
            );
        }
    }

    #[test]
    fn nonzero_start_is_gated() {
        let batch = batch(100, 4, 7);
        let sol = analytic_solution(AnalyticFamily::Constant(1.0), &batch).unwrap();
        assert!(matches!(
            bdg_ratio(&sol, 2.0, false),
            Err(Error::ContractViolation(_))
        ));
        // Constant solutions have zero bracket, so even when allowed the
        // ratio is degenerate.
        assert!(matches!(
            bdg_ratio(&sol, 2.0, true),
            Err(Error::DegenerateRatio(_))
        ));
    }

    #[test]
    fn rhs_moment_nondecreasing_in_p_when_sup_exceeds_one() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        // Hand-built: both paths have sup >= 1.
        let sol = BsdeSolution::from_arrays(
            grid,
            1,
            2,
            vec![0.0, 1.5, 2.0, 0.0, -1.2, -2.5],
            vec![1.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        let pf = path_functionals(&sol);
        let mut prev = 0.0;
        for p in [1.0, 2.0, 3.0, 4.0] {
            let est = moment(&pf.sup_abs, p).unwrap();
            assert!(est.mean >= prev);
            prev = est.mean;
        }
    }

    #[test]
    fn lenglart_passes_for_squared_brownian_dominated_by_time() {
        let m = 20_000;
        let batch = batch(m, 50, 8);
        let flat = batch.values_flat();
        let grid = batch.grid().clone();
        let node_count = grid.node_count();
        let x: Vec<f64> = (0..m)
            .flat_map(|p| {
                (0..node_count)
                    .map(|i| {
                        let b = flat[p * node_count + i];
                        b * b
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let a: Vec<f64> = (0..m)
            .flat_map(|_| grid.nodes().to_vec())
            .collect();
        for k in [0.25, 0.5, 0.75] {
            let report = lenglart_check(&x, &a, m, node_count, k).unwrap();
            assert!(report.dominated, "screen failed at k = {k}");
            assert_eq!(report.verdict, LenglartVerdict::Pass);
            assert!(
                report.margin_std_errors >= 3.0,
                "k = {k}: margin {} SEs",
                report.margin_std_errors
            );
        }
    }

    #[test]
    fn lenglart_trivial_and_invalid_cases() {
        let x = vec![0.0; 8];
        let a = vec![0.0, 0.1, 0.2, 0.3, 0.0, 0.1, 0.2, 0.3];
        let report = lenglart_check(&x, &a, 2, 4, 0.5).unwrap();
        assert_eq!(report.verdict, LenglartVerdict::Pass);

        assert!(matches!(
            lenglart_check(&x, &a, 2, 4, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            lenglart_check(&x, &a, 2, 4, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn lenglart_screen_catches_non_dominated_process() {
        // X = (B + 2)^2 has mean ~ 4 + t, far above A = t.
        let m = 5000;
        let batch = batch(m, 10, 9);
        let flat = batch.values_flat();
        let grid = batch.grid().clone();
        let node_count = grid.node_count();
        let x: Vec<f64> = (0..m)
            .flat_map(|p| {
                (0..node_count)
                    .map(|i| {
                        let b = flat[p * node_count + i] + 2.0;
                        b * b
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let a: Vec<f64> = (0..m).flat_map(|_| grid.nodes().to_vec()).collect();
        let report = lenglart_check(&x, &a, m, node_count, 0.5).unwrap();
        assert!(!report.dominated);
        assert_eq!(report.verdict, LenglartVerdict::NotDominated);
    }
}
