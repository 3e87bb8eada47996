//! Config-driven experiment runner behind the CLI: builds a worker pool,
//! executes one subcommand, and writes a manifest plus CSV (and optional
//! SVG) artifacts into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::brownian::BrownianBatch;
use crate::config::ExperimentConfig;
use crate::counterexample::divergence_report;
use crate::error::{Error, Result};
use crate::generator::{check_envelope_bound, check_lipschitz, check_zero_at_zero, SampleBox};
use crate::gexp::g_expect_from_solution;
use crate::reduce::{det_mean, det_mean_var};
use crate::report::{write_manifest, Cell, CsvTable};
use crate::solver::solve_backward;
use crate::stats::{bdg_ratio, lenglart_check, LenglartVerdict};
use crate::svg::{line_chart, Series};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Solve,
    Ratio,
    Counterexample,
    Verify,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Solve => "solve",
            Subcommand::Ratio => "ratio",
            Subcommand::Counterexample => "counterexample",
            Subcommand::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    /// Nonzero after `verify` when a claimed property failed its check.
    pub failed_checks: usize,
}

/// Run one subcommand inside a pool of `cfg.workers` threads (0 = default).
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_in_pool(cmd, cfg))
}

fn run_in_pool(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let mut outcome = RunOutcome {
        out_dir: cfg.out_dir.clone(),
        artifacts: Vec::new(),
        failed_checks: 0,
    };

    let mut manifest = cfg.manifest_entries(ARTIFACT_VERSION, cmd.name());
    match cmd {
        Subcommand::Simulate => simulate_cmd(cfg, &mut outcome)?,
        Subcommand::Solve => solve_cmd(cfg, &mut outcome)?,
        Subcommand::Ratio => ratio_cmd(cfg, &mut outcome)?,
        Subcommand::Counterexample => counterexample_cmd(cfg, &mut outcome, &mut manifest)?,
        Subcommand::Verify => verify_cmd(cfg, &mut outcome)?,
    }

    let manifest_path = cfg.out_dir.join("manifest.txt");
    write_manifest(&manifest_path, &manifest)?;
    outcome.artifacts.push(manifest_path);
    Ok(outcome)
}

fn write_table(table: &CsvTable, path: PathBuf, outcome: &mut RunOutcome) -> Result<()> {
    table.write(&path)?;
    outcome.artifacts.push(path);
    Ok(())
}

fn write_svg(body: String, path: PathBuf, outcome: &mut RunOutcome) -> Result<()> {
    fs::write(&path, body).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    outcome.artifacts.push(path);
    Ok(())
}

fn batch_for(cfg: &ExperimentConfig) -> Result<BrownianBatch> {
    BrownianBatch::simulate(cfg.grid()?, cfg.dims, cfg.paths, cfg.seed_spec())
}

fn simulate_cmd(cfg: &ExperimentConfig, outcome: &mut RunOutcome) -> Result<()> {
    let batch = batch_for(cfg)?;
    let values = batch.values_flat();
    let node_count = batch.grid().node_count();
    let d = batch.dims();
    let mut table = CsvTable::new(vec!["node", "t", "dim", "b_mean", "b_var", "expected_var"]);
    for i in 0..node_count {
        let t = batch.grid().node(i);
        for j in 0..d {
            let col: Vec<f64> = (0..batch.paths())
                .map(|p| values[(p * node_count + i) * d + j])
                .collect();
            let (mean, var) = det_mean_var(&col);
            table.push_row(vec![
                Cell::Int(i as i64),
                Cell::Real(t),
                Cell::Int(j as i64),
                Cell::Real(mean),
                Cell::Real(var),
                Cell::Real(t),
            ])?;
        }
    }
    write_table(&table, cfg.out_dir.join("simulate.csv"), outcome)
}

fn solve_cmd(cfg: &ExperimentConfig, outcome: &mut RunOutcome) -> Result<()> {
    let batch = batch_for(cfg)?;
    let g = cfg.generator.build();
    let terminal = cfg.terminal.build();
    let sol = solve_backward(&batch, &g, &terminal, cfg.basis(), cfg.picard_iters)?;
    let grid = sol.grid().clone();
    let d = sol.dims();

    let mut nodes = CsvTable::new(vec!["node", "t", "y_mean", "y_std"]);
    let mut y_means = Vec::with_capacity(grid.node_count());
    for i in 0..grid.node_count() {
        let col = sol.y_column(i);
        let (mean, var) = det_mean_var(&col);
        y_means.push((grid.node(i), mean));
        nodes.push_row(vec![
            Cell::Int(i as i64),
            Cell::Real(grid.node(i)),
            Cell::Real(mean),
            Cell::Real(var.sqrt()),
        ])?;
    }
    write_table(&nodes, cfg.out_dir.join("solve_nodes.csv"), outcome)?;

    let mut steps = CsvTable::new(vec![
        "step",
        "t",
        "dt",
        "z_abs_mean",
        "regression_residual",
        "picard_sweeps",
    ]);
    for diag in sol.diagnostics() {
        let i = diag.step;
        let znorm: Vec<f64> = (0..sol.paths())
            .map(|p| {
                (0..d)
                    .map(|j| sol.z(p, i, j).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        steps.push_row(vec![
            Cell::Int(i as i64),
            Cell::Real(grid.node(i)),
            Cell::Real(grid.dt(i)),
            Cell::Real(det_mean(&znorm)),
            Cell::Real(diag.regression_residual),
            Cell::Int(diag.picard_sweeps as i64),
        ])?;
    }
    write_table(&steps, cfg.out_dir.join("solve_steps.csv"), outcome)?;

    let gx = g_expect_from_solution(&sol, &g)?;
    let mut gtable = CsvTable::new(vec!["value", "std_error"]);
    gtable.push_row(vec![Cell::Real(gx.value), Cell::Real(gx.std_error)])?;
    write_table(&gtable, cfg.out_dir.join("gexpectation.csv"), outcome)?;

    if cfg.plots {
        let svg = line_chart(
            "solution mean vs time",
            "t",
            "mean Y",
            &[Series {
                label: "y_mean".into(),
                points: y_means,
            }],
        );
        write_svg(svg, cfg.out_dir.join("solve.svg"), outcome)?;
    }
    Ok(())
}

fn ratio_cmd(cfg: &ExperimentConfig, outcome: &mut RunOutcome) -> Result<()> {
    let batch = batch_for(cfg)?;
    let g = cfg.generator.build();
    let terminal = cfg.terminal.build();
    let sol = solve_backward(&batch, &g, &terminal, cfg.basis(), cfg.picard_iters)?;

    let mut table = CsvTable::new(vec![
        "p",
        "lhs_mean",
        "lhs_std_error",
        "rhs_mean",
        "rhs_std_error",
        "ratio_upper",
        "ratio_lower",
        "ratio_upper_ci_lo",
        "ratio_upper_ci_hi",
    ]);
    let mut points = Vec::new();
    for &p in &cfg.p_list {
        let r = bdg_ratio(&sol, p, cfg.allow_nonzero_start)?;
        points.push((p, r.ratio_upper));
        table.push_row(vec![
            Cell::Real(p),
            Cell::Real(r.lhs.mean),
            Cell::Real(r.lhs.std_error),
            Cell::Real(r.rhs.mean),
            Cell::Real(r.rhs.std_error),
            Cell::Real(r.ratio_upper),
            Cell::Real(r.ratio_lower),
            Cell::Real(r.ratio_upper_ci.0),
            Cell::Real(r.ratio_upper_ci.1),
        ])?;
    }
    write_table(&table, cfg.out_dir.join("ratio.csv"), outcome)?;

    if cfg.plots {
        let svg = line_chart(
            "moment ratio vs exponent",
            "p",
            "ratio_upper",
            &[Series {
                label: "ratio_upper".into(),
                points,
            }],
        );
        write_svg(svg, cfg.out_dir.join("ratio.svg"), outcome)?;
    }
    Ok(())
}

fn counterexample_cmd(
    cfg: &ExperimentConfig,
    outcome: &mut RunOutcome,
    manifest: &mut Vec<(String, String)>,
) -> Result<()> {
    if cfg.dims != 1 {
        return Err(Error::Config(
            "counterexample requires run.dims = 1".to_string(),
        ));
    }
    let batch = batch_for(cfg)?;
    let report = divergence_report(&cfg.n_list, &batch, 1.0)?;

    let mut table = CsvTable::new(vec![
        "n",
        "lhs_root_exact",
        "sup_mc_mean",
        "sup_mc_ci_lo",
        "sup_mc_ci_hi",
        "sup_lower_bound_analytic",
        "ratio",
        "ratio_over_n",
    ]);
    let mut points = Vec::new();
    for row in &report.rows {
        points.push((row.n, row.ratio));
        table.push_row(vec![
            Cell::Real(row.n),
            Cell::Real(row.lhs_root_exact),
            Cell::Real(row.sup_mc_mean),
            Cell::Real(row.sup_mc_ci.0),
            Cell::Real(row.sup_mc_ci.1),
            Cell::Real(row.sup_lower_bound_analytic),
            Cell::Real(row.ratio),
            Cell::Real(row.ratio_over_n),
        ])?;
    }
    write_table(&table, cfg.out_dir.join("counterexample.csv"), outcome)?;

    if let (Some((log_slope, log_icept)), Some((lin_slope, lin_icept))) =
        (report.log_fit, report.linear_fit)
    {
        let mut fit = CsvTable::new(vec![
            "slope_linear",
            "intercept_linear",
            "slope_loglog",
            "intercept_loglog",
            "ratio_strictly_increasing",
            "lower_side_holds",
        ]);
        fit.push_row(vec![
            Cell::Real(lin_slope),
            Cell::Real(lin_icept),
            Cell::Real(log_slope),
            Cell::Real(log_icept),
            Cell::Int(report.ratio_strictly_increasing as i64),
            Cell::Int(report.lower_side_holds as i64),
        ])?;
        write_table(&fit, cfg.out_dir.join("counterexample_fit.csv"), outcome)?;
    }
    manifest.push((
        "failing_hypothesis".into(),
        report.failing_hypothesis.to_string(),
    ));

    if cfg.plots {
        let svg = line_chart(
            "measured ratio vs family scale",
            "n",
            "ratio",
            &[Series {
                label: "ratio".into(),
                points,
            }],
        );
        write_svg(svg, cfg.out_dir.join("counterexample.svg"), outcome)?;
    }
    Ok(())
}

fn verify_cmd(cfg: &ExperimentConfig, outcome: &mut RunOutcome) -> Result<()> {
    let g = cfg.generator.build();
    let grid = cfg.grid()?;
    let mut table = CsvTable::new(vec![
        "check",
        "subject",
        "samples",
        "statistic",
        "threshold",
        "pass",
    ]);
    let mut failed = 0_usize;
    let push_check = |table: &mut CsvTable,
                          check: &str,
                          subject: &str,
                          samples: usize,
                          statistic: f64,
                          threshold: f64,
                          pass: bool,
                          failed: &mut usize|
     -> Result<()> {
        if !pass {
            *failed += 1;
        }
        table.push_row(vec![
            Cell::Text(check.to_string()),
            Cell::Text(subject.to_string()),
            Cell::Int(samples as i64),
            Cell::Real(statistic),
            Cell::Real(threshold),
            Cell::Int(pass as i64),
        ])
    };

    // Driver checks on the configured generator, gated by its claims.
    let t_samples: Vec<f64> = (0..=10).map(|i| cfg.horizon * i as f64 / 10.0).collect();
    let y_samples: Vec<f64> = (0..=10)
        .map(|i| -cfg.y_bound + 2.0 * cfg.y_bound * i as f64 / 10.0)
        .collect();
    if g.claims_zero_at_zero() {
        let r = check_zero_at_zero(&g, &t_samples, &y_samples, cfg.dims)?;
        push_check(
            &mut table,
            r.check,
            g.name(),
            r.samples,
            r.max_violation,
            r.tolerance,
            r.pass,
            &mut failed,
        )?;
    }
    let sample_box = SampleBox::new(cfg.horizon, cfg.y_bound, cfg.z_bound, cfg.dims);
    if g.claims_lipschitz() && g.claims_zero_at_zero() {
        let samples = envelope_samples(&sample_box, cfg.lipschitz_pairs.min(20_000), cfg.seed);
        let r = check_envelope_bound(&g, &samples)?;
        push_check(
            &mut table,
            r.check,
            g.name(),
            r.samples,
            r.max_violation,
            r.tolerance,
            r.pass,
            &mut failed,
        )?;
    }
    if g.claims_lipschitz() {
        let r = check_lipschitz(&g, &sample_box, cfg.lipschitz_pairs, cfg.seed)?;
        push_check(
            &mut table,
            r.check,
            g.name(),
            r.samples,
            r.max_violation,
            r.tolerance,
            r.pass,
            &mut failed,
        )?;
    }

    // Domination suite on X = B^2, A = t.
    let batch = batch_for(cfg)?;
    let values = batch.values_flat();
    let node_count = grid.node_count();
    let m = batch.paths();
    let x: Vec<f64> = (0..m)
        .flat_map(|p| {
            (0..node_count)
                .map(|i| {
                    let b = values[(p * node_count + i) * batch.dims()];
                    b * b
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let a: Vec<f64> = (0..m).flat_map(|_| grid.nodes().to_vec()).collect();
    for &k in &cfg.k_list {
        let r = lenglart_check(&x, &a, m, node_count, k)?;
        let bound = r.constant * r.rhs_mean;
        push_check(
            &mut table,
            "lenglart",
            &format!("k={k}"),
            m,
            r.lhs_mean,
            bound,
            r.verdict == LenglartVerdict::Pass,
            &mut failed,
        )?;
    }

    write_table(&table, cfg.out_dir.join("verify.csv"), outcome)?;
    outcome.failed_checks = failed;
    Ok(())
}

fn envelope_samples(sample_box: &SampleBox, count: usize, seed: u64) -> Vec<(f64, f64, Vec<f64>)> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    (0..count)
        .map(|_| {
            let t = rng.random_range(0.0..=sample_box.horizon);
            let y = rng.random_range(-sample_box.y_bound..=sample_box.y_bound);
            let z = (0..sample_box.dims)
                .map(|_| rng.random_range(-sample_box.z_bound..=sample_box.z_bound))
                .collect();
            (t, y, z)
        })
        .collect()
}

/// Resolve the output directory: CLI flag beats the `GBSDE_OUT` environment
/// variable, which beats the config file.
pub fn resolve_out_dir(cfg: &mut ExperimentConfig, cli_out: Option<PathBuf>) {
    if let Some(dir) = cli_out {
        cfg.out_dir = dir;
    } else if let Ok(env_dir) = std::env::var("GBSDE_OUT") {
        if !env_dir.is_empty() {
            cfg.out_dir = PathBuf::from(env_dir);
        }
    }
}

/// Convenience for tests and the binary: load, override, run.
pub fn load_and_run(
    cmd: Subcommand,
    config_path: &Path,
    cli_out: Option<PathBuf>,
    cli_workers: Option<usize>,
) -> Result<RunOutcome> {
    let mut cfg = ExperimentConfig::from_path(config_path)?;
    resolve_out_dir(&mut cfg, cli_out);
    if let Some(w) = cli_workers {
        cfg.workers = w;
    }
    run(cmd, &cfg)
}
