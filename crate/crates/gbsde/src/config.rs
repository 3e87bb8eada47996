//! Experiment configuration: a flat, versioned TOML schema with explicit
//! validation ranges. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::brownian::SeedSpec;
use crate::error::{Error, Result};
use crate::generator::{GeneratorSpec, TimeEnvelope};
use crate::grid::TimeGrid;
use crate::regression::RegressionBasis;
use crate::report::format_real;
use crate::solver::TerminalSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: u32,
    run: RunSection,
    generator: GeneratorSection,
    #[serde(default)]
    terminal: TerminalSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    report: ReportSection,
    #[serde(default)]
    verify: VerifySection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    seed: u64,
    horizon: f64,
    steps: usize,
    paths: usize,
    #[serde(default = "default_dims")]
    dims: usize,
    #[serde(default)]
    workers: usize,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorSection {
    name: String,
    mu_coef: Option<f64>,
    v_kind: Option<String>,
    v_coef: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerminalSection {
    #[serde(default = "default_terminal_name")]
    name: String,
    value: Option<f64>,
    shift: Option<f64>,
}

impl Default for TerminalSection {
    fn default() -> Self {
        Self {
            name: default_terminal_name(),
            value: None,
            shift: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    #[serde(default = "default_degree")]
    basis_degree: usize,
    #[serde(default = "default_picard")]
    picard_iters: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            basis_degree: default_degree(),
            picard_iters: default_picard(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportSection {
    #[serde(default = "default_p_list")]
    p_list: Vec<f64>,
    #[serde(default = "default_n_list")]
    n_list: Vec<f64>,
    #[serde(default = "default_p_max")]
    p_max: f64,
    #[serde(default = "default_true")]
    allow_nonzero_start: bool,
    #[serde(default)]
    plots: bool,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            p_list: default_p_list(),
            n_list: default_n_list(),
            p_max: default_p_max(),
            allow_nonzero_start: true,
            plots: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifySection {
    #[serde(default = "default_k_list")]
    k_list: Vec<f64>,
    #[serde(default = "default_pairs")]
    lipschitz_pairs: usize,
    #[serde(default = "default_bound")]
    y_bound: f64,
    #[serde(default = "default_bound")]
    z_bound: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            k_list: default_k_list(),
            lipschitz_pairs: default_pairs(),
            y_bound: default_bound(),
            z_bound: default_bound(),
        }
    }
}

fn default_dims() -> usize {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_terminal_name() -> String {
    "brownian".to_string()
}
fn default_degree() -> usize {
    3
}
fn default_picard() -> usize {
    3
}
fn default_p_list() -> Vec<f64> {
    vec![2.0]
}
fn default_n_list() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0]
}
fn default_p_max() -> f64 {
    8.0
}
fn default_true() -> bool {
    true
}
fn default_k_list() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn default_pairs() -> usize {
    10_000
}
fn default_bound() -> f64 {
    3.0
}

/// Generator choice, resolved and validated.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorChoice {
    Zero,
    LinearZ(f64),
    TimeScaled(TimeEnvelope),
    Quadratic,
    TestAffine,
}

impl GeneratorChoice {
    pub fn build(&self) -> GeneratorSpec {
        match self {
            GeneratorChoice::Zero => GeneratorSpec::zero(),
            GeneratorChoice::LinearZ(mu) => GeneratorSpec::linear_z(*mu),
            GeneratorChoice::TimeScaled(env) => GeneratorSpec::time_scaled(*env),
            GeneratorChoice::Quadratic => GeneratorSpec::quadratic(),
            GeneratorChoice::TestAffine => GeneratorSpec::test_affine(),
        }
    }

    fn describe(&self) -> String {
        match self {
            GeneratorChoice::Zero => "zero".to_string(),
            GeneratorChoice::LinearZ(mu) => format!("linear_z mu_coef={}", format_real(*mu)),
            GeneratorChoice::TimeScaled(env) => format!("time_scaled {env:?}"),
            GeneratorChoice::Quadratic => "quadratic".to_string(),
            GeneratorChoice::TestAffine => "test_affine".to_string(),
        }
    }
}

/// Terminal choice, resolved and validated.
#[derive(Debug, Clone, PartialEq)]
pub enum TerminalChoice {
    Constant(f64),
    Brownian,
    BrownianShift(f64),
}

impl TerminalChoice {
    pub fn build(&self) -> TerminalSpec {
        match self {
            TerminalChoice::Constant(c) => TerminalSpec::constant(*c),
            TerminalChoice::Brownian => TerminalSpec::terminal_brownian(),
            TerminalChoice::BrownianShift(s) => TerminalSpec::terminal_brownian_shifted(*s),
        }
    }

    fn describe(&self) -> String {
        match self {
            TerminalChoice::Constant(c) => format!("constant value={}", format_real(*c)),
            TerminalChoice::Brownian => "brownian".to_string(),
            TerminalChoice::BrownianShift(s) => format!("brownian_shift shift={}", format_real(*s)),
        }
    }
}

/// Fully validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub dims: usize,
    /// Worker threads; 0 uses the rayon default. Not part of results.
    pub workers: usize,
    pub out_dir: PathBuf,
    pub generator: GeneratorChoice,
    pub terminal: TerminalChoice,
    pub basis_degree: usize,
    pub picard_iters: usize,
    pub p_list: Vec<f64>,
    pub n_list: Vec<f64>,
    pub p_max: f64,
    pub allow_nonzero_start: bool,
    pub plots: bool,
    pub k_list: Vec<f64>,
    pub lipschitz_pairs: usize,
    pub y_bound: f64,
    pub z_bound: f64,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        Self::validate(file)
    }

    fn validate(file: ConfigFile) -> Result<Self> {
        let cfg = |msg: String| Error::Config(msg);
        if file.schema_version != SCHEMA_VERSION {
            return Err(cfg(format!(
                "unsupported schema_version {}; this build speaks {SCHEMA_VERSION}",
                file.schema_version
            )));
        }
        let run = file.run;
        if !(run.horizon.is_finite() && run.horizon > 0.0) {
            return Err(cfg(format!("run.horizon must be positive, got {}", run.horizon)));
        }
        if run.steps == 0 || run.steps > 1_000_000 {
            return Err(cfg(format!("run.steps must be in 1..=1000000, got {}", run.steps)));
        }
        if run.paths == 0 || run.paths > 100_000_000 {
            return Err(cfg(format!("run.paths must be in 1..=1e8, got {}", run.paths)));
        }
        if run.dims == 0 || run.dims > 16 {
            return Err(cfg(format!("run.dims must be in 1..=16, got {}", run.dims)));
        }
        if run.workers > 4096 {
            return Err(cfg(format!("run.workers must be <= 4096, got {}", run.workers)));
        }

        let g = &file.generator;
        let generator = match g.name.as_str() {
            "zero" => GeneratorChoice::Zero,
            "linear_z" => {
                let mu = g
                    .mu_coef
                    .ok_or_else(|| cfg("generator.mu_coef required for linear_z".to_string()))?;
                if !mu.is_finite() {
                    return Err(cfg("generator.mu_coef must be finite".to_string()));
                }
                GeneratorChoice::LinearZ(mu)
            }
            "time_scaled" => {
                let kind = g
                    .v_kind
                    .as_deref()
                    .ok_or_else(|| cfg("generator.v_kind required for time_scaled".to_string()))?;
                let coef = g.v_coef.unwrap_or(1.0);
                if !coef.is_finite() {
                    return Err(cfg("generator.v_coef must be finite".to_string()));
                }
                let env = match kind {
                    "constant" => TimeEnvelope::Constant(coef),
                    "linear_t" => TimeEnvelope::LinearT(coef),
                    "sin" => TimeEnvelope::Sin(coef),
                    other => {
                        return Err(cfg(format!(
                            "unknown generator.v_kind '{other}' (constant | linear_t | sin)"
                        )))
                    }
                };
                GeneratorChoice::TimeScaled(env)
            }
            "quadratic" => GeneratorChoice::Quadratic,
            "test_affine" => GeneratorChoice::TestAffine,
            other => {
                return Err(cfg(format!(
                    "unknown generator '{other}' (zero | linear_z | time_scaled | quadratic | test_affine)"
                )))
            }
        };

        let t = &file.terminal;
        let terminal = match t.name.as_str() {
            "constant" => {
                let c = t
                    .value
                    .ok_or_else(|| cfg("terminal.value required for constant".to_string()))?;
                if !c.is_finite() {
                    return Err(cfg("terminal.value must be finite".to_string()));
                }
                TerminalChoice::Constant(c)
            }
            "brownian" => TerminalChoice::Brownian,
            "brownian_shift" => {
                let s = t
                    .shift
                    .ok_or_else(|| cfg("terminal.shift required for brownian_shift".to_string()))?;
                if !s.is_finite() {
                    return Err(cfg("terminal.shift must be finite".to_string()));
                }
                TerminalChoice::BrownianShift(s)
            }
            other => {
                return Err(cfg(format!(
                    "unknown terminal '{other}' (constant | brownian | brownian_shift)"
                )))
            }
        };

        let solver = file.solver;
        if solver.basis_degree > 10 {
            return Err(cfg(format!(
                "solver.basis_degree must be <= 10, got {}",
                solver.basis_degree
            )));
        }
        if solver.picard_iters == 0 || solver.picard_iters > 100 {
            return Err(cfg(format!(
                "solver.picard_iters must be in 1..=100, got {}",
                solver.picard_iters
            )));
        }

        let report = file.report;
        if !(report.p_max >= 1.0 && report.p_max <= 64.0) {
            return Err(cfg(format!("report.p_max must be in [1, 64], got {}", report.p_max)));
        }
        if report.p_list.is_empty() {
            return Err(cfg("report.p_list must not be empty".to_string()));
        }
        for &p in &report.p_list {
            if !(p >= 1.0 && p <= report.p_max) {
                return Err(cfg(format!(
                    "report.p_list entries must lie in [1, p_max = {}], got {p}",
                    report.p_max
                )));
            }
        }
        if report.n_list.is_empty() {
            return Err(cfg("report.n_list must not be empty".to_string()));
        }
        if !report.n_list.iter().all(|n| n.is_finite() && *n > 0.0) {
            return Err(cfg("report.n_list entries must be positive".to_string()));
        }
        if !report.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(cfg("report.n_list must be strictly increasing".to_string()));
        }

        let verify = file.verify;
        for &k in &verify.k_list {
            if !(k > 0.0 && k < 1.0) {
                return Err(cfg(format!("verify.k_list entries must lie in (0, 1), got {k}")));
            }
        }
        if verify.lipschitz_pairs == 0 || verify.lipschitz_pairs > 10_000_000 {
            return Err(cfg("verify.lipschitz_pairs must be in 1..=1e7".to_string()));
        }
        if !(verify.y_bound > 0.0 && verify.y_bound.is_finite())
            || !(verify.z_bound > 0.0 && verify.z_bound.is_finite())
        {
            return Err(cfg("verify bounds must be positive and finite".to_string()));
        }

        Ok(ExperimentConfig {
            schema_version: file.schema_version,
            seed: run.seed,
            horizon: run.horizon,
            steps: run.steps,
            paths: run.paths,
            dims: run.dims,
            workers: run.workers,
            out_dir: run.out_dir,
            generator,
            terminal,
            basis_degree: solver.basis_degree,
            picard_iters: solver.picard_iters,
            p_list: report.p_list,
            n_list: report.n_list,
            p_max: report.p_max,
            allow_nonzero_start: report.allow_nonzero_start,
            plots: report.plots,
            k_list: verify.k_list,
            lipschitz_pairs: verify.lipschitz_pairs,
            y_bound: verify.y_bound,
            z_bound: verify.z_bound,
        })
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.horizon, self.steps)
    }

    pub fn seed_spec(&self) -> SeedSpec {
        SeedSpec::new(self.seed)
    }

    pub fn basis(&self) -> RegressionBasis {
        RegressionBasis::polynomial(self.basis_degree)
    }

    /// Manifest entries in fixed order. The effective worker count is an
    /// execution detail, never part of results, so it is not listed.
    pub fn manifest_entries(&self, artifact_version: &str, subcommand: &str) -> Vec<(String, String)> {
        let fr = format_real;
        let mut e: Vec<(String, String)> = vec![
            ("artifact".into(), format!("gbsde {artifact_version}")),
            ("subcommand".into(), subcommand.to_string()),
            ("schema_version".into(), self.schema_version.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("horizon".into(), fr(self.horizon)),
            ("steps".into(), self.steps.to_string()),
            ("paths".into(), self.paths.to_string()),
            ("dims".into(), self.dims.to_string()),
            ("generator".into(), self.generator.describe()),
            ("terminal".into(), self.terminal.describe()),
            ("basis_degree".into(), self.basis_degree.to_string()),
            ("picard_iters".into(), self.picard_iters.to_string()),
            (
                "p_list".into(),
                self.p_list.iter().map(|p| fr(*p)).collect::<Vec<_>>().join(" "),
            ),
            (
                "n_list".into(),
                self.n_list.iter().map(|n| fr(*n)).collect::<Vec<_>>().join(" "),
            ),
            ("p_max".into(), fr(self.p_max)),
            (
                "allow_nonzero_start".into(),
                self.allow_nonzero_start.to_string(),
            ),
            (
                "k_list".into(),
                self.k_list.iter().map(|k| fr(*k)).collect::<Vec<_>>().join(" "),
            ),
            ("lipschitz_pairs".into(), self.lipschitz_pairs.to_string()),
            ("y_bound".into(), fr(self.y_bound)),
            ("z_bound".into(), fr(self.z_bound)),
        ];
        e.shrink_to_fit();
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[run]
seed = 42
horizon = 1.0
steps = 50
paths = 1000
[generator]
name = "zero"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.dims, 1);
        assert_eq!(cfg.basis_degree, 3);
        assert_eq!(cfg.picard_iters, 3);
        assert_eq!(cfg.terminal, TerminalChoice::Brownian);
        assert_eq!(cfg.k_list, vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\n[solver]\nbasis_degree = 3\nmystery = 1\n");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&bad),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_steps_rejected() {
        let bad = MINIMAL.replace("steps = 50", "steps = 0");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&bad),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_generator_rejected() {
        let bad = MINIMAL.replace("name = \"zero\"", "name = \"cubic\"");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn p_above_cap_rejected() {
        let bad = format!("{MINIMAL}\n[report]\np_list = [9.0]\n");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let ok = format!("{MINIMAL}\n[report]\np_list = [9.0]\np_max = 16.0\n");
        assert!(ExperimentConfig::from_toml_str(&ok).is_ok());
    }

    #[test]
    fn schema_version_enforced() {
        let bad = MINIMAL.replace("schema_version = 1", "schema_version = 2");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn generator_params_required() {
        let bad = MINIMAL.replace("name = \"zero\"", "name = \"linear_z\"");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let ok = MINIMAL.replace("name = \"zero\"", "name = \"linear_z\"\nmu_coef = 0.5");
        let cfg = ExperimentConfig::from_toml_str(&ok).unwrap();
        assert_eq!(cfg.generator, GeneratorChoice::LinearZ(0.5));
    }
}
