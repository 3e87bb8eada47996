//! BSDE drivers `g(t, y, z)` with their envelope data and validity checks.
//!
//! A driver may claim two structural properties:
//!
//! * generalized Lipschitz continuity `|g(t,y,z) - g(t,y',z')| <=
//!   u(t)|y - y'| + v(t)|z - z'|` with time-dependent moduli `u`, `v`;
//! * vanishing at zero volatility, `g(t, y, 0) = 0` for every `y`.
//!
//! Together these force `|g(t,y,z)| <= v(t)|z|`, which is what the envelope
//! bound check samples. Claims are declared, not inferred; the checks here
//! probe them on sampled points and report the worst violation.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

pub type DriverFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;
pub type EnvelopeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Absolute tolerance used by all sampled driver checks.
pub const CHECK_TOLERANCE: f64 = 1e-12;

/// Parametric time envelopes with closed-form squared integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeEnvelope {
    /// v(t) = c
    Constant(f64),
    /// v(t) = a t
    LinearT(f64),
    /// v(t) = sin(a t)
    Sin(f64),
}

impl TimeEnvelope {
    pub fn value(self, t: f64) -> f64 {
        match self {
            TimeEnvelope::Constant(c) => c,
            TimeEnvelope::LinearT(a) => a * t,
            TimeEnvelope::Sin(a) => (a * t).sin(),
        }
    }

    /// `int_0^t v(s)^2 ds` in closed form.
    pub fn sq_integral(self, t: f64) -> f64 {
        match self {
            TimeEnvelope::Constant(c) => c * c * t,
            TimeEnvelope::LinearT(a) => a * a * t * t * t / 3.0,
            TimeEnvelope::Sin(a) => {
                if a == 0.0 {
                    0.0
                } else {
                    0.5 * t - (2.0 * a * t).sin() / (4.0 * a)
                }
            }
        }
    }
}

/// A driver together with its declared envelopes and claims.
///
/// `eval` must be a pure function of `(t, y, z)`; specs are immutable and
/// cheap to clone, so checks and solves can share them across workers.
#[derive(Clone)]
pub struct GeneratorSpec {
    name: String,
    eval: DriverFn,
    u_env: Option<EnvelopeFn>,
    v_env: Option<EnvelopeFn>,
    /// Closed form of `int_0^t v(s)^2 ds` when the envelope has one.
    v_sq_integral: Option<EnvelopeFn>,
    claims_lipschitz: bool,
    claims_zero_at_zero: bool,
}

impl std::fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratorSpec")
            .field("name", &self.name)
            .field("claims_lipschitz", &self.claims_lipschitz)
            .field("claims_zero_at_zero", &self.claims_zero_at_zero)
            .field("has_envelopes", &self.u_env.is_some())
            .finish()
    }
}

impl GeneratorSpec {
    pub fn custom(
        name: impl Into<String>,
        eval: DriverFn,
        u_env: Option<EnvelopeFn>,
        v_env: Option<EnvelopeFn>,
        claims_lipschitz: bool,
        claims_zero_at_zero: bool,
    ) -> Self {
        Self {
            name: name.into(),
            eval,
            u_env,
            v_env,
            v_sq_integral: None,
            claims_lipschitz,
            claims_zero_at_zero,
        }
    }

    /// Register a closed form for `int_0^t v(s)^2 ds`; `energy` then skips
    /// quadrature and reports the value as exact.
    pub fn with_v_sq_integral(mut self, f: EnvelopeFn) -> Self {
        self.v_sq_integral = Some(f);
        self
    }

    /// `g = 0`. Both claims hold with `u = v = 0`.
    pub fn zero() -> Self {
        Self::custom(
            "zero",
            Arc::new(|_, _, _| 0.0),
            Some(Arc::new(|_| 0.0)),
            Some(Arc::new(|_| 0.0)),
            true,
            true,
        )
        .with_v_sq_integral(Arc::new(|_| 0.0))
    }

    /// `g(t, y, z) = mu * z_1` (first Brownian coordinate), so `v = |mu|`
    /// works in every dimension.
    pub fn linear_z(mu: f64) -> Self {
        let v = mu.abs();
        Self::custom(
            format!("linear_z({mu})"),
            Arc::new(move |_, _, z| mu * z[0]),
            Some(Arc::new(|_| 0.0)),
            Some(Arc::new(move |_| v)),
            true,
            true,
        )
        .with_v_sq_integral(Arc::new(move |t| v * v * t))
    }

    /// `g(t, y, z) = v(t) * z_1` for a parametric envelope `v`.
    pub fn time_scaled(env: TimeEnvelope) -> Self {
        Self::custom(
            format!("time_scaled({env:?})"),
            Arc::new(move |t, _, z| env.value(t) * z[0]),
            Some(Arc::new(|_| 0.0)),
            Some(Arc::new(move |t| env.value(t).abs())),
            true,
            true,
        )
        .with_v_sq_integral(Arc::new(move |t| env.sq_integral(t)))
    }

    /// Quadratic driver `g(t, y, z) = |z|^2`. In differential form the
    /// solution family `Y = n B - n^2 t`, `Z = n` has drift coefficient
    /// `-|z|^2`. Quadratic growth admits no Lipschitz envelope, so the
    /// spec carries no `u`, `v` and every envelope-gated operation must
    /// reject it rather than proceed.
    pub fn quadratic() -> Self {
        Self::custom(
            "quadratic",
            Arc::new(|_, _, z| z.iter().map(|zj| zj * zj).sum()),
            None,
            None,
            false,
            true,
        )
    }

    /// Test double: `g = z_1 + 1` wrongly claiming both properties. It
    /// fails the vanishing check (`g(t, y, 0) = 1`) and exists so failure
    /// reporting paths can be exercised end to end.
    pub fn test_affine() -> Self {
        Self::custom(
            "test_affine",
            Arc::new(|_, _, z| z[0] + 1.0),
            Some(Arc::new(|_| 0.0)),
            Some(Arc::new(|_| 1.0)),
            true,
            true,
        )
        .with_v_sq_integral(Arc::new(|t| t))
    }

    #[inline]
    pub fn eval(&self, t: f64, y: f64, z: &[f64]) -> f64 {
        (self.eval)(t, y, z)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn claims_lipschitz(&self) -> bool {
        self.claims_lipschitz
    }

    pub fn claims_zero_at_zero(&self) -> bool {
        self.claims_zero_at_zero
    }

    pub fn u_env(&self, t: f64) -> Option<f64> {
        self.u_env.as_ref().map(|f| f(t))
    }

    pub fn v_env(&self, t: f64) -> Option<f64> {
        self.v_env.as_ref().map(|f| f(t))
    }

    fn require_envelopes(&self) -> Result<(&EnvelopeFn, &EnvelopeFn)> {
        match (&self.u_env, &self.v_env) {
            (Some(u), Some(v)) => Ok((u, v)),
            _ => Err(Error::contract(format!(
                "generator '{}' declares no Lipschitz envelopes",
                self.name
            ))),
        }
    }
}

/// Sampling region for randomized driver checks.
#[derive(Debug, Clone, Copy)]
pub struct SampleBox {
    pub horizon: f64,
    pub y_bound: f64,
    pub z_bound: f64,
    pub dims: usize,
}

impl SampleBox {
    pub fn new(horizon: f64, y_bound: f64, z_bound: f64, dims: usize) -> Self {
        Self {
            horizon,
            y_bound,
            z_bound,
            dims,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64, Vec<f64>) {
        let t = rng.random_range(0.0..=self.horizon);
        let y = rng.random_range(-self.y_bound..=self.y_bound);
        let z = (0..self.dims)
            .map(|_| rng.random_range(-self.z_bound..=self.z_bound))
            .collect();
        (t, y, z)
    }
}

/// Outcome of a sampled driver check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub check: &'static str,
    pub generator: String,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Max of `|g(t, y, 0)|` over the sample product; passes when the driver
/// really vanishes at zero volatility.
pub fn check_zero_at_zero(
    g: &GeneratorSpec,
    t_samples: &[f64],
    y_samples: &[f64],
    dims: usize,
) -> Result<CheckReport> {
    if t_samples.is_empty() || y_samples.is_empty() {
        return Err(Error::invalid("check_zero_at_zero needs nonempty samples"));
    }
    let zero = vec![0.0_f64; dims];
    let mut max = 0.0_f64;
    for &t in t_samples {
        for &y in y_samples {
            max = max.max(g.eval(t, y, &zero).abs());
        }
    }
    Ok(CheckReport {
        check: "zero_at_zero",
        generator: g.name.clone(),
        samples: t_samples.len() * y_samples.len(),
        max_violation: max,
        tolerance: CHECK_TOLERANCE,
        pass: max < CHECK_TOLERANCE,
    })
}

/// Max of `|g(t,y,z)| - v(t)|z|` over the samples. Only meaningful for
/// drivers claiming both properties; anything else is a contract violation.
pub fn check_envelope_bound(
    g: &GeneratorSpec,
    samples: &[(f64, f64, Vec<f64>)],
) -> Result<CheckReport> {
    if !(g.claims_lipschitz && g.claims_zero_at_zero) {
        return Err(Error::contract(format!(
            "envelope bound check requires both claims; '{}' declares lipschitz={} zero_at_zero={}",
            g.name, g.claims_lipschitz, g.claims_zero_at_zero
        )));
    }
    if samples.is_empty() {
        return Err(Error::invalid("check_envelope_bound needs nonempty samples"));
    }
    let (_, v) = g.require_envelopes()?;
    let mut max = f64::NEG_INFINITY;
    for (t, y, z) in samples {
        let norm = z.iter().map(|zj| zj * zj).sum::<f64>().sqrt();
        let excess = g.eval(*t, *y, z).abs() - v(*t) * norm;
        max = max.max(excess);
    }
    Ok(CheckReport {
        check: "envelope_bound",
        generator: g.name.clone(),
        samples: samples.len(),
        max_violation: max,
        tolerance: CHECK_TOLERANCE,
        pass: max <= CHECK_TOLERANCE,
    })
}

/// Sampled Lipschitz ratio `|g(t,y,z) - g(t,y',z')| / (u(t)|y-y'| +
/// v(t)|z-z'|)` over random pairs; violation is `ratio - 1`.
pub fn check_lipschitz(
    g: &GeneratorSpec,
    sample_box: &SampleBox,
    pairs: usize,
    seed: u64,
) -> Result<CheckReport> {
    if !g.claims_lipschitz {
        return Err(Error::contract(format!(
            "Lipschitz check requires the Lipschitz claim; '{}' does not make it",
            g.name
        )));
    }
    if pairs == 0 {
        return Err(Error::invalid("check_lipschitz needs at least one pair"));
    }
    let (u, v) = g.require_envelopes()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let (t, y1, z1) = sample_box.sample(&mut rng);
        let (_, y2, z2) = sample_box.sample(&mut rng);
        let dy = (y1 - y2).abs();
        let dz = z1
            .iter()
            .zip(&z2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let diff = (g.eval(t, y1, &z1) - g.eval(t, y2, &z2)).abs();
        let bound = u(t) * dy + v(t) * dz;
        let violation = if bound > 0.0 {
            diff / bound - 1.0
        } else if diff > 0.0 {
            f64::MAX
        } else {
            // both sides zero: the pair is vacuously fine
            f64::NEG_INFINITY
        };
        max = max.max(violation);
    }
    let max = if max == f64::NEG_INFINITY { 0.0 } else { max };
    Ok(CheckReport {
        check: "lipschitz",
        generator: g.name.clone(),
        samples: pairs,
        max_violation: max,
        tolerance: CHECK_TOLERANCE,
        pass: max <= CHECK_TOLERANCE,
    })
}

/// The driver's energy `mu = int_0^T v(s)^2 ds`.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorEnergy {
    pub mu: f64,
    /// `None` when computed from a registered closed form; otherwise a
    /// Richardson estimate of the quadrature error.
    pub error_bound: Option<f64>,
}

/// Composite-trapezoid panels used when no closed form is registered.
/// The doubled refinement then resolves smooth envelopes well below 1e-8.
const MIN_QUADRATURE_PANELS: usize = 4000;

pub fn energy(g: &GeneratorSpec, grid: &TimeGrid) -> Result<GeneratorEnergy> {
    let v = match &g.v_env {
        Some(v) => v.clone(),
        None => {
            return Err(Error::contract(format!(
                "generator '{}' has no usable volatility envelope",
                g.name
            )))
        }
    };
    if let Some(closed) = &g.v_sq_integral {
        let mu = closed(grid.horizon());
        if !mu.is_finite() {
            return Err(Error::contract("registered energy integral is not finite".to_string()));
        }
        return Ok(GeneratorEnergy {
            mu,
            error_bound: None,
        });
    }
    let f = |t: f64| {
        let x = v(t);
        x * x
    };
    let per_cell = MIN_QUADRATURE_PANELS.div_ceil(grid.steps());
    let coarse = trapezoid_on_refinement(&f, grid, per_cell);
    let fine = trapezoid_on_refinement(&f, grid, per_cell * 2);
    if !fine.is_finite() {
        return Err(Error::contract(
            "energy quadrature diverged; envelope is not integrable on the grid".to_string(),
        ));
    }
    Ok(GeneratorEnergy {
        mu: fine,
        error_bound: Some((fine - coarse).abs() / 3.0),
    })
}

fn trapezoid_on_refinement(f: &impl Fn(f64) -> f64, grid: &TimeGrid, per_cell: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..grid.steps() {
        let a = grid.node(i);
        let b = grid.node(i + 1);
        let h = (b - a) / per_cell as f64;
        let mut cell = 0.5 * (f(a) + f(b));
        for k in 1..per_cell {
            cell += f(a + h * k as f64);
        }
        total += cell * h;
    }
    total
}
