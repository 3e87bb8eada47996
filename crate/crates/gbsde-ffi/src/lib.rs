//! C ABI for the gbsde laboratory: opaque handles over grids, path batches,
//! drivers and solutions, status codes instead of Rust errors, and copy-out
//! accessors for the arrays. The generated header lives in
//! `include/gbsde.h`.
//!
//! Conventions: every constructor writes through an out-pointer and returns
//! a [`GbsdeStatus`]; every handle has a matching `_free` that accepts null;
//! `gbsde_last_error_message` retrieves the thread-local message of the most
//! recent failure.

use std::cell::RefCell;
use std::os::raw::c_char;

use gbsde::brownian::{BrownianBatch, SeedSpec};
use gbsde::counterexample::{quadratic_solution, QuadraticFamily};
use gbsde::error::Error;
use gbsde::generator::{GeneratorSpec, TimeEnvelope};
use gbsde::gexp::g_expect_from_solution;
use gbsde::grid::TimeGrid;
use gbsde::regression::RegressionBasis;
use gbsde::solver::{solve_backward, solution_residual, BsdeSolution, TerminalSpec};
use gbsde::stats::bdg_ratio;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg.into());
}

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbsdeStatus {
    Ok = 0,
    InvalidArgument = 1,
    ContractViolation = 2,
    NumericalFailure = 3,
    DegenerateRatio = 4,
    NullPointer = 5,
    InternalError = 6,
}

fn status_of(err: &Error) -> GbsdeStatus {
    match err {
        Error::InvalidArgument(_) => GbsdeStatus::InvalidArgument,
        Error::ContractViolation(_) => GbsdeStatus::ContractViolation,
        Error::NumericalFailure { .. } => GbsdeStatus::NumericalFailure,
        Error::DegenerateRatio(_) => GbsdeStatus::DegenerateRatio,
        Error::Config(_) | Error::Io { .. } => GbsdeStatus::InternalError,
    }
}

fn fail(err: Error) -> GbsdeStatus {
    let code = status_of(&err);
    set_last_error(err.to_string());
    code
}

fn null_fail(what: &str) -> GbsdeStatus {
    set_last_error(format!("null pointer: {what}"));
    GbsdeStatus::NullPointer
}

/// Copy the last error message into `buf` (truncated, always NUL-terminated
/// when `len > 0`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes, or be null.
#[no_mangle]
pub unsafe extern "C" fn gbsde_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Opaque time grid.
pub struct GbsdeGrid(TimeGrid);
/// Opaque Brownian path batch.
pub struct GbsdeBatch(BrownianBatch);
/// Opaque driver specification.
pub struct GbsdeGenerator(GeneratorSpec);
/// Opaque solution pair (Y, Z).
pub struct GbsdeSolution(BsdeSolution);

/// Builtin driver kinds for `gbsde_generator_builtin`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbsdeGeneratorKind {
    /// g = 0; `param` ignored.
    Zero = 0,
    /// g = param * z_1.
    LinearZ = 1,
    /// g = param * t * z_1 (linear-in-time envelope).
    TimeScaledLinear = 2,
    /// g = sin(param * t) * z_1.
    TimeScaledSin = 3,
    /// g = |z|^2; rejected by envelope-gated operations.
    Quadratic = 4,
}

/// Terminal kinds for `gbsde_solve_backward` and `gbsde_g_expect`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbsdeTerminalKind {
    /// xi = B_T (first coordinate); `param` ignored.
    Brownian = 0,
    /// xi = param.
    Constant = 1,
    /// xi = B_T + param.
    BrownianShift = 2,
}

/// Moment-comparison summary mirrored from the Rust report.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GbsdeRatioReport {
    pub p: f64,
    pub lhs_mean: f64,
    pub lhs_std_error: f64,
    pub rhs_mean: f64,
    pub rhs_std_error: f64,
    pub ratio_upper: f64,
    pub ratio_lower: f64,
    pub ratio_upper_ci_lo: f64,
    pub ratio_upper_ci_hi: f64,
}

/// Uniform grid over `[0, horizon]` with `steps` intervals.
///
/// # Safety
/// `out` must be a valid pointer to a `GbsdeGrid*` slot.
#[no_mangle]
pub unsafe extern "C" fn gbsde_grid_uniform(
    horizon: f64,
    steps: usize,
    out: *mut *mut GbsdeGrid,
) -> GbsdeStatus {
    if out.is_null() {
        return null_fail("out");
    }
    match TimeGrid::uniform(horizon, steps) {
        Ok(grid) => {
            *out = Box::into_raw(Box::new(GbsdeGrid(grid)));
            GbsdeStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `grid` must be null or a pointer previously returned by a grid
/// constructor and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gbsde_grid_free(grid: *mut GbsdeGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Simulate `paths` x `steps` x `dims` Brownian increments; path `p` draws
/// from the counter-based stream `stream_offset + p` under `master_seed`.
///
/// # Safety
/// `grid` must be a live grid handle; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn gbsde_batch_simulate(
    grid: *const GbsdeGrid,
    dims: usize,
    paths: usize,
    master_seed: u64,
    stream_offset: u64,
    out: *mut *mut GbsdeBatch,
) -> GbsdeStatus {
    if grid.is_null() {
        return null_fail("grid");
    }
    if out.is_null() {
        return null_fail("out");
    }
    let grid = &(*grid).0;
    match BrownianBatch::simulate(
        grid.clone(),
        dims,
        paths,
        SeedSpec::with_offset(master_seed, stream_offset),
    ) {
        Ok(batch) => {
            *out = Box::into_raw(Box::new(GbsdeBatch(batch)));
            GbsdeStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `batch` must be null or a live batch handle.
#[no_mangle]
pub unsafe extern "C" fn gbsde_batch_free(batch: *mut GbsdeBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

/// Brownian levels of one path, row-major `[node][dim]`; `out_len` must be
/// `(steps + 1) * dims`.
///
/// # Safety
/// `batch` must be a live handle; `out` must point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gbsde_batch_path_values(
    batch: *const GbsdeBatch,
    path: usize,
    out: *mut f64,
    out_len: usize,
) -> GbsdeStatus {
    if batch.is_null() {
        return null_fail("batch");
    }
    if out.is_null() {
        return null_fail("out");
    }
    let batch = &(*batch).0;
    let values = match batch.path_values(path) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    if values.len() != out_len {
        return fail(Error::invalid(format!(
            "out_len is {out_len}, expected {}",
            values.len()
        )));
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    GbsdeStatus::Ok
}

/// Construct a builtin driver. `param` feeds the kinds that take one.
///
/// # Safety
/// `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn gbsde_generator_builtin(
    kind: GbsdeGeneratorKind,
    param: f64,
    out: *mut *mut GbsdeGenerator,
) -> GbsdeStatus {
    if out.is_null() {
        return null_fail("out");
    }
    if !param.is_finite() {
        return fail(Error::invalid("generator parameter must be finite"));
    }
    let spec = match kind {
        GbsdeGeneratorKind::Zero => GeneratorSpec::zero(),
        GbsdeGeneratorKind::LinearZ => GeneratorSpec::linear_z(param),
        GbsdeGeneratorKind::TimeScaledLinear => {
            GeneratorSpec::time_scaled(TimeEnvelope::LinearT(param))
        }
        GbsdeGeneratorKind::TimeScaledSin => GeneratorSpec::time_scaled(TimeEnvelope::Sin(param)),
        GbsdeGeneratorKind::Quadratic => GeneratorSpec::quadratic(),
    };
    *out = Box::into_raw(Box::new(GbsdeGenerator(spec)));
    GbsdeStatus::Ok
}

/// # Safety
/// `generator` must be null or a live generator handle.
#[no_mangle]
pub unsafe extern "C" fn gbsde_generator_free(generator: *mut GbsdeGenerator) {
    if !generator.is_null() {
        drop(Box::from_raw(generator));
    }
}

fn terminal_of(kind: GbsdeTerminalKind, param: f64) -> TerminalSpec {
    match kind {
        GbsdeTerminalKind::Brownian => TerminalSpec::terminal_brownian(),
        GbsdeTerminalKind::Constant => TerminalSpec::constant(param),
        GbsdeTerminalKind::BrownianShift => TerminalSpec::terminal_brownian_shifted(param),
    }
}

/// Backward solve with a polynomial basis of total degree `basis_degree`.
///
/// # Safety
/// `batch` and `generator` must be live handles; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn gbsde_solve_backward(
    batch: *const GbsdeBatch,
    generator: *const GbsdeGenerator,
    terminal_kind: GbsdeTerminalKind,
    terminal_param: f64,
    basis_degree: usize,
    picard_iters: usize,
    out: *mut *mut GbsdeSolution,
) -> GbsdeStatus {
    if batch.is_null() {
        return null_fail("batch");
    }
    if generator.is_null() {
        return null_fail("generator");
    }
    if out.is_null() {
        return null_fail("out");
    }
    if !terminal_param.is_finite() {
        return fail(Error::invalid("terminal parameter must be finite"));
    }
    let terminal = terminal_of(terminal_kind, terminal_param);
    match solve_backward(
        &(*batch).0,
        &(*generator).0,
        &terminal,
        RegressionBasis::polynomial(basis_degree),
        picard_iters,
    ) {
        Ok(sol) => {
            *out = Box::into_raw(Box::new(GbsdeSolution(sol)));
            GbsdeStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// The exact family `Y = n B - n^2 t`, `Z = n` on a one-dimensional batch.
///
/// # Safety
/// `batch` must be a live handle; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn gbsde_quadratic_solution(
    n: f64,
    batch: *const GbsdeBatch,
    out: *mut *mut GbsdeSolution,
) -> GbsdeStatus {
    if batch.is_null() {
        return null_fail("batch");
    }
    if out.is_null() {
        return null_fail("out");
    }
    let batch = &(*batch).0;
    let result = QuadraticFamily::new(n, batch.grid().clone())
        .and_then(|fam| quadratic_solution(&fam, batch));
    match result {
        Ok(sol) => {
            *out = Box::into_raw(Box::new(GbsdeSolution(sol)));
            GbsdeStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn gbsde_solution_free(solution: *mut GbsdeSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gbsde_solution_paths(solution: *const GbsdeSolution) -> usize {
    if solution.is_null() {
        return 0;
    }
    (*solution).0.paths()
}

/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gbsde_solution_nodes(solution: *const GbsdeSolution) -> usize {
    if solution.is_null() {
        return 0;
    }
    (*solution).0.grid().node_count()
}

/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gbsde_solution_dims(solution: *const GbsdeSolution) -> usize {
    if solution.is_null() {
        return 0;
    }
    (*solution).0.dims()
}

/// Copy `Y` of one path (length `nodes`).
///
/// # Safety
/// `solution` must be a live handle; `out` must point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gbsde_solution_y_path(
    solution: *const GbsdeSolution,
    path: usize,
    out: *mut f64,
    out_len: usize,
) -> GbsdeStatus {
    if solution.is_null() {
        return null_fail("solution");
    }
    if out.is_null() {
        return null_fail("out");
    }
    let sol = &(*solution).0;
    if path >= sol.paths() {
        return fail(Error::invalid(format!("path {path} out of range")));
    }
    let row = sol.y_path(path);
    if row.len() != out_len {
        return fail(Error::invalid(format!(
            "out_len is {out_len}, expected {}",
            row.len()
        )));
    }
    std::ptr::copy_nonoverlapping(row.as_ptr(), out, row.len());
    GbsdeStatus::Ok
}

/// Copy `Z` of one path, row-major `[step][dim]` (length `steps * dims`).
///
/// # Safety
/// `solution` must be a live handle; `out` must point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gbsde_solution_z_path(
    solution: *const GbsdeSolution,
    path: usize,
    out: *mut f64,
    out_len: usize,
) -> GbsdeStatus {
    if solution.is_null() {
        return null_fail("solution");
    }
    if out.is_null() {
        return null_fail("out");
    }
    let sol = &(*solution).0;
    if path >= sol.paths() {
        return fail(Error::invalid(format!("path {path} out of range")));
    }
    let row = sol.z_path(path);
    if row.len() != out_len {
        return fail(Error::invalid(format!(
            "out_len is {out_len}, expected {}",
            row.len()
        )));
    }
    std::ptr::copy_nonoverlapping(row.as_ptr(), out, row.len());
    GbsdeStatus::Ok
}

/// Expectation value and standard error for a terminal under a driver.
///
/// # Safety
/// `batch` and `generator` must be live handles; `value` and `std_error`
/// must be valid slots.
#[no_mangle]
pub unsafe extern "C" fn gbsde_g_expect(
    batch: *const GbsdeBatch,
    generator: *const GbsdeGenerator,
    terminal_kind: GbsdeTerminalKind,
    terminal_param: f64,
    basis_degree: usize,
    picard_iters: usize,
    value: *mut f64,
    std_error: *mut f64,
) -> GbsdeStatus {
    if batch.is_null() {
        return null_fail("batch");
    }
    if generator.is_null() {
        return null_fail("generator");
    }
    if value.is_null() || std_error.is_null() {
        return null_fail("value/std_error");
    }
    if !terminal_param.is_finite() {
        return fail(Error::invalid("terminal parameter must be finite"));
    }
    let terminal = terminal_of(terminal_kind, terminal_param);
    let solved = solve_backward(
        &(*batch).0,
        &(*generator).0,
        &terminal,
        RegressionBasis::polynomial(basis_degree),
        picard_iters,
    )
    .and_then(|sol| g_expect_from_solution(&sol, &(*generator).0));
    match solved {
        Ok(r) => {
            *value = r.value;
            *std_error = r.std_error;
            GbsdeStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Both moment-ratio orientations at exponent `p`.
///
/// # Safety
/// `solution` must be a live handle; `out` a valid report slot.
#[no_mangle]
pub unsafe extern "C" fn gbsde_bdg_ratio(
    solution: *const GbsdeSolution,
    p: f64,
    allow_nonzero_start: bool,
    out: *mut GbsdeRatioReport,
) -> GbsdeStatus {
    if solution.is_null() {
        return null_fail("solution");
    }
    if out.is_null() {
        return null_fail("out");
    }
    match bdg_ratio(&(*solution).0, p, allow_nonzero_start) {
        Ok(r) => {
            *out = GbsdeRatioReport {
                p: r.p,
                lhs_mean: r.lhs.mean,
                lhs_std_error: r.lhs.std_error,
                rhs_mean: r.rhs.mean,
                rhs_std_error: r.rhs.std_error,
                ratio_upper: r.ratio_upper,
                ratio_lower: r.ratio_lower,
                ratio_upper_ci_lo: r.ratio_upper_ci.0,
                ratio_upper_ci_hi: r.ratio_upper_ci.1,
            };
            GbsdeStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Max one-step defect of a solution against a driver, over all paths.
///
/// # Safety
/// All handles must be live; `out_max` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn gbsde_solution_residual_max(
    solution: *const GbsdeSolution,
    batch: *const GbsdeBatch,
    generator: *const GbsdeGenerator,
    out_max: *mut f64,
) -> GbsdeStatus {
    if solution.is_null() || batch.is_null() || generator.is_null() {
        return null_fail("solution/batch/generator");
    }
    if out_max.is_null() {
        return null_fail("out_max");
    }
    match solution_residual(&(*solution).0, &(*batch).0, &(*generator).0) {
        Ok(res) => {
            *out_max = res.iter().cloned().fold(0.0, f64::max);
            GbsdeStatus::Ok
        }
        Err(e) => fail(e),
    }
}
