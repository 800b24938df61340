//! C ABI over `gmnorm`.
//!
//! Problems and runs are opaque heap handles released with the matching
//! `*_free`. Every fallible call returns a [`GmStatus`]; the message of the
//! last error on the calling thread is available from
//! [`gm_last_error_message`]. Panics are caught at the boundary and reported
//! as `GM_PANIC`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use gmnorm::analysis::certify;
use gmnorm::engines::{
    run_acgm, run_meta, run_ocgmg, run_ogmg, AcgmStop, Form, LineSearch, MetaParams, RunTrace, Verdict,
};
use gmnorm::problems::generate::lambda_max;
use gmnorm::problems::{CompositeProblem, Design, LassoInstance, LeastSquares, QuadraticInstance, Regularizer};
use gmnorm::{Error, Vector};
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    LineSearch = 4,
    NonFinite = 5,
    Unsupported = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmRegularizer {
    None = 0,
    L1 = 1,
    NonNegative = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmForm {
    Canonical = 0,
    Extrapolated = 1,
    OneAux = 2,
    TwoAux = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmVerdict {
    Completed = 0,
    Converged = 1,
    BudgetExhausted = 2,
    IterationCap = 3,
    LineSearchFailure = 4,
    NonFinite = 5,
    Running = 6,
}

/// Opaque problem handle.
pub struct GmProblem {
    problem: CompositeProblem,
    start: Vector,
}

/// Opaque run handle.
pub struct GmRun {
    trace: RunTrace,
    solution: Vector,
    failures: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> GmStatus {
    match e {
        Error::DimensionMismatch { .. } => GmStatus::DimensionMismatch,
        Error::InvalidParameter(_) | Error::NotPositiveDefinite(_) | Error::Infeasible => GmStatus::InvalidArgument,
        Error::LineSearchCap(_) => GmStatus::LineSearch,
        Error::NonFinite(_) => GmStatus::NonFinite,
        Error::Unsupported(_) | Error::OptimumUnavailable => GmStatus::Unsupported,
        _ => GmStatus::Internal,
    }
}

struct Fail(GmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(GmStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GmStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside gmnorm");
            GmStatus::Panic
        }
    }
}

unsafe fn read<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle pointer"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn copy_out(v: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if len < v.len() {
        return Err(Fail(GmStatus::BufferTooSmall, format!("buffer holds {len}, need {}", v.len())));
    }
    if v.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("buffer"));
    }
    ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
    Ok(())
}

fn positive(v: f64, name: &str) -> Result<(), Fail> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Fail(GmStatus::InvalidArgument, format!("{name} must be positive and finite, got {v}")))
    }
}

/// Copy of the message of the last failed call on this thread, NUL
/// terminated and truncated to `len - 1` bytes. Returns the full length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `f(x) = 1/2 ||Ax - b||^2` plus the chosen regularizer, with `A` given
/// row-major. The Lipschitz constant is computed by power iteration.
///
/// # Safety
/// `a` must hold `m * n` values, `b` and `x0` must hold `m` and `n` values;
/// `x0` may be null for the zero start. `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_problem_least_squares(
    a: *const f64,
    m: usize,
    n: usize,
    b: *const f64,
    reg: GmRegularizer,
    lambda: f64,
    x0: *const f64,
    out: *mut *mut GmProblem,
) -> GmStatus {
    guard(|| {
        if m == 0 || n == 0 {
            return Err(Fail(GmStatus::InvalidArgument, "m and n must be positive".into()));
        }
        let a = DMatrix::from_row_slice(m, n, read(a, m * n, "a")?);
        let b = Vector::from_column_slice(read(b, m, "b")?);
        let reg = match reg {
            GmRegularizer::None => Regularizer::Zero,
            GmRegularizer::L1 => {
                positive(lambda, "lambda")?;
                Regularizer::L1 { weight: lambda }
            }
            GmRegularizer::NonNegative => Regularizer::NonNegative,
        };
        let start = if x0.is_null() {
            Vector::zeros(n)
        } else {
            Vector::from_column_slice(read(x0, n, "x0")?)
        };
        let design = Design::Dense(a);
        let l = lambda_max(&design);
        let problem = CompositeProblem::new(Arc::new(LeastSquares::new(design, b)?), reg).with_lipschitz(l);
        emit(out, GmProblem { problem, start })
    })
}

/// Seeded random LASSO instance with Gaussian data and start.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_problem_random_lasso(
    m: usize,
    n: usize,
    lambda: f64,
    seed: u64,
    out: *mut *mut GmProblem,
) -> GmStatus {
    guard(|| {
        let i = LassoInstance::generate(m, n, lambda, seed)?;
        emit(
            out,
            GmProblem {
                problem: i.problem(),
                start: i.start.clone(),
            },
        )
    })
}

/// Seeded random strongly convex quadratic with spectrum in `[mu, l]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_problem_random_quadratic(
    n: usize,
    mu: f64,
    l: f64,
    seed: u64,
    out: *mut *mut GmProblem,
) -> GmStatus {
    guard(|| {
        let i = QuadraticInstance::generate(n, mu, l, seed)?;
        emit(
            out,
            GmProblem {
                problem: i.problem(),
                start: i.start.clone(),
            },
        )
    })
}

/// # Safety
/// `p` must be null or a handle from a `gm_problem_*` constructor that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn gm_problem_free(p: *mut GmProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension of the problem, 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn gm_problem_dim(p: *const GmProblem) -> usize {
    p.as_ref().map_or(0, |p| p.problem.dim())
}

/// # Safety
/// `p` must be a live problem handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_problem_lipschitz(p: *const GmProblem, out: *mut f64) -> GmStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        let l = p
            .problem
            .lipschitz
            .ok_or_else(|| Fail(GmStatus::Unsupported, "no Lipschitz constant known".into()))?;
        *out.as_mut().ok_or_else(|| null("out"))? = l;
        Ok(())
    })
}

/// Copy the default start point into `buf`.
///
/// # Safety
/// `p` must be a live problem handle and `buf` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn gm_problem_start(p: *const GmProblem, buf: *mut f64, len: usize) -> GmStatus {
    guard(|| copy_out(handle(p, "problem")?.start.as_slice(), buf, len))
}

unsafe fn start_of(p: &GmProblem, x0: *const f64, len: usize) -> Result<Vector, Fail> {
    if x0.is_null() {
        return Ok(p.start.clone());
    }
    if len != p.problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.problem.dim(),
            found: len,
        }
        .into());
    }
    Ok(Vector::from_column_slice(read(x0, len, "x0")?))
}

fn form(f: GmForm) -> Form {
    match f {
        GmForm::Canonical => Form::Canonical,
        GmForm::Extrapolated => Form::Extrapolated,
        GmForm::OneAux => Form::OneAux,
        GmForm::TwoAux => Form::TwoAux,
    }
}

fn fixed_run(trace: RunTrace) -> GmRun {
    let solution = trace.output.as_ref().map_or_else(|| trace.x0.clone(), |o| o.x.clone());
    GmRun {
        trace,
        solution,
        failures: 0,
    }
}

/// OGM-G with `T` oracle calls and fixed `L`. A failed descent test is not
/// an error: it shows up as `GM_VERDICT_LINE_SEARCH_FAILURE`.
///
/// # Safety
/// `p` must be a live problem handle; `x0` null (default start) or valid for
/// `len` values; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_run_ogmg(
    p: *const GmProblem,
    x0: *const f64,
    len: usize,
    l: f64,
    t: usize,
    f: GmForm,
    out: *mut *mut GmRun,
) -> GmStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        let x0 = start_of(p, x0, len)?;
        emit(out, fixed_run(run_ogmg(&p.problem, &x0, l, t, form(f))?))
    })
}

/// OCGM-G with `T` oracle calls and fixed `L`.
///
/// # Safety
/// As for [`gm_run_ogmg`].
#[no_mangle]
pub unsafe extern "C" fn gm_run_ocgmg(
    p: *const GmProblem,
    x0: *const f64,
    len: usize,
    l: f64,
    t: usize,
    f: GmForm,
    out: *mut *mut GmRun,
) -> GmStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        let x0 = start_of(p, x0, len)?;
        emit(out, fixed_run(run_ocgmg(&p.problem, &x0, l, t, form(f))?))
    })
}

/// ACGM with backtracking from `L0`. `eps <= 0` disables the tolerance stop.
///
/// # Safety
/// As for [`gm_run_ogmg`].
#[no_mangle]
pub unsafe extern "C" fn gm_run_acgm(
    p: *const GmProblem,
    x0: *const f64,
    len: usize,
    l0: f64,
    eps: f64,
    budget: usize,
    out: *mut *mut GmRun,
) -> GmStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        let x0 = start_of(p, x0, len)?;
        positive(l0, "L0")?;
        let stop = AcgmStop {
            budget: Some(budget),
            eps: (eps > 0.0).then_some(eps),
            ..AcgmStop::default()
        };
        let res = run_acgm(&p.problem, &x0, l0, LineSearch::default(), stop, false)?;
        emit(
            out,
            GmRun {
                trace: res.trace,
                solution: res.r,
                failures: 0,
            },
        )
    })
}

/// The parameter-free ACGM + OCGM-G meta-scheme. `eps <= 0` disables the
/// tolerance stop; the solution is the last certified point.
///
/// # Safety
/// As for [`gm_run_ogmg`].
#[no_mangle]
pub unsafe extern "C" fn gm_run_meta(
    p: *const GmProblem,
    x0: *const f64,
    len: usize,
    l0: f64,
    eps: f64,
    budget: usize,
    out: *mut *mut GmRun,
) -> GmStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        let x0 = start_of(p, x0, len)?;
        positive(l0, "L0")?;
        let params = MetaParams {
            l0,
            eps: (eps > 0.0).then_some(eps),
            budget: Some(budget),
            ..MetaParams::default()
        };
        let res = run_meta(&p.problem, &x0, &params)?;
        emit(
            out,
            GmRun {
                trace: res.trace,
                solution: res.r,
                failures: res.failures,
            },
        )
    })
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn gm_run_free(r: *mut GmRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn gm_run_oracle_calls(r: *const GmRun) -> usize {
    r.as_ref().map_or(0, |r| r.trace.oracle_calls)
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn gm_run_failures(r: *const GmRun) -> usize {
    r.as_ref().map_or(0, |r| r.failures)
}

/// # Safety
/// `r` must be a live run handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_run_verdict(r: *const GmRun, out: *mut GmVerdict) -> GmStatus {
    guard(|| {
        let v = match handle(r, "run")?.trace.verdict {
            Verdict::Completed => GmVerdict::Completed,
            Verdict::Converged => GmVerdict::Converged,
            Verdict::BudgetExhausted => GmVerdict::BudgetExhausted,
            Verdict::IterationCap => GmVerdict::IterationCap,
            Verdict::LineSearchFailure { .. } => GmVerdict::LineSearchFailure,
            Verdict::NonFinite { .. } => GmVerdict::NonFinite,
            Verdict::Running => GmVerdict::Running,
        };
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

/// Dual norm of the last recorded gradient mapping.
///
/// # Safety
/// `r` must be a live run handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_run_last_gmap(r: *const GmRun, out: *mut f64) -> GmStatus {
    guard(|| {
        let g = handle(r, "run")?
            .trace
            .last_gmap()
            .ok_or_else(|| Fail(GmStatus::Unsupported, "run recorded no gradient mapping".into()))?;
        *out.as_mut().ok_or_else(|| null("out"))? = g;
        Ok(())
    })
}

/// Copy the returned point into `buf`.
///
/// # Safety
/// `r` must be a live run handle and `buf` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn gm_run_solution(r: *const GmRun, buf: *mut f64, len: usize) -> GmStatus {
    guard(|| copy_out(handle(r, "run")?.solution.as_slice(), buf, len))
}

/// Evaluate the runtime certificates of a fixed-length run (OGM-G or
/// OCGM-G). `passed` receives 1 when every asserted check holds, `checks`
/// the number of checks evaluated. Adaptive runs give `GM_UNSUPPORTED`.
///
/// # Safety
/// `r` must be a live run handle; `passed` and `checks` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gm_run_certify(r: *const GmRun, passed: *mut i32, checks: *mut usize) -> GmStatus {
    guard(|| {
        let rep = certify(&handle(r, "run")?.trace)?;
        *passed.as_mut().ok_or_else(|| null("passed"))? = i32::from(rep.pass());
        *checks.as_mut().ok_or_else(|| null("checks"))? = rep.checks.len();
        Ok(())
    })
}
