//! C ABI over `tikflow`.
//!
//! Objectives and trajectories are opaque handles owned by the caller and
//! released with their `_free` function. Every call returns a [`TfStatus`];
//! on failure [`tf_last_error`] describes the problem. Panics never cross the
//! boundary and are reported as [`TfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use tikflow::discrete::{self, DiscreteParams, IterateState};
use tikflow::dynamics::{classify_regime, Dynamics, DynamicsParams, PowerSchedule, Regime};
use tikflow::experiments::{execute, RunConfig};
use tikflow::integrator::{integrate, IntegratorConfig, Trajectory};
use tikflow::problems::{Corpus, Objective, ObjectiveDef, Point, TIKHONOV_TOL};
use tikflow::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DimensionMismatch = 3,
    Convergence = 4,
    Integration = 5,
    Numeric = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TfRegime {
    Weak = 0,
    Strong = 1,
    Critical = 2,
    Outside = 3,
}

/// `α, q, γ, β` and the starting time `t0`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TfDynamicsParams {
    pub alpha: f64,
    pub q: f64,
    pub gamma: f64,
    pub beta: f64,
    pub t0: f64,
}

/// Parameters of the discrete algorithm; `eps_n = a * n^-p`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TfDiscreteParams {
    pub alpha: f64,
    pub q: f64,
    pub gamma: f64,
    pub beta: f64,
    pub s: f64,
    pub a: f64,
    pub p: f64,
}

pub struct TfObjective {
    inner: Objective,
}

pub struct TfTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) | Error::Config { .. } | Error::UnknownObjective(_) | Error::InsufficientData(_) => {
                TfStatus::InvalidInput
            }
            Error::DimensionMismatch { .. } => TfStatus::DimensionMismatch,
            Error::NotConverged { .. } => TfStatus::Convergence,
            Error::StepSizeUnderflow { .. } | Error::StepLimit { .. } => TfStatus::Integration,
            Error::NonFinite { .. } | Error::Diverged { .. } => TfStatus::Numeric,
            Error::Io { .. } | Error::Json { .. } => TfStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).expect("no interior nul"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            TfStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(Some(format!("panic: {msg}")));
            TfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TfStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

unsafe fn point_arg(p: *const f64, len: usize, what: &str) -> Result<Point, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(Point::from_column_slice(slice::from_raw_parts(p, len)))
}

unsafe fn write_point(dst: *mut f64, len: usize, src: &Point, what: &str) -> Result<(), Failure> {
    if dst.is_null() {
        return Err(null(what));
    }
    if len != src.len() {
        return Err(Error::DimensionMismatch { expected: src.len(), actual: len }.into());
    }
    slice::from_raw_parts_mut(dst, len).copy_from_slice(src.as_slice());
    Ok(())
}

fn check_len(obj: &Objective, len: usize) -> Result<(), Failure> {
    if obj.dim() == len {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: obj.dim(), actual: len }.into())
    }
}

/// Message of the last failed call on this thread, or null after a success.
/// Valid until the next `tf_*` call on the same thread.
#[no_mangle]
pub extern "C" fn tf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Looks up `id` in the built-in corpus.
///
/// # Safety
/// `id` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_objective_from_corpus(id: *const c_char, out: *mut *mut TfObjective) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let id = str_arg(id, "id")?;
        let obj = Corpus::builtin().get(id)?.clone();
        *out = Box::into_raw(Box::new(TfObjective { inner: obj }));
        Ok(())
    })
}

/// Builds an objective from a JSON definition, e.g.
/// `{"kind":"quadratic","a":[[1,0],[0,0]],"b":[1,0]}`.
///
/// # Safety
/// `id` and `def_json` must be nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_objective_from_json(
    id: *const c_char,
    def_json: *const c_char,
    out: *mut *mut TfObjective,
) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let id = str_arg(id, "id")?;
        let text = str_arg(def_json, "def_json")?;
        let def: ObjectiveDef =
            serde_json::from_str(text).map_err(|e| Failure(TfStatus::InvalidInput, format!("objective JSON: {e}")))?;
        let obj = Objective::from_def(id, def)?;
        *out = Box::into_raw(Box::new(TfObjective { inner: obj }));
        Ok(())
    })
}

/// # Safety
/// `obj` must come from a `tf_objective_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tf_objective_free(obj: *mut TfObjective) {
    if !obj.is_null() {
        drop(Box::from_raw(obj));
    }
}

/// Dimension of `obj`, or 0 for a null handle.
///
/// # Safety
/// `obj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tf_objective_dim(obj: *const TfObjective) -> usize {
    obj.as_ref().map_or(0, |o| o.inner.dim())
}

/// `g(x)` into `value` and, when `grad` is not null, `∇g(x)` into `grad[0..n)`.
///
/// # Safety
/// `x` and `grad` (if not null) must point to `n` doubles; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_objective_eval(
    obj: *const TfObjective,
    x: *const f64,
    n: usize,
    value: *mut f64,
    grad: *mut f64,
) -> TfStatus {
    guard(|| {
        let obj = &as_ref(obj, "obj")?.inner;
        if value.is_null() {
            return Err(null("value"));
        }
        check_len(obj, n)?;
        let (v, g) = obj.eval(&point_arg(x, n, "x")?)?;
        *value = v;
        if !grad.is_null() {
            write_point(grad, n, &g, "grad")?;
        }
        Ok(())
    })
}

/// The minimal-norm minimizer `x*` into `out[0..n)`.
///
/// # Safety
/// `out` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_objective_minimizer(obj: *const TfObjective, out: *mut f64, n: usize) -> TfStatus {
    guard(|| {
        let obj = &as_ref(obj, "obj")?.inner;
        write_point(out, n, obj.minimal_norm_minimizer(), "out")
    })
}

/// Minimizer of `g + (eps/2)|x|^2` into `out[0..n)`.
///
/// # Safety
/// `out` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_objective_tikhonov_point(
    obj: *const TfObjective,
    eps: f64,
    out: *mut f64,
    n: usize,
) -> TfStatus {
    guard(|| {
        let obj = &as_ref(obj, "obj")?.inner;
        check_len(obj, n)?;
        let x = obj.tikhonov_point(eps, TIKHONOV_TOL)?;
        write_point(out, n, &x, "out")
    })
}

/// Regime of the power schedule `a * t^-p` with damping exponent `q`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_classify_regime(
    p: f64,
    q: f64,
    a: f64,
    alpha: f64,
    gamma: f64,
    out: *mut TfRegime,
) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match classify_regime(p, q, a, alpha, gamma)?.regime {
            Regime::Weak => TfRegime::Weak,
            Regime::Strong => TfRegime::Strong,
            Regime::Critical => TfRegime::Critical,
            Regime::Outside => TfRegime::Outside,
        };
        Ok(())
    })
}

/// Integrates from `(x0, v0)` at `params.t0` to `t_end` with `eps = a * t^-p`,
/// sampled at `sample_count` log-spaced times, default tolerances.
///
/// # Safety
/// `params` must be readable, `x0`/`v0` must point to `n` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_integrate(
    obj: *const TfObjective,
    params: *const TfDynamicsParams,
    a: f64,
    p: f64,
    x0: *const f64,
    v0: *const f64,
    n: usize,
    t_end: f64,
    sample_count: usize,
    out: *mut *mut TfTrajectory,
) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let obj = &as_ref(obj, "obj")?.inner;
        let pr = as_ref(params, "params")?;
        check_len(obj, n)?;
        let params = DynamicsParams::new(pr.alpha, pr.q, pr.gamma, pr.beta, pr.t0)?;
        let sched = PowerSchedule::new(a, p)?;
        let sys = Dynamics::new(params, &sched, obj);
        let cfg = IntegratorConfig { sample_count, ..IntegratorConfig::default() };
        let traj = integrate(&sys, &point_arg(x0, n, "x0")?, &point_arg(v0, n, "v0")?, t_end, &cfg)?;
        *out = Box::into_raw(Box::new(TfTrajectory { inner: traj }));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tf_trajectory_len(traj: *const TfTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.samples.len())
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tf_trajectory_dim(traj: *const TfTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.dim())
}

/// Sample `k`: time into `t`, position and velocity into `x[0..n)`, `v[0..n)`.
///
/// # Safety
/// `t` must be writable; `x` and `v` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_trajectory_sample(
    traj: *const TfTrajectory,
    k: usize,
    t: *mut f64,
    x: *mut f64,
    v: *mut f64,
    n: usize,
) -> TfStatus {
    guard(|| {
        let traj = &as_ref(traj, "traj")?.inner;
        let s = traj.samples.get(k).ok_or_else(|| {
            Failure(TfStatus::InvalidInput, format!("sample {k} out of range (len {})", traj.samples.len()))
        })?;
        if t.is_null() {
            return Err(null("t"));
        }
        write_point(x, n, &s.x, "x")?;
        write_point(v, n, &s.v, "v")?;
        *t = s.t;
        Ok(())
    })
}

/// # Safety
/// `traj` must come from `tf_integrate` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tf_trajectory_free(traj: *mut TfTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// One step of the discrete algorithm: `x_next` from `x_prev = x_{n-1}` and `x_curr = x_n`.
///
/// # Safety
/// `params` must be readable; the three arrays must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_discrete_step(
    obj: *const TfObjective,
    params: *const TfDiscreteParams,
    n: u64,
    x_prev: *const f64,
    x_curr: *const f64,
    dim: usize,
    x_next: *mut f64,
) -> TfStatus {
    guard(|| {
        let obj = &as_ref(obj, "obj")?.inner;
        let pr = as_ref(params, "params")?;
        check_len(obj, dim)?;
        let params = DiscreteParams::new(pr.alpha, pr.q, pr.gamma, pr.beta, pr.s, pr.a, pr.p, 1)?;
        let st = IterateState { n, x_prev: point_arg(x_prev, dim, "x_prev")?, x_curr: point_arg(x_curr, dim, "x_curr")? };
        let next = discrete::step(&params, obj, &st)?;
        write_point(x_next, dim, &next, "x_next")
    })
}

/// Runs the full pipeline on a run config (JSON, as accepted by
/// `tikflow run --config`) against the built-in corpus, and returns the run
/// summary as a JSON string to be released with [`tf_string_free`].
/// Nothing is written to disk.
///
/// # Safety
/// `config_json` must be a nul-terminated string; `summary_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_run_config_json(config_json: *const c_char, summary_out: *mut *mut c_char) -> TfStatus {
    guard(|| {
        if summary_out.is_null() {
            return Err(null("summary_out"));
        }
        let text = str_arg(config_json, "config_json")?;
        let cfg: RunConfig = tikflow::experiments::config::parse_json(text)?;
        let outcome = execute(&cfg, &Corpus::builtin())?;
        let json = serde_json::to_string(&outcome.summary)
            .map_err(|e| Failure(TfStatus::Io, format!("summary serialization: {e}")))?;
        *summary_out = CString::new(json).expect("JSON has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
