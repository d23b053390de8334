//! C interface to the resdac simulator.
//!
//! Every function returns a [`ResdacStatus`]; on anything other than
//! `RESDAC_STATUS_OK` a message is available from
//! [`resdac_last_error_message`] on the same thread. Configurations and
//! traces are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use resdac::analysis::{
    bounds_report, epsilon_bound, verify_transitions, AnalysisError, BoundReport,
};
use resdac::config::{load_config, parse_config, ConfigError, RunConfig};
use resdac::consensus::ConsensusError;
use resdac::graph::AgentId;
use resdac::output::write_trace_files;
use resdac::{presets, SimulationTrace};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResdacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidConfig = 5,
    Simulation = 6,
    Analysis = 7,
    OutOfRange = 8,
    Panic = 9,
}

/// Opaque run configuration.
pub struct ResdacConfig(RunConfig);

/// Opaque simulation result together with the configuration that produced it.
pub struct ResdacTrace {
    config: RunConfig,
    trace: SimulationTrace,
}

/// Bound evaluation of a trace.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResdacBounds {
    pub n: usize,
    pub horizon: u64,
    pub theta: f64,
    pub alpha: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub omega_infinity: f64,
    pub e1: f64,
    pub y1: f64,
    pub degenerate: bool,
    pub steady_state_start: u64,
    pub max_steady_tracking_error: f64,
    pub envelope_violations: usize,
    pub max_offset_drift: f64,
}

impl From<&BoundReport> for ResdacBounds {
    fn from(r: &BoundReport) -> Self {
        Self {
            n: r.n,
            horizon: r.horizon,
            theta: r.theta,
            alpha: r.alpha,
            eta: r.eta,
            epsilon: r.epsilon,
            omega_infinity: r.omega_infinity,
            e1: r.e1,
            y1: r.y1,
            degenerate: r.degenerate,
            steady_state_start: r.steady_state_start,
            max_steady_tracking_error: r.max_steady_tracking_error,
            envelope_violations: r.envelope_violations,
            max_offset_drift: r.max_offset_drift,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn resdac_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

struct Failure(ResdacStatus, String);

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let status = match e {
            ConfigError::Io { .. } => ResdacStatus::Io,
            ConfigError::Parse(_) => ResdacStatus::Parse,
            ConfigError::Invalid { .. } => ResdacStatus::InvalidConfig,
        };
        Failure(status, e.to_string())
    }
}

impl From<ConsensusError> for Failure {
    fn from(e: ConsensusError) -> Self {
        let status = match e {
            ConsensusError::Config(_) => ResdacStatus::InvalidConfig,
            _ => ResdacStatus::Simulation,
        };
        Failure(status, e.to_string())
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure(ResdacStatus::Analysis, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(ResdacStatus::Io, e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> ResdacStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ResdacStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            ResdacStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ResdacStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(ResdacStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit_config(out: *mut *mut ResdacConfig, cfg: RunConfig) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(ResdacConfig(cfg))))
}

/// Loads a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn resdac_config_load(
    path: *const c_char,
    out: *mut *mut ResdacConfig,
) -> ResdacStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        emit_config(out, load_config(Path::new(path))?)
    })
}

/// Parses configuration text. Relative `tabulated_file` paths resolve
/// against `base_dir`, or the working directory when it is NULL.
///
/// # Safety
/// `text` and a non-NULL `base_dir` must be NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn resdac_config_from_str(
    text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut ResdacConfig,
) -> ResdacStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let base = if base_dir.is_null() {
            "."
        } else {
            str_arg(base_dir, "base_dir")?
        };
        emit_config(out, parse_config(text, Path::new(base))?)
    })
}

/// Loads a bundled scenario (`scenario1`, `scenario2`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn resdac_config_preset(
    name: *const c_char,
    out: *mut *mut ResdacConfig,
) -> ResdacStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let cfg = presets::by_name(name).ok_or_else(|| {
            Failure(ResdacStatus::OutOfRange, format!("unknown preset `{name}`"))
        })??;
        emit_config(out, cfg)
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn resdac_config_set_horizon(
    config: *mut ResdacConfig,
    horizon: u64,
) -> ResdacStatus {
    guard(|| Ok(handle_mut(config, "config")?.0.set_horizon(horizon)?))
}

/// Replaces the run seed; noise seeds that were derived from it follow.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn resdac_config_set_seed(
    config: *mut ResdacConfig,
    seed: u64,
) -> ResdacStatus {
    guard(|| {
        handle_mut(config, "config")?.0.set_seed(seed);
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn resdac_config_free(config: *mut ResdacConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the protocol. The configuration handle stays owned by the caller.
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn resdac_run(
    config: *const ResdacConfig,
    out: *mut *mut ResdacTrace,
) -> ResdacStatus {
    guard(|| {
        let config = handle(config, "config")?.0.clone();
        let trace = resdac::run(&config.simulation)?;
        write_out(out, Box::into_raw(Box::new(ResdacTrace { config, trace })))
    })
}

/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn resdac_trace_horizon(
    trace: *const ResdacTrace,
    out: *mut u64,
) -> ResdacStatus {
    guard(|| write_out(out, handle(trace, "trace")?.trace.horizon))
}

/// Number of good (trusted plus ordinary) agents.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn resdac_trace_good_count(
    trace: *const ResdacTrace,
    out: *mut usize,
) -> ResdacStatus {
    guard(|| write_out(out, handle(trace, "trace")?.trace.topology.good_count()))
}

/// State `x_agent(t)` for `1 <= t <= horizon` and a one-based good agent id.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn resdac_trace_state(
    trace: *const ResdacTrace,
    t: u64,
    agent: usize,
    out: *mut f64,
) -> ResdacStatus {
    guard(|| {
        let trace = &handle(trace, "trace")?.trace;
        if t == 0 || t > trace.horizon {
            return Err(Failure(
                ResdacStatus::OutOfRange,
                format!("round {t} outside 1..={}", trace.horizon),
            ));
        }
        if agent == 0 || agent > trace.topology.good_count() {
            return Err(Failure(
                ResdacStatus::OutOfRange,
                format!("agent {agent} is not a good agent"),
            ));
        }
        write_out(out, trace.state(t, AgentId(agent)))
    })
}

/// Trusted reference average at `0 <= t <= horizon`.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn resdac_trace_rbar_trusted(
    trace: *const ResdacTrace,
    t: u64,
    out: *mut f64,
) -> ResdacStatus {
    guard(|| {
        let trace = &handle(trace, "trace")?.trace;
        if t > trace.horizon {
            return Err(Failure(
                ResdacStatus::OutOfRange,
                format!("round {t} outside 0..={}", trace.horizon),
            ));
        }
        write_out(out, trace.trusted_reference_mean(t))
    })
}

/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn resdac_trace_bounds(
    trace: *const ResdacTrace,
    out: *mut ResdacBounds,
) -> ResdacStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        let report = bounds_report(&t.config.simulation, &t.trace)?;
        write_out(out, ResdacBounds::from(&report))
    })
}

/// Reconstructs every round's transition matrix and stores the number of
/// rounds that fail any check in `failed_rounds`.
///
/// # Safety
/// `trace` must be a live handle and `failed_rounds` writable.
#[no_mangle]
pub unsafe extern "C" fn resdac_trace_check_transitions(
    trace: *const ResdacTrace,
    failed_rounds: *mut usize,
) -> ResdacStatus {
    guard(|| {
        let checked = verify_transitions(&handle(trace, "trace")?.trace)?;
        write_out(
            failed_rounds,
            checked.iter().filter(|(_, r)| !r.all_passed()).count(),
        )
    })
}

/// Writes the CSV, bound and optional matrix/plot files into `dir`.
///
/// # Safety
/// `trace` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn resdac_trace_write(
    trace: *const ResdacTrace,
    dir: *const c_char,
    emit_matrices: bool,
    emit_plots: bool,
) -> ResdacStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        let dir = str_arg(dir, "dir")?;
        let transitions = verify_transitions(&t.trace)?;
        let bounds = bounds_report(&t.config.simulation, &t.trace)?;
        write_trace_files(
            Path::new(dir),
            &t.trace,
            &bounds,
            &transitions,
            emit_matrices,
            emit_plots,
        )?;
        Ok(())
    })
}

/// # Safety
/// `trace` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn resdac_trace_free(trace: *mut ResdacTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Asymptotic tracking bound for `n` good agents.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn resdac_epsilon_bound(
    n: usize,
    theta: f64,
    alpha: f64,
    xbar_trusted_1: f64,
    rbar_trusted_0: f64,
    out: *mut f64,
) -> ResdacStatus {
    guard(|| {
        write_out(
            out,
            epsilon_bound(n, theta, alpha, xbar_trusted_1, rbar_trusted_0)?,
        )
    })
}
