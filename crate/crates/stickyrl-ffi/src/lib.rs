//! C interface to the toy environments, the sticky-action wrapper and
//! Welch's t-test. Every call returns an `SrlStatus`; on failure
//! `srl_last_error` describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stickyrl::env::{make_env_str, ActionId, Environment, Observation};
use stickyrl::error::{EnvError, StatsError};
use stickyrl::eval::welch_t_test;
use stickyrl::wrappers::{build_stack, WrapperSpec};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidAction = 3,
    StepAfterTerminal = 4,
    BufferTooSmall = 5,
    Degenerate = 6,
    Panic = 7,
}

/// Opaque environment handle.
pub struct SrlEnv {
    env: Option<Box<dyn Environment>>,
    last: Vec<i32>,
}

/// Outcome of one decision.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SrlStep {
    pub reward: f64,
    pub score_delta: i64,
    pub frames_consumed: u32,
    /// -1 when the game has no lives counter.
    pub lives: i32,
    pub terminal: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SrlWelch {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let msg = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn env_status(e: EnvError) -> SrlStatus {
    let s = match e {
        EnvError::InvalidAction { .. } => SrlStatus::InvalidAction,
        EnvError::StepAfterTerminal => SrlStatus::StepAfterTerminal,
        _ => SrlStatus::InvalidArgument,
    };
    set_error(e);
    s
}

fn guard(f: impl FnOnce() -> SrlStatus) -> SrlStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic");
        SrlStatus::Panic
    })
}

fn handle<'a>(env: *mut SrlEnv) -> Result<(&'a mut Vec<i32>, &'a mut Box<dyn Environment>), SrlStatus> {
    // SAFETY: callers pass a handle from srl_env_new that has not been freed.
    let h = unsafe { env.as_mut() }.ok_or_else(|| {
        set_error("null environment handle");
        SrlStatus::NullPointer
    })?;
    let SrlEnv { env, last } = h;
    let env = env.as_mut().ok_or(SrlStatus::Panic)?;
    Ok((last, env))
}

fn keep(last: &mut Vec<i32>, obs: &Observation) {
    last.clear();
    last.extend_from_slice(&obs.payload);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn srl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread. Valid until the next
/// call on this thread.
#[no_mangle]
pub extern "C" fn srl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create an environment from a "name:mode:difficulty" string.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn srl_env_new(spec: *const c_char, out: *mut *mut SrlEnv) -> SrlStatus {
    guard(|| {
        if spec.is_null() || out.is_null() {
            set_error("null argument");
            return SrlStatus::NullPointer;
        }
        let Ok(spec) = CStr::from_ptr(spec).to_str() else {
            set_error("spec is not UTF-8");
            return SrlStatus::InvalidArgument;
        };
        match make_env_str(spec) {
            Ok(env) => {
                *out = Box::into_raw(Box::new(SrlEnv {
                    env: Some(env),
                    last: Vec::new(),
                }));
                SrlStatus::Ok
            }
            Err(e) => {
                *out = ptr::null_mut();
                env_status(e)
            }
        }
    })
}

/// Wrap the environment with sticky actions: each frame repeats the previous
/// executed action with probability `varsigma`, and each decision lasts
/// `frame_skip` frames.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn srl_env_wrap_sticky(env: *mut SrlEnv, varsigma: f64, frame_skip: u32, seed: u64) -> SrlStatus {
    guard(|| {
        let Some(h) = env.as_mut() else {
            set_error("null environment handle");
            return SrlStatus::NullPointer;
        };
        let spec = WrapperSpec::Sticky { varsigma, frame_skip };
        if let Err(e) = spec.validate() {
            return env_status(e);
        }
        let Some(inner) = h.env.take() else {
            return SrlStatus::Panic;
        };
        match build_stack(inner, &[spec], seed) {
            Ok(wrapped) => {
                h.env = Some(wrapped);
                SrlStatus::Ok
            }
            Err(e) => {
                set_error(e);
                SrlStatus::Panic
            }
        }
    })
}

/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srl_env_action_count(env: *const SrlEnv, out: *mut usize) -> SrlStatus {
    guard(|| match (env.as_ref().and_then(|h| h.env.as_ref()), out.is_null()) {
        (Some(e), false) => {
            *out = e.action_count();
            SrlStatus::Ok
        }
        _ => {
            set_error("null argument");
            SrlStatus::NullPointer
        }
    })
}

/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srl_env_observation_len(env: *const SrlEnv, out: *mut usize) -> SrlStatus {
    guard(|| match (env.as_ref().and_then(|h| h.env.as_ref()), out.is_null()) {
        (Some(e), false) => {
            *out = e.observation_len();
            SrlStatus::Ok
        }
        _ => {
            set_error("null argument");
            SrlStatus::NullPointer
        }
    })
}

/// Start a new episode.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn srl_env_reset(env: *mut SrlEnv) -> SrlStatus {
    guard(|| {
        let (last, e) = match handle(env) {
            Ok(x) => x,
            Err(s) => return s,
        };
        match e.reset() {
            Ok(obs) => {
                keep(last, &obs);
                SrlStatus::Ok
            }
            Err(e) => env_status(e),
        }
    })
}

/// Take one decision.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srl_env_step(env: *mut SrlEnv, action: usize, out: *mut SrlStep) -> SrlStatus {
    guard(|| {
        if out.is_null() {
            set_error("null argument");
            return SrlStatus::NullPointer;
        }
        let (last, e) = match handle(env) {
            Ok(x) => x,
            Err(s) => return s,
        };
        match e.step(ActionId(action)) {
            Ok(r) => {
                keep(last, &r.observation);
                *out = SrlStep {
                    reward: r.reward,
                    score_delta: r.observation.score_delta,
                    frames_consumed: r.frames_consumed,
                    lives: r.observation.lives.map_or(-1, |l| l as i32),
                    terminal: r.terminal,
                };
                SrlStatus::Ok
            }
            Err(e) => env_status(e),
        }
    })
}

/// Copy the latest observation payload into `buf`. `len` receives the
/// payload length even when `cap` is too small.
///
/// # Safety
/// `env` must be a live handle, `buf` valid for `cap` writes and `len`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn srl_env_observation(
    env: *const SrlEnv,
    buf: *mut i32,
    cap: usize,
    len: *mut usize,
) -> SrlStatus {
    guard(|| {
        let Some(h) = env.as_ref() else {
            set_error("null environment handle");
            return SrlStatus::NullPointer;
        };
        if len.is_null() || (buf.is_null() && cap > 0) {
            set_error("null argument");
            return SrlStatus::NullPointer;
        }
        *len = h.last.len();
        if cap < h.last.len() {
            set_error(format!("buffer holds {cap} values, payload has {}", h.last.len()));
            return SrlStatus::BufferTooSmall;
        }
        if !h.last.is_empty() {
            ptr::copy_nonoverlapping(h.last.as_ptr(), buf, h.last.len());
        }
        SrlStatus::Ok
    })
}

/// Release a handle. Null is accepted.
///
/// # Safety
/// `env` must come from `srl_env_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srl_env_free(env: *mut SrlEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Welch's unequal-variance t-test with a two-sided p-value.
///
/// # Safety
/// `a` and `b` must be valid for `na` and `nb` reads, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srl_welch(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut SrlWelch,
) -> SrlStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            set_error("null argument");
            return SrlStatus::NullPointer;
        }
        let a = std::slice::from_raw_parts(a, na);
        let b = std::slice::from_raw_parts(b, nb);
        match welch_t_test(a, b) {
            Ok(w) => {
                *out = SrlWelch {
                    t: w.t,
                    df: w.df,
                    p: w.p,
                };
                SrlStatus::Ok
            }
            Err(e) => {
                set_error(&e);
                match e {
                    StatsError::DegenerateVariance => SrlStatus::Degenerate,
                    _ => SrlStatus::InvalidArgument,
                }
            }
        }
    })
}
