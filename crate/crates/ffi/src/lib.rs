//! C interface to the sketch teleoperation library.
//!
//! Every fallible call returns a [`SopStatus`]. On failure the message is kept
//! per thread and can be read with [`sop_last_error`]. Strings handed out by
//! the library are NUL-terminated UTF-8 and must be released with
//! [`sop_string_free`]. Handles are opaque and released with their `_free`
//! function; passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sketchop::classify::{Classifier, ClassifierConfig};
use sketchop::planner::PlannerConfig;
use sketchop::scene::Scene;
use sketchop::service::{run_headless, Phase, ServiceConfig, Session, WireMessage};
use sketchop::SketchSet;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SopStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    BadSketch = 5,
    Internal = 6,
}

/// Session phase as reported by [`sop_session_phase`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SopPhase {
    Idle = 0,
    AwaitingSketch = 1,
    Interpreting = 2,
    AwaitingConfirm = 3,
    Executing = 4,
    AwaitingFeedback = 5,
    Done = 6,
    Failed = 7,
}

impl From<Phase> for SopPhase {
    fn from(p: Phase) -> Self {
        match p {
            Phase::Idle => SopPhase::Idle,
            Phase::AwaitingSketch => SopPhase::AwaitingSketch,
            Phase::Interpreting => SopPhase::Interpreting,
            Phase::AwaitingConfirm => SopPhase::AwaitingConfirm,
            Phase::Executing => SopPhase::Executing,
            Phase::AwaitingFeedback => SopPhase::AwaitingFeedback,
            Phase::Done => SopPhase::Done,
            Phase::Failed => SopPhase::Failed,
        }
    }
}

/// One teleoperation session over a simulated scene.
pub struct SopSession {
    inner: Session,
}

/// A shape classifier with fixed thresholds.
pub struct SopClassifier {
    inner: Classifier,
}

struct Failure(SopStatus, String);

impl Failure {
    fn new(status: SopStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SopStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SopStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            SopStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(SopStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(SopStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn out_ptr<'a, T>(out: *mut *mut T, what: &str) -> Result<&'a mut *mut T, Failure> {
    if out.is_null() {
        return Err(Failure::new(SopStatus::NullArgument, format!("{what} is NULL")));
    }
    *out = ptr::null_mut();
    Ok(&mut *out)
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn frames_json(frames: &[WireMessage]) -> String {
    let parts: Vec<String> = frames.iter().map(WireMessage::to_json).collect();
    format!("[{}]", parts.join(","))
}

fn config_from(json: Option<&str>) -> Result<ServiceConfig, Failure> {
    match json {
        None => Ok(ServiceConfig::default()),
        Some(j) => serde_json::from_str(j).map_err(|e| Failure::new(SopStatus::InvalidArgument, format!("config: {e}"))),
    }
}

unsafe fn session<'a>(s: *mut SopSession) -> Result<&'a mut Session, Failure> {
    s.as_mut()
        .map(|s| &mut s.inner)
        .ok_or_else(|| Failure::new(SopStatus::NullArgument, "session is NULL"))
}

/// Library version as a static string. Do not free.
#[no_mangle]
pub extern "C" fn sop_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`, truncating to
/// `len - 1` bytes plus NUL. Returns the full message length without the NUL,
/// or 0 when the last call succeeded. `buf` may be NULL to query the length.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sop_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sop_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a scene file and opens a session on it. `config_json` may be NULL
/// for defaults; otherwise it is a service configuration object.
///
/// # Safety
/// String arguments must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sop_session_new(
    scene_path: *const c_char,
    config_json: *const c_char,
    out: *mut *mut SopSession,
) -> SopStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = text(scene_path, "scene_path")?;
        let cfg = config_from(optional_text(config_json, "config_json")?)?;
        let scene = Scene::load(Path::new(path)).map_err(|e| Failure::new(SopStatus::Io, format!("{path}: {e}")))?;
        let backend = cfg.backend();
        *out = Box::into_raw(Box::new(SopSession {
            inner: Session::new(scene, cfg, backend),
        }));
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn sop_session_free(s: *mut SopSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

unsafe fn session_call(
    s: *mut SopSession,
    frames: *mut *mut c_char,
    f: impl FnOnce(&mut Session) -> Vec<WireMessage>,
) -> SopStatus {
    guard(|| {
        let frames = out_ptr(frames, "frames_json")?;
        let s = session(s)?;
        *frames = into_c(frames_json(&f(s)));
        Ok(())
    })
}

/// Starts the session. `frames_json` receives a JSON array of the frames
/// to send to the client.
///
/// # Safety
/// `s` must be a live session handle and `frames_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sop_session_connect(s: *mut SopSession, frames_json: *mut *mut c_char) -> SopStatus {
    session_call(s, frames_json, Session::connect)
}

/// Handles one client frame given as protocol JSON text. Malformed or
/// out-of-phase frames are answered with error frames, not a failing status.
///
/// # Safety
/// `s` must be a live session handle, `frame` NUL-terminated and
/// `frames_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sop_session_handle(
    s: *mut SopSession,
    frame: *const c_char,
    frames_json: *mut *mut c_char,
) -> SopStatus {
    let frame = match guard_text(frame, "frame") {
        Ok(t) => t,
        Err(status) => return status,
    };
    session_call(s, frames_json, |s| s.handle_text(frame))
}

unsafe fn guard_text<'a>(p: *const c_char, what: &str) -> Result<&'a str, SopStatus> {
    let mut out = "";
    let status = guard(|| {
        out = text(p, what)?;
        Ok(())
    });
    if status == SopStatus::Ok {
        Ok(out)
    } else {
        Err(status)
    }
}

/// Runs pending interpretation work.
///
/// # Safety
/// `s` must be a live session handle and `frames_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sop_session_run_jobs(s: *mut SopSession, frames_json: *mut *mut c_char) -> SopStatus {
    session_call(s, frames_json, Session::run_jobs)
}

/// Advances the simulation by one control tick.
///
/// # Safety
/// `s` must be a live session handle and `frames_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sop_session_tick(s: *mut SopSession, frames_json: *mut *mut c_char) -> SopStatus {
    session_call(s, frames_json, Session::tick)
}

/// Ends the session; later frames are rejected.
///
/// # Safety
/// `s` must be a live session handle and `frames_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sop_session_close(s: *mut SopSession, frames_json: *mut *mut c_char) -> SopStatus {
    session_call(s, frames_json, Session::close)
}

/// # Safety
/// `s` must be a live session handle and `phase` writable.
#[no_mangle]
pub unsafe extern "C" fn sop_session_phase(s: *const SopSession, phase: *mut SopPhase) -> SopStatus {
    guard(|| {
        let s = s
            .as_ref()
            .ok_or_else(|| Failure::new(SopStatus::NullArgument, "session is NULL"))?;
        let phase = phase
            .as_mut()
            .ok_or_else(|| Failure::new(SopStatus::NullArgument, "phase is NULL"))?;
        *phase = s.inner.phase().into();
        Ok(())
    })
}

/// Creates a classifier. `config_json` may be NULL for default thresholds.
///
/// # Safety
/// `config_json` must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sop_classifier_new(config_json: *const c_char, out: *mut *mut SopClassifier) -> SopStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg: ClassifierConfig = match optional_text(config_json, "config_json")? {
            None => ClassifierConfig::default(),
            Some(j) => serde_json::from_str(j).map_err(|e| Failure::new(SopStatus::InvalidArgument, format!("config: {e}")))?,
        };
        *out = Box::into_raw(Box::new(SopClassifier {
            inner: Classifier::new(cfg),
        }));
        Ok(())
    })
}

/// # Safety
/// `c` must be NULL or a live classifier handle.
#[no_mangle]
pub unsafe extern "C" fn sop_classifier_free(c: *mut SopClassifier) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Classifies a sketch given as the `sketch_submit` payload JSON.
/// `classification_json` receives `{"shape": ..., "params": {...}}`.
///
/// # Safety
/// `c` must be a live classifier, `sketch_json` NUL-terminated and
/// `classification_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sop_classify(
    c: *const SopClassifier,
    sketch_json: *const c_char,
    classification_json: *mut *mut c_char,
) -> SopStatus {
    guard(|| {
        let out = out_ptr(classification_json, "classification_json")?;
        let c = c
            .as_ref()
            .ok_or_else(|| Failure::new(SopStatus::NullArgument, "classifier is NULL"))?;
        let sketch: SketchSet = serde_json::from_str(text(sketch_json, "sketch_json")?)
            .map_err(|e| Failure::new(SopStatus::InvalidArgument, format!("sketch: {e}")))?;
        let result = c
            .inner
            .classify(&sketch)
            .map_err(|e| Failure::new(SopStatus::BadSketch, e.to_string()))?;
        *out = into_c(serde_json::to_string(&result).map_err(|e| Failure::new(SopStatus::Internal, e.to_string()))?);
        Ok(())
    })
}

/// Runs a headless scenario file with default planner settings and returns
/// the evaluation report as JSON.
///
/// # Safety
/// `scenarios_path` must be NUL-terminated and `report_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sop_run_headless(scenarios_path: *const c_char, report_json: *mut *mut c_char) -> SopStatus {
    guard(|| {
        let out = out_ptr(report_json, "report_json")?;
        let path = text(scenarios_path, "scenarios_path")?;
        let report = run_headless(Path::new(path), &PlannerConfig::default())
            .map_err(|e| Failure::new(SopStatus::Io, e.to_string()))?;
        *out = into_c(serde_json::to_string(&report).map_err(|e| Failure::new(SopStatus::Internal, e.to_string()))?);
        Ok(())
    })
}
