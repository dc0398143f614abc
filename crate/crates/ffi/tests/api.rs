use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use serde_json::Value;
use sketchop_ffi::*;

fn core_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Takes ownership of a library string.
unsafe fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    sop_string_free(p);
    s
}

fn last_error() -> String {
    unsafe {
        let n = sop_last_error(ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; n + 1];
        assert_eq!(sop_last_error(buf.as_mut_ptr(), buf.len()), n);
        CStr::from_ptr(buf.as_ptr()).to_str().unwrap().to_string()
    }
}

fn frames(json: String) -> Vec<Value> {
    serde_json::from_str::<Value>(&json).unwrap().as_array().unwrap().clone()
}

fn new_session(config: Option<&str>) -> *mut SopSession {
    let path = c(core_dir().join("scenes/room.json").to_str().unwrap());
    let cfg = config.map(c);
    let mut s = ptr::null_mut();
    let status = unsafe { sop_session_new(path.as_ptr(), cfg.as_ref().map_or(ptr::null(), |c| c.as_ptr()), &mut s) };
    assert_eq!(status, SopStatus::Ok, "{}", last_error());
    assert!(!s.is_null());
    s
}

unsafe fn call(f: unsafe extern "C" fn(*mut SopSession, *mut *mut c_char) -> SopStatus, s: *mut SopSession) -> Vec<Value> {
    let mut out = ptr::null_mut();
    assert_eq!(f(s, &mut out), SopStatus::Ok);
    frames(take(out))
}

unsafe fn send(s: *mut SopSession, text: &str) -> Vec<Value> {
    let t = c(text);
    let mut out = ptr::null_mut();
    assert_eq!(sop_session_handle(s, t.as_ptr(), &mut out), SopStatus::Ok);
    frames(take(out))
}

fn phase(s: *mut SopSession) -> SopPhase {
    let mut p = SopPhase::Failed;
    assert_eq!(unsafe { sop_session_phase(s, &mut p) }, SopStatus::Ok);
    p
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sop_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn session_round_trip() {
    let s = new_session(Some(r#"{"auto_confirm": false}"#));
    unsafe {
        assert_eq!(phase(s), SopPhase::Idle);
        let hello = call(sop_session_connect, s);
        assert_eq!(hello[0]["type"], "hello");
        assert_eq!(hello[1]["type"], "observation");
        assert_eq!(phase(s), SopPhase::AwaitingSketch);

        let out = send(s, "not json");
        assert_eq!(out.len(), 1);
        assert_eq!(out[0]["type"], "error");
        assert_eq!(out[0]["payload"]["code"], "malformed");

        let out = send(s, r#"{"seq": 1, "type": "confirm", "payload": {"accept": true}}"#);
        assert_eq!(out[0]["payload"]["code"], "bad_phase");
        assert_eq!(out[0]["payload"]["in_reply_to"], 1);
        assert_eq!(phase(s), SopPhase::AwaitingSketch);

        // A circle around the middle of the view, on the frame just sent.
        let frame_id = hello[1]["payload"]["frame_id"].clone();
        let pts: Vec<Value> = (0..=40)
            .map(|i| {
                let a = i as f64 / 40.0 * std::f64::consts::TAU;
                serde_json::json!([160.0 + 40.0 * a.cos(), 150.0 + 30.0 * a.sin(), i as f64 * 20.0])
            })
            .collect();
        let submit = serde_json::json!({"seq": 2, "type": "sketch_submit", "payload": {"frame_id": frame_id, "strokes": [pts], "label": null}});
        let out = send(s, &submit.to_string());
        assert!(out.iter().all(|f| f["type"] != "error"), "{out:?}");
        assert_eq!(phase(s), SopPhase::Interpreting);
        let out = call(sop_session_run_jobs, s);
        assert!(out.iter().any(|f| f["type"] == "interpretation" || f["type"] == "error"), "{out:?}");
        assert!(matches!(phase(s), SopPhase::AwaitingConfirm | SopPhase::AwaitingSketch));

        let _ = call(sop_session_tick, s);
        let out = call(sop_session_close, s);
        assert!(out.iter().any(|f| f["type"] == "status"), "{out:?}");
        assert_eq!(phase(s), SopPhase::Done);
        sop_session_free(s);
    }
}

#[test]
fn null_and_bad_arguments_report_errors() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(sop_session_new(ptr::null(), ptr::null(), &mut s), SopStatus::NullArgument);
        assert!(s.is_null());
        assert!(last_error().contains("scene_path"));

        let missing = c("/nonexistent/scene.json");
        assert_eq!(sop_session_new(missing.as_ptr(), ptr::null(), &mut s), SopStatus::Io);
        assert!(last_error().contains("/nonexistent/scene.json"));

        let path = c(core_dir().join("scenes/room.json").to_str().unwrap());
        let bad = c(r#"{"observation_hz": "fast"}"#);
        assert_eq!(sop_session_new(path.as_ptr(), bad.as_ptr(), &mut s), SopStatus::InvalidArgument);
        assert!(last_error().starts_with("config:"));

        assert_eq!(sop_session_new(path.as_ptr(), ptr::null(), ptr::null_mut()), SopStatus::NullArgument);

        let mut out = ptr::null_mut();
        assert_eq!(sop_session_tick(ptr::null_mut(), &mut out), SopStatus::NullArgument);
        assert!(out.is_null());
        let mut p = SopPhase::Idle;
        assert_eq!(sop_session_phase(ptr::null(), &mut p), SopStatus::NullArgument);

        let invalid = [0xffu8 as c_char, 0];
        let s = new_session(None);
        assert_eq!(sop_session_handle(s, invalid.as_ptr(), &mut out), SopStatus::InvalidUtf8);
        // Success clears the message.
        let _ = call(sop_session_connect, s);
        assert_eq!(sop_last_error(ptr::null_mut(), 0), 0);
        sop_session_free(s);

        sop_session_free(ptr::null_mut());
        sop_classifier_free(ptr::null_mut());
        sop_string_free(ptr::null_mut());
    }
}

#[test]
fn last_error_truncates_to_the_buffer() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(sop_session_new(ptr::null(), ptr::null(), &mut s), SopStatus::NullArgument);
        let full = last_error();
        let mut buf = [1 as c_char; 6];
        assert_eq!(sop_last_error(buf.as_mut_ptr(), buf.len()), full.len());
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), &full[..5]);
    }
}

#[test]
fn classify_sketches() {
    unsafe {
        let mut cls = ptr::null_mut();
        assert_eq!(sop_classifier_new(ptr::null(), &mut cls), SopStatus::Ok);
        let line: Vec<Value> = (0..=40)
            .map(|i| {
                let t = i as f64 / 40.0;
                serde_json::json!([100.0 + 300.0 * t, 300.0 + 40.0 * (t * 5.0).sin(), i as f64 * 10.0])
            })
            .collect();
        let sketch = c(&serde_json::json!({"frame_id": "1", "strokes": [line], "label": null}).to_string());
        let mut out = ptr::null_mut();
        assert_eq!(sop_classify(cls, sketch.as_ptr(), &mut out), SopStatus::Ok, "{}", last_error());
        let v: Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["shape"], "path");

        let bad = c(r#"{"frame_id": "1", "strokes": []}"#);
        let status = sop_classify(cls, bad.as_ptr(), &mut out);
        assert!(matches!(status, SopStatus::InvalidArgument | SopStatus::BadSketch));
        assert!(out.is_null());
        assert!(!last_error().is_empty());
        sop_classifier_free(cls);
    }
}

#[test]
fn headless_report() {
    let dir = tempfile::tempdir().unwrap();
    let scene = core_dir().join("scenes/room.json");
    let line = format!(
        r#"{{"name": "p", "family": "pick", "scene": "{}", "sketch": {{"circle_around": {{"object": "cube"}}}}, "seed": 1, "expect": {{"task": "pick", "shape": "circle"}}}}"#,
        scene.display()
    );
    let path = dir.path().join("one.jsonl");
    std::fs::write(&path, line).unwrap();
    let p = c(path.to_str().unwrap());
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(sop_run_headless(p.as_ptr(), &mut out), SopStatus::Ok, "{}", last_error());
        let v: Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["tsr"]["counts"]["pick"]["correct"], 1);
        let missing = c("/nonexistent.jsonl");
        assert_eq!(sop_run_headless(missing.as_ptr(), &mut out), SopStatus::Io);
    }
}
