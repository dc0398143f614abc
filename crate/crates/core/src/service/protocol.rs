//! JSON messages exchanged with the operator console over a websocket. Every
//! text frame is one [`WireMessage`]: `{"seq": n, "type": "...", "payload": {...}}`.

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::session::Phase;
use crate::interpret::{InterpretationResult, TaskKind};
use crate::planner::{Stick, TaskOutcome, TaskPlan};
use crate::scene::{Intrinsics, ObservationFrame, Pose, RobotState};
use crate::sketch::{FrameId, SketchSet};

pub const PROTOCOL_VERSION: u32 = 1;

/// Message types sent by the server.
pub const SERVER_TYPES: [&str; 7] = [
    "hello",
    "observation",
    "interpretation",
    "status",
    "feedback_request",
    "task_result",
    "error",
];

/// Message types sent by the client.
pub const CLIENT_TYPES: [&str; 5] = ["sketch_submit", "confirm", "joystick", "grasp", "release"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    /// Strictly increasing per direction.
    pub seq: u64,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Body {
    Hello(Hello),
    Observation(Box<Observation>),
    Interpretation(Box<InterpretationMsg>),
    Status(Status),
    FeedbackRequest(FeedbackRequest),
    TaskResult(Box<TaskResult>),
    Error(ErrorMsg),
    SketchSubmit(SketchSet),
    Confirm(Confirm),
    Joystick(Joystick),
    Grasp(Empty),
    Release(Empty),
}

impl Body {
    pub fn type_name(&self) -> &'static str {
        match self {
            Body::Hello(_) => "hello",
            Body::Observation(_) => "observation",
            Body::Interpretation(_) => "interpretation",
            Body::Status(_) => "status",
            Body::FeedbackRequest(_) => "feedback_request",
            Body::TaskResult(_) => "task_result",
            Body::Error(_) => "error",
            Body::SketchSubmit(_) => "sketch_submit",
            Body::Confirm(_) => "confirm",
            Body::Joystick(_) => "joystick",
            Body::Grasp(_) => "grasp",
            Body::Release(_) => "release",
        }
    }

    pub fn is_client(&self) -> bool {
        CLIENT_TYPES.contains(&self.type_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Empty {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub protocol_version: u32,
    pub phase: Phase,
    pub auto_confirm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub frame_id: FrameId,
    pub phase: Phase,
    pub intrinsics: Intrinsics,
    /// Camera-to-world pose; camera axes are x right, y down, z forward.
    pub camera_pose: Pose,
    pub robot_state: RobotState,
    pub image_png_base64: String,
}

impl Observation {
    pub fn from_frame(frame: &ObservationFrame, phase: Phase) -> Self {
        Self {
            frame_id: frame.frame_id,
            phase,
            intrinsics: frame.camera.intrinsics,
            camera_pose: frame.camera.pose,
            robot_state: frame.robot_state,
            image_png_base64: base64::engine::general_purpose::STANDARD.encode(frame.rgb.to_png()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationMsg {
    pub frame_id: FrameId,
    #[serde(flatten)]
    pub result: InterpretationResult,
    /// False when the server runs with auto-confirm and starts at once.
    pub needs_confirm: bool,
    pub plan: TaskPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive_name: Option<String>,
    /// Simulated seconds since execution started.
    pub sim_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub point: usize,
    pub primitive: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: TaskKind,
    #[serde(flatten)]
    pub outcome: TaskOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorMsg {
    pub code: String,
    pub message: String,
    /// Seq of the client message this rejects; absent for failures that are
    /// not a rejection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_reply_to: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Confirm {
    pub accept: bool,
}

/// Left stick y moves along the hand camera's depth axis; the right stick
/// moves in its image plane. `done` ends the current adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Joystick {
    #[serde(default)]
    pub left: Stick,
    #[serde(default)]
    pub right: Stick,
    #[serde(default)]
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("not a JSON message: {0}")]
    Malformed(String),
    #[error("unknown message type {0:?}")]
    UnknownType(String),
    #[error("bad {kind} payload: {msg}")]
    BadPayload { kind: String, msg: String },
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::Malformed(_) => "malformed",
            ProtocolError::UnknownType(_) => "unknown_type",
            ProtocolError::BadPayload { .. } => "bad_payload",
        }
    }
}

#[derive(Deserialize)]
struct RawWire {
    seq: u64,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    payload: Option<serde_json::Value>,
}

/// Parses one text frame. The seq is returned alongside errors when it
/// could be read, so the rejection can name it.
pub fn parse_message(text: &str) -> Result<WireMessage, (Option<u64>, ProtocolError)> {
    let raw: RawWire = serde_json::from_str(text).map_err(|e| {
        let seq = serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| v.get("seq").and_then(|s| s.as_u64()));
        (seq, ProtocolError::Malformed(e.to_string()))
    })?;
    if !SERVER_TYPES.contains(&raw.kind.as_str()) && !CLIENT_TYPES.contains(&raw.kind.as_str()) {
        return Err((Some(raw.seq), ProtocolError::UnknownType(raw.kind)));
    }
    let payload = raw.payload.unwrap_or_else(|| serde_json::json!({}));
    let tagged = serde_json::json!({"type": raw.kind, "payload": payload});
    let body: Body = serde_json::from_value(tagged).map_err(|e| {
        (
            Some(raw.seq),
            ProtocolError::BadPayload {
                kind: raw.kind.clone(),
                msg: e.to_string(),
            },
        )
    })?;
    Ok(WireMessage { seq: raw.seq, body })
}

impl WireMessage {
    pub fn new(seq: u64, body: Body) -> Self {
        Self { seq, body }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grasp_payload_may_be_omitted() {
        let m = parse_message(r#"{"seq":3,"type":"grasp"}"#).unwrap();
        assert_eq!(m.body, Body::Grasp(Empty {}));
        assert_eq!(m.to_json(), r#"{"seq":3,"type":"grasp","payload":{}}"#);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let (seq, e) = parse_message(r#"{"seq":4,"type":"teleport","payload":{}}"#).unwrap_err();
        assert_eq!((seq, e.code()), (Some(4), "unknown_type"));
        let (seq, e) = parse_message("{nope").unwrap_err();
        assert_eq!((seq, e.code()), (None, "malformed"));
        let (seq, e) = parse_message(r#"{"seq":5,"type":"confirm","payload":{"accept":"yes"}}"#).unwrap_err();
        assert_eq!((seq, e.code()), (Some(5), "bad_payload"));
        let (_, e) = parse_message(r#"{"seq":-1,"type":"grasp"}"#).unwrap_err();
        assert_eq!(e.code(), "malformed");
    }

    #[test]
    fn joystick_defaults() {
        let m = parse_message(r#"{"seq":1,"type":"joystick","payload":{"left":{"x":0,"y":1}}}"#).unwrap();
        let Body::Joystick(j) = m.body else { panic!() };
        assert_eq!(j.left, Stick::new(0.0, 1.0));
        assert!(!j.done);
    }
}
