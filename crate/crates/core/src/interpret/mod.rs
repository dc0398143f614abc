//! Sketch interpretation: prompt composition, reply parsing, and the
//! rule-based and remote backends.

mod overlay;
mod parse;
mod prompt;
mod remote;
mod rule;

pub use overlay::{overlay, SKETCH_COLOR, SKETCH_WIDTH_PX};
pub use parse::{format_result, parse_response};
pub use prompt::{compose_prompt, constraint_text, PromptBundle, PromptMode, PROMPT_VERSION};
pub use remote::{
    interpret_remote, HttpTransport, RemoteEndpointConfig, StubReply, StubTransport, VlmRequest,
    VlmTransport, REFORMAT_INSTRUCTION,
};
pub use rule::{interpret_rule_based, SceneProbe};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::SketchShape;
use crate::sketch::FrameId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Pick,
    Place,
    Move,
    Pull,
    Push,
    Drop,
    PickAndPlace,
    Rotate,
}

impl TaskKind {
    pub const ALL: [TaskKind; 8] = [
        TaskKind::Pick,
        TaskKind::Place,
        TaskKind::Move,
        TaskKind::Pull,
        TaskKind::Push,
        TaskKind::Drop,
        TaskKind::PickAndPlace,
        TaskKind::Rotate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Pick => "pick",
            TaskKind::Place => "place",
            TaskKind::Move => "move",
            TaskKind::Pull => "pull",
            TaskKind::Push => "push",
            TaskKind::Drop => "drop",
            TaskKind::PickAndPlace => "pick_and_place",
            TaskKind::Rotate => "rotate",
        }
    }

    /// Display label used in reports ("Pick&Place").
    pub fn title(&self) -> &'static str {
        match self {
            TaskKind::Pick => "Pick",
            TaskKind::Place => "Place",
            TaskKind::Move => "Move",
            TaskKind::Pull => "Pull",
            TaskKind::Push => "Push",
            TaskKind::Drop => "Drop",
            TaskKind::PickAndPlace => "Pick&Place",
            TaskKind::Rotate => "Rotate",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric() || *c == '&')
            .collect();
        match key.as_str() {
            "pick" => Ok(TaskKind::Pick),
            "place" => Ok(TaskKind::Place),
            "move" => Ok(TaskKind::Move),
            "pull" => Ok(TaskKind::Pull),
            "push" => Ok(TaskKind::Push),
            "drop" => Ok(TaskKind::Drop),
            "pickandplace" | "pick&place" | "p&p" | "pickplace" => Ok(TaskKind::PickAndPlace),
            "rotate" => Ok(TaskKind::Rotate),
            _ => Err(s.to_string()),
        }
    }
}

/// Whether `task` may be drawn with `shape`: the dataset's task/shape pairs
/// plus Rotate with an arrow.
pub fn is_compatible(task: TaskKind, shape: SketchShape) -> bool {
    use SketchShape::*;
    use TaskKind::*;
    matches!(
        (task, shape),
        (Pick, Circle | UShape)
            | (Place, Circle | Arrow)
            | (Move, Arrow | Path)
            | (Pull, Circle | UShape | Arrow | CircleAndArrow)
            | (Push, Arrow | CircleAndArrow)
            | (Drop, Arrow)
            | (PickAndPlace, Arrow | CircleAndArrow)
            | (Rotate, Arrow)
    )
}

/// Gripper context injected into the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawConstraint")]
pub struct ConstraintState {
    pub holding: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_object: Option<u32>,
}

#[derive(Deserialize)]
struct RawConstraint {
    holding: bool,
    #[serde(default)]
    held_object: Option<u32>,
}

impl TryFrom<RawConstraint> for ConstraintState {
    type Error = String;

    fn try_from(raw: RawConstraint) -> Result<Self, Self::Error> {
        if raw.holding != raw.held_object.is_some() {
            return Err("held_object must be present exactly when holding".into());
        }
        Ok(Self {
            holding: raw.holding,
            held_object: raw.held_object,
        })
    }
}

impl ConstraintState {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn holding(id: u32) -> Self {
        Self {
            holding: true,
            held_object: Some(id),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskCatalog {
    pub tasks: Vec<(TaskKind, String)>,
}

impl TaskCatalog {
    pub fn new(tasks: Vec<(TaskKind, String)>) -> Self {
        assert!(!tasks.is_empty(), "catalog must not be empty");
        Self { tasks }
    }
}

impl Default for TaskCatalog {
    /// All eight tasks with one-line descriptions.
    fn default() -> Self {
        let d = |t: TaskKind, s: &str| (t, s.to_string());
        Self::new(vec![
            d(TaskKind::Pick, "grasp the marked object and lift it."),
            d(TaskKind::Place, "put the held object down at the marked location."),
            d(TaskKind::Move, "drive the mobile base along the drawn route."),
            d(TaskKind::Pull, "grasp the marked handle and draw it toward the robot."),
            d(TaskKind::Push, "shove the marked object along the drawn direction."),
            d(TaskKind::Drop, "release the held object from above the marked location."),
            d(TaskKind::PickAndPlace, "grasp the marked object and put it at the marked destination."),
            d(TaskKind::Rotate, "turn the wrist while grasping, in the drawn sense."),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpretationSource {
    RuleBased,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationResult {
    pub task: TaskKind,
    pub sketch_shape: SketchShape,
    pub raw_text: String,
    pub source: InterpretationSource,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpretError {
    #[error("no JSON object in reply")]
    NoJsonFound { raw: String },
    #[error("unknown task {value:?}")]
    UnknownTask { value: String, raw: String },
    #[error("unknown sketch shape {value:?}")]
    UnknownShape { value: String, raw: String },
    #[error("task {task} cannot be drawn as {shape}")]
    IncompatiblePair {
        task: TaskKind,
        shape: SketchShape,
        raw: String,
    },
    #[error("{shape} requires the gripper to be {need}")]
    HoldingConflict { shape: SketchShape, need: &'static str },
    #[error("remote interpreter timed out after {0:.1} s")]
    Timeout(f64),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("sketch drawn on frame {sketch} but frame {frame} was given")]
    FrameMismatch { sketch: FrameId, frame: FrameId },
}

impl InterpretError {
    /// Backend reply that caused the error, if any.
    pub fn raw_text(&self) -> Option<&str> {
        match self {
            InterpretError::NoJsonFound { raw }
            | InterpretError::UnknownTask { raw, .. }
            | InterpretError::UnknownShape { raw, .. }
            | InterpretError::IncompatiblePair { raw, .. } => Some(raw),
            _ => None,
        }
    }

    /// Stable snake_case code for the wire protocol.
    pub fn code(&self) -> &'static str {
        match self {
            InterpretError::NoJsonFound { .. } => "no_json_found",
            InterpretError::UnknownTask { .. } => "unknown_task",
            InterpretError::UnknownShape { .. } => "unknown_shape",
            InterpretError::IncompatiblePair { .. } => "incompatible_pair",
            InterpretError::HoldingConflict { .. } => "holding_conflict",
            InterpretError::Timeout(_) => "timeout",
            InterpretError::Transport(_) => "transport_error",
            InterpretError::FrameMismatch { .. } => "frame_mismatch",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_dataset_pairs() {
        let count = TaskKind::ALL
            .iter()
            .flat_map(|t| SketchShape::ALL.iter().map(move |s| (*t, *s)))
            .filter(|(t, s)| is_compatible(*t, *s))
            .count();
        assert_eq!(count, 16);
        assert!(!is_compatible(TaskKind::Drop, SketchShape::Circle));
        assert!(is_compatible(TaskKind::Rotate, SketchShape::Arrow));
        assert!(!is_compatible(TaskKind::Rotate, SketchShape::Circle));
    }

    #[test]
    fn task_synonyms() {
        for s in ["pick_and_place", "Pick&Place", "pick-and-place", "PICK AND PLACE"] {
            assert_eq!(s.parse::<TaskKind>(), Ok(TaskKind::PickAndPlace), "{s}");
        }
        assert!("grab".parse::<TaskKind>().is_err());
    }

    #[test]
    fn constraint_json_checks_held_object() {
        let ok: ConstraintState = serde_json::from_str(r#"{"holding":true,"held_object":3}"#).unwrap();
        assert_eq!(ok, ConstraintState::holding(3));
        assert!(serde_json::from_str::<ConstraintState>(r#"{"holding":true}"#).is_err());
        assert!(serde_json::from_str::<ConstraintState>(r#"{"holding":false,"held_object":3}"#).is_err());
    }
}
