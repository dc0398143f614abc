use serde::{Deserialize, Serialize};

use super::{format_result, is_compatible, ConstraintState, InterpretError, InterpretationResult, InterpretationSource, TaskKind};
use crate::classify::{ShapeParams, SketchShape};

/// Scene facts about an arrow's endpoints, measured on the observation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneProbe {
    pub start_on_object: bool,
    pub end_on_object: bool,
    /// Image-space dy of the arrow (end − start); positive points down-image.
    pub end_image_dy: f64,
    /// End lands on a surface other than the floor and the source object.
    #[serde(default)]
    pub end_on_support: bool,
    /// Start-to-end distance over the source object's bbox diagonal.
    #[serde(default)]
    pub end_distance_ratio: f64,
}

/// Arrows ending this many source diagonals away on a support are transfers.
const TRANSFER_RATIO: f64 = 1.5;

/// Deterministic interpretation from the classified shape and gripper state.
pub fn interpret_rule_based(
    shape: SketchShape,
    _params: &ShapeParams,
    constraint: &ConstraintState,
    probe: &SceneProbe,
    label: Option<&str>,
) -> Result<InterpretationResult, InterpretError> {
    let label = label.map(|l| l.trim().to_ascii_lowercase());
    let holding = constraint.holding;
    let conflict = |need| Err(InterpretError::HoldingConflict { shape, need });
    let task = match shape {
        SketchShape::Circle if holding => TaskKind::Place,
        SketchShape::Circle => TaskKind::Pick,
        SketchShape::UShape if holding => return conflict("empty"),
        SketchShape::UShape => TaskKind::Pick,
        SketchShape::Path => TaskKind::Move,
        SketchShape::CircleAndArrow if holding => return conflict("empty"),
        SketchShape::CircleAndArrow => TaskKind::PickAndPlace,
        SketchShape::Arrow => match label.as_deref() {
            Some("rotate") if holding => TaskKind::Rotate,
            Some("rotate") => return conflict("holding an object"),
            Some("drop") if holding => TaskKind::Drop,
            Some("drop") => return conflict("holding an object"),
            _ if holding => TaskKind::Place,
            _ if probe.start_on_object => {
                if probe.end_on_support && probe.end_distance_ratio > TRANSFER_RATIO {
                    TaskKind::PickAndPlace
                } else if !probe.end_on_object && probe.end_image_dy > 0.0 {
                    TaskKind::Pull
                } else {
                    TaskKind::Push
                }
            }
            _ => TaskKind::Move,
        },
    };
    debug_assert!(is_compatible(task, shape));
    let mut result = InterpretationResult {
        task,
        sketch_shape: shape,
        raw_text: String::new(),
        source: InterpretationSource::RuleBased,
    };
    result.raw_text = format_result(&result);
    Ok(result)
}
