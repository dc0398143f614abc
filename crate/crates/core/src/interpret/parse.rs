use serde_json::{Map, Value};

use super::{is_compatible, InterpretError, InterpretationResult, InterpretationSource, TaskKind};
use crate::classify::SketchShape;

/// First JSON object in `raw` that carries a `task` key. Prose, code fences
/// and trailing text around it are ignored.
fn first_task_object(raw: &str) -> Option<Map<String, Value>> {
    raw.match_indices('{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) if map.contains_key("task") => Some(map),
            _ => None,
        }
    })
}

fn text_of(v: Option<&Value>) -> String {
    match v {
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
        None => String::new(),
    }
}

/// Parses a backend reply into a validated result tagged as remote.
pub fn parse_response(raw: &str) -> Result<InterpretationResult, InterpretError> {
    let obj = first_task_object(raw).ok_or_else(|| InterpretError::NoJsonFound { raw: raw.to_string() })?;
    let task_text = text_of(obj.get("task"));
    let task: TaskKind = task_text.parse().map_err(|_| InterpretError::UnknownTask {
        value: task_text.clone(),
        raw: raw.to_string(),
    })?;
    let shape_text = text_of(obj.get("sketch_shape"));
    let shape: SketchShape = shape_text.parse().map_err(|_| InterpretError::UnknownShape {
        value: shape_text.clone(),
        raw: raw.to_string(),
    })?;
    if !is_compatible(task, shape) {
        return Err(InterpretError::IncompatiblePair {
            task,
            shape,
            raw: raw.to_string(),
        });
    }
    Ok(InterpretationResult {
        task,
        sketch_shape: shape,
        raw_text: raw.to_string(),
        source: InterpretationSource::Remote,
    })
}

/// The declared output format for a result.
pub fn format_result(r: &InterpretationResult) -> String {
    serde_json::json!({"task": r.task.as_str(), "sketch_shape": r.sketch_shape.as_str()}).to_string()
}
