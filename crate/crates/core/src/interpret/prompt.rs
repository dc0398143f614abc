use serde::{Deserialize, Serialize};

use super::{format_result, ConstraintState, InterpretationResult, InterpretationSource, TaskCatalog, TaskKind};
use crate::classify::SketchShape;

pub const PROMPT_VERSION: &str = "v1";

const SYSTEM: &str = include_str!("../../prompts/v1/system.txt");
const OUTPUT_FORMAT: &str = include_str!("../../prompts/v1/output_format.txt");
const EXAMPLES: &str = include_str!("../../prompts/v1/examples.txt");
const REQUEST: &str = include_str!("../../prompts/v1/request.txt");
const DYNAMIC: &str = include_str!("../../prompts/v1/dynamic.txt");

const HOLDING: &str = "The robot is holding an object.";
const NOT_HOLDING: &str = "The robot is not holding an object.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub examples_text: String,
    pub request_text: String,
    pub dynamic_text: String,
    pub mode: PromptMode,
}

impl PromptBundle {
    /// All parts joined with blank lines, skipping an empty examples part.
    pub fn full_text(&self) -> String {
        [&self.system_text, &self.examples_text, &self.request_text, &self.dynamic_text]
            .into_iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.trim_end())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

pub fn constraint_text(c: &ConstraintState) -> &'static str {
    if c.holding {
        HOLDING
    } else {
        NOT_HOLDING
    }
}

fn shape_line(shape: SketchShape) -> &'static str {
    match shape {
        SketchShape::Circle => "- circle: a closed loop drawn around an object.",
        SketchShape::UShape => "- u_shape: an open curve cupping an object; the opening faces the side to grasp from.",
        SketchShape::Arrow => "- arrow: a line with a head marking its end.",
        SketchShape::Path => "- path: an open line traced on the floor.",
        SketchShape::CircleAndArrow => "- circle_and_arrow: a loop around an object plus an arrow leading away from it.",
    }
}

fn example_for(shape: SketchShape) -> (&'static str, TaskKind) {
    match shape {
        SketchShape::Circle => ("A loop drawn around a cup while the gripper is empty", TaskKind::Pick),
        SketchShape::UShape => ("A curve opening to the right around a bottle", TaskKind::Pick),
        SketchShape::Arrow => ("An arrow ending on the tray while an object is held", TaskKind::Place),
        SketchShape::Path => ("A line traced across the floor to the door", TaskKind::Move),
        SketchShape::CircleAndArrow => ("A loop around a ball with an arrow to the box", TaskKind::PickAndPlace),
    }
}

/// Builds the prompt parts. The output is a pure function of the inputs.
pub fn compose_prompt(catalog: &TaskCatalog, constraint: &ConstraintState, mode: PromptMode) -> PromptBundle {
    let output_format = OUTPUT_FORMAT.trim();
    let task_list = catalog
        .tasks
        .iter()
        .map(|(t, d)| format!("- {}: {}", t.as_str(), d))
        .collect::<Vec<_>>()
        .join("\n");
    let shape_list = SketchShape::ALL.map(shape_line).join("\n");
    let system_text = SYSTEM
        .replace("{{task_list}}", &task_list)
        .replace("{{shape_list}}", &shape_list);

    let examples_text = match mode {
        PromptMode::ZeroShot => String::new(),
        PromptMode::FewShot => {
            let lines = SketchShape::ALL
                .iter()
                .map(|&shape| {
                    let (scene, task) = example_for(shape);
                    let answer = format_result(&InterpretationResult {
                        task,
                        sketch_shape: shape,
                        raw_text: String::new(),
                        source: InterpretationSource::RuleBased,
                    });
                    format!("{scene}: {answer}")
                })
                .collect::<Vec<_>>()
                .join("\n");
            EXAMPLES.replace("{{examples}}", &lines)
        }
    };

    let dynamic_text = DYNAMIC
        .replace("{{constraint}}", constraint_text(constraint))
        .replace("{{output_format}}", output_format);

    PromptBundle {
        system_text,
        examples_text,
        request_text: REQUEST.to_string(),
        dynamic_text,
        mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpret::parse_response;

    /// Whole-token occurrences, where `_` counts as part of a word.
    fn token_count(text: &str, word: &str) -> usize {
        text.to_ascii_lowercase()
            .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .filter(|tok| *tok == word)
            .count()
    }

    #[test]
    fn constraint_strings() {
        assert_eq!(constraint_text(&ConstraintState::holding(1)), "The robot is holding an object.");
        assert_eq!(constraint_text(&ConstraintState::free()), "The robot is not holding an object.");
    }

    #[test]
    fn every_task_named_once_in_system_text() {
        let b = compose_prompt(&TaskCatalog::default(), &ConstraintState::free(), PromptMode::FewShot);
        for t in TaskKind::ALL {
            assert_eq!(token_count(&b.system_text, t.as_str()), 1, "{t}");
        }
        for s in SketchShape::ALL {
            assert!(token_count(&b.system_text, s.as_str()) >= 1, "{s}");
        }
    }

    #[test]
    fn few_shot_has_one_parsable_example_per_shape() {
        let b = compose_prompt(&TaskCatalog::default(), &ConstraintState::free(), PromptMode::FewShot);
        let lines: Vec<&str> = b.examples_text.lines().filter(|l| l.contains('{')).collect();
        assert_eq!(lines.len(), 5);
        for (line, shape) in lines.iter().zip(SketchShape::ALL) {
            assert_eq!(parse_response(line).unwrap().sketch_shape, shape);
        }
    }

    #[test]
    fn zero_shot_only_drops_examples() {
        let c = ConstraintState::holding(2);
        let few = compose_prompt(&TaskCatalog::default(), &c, PromptMode::FewShot);
        let zero = compose_prompt(&TaskCatalog::default(), &c, PromptMode::ZeroShot);
        assert!(zero.examples_text.is_empty());
        assert_eq!(zero.system_text, few.system_text);
        assert_eq!(zero.request_text, few.request_text);
        assert_eq!(zero.dynamic_text, few.dynamic_text);
        assert!(zero.dynamic_text.contains("The robot is holding an object."));
        assert!(zero.dynamic_text.contains("\"sketch_shape\""));
        assert!(zero.request_text.contains("\"task\""));
    }

    #[test]
    fn deterministic() {
        let a = compose_prompt(&TaskCatalog::default(), &ConstraintState::free(), PromptMode::FewShot);
        let b = compose_prompt(&TaskCatalog::default(), &ConstraintState::free(), PromptMode::FewShot);
        assert_eq!(a, b);
        assert_eq!(a.full_text(), b.full_text());
    }
}
