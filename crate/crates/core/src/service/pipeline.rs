use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{params_for_shape, Classification, Classifier};
use crate::interpret::{
    compose_prompt, interpret_remote, interpret_rule_based, overlay, InterpretError, InterpretationResult,
    PromptMode, RemoteEndpointConfig, SceneProbe, TaskCatalog, VlmTransport,
};
use crate::planner::scene_probe;
use crate::scene::ObservationFrame;
use crate::sketch::{SketchError, SketchSet};

/// Which interpreter turns a classified sketch into a task.
#[derive(Clone)]
pub enum Backend {
    Rule,
    Remote {
        endpoint: RemoteEndpointConfig,
        transport: Arc<dyn VlmTransport>,
        mode: PromptMode,
    },
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Rule => "rule",
            Backend::Remote { .. } => "remote",
        }
    }
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    /// Shape and parameters the plan is built from.
    pub classification: Classification,
    pub result: InterpretationResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<SceneProbe>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Interpret(#[from] InterpretError),
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Sketch(_) => "bad_sketch",
            PipelineError::Interpret(e) => e.code(),
        }
    }
}

/// Classifies `sketch`, drawn on `frame`, and interprets it with `backend`.
pub fn interpret_sketch(
    frame: &ObservationFrame,
    sketch: &SketchSet,
    backend: &Backend,
    classifier: &Classifier,
    search_px: f64,
) -> Result<Interpretation, PipelineError> {
    if sketch.frame_id != frame.frame_id {
        return Err(InterpretError::FrameMismatch {
            sketch: sketch.frame_id,
            frame: frame.frame_id,
        }
        .into());
    }
    let constraint = frame.robot_state.constraint;
    match backend {
        Backend::Rule => {
            let classification = classifier.classify(sketch)?;
            let probe = classification
                .params
                .any_arrow()
                .map(|a| scene_probe(frame, a, search_px));
            let result = interpret_rule_based(
                classification.shape,
                &classification.params,
                &constraint,
                &probe.unwrap_or_default(),
                sketch.label.as_deref(),
            )?;
            Ok(Interpretation {
                classification,
                result,
                probe,
            })
        }
        Backend::Remote {
            endpoint,
            transport,
            mode,
        } => {
            let image = overlay(frame, sketch)?;
            let prompt = compose_prompt(&TaskCatalog::default(), &constraint, *mode);
            let result = interpret_remote(&image, &prompt, endpoint, Arc::clone(transport))?;
            let params = params_for_shape(sketch, result.sketch_shape)?;
            Ok(Interpretation {
                classification: Classification {
                    shape: result.sketch_shape,
                    params,
                },
                result,
                probe: None,
            })
        }
    }
}
