use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classify::ClassifierConfig;
use crate::interpret::{HttpTransport, PromptMode, RemoteEndpointConfig};
use crate::planner::PlannerConfig;
use crate::service::Backend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InterpreterKind {
    #[default]
    Rule,
    Remote,
}

/// Service configuration file (JSON). Every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub interpreter: InterpreterKind,
    pub endpoint: RemoteEndpointConfig,
    pub prompt_mode: PromptMode,
    /// Skip the confirm step and execute right after interpretation.
    pub auto_confirm: bool,
    /// Observation rate while waiting for a sketch.
    pub observation_hz: f64,
    /// Recent frames a sketch may refer to.
    pub frame_history: usize,
    pub planner: PlannerConfig,
    pub classifier: ClassifierConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            interpreter: InterpreterKind::Rule,
            endpoint: RemoteEndpointConfig::default(),
            prompt_mode: PromptMode::FewShot,
            auto_confirm: false,
            observation_hz: 2.0,
            frame_history: 16,
            planner: PlannerConfig::default(),
            classifier: ClassifierConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The interpreter this configuration selects, talking HTTP when remote.
    pub fn backend(&self) -> Backend {
        match self.interpreter {
            InterpreterKind::Rule => Backend::Rule,
            InterpreterKind::Remote => Backend::Remote {
                endpoint: self.endpoint.clone(),
                transport: Arc::new(HttpTransport::new(self.endpoint.clone())),
                mode: self.prompt_mode,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: ServiceConfig = serde_json::from_str(r#"{"auto_confirm": true, "planner": {"step": 0.02}}"#).unwrap();
        assert!(c.auto_confirm);
        assert_eq!(c.planner.step, 0.02);
        assert_eq!(c.planner.lift_height, 0.15);
        assert_eq!(c.observation_hz, 2.0);
    }
}
