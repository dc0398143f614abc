use std::path::Path;

use serde::{Deserialize, Serialize};

use super::exec::{FeedbackMsg, FeedbackSource};

/// One timed operator message, delivered `at_ms` after pause `point` begins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedStep {
    pub point: usize,
    #[serde(default)]
    pub at_ms: u64,
    pub msg: FeedbackMsg,
}

/// Replays recorded feedback. A pause whose script has run out continues as
/// if the operator pressed done.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScriptedFeedback {
    steps: Vec<ScriptedStep>,
    delivered: Vec<bool>,
}

impl ScriptedFeedback {
    pub fn new(mut steps: Vec<ScriptedStep>) -> Self {
        steps.sort_by_key(|s| (s.point, s.at_ms));
        let delivered = vec![false; steps.len()];
        Self { steps, delivered }
    }

    /// Parses JSON Lines; blank lines are skipped. Errors carry the line number.
    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        let mut steps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            steps.push(serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?);
        }
        Ok(Self::new(steps))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_jsonl(&text)
    }
}

impl FeedbackSource for ScriptedFeedback {
    fn poll(&mut self, point: Option<usize>, elapsed_ms: u64) -> Vec<FeedbackMsg> {
        let Some(point) = point else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut pending = false;
        for (i, s) in self.steps.iter().enumerate() {
            if s.point != point || self.delivered[i] {
                continue;
            }
            if s.at_ms <= elapsed_ms {
                self.delivered[i] = true;
                out.push(s.msg);
            } else {
                pending = true;
            }
        }
        if !pending && out.is_empty() {
            out.push(FeedbackMsg::done());
        }
        out
    }
}
