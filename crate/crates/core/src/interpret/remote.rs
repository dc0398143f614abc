use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{parse_response, InterpretError, InterpretationResult, PromptBundle};
use crate::scene::RgbImage;

/// Appended to the prompt when the first reply had no JSON object.
pub const REFORMAT_INSTRUCTION: &str =
    "Your previous answer could not be read. Reply with only the JSON object, for example {\"task\": \"...\", \"sketch_shape\": \"...\"}.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteEndpointConfig {
    /// OpenAI-compatible chat completions URL.
    pub url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub timeout_secs: f64,
}

impl Default for RemoteEndpointConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "vlm".into(),
            token_env: Some("SKETCHOP_VLM_TOKEN".into()),
            timeout_secs: 30.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VlmRequest {
    pub image_png: Arc<Vec<u8>>,
    pub prompt_text: String,
}

/// One blocking round trip to a vision-language model.
pub trait VlmTransport: Send + Sync {
    fn complete(&self, request: &VlmRequest, timeout: Duration) -> Result<String, String>;
}

/// Chat-completions client over HTTP.
pub struct HttpTransport {
    pub config: RemoteEndpointConfig,
}

impl HttpTransport {
    pub fn new(config: RemoteEndpointConfig) -> Self {
        Self { config }
    }

    fn body(&self, request: &VlmRequest) -> serde_json::Value {
        let data_url = format!(
            "data:image/png;base64,{}",
            base64::engine::general_purpose::STANDARD.encode(request.image_png.as_slice())
        );
        serde_json::json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "text", "text": request.prompt_text},
                    {"type": "image_url", "image_url": {"url": data_url}},
                ],
            }],
        })
    }
}

impl VlmTransport for HttpTransport {
    fn complete(&self, request: &VlmRequest, timeout: Duration) -> Result<String, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        let mut call = agent.post(&self.config.url);
        if let Some(token) = self.config.token_env.as_ref().and_then(|v| std::env::var(v).ok()) {
            call = call.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = call.send_json(self.body(request)).map_err(|e| e.to_string())?;
        let reply: serde_json::Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| format!("unexpected reply shape: {reply}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StubReply {
    Text(String),
    /// Sleeps before answering with an empty reply.
    Hang(Duration),
    Fail(String),
}

/// Scripted transport for tests and offline runs. Replies are consumed in
/// order; once exhausted every call fails.
#[derive(Default)]
pub struct StubTransport {
    replies: Mutex<VecDeque<StubReply>>,
    calls: AtomicUsize,
    prompts: Mutex<Vec<String>>,
}

impl StubTransport {
    pub fn new(replies: impl IntoIterator<Item = StubReply>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().collect()),
            ..Default::default()
        }
    }

    pub fn texts<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::new(replies.into_iter().map(|s| StubReply::Text(s.into())))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }

    pub fn push(&self, reply: StubReply) {
        self.replies.lock().unwrap().push_back(reply);
    }
}

impl VlmTransport for StubTransport {
    fn complete(&self, request: &VlmRequest, _timeout: Duration) -> Result<String, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.prompts.lock().unwrap().push(request.prompt_text.clone());
        let next = self.replies.lock().unwrap().pop_front();
        match next {
            Some(StubReply::Text(t)) => Ok(t),
            Some(StubReply::Hang(d)) => {
                thread::sleep(d);
                Ok(String::new())
            }
            Some(StubReply::Fail(e)) => Err(e),
            None => Err("stub transport has no scripted reply".into()),
        }
    }
}

fn call_with_deadline(
    transport: &Arc<dyn VlmTransport>,
    request: VlmRequest,
    deadline: Instant,
    total: f64,
) -> Result<String, InterpretError> {
    let remaining = deadline.saturating_duration_since(Instant::now());
    if remaining.is_zero() {
        return Err(InterpretError::Timeout(total));
    }
    let (tx, rx) = mpsc::channel();
    let t = Arc::clone(transport);
    thread::spawn(move || {
        let _ = tx.send(t.complete(&request, remaining));
    });
    match rx.recv_timeout(remaining) {
        Ok(reply) => reply.map_err(InterpretError::Transport),
        Err(mpsc::RecvTimeoutError::Timeout) => Err(InterpretError::Timeout(total)),
        Err(mpsc::RecvTimeoutError::Disconnected) => {
            Err(InterpretError::Transport("transport thread panicked".into()))
        }
    }
}

/// Sends the overlaid image and prompt, then parses the reply. A reply with
/// no JSON object is retried once with a reformat instruction; the whole
/// exchange shares one deadline.
pub fn interpret_remote(
    image: &RgbImage,
    prompt: &PromptBundle,
    endpoint: &RemoteEndpointConfig,
    transport: Arc<dyn VlmTransport>,
) -> Result<InterpretationResult, InterpretError> {
    let deadline = Instant::now() + Duration::from_secs_f64(endpoint.timeout_secs);
    let png = Arc::new(image.to_png());
    let text = prompt.full_text();
    let first = call_with_deadline(
        &transport,
        VlmRequest {
            image_png: Arc::clone(&png),
            prompt_text: text.clone(),
        },
        deadline,
        endpoint.timeout_secs,
    )?;
    match parse_response(&first) {
        Err(InterpretError::NoJsonFound { .. }) => {
            tracing::debug!(reply = %first, "no JSON in reply, asking again");
            let second = call_with_deadline(
                &transport,
                VlmRequest {
                    image_png: png,
                    prompt_text: format!("{text}\n\n{REFORMAT_INSTRUCTION}"),
                },
                deadline,
                endpoint.timeout_secs,
            )?;
            parse_response(&second)
        }
        other => other,
    }
}
