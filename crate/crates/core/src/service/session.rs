//! One operator session: the phase machine, the simulated world and the
//! running plan. The session does no I/O; a driver feeds it client
//! messages, runs the interpretation jobs it hands out and calls `tick` at
//! the planner rate.

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::config::ServiceConfig;
use super::pipeline::{interpret_sketch, Backend, Interpretation, PipelineError};
use super::protocol::{
    parse_message, Body, Confirm, ErrorMsg, FeedbackRequest, Hello, InterpretationMsg, Joystick, Observation, Status,
    TaskResult, WireMessage, PROTOCOL_VERSION,
};
use crate::classify::Classifier;
use crate::interpret::InterpretationResult;
use crate::planner::{plan_task, ExecStatus, Executor, FeedbackMsg, TaskOutcome, TaskPlan};
use crate::scene::{ObservationFrame, RobotState, Scene, World};
use crate::sketch::{FrameId, SketchSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    AwaitingSketch,
    Interpreting,
    AwaitingConfirm,
    Executing,
    AwaitingFeedback,
    Done,
    Failed,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::AwaitingSketch => "awaiting_sketch",
            Phase::Interpreting => "interpreting",
            Phase::AwaitingConfirm => "awaiting_confirm",
            Phase::Executing => "executing",
            Phase::AwaitingFeedback => "awaiting_feedback",
            Phase::Done => "done",
            Phase::Failed => "failed",
        }
    }

    pub const ALL: [Phase; 8] = [
        Phase::Idle,
        Phase::AwaitingSketch,
        Phase::Interpreting,
        Phase::AwaitingConfirm,
        Phase::Executing,
        Phase::AwaitingFeedback,
        Phase::Done,
        Phase::Failed,
    ];

    /// The declared transitions. Any live phase may also end in Done (the
    /// client left) or Failed.
    pub fn can_transition(self, to: Phase) -> bool {
        use Phase::*;
        if matches!(self, Done | Failed) {
            return false;
        }
        matches!(
            (self, to),
            (_, Done | Failed)
                | (Idle, AwaitingSketch)
                | (AwaitingSketch, Interpreting)
                | (Interpreting, AwaitingConfirm | Executing | AwaitingSketch)
                | (AwaitingConfirm, Executing | AwaitingSketch)
                | (Executing, AwaitingFeedback | AwaitingSketch)
                | (AwaitingFeedback, Executing | AwaitingSketch)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub phase: Phase,
    /// Latest observation sent.
    pub frame_id: Option<FrameId>,
    pub last_result: Option<InterpretationResult>,
    pub outcome_log: Vec<TaskOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: Phase,
    pub to: Phase,
    pub cause: String,
    pub unix_ms: u128,
}

/// Interpretation work handed to the driver, which may run it on another
/// thread.
#[derive(Debug, Clone)]
pub struct InterpretJob {
    pub id: u64,
    pub frame: Arc<ObservationFrame>,
    pub sketch: SketchSet,
    backend: Backend,
    classifier: Classifier,
    search_px: f64,
}

impl InterpretJob {
    pub fn run(&self) -> Result<Interpretation, PipelineError> {
        interpret_sketch(&self.frame, &self.sketch, &self.backend, &self.classifier, self.search_px)
    }
}

struct Render {
    first: u64,
    last: u64,
    state: (RobotState, Scene),
    frame: Arc<ObservationFrame>,
    png_b64: Arc<String>,
}

struct Pending {
    job: u64,
    frame: Arc<ObservationFrame>,
}

pub struct Session {
    state: SessionState,
    world: World,
    cfg: ServiceConfig,
    backend: Backend,
    classifier: Classifier,
    renders: VecDeque<Render>,
    out_seq: u64,
    last_in_seq: Option<u64>,
    next_job: u64,
    jobs: Vec<InterpretJob>,
    pending: Option<Pending>,
    plan: Option<TaskPlan>,
    executor: Option<Executor>,
    shown_primitive: Option<usize>,
    shown_pause: Option<usize>,
    transitions: Vec<Transition>,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

impl Session {
    pub fn new(scene: Scene, cfg: ServiceConfig, backend: Backend) -> Self {
        let classifier = Classifier::new(cfg.classifier.clone());
        Self {
            state: SessionState {
                phase: Phase::Idle,
                frame_id: None,
                last_result: None,
                outcome_log: Vec::new(),
            },
            world: World::new(scene),
            cfg,
            backend,
            classifier,
            renders: VecDeque::new(),
            out_seq: 0,
            last_in_seq: None,
            next_job: 1,
            jobs: Vec::new(),
            pending: None,
            plan: None,
            executor: None,
            shown_primitive: None,
            shown_pause: None,
            transitions: Vec::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Interpretation jobs issued since the last call.
    pub fn take_jobs(&mut self) -> Vec<InterpretJob> {
        std::mem::take(&mut self.jobs)
    }

    fn send(&mut self, body: Body, out: &mut Vec<WireMessage>) {
        self.out_seq += 1;
        out.push(WireMessage::new(self.out_seq, body));
    }

    fn error(&mut self, code: &str, message: String, in_reply_to: Option<u64>, out: &mut Vec<WireMessage>) {
        tracing::warn!(code, %message, ?in_reply_to, "error reply");
        self.send(
            Body::Error(ErrorMsg {
                code: code.to_string(),
                message,
                in_reply_to,
            }),
            out,
        );
    }

    fn status(&mut self, out: &mut Vec<WireMessage>) {
        let (primitive, sim_time) = match &self.executor {
            Some(ex) => (self.shown_primitive, ex.sim_time()),
            None => (None, 0.0),
        };
        let primitive_name = primitive
            .and_then(|i| self.plan.as_ref().and_then(|p| p.primitives.get(i)))
            .map(|p| p.name().to_string());
        let phase = self.state.phase;
        self.send(
            Body::Status(Status {
                phase,
                primitive,
                primitive_name,
                sim_time,
            }),
            out,
        );
    }

    /// Moves to `to`, then reports the new phase and a fresh observation.
    fn enter(&mut self, to: Phase, cause: &str, out: &mut Vec<WireMessage>) {
        let from = self.state.phase;
        assert!(from.can_transition(to), "undeclared transition {from:?} -> {to:?}");
        tracing::info!(?from, ?to, cause, "phase");
        self.transitions.push(Transition {
            from,
            to,
            cause: cause.to_string(),
            unix_ms: unix_ms(),
        });
        self.state.phase = to;
        self.status(out);
        if !matches!(to, Phase::Done) {
            let obs = self.observation();
            out.push(obs);
        }
    }

    /// Renders (or re-sends, when nothing moved) the current view.
    pub fn observation(&mut self) -> WireMessage {
        let state = (self.world.robot_state(), self.world.scene.clone());
        let id = match self.renders.back_mut() {
            Some(r) if r.state == state => {
                let id = self.world.issue_frame_id();
                r.last = id.0;
                id
            }
            _ => {
                let frame = Arc::new(self.world.observe());
                let id = frame.frame_id;
                let png_b64 = Arc::new(base64::engine::general_purpose::STANDARD.encode(frame.rgb.to_png()));
                self.renders.push_back(Render {
                    first: id.0,
                    last: id.0,
                    state,
                    frame,
                    png_b64,
                });
                while self.renders.len() > self.cfg.frame_history.max(1) {
                    self.renders.pop_front();
                }
                id
            }
        };
        let r = self.renders.back().expect("just rendered");
        let msg = Observation {
            frame_id: id,
            phase: self.state.phase,
            intrinsics: r.frame.camera.intrinsics,
            camera_pose: r.frame.camera.pose,
            robot_state: r.frame.robot_state,
            image_png_base64: r.png_b64.to_string(),
        };
        self.state.frame_id = Some(id);
        self.out_seq += 1;
        WireMessage::new(self.out_seq, Body::Observation(Box::new(msg)))
    }

    /// The observation a sketch was drawn on, if it is still remembered.
    pub fn frame(&self, id: FrameId) -> Option<Arc<ObservationFrame>> {
        let r = self.renders.iter().find(|r| (r.first..=r.last).contains(&id.0))?;
        if r.frame.frame_id == id {
            return Some(Arc::clone(&r.frame));
        }
        let mut f = (*r.frame).clone();
        f.frame_id = id;
        Some(Arc::new(f))
    }

    /// Starts the session: hello, then the first observation.
    pub fn connect(&mut self) -> Vec<WireMessage> {
        let mut out = Vec::new();
        if self.state.phase != Phase::Idle {
            return out;
        }
        self.state.phase = Phase::AwaitingSketch;
        self.transitions.push(Transition {
            from: Phase::Idle,
            to: Phase::AwaitingSketch,
            cause: "connect".into(),
            unix_ms: unix_ms(),
        });
        tracing::info!(from = ?Phase::Idle, to = ?Phase::AwaitingSketch, cause = "connect", "phase");
        let hello = Hello {
            protocol_version: PROTOCOL_VERSION,
            phase: Phase::AwaitingSketch,
            auto_confirm: self.cfg.auto_confirm,
        };
        self.send(Body::Hello(hello), &mut out);
        let obs = self.observation();
        out.push(obs);
        out
    }

    /// Ends the session.
    pub fn close(&mut self) -> Vec<WireMessage> {
        let mut out = Vec::new();
        if self.state.phase.can_transition(Phase::Done) {
            self.pending = None;
            self.executor = None;
            self.enter(Phase::Done, "closed", &mut out);
        }
        out
    }

    /// Moves to Failed after an internal error.
    pub fn fail(&mut self, reason: &str) -> Vec<WireMessage> {
        let mut out = Vec::new();
        if self.state.phase.can_transition(Phase::Failed) {
            self.pending = None;
            self.executor = None;
            self.error("internal", reason.to_string(), None, &mut out);
            self.enter(Phase::Failed, reason, &mut out);
        }
        out
    }

    /// Handles one text frame from the client.
    pub fn handle_text(&mut self, text: &str) -> Vec<WireMessage> {
        match parse_message(text) {
            Ok(m) => self.handle(m),
            Err((seq, e)) => {
                let mut out = Vec::new();
                if let Some(s) = seq {
                    if self.last_in_seq.is_some_and(|l| s <= l) {
                        return out;
                    }
                    self.last_in_seq = Some(s);
                }
                self.error(e.code(), e.to_string(), seq, &mut out);
                out
            }
        }
    }

    /// Handles one parsed client message. A message whose seq is not above
    /// the last one seen is a replay and is ignored.
    pub fn handle(&mut self, msg: WireMessage) -> Vec<WireMessage> {
        let mut out = Vec::new();
        if self.last_in_seq.is_some_and(|l| msg.seq <= l) {
            tracing::debug!(seq = msg.seq, "replayed seq ignored");
            return out;
        }
        self.last_in_seq = Some(msg.seq);
        let seq = msg.seq;
        let phase = self.state.phase;
        let bad_phase = |kind: &str| format!("{kind} is not accepted while {}", phase.as_str());
        match msg.body {
            Body::SketchSubmit(sketch) => {
                if phase != Phase::AwaitingSketch {
                    self.error("bad_phase", bad_phase("sketch_submit"), Some(seq), &mut out);
                    return out;
                }
                let Some(frame) = self.frame(sketch.frame_id) else {
                    let m = format!("frame {} is unknown or too old", sketch.frame_id);
                    self.error("stale_frame", m, Some(seq), &mut out);
                    return out;
                };
                let id = self.next_job;
                self.next_job += 1;
                self.jobs.push(InterpretJob {
                    id,
                    frame: Arc::clone(&frame),
                    sketch,
                    backend: self.backend.clone(),
                    classifier: self.classifier.clone(),
                    search_px: self.cfg.planner.target_search_px,
                });
                self.pending = Some(Pending { job: id, frame });
                self.enter(Phase::Interpreting, "sketch_submit", &mut out);
            }
            Body::Confirm(Confirm { accept }) => match (phase, accept) {
                (Phase::AwaitingConfirm, true) => {
                    let plan = self.plan.clone().expect("a plan waits for confirmation");
                    self.start(plan, "confirmed", &mut out);
                }
                (Phase::AwaitingConfirm, false) => {
                    self.plan = None;
                    self.state.last_result = None;
                    self.enter(Phase::AwaitingSketch, "rejected", &mut out);
                }
                (Phase::Interpreting, false) => {
                    self.pending = None;
                    self.enter(Phase::AwaitingSketch, "cancelled", &mut out);
                }
                (Phase::Executing | Phase::AwaitingFeedback, false) => {
                    if let Some(ex) = &mut self.executor {
                        ex.request_cancel();
                    }
                }
                _ => {
                    let kind = if accept { "confirm" } else { "cancel" };
                    self.error("bad_phase", bad_phase(kind), Some(seq), &mut out);
                }
            },
            Body::Joystick(Joystick { left, right, done }) => {
                self.feedback(FeedbackMsg::Joystick { left, right, done }, seq, &mut out);
            }
            Body::Grasp(_) => self.feedback(FeedbackMsg::Grasp, seq, &mut out),
            Body::Release(_) => self.feedback(FeedbackMsg::Release, seq, &mut out),
            other => {
                let m = format!("{} is a server message", other.type_name());
                self.error("unexpected_type", m, Some(seq), &mut out);
            }
        }
        out
    }

    fn feedback(&mut self, msg: FeedbackMsg, seq: u64, out: &mut Vec<WireMessage>) {
        let phase = self.state.phase;
        let kind = match msg {
            FeedbackMsg::Joystick { .. } => "joystick",
            FeedbackMsg::Grasp => "grasp",
            FeedbackMsg::Release => "release",
            FeedbackMsg::Cancel => "cancel",
        };
        if phase != Phase::AwaitingFeedback {
            self.error("bad_phase", format!("{kind} is not accepted while {}", phase.as_str()), Some(seq), out);
            return;
        }
        let ex = self.executor.as_mut().expect("executing");
        match ex.feedback(&mut self.world, &msg) {
            Err(e) => self.error("rejected", e, Some(seq), out),
            Ok(()) => {
                if matches!(msg, FeedbackMsg::Joystick { done: true, .. }) {
                    self.shown_pause = None;
                    self.enter(Phase::Executing, "done_adjust", out);
                }
            }
        }
    }

    fn start(&mut self, plan: TaskPlan, cause: &str, out: &mut Vec<WireMessage>) {
        self.executor = Some(Executor::new(plan, self.cfg.planner.clone()));
        self.shown_primitive = None;
        self.shown_pause = None;
        self.enter(Phase::Executing, cause, out);
    }

    /// Delivers the result of an interpretation job. Results of cancelled
    /// jobs are dropped.
    pub fn complete_job(&mut self, id: u64, result: Result<Interpretation, PipelineError>) -> Vec<WireMessage> {
        let mut out = Vec::new();
        let frame = match &self.pending {
            Some(p) if p.job == id && self.state.phase == Phase::Interpreting => Arc::clone(&p.frame),
            _ => return out,
        };
        self.pending = None;
        let interp = match result {
            Ok(i) => i,
            Err(e) => {
                self.error(e.code(), e.to_string(), None, &mut out);
                self.enter(Phase::AwaitingSketch, "interpretation failed", &mut out);
                return out;
            }
        };
        let plan = match plan_task(&interp.result, &interp.classification.params, &frame, &self.world.scene, &self.cfg.planner) {
            Ok(p) => p,
            Err(e) => {
                self.error(e.code(), e.to_string(), None, &mut out);
                self.enter(Phase::AwaitingSketch, "planning failed", &mut out);
                return out;
            }
        };
        self.state.last_result = Some(interp.result.clone());
        let needs_confirm = !self.cfg.auto_confirm;
        let msg = InterpretationMsg {
            frame_id: frame.frame_id,
            result: interp.result,
            needs_confirm,
            plan: plan.clone(),
        };
        self.send(Body::Interpretation(Box::new(msg)), &mut out);
        if needs_confirm {
            self.plan = Some(plan);
            self.enter(Phase::AwaitingConfirm, "interpreted", &mut out);
        } else {
            self.plan = Some(plan.clone());
            self.start(plan, "auto_confirm", &mut out);
        }
        out
    }

    /// Runs every issued job in place.
    pub fn run_jobs(&mut self) -> Vec<WireMessage> {
        let mut out = Vec::new();
        for job in self.take_jobs() {
            let r = job.run();
            out.extend(self.complete_job(job.id, r));
        }
        out
    }

    /// Advances a running plan by one planner tick.
    pub fn tick(&mut self) -> Vec<WireMessage> {
        let mut out = Vec::new();
        let Some(ex) = self.executor.as_mut() else {
            return out;
        };
        if !matches!(self.state.phase, Phase::Executing | Phase::AwaitingFeedback) {
            return out;
        }
        match ex.tick(&mut self.world, &[]) {
            ExecStatus::Running { primitive } => {
                if self.state.phase == Phase::AwaitingFeedback {
                    self.shown_pause = None;
                    self.enter(Phase::Executing, "adjustment timed out", &mut out);
                }
                if self.shown_primitive != Some(primitive) {
                    self.shown_primitive = Some(primitive);
                    self.status(&mut out);
                }
            }
            ExecStatus::AwaitingFeedback { point, primitive, reason } => {
                if self.shown_pause != Some(primitive) {
                    self.shown_pause = Some(primitive);
                    self.shown_primitive = Some(primitive);
                    if self.state.phase != Phase::AwaitingFeedback {
                        self.enter(Phase::AwaitingFeedback, "feedback point", &mut out);
                    }
                    self.send(Body::FeedbackRequest(FeedbackRequest { point, primitive, reason }), &mut out);
                }
            }
            ExecStatus::Done(outcome) => {
                let task = ex.plan().task;
                self.executor = None;
                self.plan = None;
                self.state.outcome_log.push(outcome.clone());
                self.send(Body::TaskResult(Box::new(TaskResult { task, outcome })), &mut out);
                self.enter(Phase::AwaitingSketch, "task finished", &mut out);
            }
        }
        out
    }
}
