use std::collections::VecDeque;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::nav::{NavStep, Navigator};
use super::{greedy_ee_trajectory, PlannerConfig, Primitive, TaskOutcome, TaskPlan};
use crate::scene::{wrap_angle, GripperAction, Pose, World};

/// Stick deflection, each axis in [−1, 1]; y is positive when pushed up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stick {
    pub x: f64,
    pub y: f64,
}

impl Stick {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn clamped(self) -> Self {
        let c = |v: f64| if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 };
        Self { x: c(self.x), y: c(self.y) }
    }
}

/// Operator input consumed while a plan runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeedbackMsg {
    Joystick {
        #[serde(default)]
        left: Stick,
        #[serde(default)]
        right: Stick,
        #[serde(default)]
        done: bool,
    },
    Grasp,
    Release,
    Cancel,
}

impl FeedbackMsg {
    pub fn done() -> Self {
        FeedbackMsg::Joystick {
            left: Stick::default(),
            right: Stick::default(),
            done: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ExecStatus {
    Running { primitive: usize },
    AwaitingFeedback { point: usize, primitive: usize, reason: String },
    Done(TaskOutcome),
}

#[derive(Debug, Clone, PartialEq)]
enum Stage {
    Idle,
    Moving(VecDeque<Pose>),
    Rotating { left: u32, per_step: f64 },
    Turning { heading: f64 },
    Navigating(Navigator),
    Paused { point: usize, ticks: u64 },
}

/// Runs a plan one 1/tick_hz tick at a time against a world.
#[derive(Debug, Clone, PartialEq)]
pub struct Executor {
    plan: TaskPlan,
    cfg: PlannerConfig,
    index: usize,
    stage: Stage,
    /// Operator adjustment made during pauses, carried into later moves.
    offset: Vector3<f64>,
    executed: usize,
    cancel: bool,
    outcome: Option<TaskOutcome>,
    rejected: Vec<String>,
    sim_time: f64,
}

impl Executor {
    pub fn new(plan: TaskPlan, cfg: PlannerConfig) -> Self {
        Self {
            plan,
            cfg,
            index: 0,
            stage: Stage::Idle,
            offset: Vector3::zeros(),
            executed: 0,
            cancel: false,
            outcome: None,
            rejected: Vec::new(),
            sim_time: 0.0,
        }
    }

    pub fn plan(&self) -> &TaskPlan {
        &self.plan
    }

    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }

    pub fn is_paused(&self) -> bool {
        matches!(self.stage, Stage::Paused { .. }) && self.outcome.is_none()
    }

    /// Milliseconds spent in the current pause.
    pub fn pause_elapsed_ms(&self) -> u64 {
        match self.stage {
            Stage::Paused { ticks, .. } => (ticks as f64 * 1000.0 / self.cfg.tick_hz).round() as u64,
            _ => 0,
        }
    }

    /// Operator inputs refused since the last call, with reasons.
    pub fn take_rejected(&mut self) -> Vec<String> {
        std::mem::take(&mut self.rejected)
    }

    /// Applies one operator message now. Refusals are returned instead of
    /// queued for `take_rejected`.
    pub fn feedback(&mut self, world: &mut World, msg: &FeedbackMsg) -> Result<(), String> {
        let n = self.rejected.len();
        self.apply_feedback(world, msg);
        match self.rejected.len() > n {
            true => Err(self.rejected.pop().unwrap_or_default()),
            false => Ok(()),
        }
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn request_cancel(&mut self) {
        self.cancel = true;
    }

    fn finish(&mut self, world: &World, success: bool, detail: String, failed: Option<usize>) -> ExecStatus {
        let o = TaskOutcome {
            success,
            detail,
            executed_primitives: self.executed,
            final_constraint: world.constraint(),
            failed_index: failed,
        };
        self.outcome = Some(o.clone());
        ExecStatus::Done(o)
    }

    fn complete_primitive(&mut self) {
        self.index += 1;
        self.executed += 1;
        self.stage = Stage::Idle;
    }

    fn apply_feedback(&mut self, world: &mut World, msg: &FeedbackMsg) {
        if let FeedbackMsg::Cancel = msg {
            self.cancel = true;
            return;
        }
        if !matches!(self.stage, Stage::Paused { .. }) {
            self.rejected.push(format!("{} outside an adjustment pause", kind(msg)));
            return;
        }
        match *msg {
            FeedbackMsg::Joystick { left, right, done } => {
                let (l, r) = (left.clamped(), right.clamped());
                let k = self.cfg.joystick_speed / self.cfg.tick_hz;
                let local = Vector3::new(r.x, -r.y, l.y) * k;
                if local.norm() > 0.0 {
                    let ee = world.ee();
                    let d = ee.0.rotation * local;
                    self.offset += d;
                    world.set_ee(ee.translated(d));
                }
                if done {
                    self.complete_primitive();
                }
            }
            FeedbackMsg::Grasp | FeedbackMsg::Release => {
                let action = if matches!(msg, FeedbackMsg::Grasp) {
                    GripperAction::Grasp
                } else {
                    GripperAction::Release
                };
                if let Err(e) = world.apply_gripper(action) {
                    self.rejected.push(e.to_string());
                }
            }
            FeedbackMsg::Cancel => unreachable!(),
        }
    }

    /// Advances one tick, applying `inbox` first.
    pub fn tick(&mut self, world: &mut World, inbox: &[FeedbackMsg]) -> ExecStatus {
        if let Some(o) = &self.outcome {
            return ExecStatus::Done(o.clone());
        }
        for msg in inbox {
            self.apply_feedback(world, msg);
        }
        let dt = self.cfg.dt();
        self.sim_time += dt;
        loop {
            if let Stage::Idle = self.stage {
                if self.cancel {
                    return self.finish(world, false, "cancelled".into(), None);
                }
                let Some(p) = self.plan.primitives.get(self.index).cloned() else {
                    return self.finish(world, true, format!("{} done", self.plan.task), None);
                };
                match p {
                    Primitive::MoveEe { target, step } => {
                        let target = target.translated(self.offset);
                        self.stage = Stage::Moving(greedy_ee_trajectory(&world.ee(), &target, step).into());
                    }
                    Primitive::Grasp | Primitive::Release => {
                        let grasp = matches!(p, Primitive::Grasp);
                        // Already in the requested state after operator input.
                        if grasp != world.held().is_some() {
                            let action = if grasp { GripperAction::Grasp } else { GripperAction::Release };
                            if let Err(e) = world.apply_gripper(action) {
                                let i = self.index;
                                return self.finish(world, false, format!("{} failed: {e}", p.name()), Some(i));
                            }
                        }
                        self.complete_primitive();
                        continue;
                    }
                    Primitive::RotateWrist { angle, steps } => {
                        self.stage = Stage::Rotating {
                            left: steps,
                            per_step: angle / steps as f64,
                        };
                    }
                    Primitive::BaseTurn { heading } => self.stage = Stage::Turning { heading },
                    Primitive::BaseFollow { waypoints } => match Navigator::new(waypoints, self.cfg.nav) {
                        Ok(n) => self.stage = Stage::Navigating(n),
                        Err(e) => {
                            let i = self.index;
                            return self.finish(world, false, e.to_string(), Some(i));
                        }
                    },
                    Primitive::Pause { reason } => {
                        let point = self.plan.feedback_points.iter().position(|&i| i == self.index).unwrap_or(0);
                        self.stage = Stage::Paused { point, ticks: 0 };
                        return ExecStatus::AwaitingFeedback {
                            point,
                            primitive: self.index,
                            reason,
                        };
                    }
                }
            }
            let index = self.index;
            match &mut self.stage {
                Stage::Idle => continue,
                Stage::Moving(q) => {
                    if let Some(p) = q.pop_front() {
                        world.set_ee(p);
                    }
                    if q.is_empty() {
                        self.complete_primitive();
                    }
                }
                Stage::Rotating { left, per_step } => {
                    world.rotate_wrist(*per_step);
                    *left -= 1;
                    if *left == 0 {
                        self.complete_primitive();
                    }
                }
                Stage::Turning { heading } => {
                    let mut b = world.base();
                    let err = wrap_angle(*heading - b.theta);
                    let max = self.cfg.nav.turn_rate * dt;
                    b.theta = if err.abs() <= max { *heading } else { wrap_angle(b.theta + max * err.signum()) };
                    world.set_base(b);
                    if err.abs() <= max {
                        self.complete_primitive();
                    }
                }
                Stage::Navigating(nav) => match nav.step(world.base(), dt) {
                    Ok(NavStep::Moving(b)) => world.set_base(b),
                    Ok(NavStep::Arrived(_)) => {
                        self.complete_primitive();
                        continue;
                    }
                    Err(e) => return self.finish(world, false, e.to_string(), Some(index)),
                },
                Stage::Paused { point, ticks } => {
                    *ticks += 1;
                    let (point, elapsed) = (*point, *ticks as f64 * dt);
                    if self.cancel {
                        return self.finish(world, false, "cancelled".into(), None);
                    }
                    if self.cfg.feedback_timeout_s.is_some_and(|t| elapsed >= t) {
                        self.complete_primitive();
                        continue;
                    }
                    let reason = match &self.plan.primitives[index] {
                        Primitive::Pause { reason } => reason.clone(),
                        _ => String::new(),
                    };
                    return ExecStatus::AwaitingFeedback {
                        point,
                        primitive: index,
                        reason,
                    };
                }
            }
            return ExecStatus::Running { primitive: self.index };
        }
    }
}

fn kind(msg: &FeedbackMsg) -> &'static str {
    match msg {
        FeedbackMsg::Joystick { .. } => "joystick",
        FeedbackMsg::Grasp => "grasp",
        FeedbackMsg::Release => "release",
        FeedbackMsg::Cancel => "cancel",
    }
}

/// Supplies operator input to a blocking run.
pub trait FeedbackSource {
    /// Messages for the next tick. `point` is the feedback point being
    /// waited on, if any; `elapsed_ms` is the time spent waiting there.
    fn poll(&mut self, point: Option<usize>, elapsed_ms: u64) -> Vec<FeedbackMsg>;
}

/// Runs `plan` to completion.
pub fn execute(plan: TaskPlan, world: &mut World, source: &mut dyn FeedbackSource, cfg: &PlannerConfig) -> TaskOutcome {
    let mut ex = Executor::new(plan, cfg.clone());
    let mut inbox = Vec::new();
    loop {
        match ex.tick(world, &inbox) {
            ExecStatus::Done(o) => return o,
            ExecStatus::AwaitingFeedback { point, .. } => inbox = source.poll(Some(point), ex.pause_elapsed_ms()),
            ExecStatus::Running { .. } => inbox = source.poll(None, 0),
        }
    }
}
