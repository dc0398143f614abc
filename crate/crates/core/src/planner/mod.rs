//! Task plans built from interpretations, the greedy end-effector planner,
//! base navigation and the ticked executor.

mod exec;
mod feedback;
mod ground;
mod nav;

pub use exec::{execute, ExecStatus, Executor, FeedbackMsg, FeedbackSource, Stick};
pub use feedback::{ScriptedFeedback, ScriptedStep};
pub use ground::{arrow_displacement, object_at, scene_probe, surface_point, target_for_arrow};
pub use nav::{follow_waypoints, NavConfig, NavError, NavStep, Navigator};

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ApproachDirection, ArrowParams, ShapeParams, SketchShape};
use crate::interpret::{is_compatible, ConstraintState, InterpretationResult, TaskKind};
use crate::scene::{grasp_pose, path_from_sketch, ObservationFrame, PathConfig, Pose, Scene, SceneError};
use crate::sketch::{PixelBox, Stroke};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// End-effector step of the greedy planner (m).
    pub step: f64,
    /// Upper bound on pull and push displacements (m).
    pub displacement_clamp: f64,
    pub lift_height: f64,
    /// Height of the held object's bottom above a place destination.
    pub place_hover: f64,
    pub drop_height: f64,
    /// Gap between the gripper and the contact face before a push.
    pub push_standoff: f64,
    pub rotate_steps: u32,
    /// Half size of the pixel box searched around an arrow start.
    pub target_search_px: f64,
    pub tick_hz: f64,
    /// End-effector speed per unit of stick deflection (m/s).
    pub joystick_speed: f64,
    /// Continue a pause on its own after this many seconds; `None` waits.
    pub feedback_timeout_s: Option<f64>,
    pub nav: NavConfig,
    pub path: PathConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            step: 0.05,
            displacement_clamp: 0.30,
            lift_height: 0.15,
            place_hover: 0.12,
            drop_height: 0.25,
            push_standoff: 0.10,
            rotate_steps: 8,
            target_search_px: 8.0,
            tick_hz: 20.0,
            joystick_speed: 0.05,
            feedback_timeout_s: None,
            nav: NavConfig::default(),
            path: PathConfig::default(),
        }
    }
}

impl PlannerConfig {
    pub fn dt(&self) -> f64 {
        1.0 / self.tick_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    MoveEe { target: Pose, step: f64 },
    Grasp,
    Release,
    RotateWrist { angle: f64, steps: u32 },
    BaseFollow { waypoints: Vec<Point2<f64>> },
    BaseTurn { heading: f64 },
    Pause { reason: String },
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::MoveEe { .. } => "move_ee",
            Primitive::Grasp => "grasp",
            Primitive::Release => "release",
            Primitive::RotateWrist { .. } => "rotate_wrist",
            Primitive::BaseFollow { .. } => "base_follow",
            Primitive::BaseTurn { .. } => "base_turn",
            Primitive::Pause { .. } => "pause",
        }
    }
}

/// What the plan was grounded on, kept for reporting and success checks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Grounding {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach: Option<ApproachDirection>,
    /// World point the task delivers to (place, drop) or moves along (pull, push).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<Point3<f64>>,
    /// Instance id under the destination; 0 is the floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<Vector3<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub task: TaskKind,
    pub primitives: Vec<Primitive>,
    pub feedback_points: Vec<usize>,
    #[serde(default)]
    pub grounding: Grounding,
}

impl TaskPlan {
    /// Builds a plan whose feedback points are its pauses.
    pub fn new(task: TaskKind, primitives: Vec<Primitive>, grounding: Grounding) -> Result<Self, PlanError> {
        let feedback_points = primitives
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Primitive::Pause { .. }))
            .map(|(i, _)| i)
            .collect();
        let plan = Self {
            task,
            primitives,
            feedback_points,
            grounding,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidPlan(m.to_string()));
        if self.primitives.is_empty() {
            return bad("empty plan");
        }
        if !self.feedback_points.windows(2).all(|w| w[0] < w[1]) {
            return bad("feedback points out of order");
        }
        if self.feedback_points.iter().any(|&i| i >= self.primitives.len()) {
            return bad("feedback point out of range");
        }
        for p in &self.primitives {
            match p {
                Primitive::MoveEe { step, .. } if !(*step > 0.0) => return bad("non-positive step"),
                Primitive::RotateWrist { steps: 0, .. } => return bad("rotation needs at least one step"),
                Primitive::BaseFollow { waypoints } if waypoints.is_empty() => return bad("no waypoints"),
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub success: bool,
    pub detail: String,
    pub executed_primitives: usize,
    pub final_constraint: ConstraintState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no target found: {0}")]
    MissingTarget(String),
    #[error("place-type task needs a held object")]
    NotHoldingForPlace,
    #[error("gripper must be empty to pick")]
    HoldingForPick,
    #[error("{task} cannot be planned from a {shape} sketch")]
    Incompatible { task: TaskKind, shape: SketchShape },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::MissingTarget(_) => "missing_target",
            PlanError::NotHoldingForPlace => "not_holding_for_place",
            PlanError::HoldingForPick => "holding_for_pick",
            PlanError::Incompatible { .. } => "incompatible_pair",
            PlanError::InvalidPlan(_) => "invalid_plan",
            PlanError::Scene(_) => "scene_error",
        }
    }
}

/// Straight-line end-effector waypoints from `current` to `target`, at most
/// `step` apart, ending exactly on `target`.
pub fn greedy_ee_trajectory(current: &Pose, target: &Pose, step: f64) -> Vec<Pose> {
    assert!(step > 0.0, "step must be positive");
    let from = current.position();
    let delta = target.position() - from;
    let d = delta.norm();
    let n = ((d / step - 1e-9).ceil() as usize).max(1);
    let mut out = Vec::with_capacity(n);
    for i in 1..n {
        let s = i as f64 * step;
        let f = s / d;
        let mut p = current.lerp(target, f);
        p.set_position(from + delta * f);
        out.push(p);
    }
    out.push(*target);
    out
}

/// Wrist rotation for a rotate arrow, quantized to ±π/2 or ±π. A clockwise
/// arrow on screen turns the object clockwise seen from above.
pub fn rotation_from_arrow(arrow: &ArrowParams) -> f64 {
    let turn = arrow.shaft_turning;
    let magnitude = if turn.abs() >= 0.75 * PI { PI } else { FRAC_PI_2 };
    if turn > 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

fn clamp_len(v: Vector3<f64>, max: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

fn pause(reason: &str) -> Primitive {
    Primitive::Pause {
        reason: reason.to_string(),
    }
}

struct Planner<'a> {
    frame: &'a ObservationFrame,
    scene: &'a Scene,
    cfg: &'a PlannerConfig,
}

impl Planner<'_> {
    fn move_to(&self, target: Pose) -> Primitive {
        Primitive::MoveEe {
            target,
            step: self.cfg.step,
        }
    }

    fn object(&self, id: u32) -> Result<&crate::scene::SceneObject, PlanError> {
        self.scene.object(id).ok_or(PlanError::Scene(SceneError::UnknownObject(id)))
    }

    fn detect_in(&self, b: &PixelBox) -> Result<u32, PlanError> {
        crate::scene::detect_object(self.frame, b).map_err(|_| PlanError::MissingTarget("no object under the sketch".into()))
    }

    fn arrow_object(&self, arrow: &ArrowParams) -> Result<u32, PlanError> {
        target_for_arrow(self.frame, arrow, self.cfg.target_search_px)
            .ok_or_else(|| PlanError::MissingTarget("no object at the arrow start".into()))
    }

    /// Pregrasp, pause, grasp, lift. Returns the primitives and the gripper
    /// pose at the grasp.
    fn pick(&self, id: u32, approach: ApproachDirection, g: &mut Grounding) -> Result<(Vec<Primitive>, Pose), PlanError> {
        let obj = self.object(id)?;
        let grasp = grasp_pose(obj, approach, &self.frame.robot_state)?;
        let base = &self.frame.robot_state.base;
        let at = grasp.ee_pose(base);
        let lift = at.translated(Vector3::z() * self.cfg.lift_height);
        g.object = Some(id);
        g.approach = Some(approach);
        Ok((
            vec![
                self.move_to(grasp.pregrasp_pose(base)),
                pause("adjust the grasp"),
                self.move_to(at),
                Primitive::Grasp,
                self.move_to(lift),
            ],
            lift,
        ))
    }

    /// Moves so the held object's bottom center sits `height` above `dest`,
    /// then pauses and releases. `ee` and `bottom` describe the gripper and
    /// held object at the start of the move.
    fn deliver(&self, ee: Pose, bottom: Point3<f64>, dest: Point3<f64>, height: f64, reason: &str) -> Vec<Primitive> {
        let shift = dest + Vector3::z() * height - bottom;
        vec![self.move_to(ee.translated(shift)), pause(reason), Primitive::Release]
    }

    fn destination(&self, p: Point2<f64>, g: &mut Grounding) -> Result<Point3<f64>, PlanError> {
        let (point, surface) = surface_point(self.frame, p).ok_or_else(|| PlanError::MissingTarget("destination has no depth".into()))?;
        g.destination = Some(point);
        g.surface = Some(surface);
        Ok(point)
    }

    fn held_bottom(&self, id: u32) -> Result<Point3<f64>, PlanError> {
        let obj = self.object(id)?;
        let c = obj.center();
        Ok(Point3::new(c.x, c.y, obj.bottom_z()))
    }
}

/// Turns an interpretation into primitives grounded in `frame` and `scene`.
pub fn plan_task(
    result: &InterpretationResult,
    params: &ShapeParams,
    frame: &ObservationFrame,
    scene: &Scene,
    cfg: &PlannerConfig,
) -> Result<TaskPlan, PlanError> {
    let (task, shape) = (result.task, result.sketch_shape);
    if !is_compatible(task, shape) {
        return Err(PlanError::Incompatible { task, shape });
    }
    let constraint = frame.robot_state.constraint;
    let p = Planner { frame, scene, cfg };
    let mut g = Grounding::default();
    let missing = |what: &str| PlanError::MissingTarget(format!("sketch has no {what}"));
    let needs_free = matches!(task, TaskKind::Pick | TaskKind::PickAndPlace | TaskKind::Pull | TaskKind::Push);
    let needs_held = matches!(task, TaskKind::Place | TaskKind::Drop | TaskKind::Rotate);
    if needs_free && constraint.holding {
        return Err(PlanError::HoldingForPick);
    }
    let held = match constraint.held_object {
        Some(id) => Some(id),
        None if needs_held => return Err(PlanError::NotHoldingForPlace),
        None => None,
    };
    let ee = frame.robot_state.ee;

    let primitives = match task {
        TaskKind::Pick => {
            let (id, approach) = match shape {
                SketchShape::UShape => {
                    let u = params.u_shape.as_ref().ok_or_else(|| missing("u-shape"))?;
                    (p.detect_in(&u.bbox)?, u.opening)
                }
                _ => {
                    let c = params.circle.as_ref().ok_or_else(|| missing("circle"))?;
                    (p.detect_in(&c.bbox())?, ApproachDirection::Above)
                }
            };
            p.pick(id, approach, &mut g)?.0
        }
        TaskKind::Place => {
            let held = held.expect("checked above");
            let point = match shape {
                SketchShape::Circle => params.circle.as_ref().ok_or_else(|| missing("circle"))?.center,
                _ => params.any_arrow().ok_or_else(|| missing("arrow"))?.end,
            };
            let dest = p.destination(point, &mut g)?;
            g.object = Some(held);
            p.deliver(ee, p.held_bottom(held)?, dest, cfg.place_hover, "adjust before release")
        }
        TaskKind::Drop => {
            let held = held.expect("checked above");
            let arrow = params.any_arrow().ok_or_else(|| missing("arrow"))?;
            let dest = p.destination(arrow.end, &mut g)?;
            g.object = Some(held);
            p.deliver(ee, p.held_bottom(held)?, dest, cfg.drop_height, "adjust before drop")
        }
        TaskKind::PickAndPlace => {
            let arrow = *params.any_arrow().ok_or_else(|| missing("arrow"))?;
            let id = match &params.composite {
                Some(c) => p.detect_in(&c.circle.bbox())?,
                None => p.arrow_object(&arrow)?,
            };
            let (mut prims, lift) = p.pick(id, ApproachDirection::Above, &mut g)?;
            let dest = p.destination(arrow.end, &mut g)?;
            let lifted_bottom = p.held_bottom(id)? + Vector3::z() * cfg.lift_height;
            prims.extend(p.deliver(lift, lifted_bottom, dest, cfg.place_hover, "adjust before release"));
            prims
        }
        TaskKind::Pull | TaskKind::Push => {
            let arrow = *params.any_arrow().ok_or_else(|| missing("arrow"))?;
            let id = match &params.composite {
                Some(c) => p.detect_in(&c.circle.bbox())?,
                None => p.arrow_object(&arrow)?,
            };
            let v = arrow_displacement(frame, &arrow).ok_or_else(|| PlanError::MissingTarget("arrow has no depth".into()))?;
            let v = clamp_len(v, cfg.displacement_clamp);
            if v.norm() < 1e-6 {
                return Err(PlanError::MissingTarget("arrow has no horizontal extent".into()));
            }
            g.displacement = Some(v);
            g.object = Some(id);
            let obj = p.object(id)?;
            if task == TaskKind::Pull {
                let grasp = grasp_pose(obj, ApproachDirection::Front, &frame.robot_state)?;
                let base = &frame.robot_state.base;
                let at = grasp.ee_pose(base);
                g.approach = Some(ApproachDirection::Front);
                g.destination = Some(obj.center() + v);
                vec![
                    p.move_to(grasp.pregrasp_pose(base)),
                    pause("adjust the grasp on the handle"),
                    p.move_to(at),
                    Primitive::Grasp,
                    p.move_to(at.translated(v)),
                    Primitive::Release,
                ]
            } else {
                let u = v.normalize();
                let contact = obj.center() - u * obj.extent_along(&u);
                let side = grasp_pose(obj, ApproachDirection::Front, &frame.robot_state)?.ee_pose(&frame.robot_state.base);
                let mut standoff = side;
                standoff.set_position(contact - u * cfg.push_standoff);
                let mut end = side;
                end.set_position(contact + v);
                g.destination = Some(obj.center() + v);
                vec![p.move_to(standoff), pause("adjust the contact point"), p.move_to(end)]
            }
        }
        TaskKind::Move => {
            let waypoints: Vec<Point2<f64>> = match shape {
                SketchShape::Path => {
                    let stroke = match &params.path {
                        Some(path) if path.polyline.len() >= 2 => Stroke::from_xy(path.polyline.iter().map(|q| (q.x, q.y)))
                            .map_err(|e| PlanError::Scene(e.into()))?,
                        _ => return Err(missing("path")),
                    };
                    path_from_sketch(&stroke, frame, &cfg.path)?
                        .iter()
                        .map(|w| Point2::new(w.x, w.y))
                        .collect()
                }
                _ => {
                    let arrow = params.any_arrow().ok_or_else(|| missing("arrow"))?;
                    let v = arrow_displacement(frame, arrow).ok_or_else(|| PlanError::MissingTarget("arrow has no depth".into()))?;
                    let b = frame.robot_state.base;
                    vec![Point2::new(b.x + v.x, b.y + v.y)]
                }
            };
            let b = frame.robot_state.base;
            let first = waypoints[0];
            let heading = (first.y - b.y).atan2(first.x - b.x);
            let last = waypoints[waypoints.len() - 1];
            g.destination = Some(Point3::new(last.x, last.y, 0.0));
            vec![Primitive::BaseTurn { heading }, Primitive::BaseFollow { waypoints }]
        }
        TaskKind::Rotate => {
            let arrow = params.any_arrow().ok_or_else(|| missing("arrow"))?;
            let angle = rotation_from_arrow(arrow);
            g.object = held;
            g.angle = Some(angle);
            vec![
                pause("adjust before rotating"),
                Primitive::RotateWrist {
                    angle,
                    steps: cfg.rotate_steps,
                },
            ]
        }
    };
    TaskPlan::new(task, primitives, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;

    #[test]
    fn greedy_examples() {
        let a = Pose::at([0.0, 0.0, 0.0]);
        let xs = |t: Vec<Pose>| t.iter().map(|p| p.position().x).collect::<Vec<_>>();
        let t = greedy_ee_trajectory(&a, &Pose::at([0.3, 0.0, 0.0]), 0.1);
        let got = xs(t);
        assert_eq!(got.len(), 3);
        for (g, w) in got.iter().zip([0.1, 0.2, 0.3]) {
            assert!((g - w).abs() < 1e-12);
        }
        let t = greedy_ee_trajectory(&a, &Pose::at([0.25, 0.0, 0.0]), 0.1);
        assert_eq!(xs(t), vec![0.1, 0.2, 0.25]);
        assert_eq!(greedy_ee_trajectory(&a, &a, 0.1), vec![a]);
    }

    #[test]
    fn greedy_interpolates_orientation() {
        let a = Pose::at([0.0, 0.0, 0.0]);
        let mut b = Pose::at([0.2, 0.0, 0.0]);
        b.0.rotation = UnitQuaternion::from_euler_angles(0.0, 0.0, 1.0);
        let t = greedy_ee_trajectory(&a, &b, 0.1);
        assert!((t[0].yaw() - 0.5).abs() < 1e-9);
        assert_eq!(t[1], b);
    }

    #[test]
    fn rotation_quantization() {
        let arrow = |turn| ArrowParams {
            start: Point2::origin(),
            end: Point2::new(1.0, 0.0),
            shaft_turning: turn,
        };
        assert_eq!(rotation_from_arrow(&arrow(-3.0)), PI);
        assert_eq!(rotation_from_arrow(&arrow(2.9)), -PI);
        assert_eq!(rotation_from_arrow(&arrow(-1.4)), FRAC_PI_2);
        assert_eq!(rotation_from_arrow(&arrow(1.2)), -FRAC_PI_2);
    }

    #[test]
    fn plan_validation() {
        assert!(TaskPlan::new(TaskKind::Rotate, vec![], Grounding::default()).is_err());
        let bad = vec![Primitive::RotateWrist { angle: 1.0, steps: 0 }];
        assert!(TaskPlan::new(TaskKind::Rotate, bad, Grounding::default()).is_err());
        let ok = TaskPlan::new(TaskKind::Rotate, vec![pause("x"), Primitive::RotateWrist { angle: 1.0, steps: 8 }], Grounding::default()).unwrap();
        assert_eq!(ok.feedback_points, vec![0]);
    }
}
