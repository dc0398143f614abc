//! Scripted end-to-end scenarios: draw a sketch on the rendered scene,
//! interpret it, plan, execute with recorded feedback and check the result.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{Point2, Point3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::eval::{Count, EvalReport, ScenarioRecord};
use super::pipeline::{interpret_sketch, Backend};
use crate::classify::{draw_arc_arrow, draw_arrow, draw_circle, draw_u, jittered_sketch, ApproachDirection, Classifier, SketchShape};
use crate::interpret::{PromptMode, RemoteEndpointConfig, StubTransport, TaskKind};
use crate::planner::{execute, plan_task, rotation_from_arrow, PlannerConfig, ScriptedFeedback, ScriptedStep, TaskOutcome, TaskPlan};
use crate::scene::{wrap_angle, ObservationFrame, Pose2, Scene, World};
use crate::sketch::{PixelBox, SketchSet};

#[derive(Debug, Error)]
pub enum HeadlessError {
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

/// Image point given by an object, a world point or a pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Anchor {
    /// Center of the object's visible pixels.
    Object { object: String },
    World { world: [f64; 3] },
    Pixel { pixel: [f64; 2] },
}

/// How to draw the scenario's sketch on the first observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    CircleAround {
        object: String,
        #[serde(default)]
        radius_px: Option<f64>,
    },
    CircleAt { at: Anchor, radius_px: f64 },
    UAround {
        object: String,
        opening: ApproachDirection,
        #[serde(default)]
        radius_px: Option<f64>,
    },
    Arrow { from: Anchor, to: Anchor },
    ArcArrow {
        at: Anchor,
        radius_px: f64,
        /// Positive is clockwise on screen.
        sweep_deg: f64,
        #[serde(default)]
        start_deg: f64,
    },
    CircleAndArrow {
        object: String,
        to: Anchor,
        #[serde(default)]
        radius_px: Option<f64>,
    },
    /// Floor route in world coordinates (x, y).
    Path { floor: Vec<[f64; 2]> },
    /// Strokes in pixels, drawn as given.
    Raw { strokes: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Setup {
    /// Object placed in the gripper before the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holding: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Pose2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expect {
    pub task: TaskKind,
    pub shape: SketchShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variation {
    Approach(ApproachDirection),
    /// Wrist rotation in radians.
    Rotation(f64),
}

impl Variation {
    pub fn key(&self) -> String {
        match self {
            Variation::Approach(a) => format!("approach:{}", serde_json::to_value(a).unwrap().as_str().unwrap()),
            Variation::Rotation(r) => {
                let name = if (r.abs() - PI).abs() < 1e-6 {
                    "pi"
                } else if (r.abs() - FRAC_PI_2).abs() < 1e-6 {
                    "pi/2"
                } else {
                    "other"
                };
                format!("rotation:{}{name}", if *r < 0.0 { "-" } else { "+" })
            }
        }
    }
}

fn default_jitter() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Row of the report this scenario counts toward.
    pub family: String,
    /// Scene file, relative to the scenario file.
    pub scene: String,
    #[serde(default)]
    pub setup: Setup,
    pub sketch: Recipe,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
    pub expect: Expect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variation: Option<Variation>,
    #[serde(default)]
    pub feedback: Vec<ScriptedStep>,
    /// Interpret with a stubbed remote model answering this text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stub_reply: Option<String>,
}

/// Parses a JSON Lines scenario file. Blank lines and lines starting with
/// `#` are skipped.
pub fn parse_scenarios(text: &str, path: &str) -> Result<Vec<Scenario>, HeadlessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(serde_json::from_str(t).map_err(|e| HeadlessError::Parse {
            path: path.to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, HeadlessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HeadlessError::Io(format!("{}: {e}", path.display())))?;
    parse_scenarios(&text, &path.display().to_string())
}

fn object_id(scene: &Scene, name: &str) -> Result<u32, String> {
    scene
        .by_name(name)
        .map(|o| o.id)
        .ok_or_else(|| format!("no object named {name:?}"))
}

fn visible_box(frame: &ObservationFrame, id: u32) -> Result<PixelBox, String> {
    let mut pts = Vec::new();
    for v in 0..frame.height() {
        for u in 0..frame.width() {
            if frame.instance_at(u, v) == id {
                pts.push(Point2::new(u as f64, v as f64));
            }
        }
    }
    PixelBox::from_points(pts).ok_or_else(|| format!("object {id} is not visible"))
}

fn resolve(anchor: &Anchor, frame: &ObservationFrame, scene: &Scene) -> Result<Point2<f64>, String> {
    match anchor {
        Anchor::Object { object } => Ok(visible_box(frame, object_id(scene, object)?)?.center()),
        Anchor::World { world } => frame
            .camera
            .project_world(&Point3::new(world[0], world[1], world[2]))
            .ok_or_else(|| format!("{world:?} is behind the camera")),
        Anchor::Pixel { pixel } => Ok(Point2::new(pixel[0], pixel[1])),
    }
}

/// Polyline with extra points so no segment is longer than `max` px.
fn densify(pts: &[Point2<f64>], max: f64) -> Vec<Point2<f64>> {
    let mut out = vec![pts[0]];
    for w in pts.windows(2) {
        let n = ((w[1] - w[0]).norm() / max).ceil().max(1.0) as usize;
        for i in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * (i as f64 / n as f64));
        }
    }
    out
}

fn image_direction(a: ApproachDirection) -> Vector2<f64> {
    match a {
        ApproachDirection::Right => Vector2::new(1.0, 0.0),
        ApproachDirection::Left => Vector2::new(-1.0, 0.0),
        ApproachDirection::Above => Vector2::new(0.0, -1.0),
        ApproachDirection::Front => Vector2::new(0.0, 1.0),
    }
}

impl Recipe {
    /// Draws the sketch on `frame`.
    pub fn draw(&self, frame: &ObservationFrame, scene: &Scene, jitter: f64, seed: u64, label: Option<String>) -> Result<SketchSet, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let around = |object: &str, radius: Option<f64>| -> Result<(Point2<f64>, f64), String> {
            let b = visible_box(frame, object_id(scene, object)?)?;
            let r = radius.unwrap_or(0.5 * (b.width().powi(2) + b.height().powi(2)).sqrt() + 5.0);
            Ok((b.center(), r))
        };
        let strokes: Vec<Vec<Point2<f64>>> = match self {
            Recipe::CircleAround { object, radius_px } => {
                let (c, r) = around(object, *radius_px)?;
                vec![draw_circle(c, r, rng.random_range(0.0..std::f64::consts::TAU), rng.random_bool(0.5))]
            }
            Recipe::CircleAt { at, radius_px } => {
                let c = resolve(at, frame, scene)?;
                vec![draw_circle(c, *radius_px, rng.random_range(0.0..std::f64::consts::TAU), rng.random_bool(0.5))]
            }
            Recipe::UAround {
                object,
                opening,
                radius_px,
            } => {
                let b = visible_box(frame, object_id(scene, object)?)?;
                let r = radius_px.unwrap_or(0.5 * b.width().max(b.height()) + 10.0);
                vec![draw_u(b.center(), r, image_direction(*opening))]
            }
            Recipe::Arrow { from, to } => draw_arrow(resolve(from, frame, scene)?, resolve(to, frame, scene)?),
            Recipe::ArcArrow {
                at,
                radius_px,
                sweep_deg,
                start_deg,
            } => draw_arc_arrow(resolve(at, frame, scene)?, *radius_px, start_deg.to_radians(), sweep_deg.to_radians()),
            Recipe::CircleAndArrow { object, to, radius_px } => {
                let (c, r) = around(object, *radius_px)?;
                let end = resolve(to, frame, scene)?;
                let dir = (end - c).normalize();
                let mut strokes = vec![draw_circle(c, r, rng.random_range(0.0..std::f64::consts::TAU), rng.random_bool(0.5))];
                strokes.extend(draw_arrow(c + dir * (r + 3.0), end));
                strokes
            }
            Recipe::Path { floor } => {
                let pts = floor
                    .iter()
                    .map(|p| resolve(&Anchor::World { world: [p[0], p[1], 0.0] }, frame, scene))
                    .collect::<Result<Vec<_>, _>>()?;
                if pts.len() < 2 {
                    return Err("path needs two points".into());
                }
                vec![densify(&pts, 6.0)]
            }
            Recipe::Raw { strokes } => strokes
                .iter()
                .map(|s| s.iter().map(|p| Point2::new(p[0], p[1])).collect())
                .collect(),
        };
        jittered_sketch(&strokes, jitter, seed, frame.frame_id, label).map_err(|e| e.to_string())
    }
}

/// Gripper approach vector for a side, in the world frame.
fn approach_vector(a: ApproachDirection, base: &Pose2) -> Vector3<f64> {
    match a {
        ApproachDirection::Above => -Vector3::z(),
        ApproachDirection::Front => base.forward(),
        ApproachDirection::Right => base.left(),
        ApproachDirection::Left => -base.left(),
    }
}

/// Whether the executed task did what it was asked to.
pub fn check_task(plan: &TaskPlan, before: &World, after: &World, outcome: &TaskOutcome, cfg: &PlannerConfig) -> Result<(), String> {
    if !outcome.success {
        return Err(outcome.detail.clone());
    }
    let g = &plan.grounding;
    let obj_id = g.object;
    let pose_of = |w: &World| obj_id.and_then(|id| w.scene.object(id)).map(|o| o.pose);
    let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(msg.to_string()) };
    match plan.task {
        TaskKind::Pick => {
            need(after.held() == obj_id && obj_id.is_some(), "target not held")?;
            let (a, b) = (pose_of(before).unwrap(), pose_of(after).unwrap());
            need(b.position().z - a.position().z > 0.5 * cfg.lift_height, "target not lifted")
        }
        TaskKind::Place | TaskKind::Drop | TaskKind::PickAndPlace => {
            need(after.held().is_none(), "still holding")?;
            need(after.all_supports_valid(), "unsupported object")?;
            let id = obj_id.ok_or("no target")?;
            let o = after.scene.object(id).unwrap();
            let dest = g.destination.ok_or("no destination")?;
            let off = Vector2::new(o.center().x - dest.x, o.center().y - dest.y).norm();
            need(off < 0.03, &format!("landed {off:.3} m from the destination"))?;
            let want = g.surface.filter(|s| *s != 0);
            need(o.support == want, &format!("rests on {:?}, expected {:?}", o.support, want))
        }
        TaskKind::Pull | TaskKind::Push => {
            need(after.held().is_none(), "still holding")?;
            need(after.all_supports_valid(), "unsupported object")?;
            let v = g.displacement.ok_or("no displacement")?;
            let (a, b) = (pose_of(before).unwrap(), pose_of(after).unwrap());
            let d = b.position() - a.position();
            let d = Vector3::new(d.x, d.y, 0.0);
            if plan.task == TaskKind::Pull {
                need((d - v).norm() < 0.02, &format!("moved {:.3} m off the pull vector", (d - v).norm()))
            } else {
                let u = v.normalize();
                let along = d.dot(&u);
                let lateral = (d - u * along).norm();
                need(along >= 0.8 * v.norm() && lateral < 0.05, &format!("pushed {along:.3} m along, {lateral:.3} m sideways"))
            }
        }
        TaskKind::Move => {
            let dest = g.destination.ok_or("no destination")?;
            let b = after.base();
            let off = Vector2::new(b.x - dest.x, b.y - dest.y).norm();
            need(off < cfg.nav.reach_tolerance, &format!("base stopped {off:.3} m from the goal"))
        }
        TaskKind::Rotate => {
            need(after.held() == obj_id && obj_id.is_some(), "object dropped")?;
            let angle = g.angle.ok_or("no angle")?;
            let (a, b) = (pose_of(before).unwrap(), pose_of(after).unwrap());
            let err = wrap_angle(b.yaw() - a.yaw() - angle);
            need(err.abs() < 1e-6, &format!("yaw off by {err:.2e}"))
        }
    }
}

/// Runs scenarios one after another and tallies ISR, TSR and VSR.
pub struct Harness {
    pub cfg: PlannerConfig,
    pub classifier: Classifier,
    base_dir: PathBuf,
    scenes: HashMap<String, Scene>,
}

impl Harness {
    pub fn new(base_dir: &Path, cfg: PlannerConfig) -> Self {
        Self {
            cfg,
            classifier: Classifier::default(),
            base_dir: base_dir.to_path_buf(),
            scenes: HashMap::new(),
        }
    }

    fn scene(&mut self, rel: &str) -> Result<Scene, String> {
        if let Some(s) = self.scenes.get(rel) {
            return Ok(s.clone());
        }
        let s = Scene::load(&self.base_dir.join(rel)).map_err(|e| e.to_string())?;
        self.scenes.insert(rel.to_string(), s.clone());
        Ok(s)
    }

    pub fn run(&mut self, sc: &Scenario) -> ScenarioRecord {
        let mut rec = ScenarioRecord {
            name: sc.name.clone(),
            family: sc.family.clone(),
            expected_task: sc.expect.task.as_str().to_string(),
            expected_shape: sc.expect.shape.as_str().to_string(),
            task: None,
            shape: None,
            inferred: false,
            variation_ok: sc.variation.map(|_| false),
            succeeded: false,
            detail: String::new(),
        };
        if let Err(e) = self.run_inner(sc, &mut rec) {
            rec.detail = e;
        }
        rec
    }

    fn run_inner(&mut self, sc: &Scenario, rec: &mut ScenarioRecord) -> Result<(), String> {
        let scene = self.scene(&sc.scene)?;
        let mut world = World::new(scene);
        if let Some(b) = sc.setup.base {
            world.set_base(b);
        }
        if let Some(name) = &sc.setup.holding {
            let id = object_id(&world.scene, name)?;
            world.attach_for_setup(id).map_err(|e| e.to_string())?;
        }
        let frame = world.observe();
        let sketch = sc.sketch.draw(&frame, &world.scene, sc.jitter, sc.seed, sc.label.clone())?;
        let backend = match &sc.stub_reply {
            Some(reply) => Backend::Remote {
                endpoint: RemoteEndpointConfig::default(),
                transport: Arc::new(StubTransport::texts([reply.clone()])),
                mode: PromptMode::FewShot,
            },
            None => Backend::Rule,
        };
        let interp = interpret_sketch(&frame, &sketch, &backend, &self.classifier, self.cfg.target_search_px)
            .map_err(|e| format!("interpretation failed: {e}"))?;
        rec.task = Some(interp.result.task.as_str().to_string());
        rec.shape = Some(interp.result.sketch_shape.as_str().to_string());
        rec.inferred = interp.result.task == sc.expect.task && interp.result.sketch_shape == sc.expect.shape;
        if let Some(Variation::Rotation(want)) = sc.variation {
            let got = interp.classification.params.any_arrow().map(rotation_from_arrow);
            rec.variation_ok = Some(got.is_some_and(|g| (g - want).abs() < 1e-9));
        }
        if let Some(Variation::Approach(want)) = sc.variation {
            rec.variation_ok = Some(interp.classification.params.u_shape.is_some_and(|u| u.opening == want));
        }
        if !rec.inferred {
            return Err(format!("interpreted as {} with {}", interp.result.task, interp.result.sketch_shape));
        }
        let plan = plan_task(&interp.result, &interp.classification.params, &frame, &world.scene, &self.cfg)
            .map_err(|e| format!("planning failed: {e}"))?;
        let before = world.clone();
        let mut feedback = ScriptedFeedback::new(sc.feedback.clone());
        let outcome = execute(plan.clone(), &mut world, &mut feedback, &self.cfg);
        check_task(&plan, &before, &world, &outcome, &self.cfg)?;
        if let Some(Variation::Approach(want)) = sc.variation {
            let z = world.ee().rotation() * Vector3::z();
            let face_ok = z.dot(&approach_vector(want, &world.base())) > 0.99;
            rec.variation_ok = Some(rec.variation_ok == Some(true) && face_ok);
        }
        rec.succeeded = true;
        rec.detail = outcome.detail;
        Ok(())
    }
}

/// Runs every scenario in `path` and builds the report.
pub fn run_headless(path: &Path, cfg: &PlannerConfig) -> Result<EvalReport, HeadlessError> {
    let scenarios = load_scenarios(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut harness = Harness::new(base, cfg.clone());
    Ok(report(scenarios.iter().map(|s| harness.run(s)).collect(), &scenarios))
}

/// Tallies records into an EvalReport.
pub fn report(records: Vec<ScenarioRecord>, scenarios: &[Scenario]) -> EvalReport {
    let mut isr: BTreeMap<String, Count> = BTreeMap::new();
    let mut tsr: BTreeMap<String, Count> = BTreeMap::new();
    let mut vsr: BTreeMap<String, Count> = BTreeMap::new();
    for (r, s) in records.iter().zip(scenarios) {
        isr.entry(r.family.clone()).or_default().record(r.inferred);
        tsr.entry(r.family.clone()).or_default().record(r.succeeded);
        if let (Some(v), Some(ok)) = (s.variation, r.variation_ok) {
            vsr.entry(v.key()).or_default().record(ok);
        }
    }
    let mut rep = EvalReport::from_counts(&isr, &tsr, &vsr);
    rep.scenarios = records;
    rep
}
