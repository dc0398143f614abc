use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::CameraModel;
use super::geom::{Pose, Pose2};
use super::objects::Scene;
use super::render::{render, ObservationFrame, RobotState};
use super::SceneError;
use crate::interpret::ConstraintState;
use crate::sketch::FrameId;

/// Objects whose surface is within this distance of the gripper can be grasped.
pub const GRASP_RANGE: f64 = 0.04;
const SUPPORT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GripperAction {
    Grasp,
    Release,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WorldEvent {
    Grasped { id: u32 },
    Released { id: u32, support: Option<u32> },
    Pushed { id: u32, distance: f64 },
    Collision { id: u32 },
    Fell { id: u32, support: Option<u32> },
}

/// The single owner of mutable simulation state: objects, base, gripper.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub scene: Scene,
    base: Pose2,
    ee: Pose,
    /// Held object id and its pose in the gripper frame.
    held: Option<(u32, Isometry3<f64>)>,
    pub events: Vec<WorldEvent>,
    next_frame: u64,
}

impl World {
    pub fn new(scene: Scene) -> Self {
        let base = scene.robot.base;
        let ee = Pose(base.to_pose().0 * scene.robot.ee.0);
        Self {
            scene,
            base,
            ee,
            held: None,
            events: Vec::new(),
            next_frame: 1,
        }
    }

    pub fn base(&self) -> Pose2 {
        self.base
    }

    pub fn ee(&self) -> Pose {
        self.ee
    }

    pub fn held(&self) -> Option<u32> {
        self.held.map(|(id, _)| id)
    }

    pub fn constraint(&self) -> ConstraintState {
        match self.held() {
            Some(id) => ConstraintState::holding(id),
            None => ConstraintState::free(),
        }
    }

    pub fn robot_state(&self) -> RobotState {
        RobotState {
            base: self.base,
            ee: self.ee,
            constraint: self.constraint(),
        }
    }

    pub fn camera(&self) -> CameraModel {
        self.scene.camera.camera(&self.base)
    }

    /// Renders the current state under a fresh, strictly increasing frame id.
    pub fn observe(&mut self) -> ObservationFrame {
        let id = FrameId(self.next_frame);
        self.next_frame += 1;
        render(&self.scene, &self.camera(), &self.robot_state(), id)
    }

    /// Takes a fresh frame id without rendering, for re-sending an unchanged
    /// view.
    pub fn issue_frame_id(&mut self) -> FrameId {
        let id = FrameId(self.next_frame);
        self.next_frame += 1;
        id
    }

    /// Frame id the next `observe` will use.
    pub fn next_frame_id(&self) -> FrameId {
        FrameId(self.next_frame)
    }

    fn sync_held(&mut self) {
        if let Some((id, attach)) = self.held {
            let pose = Pose(self.ee.0 * attach);
            if let Some(o) = self.scene.object_mut(id) {
                o.pose = pose;
            }
        }
    }

    /// Moves the gripper, carrying any held object. Movable objects the
    /// gripper tip enters are slid out of the way horizontally; fixed ones are
    /// only logged.
    pub fn set_ee(&mut self, target: Pose) {
        let from = self.ee.position();
        self.ee = target;
        self.sync_held();
        let to = target.position();
        let step = to - from;
        let horizontal = Vector3::new(step.x, step.y, 0.0);
        let held = self.held();
        let mut hits = Vec::new();
        for o in &self.scene.objects {
            if Some(o.id) == held || o.signed_distance(&to) >= -SUPPORT_EPS {
                continue;
            }
            // only newly entered objects count
            if o.signed_distance(&from) < -SUPPORT_EPS && horizontal.norm() < 1e-12 {
                continue;
            }
            hits.push((o.id, o.graspable));
        }
        for (id, movable) in hits {
            if !movable || horizontal.norm() < 1e-12 {
                self.events.push(WorldEvent::Collision { id });
                continue;
            }
            let u = horizontal.normalize();
            let o = self.scene.object(id).unwrap().clone();
            let (mut lo, mut hi) = (0.0, 2.0 * o.radius() + step.norm());
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let mut moved = o.clone();
                moved.pose = o.pose.translated(u * mid);
                if moved.signed_distance(&to) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // Whatever rests on the pushed object slides with it.
            let riders = self.stacked_on(id);
            for rid in std::iter::once(id).chain(riders.iter().copied()) {
                let obj = self.scene.object_mut(rid).unwrap();
                obj.pose = obj.pose.translated(u * hi);
            }
            self.events.push(WorldEvent::Pushed { id, distance: hi });
            self.resettle_if_unsupported(id);
            for rid in riders {
                self.resettle_if_unsupported(rid);
            }
        }
    }

    /// Drives the base; the gripper keeps its pose relative to the base.
    pub fn set_base(&mut self, base: Pose2) {
        let delta = base.to_pose().0 * self.base.to_pose().0.inverse();
        self.base = base;
        self.ee = Pose(delta * self.ee.0);
        self.sync_held();
    }

    /// Turns the gripper about its approach axis. Positive angles turn a
    /// top-down grasp counter-clockwise seen from above.
    pub fn rotate_wrist(&mut self, angle: f64) {
        let axis = Unit::new_normalize(-(self.ee.0.rotation * Vector3::z()));
        let r = UnitQuaternion::from_axis_angle(&axis, angle);
        let t = self.ee.0.translation;
        self.ee = Pose(Isometry3::from_parts(t, r * self.ee.0.rotation));
        self.sync_held();
    }

    pub fn apply_gripper(&mut self, action: GripperAction) -> Result<(), SceneError> {
        match action {
            GripperAction::Grasp => self.grasp(),
            GripperAction::Release => self.release(),
        }
    }

    fn grasp(&mut self) -> Result<(), SceneError> {
        if let Some(id) = self.held() {
            return Err(SceneError::AlreadyHolding(id));
        }
        let tip = self.ee.position();
        let mut best: Option<(u32, f64)> = None;
        for o in self.scene.objects.iter().filter(|o| o.graspable) {
            let d = o.signed_distance(&tip).max(0.0);
            if d <= GRASP_RANGE && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((o.id, d));
            }
        }
        let (id, _) = best.ok_or(SceneError::NothingToGrasp)?;
        let obj = self.scene.object_mut(id).unwrap();
        obj.support = None;
        let attach = self.ee.0.inverse() * obj.pose.0;
        self.held = Some((id, attach));
        self.events.push(WorldEvent::Grasped { id });
        for rid in self.stacked_on(id) {
            self.resettle_if_unsupported(rid);
        }
        Ok(())
    }

    fn release(&mut self) -> Result<(), SceneError> {
        let (id, _) = self.held.take().ok_or(SceneError::NotHolding)?;
        let support = self.settle(id);
        self.events.push(WorldEvent::Released { id, support });
        Ok(())
    }

    /// Objects resting on `id`, directly or through others, supports first.
    fn stacked_on(&self, id: u32) -> Vec<u32> {
        let mut out = Vec::new();
        let mut frontier = vec![id];
        while let Some(s) = frontier.pop() {
            for o in &self.scene.objects {
                if o.support == Some(s) && Some(o.id) != self.held() && o.id != id && !out.contains(&o.id) {
                    out.push(o.id);
                    frontier.push(o.id);
                }
            }
        }
        out
    }

    fn resettle_if_unsupported(&mut self, id: u32) {
        if !self.support_valid(id) {
            let support = self.settle(id);
            self.events.push(WorldEvent::Fell { id, support });
        }
    }

    /// Drops object `id` straight down onto the highest surface below its
    /// center, keeping only its yaw. Returns the support (None = floor).
    pub fn settle(&mut self, id: u32) -> Option<u32> {
        let obj = self.scene.object(id).expect("known object").clone();
        let c = obj.center();
        let held = self.held();
        let support = self
            .scene
            .objects
            .iter()
            .filter(|s| s.id != id && Some(s.id) != held && s.covers_xy(c.x, c.y) && s.top_z() <= c.z)
            .max_by(|a, b| a.top_z().total_cmp(&b.top_z()).then(b.id.cmp(&a.id)));
        let (support_id, top) = match support {
            Some(s) => (Some(s.id), s.top_z()),
            None => (None, 0.0),
        };
        let yaw = obj.pose.yaw();
        let obj = self.scene.object_mut(id).unwrap();
        obj.pose = Pose(Isometry3::from_parts(
            Translation3::new(c.x, c.y, c.z),
            UnitQuaternion::from_euler_angles(0.0, 0.0, yaw),
        ));
        let z = top + obj.extent_along(&Vector3::z());
        obj.pose.set_position(Point3::new(c.x, c.y, z));
        obj.support = support_id;
        support_id
    }

    /// Whether an unattached object rests on its recorded support.
    pub fn support_valid(&self, id: u32) -> bool {
        let Some(o) = self.scene.object(id) else {
            return false;
        };
        match o.support {
            None => o.bottom_z().abs() < 1e-6,
            Some(s) => match self.scene.object(s) {
                Some(sup) if Some(s) != self.held() => {
                    (o.bottom_z() - sup.top_z()).abs() < 1e-6 && sup.covers_xy(o.center().x, o.center().y)
                }
                _ => false,
            },
        }
    }

    pub fn all_supports_valid(&self) -> bool {
        let held = self.held();
        self.scene
            .objects
            .iter()
            .filter(|o| Some(o.id) != held)
            .all(|o| self.support_valid(o.id))
    }

    /// Puts object `id` in the gripper directly, as if grasped from above at
    /// the current gripper pose. Used to set up scenarios.
    pub fn attach_for_setup(&mut self, id: u32) -> Result<(), SceneError> {
        if let Some(h) = self.held() {
            return Err(SceneError::AlreadyHolding(h));
        }
        let ee = self.ee;
        let obj = self.scene.object_mut(id).ok_or(SceneError::UnknownObject(id))?;
        if !obj.graspable {
            return Err(SceneError::NotGraspable(id));
        }
        let half_h = obj.extent_along(&Vector3::z());
        let tip = ee.position();
        obj.pose = Pose(Isometry3::from_parts(
            Translation3::new(tip.x, tip.y, tip.z - half_h),
            obj.pose.rotation(),
        ));
        obj.support = None;
        let attach = ee.0.inverse() * obj.pose.0;
        self.held = Some((id, attach));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ObjectKind, SceneObject};

    fn obj(id: u32, dims: [f64; 3], at: [f64; 3], graspable: bool, support: Option<u32>) -> SceneObject {
        SceneObject {
            id,
            name: None,
            kind: ObjectKind::Box,
            dims,
            pose: Pose::at(at),
            color: [100, 100, 100],
            graspable,
            support,
        }
    }

    fn world() -> World {
        World::new(
            Scene::new(vec![
                obj(1, [0.8, 0.6, 0.4], [1.5, 0.0, 0.2], false, None),
                obj(2, [0.06; 3], [1.0, 0.5, 0.03], true, None),
            ])
            .unwrap(),
        )
    }

    fn put_ee(w: &mut World, p: [f64; 3]) {
        let mut pose = w.ee();
        pose.set_position(Point3::new(p[0], p[1], p[2]));
        w.set_ee(pose);
    }

    #[test]
    fn grasp_within_range() {
        let mut w = world();
        assert!(w.all_supports_valid());
        put_ee(&mut w, [1.0, 0.5, 0.2]);
        assert_eq!(w.apply_gripper(GripperAction::Grasp), Err(SceneError::NothingToGrasp));
        put_ee(&mut w, [1.0, 0.5, 0.08]);
        w.apply_gripper(GripperAction::Grasp).unwrap();
        assert!(w.constraint().holding);
        assert_eq!(w.constraint().held_object, Some(2));
        put_ee(&mut w, [1.0, 0.5, 0.3]);
        assert!((w.scene.object(2).unwrap().center().z - 0.25).abs() < 1e-9);
    }

    #[test]
    fn release_settles_on_table() {
        let mut w = world();
        put_ee(&mut w, [1.0, 0.5, 0.06]);
        w.apply_gripper(GripperAction::Grasp).unwrap();
        put_ee(&mut w, [1.5, 0.0, 0.7]);
        w.apply_gripper(GripperAction::Release).unwrap();
        let cube = w.scene.object(2).unwrap();
        assert!((cube.center().z - (0.4 + 0.03)).abs() < 1e-9);
        assert_eq!(cube.support, Some(1));
        assert!(!w.constraint().holding);
        assert!(w.all_supports_valid());
        assert_eq!(w.apply_gripper(GripperAction::Release), Err(SceneError::NotHolding));
    }

    #[test]
    fn sweeping_gripper_pushes_cube() {
        let mut w = world();
        put_ee(&mut w, [0.9, 0.5, 0.03]);
        for i in 1..=10 {
            put_ee(&mut w, [0.9 + 0.02 * i as f64, 0.5, 0.03]);
        }
        let cube = w.scene.object(2).unwrap();
        assert!((cube.center().x - (1.1 + 0.03)).abs() < 1e-6);
        assert!(w.all_supports_valid());
    }

    #[test]
    fn stacked_objects_ride_pushes_and_fall_off_grasps() {
        let mut w = World::new(
            Scene::new(vec![
                obj(1, [0.2, 0.2, 0.2], [1.0, 0.0, 0.1], true, None),
                obj(2, [0.06; 3], [1.0, 0.0, 0.23], true, Some(1)),
            ])
            .unwrap(),
        );
        put_ee(&mut w, [0.85, 0.0, 0.05]);
        put_ee(&mut w, [0.95, 0.0, 0.05]);
        let (a, b) = (w.scene.object(1).unwrap().center(), w.scene.object(2).unwrap().center());
        assert!((a.x - 1.05).abs() < 1e-6);
        assert!((b.x - a.x).abs() < 1e-12);
        assert!(w.all_supports_valid());


        // Grasping the bottom box drops the cube.
        let mut w2 = World::new(
            Scene::new(vec![
                obj(1, [0.2, 0.2, 0.2], [1.0, 0.0, 0.1], true, None),
                obj(2, [0.06; 3], [1.0, 0.05, 0.23], true, Some(1)),
            ])
            .unwrap(),
        );
        put_ee(&mut w2, [1.0, -0.05, 0.21]);
        w2.apply_gripper(GripperAction::Grasp).unwrap();
        assert_eq!(w2.held(), Some(1));
        assert_eq!(w2.scene.object(2).unwrap().support, None);
        assert!(w2.all_supports_valid());
    }

    #[test]
    fn base_motion_carries_gripper() {
        let mut w = world();
        let before = w.base().to_pose().0.inverse() * w.ee().0;
        w.set_base(Pose2::new(0.5, -0.3, 1.0));
        let after = w.base().to_pose().0.inverse() * w.ee().0;
        assert!((before.to_homogeneous() - after.to_homogeneous()).norm() < 1e-12);
    }

    #[test]
    fn wrist_turn_changes_held_yaw() {
        let mut w = world();
        put_ee(&mut w, [1.0, 0.5, 0.06]);
        w.apply_gripper(GripperAction::Grasp).unwrap();
        let yaw0 = w.scene.object(2).unwrap().pose.yaw();
        w.rotate_wrist(std::f64::consts::FRAC_PI_2);
        let yaw1 = w.scene.object(2).unwrap().pose.yaw();
        assert!((crate::scene::wrap_angle(yaw1 - yaw0) - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn frame_ids_increase() {
        let mut w = world();
        let a = w.observe().frame_id;
        let b = w.observe().frame_id;
        assert!(b.0 > a.0);
    }
}
