use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::CameraMount;
use super::geom::{Pose, Pose2};
use super::SceneError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Box,
    /// Axis along local z; dims are (diameter, diameter, height).
    Cylinder,
    /// dims[0] is the diameter.
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    /// Unique, ≥ 1 (0 is the floor).
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ObjectKind,
    /// Full extents in meters.
    pub dims: [f64; 3],
    pub pose: Pose,
    pub color: [u8; 3],
    pub graspable: bool,
    /// Supporting object id; `None` rests on the floor.
    #[serde(default)]
    pub support: Option<u32>,
}

impl SceneObject {
    fn half(&self) -> Vector3<f64> {
        Vector3::new(self.dims[0], self.dims[1], self.dims[2]) * 0.5
    }

    pub fn center(&self) -> Point3<f64> {
        self.pose.position()
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("object {}", self.id))
    }

    /// Nearest ray hit as (t, outward world normal). `dir` need not be unit;
    /// `t` is in units of `dir`.
    pub fn ray_hit(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        let o = self.pose.0.inverse_transform_point(origin);
        let d = self.pose.0.inverse_transform_vector(dir);
        let h = self.half();
        let hit = match self.kind {
            ObjectKind::Box => slab(&o, &d, &h),
            ObjectKind::Sphere => sphere(&o, &d, h.x),
            ObjectKind::Cylinder => cylinder(&o, &d, h.x, h.z),
        };
        hit.map(|(t, n)| (t, self.pose.0.rotation * n))
    }

    /// Signed distance from a world point to the surface (negative inside).
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        let q = self.pose.0.inverse_transform_point(p);
        let h = self.half();
        match self.kind {
            ObjectKind::Box => {
                let d = q.coords.abs() - h;
                d.map(|v| v.max(0.0)).norm() + d.max().min(0.0)
            }
            ObjectKind::Sphere => q.coords.norm() - h.x,
            ObjectKind::Cylinder => {
                let d = Vector2::new(Vector2::new(q.x, q.y).norm() - h.x, q.z.abs() - h.z);
                d.map(|v| v.max(0.0)).norm() + d.max().min(0.0)
            }
        }
    }

    /// Largest extent of the shape along world direction `u` from its center.
    pub fn extent_along(&self, u: &Vector3<f64>) -> f64 {
        let l = self.pose.0.inverse_transform_vector(u);
        let h = self.half();
        match self.kind {
            ObjectKind::Box => l.x.abs() * h.x + l.y.abs() * h.y + l.z.abs() * h.z,
            ObjectKind::Sphere => h.x * l.norm(),
            ObjectKind::Cylinder => h.x * Vector2::new(l.x, l.y).norm() + h.z * l.z.abs(),
        }
    }

    pub fn top_z(&self) -> f64 {
        self.center().z + self.extent_along(&Vector3::z())
    }

    pub fn bottom_z(&self) -> f64 {
        self.center().z - self.extent_along(&Vector3::z())
    }

    /// Whether the vertical line through (x, y) crosses the object's footprint.
    pub fn covers_xy(&self, x: f64, y: f64) -> bool {
        let q = self.pose.0.inverse_transform_point(&Point3::new(x, y, self.center().z));
        let h = self.half();
        match self.kind {
            ObjectKind::Box => q.x.abs() <= h.x && q.y.abs() <= h.y,
            ObjectKind::Sphere | ObjectKind::Cylinder => Vector2::new(q.x, q.y).norm() <= h.x,
        }
    }

    /// Horizontal footprint diameter bound, used for pixel-size estimates.
    pub fn radius(&self) -> f64 {
        self.half().norm()
    }
}

/// Ray against an axis-aligned box centered at the origin.
fn slab(o: &Point3<f64>, d: &Vector3<f64>, h: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut normal = Vector3::zeros();
    for i in 0..3 {
        if d[i].abs() < 1e-15 {
            if o[i].abs() > h[i] {
                return None;
            }
            continue;
        }
        let (mut t0, mut t1) = ((-h[i] - o[i]) / d[i], (h[i] - o[i]) / d[i]);
        let mut sign = -1.0;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
            sign = 1.0;
        }
        if t0 > t_near {
            t_near = t0;
            normal = Vector3::zeros();
            normal[i] = sign;
        }
        t_far = t_far.min(t1);
    }
    if t_near > t_far || t_near <= 0.0 {
        return None;
    }
    Some((t_near, normal))
}

fn sphere(o: &Point3<f64>, d: &Vector3<f64>, r: f64) -> Option<(f64, Vector3<f64>)> {
    let a = d.norm_squared();
    let b = o.coords.dot(d);
    let c = o.coords.norm_squared() - r * r;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / a;
    if t <= 0.0 {
        return None;
    }
    Some((t, (o.coords + d * t) / r))
}

fn cylinder(o: &Point3<f64>, d: &Vector3<f64>, r: f64, hz: f64) -> Option<(f64, Vector3<f64>)> {
    let mut best: Option<(f64, Vector3<f64>)> = None;
    let mut consider = |t: f64, n: Vector3<f64>| {
        if t > 0.0 && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, n));
        }
    };
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-15 {
        let b = o.x * d.x + o.y * d.y;
        let c = o.x * o.x + o.y * o.y - r * r;
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let t = (-b - disc.sqrt()) / a;
            let z = o.z + d.z * t;
            if z.abs() <= hz {
                let p = o.coords + d * t;
                consider(t, Vector3::new(p.x / r, p.y / r, 0.0));
            }
        }
    }
    if d.z.abs() > 1e-15 {
        for (cap, nz) in [(hz, 1.0), (-hz, -1.0)] {
            let t = (cap - o.z) / d.z;
            let p = o.coords + d * t;
            if p.x * p.x + p.y * p.y <= r * r {
                consider(t, Vector3::new(0.0, 0.0, nz));
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotInit {
    pub base: Pose2,
    /// End-effector pose in the base frame.
    pub ee: Pose,
}

impl Default for RobotInit {
    fn default() -> Self {
        Self {
            base: Pose2::default(),
            ee: home_ee(),
        }
    }
}

/// Stowed end-effector pose in the base frame, gripper pointing down, below
/// the head camera's field of view.
pub fn home_ee() -> Pose {
    let down = super::grasp::ee_rotation(&-Vector3::z(), &Pose2::default());
    Pose(nalgebra::Isometry3::from_parts(nalgebra::Translation3::new(0.2, -0.2, 0.6), down))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub camera: CameraMount,
    #[serde(default)]
    pub robot: RobotInit,
}

impl Scene {
    pub fn new(objects: Vec<SceneObject>) -> Result<Self, SceneError> {
        let s = Self {
            name: None,
            objects,
            camera: CameraMount::default(),
            robot: RobotInit::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let s: Scene = serde_json::from_str(text).map_err(|e| SceneError::Invalid(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|e| SceneError::Invalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if o.id == 0 {
                return Err(SceneError::Invalid("object id 0 is reserved for the floor".into()));
            }
            if !ids.insert(o.id) {
                return Err(SceneError::Invalid(format!("duplicate object id {}", o.id)));
            }
            if o.dims.iter().any(|d| !(*d > 0.0)) {
                return Err(SceneError::Invalid(format!("object {} has non-positive dims", o.id)));
            }
        }
        for o in &self.objects {
            if let Some(s) = o.support {
                if !ids.contains(&s) || s == o.id {
                    return Err(SceneError::Invalid(format!("object {} has invalid support {s}", o.id)));
                }
            }
        }
        Ok(())
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_mut(&mut self, id: u32) -> Option<&mut SceneObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn by_name(&self, name: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.name.as_deref() == Some(name))
    }

    pub fn graspable_ids(&self) -> Vec<u32> {
        self.objects.iter().filter(|o| o.graspable).map(|o| o.id).collect()
    }
}
