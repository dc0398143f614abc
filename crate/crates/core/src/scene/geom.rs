use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Rigid transform, written as `{"xyz": [..], "quat": [x, y, z, w]}`. Input
/// may give `"rpy"` instead (radians, roll-pitch-yaw about fixed x, y, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose(pub Isometry3<f64>);

impl Pose {
    pub fn identity() -> Self {
        Pose(Isometry3::identity())
    }

    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        Pose(Isometry3::from_parts(
            Translation3::new(xyz[0], xyz[1], xyz[2]),
            UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
        ))
    }

    pub fn at(xyz: [f64; 3]) -> Self {
        Self::from_xyz_rpy(xyz, [0.0; 3])
    }

    pub fn position(&self) -> Point3<f64> {
        Point3::from(self.0.translation.vector)
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        self.0.rotation
    }

    pub fn yaw(&self) -> f64 {
        self.0.rotation.euler_angles().2
    }

    pub fn set_position(&mut self, p: Point3<f64>) {
        self.0.translation.vector = p.coords;
    }

    pub fn translated(&self, d: Vector3<f64>) -> Self {
        let mut out = *self;
        out.0.translation.vector += d;
        out
    }

    /// Position and orientation interpolated by `f` in [0, 1].
    pub fn lerp(&self, other: &Pose, f: f64) -> Pose {
        let p = self.0.translation.vector.lerp(&other.0.translation.vector, f);
        let r = self
            .0
            .rotation
            .try_slerp(&other.0.rotation, f, 1e-12)
            .unwrap_or(if f < 0.5 { self.0.rotation } else { other.0.rotation });
        Pose(Isometry3::from_parts(Translation3::from(p), r))
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

#[derive(Serialize, Deserialize)]
struct RawPose {
    xyz: [f64; 3],
    /// Unit quaternion as [x, y, z, w]; takes precedence over `rpy`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quat: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rpy: Option<[f64; 3]>,
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let t = self.0.translation.vector;
        let q = self.0.rotation.coords;
        RawPose {
            xyz: [t.x, t.y, t.z],
            quat: Some([q.x, q.y, q.z, q.w]),
            rpy: None,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawPose::deserialize(d)?;
        match (raw.quat, raw.rpy) {
            (Some([x, y, z, w]), _) => {
                let q = Quaternion::new(w, x, y, z);
                let n = q.norm();
                if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
                    return Err(serde::de::Error::custom("quat must be a unit quaternion"));
                }
                let r = if (n - 1.0).abs() < 1e-9 { UnitQuaternion::new_unchecked(q) } else { UnitQuaternion::new_normalize(q) };
                Ok(Pose(Isometry3::from_parts(Translation3::new(raw.xyz[0], raw.xyz[1], raw.xyz[2]), r)))
            }
            (None, rpy) => Ok(Pose::from_xyz_rpy(raw.xyz, rpy.unwrap_or_default())),
        }
    }
}

/// Planar base pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn to_pose(&self) -> Pose {
        Pose::from_xyz_rpy([self.x, self.y, 0.0], [0.0, 0.0, self.theta])
    }

    pub fn forward(&self) -> Vector3<f64> {
        Vector3::new(self.theta.cos(), self.theta.sin(), 0.0)
    }

    pub fn left(&self) -> Vector3<f64> {
        Vector3::new(-self.theta.sin(), self.theta.cos(), 0.0)
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r -= std::f64::consts::TAU;
    }
    r
}
