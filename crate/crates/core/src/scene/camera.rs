use nalgebra::{Isometry3, Matrix3, Point2, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::geom::{Pose, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Self {
            fx: 250.0,
            fy: 250.0,
            cx: 160.0,
            cy: 120.0,
            width: 320,
            height: 240,
        }
    }
}

/// Pinhole camera. `pose` maps camera coordinates (x right, y down, z along
/// the optical axis) to world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    #[serde(flatten)]
    pub intrinsics: Intrinsics,
    pub pose: Pose,
}

impl CameraModel {
    pub fn new(intrinsics: Intrinsics, pose: Pose) -> Self {
        assert!(intrinsics.fx > 0.0 && intrinsics.fy > 0.0, "focal lengths must be positive");
        Self { intrinsics, pose }
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }

    /// Camera-frame point at z-depth `depth` through pixel (u, v).
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Point3<f64> {
        let k = &self.intrinsics;
        Point3::new((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth)
    }

    /// Pixel of a camera-frame point; `None` behind the camera.
    pub fn project_camera(&self, p: &Point3<f64>) -> Option<Point2<f64>> {
        if p.z <= 0.0 {
            return None;
        }
        let k = &self.intrinsics;
        Some(Point2::new(k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy))
    }

    pub fn project_world(&self, p: &Point3<f64>) -> Option<Point2<f64>> {
        self.project_camera(&self.pose.0.inverse_transform_point(p))
    }

    pub fn world_point(&self, u: f64, v: f64, depth: f64) -> Point3<f64> {
        self.pose.0.transform_point(&self.unproject(u, v, depth))
    }

    /// World-space ray through (u, v) whose parameter equals z-depth.
    pub fn ray(&self, u: f64, v: f64) -> (Point3<f64>, Vector3<f64>) {
        let k = &self.intrinsics;
        let d = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        (self.pose.position(), self.pose.0.rotation * d)
    }

    pub fn in_image(&self, p: &Point2<f64>) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= (self.width() - 1) as f64 && p.y <= (self.height() - 1) as f64
    }
}

/// Head camera rigidly mounted on the base, looking forward and down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraMount {
    pub height: f64,
    /// Downward tilt in radians.
    pub pitch: f64,
    /// Forward offset of the optical center from the base origin.
    pub forward: f64,
    pub intrinsics: Intrinsics,
}

impl Default for CameraMount {
    fn default() -> Self {
        Self {
            height: 1.2,
            pitch: 35f64.to_radians(),
            forward: 0.0,
            intrinsics: Intrinsics::default(),
        }
    }
}

impl CameraMount {
    /// Camera rotation in the base frame (x forward, y left, z up).
    pub fn base_rotation(&self) -> UnitQuaternion<f64> {
        let (s, c) = self.pitch.sin_cos();
        let x = Vector3::new(0.0, -1.0, 0.0);
        let y = Vector3::new(-s, 0.0, -c);
        let z = Vector3::new(c, 0.0, -s);
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z])))
    }

    pub fn camera(&self, base: &Pose2) -> CameraModel {
        let in_base = Isometry3::from_parts(Translation3::new(self.forward, 0.0, self.height), self.base_rotation());
        CameraModel::new(self.intrinsics, Pose(base.to_pose().0 * in_base))
    }
}
