use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::geom::{Pose, Pose2};
use super::objects::SceneObject;
use super::render::RobotState;
use super::SceneError;
use crate::classify::ApproachDirection;

/// Pre-grasp offset along −approach.
pub const GRASP_STANDOFF: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspPose {
    pub position: Point3<f64>,
    /// Unit vector pointing from the gripper into the object.
    pub approach: Vector3<f64>,
    pub yaw: f64,
    pub standoff: f64,
}

impl GraspPose {
    pub fn pregrasp_position(&self) -> Point3<f64> {
        self.position - self.approach * self.standoff
    }

    pub fn ee_pose(&self, base: &Pose2) -> Pose {
        Pose(Isometry3::from_parts(
            Translation3::from(self.position.coords),
            ee_rotation(&self.approach, base),
        ))
    }

    pub fn pregrasp_pose(&self, base: &Pose2) -> Pose {
        let mut p = self.ee_pose(base);
        p.set_position(self.pregrasp_position());
        p
    }
}

/// Gripper frame: z along the approach; y points down for side grasps and
/// back toward the robot for top grasps, so the hand camera sees the scene
/// upright.
pub fn ee_rotation(approach: &Vector3<f64>, base: &Pose2) -> UnitQuaternion<f64> {
    let z = approach.normalize();
    let y = if z.z.abs() > 0.9 {
        base.forward() * z.z.signum()
    } else {
        Vector3::new(0.0, 0.0, -1.0)
    };
    let y = (y - z * y.dot(&z)).normalize();
    let x = y.cross(&z);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z])))
}

/// Face-center grasp for the requested side, resolved in the robot base
/// frame.
pub fn grasp_pose(object: &SceneObject, approach: ApproachDirection, robot: &RobotState) -> Result<GraspPose, SceneError> {
    if !object.graspable {
        return Err(SceneError::NotGraspable(object.id));
    }
    let base = &robot.base;
    let dir = match approach {
        ApproachDirection::Above => Vector3::new(0.0, 0.0, -1.0),
        ApproachDirection::Front => base.forward(),
        ApproachDirection::Right => base.left(),
        ApproachDirection::Left => -base.left(),
    };
    let position = object.center() - dir * object.extent_along(&-dir);
    let yaw = if approach == ApproachDirection::Above {
        base.theta
    } else {
        dir.y.atan2(dir.x)
    };
    Ok(GraspPose {
        position,
        approach: dir,
        yaw,
        standoff: GRASP_STANDOFF,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpret::ConstraintState;
    use crate::scene::ObjectKind;

    fn cube() -> SceneObject {
        SceneObject {
            id: 3,
            name: None,
            kind: ObjectKind::Box,
            dims: [0.06; 3],
            pose: Pose::at([1.0, 0.2, 0.03]),
            color: [0, 0, 255],
            graspable: true,
            support: None,
        }
    }

    fn robot(theta: f64) -> RobotState {
        RobotState {
            base: Pose2::new(0.0, 0.0, theta),
            ee: Pose::identity(),
            constraint: ConstraintState::free(),
        }
    }

    #[test]
    fn above_is_top_face() {
        let g = grasp_pose(&cube(), ApproachDirection::Above, &robot(0.0)).unwrap();
        assert!((g.position - Point3::new(1.0, 0.2, 0.06)).norm() < 1e-12);
        assert_eq!(g.approach, Vector3::new(0.0, 0.0, -1.0));
        assert_eq!(g.standoff, 0.10);
        assert!((g.pregrasp_position() - Point3::new(1.0, 0.2, 0.16)).norm() < 1e-12);
    }

    #[test]
    fn right_approach_points_left_in_robot_frame() {
        for theta in [0.0, 0.7, -2.0] {
            let r = robot(theta);
            let g = grasp_pose(&cube(), ApproachDirection::Right, &r).unwrap();
            assert!((g.approach - r.base.left()).norm() < 1e-12);
            // on the robot's right side of the cube
            assert!((g.position - cube().center()).dot(&r.base.left()) < 0.0);
        }
        let g = grasp_pose(&cube(), ApproachDirection::Front, &robot(0.0)).unwrap();
        assert!((g.position - Point3::new(0.97, 0.2, 0.03)).norm() < 1e-12);
    }

    #[test]
    fn ee_frame_is_right_handed() {
        for a in [Vector3::new(0.0, 0.0, -1.0), Vector3::x(), Vector3::y()] {
            let m = ee_rotation(&a, &Pose2::new(0.0, 0.0, 0.3)).to_rotation_matrix();
            assert!((m.matrix().column(2) - a).norm() < 1e-12);
            assert!((m.matrix().determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn table_is_not_graspable() {
        let mut t = cube();
        t.graspable = false;
        assert_eq!(grasp_pose(&t, ApproachDirection::Above, &robot(0.0)), Err(SceneError::NotGraspable(3)));
    }
}
