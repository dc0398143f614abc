//! Primitive world, pinhole camera, ray-cast rendering and the perception
//! and grasp heuristics that ground sketches in it.

mod camera;
mod geom;
mod grasp;
mod objects;
mod perception;
mod render;
mod world;

pub use camera::{CameraModel, CameraMount, Intrinsics};
pub use geom::{wrap_angle, Pose, Pose2};
pub use grasp::{grasp_pose, GraspPose, GRASP_STANDOFF};
pub use objects::{ObjectKind, Scene, SceneObject};
pub use perception::{
    backproject, detect_object, detect_surface, instance_histogram, path_from_sketch, PathConfig,
};
pub use render::{render, ObservationFrame, RgbImage, RobotState};
pub use world::{GripperAction, World, WorldEvent, GRASP_RANGE};

use thiserror::Error;

use crate::sketch::SketchError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("no object inside the box")]
    NoObjectInBox,
    #[error("invalid depth at pixel ({u}, {v})")]
    InvalidDepth { u: u32, v: u32 },
    #[error("only {valid} of {total} path points lie on the floor")]
    PathOffFloor { valid: usize, total: usize },
    #[error("path has fewer than two waypoints")]
    TooShort,
    #[error("object {0} is not graspable")]
    NotGraspable(u32),
    #[error("nothing within grasp range")]
    NothingToGrasp,
    #[error("gripper is not holding anything")]
    NotHolding,
    #[error("gripper is already holding object {0}")]
    AlreadyHolding(u32),
    #[error("unknown object {0}")]
    UnknownObject(u32),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sketch(#[from] SketchError),
}
