//! Sketch-driven teleoperation for a simulated mobile manipulator.
//!
//! An operator draws rough strokes (circle, U-shape, arrow, path, circle plus
//! arrow) on the robot's camera view. The strokes are classified, interpreted
//! into a robot task using the gripper state as context, grounded in the
//! simulated scene, and executed with a greedy end-effector planner that
//! pauses for operator adjustment.
//!
//! Module map:
//! - [`sketch`]: strokes, resampling, geometric features, bounding boxes.
//! - [`classify`]: deterministic shape classifier and synthetic sketch generator.
//! - [`interpret`]: prompt composition, reply parsing, rule-based and remote interpreters.
//! - [`scene`]: primitive world, ray-cast rendering, perception, grasp heuristics.
//! - [`planner`]: task plans, greedy trajectories, navigation and execution.
//! - [`service`]: wire protocol, session state machine, server, headless evaluation.

pub mod classify;
pub mod interpret;
pub mod planner;
pub mod scene;
pub mod service;
pub mod sketch;

pub use classify::{ApproachDirection, Classification, ShapeParams, SketchShape};
pub use interpret::{ConstraintState, InterpretationResult, TaskKind};
pub use sketch::{FrameId, PixelBox, SketchSet, Stroke, StrokePoint};
