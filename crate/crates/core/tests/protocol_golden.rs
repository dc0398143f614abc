//! Golden frames for every message type. Set SKETCHOP_BLESS=1 to rewrite the
//! fixture files after an intentional protocol change.

use std::path::PathBuf;

use sketchop::interpret::{format_result, InterpretationResult, InterpretationSource};
use sketchop::planner::{Grounding, Primitive, Stick, TaskOutcome, TaskPlan};
use sketchop::scene::{Intrinsics, Pose, Pose2, RgbImage, RobotState};
use sketchop::service::protocol::*;
use sketchop::service::{parse_message, Phase};
use sketchop::sketch::{FrameId, SketchSet, Stroke, StrokePoint};
use sketchop::{ConstraintState, SketchShape, TaskKind};

fn docs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

fn plan() -> TaskPlan {
    let pre = Pose::from_xyz_rpy([1.2, 0.0, 0.16], [0.0, std::f64::consts::PI, 0.0]);
    let at = Pose::from_xyz_rpy([1.2, 0.0, 0.06], [0.0, std::f64::consts::PI, 0.0]);
    let lift = Pose::from_xyz_rpy([1.2, 0.0, 0.21], [0.0, std::f64::consts::PI, 0.0]);
    let mv = |target| Primitive::MoveEe { target, step: 0.05 };
    let g = Grounding {
        object: Some(7),
        approach: Some(sketchop::ApproachDirection::Above),
        ..Default::default()
    };
    TaskPlan::new(
        TaskKind::Pick,
        vec![
            mv(pre),
            Primitive::Pause {
                reason: "adjust the grasp".into(),
            },
            mv(at),
            Primitive::Grasp,
            mv(lift),
        ],
        g,
    )
    .unwrap()
}

fn goldens() -> Vec<(&'static str, WireMessage)> {
    let png = RgbImage::filled(2, 2, [200, 180, 160]).to_png();
    use base64::Engine;
    let robot = RobotState {
        base: Pose2::new(0.0, 0.0, 0.0),
        ee: Pose::at([0.3, 0.0, 0.8]),
        constraint: ConstraintState::free(),
    };
    let result = {
        let mut r = InterpretationResult {
            task: TaskKind::Pick,
            sketch_shape: SketchShape::Circle,
            raw_text: String::new(),
            source: InterpretationSource::RuleBased,
        };
        r.raw_text = format_result(&r);
        r
    };
    let pts = [(150.0, 150.0, 0.0), (170.0, 150.0, 40.0), (170.0, 170.0, 80.0), (150.0, 170.0, 120.0), (150.5, 151.5, 160.0)];
    let stroke = Stroke::new(pts.iter().map(|&(x, y, t)| StrokePoint { x, y, t }).collect()).unwrap();
    let sketch = SketchSet::new(FrameId(7), vec![stroke], None).unwrap();
    vec![
        (
            "hello",
            WireMessage::new(
                1,
                Body::Hello(Hello {
                    protocol_version: PROTOCOL_VERSION,
                    phase: Phase::AwaitingSketch,
                    auto_confirm: false,
                }),
            ),
        ),
        (
            "observation",
            WireMessage::new(
                2,
                Body::Observation(Box::new(Observation {
                    frame_id: FrameId(7),
                    phase: Phase::AwaitingSketch,
                    intrinsics: Intrinsics::default(),
                    camera_pose: Pose::at([0.0, 0.0, 1.2]),
                    robot_state: robot,
                    image_png_base64: base64::engine::general_purpose::STANDARD.encode(png),
                })),
            ),
        ),
        (
            "interpretation",
            WireMessage::new(
                3,
                Body::Interpretation(Box::new(InterpretationMsg {
                    frame_id: FrameId(7),
                    result,
                    needs_confirm: true,
                    plan: plan(),
                })),
            ),
        ),
        (
            "status",
            WireMessage::new(
                4,
                Body::Status(Status {
                    phase: Phase::Executing,
                    primitive: Some(2),
                    primitive_name: Some("move_ee".into()),
                    sim_time: 1.25,
                }),
            ),
        ),
        (
            "feedback_request",
            WireMessage::new(
                5,
                Body::FeedbackRequest(FeedbackRequest {
                    point: 0,
                    primitive: 1,
                    reason: "adjust the grasp".into(),
                }),
            ),
        ),
        (
            "task_result",
            WireMessage::new(
                6,
                Body::TaskResult(Box::new(TaskResult {
                    task: TaskKind::Pick,
                    outcome: TaskOutcome {
                        success: true,
                        detail: "pick done".into(),
                        executed_primitives: 5,
                        final_constraint: ConstraintState::holding(7),
                        failed_index: None,
                    },
                })),
            ),
        ),
        (
            "error",
            WireMessage::new(
                7,
                Body::Error(ErrorMsg {
                    code: "bad_phase".into(),
                    message: "sketch_submit is not accepted while executing".into(),
                    in_reply_to: Some(4),
                }),
            ),
        ),
        ("sketch_submit", WireMessage::new(1, Body::SketchSubmit(sketch))),
        ("confirm", WireMessage::new(2, Body::Confirm(Confirm { accept: true }))),
        (
            "joystick",
            WireMessage::new(
                3,
                Body::Joystick(Joystick {
                    left: Stick::new(0.0, 1.0),
                    right: Stick::new(0.5, -0.25),
                    done: false,
                }),
            ),
        ),
        ("grasp", WireMessage::new(4, Body::Grasp(Empty {}))),
        ("release", WireMessage::new(5, Body::Release(Empty {}))),
    ]
}

#[test]
fn golden_frames_cover_all_types() {
    let names: Vec<&str> = goldens().iter().map(|(n, _)| *n).collect();
    let mut all: Vec<&str> = SERVER_TYPES.iter().chain(CLIENT_TYPES.iter()).copied().collect();
    all.sort();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(sorted, all);
    for (name, msg) in goldens() {
        assert_eq!(msg.body.type_name(), name);
    }
}

#[test]
fn golden_frames_match_fixtures_and_round_trip() {
    let dir = docs().join("fixtures");
    let bless = std::env::var_os("SKETCHOP_BLESS").is_some();
    for (name, msg) in goldens() {
        let path = dir.join(format!("{name}.json"));
        let text = msg.to_json();
        if bless {
            std::fs::write(&path, format!("{text}\n")).unwrap();
        }
        let fixture = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let fixture = fixture.trim_end();
        assert_eq!(text, fixture, "{name}: serialized frame differs from fixture");
        let parsed = parse_message(fixture).unwrap_or_else(|(_, e)| panic!("{name}: {e}"));
        assert_eq!(parsed, msg, "{name}: reparsed value differs");
        assert_eq!(parsed.to_json(), fixture);
    }
}

#[test]
fn golden_frames_validate_against_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(docs().join("protocol.schema.json")).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    for (name, msg) in goldens() {
        let value: serde_json::Value = serde_json::from_str(&msg.to_json()).unwrap();
        let errors: Vec<String> = v.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
    let bad: serde_json::Value = serde_json::json!({"seq": 1, "type": "confirm", "payload": {"accept": "yes"}});
    assert!(!v.is_valid(&bad));
    let unknown: serde_json::Value = serde_json::json!({"seq": 1, "type": "teleport", "payload": {}});
    assert!(!v.is_valid(&unknown));
}

#[test]
fn protocol_doc_quotes_every_fixture() {
    let doc = std::fs::read_to_string(docs().join("protocol.md")).unwrap();
    for (name, msg) in goldens() {
        assert!(doc.contains(&msg.to_json()), "docs/protocol.md lacks the {name} frame");
    }
}
