use std::path::PathBuf;

use proptest::prelude::*;
use sketchop::classify::{classify_sketch, generate_synthetic, SyntheticSpec};
use sketchop::interpret::{format_result, interpret_rule_based, parse_response, InterpretationSource, SceneProbe};
use sketchop::planner::{PlannerConfig, Stick, TaskOutcome};
use sketchop::service::protocol::*;
use sketchop::service::{parse_message, run_headless, Phase};
use sketchop::{ConstraintState, FrameId, InterpretationResult, SketchSet, SketchShape, Stroke, StrokePoint, TaskKind};

fn phase() -> impl Strategy<Value = Phase> {
    prop::sample::select(Phase::ALL.to_vec())
}

fn text() -> impl Strategy<Value = String> {
    "\\PC{0,40}"
}

fn stroke() -> impl Strategy<Value = Stroke> {
    prop::collection::vec((-1e4..1e4f64, -1e4..1e4f64, 0.0..100.0f64), 2..12).prop_filter_map("degenerate", |pts| {
        let mut t = 0.0;
        let pts = pts
            .into_iter()
            .map(|(x, y, dt)| {
                t += dt;
                StrokePoint { x, y, t }
            })
            .collect();
        Stroke::new(pts).ok()
    })
}

fn body() -> impl Strategy<Value = Body> {
    let stick = (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y)| Stick::new(x, y));
    prop_oneof![
        (any::<u32>(), phase(), any::<bool>()).prop_map(|(protocol_version, phase, auto_confirm)| Body::Hello(Hello {
            protocol_version,
            phase,
            auto_confirm
        })),
        (phase(), prop::option::of(0usize..100), prop::option::of(text()), 0.0..1e6f64).prop_map(
            |(phase, primitive, primitive_name, sim_time)| Body::Status(Status {
                phase,
                primitive,
                primitive_name,
                sim_time
            })
        ),
        (0usize..10, 0usize..100, text()).prop_map(|(point, primitive, reason)| Body::FeedbackRequest(FeedbackRequest {
            point,
            primitive,
            reason
        })),
        (prop::sample::select(TaskKind::ALL.to_vec()), any::<bool>(), text(), 0usize..50, prop::option::of(0u32..20), prop::option::of(0usize..50))
            .prop_map(|(task, success, detail, executed_primitives, held, failed_index)| Body::TaskResult(Box::new(TaskResult {
                task,
                outcome: TaskOutcome {
                    success,
                    detail,
                    executed_primitives,
                    final_constraint: held.map(ConstraintState::holding).unwrap_or_default(),
                    failed_index,
                }
            }))),
        ("[a-z_]{1,20}", text(), prop::option::of(any::<u64>())).prop_map(|(code, message, in_reply_to)| Body::Error(ErrorMsg {
            code,
            message,
            in_reply_to
        })),
        (any::<u64>(), prop::collection::vec(stroke(), 1..4), prop::option::of(text()))
            .prop_map(|(id, strokes, label)| Body::SketchSubmit(SketchSet::new(FrameId(id), strokes, label).unwrap())),
        any::<bool>().prop_map(|accept| Body::Confirm(Confirm { accept })),
        (stick.clone(), stick, any::<bool>()).prop_map(|(left, right, done)| Body::Joystick(Joystick { left, right, done })),
        Just(Body::Grasp(Empty {})),
        Just(Body::Release(Empty {})),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn wire_messages_round_trip(seq in any::<u64>(), body in body()) {
        let m = WireMessage::new(seq, body);
        let text = m.to_json();
        let back = parse_message(&text).map_err(|(_, e)| TestCaseError::fail(format!("{e}: {text}")))?;
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn arbitrary_text_never_panics_the_parser(s in "\\PC{0,200}") {
        let _ = parse_message(&s);
    }

    #[test]
    fn results_survive_format_then_parse(task in prop::sample::select(TaskKind::ALL.to_vec()), shape in prop::sample::select(SketchShape::ALL.to_vec())) {
        prop_assume!(sketchop::interpret::is_compatible(task, shape));
        let r = InterpretationResult { task, sketch_shape: shape, raw_text: String::new(), source: InterpretationSource::Remote };
        let text = format_result(&r);
        let back = parse_response(&text).unwrap();
        prop_assert_eq!((back.task, back.sketch_shape, back.source), (task, shape, InterpretationSource::Remote));
        prop_assert_eq!(back.raw_text, text);
    }

    #[test]
    fn holding_flips_circle_between_pick_and_place(seed in any::<u64>(), scale in 60.0..200.0f64, held in 1u32..50) {
        let s = generate_synthetic(&SyntheticSpec::new(SketchShape::Circle, 1.0, scale, 0.0, seed));
        let c = classify_sketch(&s.sketch).unwrap();
        prop_assert_eq!(c.shape, SketchShape::Circle);
        let probe = SceneProbe::default();
        let free = interpret_rule_based(c.shape, &c.params, &ConstraintState::free(), &probe, None).unwrap();
        let hold = interpret_rule_based(c.shape, &c.params, &ConstraintState::holding(held), &probe, None).unwrap();
        prop_assert_eq!(free.task, TaskKind::Pick);
        prop_assert_eq!(hold.task, TaskKind::Place);
        prop_assert_eq!(free.sketch_shape, hold.sketch_shape);
        prop_assert_eq!(free.source, hold.source);
    }
}

#[test]
fn headless_runs_are_byte_identical() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(dir.join("scenarios/tasks.jsonl")).unwrap();
    let scene = dir.join("scenes/room.json");
    let subset: Vec<String> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .step_by(10)
        .map(|l| l.replace("../scenes/room.json", scene.to_str().unwrap()))
        .collect();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("subset.jsonl");
    std::fs::write(&path, subset.join("\n")).unwrap();
    let cfg = PlannerConfig::default();
    let a = serde_json::to_string(&run_headless(&path, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_headless(&path, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("\"scenarios\""));
}
