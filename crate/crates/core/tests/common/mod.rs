//! Shared by the session tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchop::planner::Stick;
use sketchop::scene::Scene;
use sketchop::service::protocol::{Body, Confirm, Empty, Joystick};
use sketchop::service::{Backend, Phase, Recipe, ServiceConfig, Session, WireMessage};
use sketchop::sketch::{FrameId, SketchSet, Stroke, StrokePoint};

pub fn room() -> Scene {
    Scene::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes/room.json")).unwrap()
}

fn errors(out: &[WireMessage]) -> Vec<(String, Option<u64>)> {
    out.iter()
        .filter_map(|m| match &m.body {
            Body::Error(e) => Some((e.code.clone(), e.in_reply_to)),
            _ => None,
        })
        .collect()
}

/// Whether the phase table allows `body` in `phase`. `None` for server types.
pub fn legal(phase: Phase, body: &Body) -> Option<bool> {
    use Phase::*;
    Some(match body {
        Body::SketchSubmit(_) => phase == AwaitingSketch,
        Body::Confirm(Confirm { accept: true }) => phase == AwaitingConfirm,
        Body::Confirm(Confirm { accept: false }) => {
            matches!(phase, AwaitingConfirm | Interpreting | Executing | AwaitingFeedback)
        }
        Body::Joystick(_) | Body::Grasp(_) | Body::Release(_) => phase == AwaitingFeedback,
        _ => return None,
    })
}

fn random_stroke(rng: &mut ChaCha8Rng) -> Stroke {
    let n = rng.random_range(2..20);
    let mut t = 0.0;
    let pts = (0..n)
        .map(|_| {
            t += rng.random_range(1.0..30.0);
            StrokePoint {
                x: rng.random_range(0.0..320.0),
                y: rng.random_range(0.0..240.0),
                t,
            }
        })
        .collect();
    Stroke::new(pts).unwrap()
}

const OBJECTS: [&str; 6] = ["cube", "cup", "ball", "bowl", "crate", "drawer_box"];

fn random_body(rng: &mut ChaCha8Rng, s: &Session) -> Body {
    let frame = s.state().frame_id.unwrap();
    match rng.random_range(0..12) {
        0..=2 => {
            let obj = OBJECTS[rng.random_range(0..OBJECTS.len())];
            match s.frame(frame).map(|f| {
                Recipe::CircleAround {
                    object: obj.into(),
                    radius_px: None,
                }
                .draw(&f, &s.world().scene, 0.5, rng.random(), None)
            }) {
                Some(Ok(sk)) => Body::SketchSubmit(sk),
                _ => Body::SketchSubmit(SketchSet::new(frame, vec![random_stroke(rng)], None).unwrap()),
            }
        }
        3 => {
            let id = if rng.random_bool(0.5) { frame } else { FrameId(rng.random_range(0..200)) };
            let strokes = (0..rng.random_range(1..3)).map(|_| random_stroke(rng)).collect();
            Body::SketchSubmit(SketchSet::new(id, strokes, None).unwrap())
        }
        4 | 5 => Body::Confirm(Confirm { accept: rng.random_bool(0.6) }),
        6 | 7 => Body::Joystick(Joystick {
            left: Stick::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            right: Stick::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            done: rng.random_bool(0.3),
        }),
        8 => Body::Grasp(Empty {}),
        9 => Body::Release(Empty {}),
        10 => Body::Status(sketchop::service::protocol::Status {
            phase: Phase::Executing,
            primitive: None,
            primitive_name: None,
            sim_time: 0.0,
        }),
        _ => Body::Confirm(Confirm { accept: false }),
    }
}

#[derive(Debug, Default)]
pub struct FuzzStats {
    pub messages: usize,
    pub illegal: usize,
    pub tasks: usize,
    pub transitions: usize,
}

/// Feeds `n` random client messages to a session and panics on the first
/// broken invariant: a reply that is not exactly one error for an illegal
/// message, a phase change on rejection, a gap in server seqs or an
/// undeclared transition.
pub fn fuzz_session(n: usize, seed: u64) -> FuzzStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Session::new(room(), ServiceConfig::default(), Backend::Rule);
    s.connect();
    let mut seq = 0u64;
    let mut last_out = 0u64;
    let mut illegal = 0;
    let mut tasks = 0;
    let check_seq = |out: &[WireMessage], last: &mut u64| {
        for m in out {
            assert_eq!(m.seq, *last + 1);
            *last = m.seq;
        }
    };
    last_out += 2;
    for n in 0..n {
        let phase = s.phase();
        let roll = rng.random_range(0..100);
        if roll < 5 {
            // Garbage text.
            seq += 1;
            let text = match rng.random_range(0..3) {
                0 => format!("{{\"seq\": {seq}, \"type\": \"warp\"}}"),
                1 => format!("{{\"seq\": {seq}, \"type\": \"joystick\", \"payload\": {{\"left\": 3}}}}"),
                _ => "{{{".to_string(),
            };
            let out = s.handle_text(&text);
            check_seq(&out, &mut last_out);
            assert_eq!(out.len(), 1, "{text}");
            assert_eq!(s.phase(), phase);
            continue;
        }
        if roll < 8 && seq > 0 {
            // A replay.
            let body = random_body(&mut rng, &s);
            let out = s.handle(WireMessage::new(rng.random_range(0..=seq), body));
            assert!(out.is_empty());
            assert_eq!(s.phase(), phase);
            continue;
        }
        seq += 1;
        let body = random_body(&mut rng, &s);
        let allowed = legal(phase, &body);
        let out = s.handle(WireMessage::new(seq, body));
        check_seq(&out, &mut last_out);
        let errs = errors(&out);
        match allowed {
            Some(true) => {
                assert!(errs.len() <= 1, "step {n}: {errs:?}");
                for (code, reply) in &errs {
                    assert!(["stale_frame", "rejected"].contains(&code.as_str()), "step {n}: {code}");
                    assert_eq!(*reply, Some(seq));
                }
            }
            Some(false) | None => {
                illegal += 1;
                assert_eq!(out.len(), 1, "step {n} in {phase:?}: {out:?}");
                let code = if allowed.is_none() { "unexpected_type" } else { "bad_phase" };
                assert_eq!(errs, [(code.to_string(), Some(seq))], "step {n}");
                assert_eq!(s.phase(), phase);
            }
        }
        if rng.random_bool(0.7) {
            let out = s.run_jobs();
            check_seq(&out, &mut last_out);
        }
        for _ in 0..rng.random_range(0..40) {
            let out = s.tick();
            check_seq(&out, &mut last_out);
            tasks += out.iter().filter(|m| m.body.type_name() == "task_result").count();
        }
    }
    for t in s.transitions() {
        assert!(t.from.can_transition(t.to), "{:?} -> {:?}", t.from, t.to);
    }
    for w in s.transitions().windows(2) {
        assert_eq!(w[0].to, w[1].from);
    }
    let seen: BTreeSet<Phase> = s.transitions().iter().map(|t| t.to).collect();
    for p in [Phase::Interpreting, Phase::AwaitingConfirm, Phase::Executing, Phase::AwaitingFeedback] {
        assert!(seen.contains(&p), "{p:?} never reached");
    }
    FuzzStats {
        messages: n,
        illegal,
        tasks,
        transitions: s.transitions().len(),
    }
}
