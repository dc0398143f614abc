use std::net::TcpStream;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use sketchop::scene::Scene;
use sketchop::service::protocol::{Body, Confirm, Joystick};
use sketchop::service::{parse_message, Backend, Phase, Recipe, Server, ServiceConfig, WireMessage};
use sketchop::TaskKind;
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

type Client = WebSocket<MaybeTlsStream<TcpStream>>;

fn scene() -> Scene {
    Scene::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes/room.json")).unwrap()
}

fn start(cfg: ServiceConfig, sessions: usize) -> (String, std::thread::JoinHandle<()>) {
    let server = Server::bind("127.0.0.1:0", scene(), cfg, Backend::Rule).unwrap();
    let url = format!("ws://{}/", server.local_addr());
    let h = std::thread::spawn(move || server.run(Some(sessions)).unwrap());
    (url, h)
}

fn connect(url: &str) -> Client {
    let (ws, _) = tungstenite::connect(url).unwrap();
    if let MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
    }
    ws
}

fn recv(ws: &mut Client) -> WireMessage {
    loop {
        match ws.read().unwrap() {
            Message::Text(t) => return parse_message(&t).unwrap_or_else(|(_, e)| panic!("{e}: {t}")),
            Message::Close(_) => panic!("closed"),
            _ => {}
        }
    }
}

fn send(ws: &mut Client, m: WireMessage) {
    ws.send(Message::text(m.to_json())).unwrap();
}

/// Reads until `pred` matches, returning everything read.
fn until(ws: &mut Client, pred: impl Fn(&WireMessage) -> bool) -> Vec<WireMessage> {
    let deadline = Instant::now() + Duration::from_secs(60);
    let mut seen = Vec::new();
    while Instant::now() < deadline {
        let m = recv(ws);
        let hit = pred(&m);
        seen.push(m);
        if hit {
            return seen;
        }
    }
    panic!("timed out; saw {:?}", seen.iter().map(|m| m.body.type_name()).collect::<Vec<_>>());
}

fn is(kind: &'static str) -> impl Fn(&WireMessage) -> bool {
    move |m| m.body.type_name() == kind
}

#[test]
fn pick_over_websocket() {
    let (url, server) = start(ServiceConfig::default(), 1);
    let mut ws = connect(&url);

    let hello = recv(&mut ws);
    let Body::Hello(h) = &hello.body else { panic!("{hello:?}") };
    assert_eq!(h.phase, Phase::AwaitingSketch);
    assert_eq!(hello.seq, 1);
    let obs = recv(&mut ws);
    let Body::Observation(o) = &obs.body else { panic!("{obs:?}") };
    assert_eq!(obs.seq, 2);

    // Rebuild the frame the client saw to draw on it.
    use base64::Engine;
    let png = base64::engine::general_purpose::STANDARD.decode(&o.image_png_base64).unwrap();
    let rgb = sketchop::scene::RgbImage::from_png(&png).unwrap();
    assert_eq!((rgb.width, rgb.height), (o.intrinsics.width, o.intrinsics.height));
    let mut world = sketchop::scene::World::new(scene());
    let mut frame = world.observe();
    assert_eq!(frame.rgb, rgb);
    frame.frame_id = o.frame_id;
    let sketch = Recipe::CircleAround {
        object: "cube".into(),
        radius_px: None,
    }
    .draw(&frame, &world.scene, 0.5, 11, None)
    .unwrap();

    send(&mut ws, WireMessage::new(1, Body::SketchSubmit(sketch)));
    let seen = until(&mut ws, is("interpretation"));
    let Some(Body::Interpretation(i)) = seen.last().map(|m| &m.body) else { unreachable!() };
    assert_eq!(i.result.task, TaskKind::Pick);
    assert!(i.needs_confirm);
    until(&mut ws, |m| matches!(&m.body, Body::Status(s) if s.phase == Phase::AwaitingConfirm));

    send(&mut ws, WireMessage::new(2, Body::Confirm(Confirm { accept: true })));
    until(&mut ws, is("feedback_request"));
    send(
        &mut ws,
        WireMessage::new(
            3,
            Body::Joystick(Joystick {
                done: true,
                ..Default::default()
            }),
        ),
    );
    let seen = until(&mut ws, is("task_result"));
    let Some(Body::TaskResult(r)) = seen.last().map(|m| &m.body) else { unreachable!() };
    assert!(r.outcome.success, "{}", r.outcome.detail);
    assert_eq!(r.task, TaskKind::Pick);
    until(&mut ws, |m| matches!(&m.body, Body::Status(s) if s.phase == Phase::AwaitingSketch));

    // A message in the wrong phase gets one error naming its seq.
    send(&mut ws, WireMessage::new(4, Body::Confirm(Confirm { accept: true })));
    let seen = until(&mut ws, is("error"));
    let Some(Body::Error(e)) = seen.last().map(|m| &m.body) else { unreachable!() };
    assert_eq!((e.code.as_str(), e.in_reply_to), ("bad_phase", Some(4)));

    ws.send(Message::text("garbage")).unwrap();
    let seen = until(&mut ws, is("error"));
    let Some(Body::Error(e)) = seen.last().map(|m| &m.body) else { unreachable!() };
    assert_eq!(e.code, "malformed");

    ws.close(None).unwrap();
    while ws.read().is_ok() {}
    server.join().unwrap();
}

#[test]
fn observations_keep_coming_and_sessions_restart() {
    let (url, server) = start(
        ServiceConfig {
            observation_hz: 20.0,
            ..Default::default()
        },
        2,
    );
    for _ in 0..2 {
        let mut ws = connect(&url);
        assert_eq!(recv(&mut ws).body.type_name(), "hello");
        let mut ids = Vec::new();
        let mut last_seq = 1;
        while ids.len() < 5 {
            let m = recv(&mut ws);
            assert_eq!(m.seq, last_seq + 1);
            last_seq = m.seq;
            if let Body::Observation(o) = &m.body {
                ids.push(o.frame_id);
            }
        }
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        ws.close(None).unwrap();
        while ws.read().is_ok() {}
    }
    server.join().unwrap();
}
