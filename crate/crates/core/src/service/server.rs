//! Websocket front end. One loop thread owns the session; a reader and a
//! writer thread per connection talk to it through channels, and
//! interpretation jobs run on their own threads.

use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use anyhow::Context;
use tungstenite::protocol::Role;
use tungstenite::{Message, WebSocket};

use super::config::ServiceConfig;
use super::pipeline::{Backend, Interpretation, PipelineError};
use super::protocol::WireMessage;
use super::session::{Phase, Session};
use crate::scene::Scene;

enum Event {
    Text(String),
    Closed,
    Job(u64, Result<Interpretation, PipelineError>),
    JobPanicked(u64),
}

pub struct Server {
    listener: TcpListener,
    scene: Scene,
    cfg: ServiceConfig,
    backend: Backend,
}

impl Server {
    pub fn bind(addr: &str, scene: Scene, cfg: ServiceConfig, backend: Backend) -> anyhow::Result<Self> {
        let listener = TcpListener::bind(addr).with_context(|| format!("cannot listen on {addr}"))?;
        Ok(Self {
            listener,
            scene,
            cfg,
            backend,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Serves connections one after another, each with a fresh session.
    /// Stops after `max_sessions` when given.
    pub fn run(&self, max_sessions: Option<usize>) -> anyhow::Result<()> {
        tracing::info!(addr = %self.local_addr(), "listening");
        let mut served = 0;
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    tracing::warn!(error = %e, "accept failed");
                    continue;
                }
            };
            let peer = stream.peer_addr().ok();
            tracing::info!(?peer, "client connected");
            if let Err(e) = self.serve_connection(stream) {
                tracing::warn!(error = %e, "session ended with an error");
            }
            tracing::info!(?peer, "client disconnected");
            served += 1;
            if max_sessions.is_some_and(|m| served >= m) {
                break;
            }
        }
        Ok(())
    }

    fn serve_connection(&self, stream: TcpStream) -> anyhow::Result<()> {
        stream.set_nodelay(true).ok();
        let ws = tungstenite::accept(stream.try_clone()?).map_err(|e| anyhow::anyhow!("handshake failed: {e}"))?;
        drop(ws);
        let ctl = stream.try_clone()?;
        let reader = WebSocket::from_raw_socket(stream.try_clone()?, Role::Server, None);
        let writer = WebSocket::from_raw_socket(stream, Role::Server, None);

        let (ev_tx, ev_rx) = mpsc::channel::<Event>();
        let (out_tx, out_rx) = mpsc::channel::<String>();
        let read_tx = ev_tx.clone();
        let reader_thread = thread::spawn(move || read_loop(reader, read_tx));
        let writer_thread = thread::spawn(move || write_loop(writer, out_rx));

        let mut session = Session::new(self.scene.clone(), self.cfg.clone(), self.backend.clone());
        let result = drive(&mut session, &ev_rx, &ev_tx, &out_tx);
        drop(out_tx);
        writer_thread.join().ok();
        ctl.shutdown(Shutdown::Both).ok();
        reader_thread.join().ok();
        result
    }
}

fn read_loop(mut ws: WebSocket<TcpStream>, tx: Sender<Event>) {
    loop {
        match ws.read() {
            Ok(Message::Text(t)) => {
                if tx.send(Event::Text(t.to_string())).is_err() {
                    break;
                }
            }
            Ok(Message::Binary(_)) => {
                if tx.send(Event::Text(String::from("<binary frame>"))).is_err() {
                    break;
                }
            }
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => {}
        }
    }
    tx.send(Event::Closed).ok();
}

fn write_loop(mut ws: WebSocket<TcpStream>, rx: Receiver<String>) {
    while let Ok(text) = rx.recv() {
        if ws.send(Message::text(text)).is_err() {
            return;
        }
    }
    ws.close(None).ok();
    ws.flush().ok();
}

fn spawn_jobs(session: &mut Session, ev_tx: &Sender<Event>) {
    for job in session.take_jobs() {
        let tx = ev_tx.clone();
        thread::spawn(move || {
            let id = job.id;
            match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| job.run())) {
                Ok(r) => tx.send(Event::Job(id, r)).ok(),
                Err(_) => tx.send(Event::JobPanicked(id)).ok(),
            };
        });
    }
}

fn drive(session: &mut Session, ev_rx: &Receiver<Event>, ev_tx: &Sender<Event>, out: &Sender<String>) -> anyhow::Result<()> {
    let emit = |msgs: Vec<WireMessage>| -> bool { msgs.into_iter().all(|m| out.send(m.to_json()).is_ok()) };
    if !emit(session.connect()) {
        return Ok(());
    }
    let tick = Duration::from_secs_f64(session.config().planner.dt());
    let obs_period = Duration::from_secs_f64(1.0 / session.config().observation_hz.max(0.1));
    let mut next_tick = Instant::now() + tick;
    let mut next_obs = Instant::now() + obs_period;
    loop {
        let now = Instant::now();
        let wake = next_tick.min(next_obs);
        let event = match ev_rx.recv_timeout(wake.saturating_duration_since(now)) {
            Ok(e) => Some(e),
            Err(RecvTimeoutError::Timeout) => None,
            Err(RecvTimeoutError::Disconnected) => break,
        };
        let msgs = match event {
            Some(Event::Text(t)) => session.handle_text(&t),
            Some(Event::Job(id, r)) => session.complete_job(id, r),
            Some(Event::JobPanicked(id)) => session.fail(&format!("interpreter crashed on job {id}")),
            Some(Event::Closed) => {
                session.close();
                break;
            }
            None => Vec::new(),
        };
        spawn_jobs(session, ev_tx);
        if !emit(msgs) {
            break;
        }
        let now = Instant::now();
        if now >= next_tick {
            next_tick += tick;
            if next_tick < now {
                next_tick = now + tick;
            }
            if !emit(session.tick()) {
                break;
            }
        }
        if now >= next_obs {
            next_obs = now + obs_period;
            if !matches!(session.phase(), Phase::Done | Phase::Failed) && !emit(vec![session.observation()]) {
                break;
            }
        }
    }
    Ok(())
}
