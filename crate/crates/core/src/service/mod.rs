//! Operator-facing service: wire protocol, session state machine, websocket
//! server and headless evaluation.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod headless;
pub mod pipeline;
pub mod protocol;
pub mod server;
pub mod session;

pub use config::{InterpreterKind, ServiceConfig};
pub use dataset::{evaluate_classifier, generate_dataset, read_dataset, write_dataset, ClassifierReport, DatasetConfig, DatasetEntry};
pub use eval::{compute_rates, format_rate, Count, EvalReport, RateTable, ScenarioRecord};
pub use headless::{load_scenarios, parse_scenarios, run_headless, Anchor, Harness, HeadlessError, Recipe, Scenario, Variation};
pub use pipeline::{interpret_sketch, Backend, Interpretation, PipelineError};
pub use protocol::{parse_message, Body, WireMessage, PROTOCOL_VERSION};
pub use server::Server;
pub use session::{InterpretJob, Phase, Session, SessionState, Transition};
