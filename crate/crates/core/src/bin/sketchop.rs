use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use sketchop::classify::Classifier;
use sketchop::planner::PlannerConfig;
use sketchop::scene::Scene;
use sketchop::service::{
    evaluate_classifier, generate_dataset, read_dataset, run_headless, write_dataset, DatasetConfig,
    InterpreterKind, Server, ServiceConfig,
};

#[derive(Parser)]
#[command(name = "sketchop", version, about = "Sketch-driven teleoperation of a simulated mobile manipulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the operator console protocol over a websocket.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        scene: PathBuf,
        /// Overrides the interpreter named in the config file.
        #[arg(long, value_enum)]
        interpreter: Option<InterpreterKind>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Recorded in the log; the simulator itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exit after this many client sessions.
        #[arg(long)]
        max_sessions: Option<usize>,
    },
    /// Write a labelled synthetic sketch dataset as JSON Lines.
    GenDataset {
        /// Sketches per shape.
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 60.0)]
        min_scale: f64,
        #[arg(long, default_value_t = 200.0)]
        max_scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify a dataset and report per-shape accuracy.
    EvalClassifier {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run scripted scenarios end to end and report ISR, TSR and VSR.
    RunHeadless {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<ServiceConfig> {
    match path {
        Some(p) => ServiceConfig::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(ServiceConfig::default()),
    }
}

fn write_json(path: &Option<PathBuf>, value: &impl serde::Serialize) -> anyhow::Result<()> {
    if let Some(p) = path {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Serve {
            port,
            host,
            scene,
            interpreter,
            config,
            seed,
            max_sessions,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(i) = interpreter {
                cfg.interpreter = i;
            }
            let scene = Scene::load(&scene).with_context(|| format!("loading scene {}", scene.display()))?;
            let backend = cfg.backend();
            tracing::info!(seed, interpreter = ?cfg.interpreter, auto_confirm = cfg.auto_confirm, "starting");
            let server = Server::bind(&format!("{host}:{port}"), scene, cfg, backend)?;
            server.run(max_sessions)
        }
        Command::GenDataset {
            count,
            sigma,
            seed,
            min_scale,
            max_scale,
            out,
        } => {
            anyhow::ensure!(sigma >= 0.0 && min_scale > 0.0 && max_scale >= min_scale, "invalid sigma or scale range");
            let cfg = DatasetConfig {
                count_per_shape: count,
                sigma,
                seed,
                scale: (min_scale, max_scale),
            };
            let entries = generate_dataset(&cfg);
            let mut w = std::io::BufWriter::new(std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            write_dataset(&entries, &mut w)?;
            w.flush()?;
            println!("wrote {} sketches to {}", entries.len(), out.display());
            Ok(())
        }
        Command::EvalClassifier { dataset, report, config } => {
            let cfg = load_config(&config)?;
            let entries = read_dataset(&dataset)?;
            let t = std::time::Instant::now();
            let rep = evaluate_classifier(&Classifier::new(cfg.classifier), &entries);
            for (shape, c) in &rep.accuracy.counts {
                println!("{shape:<18} {:>5}/{:<5} {}", c.correct, c.total, rep.accuracy.rates[shape]);
            }
            println!("{:<18} {:>5}/{:<5} ({:.2} s)", "overall", rep.overall.correct, rep.overall.total, t.elapsed().as_secs_f64());
            write_json(&report, &rep)
        }
        Command::RunHeadless {
            scenarios,
            report,
            config,
        } => {
            let planner: PlannerConfig = load_config(&config)?.planner;
            let rep = run_headless(&scenarios, &planner)?;
            for s in rep.scenarios.iter().filter(|s| !s.succeeded) {
                println!("FAILED {}: {}", s.name, s.detail);
            }
            print!("{}", rep.table());
            write_json(&report, &rep)
        }
    }
}
