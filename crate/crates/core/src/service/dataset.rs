//! Labelled synthetic sketch corpora and classifier accuracy reports.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::{compute_rates, Count, RateTable};
use crate::classify::{generate_synthetic, Classifier, SketchShape, SyntheticSample, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub count_per_shape: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Shape size range in pixels.
    pub scale: (f64, f64),
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            count_per_shape: 500,
            sigma: 0.0,
            seed: 0,
            scale: (60.0, 200.0),
        }
    }
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub spec: SyntheticSpec,
    #[serde(flatten)]
    pub sample: SyntheticSample,
}

/// `count_per_shape` sketches of every shape, with random scale, rotation
/// and per-sketch seed drawn from `seed`.
pub fn generate_dataset(cfg: &DatasetConfig) -> Vec<DatasetEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.count_per_shape * SketchShape::ALL.len());
    for shape in SketchShape::ALL {
        for _ in 0..cfg.count_per_shape {
            let scale = if cfg.scale.1 > cfg.scale.0 {
                rng.random_range(cfg.scale.0..cfg.scale.1)
            } else {
                cfg.scale.0
            };
            let spec = SyntheticSpec::new(shape, cfg.sigma, scale, rng.random_range(0.0..TAU), rng.random());
            out.push(DatasetEntry {
                spec,
                sample: generate_synthetic(&spec),
            });
        }
    }
    out
}

pub fn write_dataset(entries: &[DatasetEntry], w: &mut impl Write) -> std::io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut *w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a dataset file; errors carry the line number.
pub fn read_dataset(path: &Path) -> anyhow::Result<Vec<DatasetEntry>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|e| anyhow::anyhow!("{}: line {}: {e}", path.display(), i + 1))?;
        out.push(e);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassifierReport {
    /// Accuracy per true shape.
    pub accuracy: RateTable,
    pub overall: Count,
    /// True shape → predicted shape (or "error") → count.
    pub confusion: BTreeMap<String, BTreeMap<String, u32>>,
    pub flagged: Vec<String>,
}

pub fn evaluate_classifier(classifier: &Classifier, entries: &[DatasetEntry]) -> ClassifierReport {
    let mut counts: BTreeMap<String, Count> = BTreeMap::new();
    let mut report = ClassifierReport::default();
    for e in entries {
        let truth = e.sample.shape.as_str();
        let got = classifier.classify(&e.sample.sketch).map(|c| c.shape);
        let ok = got == Ok(e.sample.shape);
        counts.entry(truth.to_string()).or_default().record(ok);
        report.overall.record(ok);
        let predicted = got.map(|s| s.as_str()).unwrap_or("error");
        *report
            .confusion
            .entry(truth.to_string())
            .or_default()
            .entry(predicted.to_string())
            .or_default() += 1;
    }
    let (table, flagged) = compute_rates(&counts);
    report.accuracy = table;
    report.flagged = flagged;
    report
}
