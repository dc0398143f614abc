use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Correct and total counts for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Count {
    pub correct: u32,
    pub total: u32,
}

impl Count {
    pub fn record(&mut self, ok: bool) {
        self.total += 1;
        if ok {
            self.correct += 1;
        }
    }
}

/// `correct / total` rounded half-up to three decimals, computed exactly.
pub fn format_rate(c: Count) -> Option<String> {
    if c.total == 0 {
        return None;
    }
    assert!(c.correct <= c.total, "correct exceeds total");
    let (n, d) = (c.correct as u64, c.total as u64);
    let millis = (2000 * n + d) / (2 * d);
    Some(format!("{}.{:03}", millis / 1000, millis % 1000))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RateTable {
    pub counts: BTreeMap<String, Count>,
    pub rates: BTreeMap<String, String>,
}

/// Rates for every class with a non-zero total; empty classes are returned
/// in the flagged list instead.
pub fn compute_rates(counts: &BTreeMap<String, Count>) -> (RateTable, Vec<String>) {
    let mut table = RateTable::default();
    let mut flagged = Vec::new();
    for (k, c) in counts {
        match format_rate(*c) {
            Some(r) => {
                table.counts.insert(k.clone(), *c);
                table.rates.insert(k.clone(), r);
            }
            None => flagged.push(k.clone()),
        }
    }
    (table, flagged)
}

/// Outcome of one headless scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub name: String,
    pub family: String,
    pub expected_task: String,
    pub expected_shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    pub inferred: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variation_ok: Option<bool>,
    pub succeeded: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    /// Interpretation correctness per expected task.
    pub isr: RateTable,
    /// Execution success per scenario family.
    pub tsr: RateTable,
    /// Parameter correctness per declared variation.
    pub vsr: RateTable,
    pub flagged: Vec<String>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioRecord>,
}

impl EvalReport {
    pub fn from_counts(
        isr: &BTreeMap<String, Count>,
        tsr: &BTreeMap<String, Count>,
        vsr: &BTreeMap<String, Count>,
    ) -> Self {
        let (isr, mut flagged) = compute_rates(isr);
        let (tsr, f2) = compute_rates(tsr);
        let (vsr, f3) = compute_rates(vsr);
        flagged.extend(f2.into_iter().map(|k| format!("tsr:{k}")));
        flagged.extend(f3.into_iter().map(|k| format!("vsr:{k}")));
        Self {
            isr,
            tsr,
            vsr,
            flagged,
            scenarios: Vec::new(),
        }
    }

    /// Plain-text table: one row per family with ISR and TSR as fractions.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>9} {:>9}", "Task", "ISR", "TSR");
        let frac = |c: Option<&Count>| c.map(|c| format!("{}/{}", c.correct, c.total)).unwrap_or_else(|| "-".into());
        let mut keys: Vec<&String> = self.isr.counts.keys().chain(self.tsr.counts.keys()).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let _ = writeln!(out, "{:<16} {:>9} {:>9}", k, frac(self.isr.counts.get(k)), frac(self.tsr.counts.get(k)));
        }
        if !self.vsr.counts.is_empty() {
            let _ = writeln!(out, "\n{:<16} {:>9}", "Variation", "VSR");
            for (k, c) in &self.vsr.counts {
                let _ = writeln!(out, "{:<16} {:>9}", k, frac(Some(c)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(correct: u32, total: u32) -> Count {
        Count { correct, total }
    }

    #[test]
    fn rate_examples() {
        assert_eq!(format_rate(c(9, 10)).unwrap(), "0.900");
        assert_eq!(format_rate(c(0, 10)).unwrap(), "0.000");
        assert_eq!(format_rate(c(10, 10)).unwrap(), "1.000");
        assert_eq!(format_rate(c(2, 3)).unwrap(), "0.667");
        assert_eq!(format_rate(c(1, 8)).unwrap(), "0.125");
        assert_eq!(format_rate(c(0, 0)), None);
    }

    #[test]
    fn empty_classes_are_flagged() {
        let counts: BTreeMap<String, Count> = [("a".to_string(), c(1, 2)), ("b".to_string(), c(0, 0))].into();
        let (t, flagged) = compute_rates(&counts);
        assert_eq!(t.rates["a"], "0.500");
        assert!(!t.rates.contains_key("b"));
        assert_eq!(flagged, vec!["b".to_string()]);
    }
}
