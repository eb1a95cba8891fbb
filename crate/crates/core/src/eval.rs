//! Prequential test-then-train evaluation and its metric records.
//!
//! Runs emit one JSON object per line: a `"record": "batch"` line for each
//! batch and a closing `"record": "summary"` line.
//!
//! Batch fields: `batch_index`, `samples`, `classification_rate`,
//! `precision_macro`, `recall_macro`, `precision_per_class`,
//! `recall_per_class`, `fuzzy_rule_count`, `hidden_layer_count`,
//! `drift_phase`, `wall_time`.
//!
//! Summary fields: `batches`, one `{mean, std}` pair per numeric metric,
//! `seed` and the resolved `config`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::drift::DriftPhase;
use crate::stack::DeepStack;
use crate::stream::Batch;
use crate::{Error, Result};

/// Metrics of one batch, computed from predictions made before training on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    pub batch_index: usize,
    pub samples: usize,
    pub classification_rate: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub precision_per_class: Vec<f64>,
    pub recall_per_class: Vec<f64>,
    /// Rules across non-dormant layers after the batch was learned.
    pub fuzzy_rule_count: usize,
    /// Non-dormant layers after the batch was learned.
    pub hidden_layer_count: usize,
    pub drift_phase: DriftPhase,
    /// Seconds spent testing and training on the batch.
    pub wall_time: f64,
}

/// Mean and population standard deviation of a metric across batches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub batches: usize,
    pub classification_rate: MeanStd,
    pub precision_macro: MeanStd,
    pub recall_macro: MeanStd,
    pub fuzzy_rule_count: MeanStd,
    pub hidden_layer_count: MeanStd,
    pub wall_time: MeanStd,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: BTreeMap<String, String>,
}

impl RunSummary {
    /// Aggregates batch records with equal weight per batch.
    pub fn from_batches(batches: &[BatchMetrics]) -> Self {
        let of = |f: fn(&BatchMetrics) -> f64| MeanStd::of(batches.iter().map(f));
        Self {
            batches: batches.len(),
            classification_rate: of(|b| b.classification_rate),
            precision_macro: of(|b| b.precision_macro),
            recall_macro: of(|b| b.recall_macro),
            fuzzy_rule_count: of(|b| b.fuzzy_rule_count as f64),
            hidden_layer_count: of(|b| b.hidden_layer_count as f64),
            wall_time: of(|b| b.wall_time),
            seed: None,
            config: BTreeMap::new(),
        }
    }
}

/// One line of a metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum Record {
    Batch(BatchMetrics),
    Summary(RunSummary),
}

/// Per-class and macro-averaged precision and recall.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionRecall {
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub precision_per_class: Vec<f64>,
    pub recall_per_class: Vec<f64>,
}

/// Precision and recall from a confusion matrix indexed `[truth][predicted]`.
/// Classes with an empty denominator contribute 0.
pub fn precision_recall(confusion: &[Vec<u64>]) -> PrecisionRecall {
    let m = confusion.len();
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut precision = Vec::with_capacity(m);
    let mut recall = Vec::with_capacity(m);
    for c in 0..m {
        let tp = confusion[c][c];
        let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
        let actual: u64 = confusion[c].iter().sum();
        precision.push(ratio(tp, predicted));
        recall.push(ratio(tp, actual));
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    PrecisionRecall {
        precision_macro: mean(&precision),
        recall_macro: mean(&recall),
        precision_per_class: precision,
        recall_per_class: recall,
    }
}

pub fn confusion_matrix(predicted: &[usize], truth: &[usize], class_count: usize) -> Vec<Vec<u64>> {
    let mut confusion = vec![vec![0u64; class_count]; class_count];
    for (&p, &t) in predicted.iter().zip(truth) {
        confusion[t][p] += 1;
    }
    confusion
}

/// Runs `stack` over `stream` in test-then-train order, calling `on_batch`
/// with each batch's metrics as soon as they are known.
pub fn prequential_run<I, F>(
    stack: &mut DeepStack,
    stream: I,
    mut on_batch: F,
) -> Result<(Vec<BatchMetrics>, RunSummary)>
where
    I: IntoIterator<Item = Batch>,
    F: FnMut(&BatchMetrics) -> Result<()>,
{
    let mut records = Vec::new();
    for (index, batch) in stream.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = stack.train_batch(&batch)?;
        let wall_time = start.elapsed().as_secs_f64();
        let truth: Vec<usize> = batch.samples().iter().map(|s| s.label()).collect();
        let correct = outcome
            .predictions
            .iter()
            .zip(&truth)
            .filter(|(p, t)| p == t)
            .count();
        let pr = precision_recall(&confusion_matrix(
            &outcome.predictions,
            &truth,
            stack.class_count(),
        ));
        let metrics = BatchMetrics {
            batch_index: index + 1,
            samples: batch.len(),
            classification_rate: correct as f64 / batch.len() as f64,
            precision_macro: pr.precision_macro,
            recall_macro: pr.recall_macro,
            precision_per_class: pr.precision_per_class,
            recall_per_class: pr.recall_per_class,
            fuzzy_rule_count: stack.rule_count(),
            hidden_layer_count: stack.active_layer_count(),
            drift_phase: outcome.phase(),
            wall_time,
        };
        on_batch(&metrics)?;
        records.push(metrics);
    }
    if records.is_empty() {
        return Err(Error::config("stream", "produced no batches"));
    }
    let summary = RunSummary::from_batches(&records);
    Ok((records, summary))
}

pub fn write_record<W: Write>(out: &mut W, record: &Record) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

/// Reads the batch records of a metrics file, ignoring summary lines and
/// blank lines. `first_line` numbers the first line of `reader`.
pub fn read_batch_records<R: BufRead>(reader: R, first_line: usize) -> Result<Vec<BatchMetrics>> {
    let mut batches = Vec::new();
    for (offset, line) in reader.lines().enumerate() {
        let line_no = first_line + offset;
        let line = line.map_err(|e| Error::Record {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: line_no,
            reason: e.to_string(),
        })?;
        if let Record::Batch(b) = record {
            batches.push(b);
        }
    }
    Ok(batches)
}
