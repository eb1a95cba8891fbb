//! The deep stack of evolving classifiers.
//!
//! Every layer sees the (masked) original input followed by the class
//! scores of all layers below it. Layers vote with credibility weights that
//! rise and fall with their prequential hits and misses. Drift verdicts on
//! the ensemble's error stream grow the stack, and layers whose outputs
//! carry the same information are merged away.

mod config;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub use config::{MergeStatistic, StackConfig};

use crate::drift::{assess, AccuracyVector, DriftPhase, DriftVerdict};
use crate::gclass::GClassModel;
use crate::stats::PairMoments;
use crate::stream::{Batch, Sample};
use crate::{Error, Result};

/// One hidden layer and its voting state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerState {
    pub model: GClassModel,
    /// Voting weight χ in `[0, 1]`.
    pub voting_weight: f64,
    /// Decaying factor ρ in `[0, 1]`.
    pub decay: f64,
    /// Merged-away layers keep their slot but never vote or learn again.
    pub dormant: bool,
    /// 1-based depth.
    pub depth_index: usize,
}

/// Scores and predicted class of one layer on one input.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutput {
    pub scores: Vec<f64>,
    pub predicted: usize,
}

/// Result of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// One entry per layer; `None` for dormant layers.
    pub per_layer: Vec<Option<LayerOutput>>,
    pub predicted: usize,
}

/// What happened while processing one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    /// Ensemble predictions made before any parameter moved.
    pub predictions: Vec<usize>,
    /// Detector verdict; `None` for the bootstrap batch.
    pub verdict: Option<DriftVerdict>,
    pub layer_added: bool,
    /// Depths of layers merged away on this batch.
    pub merged: Vec<usize>,
}

impl BatchOutcome {
    pub fn phase(&self) -> DriftPhase {
        self.verdict
            .as_ref()
            .map_or(DriftPhase::Stable, |v| v.phase)
    }
}

/// Moments between two layers' outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerPairStats {
    lower: usize,
    upper: usize,
    moments: Vec<PairMoments>,
}

/// One step of the reward/penalty scheme on `(χ, ρ)`.
///
/// A miss lowers ρ by `step` and multiplies χ by the new ρ; a hit raises ρ
/// by `step` and multiplies χ by `1 + ρ`, capped at 1.
pub fn update_voting_weight(chi: f64, rho: f64, correct: bool, step: f64) -> (f64, f64) {
    if correct {
        let rho = (rho + step).clamp(0.0, 1.0);
        ((chi * (1.0 + rho)).min(1.0), rho)
    } else {
        let rho = (rho - step).clamp(0.0, 1.0);
        (chi * rho, rho)
    }
}

/// Weighted vote: every voter adds its weight to its predicted class.
/// Ties go to the lower class index.
pub fn weighted_vote(votes: &[(usize, f64)], class_count: usize) -> usize {
    let mut sigma = vec![0.0; class_count];
    for &(class, weight) in votes {
        sigma[class] += weight;
    }
    crate::gclass::argmax(&sigma)
}

/// The deep stacked network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepStack {
    config: StackConfig,
    input_dim: usize,
    class_count: usize,
    layers: Vec<LayerState>,
    feature_active: Vec<bool>,
    warning_buffer: Vec<Sample>,
    /// `(x_j, y_o)` moments of the latest batch, index `j·m + o`.
    feature_stats: Vec<PairMoments>,
    layer_stats: Vec<LayerPairStats>,
    /// Error bits of the most recent batches, oldest first.
    recent_errors: VecDeque<Vec<bool>>,
    timestamp: usize,
    drift_count: usize,
}

impl DeepStack {
    pub fn new(input_dim: usize, class_count: usize, config: StackConfig) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::config("input_dim", "must be positive"));
        }
        if class_count < 2 {
            return Err(Error::config("class_count", "need at least two classes"));
        }
        Ok(Self {
            config,
            input_dim,
            class_count,
            layers: Vec::new(),
            feature_active: vec![true; input_dim],
            warning_buffer: Vec::new(),
            feature_stats: vec![PairMoments::new(); input_dim * class_count],
            layer_stats: Vec::new(),
            recent_errors: VecDeque::new(),
            timestamp: 0,
            drift_count: 0,
        })
    }

    pub fn config(&self) -> &StackConfig {
        &self.config
    }

    /// Replaces the configuration after validating it.
    pub fn set_config(&mut self, config: StackConfig) -> Result<()> {
        config.validate()?;
        self.config = config;
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn layers(&self) -> &[LayerState] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn active_layer_count(&self) -> usize {
        self.layers.iter().filter(|l| !l.dormant).count()
    }

    /// Total rules over the non-dormant layers.
    pub fn rule_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| !l.dormant)
            .map(|l| l.model.rule_count())
            .sum()
    }

    /// Feature weights λ of the original inputs.
    pub fn feature_mask(&self) -> &[bool] {
        &self.feature_active
    }

    pub fn warning_buffer_len(&self) -> usize {
        self.warning_buffer.len()
    }

    /// Number of batches processed so far.
    pub fn timestamp(&self) -> usize {
        self.timestamp
    }

    pub fn drift_count(&self) -> usize {
        self.drift_count
    }

    /// Input of a layer at depth `prior.len() + 1`: the masked original
    /// input followed by the preceding layers' scores, zeros for dormant
    /// ones.
    pub fn augment_features(&self, x: &[f64], prior: &[Option<&[f64]>]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let m = self.class_count;
        let mut out = Vec::with_capacity(self.input_dim + m * prior.len());
        out.extend(
            x.iter()
                .zip(&self.feature_active)
                .map(|(v, &on)| if on { *v } else { 0.0 }),
        );
        for slot in prior {
            match slot {
                Some(scores) if scores.len() == m => out.extend_from_slice(scores),
                Some(scores) => {
                    return Err(Error::Dimension {
                        expected: m,
                        got: scores.len(),
                    })
                }
                None => out.extend(std::iter::repeat(0.0).take(m)),
            }
        }
        Ok(out)
    }

    /// Runs the layers `0..upto` bottom-up and returns their outputs.
    fn outputs_below(&self, x: &[f64], upto: usize) -> Result<Vec<Option<LayerOutput>>> {
        let mut outputs: Vec<Option<LayerOutput>> = Vec::with_capacity(upto);
        for layer in &self.layers[..upto] {
            if layer.dormant {
                outputs.push(None);
                continue;
            }
            let prior: Vec<Option<&[f64]>> = outputs
                .iter()
                .map(|o| o.as_ref().map(|o| o.scores.as_slice()))
                .collect();
            let input = self.augment_features(x, &prior)?;
            let inference = layer.model.infer(&input)?;
            outputs.push(Some(LayerOutput {
                predicted: inference.predicted,
                scores: inference.scores,
            }));
        }
        Ok(outputs)
    }

    fn augmented_input(&self, x: &[f64], depth: usize) -> Result<Vec<f64>> {
        let outputs = self.outputs_below(x, depth)?;
        let prior: Vec<Option<&[f64]>> = outputs
            .iter()
            .map(|o| o.as_ref().map(|o| o.scores.as_slice()))
            .collect();
        self.augment_features(x, &prior)
    }

    /// Evaluates every layer and combines them by weighted voting. An empty
    /// stack predicts class 0.
    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        let per_layer = self.outputs_below(x, self.layers.len())?;
        let votes: Vec<(usize, f64)> = self
            .layers
            .iter()
            .zip(&per_layer)
            .filter_map(|(l, o)| o.as_ref().map(|o| (o.predicted, l.voting_weight)))
            .collect();
        let total: f64 = votes.iter().map(|v| v.1).sum();
        let predicted = if total > 0.0 {
            weighted_vote(&votes, self.class_count)
        } else {
            // every voter has lost all credibility
            match self.winning_layer() {
                Some(d) => per_layer[d - 1].as_ref().map_or(0, |o| o.predicted),
                None => 0,
            }
        };
        Ok(Forward {
            per_layer,
            predicted,
        })
    }

    /// Depth of the non-dormant layer with the largest voting weight; ties
    /// go to the deeper layer.
    pub fn winning_layer(&self) -> Option<usize> {
        let mut best: Option<&LayerState> = None;
        for layer in self.layers.iter().filter(|l| !l.dormant) {
            if best.map_or(true, |b| layer.voting_weight >= b.voting_weight) {
                best = Some(layer);
            }
        }
        best.map(|l| l.depth_index)
    }

    /// Applies the reward/penalty step to every layer that voted on a
    /// sample with label `truth`.
    pub fn update_voting_weights(&mut self, per_layer: &[Option<LayerOutput>], truth: usize) {
        let step = self.config.step_size;
        for (layer, out) in self.layers.iter_mut().zip(per_layer) {
            if let (false, Some(out)) = (layer.dormant, out) {
                let (chi, rho) =
                    update_voting_weight(layer.voting_weight, layer.decay, out.predicted == truth, step);
                layer.voting_weight = chi;
                layer.decay = rho;
            }
        }
    }

    /// Replaces the feature moments with those of `batch`.
    fn update_feature_stats(&mut self, batch: &Batch) {
        let m = self.class_count;
        self.feature_stats.fill(PairMoments::new());
        for sample in batch.samples() {
            for (j, &x) in sample.features().iter().enumerate() {
                for (o, &y) in sample.target().iter().enumerate() {
                    self.feature_stats[j * m + o].update(x, y);
                }
            }
        }
    }

    /// Mean MICI of each original input against the class indicators.
    pub fn feature_scores(&self) -> Vec<f64> {
        let m = self.class_count;
        (0..self.input_dim)
            .map(|j| {
                self.feature_stats[j * m..(j + 1) * m]
                    .iter()
                    .map(PairMoments::mici)
                    .sum::<f64>()
                    / m as f64
            })
            .collect()
    }

    /// Re-evaluates the feature weights from the current batch's moments.
    pub fn feature_selection(&mut self) {
        if self.feature_stats.first().map_or(0, PairMoments::count) < 2 {
            return;
        }
        let threshold = self.config.feature_threshold;
        self.feature_active = self.feature_scores().iter().map(|&s| s < threshold).collect();
    }

    fn update_layer_stats(&mut self, per_layer: &[Option<LayerOutput>]) {
        let statistic = self.config.merge_statistic;
        for pair in &mut self.layer_stats {
            let (Some(a), Some(b)) = (&per_layer[pair.lower - 1], &per_layer[pair.upper - 1]) else {
                continue;
            };
            match statistic {
                MergeStatistic::TopScore => {
                    let top = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    pair.moments[0].update(top(&a.scores), top(&b.scores));
                }
                MergeStatistic::ClassAveraged => {
                    for (o, m) in pair.moments.iter_mut().enumerate() {
                        m.update(a.scores[o], b.scores[o]);
                    }
                }
            }
        }
    }

    /// MICI between the outputs of the layers at depths `lower < upper`, if
    /// enough joint observations exist.
    pub fn layer_similarity(&self, lower: usize, upper: usize) -> Option<f64> {
        let pair = self
            .layer_stats
            .iter()
            .find(|p| p.lower == lower && p.upper == upper)?;
        let moments = match self.config.merge_statistic {
            MergeStatistic::TopScore => &pair.moments[..1],
            MergeStatistic::ClassAveraged => &pair.moments[..],
        };
        if moments[0].count() < 2 {
            return None;
        }
        Some(moments.iter().map(PairMoments::mici).sum::<f64>() / moments.len() as f64)
    }

    /// Puts to sleep the less credible layer of every redundant pair and
    /// returns the depths made dormant.
    pub fn merge_layers(&mut self) -> Vec<usize> {
        let threshold = self.config.merge_threshold;
        let mut merged = Vec::new();
        let pairs: Vec<(usize, usize)> = self.layer_stats.iter().map(|p| (p.lower, p.upper)).collect();
        for (lower, upper) in pairs {
            if self.layers[lower - 1].dormant || self.layers[upper - 1].dormant {
                continue;
            }
            let Some(gamma) = self.layer_similarity(lower, upper) else {
                continue;
            };
            if gamma >= threshold {
                continue;
            }
            let victim = if self.layers[upper - 1].voting_weight < self.layers[lower - 1].voting_weight {
                upper
            } else {
                lower
            };
            let layer = &mut self.layers[victim - 1];
            layer.dormant = true;
            layer.voting_weight = 0.0;
            merged.push(victim);
        }
        self.layer_stats
            .retain(|p| !merged.contains(&p.lower) && !merged.contains(&p.upper));
        merged
    }

    /// Appends a new top layer trained on `batch` followed by the warning
    /// buffer, then clears the buffer.
    pub fn add_layer(&mut self, batch: &[Sample]) -> Result<()> {
        let depth = self.layers.len() + 1;
        let dim = self.input_dim + self.class_count * (depth - 1);
        let mut model = GClassModel::new(dim, self.class_count, self.config.gclass.clone())?;
        let buffer = std::mem::take(&mut self.warning_buffer);
        for sample in batch.iter().chain(&buffer) {
            self.check_sample(sample)?;
            let input = self.augmented_input(sample.features(), depth - 1)?;
            model.train_on_sample(&input, sample.target())?;
        }
        let stat_len = match self.config.merge_statistic {
            MergeStatistic::TopScore => 1,
            MergeStatistic::ClassAveraged => self.class_count,
        };
        for lower in self.layers.iter().filter(|l| !l.dormant).map(|l| l.depth_index) {
            self.layer_stats.push(LayerPairStats {
                lower,
                upper: depth,
                moments: vec![PairMoments::new(); stat_len],
            });
        }
        self.layers.push(LayerState {
            model,
            voting_weight: 1.0,
            decay: 0.5,
            dormant: false,
            depth_index: depth,
        });
        Ok(())
    }

    /// Trains the layer at `depth` on `samples`.
    fn train_layer(&mut self, depth: usize, samples: &[Sample]) -> Result<()> {
        for sample in samples {
            let input = self.augmented_input(sample.features(), depth - 1)?;
            self.layers[depth - 1]
                .model
                .train_on_sample(&input, sample.target())?;
        }
        Ok(())
    }

    fn check_sample(&self, sample: &Sample) -> Result<()> {
        if sample.input_dim() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: sample.input_dim(),
            });
        }
        if sample.class_count() != self.class_count {
            return Err(Error::Dimension {
                expected: self.class_count,
                got: sample.class_count(),
            });
        }
        Ok(())
    }

    /// Prequential test-then-train step on one batch.
    ///
    /// Every sample is predicted before anything is updated. Then voting
    /// weights, feature weights and layer merging are updated, and the
    /// detector verdict on the ensemble's error bits decides between growing
    /// the stack, buffering the batch, or refining the winning layer.
    pub fn train_batch(&mut self, batch: &Batch) -> Result<BatchOutcome> {
        for sample in batch.samples() {
            self.check_sample(sample)?;
        }
        self.timestamp += 1;

        let mut predictions = Vec::with_capacity(batch.len());
        let mut per_sample = Vec::with_capacity(batch.len());
        for sample in batch.samples() {
            let forward = self.forward(sample.features())?;
            predictions.push(forward.predicted);
            per_sample.push(forward.per_layer);
        }
        let truth: Vec<usize> = batch.samples().iter().map(Sample::label).collect();
        let errors = AccuracyVector::from_predictions(&predictions, &truth);

        if self.layers.is_empty() {
            self.update_feature_stats(batch);
            self.feature_selection();
            self.add_layer(batch.samples())?;
            self.push_errors(errors.bits().to_vec());
            return Ok(BatchOutcome {
                predictions,
                verdict: None,
                layer_added: true,
                merged: Vec::new(),
            });
        }

        for (per_layer, &label) in per_sample.iter().zip(&truth) {
            self.update_voting_weights(per_layer, label);
            self.update_layer_stats(per_layer);
        }
        self.update_feature_stats(batch);
        self.feature_selection();
        let merged = if self.config.layers_frozen {
            Vec::new()
        } else {
            self.merge_layers()
        };

        let mut window: Vec<bool> = self.recent_errors.iter().flatten().copied().collect();
        window.extend_from_slice(errors.bits());
        let verdict = assess(&AccuracyVector::new(window), self.timestamp, &self.config.drift);
        self.push_errors(errors.bits().to_vec());

        let mut layer_added = false;
        match verdict.phase {
            DriftPhase::Drift => {
                self.drift_count += 1;
                self.recent_errors.clear();
                if self.config.layers_frozen {
                    self.warning_buffer.clear();
                    self.train_winner(batch)?;
                } else {
                    self.add_layer(batch.samples())?;
                    layer_added = true;
                }
            }
            DriftPhase::Warning => {
                self.warning_buffer.extend_from_slice(batch.samples());
            }
            DriftPhase::Stable => {
                self.warning_buffer.clear();
                self.train_winner(batch)?;
            }
        }
        Ok(BatchOutcome {
            predictions,
            verdict: Some(verdict),
            layer_added,
            merged,
        })
    }

    fn train_winner(&mut self, batch: &Batch) -> Result<()> {
        match self.winning_layer() {
            Some(depth) => self.train_layer(depth, batch.samples()),
            None => Ok(()),
        }
    }

    fn push_errors(&mut self, bits: Vec<bool>) {
        let keep = self.config.detector_window_batches - 1;
        self.recent_errors.push_back(bits);
        while self.recent_errors.len() > keep {
            self.recent_errors.pop_front();
        }
    }
}
