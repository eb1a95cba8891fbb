use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::drift::DriftConfig;
use crate::gclass::GClassConfig;
use crate::{Error, Result};

/// How the similarity of two layers' outputs is measured for merging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeStatistic {
    /// MICI between the layers' largest class scores.
    #[default]
    TopScore,
    /// MICI averaged over the per-class score pairs.
    ClassAveraged,
}

impl FromStr for MergeStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top-score" => Ok(Self::TopScore),
            "class-averaged" => Ok(Self::ClassAveraged),
            other => Err(Error::config(
                "merge_statistic",
                format!("unknown statistic `{other}` (expected top-score or class-averaged)"),
            )),
        }
    }
}

impl fmt::Display for MergeStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TopScore => "top-score",
            Self::ClassAveraged => "class-averaged",
        })
    }
}

/// Hyperparameters of the deep stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackConfig {
    /// Step size π of the decaying-factor updates.
    pub step_size: f64,
    /// Input features whose mean MICI against the targets reaches δ₁ are
    /// switched off.
    pub feature_threshold: f64,
    /// Two layers whose output MICI falls below δ₂ are merged.
    pub merge_threshold: f64,
    pub merge_statistic: MergeStatistic,
    /// Disables layer growth and merging.
    pub layers_frozen: bool,
    /// Number of most recent batches whose error bits form the detector
    /// window.
    pub detector_window_batches: usize,
    pub drift: DriftConfig,
    pub gclass: GClassConfig,
}

impl Default for StackConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            feature_threshold: 0.5,
            merge_threshold: 0.05,
            merge_statistic: MergeStatistic::TopScore,
            layers_frozen: false,
            detector_window_batches: 2,
            drift: DriftConfig::default(),
            gclass: GClassConfig::default(),
        }
    }
}

impl StackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(Error::config("step_size", "must lie in (0, 1]"));
        }
        if !(self.feature_threshold > 0.0) || !self.feature_threshold.is_finite() {
            return Err(Error::config("feature_threshold", "must be positive and finite"));
        }
        if !(self.merge_threshold >= 0.0) || !self.merge_threshold.is_finite() {
            return Err(Error::config("merge_threshold", "must be non-negative and finite"));
        }
        if self.detector_window_batches == 0 {
            return Err(Error::config("detector_window_batches", "must be at least 1"));
        }
        self.drift.validate()?;
        self.gclass.validate()
    }
}
