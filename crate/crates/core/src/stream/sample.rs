use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One-hot encoding of `label` over `class_count` classes.
pub fn one_hot(label: usize, class_count: usize) -> Vec<f64> {
    let mut target = vec![0.0; class_count];
    target[label] = 1.0;
    target
}

/// A labelled observation with its one-hot target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    features: Vec<f64>,
    label: usize,
    target: Vec<f64>,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: usize, class_count: usize) -> Result<Self> {
        if label >= class_count {
            return Err(Error::Dimension {
                expected: class_count,
                got: label + 1,
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample features"));
        }
        Ok(Self {
            features,
            label,
            target: one_hot(label, class_count),
        })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn input_dim(&self) -> usize {
        self.features.len()
    }

    pub fn class_count(&self) -> usize {
        self.target.len()
    }
}

/// A chunk of samples arriving at one time stamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    samples: Vec<Sample>,
    timestamp: usize,
}

impl Batch {
    /// Builds a batch, checking that it is nonempty and dimensionally uniform.
    pub fn new(samples: Vec<Sample>, timestamp: usize) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::config("batch", "a batch needs at least one sample"))?;
        let (n, m) = (first.input_dim(), first.class_count());
        for s in &samples {
            if s.input_dim() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: s.input_dim(),
                });
            }
            if s.class_count() != m {
                return Err(Error::Dimension {
                    expected: m,
                    got: s.class_count(),
                });
            }
        }
        Ok(Self { samples, timestamp })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// 1-based time stamp of this batch within its stream.
    pub fn timestamp(&self) -> usize {
        self.timestamp
    }

    pub fn input_dim(&self) -> usize {
        self.samples[0].input_dim()
    }

    pub fn class_count(&self) -> usize {
        self.samples[0].class_count()
    }
}
