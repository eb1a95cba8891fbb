//! Synthetic drifting streams.
//!
//! SEA: three attributes uniform over `[0, 10]`, the class depends on whether
//! `f1 + f2` falls below a threshold that jumps at scheduled sample indices.
//! The third attribute is noise.
//!
//! Hyperplane: `n` attributes uniform over `[0, 1]`, the class is the side of
//! a hyperplane `w·x = ½Σw`. Each schedule point is an angle that fixes an
//! anchor weight vector; between anchors `w` is linearly interpolated, giving
//! a gradual drift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample::{Batch, Sample};
use crate::{Error, Result};

const SEA_FEATURES: usize = 3;
const BINARY: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Sea,
    Hyperplane,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sea" => Ok(GeneratorKind::Sea),
            "hyperplane" => Ok(GeneratorKind::Hyperplane),
            other => Err(Error::config(
                "generator",
                format!("unknown generator `{other}` (expected sea or hyperplane)"),
            )),
        }
    }
}

impl std::fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeneratorKind::Sea => f.write_str("sea"),
            GeneratorKind::Hyperplane => f.write_str("hyperplane"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub total_samples: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Probability that an emitted label is flipped.
    pub noise_fraction: f64,
    /// `(sample index, parameter)` pairs: the SEA threshold, or the
    /// hyperplane anchor angle in radians.
    pub drift_schedule: Vec<(usize, f64)>,
    /// Attribute count for the hyperplane stream; SEA always uses 3.
    pub n_features: usize,
    /// SEA only: acceptance probability for class-0 draws, producing a
    /// minority class by rejection sampling. `None` disables it.
    pub minority_accept: Option<f64>,
}

impl GeneratorConfig {
    /// SEA with thresholds 4, 7, 4, 7 over four equal quarters of the stream.
    pub fn sea(total_samples: usize, batch_size: usize, seed: u64) -> Self {
        let q = total_samples / 4;
        Self {
            kind: GeneratorKind::Sea,
            total_samples,
            batch_size,
            seed,
            noise_fraction: 0.05,
            drift_schedule: vec![(0, 4.0), (q, 7.0), (2 * q, 4.0), (3 * q, 7.0)],
            n_features: SEA_FEATURES,
            minority_accept: None,
        }
    }

    /// Four-attribute hyperplane rotating from 0 to 1 rad and back.
    pub fn hyperplane(total_samples: usize, batch_size: usize, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::Hyperplane,
            total_samples,
            batch_size,
            seed,
            noise_fraction: 0.05,
            drift_schedule: vec![
                (0, 0.0),
                (total_samples / 2, 1.0),
                (total_samples.saturating_sub(1), 0.0),
            ],
            n_features: 4,
            minority_accept: None,
        }
    }

    pub fn for_kind(kind: GeneratorKind, total_samples: usize, batch_size: usize, seed: u64) -> Self {
        match kind {
            GeneratorKind::Sea => Self::sea(total_samples, batch_size, seed),
            GeneratorKind::Hyperplane => Self::hyperplane(total_samples, batch_size, seed),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self.kind {
            GeneratorKind::Sea => SEA_FEATURES,
            GeneratorKind::Hyperplane => self.n_features,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_samples == 0 {
            return Err(Error::config("total_samples", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.noise_fraction) {
            return Err(Error::config("noise_fraction", "must lie in [0, 1]"));
        }
        if self.drift_schedule.is_empty() {
            return Err(Error::config("drift_schedule", "needs at least one point"));
        }
        let mut prev: Option<usize> = None;
        for &(idx, value) in &self.drift_schedule {
            if idx >= self.total_samples {
                return Err(Error::config(
                    "drift_schedule",
                    format!("index {idx} outside [0, {})", self.total_samples),
                ));
            }
            if prev.is_some_and(|p| idx <= p) {
                return Err(Error::config(
                    "drift_schedule",
                    "indices must be strictly increasing",
                ));
            }
            if !value.is_finite() {
                return Err(Error::config("drift_schedule", "values must be finite"));
            }
            if self.kind == GeneratorKind::Sea && !(value > 0.0 && value < 20.0) {
                return Err(Error::config(
                    "drift_schedule",
                    format!("SEA threshold {value} outside (0, 20)"),
                ));
            }
            prev = Some(idx);
        }
        if self.kind == GeneratorKind::Hyperplane && self.n_features == 0 {
            return Err(Error::config("n_features", "must be positive"));
        }
        if let Some(rate) = self.minority_accept {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::config("minority_accept", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Step-function schedule value (SEA threshold) at sample `index`.
    fn step_value(&self, index: usize) -> f64 {
        self.drift_schedule
            .iter()
            .take_while(|(i, _)| *i <= index)
            .last()
            .unwrap_or(&self.drift_schedule[0])
            .1
    }

    /// Hyperplane weights at sample `index`, interpolated between anchors.
    fn interpolated_weights(&self, index: usize) -> Vec<f64> {
        let n = self.n_features;
        let sched = &self.drift_schedule;
        let after = sched.iter().position(|(i, _)| *i > index);
        match after {
            None => hyperplane_weights(sched[sched.len() - 1].1, n),
            Some(0) => hyperplane_weights(sched[0].1, n),
            Some(k) => {
                let (i0, a0) = sched[k - 1];
                let (i1, a1) = sched[k];
                let s = (index - i0) as f64 / (i1 - i0) as f64;
                let w0 = hyperplane_weights(a0, n);
                let w1 = hyperplane_weights(a1, n);
                w0.iter().zip(&w1).map(|(a, b)| (1.0 - s) * a + s * b).collect()
            }
        }
    }
}

/// SEA class rule: 0 when `f1 + f2 < threshold`, 1 otherwise.
pub fn sea_label(features: &[f64], threshold: f64) -> usize {
    usize::from(features[0] + features[1] >= threshold)
}

/// Anchor weight vector for `angle`: a rotation from the uniform direction
/// `(1,…,1)/n` towards the alternating direction `(1,−1,1,…)/n`.
pub fn hyperplane_weights(angle: f64, n: usize) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    (0..n)
        .map(|j| {
            let alt = if j % 2 == 0 { 1.0 } else { -1.0 };
            (c + s * alt) / n as f64
        })
        .collect()
}

/// Hyperplane class rule: 1 when `w·x > ½Σw`, else 0.
pub fn hyperplane_label(weights: &[f64], x: &[f64]) -> usize {
    let dot: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum();
    let offset = 0.5 * weights.iter().sum::<f64>();
    usize::from(dot > offset)
}

/// Lazily produces the batches described by a [`GeneratorConfig`].
#[derive(Debug, Clone)]
pub struct SyntheticStream {
    config: GeneratorConfig,
    rng: ChaCha8Rng,
    emitted: usize,
    batches: usize,
}

/// Validates `config` and returns its batch stream.
pub fn generate(config: GeneratorConfig) -> Result<SyntheticStream> {
    config.validate()?;
    Ok(SyntheticStream {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        config,
        emitted: 0,
        batches: 0,
    })
}

impl SyntheticStream {
    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    fn next_sample(&mut self) -> Sample {
        let index = self.emitted;
        let cfg = &self.config;
        let (features, clean) = match cfg.kind {
            GeneratorKind::Sea => {
                let theta = cfg.step_value(index);
                loop {
                    let f: Vec<f64> = (0..SEA_FEATURES)
                        .map(|_| self.rng.gen_range(0.0..10.0))
                        .collect();
                    let label = sea_label(&f, theta);
                    let keep = match cfg.minority_accept {
                        Some(rate) if label == 0 => self.rng.gen::<f64>() < rate,
                        _ => true,
                    };
                    if keep {
                        break (f, label);
                    }
                }
            }
            GeneratorKind::Hyperplane => {
                let w = cfg.interpolated_weights(index);
                let x: Vec<f64> = (0..cfg.n_features).map(|_| self.rng.gen::<f64>()).collect();
                let label = hyperplane_label(&w, &x);
                (x, label)
            }
        };
        let flip = self.rng.gen::<f64>() < cfg.noise_fraction;
        let label = if flip { 1 - clean } else { clean };
        self.emitted += 1;
        Sample::new(features, label, BINARY).expect("generator emits valid samples")
    }
}

impl Iterator for SyntheticStream {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        let remaining = self.config.total_samples - self.emitted;
        if remaining == 0 {
            return None;
        }
        let size = remaining.min(self.config.batch_size);
        let samples = (0..size).map(|_| self.next_sample()).collect();
        self.batches += 1;
        Some(Batch::new(samples, self.batches).expect("nonempty uniform batch"))
    }
}
