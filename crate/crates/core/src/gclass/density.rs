use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Recursive density of inputs seen so far.
///
/// The density of `x` is `1 / (1 + ‖x − μ‖² + s)` where `μ` is the running
/// mean and `s` the running scatter `E‖x‖² − ‖μ‖²`. A window of recent
/// densities supplies the quantiles that bound the "typical" band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityStats {
    count: u64,
    mean: Vec<f64>,
    mean_sq_norm: f64,
    recent: VecDeque<f64>,
    window: usize,
}

impl DensityStats {
    pub fn new(dim: usize, window: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            mean_sq_norm: 0.0,
            recent: VecDeque::with_capacity(window),
            window,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Density of `x` against the inputs absorbed so far; 1 before any.
    pub fn density(&self, x: &[f64]) -> f64 {
        if self.count == 0 {
            return 1.0;
        }
        let dist: f64 = x.iter().zip(&self.mean).map(|(a, b)| (a - b).powi(2)).sum();
        let mean_norm: f64 = self.mean.iter().map(|v| v * v).sum();
        let scatter = (self.mean_sq_norm - mean_norm).max(0.0);
        1.0 / (1.0 + dist + scatter)
    }

    /// Absorbs `x` and records its pre-update density in the window.
    pub fn update(&mut self, x: &[f64]) {
        let d = self.density(x);
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(d);
        self.count += 1;
        let n = self.count as f64;
        for (m, v) in self.mean.iter_mut().zip(x) {
            *m += (v - *m) / n;
        }
        let sq: f64 = x.iter().map(|v| v * v).sum();
        self.mean_sq_norm += (sq - self.mean_sq_norm) / n;
    }

    /// `(low, high)` empirical quantiles of the recent densities, or `None`
    /// until the window holds enough values to be meaningful.
    pub fn band(&self, low: f64, high: f64) -> Option<(f64, f64)> {
        if self.recent.len() < self.window.min(20) {
            return None;
        }
        let mut sorted: Vec<f64> = self.recent.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let at = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
        Some((at(low), at(high)))
    }
}
