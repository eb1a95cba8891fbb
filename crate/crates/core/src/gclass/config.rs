use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hyperparameters of one evolving fuzzy classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GClassConfig {
    /// A new rule is considered only when every rule fires below this level.
    pub vigilance: f64,
    /// Rules whose mean contribution falls below this fraction of the
    /// average are deleted.
    pub prune_fraction: f64,
    /// Weight-decay coefficient of the consequent update.
    pub weight_decay: f64,
    /// New rules start with output covariance `ω·I`.
    pub rls_init_scale: f64,
    /// Samples with confidence at or below this level are uncertain.
    pub conflict_threshold: f64,
    /// Quantile band `(low, high)` of recent input densities; samples
    /// outside it are novel or redundant extremes.
    pub density_band: (f64, f64),
    /// Covariance inflation factor κ; declining rules get `Ω ← Ω/κ`.
    pub forgetting_inflation: f64,
    /// Active rules whose firing average drops below this go dormant.
    pub dormancy_threshold: f64,
    /// Maximum ratio between a candidate rule's volume and the median
    /// rule volume.
    pub max_volume_ratio: f64,
    /// Smoothing rate of the per-rule firing average.
    pub firing_ema_rate: f64,
    /// Samples per forgetting evaluation window.
    pub forgetting_window: usize,
    /// Number of recent densities kept for the quantile band.
    pub density_window: usize,
}

impl Default for GClassConfig {
    fn default() -> Self {
        Self {
            vigilance: 0.1,
            prune_fraction: 0.1,
            weight_decay: 1e-5,
            rls_init_scale: 1e5,
            conflict_threshold: 0.55,
            density_band: (0.05, 0.95),
            forgetting_inflation: 0.8,
            dormancy_threshold: 1e-4,
            max_volume_ratio: 1e5,
            firing_ema_rate: 0.01,
            forgetting_window: 100,
            density_window: 200,
        }
    }
}

impl GClassConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(field, reason))
            }
        };
        // 0 disables growth beyond the first rule
        check((0.0..1.0).contains(&self.vigilance), "vigilance", "must lie in [0, 1)")?;
        check((0.0..1.0).contains(&self.prune_fraction), "prune_fraction", "must lie in [0, 1)")?;
        check(self.weight_decay >= 0.0, "weight_decay", "must be nonnegative")?;
        check(self.rls_init_scale > 0.0, "rls_init_scale", "must be positive")?;
        check(
            self.weight_decay * self.rls_init_scale <= 1.0,
            "weight_decay",
            "weight_decay * rls_init_scale must not exceed 1",
        )?;
        check(
            self.conflict_threshold > 0.0 && self.conflict_threshold < 1.0,
            "conflict_threshold",
            "must lie in (0, 1)",
        )?;
        let (lo, hi) = self.density_band;
        check(
            (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo < hi,
            "density_band",
            "need 0 <= low < high <= 1",
        )?;
        check(
            self.forgetting_inflation > 0.0 && self.forgetting_inflation <= 1.0,
            "forgetting_inflation",
            "must lie in (0, 1]",
        )?;
        check(self.dormancy_threshold >= 0.0, "dormancy_threshold", "must be nonnegative")?;
        check(self.max_volume_ratio > 0.0, "max_volume_ratio", "must be positive")?;
        check(
            self.firing_ema_rate > 0.0 && self.firing_ema_rate <= 1.0,
            "firing_ema_rate",
            "must lie in (0, 1]",
        )?;
        check(self.forgetting_window > 0, "forgetting_window", "must be positive")?;
        check(self.density_window >= 2, "density_window", "must be at least 2")?;
        Ok(())
    }
}
