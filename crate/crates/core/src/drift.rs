//! Real-drift detection over a vector of prequential error bits.
//!
//! A switching point splits the vector into a prefix `G` and suffix `H`. The
//! switching point is where the prefix's Hoeffding upper bound on the error
//! rate stops decreasing; a significant difference between the prefix and
//! suffix error rates signals a warning or a drift. Significance levels rise
//! with the number of time stamps seen, up to a cap.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftPhase {
    Stable,
    Warning,
    Drift,
}

impl std::fmt::Display for DriftPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DriftPhase::Stable => "stable",
            DriftPhase::Warning => "warning",
            DriftPhase::Drift => "drift",
        })
    }
}

/// Error bits for one detection window: `true` marks a misclassification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyVector {
    bits: Vec<bool>,
}

impl AccuracyVector {
    /// Bits are bounded in `[0, 1]`.
    pub const RANGE: f64 = 1.0;

    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Builds the vector from predicted and true labels.
    pub fn from_predictions(predicted: &[usize], truth: &[usize]) -> Self {
        Self::new(predicted.iter().zip(truth).map(|(p, t)| p != t).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn error_rate(&self) -> f64 {
        mean(&self.bits)
    }
}

fn mean(bits: &[bool]) -> f64 {
    if bits.is_empty() {
        return 0.0;
    }
    bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    /// Cap on the drift significance level.
    pub alpha_min_drift: f64,
    /// Cap on the warning significance level.
    pub alpha_min_warning: f64,
    /// Expected number of time stamps; sets how fast significance rises.
    pub total_timestamps_hint: usize,
    pub alpha_floor: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            alpha_min_drift: 0.05,
            alpha_min_warning: 0.1,
            total_timestamps_hint: 100,
            alpha_floor: 1e-4,
        }
    }
}

impl DriftConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 < self.alpha_floor
            && self.alpha_floor < self.alpha_min_drift
            && self.alpha_min_drift < self.alpha_min_warning
            && self.alpha_min_warning <= 0.1;
        if !ordered {
            return Err(Error::config(
                "alpha_min_drift",
                "need 0 < alpha_floor < alpha_min_drift < alpha_min_warning <= 0.1",
            ));
        }
        if self.total_timestamps_hint == 0 {
            return Err(Error::config("total_timestamps_hint", "must be positive"));
        }
        Ok(())
    }
}

/// Detector statistics. Everything except the whole-window mean and bound
/// is present only when a switching point was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftStats {
    pub f_mean: f64,
    pub eps_f: f64,
    pub g_mean: Option<f64>,
    pub eps_g: Option<f64>,
    pub h_mean: Option<f64>,
    pub eps_h: Option<f64>,
    pub eps_drift: Option<f64>,
    pub eps_warning: Option<f64>,
    pub alpha_drift: f64,
    pub alpha_warning: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftVerdict {
    pub phase: DriftPhase,
    pub cut: Option<usize>,
    pub stats: DriftStats,
}

/// Significance level at time stamp `k`: `1 − e^(−k/T)` capped at
/// `alpha_min` and floored at `alpha_floor`.
pub fn dynamic_alpha(k: usize, total: usize, alpha_min: f64, alpha_floor: f64) -> f64 {
    let rising = 1.0 - (-(k as f64) / total.max(1) as f64).exp();
    rising.min(alpha_min).max(alpha_floor)
}

/// One-sample Hoeffding bound `range·√(ln(1/α) / (2·size))`.
pub fn hoeffding_bound(size: usize, alpha: f64, range: f64) -> f64 {
    range * ((1.0 / alpha).ln() / (2.0 * size as f64)).sqrt()
}

/// Two-sample Hoeffding bound on the difference of two partition means.
pub fn two_sample_bound(left: usize, right: usize, alpha: f64, range: f64) -> f64 {
    let (l, r) = (left as f64, right as f64);
    range * (((l + r) / (2.0 * l * r)) * (1.0 / alpha).ln()).sqrt()
}

/// Locates the switching point of `acc` at significance `alpha`.
///
/// Scanning prefixes `1..=P`, the cut advances to `k` whenever the prefix
/// upper bound `mean(acc[..k]) + ε(k)` is no larger than the best bound seen
/// so far. The returned cut is the prefix length. A cut at `P` leaves no
/// suffix and is reported as `None`: the bound kept decreasing, so there is
/// no error up-trend.
pub fn find_cut(acc: &AccuracyVector, alpha: f64) -> Option<usize> {
    let bits = acc.bits();
    let mut best = f64::INFINITY;
    let mut cut = 0usize;
    let mut errors = 0usize;
    for (i, &b) in bits.iter().enumerate() {
        errors += usize::from(b);
        let k = i + 1;
        let bound = errors as f64 / k as f64 + hoeffding_bound(k, alpha, AccuracyVector::RANGE);
        if bound <= best {
            best = bound;
            cut = k;
        }
    }
    (cut > 0 && cut < bits.len()).then_some(cut)
}

/// Classifies the window `acc` observed at time stamp `k` as stable,
/// warning or drift.
pub fn assess(acc: &AccuracyVector, k: usize, config: &DriftConfig) -> DriftVerdict {
    let t = config.total_timestamps_hint;
    let alpha_drift = dynamic_alpha(k, t, config.alpha_min_drift, config.alpha_floor);
    let alpha_warning = dynamic_alpha(k, t, config.alpha_min_warning, config.alpha_floor);
    let range = AccuracyVector::RANGE;
    let bits = acc.bits();
    let mut stats = DriftStats {
        f_mean: acc.error_rate(),
        eps_f: if bits.is_empty() {
            f64::INFINITY
        } else {
            hoeffding_bound(bits.len(), alpha_drift, range)
        },
        g_mean: None,
        eps_g: None,
        h_mean: None,
        eps_h: None,
        eps_drift: None,
        eps_warning: None,
        alpha_drift,
        alpha_warning,
    };
    let Some(cut) = find_cut(acc, alpha_drift) else {
        return DriftVerdict {
            phase: DriftPhase::Stable,
            cut: None,
            stats,
        };
    };
    let (g, h) = bits.split_at(cut);
    let (g_mean, h_mean) = (mean(g), mean(h));
    let eps_drift = two_sample_bound(g.len(), h.len(), alpha_drift, range);
    let eps_warning = two_sample_bound(g.len(), h.len(), alpha_warning, range);
    stats.g_mean = Some(g_mean);
    stats.eps_g = Some(hoeffding_bound(g.len(), alpha_drift, range));
    stats.h_mean = Some(h_mean);
    stats.eps_h = Some(hoeffding_bound(h.len(), alpha_drift, range));
    stats.eps_drift = Some(eps_drift);
    stats.eps_warning = Some(eps_warning);

    let gap = (h_mean - g_mean).abs();
    let phase = if gap >= eps_drift {
        DriftPhase::Drift
    } else if gap >= eps_warning {
        DriftPhase::Warning
    } else {
        DriftPhase::Stable
    };
    DriftVerdict {
        phase,
        cut: Some(cut),
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vector(zeros: usize, ones: usize) -> AccuracyVector {
        let mut bits = vec![false; zeros];
        bits.extend(std::iter::repeat(true).take(ones));
        AccuracyVector::new(bits)
    }

    #[test]
    fn alpha_cap_is_reached_at_solved_time() {
        // 1 - exp(-k/T) = 0.1  <=>  k = -T ln 0.9 = 0.10536 T
        let t = 1000;
        let k_star = -(t as f64) * 0.9f64.ln();
        assert!((k_star - 105.36).abs() < 0.01);
        assert_eq!(dynamic_alpha(106, t, 0.1, 1e-4), 0.1);
        assert!(dynamic_alpha(105, t, 0.1, 1e-4) < 0.1);
        assert_eq!(dynamic_alpha(0, t, 0.1, 1e-4), 1e-4);
    }

    #[test]
    fn alpha_is_monotone() {
        let mut prev = 0.0;
        for k in 0..500 {
            let a = dynamic_alpha(k, 100, 0.05, 1e-4);
            assert!(a >= prev);
            prev = a;
        }
    }

    #[test]
    fn hoeffding_reference_value() {
        let eps = hoeffding_bound(100, 0.05, 1.0);
        assert!((eps - (20f64.ln() / 200.0).sqrt()).abs() < 1e-15);
        assert!((eps - 0.12238).abs() < 1e-5);
        let quarter = hoeffding_bound(400, 0.05, 1.0);
        assert!((eps / quarter - 2.0).abs() < 1e-12);
        assert!(hoeffding_bound(100, 1.0 - 1e-12, 1.0) < 1e-5);
    }

    #[test]
    fn perfect_accuracy_is_stable_without_cut() {
        let acc = vector(200, 0);
        assert_eq!(find_cut(&acc, 0.05), None);
        let v = assess(&acc, 50, &DriftConfig::default());
        assert_eq!(v.phase, DriftPhase::Stable);
        assert!(v.cut.is_none() && v.stats.h_mean.is_none());
    }

    #[test]
    fn step_vector_cut_matches_brute_force() {
        let acc = vector(50, 50);
        // brute force: the prefix minimising mean + bound
        let brute = (1..=100)
            .map(|k| {
                let m = acc.bits()[..k].iter().filter(|&&b| b).count() as f64 / k as f64;
                (k, m + hoeffding_bound(k, 0.05, 1.0))
            })
            .fold((0, f64::INFINITY), |best, (k, b)| if b <= best.1 { (k, b) } else { best })
            .0;
        let cut = find_cut(&acc, 0.05).unwrap();
        assert_eq!(cut, brute);
        assert!((45..=60).contains(&cut), "cut {cut}");
        let v = assess(&acc, 100, &DriftConfig::default());
        assert_eq!(v.phase, DriftPhase::Drift);
    }

    #[test]
    fn warning_between_thresholds() {
        // gap chosen between the warning and drift bounds for a 250/250 split
        let cfg = DriftConfig {
            total_timestamps_hint: 1,
            ..DriftConfig::default()
        };
        let e_d = two_sample_bound(250, 250, 0.05, 1.0);
        let e_w = two_sample_bound(250, 250, 0.1, 1.0);
        assert!(e_w < e_d);
        let mut phases = Vec::new();
        // Walk the suffix error count until the verdict flips through warning.
        for ones in 0..250 {
            let mut bits = vec![false; 250];
            bits.extend((0..250).map(|i| i < ones));
            let v = assess(&AccuracyVector::new(bits), 10, &cfg);
            if let (Some(g), Some(h), Some(ed), Some(ew)) = (
                v.stats.g_mean,
                v.stats.h_mean,
                v.stats.eps_drift,
                v.stats.eps_warning,
            ) {
                let gap = (h - g).abs();
                let expected = if gap >= ed {
                    DriftPhase::Drift
                } else if gap >= ew {
                    DriftPhase::Warning
                } else {
                    DriftPhase::Stable
                };
                assert_eq!(v.phase, expected);
            }
            phases.push(v.phase);
        }
        assert!(phases.contains(&DriftPhase::Warning));
        assert!(phases.contains(&DriftPhase::Drift));
    }

    #[test]
    fn config_ordering_enforced() {
        assert!(DriftConfig::default().validate().is_ok());
        let bad = DriftConfig {
            alpha_min_warning: 0.2,
            ..DriftConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = DriftConfig {
            alpha_min_drift: 0.1,
            ..DriftConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn stricter_drift_level_never_adds_drift(
            bits in prop::collection::vec(any::<bool>(), 2..300),
            k in 1usize..200,
            strict in 0.001f64..0.05,
        ) {
            let acc = AccuracyVector::new(bits);
            let loose = DriftConfig::default();
            let tight = DriftConfig { alpha_min_drift: strict.max(2e-4), ..loose.clone() };
            let a = assess(&acc, k, &loose).phase;
            let b = assess(&acc, k, &tight).phase;
            prop_assert!(!(a == DriftPhase::Stable && b == DriftPhase::Drift));
        }

        #[test]
        fn bounds_positive_below_one(size in 1usize..10_000, alpha in 1e-6f64..0.999) {
            prop_assert!(hoeffding_bound(size, alpha, 1.0) > 0.0);
            prop_assert!(two_sample_bound(size, size + 1, alpha, 1.0) > 0.0);
        }

        #[test]
        fn assess_is_pure(bits in prop::collection::vec(any::<bool>(), 2..200), k in 1usize..300) {
            let acc = AccuracyVector::new(bits);
            let cfg = DriftConfig::default();
            prop_assert_eq!(assess(&acc, k, &cfg), assess(&acc, k, &cfg));
        }
    }
}
