use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::chebyshev::chebyshev_expand;
use super::config::GClassConfig;
use super::density::DensityStats;
use super::rule::{argmax, FuzzyRule};
use crate::linalg;
use crate::{Error, Result};

/// Eigenvalue bounds for the premise inverse covariance.
const INV_COV_FLOOR: f64 = 1e-6;
const INV_COV_CEIL: f64 = 1e6;
/// Spread of the very first rule.
const FIRST_RULE_SIGMA: f64 = 0.5;
const MIN_SIGMA: f64 = 1e-3;
/// Rules with a smaller normalised firing are left out of the consequent update.
const MIN_UPDATE_WEIGHT: f64 = 1e-6;
const DUPLICATE_FIRING: f64 = 0.99;

/// What the active-learning gate decided for a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleAction {
    /// Structure and premise learning plus consequent update.
    TrainFull,
    /// Consequent update only.
    TrainConsequentOnly,
    /// Near-duplicate of the previous sample; only density statistics move.
    Skip,
}

/// Result of evaluating the rule base on one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub scores: Vec<f64>,
    pub predicted: usize,
    /// Raw firing strength of every rule, dormant ones included.
    pub firing: Vec<f64>,
    /// Firing normalised over the active rules; zero for dormant rules.
    pub normalized: Vec<f64>,
}

impl Inference {
    /// Index of the active rule with the largest firing.
    pub fn winner(&self) -> usize {
        argmax(&self.normalized)
    }
}

/// Confidence of a score vector: the top score's share of the top two,
/// after shifting negative scores up to zero. Two zero scores give 0.5.
pub fn confidence(scores: &[f64]) -> f64 {
    if scores.len() < 2 {
        return 1.0;
    }
    let shift = scores.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &s in scores {
        let s = s - shift;
        if s > first {
            second = first;
            first = s;
        } else if s > second {
            second = s;
        }
    }
    let total = first + second;
    if total <= 0.0 {
        0.5
    } else {
        first / total
    }
}

/// Inverse of `((N−1)·Σ + d·dᵀ)/N` computed from `Σ⁻¹` by the
/// Sherman-Morrison identity.
pub fn rank_one_inverse_update(inv_cov: &DMatrix<f64>, d: &DVector<f64>, n: u64) -> DMatrix<f64> {
    let n = n as f64;
    let a = (n - 1.0) / n;
    let b = 1.0 / n;
    if a <= 0.0 {
        // N = 1: the covariance collapses to d·dᵀ, which is singular
        return inv_cov.clone();
    }
    let ad = inv_cov * d;
    let c = b / a;
    let denom = 1.0 + c * ad.dot(d);
    let mut out = (inv_cov - (&ad * ad.transpose()) * (c / denom)) / a;
    linalg::symmetrize(&mut out);
    out
}

/// One fuzzily weighted recursive least-squares step with weight decay.
///
/// With `h = Φ(x)`: `g = Ω·h / (1/λ + h·Ω·h)`, `Ω ← Ω − g·(Ω·h)ᵀ`,
/// `W ← W + g·(t − h·W) − α·Ω·W`.
pub fn fwgrls_step(
    rls_cov: &mut DMatrix<f64>,
    consequent: &mut DMatrix<f64>,
    h: &DVector<f64>,
    target: &[f64],
    weight: f64,
    decay: f64,
) {
    let oh = &*rls_cov * h;
    let denom = 1.0 / weight + h.dot(&oh);
    let gain = &oh / denom;
    *rls_cov -= &gain * oh.transpose();
    linalg::symmetrize(rls_cov);
    let predicted = consequent.tr_mul(h);
    let error = DVector::from_column_slice(target) - predicted;
    *consequent += &gain * error.transpose();
    if decay > 0.0 {
        let shrink = &*rls_cov * &*consequent * decay;
        *consequent -= shrink;
    }
}

/// An evolving multi-output TSK fuzzy classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GClassModel {
    rules: Vec<FuzzyRule>,
    input_dim: usize,
    class_count: usize,
    config: GClassConfig,
    density: DensityStats,
    next_id: u64,
    samples_seen: u64,
    last_winner: Option<u64>,
}

impl GClassModel {
    pub fn new(input_dim: usize, class_count: usize, config: GClassConfig) -> Result<Self> {
        config.validate()?;
        if class_count == 0 {
            return Err(Error::config("class_count", "must be positive"));
        }
        Ok(Self {
            rules: Vec::new(),
            input_dim,
            class_count,
            density: DensityStats::new(input_dim, config.density_window),
            config,
            next_id: 0,
            samples_seen: 0,
            last_winner: None,
        })
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn active_rule_count(&self) -> usize {
        self.rules.iter().filter(|r| r.active).count()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn config(&self) -> &GClassConfig {
        &self.config
    }

    pub fn density_stats(&self) -> &DensityStats {
        &self.density
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("classifier input"));
        }
        Ok(())
    }

    /// Mahalanobis forms, raw firings and active-normalised firings.
    fn firings(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let dist = self
            .rules
            .iter()
            .map(|r| r.distance(x))
            .collect::<Result<Vec<f64>>>()?;
        let firing: Vec<f64> = dist.iter().map(|q| (-q).exp()).collect();
        // normalise in the log domain so far-away inputs do not underflow to 0/0
        let q_min = self
            .rules
            .iter()
            .zip(&dist)
            .filter(|(r, _)| r.active)
            .map(|(_, q)| *q)
            .fold(f64::INFINITY, f64::min);
        let mut normalized: Vec<f64> = self
            .rules
            .iter()
            .zip(&dist)
            .map(|(r, q)| if r.active { (q_min - q).exp() } else { 0.0 })
            .collect();
        let total: f64 = normalized.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptyModel);
        }
        normalized.iter_mut().for_each(|w| *w /= total);
        Ok((firing, normalized))
    }

    /// Weighted-average output of the active rules and the arg-max class.
    pub fn infer(&self, x: &[f64]) -> Result<Inference> {
        self.check_input(x)?;
        if self.rules.is_empty() {
            return Err(Error::EmptyModel);
        }
        let (firing, normalized) = self.firings(x)?;
        let phi = chebyshev_expand(x);
        let mut scores = DVector::zeros(self.class_count);
        for (rule, &w) in self.rules.iter().zip(&normalized) {
            if w > 0.0 {
                scores += rule.output_expanded(&phi) * w;
            }
        }
        let scores: Vec<f64> = scores.iter().copied().collect();
        Ok(Inference {
            predicted: argmax(&scores),
            scores,
            firing,
            normalized,
        })
    }

    /// Active-learning gate combining the confidence of `inference` with the
    /// recursive density of `x`.
    pub fn select_sample(&self, x: &[f64], inference: &Inference) -> SampleAction {
        let conf = confidence(&inference.scores);
        let (lo_q, hi_q) = self.config.density_band;
        let density = self.density.density(x);
        let inside = match self.density.band(lo_q, hi_q) {
            Some((lo, hi)) => density > lo && density < hi,
            None => false,
        };
        if conf <= self.config.conflict_threshold || !inside {
            return SampleAction::TrainFull;
        }
        let winner = inference.winner();
        let duplicate = self.last_winner == Some(self.rules[winner].id)
            && inference.firing[winner] > DUPLICATE_FIRING;
        if duplicate {
            SampleAction::Skip
        } else {
            SampleAction::TrainConsequentOnly
        }
    }

    /// Whether `x` warrants a new rule: no rule fires at or above the
    /// vigilance level and the candidate rule is not oversized.
    pub fn grow_check(&self, x: &[f64]) -> Result<bool> {
        self.check_input(x)?;
        if self.rules.is_empty() {
            return Ok(true);
        }
        let mut max_firing = 0.0f64;
        for r in &self.rules {
            max_firing = max_firing.max(r.firing_strength(x)?);
        }
        if max_firing >= self.config.vigilance {
            return Ok(false);
        }
        // largest spread the candidate could receive (intra-class factor 1)
        let (_, nearest) = self.nearest_rule(x);
        let sigma = nearest.max(MIN_SIGMA);
        let candidate = self.input_dim as f64 * sigma.ln();
        let mut volumes: Vec<f64> = self.rules.iter().map(FuzzyRule::log_volume).collect();
        volumes.sort_by(f64::total_cmp);
        let mid = volumes.len() / 2;
        let median = if volumes.len() % 2 == 1 {
            volumes[mid]
        } else {
            0.5 * (volumes[mid - 1] + volumes[mid])
        };
        Ok(candidate <= median + self.config.max_volume_ratio.ln())
    }

    /// Index of and Euclidean distance to the nearest rule centre.
    fn nearest_rule(&self, x: &[f64]) -> (usize, f64) {
        self.rules
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.center.iter().zip(x).map(|(c, v)| (c - v).powi(2)).sum();
                (i, d.sqrt())
            })
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// A new rule centred on `x`. Its spread is the distance to the nearest
    /// centre, halved when that rule votes for a different class.
    pub fn init_rule(&mut self, x: &[f64], label: usize) -> FuzzyRule {
        let sigma = if self.rules.is_empty() {
            FIRST_RULE_SIGMA
        } else {
            let (idx, dist) = self.nearest_rule(x);
            let beta = if self.rules[idx].dominant_class() != label {
                0.5
            } else {
                1.0
            };
            (beta * dist).max(MIN_SIGMA)
        };
        let id = self.next_id;
        self.next_id += 1;
        FuzzyRule::new(
            id,
            x,
            sigma,
            label,
            self.class_count,
            self.config.rls_init_scale,
        )
    }

    pub fn add_rule(&mut self, rule: FuzzyRule) -> Result<()> {
        if rule.input_dim() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: rule.input_dim(),
            });
        }
        self.next_id = self.next_id.max(rule.id + 1);
        self.rules.push(rule);
        Ok(())
    }

    /// Fuzzily weighted RLS update of every sufficiently firing active rule.
    pub fn update_consequent(&mut self, x: &[f64], target: &[f64]) -> Result<()> {
        self.check_input(x)?;
        if target.len() != self.class_count {
            return Err(Error::Dimension {
                expected: self.class_count,
                got: target.len(),
            });
        }
        if self.rules.is_empty() {
            return Err(Error::EmptyModel);
        }
        let (_, normalized) = self.firings(x)?;
        let h = chebyshev_expand(x);
        let decay = self.config.weight_decay;
        let omega = self.config.rls_init_scale;
        for (rule, &lambda) in self.rules.iter_mut().zip(&normalized) {
            if lambda < MIN_UPDATE_WEIGHT {
                continue;
            }
            let mut cov = rule.rls_cov.clone();
            let mut w = rule.consequent.clone();
            fwgrls_step(&mut cov, &mut w, &h, target, lambda, decay);
            if !(linalg::is_finite(&cov) && linalg::is_finite(&w)) {
                // reset the output covariance and retry once
                let p = h.len();
                cov = DMatrix::identity(p, p) * omega;
                w = rule.consequent.clone();
                fwgrls_step(&mut cov, &mut w, &h, target, lambda, decay);
                if !(linalg::is_finite(&cov) && linalg::is_finite(&w)) {
                    return Err(Error::NonFinite("consequent update"));
                }
            }
            rule.rls_cov = cov;
            rule.consequent = w;
        }
        Ok(())
    }

    /// Moves the winning active rule towards `x` and updates its inverse
    /// covariance in place.
    pub fn update_premise(&mut self, x: &[f64]) -> Result<()> {
        self.check_input(x)?;
        if self.rules.is_empty() {
            return Err(Error::EmptyModel);
        }
        let (_, normalized) = self.firings(x)?;
        let rule = &mut self.rules[argmax(&normalized)];
        rule.support += 1;
        let xv = DVector::from_column_slice(x);
        let step = (&xv - &rule.center) / rule.support as f64;
        rule.center += step;
        let d = &xv - &rule.center;
        rule.inv_cov = rank_one_inverse_update(&rule.inv_cov, &d, rule.support);
        linalg::clip_eigenvalues(&mut rule.inv_cov, INV_COV_FLOOR, INV_COV_CEIL);
        Ok(())
    }

    /// Folds the current normalised firings into every rule's age,
    /// lifetime contribution and firing average.
    fn record_firing(&mut self, normalized: &[f64]) {
        let rate = self.config.firing_ema_rate;
        for (rule, &w) in self.rules.iter_mut().zip(normalized) {
            rule.age += 1;
            rule.lifetime_contrib += w;
            rule.firing_ema += rate * (w - rule.firing_ema);
        }
    }

    /// Hard pruning of insignificant rules, soft deactivation of obsolete
    /// rules, and recall of dormant rules that win on `firing`.
    ///
    /// `firing` holds the raw firing of every rule on the current sample.
    pub fn prune_and_recall(&mut self, firing: &[f64]) {
        debug_assert_eq!(firing.len(), self.rules.len());
        let mut firing = firing.to_vec();

        let active: Vec<usize> = (0..self.rules.len()).filter(|&i| self.rules[i].active).collect();
        if active.len() >= 2 && self.config.prune_fraction > 0.0 {
            let significance = |r: &FuzzyRule| r.lifetime_contrib / r.age.max(1) as f64;
            let mean =
                active.iter().map(|&i| significance(&self.rules[i])).sum::<f64>() / active.len() as f64;
            let limit = self.config.prune_fraction * mean;
            let doomed: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| significance(&self.rules[i]) < limit)
                .collect();
            // the most significant rule always sits at or above the mean
            for &i in doomed.iter().rev() {
                self.rules.remove(i);
                firing.remove(i);
            }
        }

        let threshold = self.config.dormancy_threshold;
        for rule in self.rules.iter_mut().filter(|r| r.active) {
            if rule.firing_ema < threshold {
                rule.active = false;
            }
        }
        if !self.rules.is_empty() && self.rules.iter().all(|r| !r.active) {
            let keep = argmax(&self.rules.iter().map(|r| r.firing_ema).collect::<Vec<_>>());
            self.rules[keep].active = true;
        }

        let best_active = self
            .rules
            .iter()
            .zip(&firing)
            .filter(|(r, _)| r.active)
            .map(|(_, f)| *f)
            .fold(f64::NEG_INFINITY, f64::max);
        let recalled: Vec<usize> = (0..self.rules.len())
            .filter(|&i| !self.rules[i].active && firing[i] > best_active)
            .collect();
        if !recalled.is_empty() {
            let restart = 1.0 / (self.active_rule_count() + recalled.len()) as f64;
            for i in recalled {
                let rule = &mut self.rules[i];
                rule.active = true;
                rule.firing_ema = rule.firing_ema.max(restart);
            }
        }
    }

    /// Local forgetting: at the end of each evaluation window, a rule whose
    /// firing average fell across the last two windows has its output
    /// covariance inflated by `1/κ`, capped at the initial scale `ω`.
    pub fn apply_forgetting(&mut self) {
        let window = self.config.forgetting_window as u64;
        if self.samples_seen == 0 || self.samples_seen % window != 0 {
            return;
        }
        let kappa = self.config.forgetting_inflation;
        let omega = self.config.rls_init_scale;
        for rule in &mut self.rules {
            let now = rule.firing_ema;
            if let [Some(older), Some(old)] = rule.ema_history {
                if kappa < 1.0 && now < old && old < older {
                    inflate_covariance(&mut rule.rls_cov, kappa, omega);
                }
            }
            rule.ema_history = [rule.ema_history[1], Some(now)];
        }
    }

    /// One pass of the learning policy on a labelled sample.
    pub fn train_on_sample(&mut self, x: &[f64], target: &[f64]) -> Result<SampleAction> {
        self.check_input(x)?;
        if target.len() != self.class_count {
            return Err(Error::Dimension {
                expected: self.class_count,
                got: target.len(),
            });
        }
        let label = argmax(target);
        if self.rules.is_empty() {
            let rule = self.init_rule(x, label);
            self.last_winner = Some(rule.id);
            self.rules.push(rule);
            self.density.update(x);
            self.samples_seen += 1;
            return Ok(SampleAction::TrainFull);
        }

        let inference = self.infer(x)?;
        let action = self.select_sample(x, &inference);
        self.density.update(x);
        self.samples_seen += 1;
        if action == SampleAction::Skip {
            return Ok(action);
        }
        if action == SampleAction::TrainFull {
            if self.grow_check(x)? {
                let rule = self.init_rule(x, label);
                self.rules.push(rule);
            } else {
                self.update_premise(x)?;
            }
        }
        self.update_consequent(x, target)?;

        let (firing, normalized) = self.firings(x)?;
        self.last_winner = Some(self.rules[argmax(&normalized)].id);
        self.record_firing(&normalized);
        self.prune_and_recall(&firing);
        self.apply_forgetting();
        Ok(action)
    }

    /// Checks the structural invariants: SPD matrices and an active rule.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.rules.is_empty() {
            return Ok(());
        }
        if !self.rules.iter().any(|r| r.active) {
            return Err("no active rule".into());
        }
        for r in &self.rules {
            for (name, m) in [("inv_cov", &r.inv_cov), ("rls_cov", &r.rls_cov)] {
                if (m - m.transpose()).amax() > 1e-9 * m.amax().max(1.0) {
                    return Err(format!("rule {}: {name} not symmetric", r.id));
                }
                let min = linalg::min_eigenvalue(m);
                if !(min > 0.0) {
                    return Err(format!("rule {}: {name} min eigenvalue {min}", r.id));
                }
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn rules_mut(&mut self) -> &mut Vec<FuzzyRule> {
        &mut self.rules
    }
}

fn inflate_covariance(cov: &mut DMatrix<f64>, kappa: f64, cap: f64) {
    *cov /= kappa;
    linalg::clip_eigenvalues(cov, 0.0, cap);
}

#[cfg(test)]
mod tests;
