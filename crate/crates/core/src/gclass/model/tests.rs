use super::*;
use crate::gclass::expanded_dim;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(n: usize, m: usize) -> GClassModel {
    GClassModel::new(n, m, GClassConfig::default()).unwrap()
}

fn one_hot(label: usize, m: usize) -> Vec<f64> {
    let mut t = vec![0.0; m];
    t[label] = 1.0;
    t
}

#[test]
fn confidence_examples() {
    assert_eq!(confidence(&[0.5, 0.5]), 0.5);
    assert_eq!(confidence(&[1.0, 0.0]), 1.0);
    assert_eq!(confidence(&[0.0, 0.0]), 0.5);
    assert!((confidence(&[0.2, 0.6, 0.2]) - 0.75).abs() < 1e-12);
    // negative scores are lifted to zero first
    assert!((confidence(&[-1.0, 1.0]) - 1.0).abs() < 1e-12);
}

#[test]
fn rank_one_update_matches_explicit_inverse() {
    let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 0.8]);
    let inv = cov.clone().try_inverse().unwrap();
    let d = DVector::from_vec(vec![0.4, -1.1, 0.7]);
    for n in [2u64, 5, 40] {
        let nf = n as f64;
        let explicit = ((&cov * (nf - 1.0) + &d * d.transpose()) / nf)
            .try_inverse()
            .unwrap();
        let fast = rank_one_inverse_update(&inv, &d, n);
        assert!((fast - explicit).amax() < 1e-10);
    }
}

#[test]
fn fwgrls_converges_to_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 2;
    let p = expanded_dim(n);
    let truth = DMatrix::from_fn(p, 2, |i, j| ((i + 2 * j) as f64 * 0.7).sin());
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut w = DMatrix::zeros(p, 2);
    let mut cov = DMatrix::identity(p, p) * 1e5;
    for _ in 0..5000 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = chebyshev_expand(&x);
        let noise: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.05..0.05)).collect();
        let t: Vec<f64> = truth
            .tr_mul(&h)
            .iter()
            .zip(&noise)
            .map(|(a, b)| a + b)
            .collect();
        fwgrls_step(&mut cov, &mut w, &h, &t, 1.0, 0.0);
        rows.push(h);
        targets.push(t);
    }
    let design = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let y = DMatrix::from_fn(rows.len(), 2, |i, j| targets[i][j]);
    let normal = design.transpose() * &design;
    let ls = normal.try_inverse().unwrap() * design.transpose() * y;
    let rel = (&w - &ls).norm() / ls.norm();
    assert!(rel < 1e-2, "relative error {rel}");
}

#[test]
fn output_covariance_stays_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = expanded_dim(3);
    let mut w = DMatrix::zeros(p, 2);
    let mut cov = DMatrix::identity(p, p) * 1e5;
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let t = one_hot(rng.gen_range(0..2), 2);
        let lambda = rng.gen_range(0.01..1.0);
        fwgrls_step(&mut cov, &mut w, &chebyshev_expand(&x), &t, lambda, 1e-5);
    }
    assert!(linalg::min_eigenvalue(&cov) > 0.0);
    assert!(linalg::is_finite(&w));
}

#[test]
fn first_sample_creates_one_rule() {
    let mut m = model(2, 2);
    assert!(matches!(m.infer(&[0.0, 0.0]), Err(Error::EmptyModel)));
    let action = m.train_on_sample(&[0.3, 0.4], &one_hot(1, 2)).unwrap();
    assert_eq!(action, SampleAction::TrainFull);
    assert_eq!(m.rule_count(), 1);
    assert_eq!(m.rules()[0].center(), &[0.3, 0.4]);
    assert_eq!(m.infer(&[0.3, 0.4]).unwrap().predicted, 1);
}

#[test]
fn rejects_wrong_dimensions() {
    let mut m = model(2, 2);
    assert!(matches!(
        m.train_on_sample(&[0.0], &[1.0, 0.0]),
        Err(Error::Dimension { expected: 2, got: 1 })
    ));
    assert!(matches!(
        m.train_on_sample(&[0.0, 0.0], &[1.0, 0.0, 0.0]),
        Err(Error::Dimension { expected: 2, got: 3 })
    ));
    assert!(m.train_on_sample(&[f64::NAN, 0.0], &[1.0, 0.0]).is_err());
}

#[test]
fn duplicating_rules_leaves_scores_unchanged() {
    let mut single = model(2, 2);
    single.add_rule(FuzzyRule::new(0, &[0.0, 0.0], 1.0, 1, 2, 1e5)).unwrap();
    let before = single.infer(&[0.8, 1.1]).unwrap();
    let mut copy = single.rules()[0].clone();
    copy.id = 1;
    single.add_rule(copy).unwrap();
    assert_eq!(single.infer(&[0.8, 1.1]).unwrap().scores, before.scores);

    let mut pair = model(2, 2);
    pair.add_rule(FuzzyRule::new(0, &[0.0, 0.0], 1.0, 0, 2, 1e5)).unwrap();
    pair.add_rule(FuzzyRule::new(1, &[2.0, 2.0], 1.0, 1, 2, 1e5)).unwrap();
    let before = pair.infer(&[0.8, 1.1]).unwrap();
    for i in 0..2 {
        let mut copy = pair.rules()[i].clone();
        copy.id = 10 + i as u64;
        pair.add_rule(copy).unwrap();
    }
    let after = pair.infer(&[0.8, 1.1]).unwrap();
    for (a, b) in before.scores.iter().zip(&after.scores) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn selection_examples() {
    let mut m = model(1, 2);
    // spread densities so the band is well defined and wide
    for k in 0..100 {
        let x = if k % 2 == 0 { 0.05 * k as f64 } else { -0.05 * k as f64 };
        m.density.update(&[x]);
    }
    let (lo, hi) = m.density.band(0.05, 0.95).unwrap();
    let point = (0..400)
        .map(|i| i as f64 * 0.02)
        .find(|&x| {
            let d = m.density.density(&[x]);
            d > lo && d < hi
        })
        .expect("an in-band point");
    m.add_rule(FuzzyRule::new(0, &[point], 1.0, 0, 2, 1e5)).unwrap();

    let inf = m.infer(&[point]).unwrap();
    assert_eq!(inf.scores, vec![1.0, 0.0]);
    assert_eq!(m.select_sample(&[point], &inf), SampleAction::TrainConsequentOnly);

    m.last_winner = Some(0);
    assert_eq!(m.select_sample(&[point], &inf), SampleAction::Skip);

    let uncertain = Inference {
        scores: vec![0.5, 0.5],
        ..inf.clone()
    };
    assert_eq!(m.select_sample(&[point], &uncertain), SampleAction::TrainFull);
}

#[test]
fn skip_only_moves_density() {
    let mut m = model(1, 2);
    for k in 0..100 {
        let x = if k % 2 == 0 { 0.05 * k as f64 } else { -0.05 * k as f64 };
        m.density.update(&[x]);
    }
    let (lo, hi) = m.density.band(0.05, 0.95).unwrap();
    let point = (0..400)
        .map(|i| i as f64 * 0.02)
        .find(|&x| {
            let d = m.density.density(&[x]);
            d > lo + 1e-3 && d < hi - 1e-3
        })
        .unwrap();
    m.add_rule(FuzzyRule::new(0, &[point], 1.0, 0, 2, 1e5)).unwrap();
    m.last_winner = Some(0);
    let before = m.clone();
    let action = m.train_on_sample(&[point], &one_hot(0, 2)).unwrap();
    assert_eq!(action, SampleAction::Skip);
    assert_eq!(m.rules, before.rules);
    assert_eq!(m.density.count(), before.density.count() + 1);
}

#[test]
fn far_sample_grows_near_sample_does_not() {
    let mut m = model(2, 2);
    m.add_rule(FuzzyRule::new(0, &[0.0, 0.0], 1.0, 0, 2, 1e5)).unwrap();
    assert!(!m.grow_check(&[0.1, 0.1]).unwrap());
    assert!(m.grow_check(&[2.0, 0.0]).unwrap());
    // firing below vigilance, but the candidate would be oversized
    assert!(!m.grow_check(&[5000.0, 0.0]).unwrap());
}

#[test]
fn new_rule_spread_halves_for_conflicting_class() {
    let mut m = model(1, 2);
    m.add_rule(FuzzyRule::new(0, &[0.0], 1.0, 0, 2, 1e5)).unwrap();
    let same = m.init_rule(&[2.0], 0);
    let other = m.init_rule(&[2.0], 1);
    assert!((same.inv_cov()[(0, 0)] - 0.25).abs() < 1e-12);
    assert!((other.inv_cov()[(0, 0)] - 1.0).abs() < 1e-12);
    assert_eq!(other.id(), 2);
}

#[test]
fn pruning_keeps_a_rule_and_recall_reactivates() {
    let mut m = model(1, 2);
    m.add_rule(FuzzyRule::new(0, &[0.0], 1.0, 0, 2, 1e5)).unwrap();
    m.add_rule(FuzzyRule::new(1, &[5.0], 1.0, 1, 2, 1e5)).unwrap();
    {
        let rules = m.rules_mut();
        rules[0].age = 100;
        rules[0].lifetime_contrib = 90.0;
        rules[1].age = 100;
        rules[1].lifetime_contrib = 10.0;
        rules[1].firing_ema = 1e-6;
    }
    // contributions are above the prune limit; rule 1 goes dormant
    m.prune_and_recall(&[1.0, 0.0]);
    assert_eq!(m.rule_count(), 2);
    assert!(!m.rules()[1].is_active());
    // a dormant rule that out-fires every active rule comes back
    m.prune_and_recall(&[0.1, 0.9]);
    assert!(m.rules()[1].is_active());
    assert!((m.rules()[1].firing_ema() - 0.5).abs() < 1e-12);

    m.rules_mut()[1].lifetime_contrib = 0.1;
    m.prune_and_recall(&[1.0, 0.0]);
    assert_eq!(m.rule_count(), 1);
    assert_eq!(m.rules()[0].id(), 0);
}

#[test]
fn all_rules_dormant_keeps_the_best() {
    let mut m = model(1, 2);
    m.add_rule(FuzzyRule::new(0, &[0.0], 1.0, 0, 2, 1e5)).unwrap();
    m.add_rule(FuzzyRule::new(1, &[5.0], 1.0, 1, 2, 1e5)).unwrap();
    m.rules_mut()[0].firing_ema = 1e-7;
    m.rules_mut()[1].firing_ema = 1e-5;
    m.prune_and_recall(&[0.0, 0.0]);
    assert_eq!(m.active_rule_count(), 1);
    assert!(m.rules()[1].is_active());
}

#[test]
fn forgetting_inflates_declining_rules_up_to_the_cap() {
    let cfg = GClassConfig {
        forgetting_window: 1,
        ..GClassConfig::default()
    };
    let mut m = GClassModel::new(1, 2, cfg).unwrap();
    m.add_rule(FuzzyRule::new(0, &[0.0], 1.0, 0, 2, 1e5)).unwrap();
    m.rules_mut()[0].rls_cov *= 1e-3;
    let start = m.rules()[0].rls_cov()[(0, 0)];
    for ema in [0.9, 0.8, 0.7] {
        m.rules_mut()[0].firing_ema = ema;
        m.samples_seen += 1;
        m.apply_forgetting();
    }
    let grown = m.rules()[0].rls_cov()[(0, 0)];
    assert!((grown - start / 0.8).abs() < 1e-6 * start);
    for _ in 0..200 {
        let ema = m.rules()[0].firing_ema * 0.9;
        m.rules_mut()[0].firing_ema = ema;
        m.samples_seen += 1;
        m.apply_forgetting();
    }
    assert!(m.rules()[0].rls_cov()[(0, 0)] <= 1e5 * (1.0 + 1e-9));
}

fn blob(rng: &mut ChaCha8Rng, label: usize) -> Vec<f64> {
    let c = if label == 0 { [0.25, 0.25] } else { [0.75, 0.75] };
    c.iter().map(|v| v + rng.gen_range(-0.15..0.15)).collect()
}

#[test]
fn separates_two_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut m = model(2, 2);
    for _ in 0..2000 {
        let label = rng.gen_range(0..2);
        let x = blob(&mut rng, label);
        m.train_on_sample(&x, &one_hot(label, 2)).unwrap();
    }
    m.check_invariants().unwrap();
    let mut correct = 0;
    for _ in 0..1000 {
        let label = rng.gen_range(0..2);
        let x = blob(&mut rng, label);
        if m.infer(&x).unwrap().predicted == label {
            correct += 1;
        }
    }
    assert!(correct > 900, "accuracy {correct}/1000");
}

#[test]
fn serde_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut m = model(2, 2);
    for _ in 0..200 {
        let label = rng.gen_range(0..2);
        let x = blob(&mut rng, label);
        m.train_on_sample(&x, &one_hot(label, 2)).unwrap();
    }
    let json = serde_json::to_string(&m).unwrap();
    let back: GClassModel = serde_json::from_str(&json).unwrap();
    let x = [0.4, 0.6];
    assert_eq!(m.infer(&x).unwrap(), back.infer(&x).unwrap());
}

proptest! {
    #[test]
    fn normalized_firing_sums_to_one(
        centers in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..6),
        x in prop::collection::vec(-50.0f64..50.0, 2),
    ) {
        let mut m = model(2, 3);
        for (i, c) in centers.iter().enumerate() {
            m.add_rule(FuzzyRule::new(i as u64, c, 0.3, i % 3, 3, 1e5)).unwrap();
        }
        let inf = m.infer(&x).unwrap();
        let total: f64 = inf.normalized.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(inf.scores.iter().all(|s| s.is_finite()));
    }

    #[test]
    fn invariants_hold_under_training(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = model(3, 2);
        for _ in 0..300 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
            let label = usize::from(x[0] + x[1] > 1.0);
            m.train_on_sample(&x, &one_hot(label, 2)).unwrap();
        }
        prop_assert!(m.check_invariants().is_ok());
        prop_assert!(m.active_rule_count() >= 1);
    }
}
