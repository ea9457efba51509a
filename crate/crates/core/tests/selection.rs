mod common;

use common::*;
use fairboost::boosting::{Convergence, ModelMeta, WeakLearner};
use fairboost::selection::objective;
use fairboost::stump::DecisionStump;
use fairboost::{select_theta, Dataset, EnsembleModel, Group, Label, TrainConfig};
use rand::Rng;

fn model(parts: Vec<(DecisionStump, f64)>) -> EnsembleModel {
    let meta = ModelMeta {
        config: TrainConfig::default(),
        smote: None,
        dataset_hash: String::new(),
        convergence: Convergence::MaxRounds,
    };
    EnsembleModel::new(parts.into_iter().map(|(stump, alpha)| WeakLearner { stump, alpha }).collect(), meta).unwrap()
}

fn split(feature: usize, threshold: f64, left: Label) -> DecisionStump {
    DecisionStump {
        feature,
        threshold,
        left_label: left,
        right_label: left.flip(),
        left_conf: 1.0,
        right_conf: 1.0,
        degenerate: false,
    }
}

/// (ER, BER, Eq.Odds) of the first `theta` learners, evaluated row by row.
fn from_scratch(m: &EnsembleModel, rows: &[Vec<f64>], y: &[f64], prot: &[bool], theta: usize) -> (f64, f64, f64) {
    let pred: Vec<f64> = rows
        .iter()
        .map(|x| {
            let s: f64 = m.learners()[..theta].iter().map(|l| l.alpha * l.stump.predict(x).0.sign()).sum();
            if s >= 0.0 { 1.0 } else { -1.0 }
        })
        .collect();
    let n = y.len() as f64;
    let er = (0..y.len()).filter(|&i| pred[i] != y[i]).count() as f64 / n;
    let class_err = |c: f64| {
        let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        idx.iter().filter(|&&i| pred[i] != y[i]).count() as f64 / idx.len() as f64
    };
    let ber = 0.5 * (class_err(1.0) + class_err(-1.0));
    let (fnr, fpr) = ref_gaps(&pred, y, prot);
    (er, ber, fnr.abs() + fpr.abs())
}

#[test]
fn incremental_curve_matches_from_scratch() {
    let mut r = rng(61);
    for trial in 0..500 {
        let (rows, labels, groups) = random_dataset(&mut r, 50, 3, 10);
        let ds = Dataset::from_rows(&rows, labels.clone(), groups.clone()).unwrap();
        let parts = (0..10)
            .map(|_| {
                let left = if r.random_bool(0.5) { Label::Pos } else { Label::Neg };
                (split(r.random_range(0..3), r.random_range(0..10) as f64 + 0.5, left), r.random_range(0.01..2.0))
            })
            .collect();
        let m = model(parts);
        let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
        let prot: Vec<bool> = groups.iter().map(|&g| g == Group::Prot).collect();
        let c = [0.0, 0.3, 1.0][trial % 3];
        let res = select_theta(&m, &ds, c).unwrap();
        assert_eq!(res.curve.len(), 10);
        let mut best = (f64::INFINITY, 0);
        for (k, p) in res.curve.iter().enumerate() {
            let (er, ber, eq) = from_scratch(&m, &rows, &y, &prot, k + 1);
            assert_eq!(p.theta, k + 1);
            assert!((p.er - er).abs() < 1e-12 && (p.ber - ber).abs() < 1e-12 && (p.eq_odds - eq).abs() < 1e-12);
            let obj = c * ber + (1.0 - c) * er + eq;
            assert!((p.objective - obj).abs() < 1e-12);
            assert!((0.0..=3.0).contains(&p.objective));
            if obj < best.0 - 1e-12 {
                best = (obj, k + 1);
            }
        }
        assert_eq!(res.theta, best.1, "trial {trial}");
        assert!((res.objective - best.0).abs() < 1e-12);
    }
}

/// 16 negatives at x = 0..15, 4 positives at x = 16..19, groups alternating.
/// Prefix 1 calls everything negative; prefix 2 also flags x ≥ 10.
fn tradeoff() -> (Dataset, EnsembleModel) {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
    let labels: Vec<Label> = (0..20).map(|i| if i >= 16 { Label::Pos } else { Label::Neg }).collect();
    let groups: Vec<Group> = (0..20).map(|i| if i % 2 == 0 { Group::Prot } else { Group::NonProt }).collect();
    let ds = Dataset::from_rows(&rows, labels, groups).unwrap();
    let m = model(vec![(DecisionStump::constant(Label::Neg, 1.0), 1.0), (split(0, 9.5, Label::Neg), 2.0)]);
    (ds, m)
}

#[test]
fn balanced_weighting_prefers_the_longer_prefix() {
    let (ds, m) = tradeoff();
    let hi = select_theta(&m, &ds, 1.0).unwrap();
    let lo = select_theta(&m, &ds, 0.0).unwrap();
    // Prefix 1: ER 0.2, BER 0.5. Prefix 2: ER 0.3, BER 0.1875. No gaps.
    assert_eq!(hi.curve[0].objective, 0.5);
    assert_eq!(hi.curve[1].objective, 0.1875);
    assert_eq!(lo.curve[0].objective, 0.2);
    assert!((lo.curve[1].objective - 0.3).abs() < 1e-15);
    assert_eq!((hi.theta, lo.theta), (2, 1));
    assert!(hi.theta >= lo.theta);
}

#[test]
fn single_learner_picks_one() {
    let (ds, _) = tradeoff();
    let m = model(vec![(split(0, 9.5, Label::Neg), 0.3)]);
    for c in [0.0, 0.5, 1.0] {
        assert_eq!(select_theta(&m, &ds, c).unwrap().theta, 1);
    }
    assert!(select_theta(&m, &ds, 1.5).is_err());
}

#[test]
fn ties_pick_the_shorter_prefix() {
    let (ds, _) = tradeoff();
    let s = split(0, 9.5, Label::Neg);
    let m = model(vec![(s.clone(), 1.0), (s.clone(), 1.0), (s, 1.0)]);
    assert_eq!(select_theta(&m, &ds, 0.5).unwrap().theta, 1);
}

#[test]
fn doubling_the_majority_class_leaves_the_balanced_objective() {
    let mut r = rng(67);
    for _ in 0..100 {
        let (rows, labels, groups) = random_dataset(&mut r, 30, 2, 6);
        let parts = (0..5)
            .map(|_| (split(r.random_range(0..2), r.random_range(0..6) as f64 + 0.5, Label::Pos), r.random_range(0.1..1.0)))
            .collect();
        let m = model(parts);
        let ds = Dataset::from_rows(&rows, labels.clone(), groups.clone()).unwrap();
        let (mut rows2, mut labels2, mut groups2) = (rows.clone(), labels.clone(), groups.clone());
        for i in 0..rows.len() {
            if labels[i] == Label::Neg {
                rows2.push(rows[i].clone());
                labels2.push(Label::Neg);
                groups2.push(groups[i]);
            }
        }
        let doubled = Dataset::from_rows(&rows2, labels2, groups2).unwrap();
        let a = select_theta(&m, &ds, 1.0).unwrap();
        let b = select_theta(&m, &doubled, 1.0).unwrap();
        for (p, q) in a.curve.iter().zip(&b.curve) {
            assert!((p.objective - q.objective).abs() < 1e-12);
        }
        assert_eq!(a.theta, b.theta);
    }
}

#[test]
fn objective_formula() {
    assert_eq!(objective(1.0, 0.9, 0.2, 0.1), 0.30000000000000004);
    assert_eq!(objective(0.0, 0.25, 0.9, 0.5), 0.75);
    assert_eq!(objective(0.5, 0.2, 0.4, 0.0), 0.30000000000000004);
}

#[test]
fn curve_csv_has_one_row_per_prefix() {
    let (ds, m) = tradeoff();
    let csv = select_theta(&m, &ds, 1.0).unwrap().to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "theta,er,ber,eq_odds,objective");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("2,0.3,0.1875,0,"));
}
