//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1 to 4 train on the benchmark CSVs found in `$FAIRBOOST_DATA`
//! (default `<repo>/data`); a missing file is reported as FAIL. Criteria 5
//! to 10 are self-contained. The process exits nonzero when a
//! self-contained criterion fails; dataset criteria are report-only.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use common::*;
use fairboost::boosting::{fairness_costs, train_with_observer};
use fairboost::harness::{
    evaluate_split, mean_std, run_experiment_on, run_sweep_c_on, train_split, DatasetRef,
    ExperimentSpec, Method,
};
use fairboost::metrics::RateGaps;
use fairboost::synth::mirrored;
use fairboost::{
    select_theta, train, train_smoteboost, Dataset, EnsembleModel, Error, FairnessReport, Group,
    Label, SmoteConfig, TrainConfig, Variant,
};
use rand::Rng;

const SEED: u64 = 42;
const SPLITS: usize = 10;

/// (id, name, self-contained, check)
type Criterion = (u8, &'static str, bool, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn data_dir() -> PathBuf {
    std::env::var_os("FAIRBOOST_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn load(name: &str) -> Result<Dataset, String> {
    DatasetRef::parse(name, None, &data_dir())
        .and_then(|d| d.load())
        .map_err(|e| format!("{name} unavailable: {e}"))
}

fn spec(name: &str, method: Method) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(DatasetRef::parse(name, None, &data_dir()).unwrap(), method);
    s.splits = SPLITS;
    s.base_seed = SEED;
    s
}

fn mean_report(name: &str, ds: &Dataset, method: Method) -> Result<FairnessReport, String> {
    run_experiment_on(ds, &spec(name, method))
        .map(|a| a.mean)
        .map_err(|e| format!("{} failed: {e}", method.name()))
}

// Dataset criteria.

fn kdd() -> Outcome {
    let run = || -> Result<Outcome, String> {
        let ds = load("kdd")?;
        let fair = mean_report("kdd", &ds, Method::AdaFair)?;
        let vanilla = mean_report("kdd", &ds, Method::Vanilla)?;
        // Pinned: target ± 0.03 absolute.
        let eq_ok = fair.eq_odds <= 0.05 + 0.03;
        let tpr_ok = fair.tpr_prot > 0.78 - 0.03 && fair.tpr_nonprot > 0.78 - 0.03;
        let van_ok = (vanilla.eq_odds - 0.28).abs() <= 0.08;
        Ok(outcome(
            eq_ok && tpr_ok && van_ok,
            format!(
                "AdaFair Eq.Odds {:.4} (≤ 0.08), TPR prot {:.4} nonprot {:.4} (> 0.75); Vanilla Eq.Odds {:.4} (0.28 ± 0.08)",
                fair.eq_odds, fair.tpr_prot, fair.tpr_nonprot, vanilla.eq_odds
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e))
}

fn bank() -> Outcome {
    let run = || -> Result<Outcome, String> {
        let ds = load("bank")?;
        let sweep = run_sweep_c_on(&ds, &spec("bank", Method::AdaFair), &[0.0, 1.0])
            .map_err(|e| format!("sweep failed: {e}"))?;
        let (c0, c1) = (&sweep[0].mean, &sweep[1].mean);
        let tpr_up = [c1.tpr_prot - c0.tpr_prot, c1.tpr_nonprot - c0.tpr_nonprot];
        let tnr_down = [c0.tnr_prot - c1.tnr_prot, c0.tnr_nonprot - c1.tnr_nonprot];
        Ok(outcome(
            tpr_up.iter().all(|&d| d >= 0.45) && tnr_down.iter().all(|&d| d <= 0.12),
            format!(
                "TPR increase prot {:.4} nonprot {:.4} (≥ 0.45); TNR decrease prot {:.4} nonprot {:.4} (≤ 0.12)",
                tpr_up[0], tpr_up[1], tnr_down[0], tnr_down[1]
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e))
}

fn adult() -> Outcome {
    let run = || -> Result<Outcome, String> {
        let ds = load("adult")?;
        let mut reports = [vec![], vec![]];
        let mut tail_max = 0.0f64;
        let mut tail_worst_split = 0;
        for (k, method) in [Method::AdaFair, Method::NoCumul].into_iter().enumerate() {
            let s = spec("adult", method);
            for split in 0..SPLITS {
                let sm = train_split(&ds, &s, split).map_err(|e| e.to_string())?;
                let (res, _) = evaluate_split(&sm, s.select_theta, s.train.c).map_err(|e| e.to_string())?;
                reports[k].push(res.report);
                if method == Method::AdaFair {
                    let rounds = &sm.trace.rounds;
                    let tail = &rounds[rounds.len() - rounds.len() / 4..];
                    let m = tail
                        .iter()
                        .map(|r| r.delta_fnr.abs().max(r.delta_fpr.abs()))
                        .fold(0.0, f64::max);
                    if m > tail_max {
                        tail_max = m;
                        tail_worst_split = split;
                    }
                }
            }
        }
        let fair = mean_std(&reports[0]).0;
        let nocumul = mean_std(&reports[1]).0;
        let gap = nocumul.eq_odds - fair.eq_odds;
        Ok(outcome(
            gap >= 0.35 && tail_max <= 0.05,
            format!(
                "Eq.Odds NoCumul {:.4} − AdaFair {:.4} = {gap:.4} (≥ 0.35); max |δ| over last 25% of rounds {tail_max:.4} on split {tail_worst_split} (≤ 0.05)",
                nocumul.eq_odds, fair.eq_odds
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e))
}

fn compass() -> Outcome {
    let run = || -> Result<Outcome, String> {
        let ds = load("compass")?;
        let mut gaps = vec![];
        let mut fair_eq = f64::NAN;
        for method in Method::ALL {
            let m = mean_report("compass", &ds, method)?;
            if method == Method::AdaFair {
                fair_eq = m.eq_odds;
            }
            gaps.push((method.name(), (m.accuracy - m.balanced_accuracy).abs()));
        }
        let worst = gaps.iter().cloned().fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
        Ok(outcome(
            fair_eq <= 0.10 && worst.1 <= 0.05,
            format!(
                "AdaFair Eq.Odds {fair_eq:.4} (≤ 0.10); max |acc − bal.acc| {:.4} for {} (≤ 0.05)",
                worst.1, worst.0
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e))
}

// Self-contained criteria.

fn to_ref(v: Variant) -> RefVariant {
    match v {
        Variant::AdaFair => RefVariant::AdaFair,
        Variant::NoCumul => RefVariant::NoCumul,
        Variant::NoConf => RefVariant::NoConf,
        Variant::ConfOnly => RefVariant::ConfOnly,
        Variant::Vanilla => RefVariant::Vanilla,
    }
}

fn cfg(variant: Variant, rounds: usize) -> TrainConfig {
    TrainConfig {
        rounds,
        ..TrainConfig::new(variant)
    }
}

/// Model, per-round weights, per-round costs and trace.
type Observed = (EnsembleModel, Vec<Vec<f64>>, Vec<Vec<f64>>, fairboost::Trace);

fn observe(ds: &Dataset, cfg: &TrainConfig) -> fairboost::Result<Observed> {
    let mut weights = vec![];
    let mut costs = vec![];
    let (m, t) = train_with_observer(ds, cfg, |s| {
        weights.push(s.weights.to_vec());
        costs.push(s.costs.to_vec());
    })?;
    Ok((m, weights, costs, t))
}

fn oracle_trace() -> Outcome {
    let (rows, labels, groups) = hand_dataset();
    let ds = Dataset::from_rows(&rows, labels.clone(), groups.clone()).unwrap();
    let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
    let prot: Vec<bool> = groups.iter().map(|&g| g == Group::Prot).collect();
    let mut worst = 0.0f64;
    let mut shape_ok = true;
    for variant in Variant::ALL {
        let (_, w, u, trace) = observe(&ds, &cfg(variant, 3)).unwrap();
        let reference = ref_train(&rows, &y, &prot, to_ref(variant), 3, 0.0, true);
        shape_ok &= reference.len() == 3 && trace.rounds.len() == 3;
        for (j, r) in reference.iter().enumerate().take(trace.rounds.len()) {
            let rec = &trace.rounds[j];
            worst = worst.max((rec.err - r.err).abs()).max((rec.alpha - r.alpha).abs());
            for i in 0..rows.len() {
                worst = worst.max((w[j][i] - r.w[i]).abs()).max((u[j][i] - r.u[i]).abs());
            }
        }
    }
    outcome(
        shape_ok && worst <= 1e-12,
        format!("5 variants × 3 rounds, max |Δ| over (w, u, err, α) {worst:.2e} (≤ 1e-12)"),
    )
}

fn simplex() -> Outcome {
    let mut r = rng(1001);
    let mut worst = 0.0f64;
    let mut negative = 0usize;
    let mut rounds = 0usize;
    for trial in 0..1000 {
        let n = r.random_range(8..30);
        let d = r.random_range(1..4);
        let (rows, labels, groups) = random_dataset(&mut r, n, d, 5);
        let ds = Dataset::from_rows(&rows, labels, groups).unwrap();
        let config = TrainConfig {
            epsilon: [0.0, 0.05, 0.2][trial % 3],
            ..cfg(Variant::ALL[trial % Variant::ALL.len()], 8)
        };
        let res = train_with_observer(&ds, &config, |s| {
            rounds += 1;
            negative += s.weights.iter().filter(|&&w| w < 0.0).count();
            worst = worst.max((s.weights.iter().sum::<f64>() - 1.0).abs());
        });
        if let Err(e) = res {
            if !matches!(e, Error::NoUsableLearner(_)) {
                return outcome(false, format!("trial {trial}: {e}"));
            }
        }
    }
    outcome(
        negative == 0 && worst <= 1e-9,
        format!("1000 trials, {rounds} rounds: {negative} negative weights, max |Σw − 1| {worst:.2e} (≤ 1e-9)"),
    )
}

fn symmetry() -> Outcome {
    let mut r = rng(1002);
    let mut nonzero_costs = 0usize;
    let mut nonzero_gaps = 0usize;
    let mut mismatched = 0usize;
    let trials = 100;
    for _ in 0..trials {
        let n = r.random_range(6..20);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(0..6) as f64, r.random::<f64>()]).collect();
        let mut labels: Vec<Label> = (0..n).map(|_| if r.random_bool(0.5) { Label::Pos } else { Label::Neg }).collect();
        labels[0] = Label::Pos;
        labels[1] = Label::Neg;
        let ds = mirrored(&rows, &labels).unwrap();
        let free = TrainConfig {
            fairness_stop: false,
            ..cfg(Variant::AdaFair, 15)
        };
        let (fair, _, costs, fair_trace) = observe(&ds, &free).unwrap();
        nonzero_costs += costs.iter().flatten().filter(|&&u| u != 0.0).count();
        nonzero_gaps += fair_trace.rounds.iter().filter(|r| r.delta_fnr != 0.0 || r.delta_fpr != 0.0).count();
        let (conf, conf_trace) = train(&ds, &cfg(Variant::ConfOnly, 15)).unwrap();
        if fair.learners() != conf.learners() || fair_trace.rounds != conf_trace.rounds {
            mismatched += 1;
        }
    }
    outcome(
        nonzero_costs + nonzero_gaps + mismatched == 0,
        format!("{trials} mirrored sets: {nonzero_costs} nonzero costs, {nonzero_gaps} nonzero δ rounds, {mismatched} traces differing from confidence-only"),
    )
}

fn cost_cases() -> Outcome {
    let mut r = rng(1003);
    let mut disagreements = 0usize;
    let mut both_groups = 0usize;
    for _ in 0..10_000 {
        let n = r.random_range(1..12);
        let d_fnr = if r.random_bool(0.1) { 0.0 } else { r.random_range(-1.0..=1.0) };
        let d_fpr = if r.random_bool(0.1) { 0.0 } else { r.random_range(-1.0..=1.0) };
        let eps = if r.random_bool(0.3) { 0.0 } else { r.random_range(0.0..1.2) };
        let miss: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        let groups: Vec<Group> = (0..n).map(|_| if r.random_bool(0.5) { Group::Prot } else { Group::NonProt }).collect();
        let labels: Vec<Label> = (0..n).map(|_| if r.random_bool(0.5) { Label::Pos } else { Label::Neg }).collect();
        let u = fairness_costs(RateGaps { fnr: d_fnr, fpr: d_fpr }, &miss, &groups, &labels, eps);
        let mut costed = [[false; 2]; 2];
        for i in 0..n {
            let prot = groups[i] == Group::Prot;
            let pos = labels[i] == Label::Pos;
            let expect = ref_cost(d_fnr, d_fpr, eps, miss[i], prot, pos);
            if u[i] != expect {
                disagreements += 1;
            }
            if u[i] != 0.0 {
                costed[pos as usize][prot as usize] = true;
            }
        }
        both_groups += costed.iter().filter(|c| c[0] && c[1]).count();
    }
    outcome(
        disagreements == 0 && both_groups == 0,
        format!("10000 trials: {disagreements} disagreements with the reference, {both_groups} classes costing both groups"),
    )
}

fn theta_oracle() -> Outcome {
    use fairboost::boosting::{Convergence, ModelMeta, WeakLearner};
    use fairboost::stump::DecisionStump;
    let mut r = rng(1004);
    let mut worst = 0.0f64;
    let mut wrong_theta = 0usize;
    let trials = 500;
    for trial in 0..trials {
        let (rows, labels, groups) = random_dataset(&mut r, 50, 3, 10);
        let ds = Dataset::from_rows(&rows, labels.clone(), groups.clone()).unwrap();
        let learners = (0..10)
            .map(|_| {
                let left = if r.random_bool(0.5) { Label::Pos } else { Label::Neg };
                WeakLearner {
                    stump: DecisionStump {
                        feature: r.random_range(0..3),
                        threshold: r.random_range(0..10) as f64 + 0.5,
                        left_label: left,
                        right_label: left.flip(),
                        left_conf: 1.0,
                        right_conf: 1.0,
                        degenerate: false,
                    },
                    alpha: r.random_range(0.01..2.0),
                }
            })
            .collect();
        let meta = ModelMeta {
            config: TrainConfig::default(),
            smote: None,
            dataset_hash: String::new(),
            convergence: Convergence::MaxRounds,
        };
        let m = EnsembleModel::new(learners, meta).unwrap();
        let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
        let prot: Vec<bool> = groups.iter().map(|&g| g == Group::Prot).collect();
        let c = [0.0, 0.5, 1.0][trial % 3];
        let res = select_theta(&m, &ds, c).unwrap();
        let mut best = (f64::INFINITY, 0);
        for (k, p) in res.curve.iter().enumerate() {
            let pred: Vec<f64> = rows
                .iter()
                .map(|x| {
                    let s: f64 = m.learners()[..=k].iter().map(|l| l.alpha * l.stump.predict(x).0.sign()).sum();
                    if s >= 0.0 { 1.0 } else { -1.0 }
                })
                .collect();
            let er = (0..50).filter(|&i| pred[i] != y[i]).count() as f64 / 50.0;
            let class_err = |cl: f64| {
                let idx: Vec<usize> = (0..50).filter(|&i| y[i] == cl).collect();
                idx.iter().filter(|&&i| pred[i] != y[i]).count() as f64 / idx.len() as f64
            };
            let ber = 0.5 * (class_err(1.0) + class_err(-1.0));
            let (fnr, fpr) = ref_gaps(&pred, &y, &prot);
            let obj = c * ber + (1.0 - c) * er + fnr.abs() + fpr.abs();
            worst = worst
                .max((p.er - er).abs())
                .max((p.ber - ber).abs())
                .max((p.eq_odds - fnr.abs() - fpr.abs()).abs())
                .max((p.objective - obj).abs());
            if obj < best.0 - 1e-12 {
                best = (obj, k + 1);
            }
        }
        if res.theta != best.1 {
            wrong_theta += 1;
        }
    }
    outcome(
        worst <= 1e-12 && wrong_theta == 0,
        format!("{trials} random 10-learner models on 50 rows: max |Δ| {worst:.2e}, {wrong_theta} θ disagreements"),
    )
}

fn reductions() -> Outcome {
    let mut r = rng(1005);
    let mut smote_diff = 0usize;
    let mut conf_diff = 0usize;
    let trials = 60;
    for seed in 0..trials {
        let (rows, labels, groups) = random_dataset(&mut r, 40, 3, 9);
        let ds = Dataset::from_rows(&rows, labels, groups).unwrap();
        let vanilla = TrainConfig { rounds: 20, seed, ..TrainConfig::new(Variant::Vanilla) };
        let same = match (train_smoteboost(&ds, 20, &SmoteConfig { n: 0, k: 5, seed }), train(&ds, &vanilla)) {
            (Ok((a, _)), Ok((b, _))) => a.to_json() == b.to_json(),
            (Err(Error::NoUsableLearner(_)), Err(Error::NoUsableLearner(_))) => true,
            _ => false,
        };
        smote_diff += !same as usize;

        let conf = train(&ds, &cfg(Variant::ConfOnly, 20));
        for epsilon in [2.0, 3.0] {
            let fair = train(&ds, &TrainConfig { epsilon, fairness_stop: false, ..cfg(Variant::AdaFair, 20) });
            let same = match (&fair, &conf) {
                (Ok((a, ta)), Ok((b, tb))) => {
                    a.learners() == b.learners()
                        && ta.rounds.iter().zip(&tb.rounds).all(|(x, y)| x.err == y.err && x.alpha == y.alpha)
                }
                (Err(_), Err(_)) => true,
                _ => false,
            };
            conf_diff += !same as usize;
        }
    }
    outcome(
        smote_diff + conf_diff == 0,
        format!("{trials} sets: {smote_diff} SMOTE N=0 models differing from vanilla JSON, {conf_diff} ε ≥ 2 runs differing from confidence-only"),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; a name filter
    // that excludes this target skips it.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() && !filters.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }
    let checks: [Criterion; 10] = [
        (1, "kdd adafair vs vanilla", false, kdd),
        (2, "bank c-sweep", false, bank),
        (3, "adult cumulative vs non-cumulative", false, adult),
        (4, "compass accuracy vs balanced accuracy", false, compass),
        (5, "six-instance oracle trace", true, oracle_trace),
        (6, "weight simplex", true, simplex),
        (7, "mirrored symmetry", true, symmetry),
        (8, "cost case coverage", true, cost_cases),
        (9, "theta selection oracle", true, theta_oracle),
        (10, "reductions", true, reductions),
    ];
    let mut property_failures = 0;
    for (id, name, property, check) in checks {
        let start = Instant::now();
        let o = check();
        println!(
            "{} {id:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if property && !o.pass {
            property_failures += 1;
        }
    }
    if property_failures > 0 {
        eprintln!("{property_failures} self-contained criteria failed");
        std::process::exit(1);
    }
}
