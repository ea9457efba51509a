//! Reference implementations used as oracles. Everything here works on
//! dense rows and plain `f64` labels (+1/−1) and shares no code with the
//! library beyond its data types.
#![allow(dead_code)]

use fairboost::{Dataset, Group, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sign(y: Label) -> f64 {
    if y == Label::Pos {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefStump {
    pub constant: bool,
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub left_conf: f64,
    pub right_conf: f64,
}

impl RefStump {
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        if self.constant || x[self.feature] <= self.threshold {
            (self.left, self.left_conf)
        } else {
            (-self.left, self.right_conf)
        }
    }
}

fn purity(pos: f64, neg: f64) -> f64 {
    if pos + neg > 0.0 {
        (pos - neg).abs() / (pos + neg)
    } else {
        0.0
    }
}

/// Exhaustive stump search: every feature, every midpoint between distinct
/// sorted values, both polarities, each candidate's error re-summed over all
/// rows. Earlier candidates win ties (feature, then threshold, then left=+1);
/// errors within 1e-10 of the total weight count as tied.
pub fn ref_stump(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> (RefStump, f64) {
    let d = rows[0].len();
    let tol = 1e-10 * w.iter().sum::<f64>();
    let mut best: Option<(RefStump, f64)> = None;
    for f in 0..d {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for pair in vals.windows(2) {
            let t = (pair[0] + pair[1]) / 2.0;
            for left in [1.0, -1.0] {
                let mut err = 0.0;
                let (mut lp, mut ln, mut rp, mut rn) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..rows.len() {
                    let goes_left = rows[i][f] <= t;
                    let pred = if goes_left { left } else { -left };
                    if pred != y[i] {
                        err += w[i];
                    }
                    match (goes_left, y[i] > 0.0) {
                        (true, true) => lp += w[i],
                        (true, false) => ln += w[i],
                        (false, true) => rp += w[i],
                        (false, false) => rn += w[i],
                    }
                }
                if best.as_ref().is_none_or(|(_, e)| err < *e - tol) {
                    best = Some((
                        RefStump {
                            constant: false,
                            feature: f,
                            threshold: t,
                            left,
                            left_conf: purity(lp, ln),
                            right_conf: purity(rp, rn),
                        },
                        err,
                    ));
                }
            }
        }
    }
    let pos: f64 = (0..y.len()).filter(|&i| y[i] > 0.0).map(|i| w[i]).sum();
    let neg: f64 = (0..y.len()).filter(|&i| y[i] < 0.0).map(|i| w[i]).sum();
    let constant_err = pos.min(neg);
    match best {
        Some((s, e)) if constant_err >= e - tol => (s, e),
        _ => (
            RefStump {
                constant: true,
                feature: 0,
                threshold: f64::INFINITY,
                left: if pos >= neg { 1.0 } else { -1.0 },
                left_conf: purity(pos, neg),
                right_conf: 0.0,
            },
            constant_err,
        ),
    }
}

/// Signed gaps (non-protected minus protected) of FNR and FPR, recounted
/// per instance.
pub fn ref_gaps(pred: &[f64], y: &[f64], prot: &[bool]) -> (f64, f64) {
    let rate = |want_pos: bool, want_prot: bool| {
        let (mut wrong, mut total) = (0.0, 0.0);
        for i in 0..y.len() {
            if (y[i] > 0.0) == want_pos && prot[i] == want_prot {
                total += 1.0;
                if pred[i] != y[i] {
                    wrong += 1.0;
                }
            }
        }
        wrong / total
    };
    (rate(true, false) - rate(true, true), rate(false, false) - rate(false, true))
}

/// The five cases of the cost rule, written as separate branches. The gaps
/// passed in are protected minus non-protected.
#[allow(clippy::if_same_then_else)]
pub fn ref_cost(d_fnr: f64, d_fpr: f64, eps: f64, miss: bool, prot: bool, pos: bool) -> f64 {
    if miss && prot && pos && d_fnr > 0.0 && d_fnr.abs() > eps {
        d_fnr.abs()
    } else if miss && !prot && pos && d_fnr < 0.0 && d_fnr.abs() > eps {
        d_fnr.abs()
    } else if miss && prot && !pos && d_fpr > 0.0 && d_fpr.abs() > eps {
        d_fpr.abs()
    } else if miss && !prot && !pos && d_fpr < 0.0 && d_fpr.abs() > eps {
        d_fpr.abs()
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefVariant {
    AdaFair,
    NoCumul,
    NoConf,
    ConfOnly,
    Vanilla,
}

#[derive(Clone, Debug)]
pub struct RefRound {
    pub stump: RefStump,
    pub err: f64,
    pub alpha: f64,
    pub u: Vec<f64>,
    /// Weights after the update.
    pub w: Vec<f64>,
    pub d_fnr: f64,
    pub d_fpr: f64,
}

/// Step-by-step transcription of the training loop on dense data.
pub fn ref_train(
    rows: &[Vec<f64>],
    y: &[f64],
    prot: &[bool],
    variant: RefVariant,
    rounds: usize,
    eps: f64,
    fairness_stop: bool,
) -> Vec<RefRound> {
    let n = rows.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut out: Vec<RefRound> = Vec::new();
    for _ in 0..rounds {
        let (stump, _) = ref_stump(rows, y, &w);
        let preds: Vec<(f64, f64)> = rows.iter().map(|r| stump.predict(r)).collect();
        let total: f64 = w.iter().sum();
        let err: f64 = (0..n).filter(|&i| preds[i].0 != y[i]).map(|i| w[i]).sum::<f64>() / total;
        if (err - 0.5).abs() < 1e-7 || err > 0.5 {
            break;
        }
        let e = err.clamp(1e-10, 1.0 - 1e-10);
        let alpha = 0.5 * ((1.0 - e) / e).ln();

        // Ensemble prediction from scratch over all accepted rounds.
        let ens: Vec<f64> = (0..n)
            .map(|i| {
                let s: f64 = out.iter().map(|r| r.alpha * r.stump.predict(&rows[i]).0).sum::<f64>()
                    + alpha * preds[i].0;
                if s >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let own: Vec<f64> = preds.iter().map(|p| p.0).collect();
        let (d_fnr, d_fpr) = match variant {
            RefVariant::NoCumul => ref_gaps(&own, y, prot),
            _ => ref_gaps(&ens, y, prot),
        };
        let fair = matches!(variant, RefVariant::AdaFair | RefVariant::NoCumul | RefVariant::NoConf);
        let u: Vec<f64> = (0..n)
            .map(|i| {
                if fair {
                    ref_cost(-d_fnr, -d_fpr, eps, preds[i].0 != y[i], prot[i], y[i] > 0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let conf = matches!(variant, RefVariant::AdaFair | RefVariant::NoCumul | RefVariant::ConfOnly);
        let mut next: Vec<f64> = (0..n)
            .map(|i| {
                let miss = if preds[i].0 != y[i] { 1.0 } else { 0.0 };
                let h = if conf { preds[i].1 } else { 1.0 };
                w[i] * (alpha * h * miss).exp() * (1.0 + u[i])
            })
            .collect();
        let z: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= z);
        w = next.clone();

        let (e_fnr, e_fpr) = ref_gaps(&ens, y, prot);
        let eq_odds = e_fnr.abs() + e_fpr.abs();
        let ber = {
            let rate = |c: f64| {
                let idx: Vec<usize> = (0..n).filter(|&i| y[i] == c).collect();
                idx.iter().filter(|&&i| ens[i] != y[i]).count() as f64 / idx.len() as f64
            };
            0.5 * (rate(1.0) + rate(-1.0))
        };
        out.push(RefRound {
            stump,
            err,
            alpha,
            u,
            w: next,
            d_fnr,
            d_fpr,
        });
        if fair && fairness_stop && eq_odds <= eps && ber < 0.5 {
            break;
        }
    }
    out
}

/// Random dense dataset with all four group/class cells populated.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, levels: u32) -> (Vec<Vec<f64>>, Vec<Label>, Vec<Group>) {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(0..levels) as f64).collect())
            .collect();
        let labels: Vec<Label> = (0..n)
            .map(|_| if rng.random_bool(0.4) { Label::Pos } else { Label::Neg })
            .collect();
        let groups: Vec<Group> = (0..n)
            .map(|_| if rng.random_bool(0.4) { Group::Prot } else { Group::NonProt })
            .collect();
        if Dataset::from_rows(&rows, labels.clone(), groups.clone()).is_ok() {
            return (rows, labels, groups);
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The six-instance set whose first round misclassifies exactly the
/// protected positive.
pub fn hand_dataset() -> (Vec<Vec<f64>>, Vec<Label>, Vec<Group>) {
    use Group::{NonProt as N, Prot as P};
    use Label::{Neg, Pos};
    let rows = vec![
        vec![1.0, 0.0],
        vec![2.0, 0.0],
        vec![3.0, 1.0],
        vec![4.0, 1.0],
        vec![5.0, 0.0],
        vec![6.0, 1.0],
    ];
    let labels = vec![Neg, Pos, Neg, Neg, Pos, Pos];
    let groups = vec![N, P, P, N, N, N];
    (rows, labels, groups)
}
