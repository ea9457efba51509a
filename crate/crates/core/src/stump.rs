//! Weighted decision stumps with per-leaf confidence.

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, FeatureMatrix, Label};
use crate::error::{Error, Result};

/// Threshold used by constant stumps: every finite value goes left.
pub const CONSTANT_THRESHOLD: f64 = f64::MAX;

/// One-feature threshold classifier. `x[feature] <= threshold` goes left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub feature: usize,
    pub threshold: f64,
    pub left_label: Label,
    pub right_label: Label,
    /// Weighted purity margin |2p̂ − 1| of each leaf at fit time.
    pub left_conf: f64,
    pub right_conf: f64,
    /// Set when no split beat the majority-class constant classifier.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl DecisionStump {
    pub fn constant(label: Label, conf: f64) -> Self {
        Self {
            feature: 0,
            threshold: CONSTANT_THRESHOLD,
            left_label: label,
            right_label: label.flip(),
            left_conf: conf,
            right_conf: 0.0,
            degenerate: true,
        }
    }

    pub fn predict_value(&self, v: f64) -> (Label, f64) {
        if self.degenerate || v <= self.threshold {
            (self.left_label, self.left_conf)
        } else {
            (self.right_label, self.right_conf)
        }
    }

    pub fn predict(&self, x: &[f64]) -> (Label, f64) {
        if self.degenerate {
            return (self.left_label, self.left_conf);
        }
        self.predict_value(x[self.feature])
    }

    /// Labels and confidences for every row of `fm`.
    pub fn predict_matrix(&self, fm: &FeatureMatrix) -> (Vec<Label>, Vec<f64>) {
        let n = fm.n_rows();
        if self.degenerate {
            return (vec![self.left_label; n], vec![self.left_conf; n]);
        }
        match fm.column(self.feature) {
            Column::Numeric(v) => v.iter().map(|&x| self.predict_value(x)).unzip(),
            Column::Indicator(rows) => {
                let (l0, c0) = self.predict_value(0.0);
                let (l1, c1) = self.predict_value(1.0);
                let mut labels = vec![l0; n];
                let mut conf = vec![c0; n];
                for &r in rows {
                    labels[r as usize] = l1;
                    conf[r as usize] = c1;
                }
                (labels, conf)
            }
        }
    }
}

/// A weighted row that is not part of the indexed matrix (SMOTE synthetics).
#[derive(Clone, Debug, PartialEq)]
pub struct ExtraRow {
    pub x: Vec<f64>,
    pub label: Label,
    pub weight: f64,
}

enum ColumnIndex<'a> {
    /// Distinct sorted values and each row's position among them.
    Ranked { values: Vec<f64>, ranks: Vec<u32> },
    Indicator(&'a [u32]),
}

/// Pre-sorted view of a feature matrix, built once and reused every round.
pub struct StumpFitter<'a> {
    n_rows: usize,
    index: Vec<ColumnIndex<'a>>,
}

#[derive(Clone, Copy, Debug)]
struct Mass {
    pos: f64,
    neg: f64,
}

impl Mass {
    const ZERO: Mass = Mass { pos: 0.0, neg: 0.0 };

    fn add(&mut self, label: Label, w: f64) {
        match label {
            Label::Pos => self.pos += w,
            Label::Neg => self.neg += w,
        }
    }

    fn confidence(self) -> f64 {
        // Masses derived by subtraction can dip just below zero.
        let (pos, neg) = (self.pos.max(0.0), self.neg.max(0.0));
        let total = pos + neg;
        if total > 0.0 {
            ((pos - neg) / total).abs().min(1.0)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    err: f64,
    threshold: f64,
    left_label: Label,
    left: Mass,
    right: Mass,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Errors closer than this fraction of the total mass count as tied, so
/// rounding in the running sums cannot overturn the tie-break order.
pub const TIE_TOLERANCE: f64 = 1e-10;

fn improves(err: f64, best: f64, total: Mass) -> bool {
    err < best - TIE_TOLERANCE * (total.pos + total.neg)
}

/// Best split over one column's value-sorted (value, mass) entries. Among
/// tied errors the lowest threshold wins, then (left = +1) before (left = −1).
fn scan(entries: &[(f64, Mass)], total: Mass) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    let mut left = Mass::ZERO;
    for k in 0..entries.len().saturating_sub(1) {
        left.pos += entries[k].1.pos;
        left.neg += entries[k].1.neg;
        let right = Mass {
            pos: total.pos - left.pos,
            neg: total.neg - left.neg,
        };
        let threshold = midpoint(entries[k].0, entries[k + 1].0);
        for (left_label, err) in [
            (Label::Pos, left.neg + right.pos),
            (Label::Neg, left.pos + right.neg),
        ] {
            if best.is_none_or(|b| improves(err, b.err, total)) {
                best = Some(Candidate {
                    err,
                    threshold,
                    left_label,
                    left,
                    right,
                });
            }
        }
    }
    best
}

/// Merges value-sorted extras into value-sorted entries, combining equal values.
fn merge_extras(entries: Vec<(f64, Mass)>, mut extras: Vec<(f64, Label, f64)>) -> Vec<(f64, Mass)> {
    if extras.is_empty() {
        return entries;
    }
    extras.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, Mass)> = Vec::with_capacity(entries.len() + extras.len());
    let mut push = |v: f64, m: Mass| match out.last_mut() {
        Some((last, acc)) if *last == v => {
            acc.pos += m.pos;
            acc.neg += m.neg;
        }
        _ => out.push((v, m)),
    };
    let mut extras = extras.into_iter().peekable();
    for (v, m) in entries {
        while let Some(&(ev, label, w)) = extras.peek() {
            if ev > v {
                break;
            }
            let mut em = Mass::ZERO;
            em.add(label, w);
            push(ev, em);
            extras.next();
        }
        push(v, m);
    }
    for (ev, label, w) in extras {
        let mut em = Mass::ZERO;
        em.add(label, w);
        push(ev, em);
    }
    out
}

impl<'a> StumpFitter<'a> {
    pub fn new(fm: &'a FeatureMatrix) -> Self {
        let index = fm
            .columns()
            .iter()
            .map(|col| match col {
                Column::Numeric(v) => {
                    let mut values = v.clone();
                    values.sort_by(f64::total_cmp);
                    values.dedup();
                    let ranks = v
                        .iter()
                        .map(|x| values.partition_point(|u| u < x) as u32)
                        .collect();
                    ColumnIndex::Ranked { values, ranks }
                }
                Column::Indicator(rows) => ColumnIndex::Indicator(rows),
            })
            .collect();
        Self {
            n_rows: fm.n_rows(),
            index,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn column_entries(&self, j: usize, weights: &[f64], labels: &[Label], total: Mass) -> Vec<(f64, Mass)> {
        match &self.index[j] {
            ColumnIndex::Ranked { values, ranks } => {
                let mut hist = vec![Mass::ZERO; values.len()];
                for ((&r, &w), &y) in ranks.iter().zip(weights).zip(labels) {
                    hist[r as usize].add(y, w);
                }
                values.iter().copied().zip(hist).collect()
            }
            ColumnIndex::Indicator(rows) => {
                let mut high = Mass::ZERO;
                for &r in rows.iter() {
                    high.add(labels[r as usize], weights[r as usize]);
                }
                let low = Mass {
                    pos: total.pos - high.pos,
                    neg: total.neg - high.neg,
                };
                let mut entries = Vec::with_capacity(2);
                if rows.len() < self.n_rows {
                    entries.push((0.0, low));
                }
                if !rows.is_empty() {
                    entries.push((1.0, high));
                }
                entries
            }
        }
    }

    fn best_in_column(
        &self,
        j: usize,
        weights: &[f64],
        labels: &[Label],
        extras: &[ExtraRow],
        base_total: Mass,
        total: Mass,
    ) -> Option<Candidate> {
        let entries = self.column_entries(j, weights, labels, base_total);
        let entries = merge_extras(
            entries,
            extras.iter().map(|e| (e.x[j], e.label, e.weight)).collect(),
        );
        scan(&entries, total)
    }

    /// Stump minimizing the weighted 0/1 error over every
    /// (feature, midpoint threshold, polarity), falling back to the
    /// majority-class constant only when it is strictly better.
    pub fn fit(&self, weights: &[f64], labels: &[Label]) -> Result<DecisionStump> {
        self.fit_with_extras(weights, labels, &[])
    }

    pub fn fit_with_extras(
        &self,
        weights: &[f64],
        labels: &[Label],
        extras: &[ExtraRow],
    ) -> Result<DecisionStump> {
        if weights.len() != self.n_rows || labels.len() != self.n_rows {
            return Err(Error::LengthMismatch(format!(
                "{} weights and {} labels for {} rows",
                weights.len(),
                labels.len(),
                self.n_rows
            )));
        }
        let d = self.index.len();
        if let Some(e) = extras.iter().find(|e| e.x.len() != d) {
            return Err(Error::LengthMismatch(format!(
                "extra row has {} features, expected {d}",
                e.x.len()
            )));
        }
        let all_weights = weights.iter().chain(extras.iter().map(|e| &e.weight));
        if all_weights.clone().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("weights must be finite and non-negative".into()));
        }
        let mut base_total = Mass::ZERO;
        for (&w, &y) in weights.iter().zip(labels) {
            base_total.add(y, w);
        }
        let mut total = base_total;
        for e in extras {
            total.add(e.label, e.weight);
        }
        if total.pos + total.neg <= 0.0 {
            return Err(Error::Config("total weight must be positive".into()));
        }

        let per_column: Vec<Option<Candidate>> = {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                (0..d)
                    .into_par_iter()
                    .map(|j| self.best_in_column(j, weights, labels, extras, base_total, total))
                    .collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..d)
                    .map(|j| self.best_in_column(j, weights, labels, extras, base_total, total))
                    .collect()
            }
        };
        // Sequential reduction in column order: ties go to the lowest feature.
        let mut best: Option<(usize, Candidate)> = None;
        for (j, cand) in per_column.into_iter().enumerate() {
            if let Some(c) = cand {
                if best.is_none_or(|(_, b)| improves(c.err, b.err, total)) {
                    best = Some((j, c));
                }
            }
        }

        let majority = if total.pos >= total.neg {
            Label::Pos
        } else {
            Label::Neg
        };
        let constant_err = total.pos.min(total.neg);
        match best {
            Some((feature, c)) if !improves(constant_err, c.err, total) => Ok(DecisionStump {
                feature,
                threshold: c.threshold,
                left_label: c.left_label,
                right_label: c.left_label.flip(),
                left_conf: c.left.confidence(),
                right_conf: c.right.confidence(),
                degenerate: false,
            }),
            _ => Ok(DecisionStump::constant(majority, total.confidence())),
        }
    }
}

/// One-shot convenience wrapper around [`StumpFitter`].
pub fn fit_stump(fm: &FeatureMatrix, labels: &[Label], weights: &[f64]) -> Result<DecisionStump> {
    StumpFitter::new(fm).fit(weights, labels)
}

/// Σ w·I(y ≠ h(x)) / Σ w, summed in row order.
pub fn weighted_error(predicted: &[Label], labels: &[Label], weights: &[f64]) -> f64 {
    let mut miss = 0.0;
    let mut total = 0.0;
    for ((p, y), w) in predicted.iter().zip(labels).zip(weights) {
        total += w;
        if p != y {
            miss += w;
        }
    }
    miss / total
}
