//! Choosing how many of the trained learners to keep.

use serde::{Deserialize, Serialize};

use crate::boosting::EnsembleModel;
use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::metrics::{confusion, delta_rates, error_rates};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixPoint {
    pub theta: usize,
    pub er: f64,
    pub ber: f64,
    pub eq_odds: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSearchResult {
    pub theta: usize,
    pub objective: f64,
    pub curve: Vec<PrefixPoint>,
}

impl ThetaSearchResult {
    pub const CSV_HEADER: &'static str = "theta,er,ber,eq_odds,objective";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.curve {
            out.push_str(&format!("{},{},{},{},{}\n", p.theta, p.er, p.ber, p.eq_odds, p.objective));
        }
        out
    }
}

/// c·BER + (1 − c)·ER + Eq.Odds.
pub fn objective(c: f64, er: f64, ber: f64, eq_odds: f64) -> f64 {
    c * ber + (1.0 - c) * er + eq_odds
}

/// Scores every prefix H_{1:θ} on `ds` and returns the θ minimizing
/// [`objective`]; the smallest θ wins ties. Prefix scores are accumulated
/// incrementally, one learner at a time.
pub fn select_theta(model: &EnsembleModel, ds: &Dataset, c: f64) -> Result<ThetaSearchResult> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Config(format!("c = {c} outside [0, 1]")));
    }
    let learners = model.learners();
    if learners.is_empty() {
        return Err(Error::NoUsableLearner("model has no learners".into()));
    }
    let mut scores = vec![0.0; ds.len()];
    let mut curve = Vec::with_capacity(learners.len());
    for (k, l) in learners.iter().enumerate() {
        let (pred, _) = l.stump.predict_matrix(ds.features());
        for (s, p) in scores.iter_mut().zip(&pred) {
            *s += l.alpha * p.sign();
        }
        let votes: Vec<Label> = scores.iter().map(|&s| Label::from_sign(s)).collect();
        let conf = confusion(ds.labels(), &votes, ds.groups())?;
        let rates = error_rates(&conf)?;
        let ber = rates.ber()?;
        let eq_odds = delta_rates(&conf)?.eq_odds();
        curve.push(PrefixPoint {
            theta: k + 1,
            er: rates.er,
            ber,
            eq_odds,
            objective: objective(c, rates.er, ber, eq_odds),
        });
    }
    let best = curve
        .iter()
        .fold(None::<&PrefixPoint>, |best, p| match best {
            Some(b) if b.objective <= p.objective => Some(b),
            _ => Some(p),
        })
        .expect("curve is non-empty");
    Ok(ThetaSearchResult {
        theta: best.theta,
        objective: best.objective,
        curve,
    })
}
