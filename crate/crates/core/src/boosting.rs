//! The boosting engine: AdaFair, its ablations and plain AdaBoost.
//!
//! Every variant runs the same loop. Per round `j` the engine fits a stump
//! `h_j` on the current weights, computes its weighted error and
//! `α_j = ½ ln((1 − err_j)/err_j)`, folds `α_j h_j` into the running ensemble
//! score, measures the group rate gaps, assigns fairness costs `u` and
//! reweights
//!
//! ```text
//! w_i ← w_i · exp(α_j · ĥ_j(x_i) · I[y_i ≠ h_j(x_i)]) · (1 + u_i) / Z_j
//! ```
//!
//! where `ĥ_j` is the stump's leaf confidence. The variants differ in which
//! rate gaps drive the costs and whether `ĥ` is used:
//!
//! | variant    | costs from              | ĥ          |
//! |------------|-------------------------|------------|
//! | AdaFair    | ensemble `H_{1:j}`      | confidence |
//! | NoCumul    | current learner `h_j`   | confidence |
//! | NoConf     | ensemble `H_{1:j}`      | 1          |
//! | ConfOnly   | none                    | confidence |
//! | Vanilla    | none                    | 1          |

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Dataset, FeatureMatrix, Group, Label};
use crate::error::{Error, Result};
use crate::metrics::{confusion, delta_rates, error_rates, RateGaps};
use crate::stump::{weighted_error, DecisionStump, StumpFitter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    AdaFair,
    NoCumul,
    NoConf,
    /// Confidence-weighted boosting without fairness costs.
    ConfOnly,
    Vanilla,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FairnessSource {
    Ensemble,
    CurrentLearner,
    None,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::AdaFair,
        Variant::NoCumul,
        Variant::NoConf,
        Variant::ConfOnly,
        Variant::Vanilla,
    ];

    pub fn fairness_source(self) -> FairnessSource {
        match self {
            Variant::AdaFair | Variant::NoConf => FairnessSource::Ensemble,
            Variant::NoCumul => FairnessSource::CurrentLearner,
            Variant::ConfOnly | Variant::Vanilla => FairnessSource::None,
        }
    }

    pub fn uses_confidence(self) -> bool {
        matches!(self, Variant::AdaFair | Variant::NoCumul | Variant::ConfOnly)
    }

    pub fn is_fairness_aware(self) -> bool {
        self.fairness_source() != FairnessSource::None
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::AdaFair => "adafair",
            Variant::NoCumul => "nocumul",
            Variant::NoConf => "noconf",
            Variant::ConfOnly => "confonly",
            Variant::Vanilla => "vanilla",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Maximum number of boosting rounds T.
    pub rounds: usize,
    /// Fairness tolerance ε.
    pub epsilon: f64,
    pub variant: Variant,
    /// Balanced-error weight in the θ objective.
    pub c: f64,
    pub seed: u64,
    /// Stop once the ensemble's Eq.Odds ≤ ε while its BER < 0.5
    /// (fairness-aware variants only).
    #[serde(default = "yes")]
    pub fairness_stop: bool,
}

fn yes() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rounds: 200,
            epsilon: 0.0,
            variant: Variant::AdaFair,
            c: 1.0,
            seed: 0,
            fairness_stop: true,
        }
    }
}

impl TrainConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config("epsilon must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::Config("c must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Why training stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Convergence {
    /// The round's learner had error 0.5; it was discarded.
    ChanceLevelError { round: usize },
    /// Ensemble Eq.Odds reached ε with better-than-chance balanced error.
    FairnessReached { round: usize },
    MaxRounds,
}

/// |err − 0.5| below this counts as chance level.
pub const CHANCE_TOLERANCE: f64 = 1e-7;
/// err is clamped to [ERROR_CLIP, 1 − ERROR_CLIP] before computing α.
pub const ERROR_CLIP: f64 = 1e-10;

pub(crate) fn is_chance_level(err: f64) -> bool {
    (err - 0.5).abs() < CHANCE_TOLERANCE || err > 0.5
}

pub fn learner_weight(err: f64) -> f64 {
    let e = err.clamp(ERROR_CLIP, 1.0 - ERROR_CLIP);
    0.5 * ((1.0 - e) / e).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakLearner {
    pub stump: DecisionStump,
    pub alpha: f64,
}

/// Per-round record, also written as one CSV row.
///
/// `delta_fnr`/`delta_fpr` are the gaps that drove the round's costs
/// (ensemble gaps for AdaFair/NoConf, the round learner's gaps for NoCumul);
/// the variants without costs record the ensemble gaps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub err: f64,
    pub alpha: f64,
    pub delta_fnr: f64,
    pub delta_fpr: f64,
    pub eq_odds: f64,
    /// Cost given to the disadvantaged positive cell (0 if none).
    pub u_pos: f64,
    pub u_neg: f64,
    pub ensemble_eq_odds: f64,
    pub ensemble_ber: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rounds: Vec<RoundRecord>,
    pub convergence: Convergence,
}

impl Trace {
    pub const CSV_HEADER: &'static str = "round,err,alpha,delta_fnr,delta_fpr,eq_odds,u_pos,u_neg";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rounds {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.round, r.err, r.alpha, r.delta_fnr, r.delta_fpr, r.eq_odds, r.u_pos, r.u_neg
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smote: Option<crate::smote::SmoteConfig>,
    pub dataset_hash: String,
    pub convergence: Convergence,
}

pub const MODEL_FORMAT: &str = "fairboost-ensemble";
pub const MODEL_VERSION: u32 = 1;

/// Ordered (stump, α) pairs; only the first `theta` vote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    format: String,
    version: u32,
    theta: usize,
    learners: Vec<WeakLearner>,
    meta: ModelMeta,
}

impl EnsembleModel {
    pub fn new(learners: Vec<WeakLearner>, meta: ModelMeta) -> Result<Self> {
        let model = Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            theta: learners.len(),
            learners,
            meta,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(Error::DegenerateModel(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        if self.learners.is_empty() {
            return Err(Error::NoUsableLearner("ensemble is empty".into()));
        }
        if self.theta == 0 || self.theta > self.learners.len() {
            return Err(Error::DegenerateModel(format!(
                "theta {} outside 1..={}",
                self.theta,
                self.learners.len()
            )));
        }
        if let Some(l) = self.learners.iter().find(|l| !(l.alpha > 0.0 && l.alpha.is_finite())) {
            return Err(Error::DegenerateModel(format!("learner weight {} is not positive", l.alpha)));
        }
        Ok(())
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn set_theta(&mut self, theta: usize) -> Result<()> {
        if theta == 0 || theta > self.learners.len() {
            return Err(Error::Config(format!(
                "theta {theta} outside 1..={}",
                self.learners.len()
            )));
        }
        self.theta = theta;
        Ok(())
    }

    /// All trained learners, including those past θ.
    pub fn learners(&self) -> &[WeakLearner] {
        &self.learners
    }

    /// The learners that vote: the first θ.
    pub fn active(&self) -> &[WeakLearner] {
        &self.learners[..self.theta]
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    /// Σ_{j ≤ upto} α_j h_j(x) for every row.
    pub fn scores(&self, fm: &FeatureMatrix, upto: usize) -> Vec<f64> {
        let mut scores = vec![0.0; fm.n_rows()];
        for l in &self.learners[..upto.min(self.learners.len())] {
            let (labels, _) = l.stump.predict_matrix(fm);
            for (s, y) in scores.iter_mut().zip(labels) {
                *s += l.alpha * y.sign();
            }
        }
        scores
    }

    /// Sign of the θ-prefix vote; an exact tie is positive.
    pub fn predict(&self, fm: &FeatureMatrix) -> Vec<Label> {
        self.scores(fm, self.theta)
            .into_iter()
            .map(Label::from_sign)
            .collect()
    }

    pub fn predict_one(&self, x: &[f64]) -> Label {
        let score: f64 = self
            .active()
            .iter()
            .map(|l| l.alpha * l.stump.predict(x).0.sign())
            .sum();
        Label::from_sign(score)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: EnsembleModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

/// Single-instance convenience over [`EnsembleModel::predict_one`].
pub fn predict_ensemble(model: &EnsembleModel, x: &[f64]) -> Label {
    model.predict_one(x)
}

/// Rate gaps of the sign of `scores` (tie → positive), counted per cell
/// without instance weights.
pub fn cumulative_fairness(scores: &[f64], ds: &Dataset) -> Result<RateGaps> {
    let pred: Vec<Label> = scores.iter().map(|&s| Label::from_sign(s)).collect();
    delta_rates(&confusion(ds.labels(), &pred, ds.groups())?)
}

/// Fairness costs for one round.
///
/// `disadvantage` is oriented protected-minus-non-protected: a positive
/// `fnr` means the protected positives have the higher miss rate, so
/// misclassified s+ instances receive |fnr|; a negative one sends the cost
/// to misclassified s̄+ instances. The negative class is handled the same
/// way with `fpr`. Only gaps with magnitude above `epsilon` produce costs,
/// and correctly classified instances never do. Pass the negation of
/// [`delta_rates`] (which is non-protected minus protected).
pub fn fairness_costs(
    disadvantage: RateGaps,
    misclassified: &[bool],
    groups: &[Group],
    labels: &[Label],
    epsilon: f64,
) -> Vec<f64> {
    let RateGaps { fpr, fnr } = disadvantage;
    let fnr_on = fnr.abs() > epsilon;
    let fpr_on = fpr.abs() > epsilon;
    misclassified
        .iter()
        .zip(groups)
        .zip(labels)
        .map(|((&miss, &g), &y)| {
            if !miss {
                return 0.0;
            }
            match Cell::of(g, y) {
                Cell::ProtPos if fnr_on && fnr > 0.0 => fnr.abs(),
                Cell::NonProtPos if fnr_on && fnr < 0.0 => fnr.abs(),
                Cell::ProtNeg if fpr_on && fpr > 0.0 => fpr.abs(),
                Cell::NonProtNeg if fpr_on && fpr < 0.0 => fpr.abs(),
                _ => 0.0,
            }
        })
        .collect()
}

/// State exposed to observers after each accepted round.
pub struct RoundSnapshot<'a> {
    pub round: usize,
    pub stump: &'a DecisionStump,
    pub predictions: &'a [Label],
    pub confidences: &'a [f64],
    pub err: f64,
    pub alpha: f64,
    pub costs: &'a [f64],
    /// Weights after the update and normalization.
    pub weights: &'a [f64],
    pub scores: &'a [f64],
}

/// Per-round bookkeeping shared by the AdaFair engine and SMOTEBoost.
pub(crate) struct RoundStats {
    pub ensemble_gaps: RateGaps,
    pub ensemble_ber: f64,
}

pub(crate) fn ensemble_stats(scores: &[f64], ds: &Dataset) -> Result<RoundStats> {
    let pred: Vec<Label> = scores.iter().map(|&s| Label::from_sign(s)).collect();
    let c = confusion(ds.labels(), &pred, ds.groups())?;
    Ok(RoundStats {
        ensemble_gaps: delta_rates(&c)?,
        ensemble_ber: error_rates(&c)?.ber()?,
    })
}

/// w_i ← w_i · exp(α · ĥ_i · I[miss_i]) · (1 + u_i), then normalize.
pub(crate) fn reweight(
    weights: &mut [f64],
    alpha: f64,
    confidences: Option<&[f64]>,
    misclassified: &[bool],
    costs: Option<&[f64]>,
) {
    for (i, w) in weights.iter_mut().enumerate() {
        if misclassified[i] {
            let h = confidences.map_or(1.0, |c| c[i]);
            *w *= (alpha * h).exp();
        }
        if let Some(u) = costs {
            *w *= 1.0 + u[i];
        }
    }
    let z: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= z;
    }
}

pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<(EnsembleModel, Trace)> {
    train_with_observer(ds, cfg, |_| {})
}

pub fn train_with_observer(
    ds: &Dataset,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&RoundSnapshot<'_>),
) -> Result<(EnsembleModel, Trace)> {
    cfg.validate()?;
    let n = ds.len();
    let labels = ds.labels();
    let groups = ds.groups();
    let fitter = StumpFitter::new(ds.features());
    let source = cfg.variant.fairness_source();
    let use_conf = cfg.variant.uses_confidence();

    let mut weights = vec![1.0 / n as f64; n];
    let mut scores = vec![0.0; n];
    let mut learners = Vec::new();
    let mut records = Vec::new();
    let mut convergence = Convergence::MaxRounds;

    for round in 1..=cfg.rounds {
        let stump = fitter.fit(&weights, labels)?;
        let (pred, conf) = stump.predict_matrix(ds.features());
        let miss: Vec<bool> = pred.iter().zip(labels).map(|(p, y)| p != y).collect();
        let err = weighted_error(&pred, labels, &weights);
        if is_chance_level(err) {
            convergence = Convergence::ChanceLevelError { round };
            break;
        }
        let alpha = learner_weight(err);
        for (s, p) in scores.iter_mut().zip(&pred) {
            *s += alpha * p.sign();
        }

        let stats = ensemble_stats(&scores, ds)?;
        let gaps = match source {
            FairnessSource::CurrentLearner => delta_rates(&confusion(labels, &pred, groups)?)?,
            FairnessSource::Ensemble | FairnessSource::None => stats.ensemble_gaps,
        };
        let costs = match source {
            FairnessSource::None => vec![0.0; n],
            _ => fairness_costs(
                RateGaps {
                    fpr: -gaps.fpr,
                    fnr: -gaps.fnr,
                },
                &miss,
                groups,
                labels,
                cfg.epsilon,
            ),
        };
        reweight(
            &mut weights,
            alpha,
            use_conf.then_some(conf.as_slice()),
            &miss,
            Some(&costs),
        );

        let record = RoundRecord {
            round,
            err,
            alpha,
            delta_fnr: gaps.fnr,
            delta_fpr: gaps.fpr,
            eq_odds: gaps.eq_odds(),
            u_pos: if source == FairnessSource::None { 0.0 } else { cost_level(gaps.fnr, cfg.epsilon) },
            u_neg: if source == FairnessSource::None { 0.0 } else { cost_level(gaps.fpr, cfg.epsilon) },
            ensemble_eq_odds: stats.ensemble_gaps.eq_odds(),
            ensemble_ber: stats.ensemble_ber,
        };
        records.push(record);
        observer(&RoundSnapshot {
            round,
            stump: &stump,
            predictions: &pred,
            confidences: &conf,
            err,
            alpha,
            costs: &costs,
            weights: &weights,
            scores: &scores,
        });
        learners.push(WeakLearner { stump, alpha });

        if source != FairnessSource::None
            && cfg.fairness_stop
            && record.ensemble_eq_odds <= cfg.epsilon
            && record.ensemble_ber < 0.5
        {
            convergence = Convergence::FairnessReached { round };
            break;
        }
    }

    if learners.is_empty() {
        return Err(Error::NoUsableLearner(
            "the first weak learner had weighted error 0.5".into(),
        ));
    }
    let meta = ModelMeta {
        config: cfg.clone(),
        smote: None,
        dataset_hash: ds.provenance().source_hash.clone(),
        convergence,
    };
    Ok((
        EnsembleModel::new(learners, meta)?,
        Trace {
            rounds: records,
            convergence,
        },
    ))
}

/// Cost handed to the disadvantaged cell of a class for a gap of this size.
fn cost_level(gap: f64, epsilon: f64) -> f64 {
    if gap.abs() > epsilon {
        gap.abs()
    } else {
        0.0
    }
}
