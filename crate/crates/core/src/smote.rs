//! SMOTE oversampling and the SMOTEBoost baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boosting::{
    ensemble_stats, is_chance_level, learner_weight, reweight, Convergence, EnsembleModel,
    ModelMeta, RoundRecord, Trace, TrainConfig, Variant, WeakLearner,
};
use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::stump::{weighted_error, ExtraRow, StumpFitter};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    /// Synthetic instances generated per boosting round.
    pub n: usize,
    /// Nearest minority neighbors to interpolate towards.
    pub k: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self { n: 0, k: 5, seed: 0 }
    }
}

impl SmoteConfig {
    /// Per-round synthetic counts used for the benchmark datasets.
    pub fn for_dataset(name: &str) -> Option<usize> {
        match name {
            "compass" | "compas" => Some(2),
            "adult" | "bank" => Some(100),
            "kdd" => Some(500),
            _ => None,
        }
    }
}

/// x_i + r·(x_nn − x_i).
pub fn interpolate(base: &[f64], neighbor: &[f64], r: f64) -> Vec<f64> {
    base.iter()
        .zip(neighbor)
        .map(|(&a, &b)| a + r * (b - a))
        .collect()
}

struct SparseRow {
    idx: Vec<u32>,
    val: Vec<f64>,
    norm2: f64,
}

/// Synthetic sample generator over a fixed minority set. Neighbor lists are
/// computed on first use and cached.
pub struct Smote {
    rows: Vec<Vec<f64>>,
    sparse: Vec<SparseRow>,
    k: usize,
    neighbors: Vec<Option<Vec<usize>>>,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
}

impl Smote {
    pub fn new(minority: Vec<Vec<f64>>, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("SMOTE needs k ≥ 1".into()));
        }
        if minority.len() <= k {
            return Err(Error::Config(format!(
                "SMOTE needs more than k = {k} minority instances, got {}",
                minority.len()
            )));
        }
        let d = minority[0].len();
        if minority.iter().any(|r| r.len() != d) {
            return Err(Error::LengthMismatch("ragged minority rows".into()));
        }
        let sparse = minority
            .iter()
            .map(|r| {
                let (idx, val): (Vec<u32>, Vec<f64>) = r
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, &v)| (j as u32, v))
                    .unzip();
                let norm2 = val.iter().map(|v| v * v).sum();
                SparseRow { idx, val, norm2 }
            })
            .collect();
        Ok(Self {
            neighbors: vec![None; minority.len()],
            rows: minority,
            sparse,
            k,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scratch: vec![0.0; d],
        })
    }

    /// The k nearest other rows by Euclidean distance, ties by index.
    pub fn neighbors(&mut self, i: usize) -> &[usize] {
        if self.neighbors[i].is_none() {
            let q = &self.sparse[i];
            for (&j, &v) in q.idx.iter().zip(&q.val) {
                self.scratch[j as usize] = v;
            }
            let mut dist: Vec<(f64, usize)> = self
                .sparse
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != i)
                .map(|(m, row)| {
                    let dot: f64 = row
                        .idx
                        .iter()
                        .zip(&row.val)
                        .map(|(&j, &v)| self.scratch[j as usize] * v)
                        .sum();
                    ((q.norm2 + row.norm2 - 2.0 * dot).max(0.0), m)
                })
                .collect();
            for &j in &q.idx {
                self.scratch[j as usize] = 0.0;
            }
            let k = self.k;
            dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut nearest: Vec<(f64, usize)> = dist[..k].to_vec();
            nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            self.neighbors[i] = Some(nearest.into_iter().map(|(_, m)| m).collect());
        }
        self.neighbors[i].as_deref().expect("filled above")
    }

    pub fn generate(&mut self, count: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let i = self.rng.random_range(0..self.rows.len());
            let pick = self.rng.random_range(0..self.k);
            let r: f64 = self.rng.random();
            let nn = self.neighbors(i)[pick];
            out.push(interpolate(&self.rows[i], &self.rows[nn], r));
        }
        out
    }
}

/// `cfg.n` synthetic rows interpolated between minority instances and their
/// nearest minority neighbors.
pub fn smote_generate(minority: &[Vec<f64>], cfg: &SmoteConfig) -> Result<Vec<Vec<f64>>> {
    Ok(Smote::new(minority.to_vec(), cfg.k, cfg.seed)?.generate(cfg.n))
}

/// AdaBoost with `smote.n` fresh minority synthetics mixed into every round's
/// stump fit. Synthetics get the current mean minority weight, the combined
/// weights are renormalized for fitting, and error, α and the reweighting
/// use the original instances only.
pub fn train_smoteboost(
    ds: &Dataset,
    rounds: usize,
    smote: &SmoteConfig,
) -> Result<(EnsembleModel, Trace)> {
    let cfg = TrainConfig {
        rounds,
        variant: Variant::Vanilla,
        seed: smote.seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let n = ds.len();
    let labels = ds.labels();
    let pos = labels.iter().filter(|y| y.is_pos()).count();
    let minority = if pos <= n - pos { Label::Pos } else { Label::Neg };
    let minority_idx: Vec<usize> = (0..n).filter(|&i| labels[i] == minority).collect();
    let mut sampler = if smote.n > 0 {
        let rows = minority_idx.iter().map(|&i| ds.features().row(i)).collect();
        Some(Smote::new(rows, smote.k, smote.seed)?)
    } else {
        None
    };

    let fitter = StumpFitter::new(ds.features());
    let mut weights = vec![1.0 / n as f64; n];
    let mut scores = vec![0.0; n];
    let mut learners = Vec::new();
    let mut records = Vec::new();
    let mut convergence = Convergence::MaxRounds;

    for round in 1..=rounds {
        let stump = match sampler.as_mut() {
            Some(sampler) => {
                let synthetic = sampler.generate(smote.n);
                let mean_w = minority_idx.iter().map(|&i| weights[i]).sum::<f64>()
                    / minority_idx.len() as f64;
                let z = 1.0 + synthetic.len() as f64 * mean_w;
                let scaled: Vec<f64> = weights.iter().map(|w| w / z).collect();
                let extras: Vec<ExtraRow> = synthetic
                    .into_iter()
                    .map(|x| ExtraRow {
                        x,
                        label: minority,
                        weight: mean_w / z,
                    })
                    .collect();
                fitter.fit_with_extras(&scaled, labels, &extras)?
            }
            None => fitter.fit(&weights, labels)?,
        };
        let (pred, _) = stump.predict_matrix(ds.features());
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
        reweight(&mut weights, alpha, None, &miss, None);
        records.push(RoundRecord {
            round,
            err,
            alpha,
            delta_fnr: stats.ensemble_gaps.fnr,
            delta_fpr: stats.ensemble_gaps.fpr,
            eq_odds: stats.ensemble_gaps.eq_odds(),
            u_pos: 0.0,
            u_neg: 0.0,
            ensemble_eq_odds: stats.ensemble_gaps.eq_odds(),
            ensemble_ber: stats.ensemble_ber,
        });
        learners.push(WeakLearner { stump, alpha });
    }
    if learners.is_empty() {
        return Err(Error::NoUsableLearner(
            "the first weak learner had weighted error 0.5".into(),
        ));
    }
    let meta = ModelMeta {
        config: cfg,
        // Without synthetics the run is plain AdaBoost and is recorded as such.
        smote: (smote.n > 0).then(|| smote.clone()),
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
