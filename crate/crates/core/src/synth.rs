//! Synthetic group-biased data for tests and the browser demo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix, Group, Label};
use crate::error::Result;

/// Parameters of a two-group, imbalanced generator.
///
/// Features: two label-informative columns whose signal is weaker for the
/// protected group, a proxy column correlated with the group, and
/// `noise_features` pure-noise columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub protected_share: f64,
    pub pos_rate_prot: f64,
    pub pos_rate_nonprot: f64,
    /// Mean shift between classes in the informative columns.
    pub signal: f64,
    /// Fraction of the signal the protected group keeps (1 = no bias).
    pub protected_signal: f64,
    pub noise_features: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            protected_share: 0.4,
            pos_rate_prot: 0.15,
            pos_rate_nonprot: 0.35,
            signal: 1.5,
            protected_signal: 0.5,
            noise_features: 2,
            seed: 7,
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = move |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let mut rows = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    let mut groups = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let group = if rng.random_bool(cfg.protected_share.clamp(0.0, 1.0)) {
            Group::Prot
        } else {
            Group::NonProt
        };
        let rate = match group {
            Group::Prot => cfg.pos_rate_prot,
            Group::NonProt => cfg.pos_rate_nonprot,
        };
        let label = if rng.random_bool(rate.clamp(0.0, 1.0)) {
            Label::Pos
        } else {
            Label::Neg
        };
        let strength = match group {
            Group::Prot => cfg.signal * cfg.protected_signal,
            Group::NonProt => cfg.signal,
        };
        let shift = if label.is_pos() { strength } else { 0.0 };
        let mut row = vec![
            shift + normal(&mut rng),
            0.7 * shift + normal(&mut rng),
            if group == Group::Prot { 1.0 } else { 0.0 } + 0.5 * normal(&mut rng),
        ];
        row.extend((0..cfg.noise_features).map(|_| normal(&mut rng)));
        rows.push(row);
        labels.push(label);
        groups.push(group);
    }
    Dataset::new(FeatureMatrix::from_rows(&rows)?, labels, groups)
}

/// Group-symmetric copy: every row appears once as protected and once as
/// non-protected with identical features, so any classifier has equal
/// group error rates.
pub fn mirrored(rows: &[Vec<f64>], labels: &[Label]) -> Result<Dataset> {
    let mut all_rows = Vec::with_capacity(rows.len() * 2);
    let mut all_labels = Vec::with_capacity(rows.len() * 2);
    let mut groups = Vec::with_capacity(rows.len() * 2);
    for group in [Group::Prot, Group::NonProt] {
        all_rows.extend_from_slice(rows);
        all_labels.extend_from_slice(labels);
        groups.extend(std::iter::repeat_n(group, rows.len()));
    }
    Dataset::from_rows(&all_rows, all_labels, groups)
}
