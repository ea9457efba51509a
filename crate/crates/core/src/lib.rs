//! Fairness-aware boosting.
//!
//! [`boosting::train`] runs AdaFair (cumulative equalized-odds costs plus
//! confidence-weighted reweighting) or one of its ablations,
//! [`selection::select_theta`] picks the ensemble length, and
//! [`harness`] drives repeated-split experiments over the benchmark datasets.

pub mod boosting;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod schema;
pub mod selection;
pub mod smote;
pub mod stump;
pub mod synth;

pub use boosting::{train, EnsembleModel, Trace, TrainConfig, Variant};
pub use dataset::{load_csv, random_split, Cell, Dataset, FeatureMatrix, Group, Label, SplitPair};
pub use error::{Error, Result};
pub use metrics::{fairness_report, FairnessReport, GroupConfusion};
pub use schema::{builtin_schema, DatasetSchema};
pub use selection::{select_theta, ThetaSearchResult};
pub use smote::{train_smoteboost, SmoteConfig};
