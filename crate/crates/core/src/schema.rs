//! Declarative description of how a delimited file maps onto a [`Dataset`].
//!
//! Schemas are written as TOML:
//!
//! ```toml
//! label = "income"
//! positive = ">50K"
//! sensitive = "sex"
//! protected = "Female"
//! missing = "drop"          # or "error"
//! missing_markers = ["?"]
//! dedup = true
//! include_sensitive = true
//!
//! [[features]]
//! name = "age"
//! kind = "numeric"
//!
//! [[features]]
//! name = "workclass"
//! kind = "categorical"
//!
//! [[filters]]               # optional row filters, applied before encoding
//! column = "race"
//! one_of = ["African-American", "Caucasian"]
//! ```
//!
//! [`Dataset`]: crate::Dataset

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl FeatureSpec {
    pub fn numeric(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn categorical(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    #[default]
    Drop,
    Error,
}

/// Keeps a row only if `column` satisfies every condition given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFilter {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_of: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub not_one_of: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl RowFilter {
    pub(crate) fn keeps(&self, raw: &str) -> bool {
        if let Some(allowed) = &self.one_of {
            if !allowed.iter().any(|a| a == raw) {
                return false;
            }
        }
        if let Some(banned) = &self.not_one_of {
            if banned.iter().any(|b| b == raw) {
                return false;
            }
        }
        if self.min.is_some() || self.max.is_some() {
            let Ok(v) = raw.parse::<f64>() else {
                return false;
            };
            if self.min.is_some_and(|m| v < m) || self.max.is_some_and(|m| v > m) {
                return false;
            }
        }
        true
    }
}

fn default_markers() -> Vec<String> {
    vec!["?".to_string(), String::new()]
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub features: Vec<FeatureSpec>,
    pub label: String,
    pub positive: String,
    pub sensitive: String,
    pub protected: String,
    #[serde(default)]
    pub missing: MissingPolicy,
    /// Raw cell values treated as missing.
    #[serde(default = "default_markers")]
    pub missing_markers: Vec<String>,
    #[serde(default)]
    pub dedup: bool,
    /// Whether the sensitive column is also encoded as a feature.
    #[serde(default = "default_true")]
    pub include_sensitive: bool,
    #[serde(default)]
    pub filters: Vec<RowFilter>,
}

impl DatasetSchema {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: DatasetSchema =
            toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.label == self.sensitive {
            return Err(Error::Schema(format!(
                "label and sensitive column are both `{}`",
                self.label
            )));
        }
        if self.positive.is_empty() {
            return Err(Error::Schema("positive label value is empty".into()));
        }
        if self.protected.is_empty() {
            return Err(Error::Schema("protected value is empty".into()));
        }
        if self.features.iter().any(|f| f.name == self.label) {
            return Err(Error::Schema(format!(
                "label column `{}` is listed as a feature",
                self.label
            )));
        }
        for (i, f) in self.features.iter().enumerate() {
            if self.features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Schema(format!("feature `{}` listed twice", f.name)));
            }
        }
        if self.include_sensitive && !self.features.iter().any(|f| f.name == self.sensitive) {
            return Err(Error::Schema(format!(
                "include_sensitive is set but `{}` is not among the features",
                self.sensitive
            )));
        }
        if self.features.is_empty() {
            return Err(Error::Schema("no feature columns".into()));
        }
        Ok(())
    }

    /// Feature columns that end up in the encoded matrix.
    pub fn encoded_features(&self) -> impl Iterator<Item = &FeatureSpec> {
        self.features
            .iter()
            .filter(move |f| self.include_sensitive || f.name != self.sensitive)
    }
}

/// Schemas for the four benchmark datasets, expecting the CSV files produced
/// by `scripts/prepare_data.py`.
pub fn builtin_schema(name: &str) -> Result<DatasetSchema> {
    use FeatureSpec as F;
    let schema = match name {
        "adult" => DatasetSchema {
            features: vec![
                F::numeric("age"),
                F::categorical("workclass"),
                F::numeric("fnlwgt"),
                F::categorical("education"),
                F::numeric("education-num"),
                F::categorical("marital-status"),
                F::categorical("occupation"),
                F::categorical("relationship"),
                F::categorical("race"),
                F::categorical("sex"),
                F::numeric("capital-gain"),
                F::numeric("capital-loss"),
                F::numeric("hours-per-week"),
                F::categorical("native-country"),
            ],
            label: "income".into(),
            positive: ">50K".into(),
            sensitive: "sex".into(),
            protected: "Female".into(),
            missing: MissingPolicy::Drop,
            missing_markers: default_markers(),
            dedup: true,
            include_sensitive: true,
            filters: vec![],
        },
        // UCI bank-full.csv (semicolon separated, 16 attributes).
        "bank" => DatasetSchema {
            features: vec![
                F::numeric("age"),
                F::categorical("job"),
                F::categorical("marital"),
                F::categorical("education"),
                F::categorical("default"),
                F::numeric("balance"),
                F::categorical("housing"),
                F::categorical("loan"),
                F::categorical("contact"),
                F::numeric("day"),
                F::categorical("month"),
                F::numeric("duration"),
                F::numeric("campaign"),
                F::numeric("pdays"),
                F::numeric("previous"),
                F::categorical("poutcome"),
            ],
            label: "y".into(),
            positive: "yes".into(),
            sensitive: "marital".into(),
            protected: "married".into(),
            missing: MissingPolicy::Drop,
            missing_markers: default_markers(),
            dedup: true,
            include_sensitive: true,
            filters: vec![],
        },
        // ProPublica two-year recidivism file with the commonly used
        // screening filters and restriction to the two largest race groups.
        "compass" | "compas" => DatasetSchema {
            features: vec![
                F::categorical("age_cat"),
                F::categorical("race"),
                F::categorical("sex"),
                F::numeric("priors_count"),
                F::categorical("c_charge_degree"),
            ],
            label: "two_year_recid".into(),
            positive: "1".into(),
            sensitive: "sex".into(),
            protected: "Female".into(),
            missing: MissingPolicy::Drop,
            missing_markers: vec![String::new()],
            dedup: false,
            include_sensitive: true,
            filters: vec![
                RowFilter {
                    column: "days_b_screening_arrest".into(),
                    min: Some(-30.0),
                    max: Some(30.0),
                    ..Default::default()
                },
                RowFilter {
                    column: "is_recid".into(),
                    not_one_of: Some(vec!["-1".into()]),
                    ..Default::default()
                },
                RowFilter {
                    column: "c_charge_degree".into(),
                    not_one_of: Some(vec!["O".into()]),
                    ..Default::default()
                },
                RowFilter {
                    column: "score_text".into(),
                    not_one_of: Some(vec!["N/A".into()]),
                    ..Default::default()
                },
                RowFilter {
                    column: "race".into(),
                    one_of: Some(vec!["African-American".into(), "Caucasian".into()]),
                    ..Default::default()
                },
            ],
        },
        // KDD census income (census-income.data + .test). "?" is a regular
        // category here ("not applicable" for the migration fields), so no
        // markers and no row removal.
        "kdd" => DatasetSchema {
            features: vec![
                F::numeric("age"),
                F::categorical("class-of-worker"),
                F::categorical("industry-recode"),
                F::categorical("occupation-recode"),
                F::categorical("education"),
                F::numeric("wage-per-hour"),
                F::categorical("enroll-in-edu-inst"),
                F::categorical("marital-status"),
                F::categorical("major-industry"),
                F::categorical("major-occupation"),
                F::categorical("race"),
                F::categorical("hispanic-origin"),
                F::categorical("sex"),
                F::categorical("union-member"),
                F::categorical("unemployment-reason"),
                F::categorical("employment-status"),
                F::numeric("capital-gains"),
                F::numeric("capital-losses"),
                F::numeric("stock-dividends"),
                F::categorical("tax-filer-status"),
                F::categorical("previous-region"),
                F::categorical("previous-state"),
                F::categorical("household-family-status"),
                F::categorical("household-summary"),
                F::numeric("instance-weight"),
                F::categorical("migration-msa"),
                F::categorical("migration-reg"),
                F::categorical("migration-within-reg"),
                F::categorical("same-house-1yr"),
                F::categorical("migration-sunbelt"),
                F::numeric("num-persons-worked-for-employer"),
                F::categorical("family-members-under-18"),
                F::categorical("father-birth-country"),
                F::categorical("mother-birth-country"),
                F::categorical("birth-country"),
                F::categorical("citizenship"),
                F::categorical("own-business"),
                F::categorical("veterans-questionnaire"),
                F::categorical("veterans-benefits"),
                F::numeric("weeks-worked"),
                F::categorical("year"),
            ],
            label: "income".into(),
            positive: "50000+.".into(),
            sensitive: "sex".into(),
            protected: "Female".into(),
            missing: MissingPolicy::Drop,
            missing_markers: vec![],
            dedup: false,
            include_sensitive: true,
            filters: vec![],
        },
        other => return Err(Error::UnknownDataset(other.to_string())),
    };
    schema.validate()?;
    Ok(schema)
}
