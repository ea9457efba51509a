//! Repeated random-split experiments and their on-disk reports.
//!
//! Output layout of one experiment directory:
//!
//! ```text
//! manifest.json               the ExperimentSpec that produced the run
//! splits/split_NN.json        one SplitResult per split
//! splits/split_NN_model.json  the evaluated model, θ applied
//! splits/split_NN_theta.csv   training-set prefix curve (only when θ is selected)
//! aggregate.json              per-split results plus mean and sample std
//! aggregate.csv               one row per split, then `mean` and `std` rows
//! timings.json                wall-clock seconds per split (not deterministic)
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::boosting::{train, Convergence, EnsembleModel, Trace, TrainConfig, Variant};
use crate::dataset::{load_csv, random_split, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{fairness_report, margins, FairnessReport, MarginCdf};
use crate::schema::{builtin_schema, DatasetSchema};
use crate::selection::select_theta;
use crate::smote::{train_smoteboost, SmoteConfig};

pub const BUILTIN_DATASETS: [&str; 4] = ["adult", "bank", "compass", "kdd"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    AdaFair,
    NoCumul,
    NoConf,
    ConfOnly,
    Vanilla,
    SmoteBoost,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::AdaFair,
        Method::NoCumul,
        Method::NoConf,
        Method::ConfOnly,
        Method::Vanilla,
        Method::SmoteBoost,
    ];

    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::AdaFair => Some(Variant::AdaFair),
            Method::NoCumul => Some(Variant::NoCumul),
            Method::NoConf => Some(Variant::NoConf),
            Method::ConfOnly => Some(Variant::ConfOnly),
            Method::Vanilla => Some(Variant::Vanilla),
            Method::SmoteBoost => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::SmoteBoost => "smoteboost",
            m => m.variant().expect("boosting variant").name(),
        }
    }

    /// The AdaFair family picks θ post-training; the baselines keep every round.
    pub fn selects_theta(self) -> bool {
        matches!(self, Method::AdaFair | Method::NoCumul | Method::NoConf)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Where the data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetRef {
    /// One of [`BUILTIN_DATASETS`], read from `<data_dir>/<name>.csv`.
    Builtin { name: String, data_dir: PathBuf },
    File { path: PathBuf, schema: PathBuf },
}

impl DatasetRef {
    /// `name_or_path` is a builtin name unless a schema file is given.
    pub fn parse(name_or_path: &str, schema: Option<&Path>, data_dir: &Path) -> Result<Self> {
        match schema {
            Some(schema) => Ok(DatasetRef::File {
                path: PathBuf::from(name_or_path),
                schema: schema.to_path_buf(),
            }),
            None if BUILTIN_DATASETS.contains(&name_or_path) || name_or_path == "compas" => {
                Ok(DatasetRef::Builtin {
                    name: if name_or_path == "compas" { "compass".into() } else { name_or_path.into() },
                    data_dir: data_dir.to_path_buf(),
                })
            }
            None => Err(Error::UnknownDataset(name_or_path.to_string())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetRef::Builtin { name, .. } => name.clone(),
            DatasetRef::File { path, .. } => path
                .file_stem()
                .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned()),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        let (path, schema) = self.resolve()?;
        load_csv(&path, &schema)
    }

    pub fn resolve(&self) -> Result<(PathBuf, DatasetSchema)> {
        match self {
            DatasetRef::Builtin { name, data_dir } => {
                Ok((data_dir.join(format!("{name}.csv")), builtin_schema(name)?))
            }
            DatasetRef::File { path, schema } => Ok((path.clone(), DatasetSchema::from_file(schema)?)),
        }
    }
}

/// Default data directory: `$FAIRBOOST_DATA`, else `./data`.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os("FAIRBOOST_DATA").map_or_else(|| PathBuf::from("data"), PathBuf::from)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: DatasetRef,
    pub method: Method,
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smote: Option<SmoteConfig>,
    pub splits: usize,
    pub base_seed: u64,
    pub select_theta: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Protocol defaults: 10 splits, T = 200, ε = 0, c = 1.
    pub fn new(dataset: DatasetRef, method: Method) -> Self {
        let smote = (method == Method::SmoteBoost).then(|| SmoteConfig {
            n: SmoteConfig::for_dataset(&dataset.name()).unwrap_or(100),
            ..SmoteConfig::default()
        });
        Self {
            dataset,
            method,
            train: TrainConfig::new(method.variant().unwrap_or(Variant::Vanilla)),
            smote,
            splits: 10,
            base_seed: 0,
            select_theta: method.selects_theta(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.splits == 0 {
            return Err(Error::Config("splits must be at least 1".into()));
        }
        match (self.method, &self.smote) {
            (Method::SmoteBoost, None) => {
                return Err(Error::Config("smoteboost needs a SMOTE configuration".into()))
            }
            (Method::SmoteBoost, Some(_)) => {}
            (m, Some(_)) => {
                return Err(Error::Config(format!(
                    "a SMOTE configuration only applies to smoteboost, not {}",
                    m.name()
                )))
            }
            (_, None) => {}
        }
        if let Some(v) = self.method.variant() {
            if self.train.variant != v {
                return Err(Error::Config(format!(
                    "method {} does not match training variant {}",
                    self.method.name(),
                    self.train.variant.name()
                )));
            }
        }
        self.train.validate()
    }

    pub fn split_seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split: usize,
    pub seed: u64,
    pub theta: usize,
    pub rounds_trained: usize,
    pub convergence: Convergence,
    /// Evaluated on the test half.
    pub report: FairnessReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub dataset: String,
    pub method: Method,
    pub c: f64,
    pub splits: Vec<SplitResult>,
    pub mean: FairnessReport,
    /// Sample standard deviation (n − 1 denominator); zero for one split.
    pub std: FairnessReport,
    #[serde(skip)]
    pub wall_clock_secs: Vec<f64>,
}

impl AggregateReport {
    pub fn from_splits(dataset: String, method: Method, c: f64, splits: Vec<SplitResult>) -> Self {
        let (mean, std) = mean_std(&splits.iter().map(|s| s.report).collect::<Vec<_>>());
        Self {
            dataset,
            method,
            c,
            splits,
            mean,
            std,
            wall_clock_secs: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("row,theta,{}\n", FairnessReport::CSV_HEADER.join(","));
        for s in &self.splits {
            out.push_str(&format!("{},{},{}\n", s.split, s.theta, s.report.csv_row()));
        }
        out.push_str(&format!("mean,,{}\n", self.mean.csv_row()));
        out.push_str(&format!("std,,{}\n", self.std.csv_row()));
        out
    }
}

/// Mean and sample standard deviation of every report field, summed in order.
pub fn mean_std(reports: &[FairnessReport]) -> (FairnessReport, FairnessReport) {
    let n = reports.len();
    if n == 0 {
        return (FairnessReport::default(), FairnessReport::default());
    }
    let mut mean = [0.0; 11];
    for r in reports {
        for (m, v) in mean.iter_mut().zip(r.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = [0.0; 11];
    if n > 1 {
        for r in reports {
            for ((s, v), m) in var.iter_mut().zip(r.values()).zip(mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= (n - 1) as f64);
    }
    (
        FairnessReport::from_values(mean),
        FairnessReport::from_values(var.map(f64::sqrt)),
    )
}

/// A trained model for one split, before θ selection.
pub struct SplitModel {
    pub split: usize,
    pub seed: u64,
    pub train: Dataset,
    pub test: Dataset,
    pub model: EnsembleModel,
    pub trace: Trace,
    pub secs: f64,
}

/// Splits `ds` with the split's seed and trains on the train half.
pub fn train_split(ds: &Dataset, spec: &ExperimentSpec, split: usize) -> Result<SplitModel> {
    let wrap = |e| Error::Split {
        split,
        source: Box::new(e),
    };
    let started = Instant::now();
    let seed = spec.split_seed(split);
    let pair = random_split(ds, seed).map_err(wrap)?;
    let train_ds = ds.subset(&pair.train).map_err(wrap)?;
    let test_ds = ds.subset(&pair.test).map_err(wrap)?;
    let (model, trace) = match spec.method {
        Method::SmoteBoost => {
            let smote = SmoteConfig {
                seed,
                ..spec.smote.clone().unwrap_or_default()
            };
            train_smoteboost(&train_ds, spec.train.rounds, &smote)
        }
        _ => train(&train_ds, &TrainConfig { seed, ..spec.train.clone() }),
    }
    .map_err(wrap)?;
    Ok(SplitModel {
        split,
        seed,
        train: train_ds,
        test: test_ds,
        model,
        trace,
        secs: started.elapsed().as_secs_f64(),
    })
}

/// Picks θ on the training half (when the spec asks for it) and scores the
/// test half.
pub fn evaluate_split(sm: &SplitModel, select: bool, c: f64) -> Result<(SplitResult, EnsembleModel)> {
    let wrap = |e| Error::Split {
        split: sm.split,
        source: Box::new(e),
    };
    let mut model = sm.model.clone();
    if select {
        let search = select_theta(&model, &sm.train, c).map_err(wrap)?;
        model.set_theta(search.theta).map_err(wrap)?;
    }
    let pred = model.predict(sm.test.features());
    let report = fairness_report(sm.test.labels(), &pred, sm.test.groups()).map_err(wrap)?;
    Ok((
        SplitResult {
            split: sm.split,
            seed: sm.seed,
            theta: model.theta(),
            rounds_trained: model.learners().len(),
            convergence: model.meta().convergence,
            report,
        },
        model,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_aggregate(dir: &Path, agg: &AggregateReport) -> Result<()> {
    write_json(&dir.join("aggregate.json"), agg)?;
    write_text(&dir.join("aggregate.csv"), &agg.to_csv())?;
    write_json(&dir.join("timings.json"), &agg.wall_clock_secs)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<AggregateReport> {
    spec.validate()?;
    let ds = spec.dataset.load()?;
    run_experiment_on(&ds, spec)
}

/// [`run_experiment`] on an already loaded dataset.
pub fn run_experiment_on(ds: &Dataset, spec: &ExperimentSpec) -> Result<AggregateReport> {
    Ok(run_sweep_c_on(ds, spec, &[spec.train.c])?.remove(0))
}

pub fn run_sweep_c(spec: &ExperimentSpec, c_values: &[f64]) -> Result<Vec<AggregateReport>> {
    spec.validate()?;
    let ds = spec.dataset.load()?;
    run_sweep_c_on(&ds, spec, c_values)
}

/// One report per c. Training does not depend on c, so each split is
/// trained once and every c re-selects θ on the same model (paired splits).
pub fn run_sweep_c_on(
    ds: &Dataset,
    spec: &ExperimentSpec,
    c_values: &[f64],
) -> Result<Vec<AggregateReport>> {
    spec.validate()?;
    if c_values.is_empty() {
        return Err(Error::Config("no c values given".into()));
    }
    if let Some(c) = c_values.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(Error::Config(format!("c = {c} outside [0, 1]")));
    }
    let dirs: Vec<Option<PathBuf>> = c_values
        .iter()
        .map(|c| {
            spec.out_dir.as_ref().map(|d| {
                if c_values.len() == 1 {
                    d.clone()
                } else {
                    d.join(format!("c_{c:.2}"))
                }
            })
        })
        .collect();
    for (dir, &c) in dirs.iter().zip(c_values) {
        if let Some(dir) = dir {
            let mut echo = spec.clone();
            echo.train.c = c;
            echo.out_dir = None;
            write_json(&dir.join("manifest.json"), &echo)?;
        }
    }

    let name = spec.dataset.name();
    let mut per_c: Vec<Vec<SplitResult>> = vec![Vec::new(); c_values.len()];
    let mut secs = Vec::new();
    for split in 0..spec.splits {
        let outcome = train_split(ds, spec, split).and_then(|sm| {
            let mut results = Vec::with_capacity(c_values.len());
            for (dir, &c) in dirs.iter().zip(c_values) {
                let (r, model) = evaluate_split(&sm, spec.select_theta, c)?;
                if let Some(dir) = dir {
                    write_json(&dir.join(format!("splits/split_{split:02}.json")), &r)?;
                    write_text(&dir.join(format!("splits/split_{split:02}_model.json")), &(model.to_json() + "\n"))?;
                    if spec.select_theta {
                        let curve = select_theta(&sm.model, &sm.train, c).map_err(|e| Error::Split {
                            split,
                            source: Box::new(e),
                        })?;
                        write_text(&dir.join(format!("splits/split_{split:02}_theta.csv")), &curve.to_csv())?;
                    }
                }
                results.push(r);
            }
            Ok((results, sm.secs))
        });
        match outcome {
            Ok((results, s)) => {
                secs.push(s);
                for (acc, r) in per_c.iter_mut().zip(results) {
                    acc.push(r);
                }
                log::info!("{name}/{}: split {split} done in {:.1}s", spec.method.name(), secs[split]);
            }
            Err(e) => {
                // Completed splits stay on disk; record what exists so far.
                for ((dir, acc), &c) in dirs.iter().zip(&per_c).zip(c_values) {
                    if let (Some(dir), false) = (dir, acc.is_empty()) {
                        let mut partial =
                            AggregateReport::from_splits(name.clone(), spec.method, c, acc.clone());
                        partial.wall_clock_secs = secs.clone();
                        write_aggregate(dir, &partial)?;
                    }
                }
                return Err(e);
            }
        }
    }
    let mut out = Vec::with_capacity(c_values.len());
    for ((dir, results), &c) in dirs.iter().zip(per_c).zip(c_values) {
        let mut agg = AggregateReport::from_splits(name.clone(), spec.method, c, results);
        agg.wall_clock_secs = secs.clone();
        if let Some(dir) = dir {
            write_aggregate(dir, &agg)?;
        }
        out.push(agg);
    }
    if let (Some(dir), true) = (&spec.out_dir, c_values.len() > 1) {
        let mut csv = format!("c,{}\n", FairnessReport::CSV_HEADER.join(","));
        for agg in &out {
            csv.push_str(&format!("{},{}\n", agg.c, agg.mean.csv_row()));
        }
        write_text(&dir.join("sweep.csv"), &csv)?;
    }
    Ok(out)
}

/// Round traces and training-set margin distributions for one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitTraces {
    pub split: usize,
    pub trace: Trace,
    pub theta: usize,
    pub margins: MarginCdf,
}

/// Writes `traces/<method>/split_NN_rounds.csv` (per-round gaps and costs)
/// and `traces/<method>/split_NN_margins.csv` (margin CDF per class of the
/// final model on its training half), plus `margins_mean.csv` averaged over
/// splits.
pub fn emit_traces(spec: &ExperimentSpec) -> Result<Vec<SplitTraces>> {
    spec.validate()?;
    let ds = spec.dataset.load()?;
    emit_traces_on(&ds, spec)
}

pub fn emit_traces_on(ds: &Dataset, spec: &ExperimentSpec) -> Result<Vec<SplitTraces>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.splits);
    for split in 0..spec.splits {
        let sm = train_split(ds, spec, split)?;
        let (_, model) = evaluate_split(&sm, spec.select_theta, spec.train.c)?;
        let m = margins(&model, &sm.train).map_err(|e| Error::Split {
            split,
            source: Box::new(e),
        })?;
        out.push(SplitTraces {
            split,
            trace: sm.trace,
            theta: model.theta(),
            margins: m.cdf,
        });
    }
    if let Some(dir) = &spec.out_dir {
        let dir = dir.join("traces").join(spec.method.name());
        for t in &out {
            write_text(&dir.join(format!("split_{:02}_rounds.csv", t.split)), &t.trace.to_csv())?;
            write_text(&dir.join(format!("split_{:02}_margins.csv", t.split)), &t.margins.to_csv())?;
        }
        write_text(&dir.join("margins_mean.csv"), &mean_cdf(&out).to_csv())?;
    }
    Ok(out)
}

fn mean_cdf(traces: &[SplitTraces]) -> MarginCdf {
    let k = traces.len() as f64;
    let first = &traces[0].margins;
    let avg = |pick: fn(&MarginCdf) -> &Vec<f64>| -> Vec<f64> {
        (0..first.grid.len())
            .map(|g| traces.iter().map(|t| pick(&t.margins)[g]).sum::<f64>() / k)
            .collect()
    };
    MarginCdf {
        grid: first.grid.clone(),
        positive: avg(|m| &m.positive),
        negative: avg(|m| &m.negative),
    }
}
