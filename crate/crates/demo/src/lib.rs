//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes a JSON [`DemoRequest`] and returns JSON. The plain Rust
//! functions behind them are usable natively.

use fairboost::metrics::{margins, MarginCdf};
use fairboost::selection::PrefixPoint;
use fairboost::synth::{generate, SynthConfig};
use fairboost::{
    fairness_report, random_split, select_theta, train, Dataset, EnsembleModel, FairnessReport,
    TrainConfig, Variant,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoRequest {
    pub synth: SynthConfig,
    pub rounds: usize,
    pub epsilon: f64,
    pub split_seed: u64,
}

impl Default for DemoRequest {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            rounds: 100,
            epsilon: 0.0,
            split_seed: 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VariantTrace {
    pub variant: Variant,
    pub delta_fnr: Vec<f64>,
    pub delta_fpr: Vec<f64>,
    pub alpha: Vec<f64>,
    pub theta: usize,
    pub test: FairnessReport,
}

#[derive(Debug, Serialize)]
pub struct VariantMargins {
    pub variant: Variant,
    pub cdf: MarginCdf,
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub c: f64,
    pub theta: usize,
    pub test: FairnessReport,
}

#[derive(Debug, Serialize)]
pub struct ThetaSweep {
    pub rounds: usize,
    /// Training-set prefix curve at c = 1.
    pub curve: Vec<PrefixPoint>,
    pub points: Vec<SweepPoint>,
}

struct Prepared {
    train: Dataset,
    test: Dataset,
}

fn prepare(req: &DemoRequest) -> Result<Prepared, String> {
    let ds = generate(&req.synth).map_err(|e| e.to_string())?;
    let pair = random_split(&ds, req.split_seed).map_err(|e| e.to_string())?;
    Ok(Prepared {
        train: ds.subset(&pair.train).map_err(|e| e.to_string())?,
        test: ds.subset(&pair.test).map_err(|e| e.to_string())?,
    })
}

fn fit(p: &Prepared, req: &DemoRequest, variant: Variant) -> Result<(EnsembleModel, fairboost::Trace), String> {
    let cfg = TrainConfig {
        rounds: req.rounds,
        epsilon: req.epsilon,
        seed: req.split_seed,
        // Keep every round so the traces have the same length.
        fairness_stop: false,
        ..TrainConfig::new(variant)
    };
    train(&p.train, &cfg).map_err(|e| e.to_string())
}

fn test_report(model: &EnsembleModel, test: &Dataset) -> Result<FairnessReport, String> {
    let pred = model.predict(test.features());
    fairness_report(test.labels(), &pred, test.groups()).map_err(|e| e.to_string())
}

fn with_theta(mut model: EnsembleModel, train: &Dataset, c: f64) -> Result<EnsembleModel, String> {
    let search = select_theta(&model, train, c).map_err(|e| e.to_string())?;
    model.set_theta(search.theta).map_err(|e| e.to_string())?;
    Ok(model)
}

/// Per-round cumulative δ traces of AdaFair, its non-cumulative ablation and
/// plain AdaBoost.
pub fn gap_traces(req: &DemoRequest) -> Result<Vec<VariantTrace>, String> {
    let p = prepare(req)?;
    [Variant::AdaFair, Variant::NoCumul, Variant::Vanilla]
        .into_iter()
        .map(|variant| {
            let (model, trace) = fit(&p, req, variant)?;
            let model = if variant == Variant::Vanilla {
                model
            } else {
                with_theta(model, &p.train, 1.0)?
            };
            Ok(VariantTrace {
                variant,
                delta_fnr: trace.rounds.iter().map(|r| r.delta_fnr).collect(),
                delta_fpr: trace.rounds.iter().map(|r| r.delta_fpr).collect(),
                alpha: trace.rounds.iter().map(|r| r.alpha).collect(),
                theta: model.theta(),
                test: test_report(&model, &p.test)?,
            })
        })
        .collect()
}

/// Test-set margin CDFs per class for AdaFair and plain AdaBoost.
pub fn margin_cdfs(req: &DemoRequest) -> Result<Vec<VariantMargins>, String> {
    let p = prepare(req)?;
    [Variant::AdaFair, Variant::Vanilla]
        .into_iter()
        .map(|variant| {
            let (model, _) = fit(&p, req, variant)?;
            let m = margins(&model, &p.test).map_err(|e| e.to_string())?;
            Ok(VariantMargins { variant, cdf: m.cdf })
        })
        .collect()
}

/// Trains AdaFair once and re-selects θ for c = 0, 0.1, …, 1.
pub fn theta_sweep(req: &DemoRequest) -> Result<ThetaSweep, String> {
    let p = prepare(req)?;
    let (model, trace) = fit(&p, req, Variant::AdaFair)?;
    let curve = select_theta(&model, &p.train, 1.0).map_err(|e| e.to_string())?.curve;
    let points = (0..=10)
        .map(|k| {
            let c = k as f64 / 10.0;
            let chosen = with_theta(model.clone(), &p.train, c)?;
            Ok(SweepPoint {
                c,
                theta: chosen.theta(),
                test: test_report(&chosen, &p.test)?,
            })
        })
        .collect::<Result<_, String>>()?;
    Ok(ThetaSweep {
        rounds: trace.rounds.len(),
        curve,
        points,
    })
}

fn call<T: Serialize>(json: &str, f: fn(&DemoRequest) -> Result<T, String>) -> Result<String, JsError> {
    let req: DemoRequest = if json.trim().is_empty() {
        DemoRequest::default()
    } else {
        serde_json::from_str(json).map_err(|e| JsError::new(&e.to_string()))?
    };
    let out = f(&req).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&out).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = gapTraces)]
pub fn gap_traces_js(request: &str) -> Result<String, JsError> {
    call(request, gap_traces)
}

#[wasm_bindgen(js_name = marginCdfs)]
pub fn margin_cdfs_js(request: &str) -> Result<String, JsError> {
    call(request, margin_cdfs)
}

#[wasm_bindgen(js_name = thetaSweep)]
pub fn theta_sweep_js(request: &str) -> Result<String, JsError> {
    call(request, theta_sweep)
}

#[wasm_bindgen(js_name = defaultRequest)]
pub fn default_request() -> String {
    serde_json::to_string(&DemoRequest::default()).expect("serializable")
}
