//! Error, balanced error and equalized-odds measures over the four
//! group × class cells.

use serde::{Deserialize, Serialize};

use crate::boosting::EnsembleModel;
use crate::dataset::{Cell, Dataset, Group, Label};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub correct: u64,
    pub incorrect: u64,
}

impl CellCounts {
    pub fn total(self) -> u64 {
        self.correct + self.incorrect
    }

    fn error_rate(self, cell: Cell) -> Result<f64> {
        if self.total() == 0 {
            return Err(Error::UndefinedRate(format!("cell {} is empty", cell.name())));
        }
        Ok(self.incorrect as f64 / self.total() as f64)
    }
}

/// Correct/incorrect counts per cell, indexed by [`Cell::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub cells: [CellCounts; 4],
}

impl GroupConfusion {
    pub fn cell(&self, cell: Cell) -> CellCounts {
        self.cells[cell.index()]
    }

    pub fn record(&mut self, cell: Cell, correct: bool) {
        let c = &mut self.cells[cell.index()];
        if correct {
            c.correct += 1;
        } else {
            c.incorrect += 1;
        }
    }

    pub fn tp(&self) -> u64 {
        self.cell(Cell::ProtPos).correct + self.cell(Cell::NonProtPos).correct
    }

    pub fn fn_(&self) -> u64 {
        self.cell(Cell::ProtPos).incorrect + self.cell(Cell::NonProtPos).incorrect
    }

    pub fn tn(&self) -> u64 {
        self.cell(Cell::ProtNeg).correct + self.cell(Cell::NonProtNeg).correct
    }

    pub fn fp(&self) -> u64 {
        self.cell(Cell::ProtNeg).incorrect + self.cell(Cell::NonProtNeg).incorrect
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().map(|c| c.total()).sum()
    }

    /// Error rate within one cell: FNR for positive cells, FPR for negative ones.
    pub fn cell_error_rate(&self, cell: Cell) -> Result<f64> {
        self.cell(cell).error_rate(cell)
    }

    /// Same counts with protected and non-protected swapped.
    pub fn swap_groups(&self) -> GroupConfusion {
        let c = &self.cells;
        let mut cells = [CellCounts::default(); 4];
        cells[Cell::ProtPos.index()] = c[Cell::NonProtPos.index()];
        cells[Cell::ProtNeg.index()] = c[Cell::NonProtNeg.index()];
        cells[Cell::NonProtPos.index()] = c[Cell::ProtPos.index()];
        cells[Cell::NonProtNeg.index()] = c[Cell::ProtNeg.index()];
        GroupConfusion { cells }
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label], groups: &[Group]) -> Result<GroupConfusion> {
    if y_true.len() != y_pred.len() || y_true.len() != groups.len() {
        return Err(Error::LengthMismatch(format!(
            "{} true labels, {} predictions, {} groups",
            y_true.len(),
            y_pred.len(),
            groups.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput("no instances to tabulate".into()));
    }
    let mut c = GroupConfusion::default();
    for ((&y, &p), &g) in y_true.iter().zip(y_pred).zip(groups) {
        c.record(Cell::of(g, y), y == p);
    }
    Ok(c)
}

/// Signed rate gaps, non-protected minus protected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateGaps {
    pub fpr: f64,
    pub fnr: f64,
}

impl RateGaps {
    pub fn eq_odds(self) -> f64 {
        eq_odds(self.fpr, self.fnr)
    }
}

/// δFPR = FPR(s̄) − FPR(s), δFNR = FNR(s̄) − FNR(s).
pub fn delta_rates(c: &GroupConfusion) -> Result<RateGaps> {
    Ok(RateGaps {
        fpr: c.cell_error_rate(Cell::NonProtNeg)? - c.cell_error_rate(Cell::ProtNeg)?,
        fnr: c.cell_error_rate(Cell::NonProtPos)? - c.cell_error_rate(Cell::ProtPos)?,
    })
}

pub fn eq_odds(delta_fpr: f64, delta_fnr: f64) -> f64 {
    delta_fpr.abs() + delta_fnr.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub er: f64,
    /// `None` when one class is absent and BER is undefined.
    pub ber: Option<f64>,
}

impl ErrorRates {
    pub fn ber(&self) -> Result<f64> {
        self.ber
            .ok_or_else(|| Error::UndefinedRate("balanced error needs both classes".into()))
    }
}

/// ER = (FN+FP)/n and BER = 1 − ½(TPR + TNR) with overall TPR/TNR.
pub fn error_rates(c: &GroupConfusion) -> Result<ErrorRates> {
    let n = c.total();
    if n == 0 {
        return Err(Error::EmptyInput("no instances".into()));
    }
    let er = (c.fn_() + c.fp()) as f64 / n as f64;
    let pos = c.tp() + c.fn_();
    let neg = c.tn() + c.fp();
    let ber = (pos > 0 && neg > 0).then(|| {
        let tpr = c.tp() as f64 / pos as f64;
        let tnr = c.tn() as f64 / neg as f64;
        1.0 - 0.5 * (tpr + tnr)
    });
    Ok(ErrorRates { er, ber })
}

/// Everything reported per evaluation. CSV column order is
/// [`FairnessReport::CSV_HEADER`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub er: f64,
    pub ber: f64,
    pub eq_odds: f64,
    pub delta_fpr: f64,
    pub delta_fnr: f64,
    pub tpr_prot: f64,
    pub tpr_nonprot: f64,
    pub tnr_prot: f64,
    pub tnr_nonprot: f64,
}

impl FairnessReport {
    pub const CSV_HEADER: [&'static str; 11] = [
        "accuracy",
        "balanced_accuracy",
        "er",
        "ber",
        "eq_odds",
        "delta_fpr",
        "delta_fnr",
        "tpr_prot",
        "tpr_nonprot",
        "tnr_prot",
        "tnr_nonprot",
    ];

    pub fn from_confusion(c: &GroupConfusion) -> Result<Self> {
        let gaps = delta_rates(c)?;
        let rates = error_rates(c)?;
        let ber = rates.ber()?;
        Ok(Self {
            accuracy: 1.0 - rates.er,
            balanced_accuracy: 1.0 - ber,
            er: rates.er,
            ber,
            eq_odds: gaps.eq_odds(),
            delta_fpr: gaps.fpr,
            delta_fnr: gaps.fnr,
            tpr_prot: 1.0 - c.cell_error_rate(Cell::ProtPos)?,
            tpr_nonprot: 1.0 - c.cell_error_rate(Cell::NonProtPos)?,
            tnr_prot: 1.0 - c.cell_error_rate(Cell::ProtNeg)?,
            tnr_nonprot: 1.0 - c.cell_error_rate(Cell::NonProtNeg)?,
        })
    }

    pub fn values(&self) -> [f64; 11] {
        [
            self.accuracy,
            self.balanced_accuracy,
            self.er,
            self.ber,
            self.eq_odds,
            self.delta_fpr,
            self.delta_fnr,
            self.tpr_prot,
            self.tpr_nonprot,
            self.tnr_prot,
            self.tnr_nonprot,
        ]
    }

    pub fn from_values(v: [f64; 11]) -> Self {
        Self {
            accuracy: v[0],
            balanced_accuracy: v[1],
            er: v[2],
            ber: v[3],
            eq_odds: v[4],
            delta_fpr: v[5],
            delta_fnr: v[6],
            tpr_prot: v[7],
            tpr_nonprot: v[8],
            tnr_prot: v[9],
            tnr_nonprot: v[10],
        }
    }

    pub fn csv_row(&self) -> String {
        self.values().map(|v| v.to_string()).join(",")
    }
}

pub fn fairness_report(y_true: &[Label], y_pred: &[Label], groups: &[Group]) -> Result<FairnessReport> {
    FairnessReport::from_confusion(&confusion(y_true, y_pred, groups)?)
}

/// Points of the per-class margin CDF, evaluated on a fixed grid over [−1, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginCdf {
    pub grid: Vec<f64>,
    /// Fraction of positive instances with margin ≤ grid value.
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl MarginCdf {
    pub const GRID_POINTS: usize = 201;

    pub fn from_margins(margins: &[f64], labels: &[Label]) -> Self {
        let mut pos: Vec<f64> = Vec::new();
        let mut neg: Vec<f64> = Vec::new();
        for (&m, &y) in margins.iter().zip(labels) {
            if y.is_pos() {
                pos.push(m);
            } else {
                neg.push(m);
            }
        }
        pos.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        let grid: Vec<f64> = (0..Self::GRID_POINTS)
            .map(|k| -1.0 + 2.0 * k as f64 / (Self::GRID_POINTS - 1) as f64)
            .collect();
        let cdf = |sorted: &[f64]| -> Vec<f64> {
            grid.iter()
                .map(|&g| {
                    if sorted.is_empty() {
                        0.0
                    } else {
                        sorted.partition_point(|&m| m <= g + 1e-12) as f64 / sorted.len() as f64
                    }
                })
                .collect()
        };
        MarginCdf {
            positive: cdf(&pos),
            negative: cdf(&neg),
            grid,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("margin,cdf_positive,cdf_negative\n");
        for ((g, p), n) in self.grid.iter().zip(&self.positive).zip(&self.negative) {
            out.push_str(&format!("{g},{p},{n}\n"));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub values: Vec<f64>,
    pub cdf: MarginCdf,
}

/// Normalized voting margins y·Σα h(x) / Σα over the model's first θ learners.
pub fn margins(model: &EnsembleModel, ds: &Dataset) -> Result<Margins> {
    if model.theta() == 0 {
        return Err(Error::DegenerateModel("model has no learners".into()));
    }
    let alpha_sum: f64 = model.active().iter().map(|l| l.alpha).sum();
    if alpha_sum <= 0.0 {
        return Err(Error::DegenerateModel("sum of learner weights is zero".into()));
    }
    let scores = model.scores(ds.features(), model.theta());
    let values: Vec<f64> = scores
        .iter()
        .zip(ds.labels())
        .map(|(s, y)| (y.sign() * s / alpha_sum).clamp(-1.0, 1.0))
        .collect();
    let cdf = MarginCdf::from_margins(&values, ds.labels());
    Ok(Margins { values, cdf })
}
