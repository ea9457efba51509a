//! Group-annotated binary classification data and the CSV loader.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::schema::{ColumnKind, DatasetSchema, MissingPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "-1")]
    Neg,
    #[serde(rename = "+1")]
    Pos,
}

impl Label {
    pub fn from_sign(v: f64) -> Self {
        if v >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }

    pub fn is_pos(self) -> bool {
        self == Label::Pos
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Prot,
    NonProt,
}

impl Group {
    pub fn flip(self) -> Self {
        match self {
            Group::Prot => Group::NonProt,
            Group::NonProt => Group::Prot,
        }
    }
}

/// One of the four group × class cells: s+, s−, s̄+, s̄−.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    ProtPos,
    ProtNeg,
    NonProtPos,
    NonProtNeg,
}

impl Cell {
    pub const ALL: [Cell; 4] = [Cell::ProtPos, Cell::ProtNeg, Cell::NonProtPos, Cell::NonProtNeg];

    pub fn of(group: Group, label: Label) -> Self {
        match (group, label) {
            (Group::Prot, Label::Pos) => Cell::ProtPos,
            (Group::Prot, Label::Neg) => Cell::ProtNeg,
            (Group::NonProt, Label::Pos) => Cell::NonProtPos,
            (Group::NonProt, Label::Neg) => Cell::NonProtNeg,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Cell::ProtPos => "s+",
            Cell::ProtNeg => "s-",
            Cell::NonProtPos => "s̄+",
            Cell::NonProtNeg => "s̄-",
        }
    }
}

/// A column of the encoded feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// One-hot indicator: sorted row indices holding 1.0, every other row is 0.0.
    Indicator(Vec<u32>),
}

/// Column-major n×d matrix. One-hot columns are stored sparsely, which keeps
/// the KDD census encoding (~400 indicator columns) small.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    names: Vec<String>,
    columns: Vec<Column>,
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, names: Vec<String>, columns: Vec<Column>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::LengthMismatch(format!(
                "{} column names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (name, col) in names.iter().zip(&columns) {
            match col {
                Column::Numeric(v) => {
                    if v.len() != n_rows {
                        return Err(Error::LengthMismatch(format!(
                            "column `{name}` has {} rows, expected {n_rows}",
                            v.len()
                        )));
                    }
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Schema(format!("column `{name}` has non-finite values")));
                    }
                }
                Column::Indicator(rows) => {
                    if rows.windows(2).any(|w| w[0] >= w[1])
                        || rows.last().is_some_and(|&r| r as usize >= n_rows)
                    {
                        return Err(Error::Schema(format!(
                            "indicator column `{name}` rows must be sorted, unique and < {n_rows}"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            n_rows,
            names,
            columns,
        })
    }

    /// Dense numeric matrix from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::LengthMismatch("ragged feature rows".into()));
        }
        let columns = (0..d)
            .map(|j| Column::Numeric(rows.iter().map(|r| r[j]).collect()))
            .collect();
        let names = (0..d).map(|j| format!("x{j}")).collect();
        Self::new(rows.len(), names, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        match &self.columns[col] {
            Column::Numeric(v) => v[row],
            Column::Indicator(rows) => {
                if rows.binary_search(&(row as u32)).is_ok() {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Materializes column `col` as a dense vector.
    pub fn dense_column(&self, col: usize) -> Vec<f64> {
        match &self.columns[col] {
            Column::Numeric(v) => v.clone(),
            Column::Indicator(rows) => {
                let mut out = vec![0.0; self.n_rows];
                for &r in rows {
                    out[r as usize] = 1.0;
                }
                out
            }
        }
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.n_cols()).map(|j| self.value(row, j)).collect()
    }

    /// Rows in the order given by `indices` (which may repeat).
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        // old row -> new positions, in CSR form
        let mut offsets = vec![0u32; self.n_rows + 1];
        for &i in indices {
            offsets[i + 1] += 1;
        }
        for k in 0..self.n_rows {
            offsets[k + 1] += offsets[k];
        }
        let mut fill = offsets.clone();
        let mut positions = vec![0u32; indices.len()];
        for (new, &old) in indices.iter().enumerate() {
            positions[fill[old] as usize] = new as u32;
            fill[old] += 1;
        }
        let columns = self
            .columns
            .iter()
            .map(|col| match col {
                Column::Numeric(v) => Column::Numeric(indices.iter().map(|&i| v[i]).collect()),
                Column::Indicator(rows) => {
                    let mut new_rows: Vec<u32> = rows
                        .iter()
                        .flat_map(|&r| {
                            let r = r as usize;
                            positions[offsets[r] as usize..offsets[r + 1] as usize].iter().copied()
                        })
                        .collect();
                    new_rows.sort_unstable();
                    Column::Indicator(new_rows)
                }
            })
            .collect();
        FeatureMatrix {
            n_rows: indices.len(),
            names: self.names.clone(),
            columns,
        }
    }

    fn hash_into(&self, hasher: &mut Sha256) {
        hasher.update((self.n_rows as u64).to_le_bytes());
        for (name, col) in self.names.iter().zip(&self.columns) {
            hasher.update(name.as_bytes());
            match col {
                Column::Numeric(v) => {
                    hasher.update([0u8]);
                    for x in v {
                        hasher.update(x.to_le_bytes());
                    }
                }
                Column::Indicator(rows) => {
                    hasher.update([1u8]);
                    for r in rows {
                        hasher.update(r.to_le_bytes());
                    }
                }
            }
        }
    }
}

/// Row accounting for a CSV load.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub raw_rows: usize,
    pub filtered: usize,
    pub missing_dropped: usize,
    pub duplicates_dropped: usize,
    pub kept: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    /// SHA-256 of the source bytes (or of the encoded content for in-memory data).
    pub source_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<DatasetSchema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<LoadSummary>,
}

/// Encoded features, ±1 labels and protected-group membership.
///
/// Every group × class cell is guaranteed non-empty.
#[derive(Clone, Debug)]
pub struct Dataset {
    features: FeatureMatrix,
    labels: Vec<Label>,
    groups: Vec<Group>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(features: FeatureMatrix, labels: Vec<Label>, groups: Vec<Group>) -> Result<Self> {
        let mut ds = Self {
            features,
            labels,
            groups,
            provenance: Provenance::default(),
        };
        ds.check()?;
        ds.provenance = Provenance {
            source: "memory".into(),
            source_hash: ds.fingerprint(),
            ..Default::default()
        };
        Ok(ds)
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>, groups: Vec<Group>) -> Result<Self> {
        Self::new(FeatureMatrix::from_rows(rows)?, labels, groups)
    }

    fn check(&self) -> Result<()> {
        let n = self.features.n_rows();
        if self.labels.len() != n || self.groups.len() != n {
            return Err(Error::LengthMismatch(format!(
                "{n} feature rows, {} labels, {} groups",
                self.labels.len(),
                self.groups.len()
            )));
        }
        let counts = self.cell_counts();
        if let Some(cell) = Cell::ALL.iter().find(|c| counts[c.index()] == 0) {
            return Err(Error::Degenerate(format!("group-class cell {} is empty", cell.name())));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn cell(&self, i: usize) -> Cell {
        Cell::of(self.groups[i], self.labels[i])
    }

    /// Instance counts per cell, indexed by [`Cell::index`].
    pub fn cell_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for (&g, &y) in self.groups.iter().zip(&self.labels) {
            counts[Cell::of(g, y).index()] += 1;
        }
        counts
    }

    pub fn positive_fraction(&self) -> f64 {
        self.labels.iter().filter(|y| y.is_pos()).count() as f64 / self.len() as f64
    }

    /// Rows `indices`, in that order. Fails if a cell ends up empty.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let ds = Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i]).collect(),
            provenance: Provenance {
                source: format!("subset of {}", self.provenance.source),
                source_hash: self.provenance.source_hash.clone(),
                schema: None,
                load: None,
            },
        };
        ds.check()?;
        Ok(ds)
    }

    /// Same data with protected and non-protected swapped.
    pub fn with_groups_swapped(&self) -> Dataset {
        Dataset {
            groups: self.groups.iter().map(|g| g.flip()).collect(),
            ..self.clone()
        }
    }

    /// SHA-256 over the encoded content.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        self.features.hash_into(&mut h);
        for (&y, &g) in self.labels.iter().zip(&self.groups) {
            h.update([y.is_pos() as u8, (g == Group::Prot) as u8]);
        }
        hex(&h.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn detect_delimiter(bytes: &[u8]) -> u8 {
    let header = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    let commas = header.iter().filter(|&&b| b == b',').count();
    let semis = header.iter().filter(|&&b| b == b';').count();
    if semis > commas {
        b';'
    } else {
        b','
    }
}

enum RawColumn {
    Numeric(Vec<f64>),
    Categorical {
        levels: HashMap<String, u32>,
        codes: Vec<u32>,
    },
}

/// Loads a delimited file (comma or semicolon, detected from the header)
/// and encodes it according to `schema`.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut ds = load_csv_bytes(&bytes, schema)?;
    ds.provenance.source = path.display().to_string();
    Ok(ds)
}

pub fn load_csv_bytes(bytes: &[u8], schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(bytes))
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
    };

    let encoded: Vec<_> = schema.encoded_features().cloned().collect();
    let feature_idx: Vec<usize> = encoded.iter().map(|f| find(&f.name)).collect::<Result<_>>()?;
    let label_idx = find(&schema.label)?;
    let sensitive_idx = find(&schema.sensitive)?;
    let filter_idx: Vec<usize> = schema
        .filters
        .iter()
        .map(|f| find(&f.column))
        .collect::<Result<_>>()?;
    let mut used: Vec<usize> = feature_idx.clone();
    used.extend([label_idx, sensitive_idx]);

    let mut raw: Vec<RawColumn> = encoded
        .iter()
        .map(|f| match f.kind {
            ColumnKind::Numeric => RawColumn::Numeric(Vec::new()),
            ColumnKind::Categorical => RawColumn::Categorical {
                levels: HashMap::new(),
                codes: Vec::new(),
            },
        })
        .collect();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut summary = LoadSummary::default();

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        summary.raw_rows += 1;
        let field = |i: usize| record.get(i).unwrap_or("");

        if schema
            .filters
            .iter()
            .zip(&filter_idx)
            .any(|(f, &i)| !f.keeps(field(i)))
        {
            summary.filtered += 1;
            continue;
        }
        if let Some(&i) = used
            .iter()
            .find(|&&i| schema.missing_markers.iter().any(|m| m == field(i)))
        {
            match schema.missing {
                MissingPolicy::Drop => {
                    summary.missing_dropped += 1;
                    continue;
                }
                MissingPolicy::Error => {
                    return Err(Error::Row {
                        row,
                        message: format!("missing value in column `{}`", &header[i]),
                    })
                }
            }
        }
        if schema.dedup && !seen.insert(used.iter().map(|&i| field(i).to_string()).collect()) {
            summary.duplicates_dropped += 1;
            continue;
        }

        // Parse everything before pushing so a bad row leaves no partial state.
        let mut numeric = Vec::with_capacity(feature_idx.len());
        for (spec, &i) in encoded.iter().zip(&feature_idx) {
            if spec.kind == ColumnKind::Numeric {
                let v: f64 = field(i).parse().map_err(|_| Error::Row {
                    row,
                    message: format!("`{}` is not numeric in column `{}`", field(i), spec.name),
                })?;
                if !v.is_finite() {
                    return Err(Error::Row {
                        row,
                        message: format!("non-finite value in column `{}`", spec.name),
                    });
                }
                numeric.push(v);
            }
        }
        let mut numeric = numeric.into_iter();
        for (col, &i) in raw.iter_mut().zip(&feature_idx) {
            match col {
                RawColumn::Numeric(v) => v.push(numeric.next().expect("parsed above")),
                RawColumn::Categorical { levels, codes } => {
                    let next = levels.len() as u32;
                    codes.push(*levels.entry(field(i).to_string()).or_insert(next));
                }
            }
        }
        labels.push(if field(label_idx) == schema.positive {
            Label::Pos
        } else {
            Label::Neg
        });
        groups.push(if field(sensitive_idx) == schema.protected {
            Group::Prot
        } else {
            Group::NonProt
        });
    }
    summary.kept = labels.len();
    if summary.kept == 0 {
        return Err(Error::Degenerate("no rows left after cleaning".into()));
    }
    log::info!(
        "loaded {} rows: {} filtered, {} with missing values, {} duplicates, {} kept",
        summary.raw_rows,
        summary.filtered,
        summary.missing_dropped,
        summary.duplicates_dropped,
        summary.kept
    );

    let n = summary.kept;
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (spec, col) in encoded.iter().zip(raw) {
        match col {
            RawColumn::Numeric(v) => {
                names.push(spec.name.clone());
                columns.push(Column::Numeric(v));
            }
            RawColumn::Categorical { levels, codes } => {
                // Sorted level order keeps the encoding independent of row order.
                let mut sorted: Vec<(String, u32)> = levels.into_iter().collect();
                sorted.sort();
                let mut rows_of: Vec<Vec<u32>> = vec![Vec::new(); sorted.len()];
                let mut slot = vec![0usize; sorted.len()];
                for (k, (_, code)) in sorted.iter().enumerate() {
                    slot[*code as usize] = k;
                }
                for (r, &code) in codes.iter().enumerate() {
                    rows_of[slot[code as usize]].push(r as u32);
                }
                for ((level, _), rows) in sorted.into_iter().zip(rows_of) {
                    names.push(format!("{}={}", spec.name, level));
                    columns.push(Column::Indicator(rows));
                }
            }
        }
    }
    let features = FeatureMatrix::new(n, names, columns)?;
    let mut ds = Dataset {
        features,
        labels,
        groups,
        provenance: Provenance::default(),
    };
    ds.check()?;
    ds.provenance = Provenance {
        source: "bytes".into(),
        source_hash: hex(&Sha256::digest(bytes)),
        schema: Some(schema.clone()),
        load: Some(summary),
    };
    Ok(ds)
}

/// Disjoint train/test index sets covering the whole dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPair {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    /// Number of reshuffles needed before both halves had every cell.
    pub attempts: u32,
}

impl SplitPair {
    pub const TRAIN_FRACTION: f64 = 0.5;
}

const MAX_SPLIT_ATTEMPTS: u32 = 100;

/// Uniform random 50/50 split; the train half gets the extra instance when
/// `n` is odd. Splits leaving a cell empty on either side are reshuffled.
pub fn random_split(ds: &Dataset, seed: u64) -> Result<SplitPair> {
    let n = ds.len();
    if n < 4 {
        return Err(Error::Degenerate(format!("cannot split {n} instances")));
    }
    let n_train = n.div_ceil(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for attempt in 1..=MAX_SPLIT_ATTEMPTS {
        perm.shuffle(&mut rng);
        let (train, test) = perm.split_at(n_train);
        if covers_all_cells(ds, train) && covers_all_cells(ds, test) {
            let mut train = train.to_vec();
            let mut test = test.to_vec();
            train.sort_unstable();
            test.sort_unstable();
            return Ok(SplitPair {
                train,
                test,
                seed,
                attempts: attempt,
            });
        }
    }
    Err(Error::Degenerate(format!(
        "no split with every group-class cell on both sides after {MAX_SPLIT_ATTEMPTS} attempts"
    )))
}

fn covers_all_cells(ds: &Dataset, idx: &[usize]) -> bool {
    let mut seen = [false; 4];
    for &i in idx {
        seen[ds.cell(i).index()] = true;
    }
    seen.iter().all(|&s| s)
}
