//! Labeled numeric datasets and the tabular loaders (generic CSV, feature
//! matrix CSV, KEEL `.dat`).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::features::FeatureMatrix;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("no data rows")]
    Empty,
    #[error("row {row}: expected {expected} columns, found {found}")]
    Shape {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column:?}: not a number: {value:?}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {0} has a non-finite value")]
    NonFinite(usize),
    #[error("need at least 2 samples, found {0}")]
    TooFewSamples(usize),
    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("row {0} has no label")]
    MissingLabel(usize),
    #[error("feature index {0} out of range")]
    BadFeature(usize),
}

/// `m` samples of `n` real features with a class index per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    feature_names: Vec<String>,
    class_names: Vec<String>,
    data: Vec<f64>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    /// Builds a dataset from rows and string labels. Classes are indexed in
    /// sorted label order.
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<String>,
    ) -> Result<Self, DatasetError> {
        let class_names: Vec<String> = labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: Vec<usize> = labels
            .iter()
            .map(|l| class_names.binary_search(l).expect("label collected above"))
            .collect();
        let n = feature_names.len();
        let mut data = Vec::with_capacity(rows.len() * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(DatasetError::Shape {
                    row: i,
                    expected: n,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_parts(feature_names, class_names, data, index)
    }

    /// Builds a dataset from row-major data and class indices into
    /// `class_names`.
    pub fn from_parts(
        feature_names: Vec<String>,
        class_names: Vec<String>,
        data: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self, DatasetError> {
        let n = feature_names.len();
        if labels.len() < 2 {
            return Err(DatasetError::TooFewSamples(labels.len()));
        }
        if data.len() != labels.len() * n {
            return Err(DatasetError::Shape {
                row: 0,
                expected: labels.len() * n,
                found: data.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&l| l >= class_names.len()) {
            return Err(DatasetError::MissingLabel(i));
        }
        let present: BTreeSet<usize> = labels.iter().copied().collect();
        if present.len() < 2 {
            return Err(DatasetError::TooFewClasses(present.len()));
        }
        if n > 0 {
            if let Some(i) = data.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite(i / n));
            }
        }
        Ok(LabeledDataset {
            feature_names,
            class_names,
            data,
            labels,
        })
    }

    /// Rows of a feature matrix; every row must carry a label.
    pub fn from_feature_matrix(m: &FeatureMatrix) -> Result<Self, DatasetError> {
        let labels = m
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.label.clone().ok_or(DatasetError::MissingLabel(i)))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = m.rows.iter().map(|r| r.values.to_vec()).collect();
        let names = m.names().iter().map(|s| s.to_string()).collect();
        LabeledDataset::new(names, rows, labels)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_features();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_samples()).map(move |i| self.row(i))
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_features() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_samples()).map(|i| self.value(i, j)).collect()
    }

    /// Samples per class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Copy holding only the given rows, in the given order. The class
    /// dictionary is kept, so class indices stay comparable.
    pub fn subset(&self, rows: &[usize]) -> LabeledDataset {
        let mut data = Vec::with_capacity(rows.len() * self.n_features());
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        LabeledDataset {
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            data,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Copy holding only the given feature columns, in the given order.
    pub fn select_features(&self, cols: &[usize]) -> Result<LabeledDataset, DatasetError> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.n_features()) {
            return Err(DatasetError::BadFeature(bad));
        }
        let mut data = Vec::with_capacity(self.n_samples() * cols.len());
        for row in self.rows() {
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(LabeledDataset {
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
            class_names: self.class_names.clone(),
            data,
            labels: self.labels.clone(),
        })
    }

    /// Copy with column `j` replaced by `f` applied to each of its values.
    pub fn map_column(&self, j: usize, f: impl Fn(f64) -> f64) -> LabeledDataset {
        let mut out = self.clone();
        let n = self.n_features();
        for i in 0..self.n_samples() {
            out.data[i * n + j] = f(out.data[i * n + j]);
        }
        out
    }

    /// Overwrites column `j` with `values`, one per row.
    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.n_samples());
        let n = self.n_features();
        for (i, &v) in values.iter().enumerate() {
            self.data[i * n + j] = v;
        }
    }

    /// Copy with labels replaced (same class dictionary).
    pub fn with_labels(&self, labels: Vec<usize>) -> LabeledDataset {
        assert_eq!(labels.len(), self.n_samples());
        LabeledDataset {
            labels,
            ..self.clone()
        }
    }
}

/// A loaded table and the number of rows dropped for missing values.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: LabeledDataset,
    pub rejected_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.trim().to_ascii_lowercase().as_str(),
        "" | "?" | "na" | "nan" | "<null>" | "null"
    )
}

struct TableBuilder {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<String>,
    rejected: usize,
}

impl TableBuilder {
    fn new(names: Vec<String>) -> Self {
        TableBuilder {
            names,
            rows: Vec::new(),
            labels: Vec::new(),
            rejected: 0,
        }
    }

    /// `cells` = features then label.
    fn push(&mut self, row: usize, cells: &[&str]) -> Result<(), DatasetError> {
        let n = self.names.len();
        if cells.len() != n + 1 {
            return Err(DatasetError::Shape {
                row,
                expected: n + 1,
                found: cells.len(),
            });
        }
        if cells.iter().any(|c| is_missing(c)) {
            self.rejected += 1;
            return Ok(());
        }
        let values = cells[..n]
            .iter()
            .zip(&self.names)
            .map(|(c, name)| {
                c.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DatasetError::NonNumeric {
                        row,
                        column: name.clone(),
                        value: c.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.rows.push(values);
        self.labels.push(cells[n].trim().to_owned());
        Ok(())
    }

    fn finish(self) -> Result<Loaded, DatasetError> {
        if self.rows.is_empty() {
            return Err(DatasetError::Empty);
        }
        if self.rejected > 0 {
            log::warn!("rejected {} rows with missing values", self.rejected);
        }
        Ok(Loaded {
            dataset: LabeledDataset::new(self.names, self.rows, self.labels)?,
            rejected_rows: self.rejected,
        })
    }
}

/// Parses a KEEL `.dat` file (`@`-header, then comma-separated data) or a
/// CSV with a header row whose last column is the label. A leading
/// `flow_id` column is ignored.
pub fn parse_tabular(text: &str) -> Result<Loaded, DatasetError> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with('%'));
    match first {
        None => Err(DatasetError::Empty),
        Some(l) if l.starts_with('@') => parse_keel(text),
        Some(_) => parse_csv(text),
    }
}

pub fn load_tabular(path: impl AsRef<Path>) -> Result<Loaded, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_tabular(&text)
}

fn parse_keel(text: &str) -> Result<Loaded, DatasetError> {
    let mut attrs: Vec<String> = Vec::new();
    let mut builder: Option<TableBuilder> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(b) = builder.as_mut() {
            let cells: Vec<&str> = line.split(',').collect();
            b.push(i + 1, &cells)?;
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@attribute") {
            let rest = line["@attribute".len()..].trim();
            let name = rest
                .split(|c: char| c.is_whitespace() || c == '{' || c == '[')
                .next()
                .unwrap_or("")
                .trim_matches('\'');
            attrs.push(name.to_owned());
        } else if lower.starts_with("@data") {
            let mut names = attrs.clone();
            if names.pop().is_none() {
                return Err(DatasetError::Empty);
            }
            builder = Some(TableBuilder::new(names));
        }
    }
    builder.ok_or(DatasetError::Empty)?.finish()
}

fn parse_csv(text: &str) -> Result<Loaded, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let skip = usize::from(header.first().map(String::as_str) == Some("flow_id"));
    if header.len() < skip + 2 {
        return Err(DatasetError::Shape {
            row: 1,
            expected: skip + 2,
            found: header.len(),
        });
    }
    let names = header[skip..header.len() - 1].to_vec();
    let mut b = TableBuilder::new(names);
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let cells: Vec<&str> = rec.iter().skip(skip).collect();
        b.push(i + 2, &cells)?;
    }
    b.finish()
}
