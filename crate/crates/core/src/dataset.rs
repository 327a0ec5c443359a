//! UCI-style classification data: CSV ingestion, per-trial splits and
//! min-max normalisation.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mlp::Pattern;
use crate::{Error, Result};

/// A column selected by zero-based index or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label_column: ColumnRef,
    #[serde(default)]
    pub ignored_columns: Vec<ColumnRef>,
    /// `None` detects a header: the first row is a header when any of its
    /// feature cells is not numeric.
    #[serde(default)]
    pub header: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
    /// Rows dropped for unparseable or missing cells.
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.features.len()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }
}

fn resolve(col: &ColumnRef, header: Option<&[String]>, width: usize) -> Result<usize> {
    let idx = match col {
        ColumnRef::Index(i) => *i,
        ColumnRef::Name(name) => header
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::Dataset(format!("column {name:?} not found in header")))?,
    };
    if idx >= width {
        return Err(Error::Dataset(format!("column {idx} out of range for {width} columns")));
    }
    Ok(idx)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&text, schema, name)
}

/// Parses CSV text. Labels become class ids in order of first appearance.
pub fn parse_csv(text: &str, schema: &CsvSchema, name: String) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec.iter().map(str::to_owned).collect());
    }
    let Some(first) = records.first() else {
        return Err(Error::Dataset("no rows".into()));
    };
    let width = first.len();

    let has_header = match schema.header {
        Some(h) => h,
        None => {
            // a numeric label column is ambiguous, look only at the rest
            let label_idx = match &schema.label_column {
                ColumnRef::Index(i) => Some(*i),
                ColumnRef::Name(_) => None,
            };
            label_idx.is_none()
                || first
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| Some(*i) != label_idx)
                    .any(|(_, c)| c.parse::<f64>().is_err())
        }
    };
    let header: Option<Vec<String>> = has_header.then(|| records.remove(0));

    let label_idx = resolve(&schema.label_column, header.as_deref(), width)?;
    let mut skip = vec![false; width];
    skip[label_idx] = true;
    for col in &schema.ignored_columns {
        skip[resolve(col, header.as_deref(), width)?] = true;
    }
    let feature_cols: Vec<usize> = (0..width).filter(|&i| !skip[i]).collect();
    if feature_cols.is_empty() {
        return Err(Error::Dataset("no feature columns".into()));
    }
    let feature_names = feature_cols
        .iter()
        .map(|&i| match &header {
            Some(h) => h[i].clone(),
            None => format!("x{i}"),
        })
        .collect();

    let mut class_ids: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dropped_rows = 0;
    for rec in &records {
        if rec.len() != width || rec[label_idx].is_empty() {
            dropped_rows += 1;
            continue;
        }
        let row: Option<Vec<f64>> = feature_cols
            .iter()
            .map(|&i| rec[i].parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        let Some(row) = row else {
            dropped_rows += 1;
            continue;
        };
        let label = &rec[label_idx];
        let id = *class_ids.entry(label.clone()).or_insert_with(|| {
            class_names.push(label.clone());
            class_names.len() - 1
        });
        features.push(row);
        labels.push(id);
    }
    if features.is_empty() {
        return Err(Error::Dataset("zero usable rows".into()));
    }
    if class_names.len() < 2 {
        return Err(Error::Dataset(format!(
            "need at least 2 classes, found {}",
            class_names.len()
        )));
    }
    Ok(Dataset {
        name,
        features,
        labels,
        class_names,
        feature_names,
        dropped_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }

    /// Scales the sizes down proportionally when only `rows` are available
    /// (largest remainder). Returns the sizes and whether scaling happened.
    pub fn fit_to(&self, rows: usize) -> (SplitSizes, bool) {
        let total = self.total();
        if total <= rows || total == 0 {
            return (*self, false);
        }
        let parts = [self.train, self.validation, self.test];
        let mut sizes = [0usize; 3];
        let mut rem = [(0usize, 0usize); 3];
        for (i, &p) in parts.iter().enumerate() {
            sizes[i] = p * rows / total;
            rem[i] = (p * rows % total, i);
        }
        let mut left = rows - sizes.iter().sum::<usize>();
        rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in &rem {
            if left == 0 {
                break;
            }
            sizes[i] += 1;
            left -= 1;
        }
        (
            SplitSizes {
                train: sizes[0],
                validation: sizes[1],
                test: sizes[2],
            },
            true,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Cuts one uniform random permutation of the row indices into consecutive
/// train / validation / test blocks.
pub fn split<R: Rng + ?Sized>(rows: usize, sizes: SplitSizes, rng: &mut R) -> Result<Splits> {
    if sizes.total() > rows {
        return Err(Error::Dataset(format!(
            "split sizes {}+{}+{} exceed {rows} rows",
            sizes.train, sizes.validation, sizes.test
        )));
    }
    let mut idx: Vec<usize> = (0..rows).collect();
    idx.shuffle(rng);
    let test_end = sizes.total();
    let val_end = sizes.train + sizes.validation;
    Ok(Splits {
        train: idx[..sizes.train].to_vec(),
        validation: idx[sizes.train..val_end].to_vec(),
        test: idx[val_end..test_end].to_vec(),
    })
}

/// Per-feature min-max map onto `[-1, 1]`. Constant features map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxTransform {
    pub ranges: Vec<(f64, f64)>,
}

impl MinMaxTransform {
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Dataset("cannot fit normalisation on an empty split".into()))?;
        let mut ranges: Vec<(f64, f64)> = first.iter().map(|&v| (v, v)).collect();
        for row in &rows[1..] {
            for (r, &v) in ranges.iter_mut().zip(row.iter()) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        Ok(Self { ranges })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.ranges)
            .map(|(&v, &(lo, hi))| {
                if hi > lo {
                    2.0 * (v - lo) / (hi - lo) - 1.0
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Fits on the training rows only and transforms every row of the dataset.
pub fn normalize(dataset: &Dataset, splits: &Splits) -> Result<(Vec<Vec<f64>>, MinMaxTransform)> {
    let train: Vec<&[f64]> = splits
        .train
        .iter()
        .map(|&i| dataset.features[i].as_slice())
        .collect();
    let transform = MinMaxTransform::fit(&train)?;
    let all = dataset.features.iter().map(|r| transform.apply(r)).collect();
    Ok((all, transform))
}

pub fn one_hot(label: usize, classes: usize) -> Result<Vec<f64>> {
    if label >= classes {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let mut v = vec![0.0; classes];
    v[label] = 1.0;
    Ok(v)
}

/// Builds patterns for the given row indices from an already normalised
/// feature matrix.
pub fn patterns(features: &[Vec<f64>], labels: &[usize], classes: usize, rows: &[usize]) -> Result<Vec<Pattern>> {
    rows.iter()
        .map(|&i| {
            Ok(Pattern {
                input: features[i].clone(),
                target: one_hot(labels[i], classes)?,
                class: labels[i],
            })
        })
        .collect()
}

/// Per-dataset manifest: where the CSV lives, how to read it and the
/// configured split sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub header: Option<bool>,
    pub label_column: ColumnRef,
    #[serde(default)]
    pub ignored_columns: Vec<ColumnRef>,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Manifest {
    /// Reads a manifest. A relative `path` is resolved against the manifest's
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Manifest = toml::from_str(&text)?;
        if m.path.is_relative() {
            if let Some(dir) = path.parent() {
                m.path = dir.join(&m.path);
            }
        }
        Ok(m)
    }

    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            label_column: self.label_column.clone(),
            ignored_columns: self.ignored_columns.clone(),
            header: self.header,
        }
    }

    pub fn sizes(&self) -> SplitSizes {
        SplitSizes {
            train: self.train,
            validation: self.validation,
            test: self.test,
        }
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let mut ds = load_csv(&self.path, &self.schema())?;
        ds.name = self.name.clone();
        Ok(ds)
    }
}
