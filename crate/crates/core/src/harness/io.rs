//! CSV ingestion and export.
//!
//! * Feature CSV: optional `#` header, then one observation per row as
//!   `label,f1,...,fm`.
//! * Similarity CSV: `n` rows of `n` reals; labels one per line in the
//!   sibling file `<name>.labels`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::synth::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    FeatureCsv,
    SimilarityCsv,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "feature" | "features" | "feature_csv" | "csv" => Ok(DataFormat::FeatureCsv),
            "similarity" | "similarity_csv" | "square" => Ok(DataFormat::SimilarityCsv),
            other => Err(Error::InvalidArgument(format!("unknown data format `{other}`"))),
        }
    }
}

/// A dataset plus whether its features are a square relational matrix (row
/// `i` of column `j` relates observations `i` and `j`).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub dataset: LabeledDataset,
    pub similarity: bool,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        message: message.into(),
    }
}

fn parse_label(field: &str, line: usize) -> Result<usize> {
    match field.trim().parse::<usize>() {
        Ok(0) | Err(_) => Err(parse_err(line, format!("label `{}` is not a positive integer", field.trim()))),
        Ok(y) => Ok(y),
    }
}

fn parse_real(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("`{}` is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{}`", field.trim())));
    }
    Ok(v)
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses feature CSV text.
pub fn parse_feature_csv(text: &str, name: &str) -> Result<LabeledDataset> {
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut width = None;
    for (line, row) in data_lines(text) {
        let mut fields = row.split(',');
        let label = parse_label(fields.next().unwrap_or(""), line)?;
        let start = values.len();
        for f in fields {
            values.push(parse_real(f, line)?);
        }
        let found = values.len() - start;
        match width {
            None if found == 0 => return Err(parse_err(line, "row has a label but no features")),
            None => width = Some(found),
            Some(expected) if expected != found => {
                return Err(Error::RaggedRow { line, expected, found });
            }
            Some(_) => {}
        }
        labels.push(label);
    }
    let Some(m) = width else {
        return Err(Error::EmptyInput);
    };
    let features = DenseMatrix::new(DMatrix::from_column_slice(m, labels.len(), &values))?;
    LabeledDataset::from_labels(features, labels, name)
}

/// Parses similarity CSV text and its label file.
pub fn parse_similarity_csv(text: &str, labels_text: &str, name: &str) -> Result<LabeledDataset> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, row) in data_lines(text) {
        let parsed = row.split(',').map(|f| parse_real(f, line)).collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != parsed.len() {
                return Err(Error::RaggedRow {
                    line,
                    expected: first.len(),
                    found: parsed.len(),
                });
            }
        }
        rows.push(parsed);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let cols = rows[0].len();
    if cols != n {
        return Err(Error::NotSquare { rows: n, cols });
    }
    let labels = data_lines(labels_text)
        .map(|(line, l)| parse_label(l, line))
        .collect::<Result<Vec<_>>>()?;
    if labels.len() != n {
        return Err(Error::LabelCountMismatch {
            labels: labels.len(),
            observations: n,
        });
    }
    // Observation j is row j of the file; it becomes column j.
    let features = DenseMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[j][i]))?;
    LabeledDataset::from_labels(features, labels, name)
}

/// The label file belonging to a similarity matrix: `<stem>.labels`, or
/// `<file>.labels` if that exists instead.
pub fn labels_path(path: &Path) -> PathBuf {
    let sibling = path.with_extension("labels");
    if sibling.exists() {
        return sibling;
    }
    let mut appended = path.as_os_str().to_owned();
    appended.push(".labels");
    let appended = PathBuf::from(appended);
    if appended.exists() {
        appended
    } else {
        sibling
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Reads a dataset from disk.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<LoadedData> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let name = dataset_name(path);
    let (dataset, similarity) = match format {
        DataFormat::FeatureCsv => (parse_feature_csv(&text, &name)?, false),
        DataFormat::SimilarityCsv => {
            let lp = labels_path(path);
            let labels = fs::read_to_string(&lp).map_err(|e| Error::Io(format!("{}: {e}", lp.display())))?;
            (parse_similarity_csv(&text, &labels, &name)?, true)
        }
    };
    Ok(LoadedData {
        dataset: dataset.with_metadata("source", path.display()),
        similarity,
    })
}

/// Renders a dataset as feature CSV. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn to_feature_csv(data: &LabeledDataset) -> String {
    let mut out = String::new();
    out.push_str("# label");
    for j in 1..=data.dim() {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for (i, col) in data.features.column_iter().enumerate() {
        let _ = write!(out, "{}", data.labels[i]);
        for v in col.iter() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_feature_csv(data: &LabeledDataset, path: &Path) -> Result<()> {
    fs::write(path, to_feature_csv(data)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
