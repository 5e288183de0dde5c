//! CSV stream ingestion.
//!
//! The file needs a header row. Feature columns hold decimal reals, the class
//! column holds tokens from the declared majority/minority label sets, and an
//! optional context column holds non-negative integers. Rows are returned in
//! file order, optionally min-max scaled per feature.

use std::path::{Path, PathBuf};

use ctxocc_core::stream::{ClassLabel, Instance};

use crate::config::{ensure, join, Reader};
use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsvSchema {
    pub path: PathBuf,
    /// Feature column names; `None` takes every column except class and context.
    pub features: Option<Vec<String>>,
    pub class_column: String,
    pub majority_labels: Vec<String>,
    pub minority_labels: Vec<String>,
    pub context_column: Option<String>,
    /// Per-feature `(min, max)` bounds for scaling to `[0, 1]`.
    pub normalization: Option<(Vec<f64>, Vec<f64>)>,
}

impl CsvSchema {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        CsvSchema {
            path: path.into(),
            features: None,
            class_column: "class".into(),
            majority_labels: vec!["0".into()],
            minority_labels: vec!["1".into()],
            context_column: None,
            normalization: None,
        }
    }

    pub(crate) fn read(r: &mut Reader) -> Result<Self> {
        let path = r
            .raw("csv.path")
            .ok_or_else(|| HarnessError::config("csv.path", "required when stream = csv"))?;
        let mut schema = CsvSchema::new(path);
        schema.features = r.list::<String>("csv.features")?;
        schema.class_column = r.get("csv.class_column", schema.class_column)?;
        if let Some(l) = r.list::<String>("csv.majority_labels")? {
            schema.majority_labels = l;
        }
        if let Some(l) = r.list::<String>("csv.minority_labels")? {
            schema.minority_labels = l;
        }
        ensure(
            schema
                .majority_labels
                .iter()
                .all(|m| !schema.minority_labels.contains(m)),
            "csv.minority_labels",
            "a label cannot be both majority and minority",
        )?;
        schema.context_column = r.opt::<String>("csv.context_column")?;
        let min = r.list::<f64>("csv.min")?;
        let max = r.list::<f64>("csv.max")?;
        schema.normalization = match (min, max) {
            (None, None) => None,
            (Some(lo), Some(hi)) => {
                ensure(
                    lo.len() == hi.len(),
                    "csv.max",
                    "csv.min and csv.max need the same length",
                )?;
                ensure(
                    lo.iter().zip(&hi).all(|(a, b)| b > a),
                    "csv.max",
                    "every max must exceed its min",
                )?;
                Some((lo, hi))
            }
            (Some(_), None) => {
                return Err(HarnessError::config(
                    "csv.max",
                    "required alongside csv.min",
                ))
            }
            (None, Some(_)) => {
                return Err(HarnessError::config(
                    "csv.min",
                    "required alongside csv.max",
                ))
            }
        };
        Ok(schema)
    }

    pub(crate) fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![("csv.path".to_string(), self.path.display().to_string())];
        if let Some(f) = &self.features {
            kv.push(("csv.features".into(), join(f)));
        }
        kv.push(("csv.class_column".into(), self.class_column.clone()));
        kv.push(("csv.majority_labels".into(), join(&self.majority_labels)));
        kv.push(("csv.minority_labels".into(), join(&self.minority_labels)));
        if let Some(c) = &self.context_column {
            kv.push(("csv.context_column".into(), c.clone()));
        }
        if let Some((lo, hi)) = &self.normalization {
            kv.push(("csv.min".into(), join(lo)));
            kv.push(("csv.max".into(), join(hi)));
        }
        kv
    }
}

fn schema_error(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| schema_error(path, format!("no column named '{name}'")))
}

/// Reads the whole file described by `schema`.
pub fn read_csv_stream(schema: &CsvSchema) -> Result<Vec<Instance>> {
    let path = schema.path.as_path();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| {
            HarnessError::io(
                format!("opening {}", path.display()),
                std::io::Error::other(e),
            )
        })?;
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let class = column(&headers, &schema.class_column, path)?;
    let context = schema
        .context_column
        .as_deref()
        .map(|c| column(&headers, c, path))
        .transpose()?;
    let features: Vec<usize> = match &schema.features {
        Some(names) => names
            .iter()
            .map(|n| column(&headers, n, path))
            .collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|i| *i != class && Some(*i) != context)
            .collect(),
    };
    if features.is_empty() {
        return Err(schema_error(path, "no feature columns"));
    }
    if let Some((lo, _)) = &schema.normalization {
        if lo.len() != features.len() {
            return Err(schema_error(
                path,
                format!(
                    "{} normalization bounds for {} features",
                    lo.len(),
                    features.len()
                ),
            ));
        }
    }

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut x = Vec::with_capacity(features.len());
        for (k, &i) in features.iter().enumerate() {
            let raw = record.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                parse_error(
                    path,
                    line,
                    format!("'{raw}' in column '{}' is not a number", &headers[i]),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_error(
                    path,
                    line,
                    format!("non-finite value '{raw}' in column '{}'", &headers[i]),
                ));
            }
            x.push(match &schema.normalization {
                Some((lo, hi)) => (v - lo[k]) / (hi[k] - lo[k]),
                None => v,
            });
        }
        let token = record.get(class).unwrap_or("");
        let label = if schema.majority_labels.iter().any(|l| l == token) {
            ClassLabel::Majority
        } else if schema.minority_labels.iter().any(|l| l == token) {
            ClassLabel::Minority
        } else {
            return Err(schema_error(
                path,
                format!("line {line}: unknown class token '{token}'"),
            ));
        };
        let ctx = match context {
            Some(c) => {
                let raw = record.get(c).unwrap_or("");
                Some(raw.parse::<usize>().map_err(|_| {
                    parse_error(
                        path,
                        line,
                        format!("context '{raw}' is not a non-negative integer"),
                    )
                })?)
            }
            None => None,
        };
        out.push(Instance::labelled(x, label, ctx));
    }
    Ok(out)
}
