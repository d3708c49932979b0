use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColumnKind, LabeledDataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Column layout of a CSV file, matching the sidecar JSON
/// `{"columns":[{"name":..,"kind":"continuous"|"categorical"}],"label":"<name>"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<ColumnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_header")]
    pub header: bool,
}

fn default_header() -> bool {
    true
}

impl DatasetSchema {
    pub fn new(columns: Vec<ColumnSpec>, label: Option<String>) -> Result<Self> {
        let schema = Self { columns, label, header: true };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let schema: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(label) = &self.label {
            match self.columns.iter().filter(|c| &c.name == label).count() {
                0 => return Err(Error::SchemaMismatch(format!("label column {label:?} is not a schema column"))),
                1 => {}
                _ => return Err(Error::SchemaMismatch(format!("label column {label:?} appears more than once"))),
            }
        }
        if self.feature_count() == 0 {
            return Err(Error::SchemaMismatch("schema has no feature columns".into()));
        }
        Ok(())
    }

    fn label_position(&self) -> Option<usize> {
        let label = self.label.as_ref()?;
        self.columns.iter().position(|c| &c.name == label)
    }

    pub fn feature_count(&self) -> usize {
        self.columns.len() - usize::from(self.label.is_some())
    }
}

/// Integer codes by first appearance.
#[derive(Default)]
struct Encoder {
    codes: HashMap<String, usize>,
    names: Vec<String>,
}

impl Encoder {
    fn encode(&mut self, token: &str) -> f64 {
        if let Some(&c) = self.codes.get(token) {
            return c as f64;
        }
        let c = self.names.len();
        self.codes.insert(token.to_string(), c);
        self.names.push(token.to_string());
        c as f64
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<LabeledDataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.header)
        .flexible(true)
        .from_path(path)?;
    if schema.header {
        let header = reader.headers()?.clone();
        let names: Vec<&str> = header.iter().map(str::trim).collect();
        let expected: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
        if names != expected {
            return Err(Error::SchemaMismatch(format!("header {names:?} does not match schema columns {expected:?}")));
        }
    }

    let label_pos = schema.label_position();
    let ncols = schema.columns.len();
    let mut encoders: Vec<Encoder> = (0..ncols).map(|_| Encoder::default()).collect();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut nrows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != ncols {
            return Err(Error::SchemaMismatch(format!("row {row} has {} fields, schema has {ncols}", record.len())));
        }
        for (j, (token, spec)) in record.iter().zip(&schema.columns).enumerate() {
            let token = token.trim();
            let parse_err = |message: String| Error::Parse { row, column: spec.name.clone(), message };
            if token.is_empty() {
                return Err(parse_err("missing value".into()));
            }
            let value = match spec.kind {
                ColumnKind::Continuous => {
                    let v: f64 = token.parse().map_err(|_| parse_err(format!("{token:?} is not a number")))?;
                    if !v.is_finite() {
                        return Err(parse_err(format!("{token:?} is not finite")));
                    }
                    v
                }
                ColumnKind::Categorical => encoders[j].encode(token),
            };
            if Some(j) == label_pos {
                labels.push(value);
            } else {
                data.push(value);
            }
        }
        nrows += 1;
    }

    let d = schema.feature_count();
    let features = Matrix::new(nrows, d, data)?;
    let feature_cols: Vec<usize> = (0..ncols).filter(|&j| Some(j) != label_pos).collect();
    let kinds = feature_cols.iter().map(|&j| schema.columns[j].kind).collect();
    let names = feature_cols.iter().map(|&j| schema.columns[j].name.clone()).collect();
    let categories = feature_cols.iter().map(|&j| std::mem::take(&mut encoders[j].names)).collect();
    let label_categories = label_pos
        .filter(|&j| schema.columns[j].kind == ColumnKind::Categorical)
        .map(|j| std::mem::take(&mut encoders[j].names));

    let ds = match label_pos {
        Some(_) => LabeledDataset::new(features, labels)?,
        None => LabeledDataset::unlabeled(features)?,
    };
    Ok(ds.with_column_kinds(kinds)?.with_feature_names(names)?.with_categories(categories, label_categories))
}

/// Writes a dataset so that `load_csv` with `schema` reproduces it.
pub fn write_csv(path: impl AsRef<Path>, data: &LabeledDataset, schema: &DatasetSchema) -> Result<()> {
    schema.validate()?;
    if schema.feature_count() != data.dim() {
        return Err(Error::SchemaMismatch(format!(
            "schema has {} feature columns, dataset has {}",
            schema.feature_count(),
            data.dim()
        )));
    }
    let label_pos = schema.label_position();
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    if schema.header {
        writer.write_record(schema.columns.iter().map(|c| c.name.as_str()))?;
    }
    let render = |v: f64, kind: ColumnKind, names: Option<&[String]>| -> String {
        match (kind, names) {
            (ColumnKind::Categorical, Some(names)) if !names.is_empty() => names[v as usize].clone(),
            _ => format!("{v:?}"),
        }
    };
    for i in 0..data.len() {
        let mut fields = Vec::with_capacity(schema.columns.len());
        let mut f = 0;
        for (j, spec) in schema.columns.iter().enumerate() {
            if Some(j) == label_pos {
                fields.push(render(data.labels()[i], spec.kind, data.label_categories()));
            } else {
                fields.push(render(data.row(i)[f], spec.kind, Some(&data.categories()[f])));
                f += 1;
            }
        }
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}
