use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::text::SplitTag;
use crate::error::{Error, Result};
use crate::eval::SensitiveAssignment;
use crate::model::{DenseMatrix, DesignMatrix, LabelVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
    Sensitive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

fn default_true() -> bool {
    true
}

/// Declares how each CSV column is used. Columns not listed are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularSchema {
    pub columns: Vec<ColumnSpec>,
    /// Column holding `train` / `validation` / `test`. Without it rows are
    /// split 50/20/30 at random.
    #[serde(default)]
    pub split_column: Option<String>,
    /// Also one-hot encode the sensitive column as model features.
    #[serde(default = "default_true")]
    pub encode_sensitive: bool,
}

impl TabularSchema {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::config("schema.columns", format!("duplicate column `{}`", c.name)));
            }
        }
        let count = |k| self.columns.iter().filter(|c| c.kind == k).count();
        if count(ColumnKind::Label) != 1 {
            return Err(Error::config("schema.columns", "exactly one label column is required"));
        }
        if count(ColumnKind::Sensitive) > 1 {
            return Err(Error::config("schema.columns", "at most one sensitive column is supported"));
        }
        if count(ColumnKind::Numeric) + count(ColumnKind::Categorical) == 0
            && !(self.encode_sensitive && count(ColumnKind::Sensitive) == 1)
        {
            return Err(Error::config("schema.columns", "no feature columns"));
        }
        Ok(())
    }

    fn column(&self, kind: ColumnKind) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.kind == kind)
    }
}

/// Raw CSV contents as strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabularTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TabularTable {
    pub fn new(headers: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        if let Some(i) = rows.iter().position(|r| r.len() != headers.len()) {
            return Err(Error::Data(format!(
                "row {} has {} fields, header has {}",
                i + 1,
                rows[i].len(),
                headers.len()
            )));
        }
        Ok(Self { headers, rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let csv_err = |source| Error::Csv {
            path: path.to_owned(),
            source,
        };
        let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|h| h.trim().to_owned())
            .collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(|f| f.trim().to_owned()).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()
            .map_err(csv_err)?;
        Self::new(headers, rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_owned(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.headers).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("missing column `{name}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum FittedColumn {
    Numeric { name: String, min: f64, max: f64 },
    Categorical { name: String, categories: Vec<String> },
}

/// Min/max ranges and category lists learned from the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularEncoder {
    schema: TabularSchema,
    fitted: Vec<FittedColumn>,
}

/// Encoded rows of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTable {
    pub features: DesignMatrix,
    pub labels: LabelVector,
    pub sensitive: Option<SensitiveAssignment>,
}

fn parse_label(raw: &str) -> Option<u8> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "yes" => Some(1),
        "0" | "0.0" | "false" | "no" => Some(0),
        _ => None,
    }
}

impl TabularEncoder {
    /// Learns normalisation ranges and categories from `rows` of `table`
    /// (the training split).
    pub fn fit(table: &TabularTable, schema: &TabularSchema, rows: &[usize]) -> Result<Self> {
        schema.validate()?;
        if rows.is_empty() {
            return Err(Error::EmptyInput("tabular training rows"));
        }
        let mut fitted = Vec::new();
        for spec in &schema.columns {
            let col = table.column_index(&spec.name)?;
            match spec.kind {
                ColumnKind::Numeric => {
                    let mut min = f64::INFINITY;
                    let mut max = f64::NEG_INFINITY;
                    for &r in rows {
                        let v = parse_numeric(&table.rows[r][col], &spec.name, r)?;
                        min = min.min(v);
                        max = max.max(v);
                    }
                    fitted.push(FittedColumn::Numeric {
                        name: spec.name.clone(),
                        min,
                        max,
                    });
                }
                ColumnKind::Categorical | ColumnKind::Sensitive => {
                    if spec.kind == ColumnKind::Sensitive && !schema.encode_sensitive {
                        continue;
                    }
                    let categories: BTreeSet<&str> =
                        rows.iter().map(|&r| table.rows[r][col].as_str()).collect();
                    fitted.push(FittedColumn::Categorical {
                        name: spec.name.clone(),
                        categories: categories.into_iter().map(str::to_owned).collect(),
                    });
                }
                ColumnKind::Label => {}
            }
        }
        Ok(Self {
            schema: schema.clone(),
            fitted,
        })
    }

    pub fn schema(&self) -> &TabularSchema {
        &self.schema
    }

    /// Output column names: numeric columns keep their name, one-hot
    /// columns are `name=value`.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for f in &self.fitted {
            match f {
                FittedColumn::Numeric { name, .. } => names.push(name.clone()),
                FittedColumn::Categorical { name, categories } => {
                    names.extend(categories.iter().map(|c| format!("{name}={c}")))
                }
            }
        }
        names
    }

    /// Encoded feature indices derived from the source column `name`.
    pub fn columns_for(&self, name: &str) -> Option<Vec<usize>> {
        let mut offset = 0;
        for f in &self.fitted {
            let width = match f {
                FittedColumn::Numeric { .. } => 1,
                FittedColumn::Categorical { categories, .. } => categories.len(),
            };
            let fname = match f {
                FittedColumn::Numeric { name, .. } | FittedColumn::Categorical { name, .. } => name,
            };
            if fname == name {
                return Some((offset..offset + width).collect());
            }
            offset += width;
        }
        None
    }

    pub fn dim(&self) -> usize {
        self.fitted
            .iter()
            .map(|f| match f {
                FittedColumn::Numeric { .. } => 1,
                FittedColumn::Categorical { categories, .. } => categories.len(),
            })
            .sum()
    }

    /// Encodes `rows` of `table`. Numeric values are min-max scaled with the
    /// training range and clipped to [0,1]; a constant training column maps
    /// to 0. Categories unseen during fitting get an all-zero block.
    pub fn encode(&self, table: &TabularTable, rows: &[usize]) -> Result<EncodedTable> {
        let dim = self.dim();
        let label_spec = self.schema.column(ColumnKind::Label).expect("validated schema");
        let label_col = table.column_index(&label_spec.name)?;
        let sensitive_col = match self.schema.column(ColumnKind::Sensitive) {
            Some(s) => Some((s.name.clone(), table.column_index(&s.name)?)),
            None => None,
        };
        let cols = self
            .fitted
            .iter()
            .map(|f| match f {
                FittedColumn::Numeric { name, .. } | FittedColumn::Categorical { name, .. } => {
                    table.column_index(name)
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let mut data = Vec::with_capacity(rows.len() * dim);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            let record = &table.rows[r];
            for (f, &c) in self.fitted.iter().zip(&cols) {
                let raw = &record[c];
                match f {
                    FittedColumn::Numeric { name, min, max } => {
                        let v = parse_numeric(raw, name, r)?;
                        let scaled = if max > min { (v - min) / (max - min) } else { 0.0 };
                        data.push(scaled.clamp(0.0, 1.0));
                    }
                    FittedColumn::Categorical { name, categories } => {
                        let hit = categories.binary_search_by(|c| c.as_str().cmp(raw)).ok();
                        if hit.is_none() {
                            log::warn!("row {}: unseen category `{raw}` in column `{name}`", r + 1);
                        }
                        data.extend((0..categories.len()).map(|k| f64::from(u8::from(hit == Some(k)))));
                    }
                }
            }
            let label = parse_label(&record[label_col]).ok_or_else(|| {
                Error::InvalidLabels(format!(
                    "row {}: label `{}` is not 0/1",
                    r + 1,
                    record[label_col]
                ))
            })?;
            labels.push(label);
        }
        let sensitive = sensitive_col.map(|(name, c)| {
            SensitiveAssignment::new(name, rows.iter().map(|&r| table.rows[r][c].clone()).collect())
        });
        Ok(EncodedTable {
            features: DesignMatrix::Dense(DenseMatrix::new(rows.len(), dim, data)?),
            labels: LabelVector::new(labels)?,
            sensitive,
        })
    }
}

fn parse_numeric(raw: &str, column: &str, row: usize) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Data(format!("row {}: column `{column}` value `{raw}` is not a finite number", row + 1)))
}

/// Fits an encoder on `rows` and encodes the same rows.
pub fn encode_tabular(
    table: &TabularTable,
    schema: &TabularSchema,
    rows: &[usize],
) -> Result<(EncodedTable, TabularEncoder)> {
    let enc = TabularEncoder::fit(table, schema, rows)?;
    Ok((enc.encode(table, rows)?, enc))
}

/// Row indices of the train, validation and test splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabularSplits {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub const DEFAULT_TABULAR_SPLIT: [f64; 3] = [0.5, 0.2, 0.3];

/// Reads the schema's split column, or shuffles the rows with `seed` and cuts
/// them 50/20/30.
pub fn split_rows(table: &TabularTable, schema: &TabularSchema, seed: u64) -> Result<TabularSplits> {
    let mut s = TabularSplits {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    if let Some(name) = &schema.split_column {
        let col = table.column_index(name)?;
        for (i, r) in table.rows.iter().enumerate() {
            match r[col].parse::<SplitTag>()? {
                SplitTag::Train => s.train.push(i),
                SplitTag::Validation => s.validation.push(i),
                SplitTag::Test => s.test.push(i),
                other => {
                    return Err(Error::Data(format!(
                        "row {}: split `{other}` is not supported for tabular data",
                        i + 1
                    )))
                }
            }
        }
    } else {
        let mut order: Vec<usize> = (0..table.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = order.len();
        let n_train = (n as f64 * DEFAULT_TABULAR_SPLIT[0]).round() as usize;
        let n_val = (n as f64 * DEFAULT_TABULAR_SPLIT[1]).round() as usize;
        s.train = order[..n_train].to_vec();
        s.validation = order[n_train..(n_train + n_val).min(n)].to_vec();
        s.test = order[(n_train + n_val).min(n)..].to_vec();
        for v in [&mut s.train, &mut s.validation, &mut s.test] {
            v.sort_unstable();
        }
    }
    if s.train.is_empty() {
        return Err(Error::MissingSplit("train"));
    }
    if s.validation.is_empty() {
        return Err(Error::MissingSplit("validation"));
    }
    if s.test.is_empty() {
        return Err(Error::MissingSplit("test"));
    }
    Ok(s)
}
