use std::sync::Arc;

use super::data::{ColumnKind, LabeledSample, Schema, Value};
use super::PredictError;

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Matrix { rows: rows.len(), cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Numeric { col: usize, mean: f64, sd: f64 },
    Level { col: usize, level: String },
}

/// Fitted preprocessing recipe: one-hot levels for categorical columns
/// (taken from the training split; unseen levels encode as all zeros) and,
/// optionally, standardization stats for numeric ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    schema: Arc<Schema>,
    sources: Vec<Source>,
}

impl Encoder {
    pub fn fit(schema: &Arc<Schema>, samples: &[&LabeledSample], standardize: bool) -> Encoder {
        let n = samples.len() as f64;
        let mut sources = Vec::new();
        for (col, c) in schema.columns.iter().enumerate() {
            match c.kind {
                ColumnKind::Numeric => {
                    let (mean, sd) = if standardize {
                        let xs: Vec<f64> = samples.iter().map(|s| num(&s.values[col])).collect();
                        let mean = xs.iter().sum::<f64>() / n;
                        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                        (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
                    } else {
                        (0.0, 1.0)
                    };
                    sources.push(Source::Numeric { col, mean, sd });
                }
                ColumnKind::Categorical => {
                    let mut levels: Vec<&str> = samples
                        .iter()
                        .filter_map(|s| match &s.values[col] {
                            Value::Cat(l) => Some(l.as_str()),
                            Value::Num(_) => None,
                        })
                        .collect();
                    levels.sort_unstable();
                    levels.dedup();
                    sources.extend(levels.into_iter().map(|l| Source::Level { col, level: l.to_string() }));
                }
            }
        }
        Encoder { schema: schema.clone(), sources }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn width(&self) -> usize {
        self.sources.len()
    }

    /// Schema column each encoded column came from.
    pub fn parents(&self) -> Vec<usize> {
        self.sources
            .iter()
            .map(|s| match s {
                Source::Numeric { col, .. } | Source::Level { col, .. } => *col,
            })
            .collect()
    }

    pub fn check(&self, s: &LabeledSample) -> Result<(), PredictError> {
        if Arc::ptr_eq(&s.schema, &self.schema) || *s.schema == *self.schema {
            Ok(())
        } else {
            Err(PredictError::SchemaMismatch { expected: self.schema.names().join(","), found: s.schema.names().join(",") })
        }
    }

    pub fn encode_into(&self, s: &LabeledSample, out: &mut Vec<f64>) -> Result<(), PredictError> {
        self.check(s)?;
        for src in &self.sources {
            out.push(match src {
                Source::Numeric { col, mean, sd } => (num(&s.values[*col]) - mean) / sd,
                Source::Level { col, level } => match &s.values[*col] {
                    Value::Cat(l) if l == level => 1.0,
                    _ => 0.0,
                },
            });
        }
        Ok(())
    }

    pub fn encode_all(&self, samples: &[&LabeledSample]) -> Result<Matrix, PredictError> {
        let mut data = Vec::with_capacity(samples.len() * self.width());
        for s in samples {
            self.encode_into(s, &mut data)?;
        }
        Ok(Matrix { data, rows: samples.len(), cols: self.width() })
    }
}

fn num(v: &Value) -> f64 {
    v.num().expect("numeric column holds a number")
}
