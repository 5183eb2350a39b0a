use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::geo::LatLon;
use crate::ingest::{ward_centroid_distance, Edition, ImdTable, WardSet};
use crate::metrics::{WardMetricsPanel, WardMetricsRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureClass {
    /// Never ablated.
    Baseline,
    Geographic,
    Network,
    Expenditure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub class: FeatureClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Schema {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }
}

/// The ward feature set, in column order.
pub fn ward_feature_schema() -> Schema {
    use ColumnKind::*;
    use FeatureClass::*;
    let col = |name: &str, kind, class| Column { name: name.into(), kind, class };
    Schema {
        columns: vec![
            col("InitialIMD", Numeric, Baseline),
            col("SubRegion", Categorical, Geographic),
            col("Area", Numeric, Geographic),
            col("Distance", Numeric, Geographic),
            col("GRVC", Numeric, Geographic),
            col("GRN", Numeric, Network),
            col("GRI", Numeric, Network),
            col("GRO", Numeric, Network),
            col("GRIOR", Numeric, Network),
            col("GRACC", Numeric, Network),
            col("CEA", Numeric, Expenditure),
            col("CEOP", Numeric, Expenditure),
            col("CECH", Numeric, Expenditure),
            col("CELS", Numeric, Expenditure),
            col("CERS", Numeric, Expenditure),
            col("CET", Numeric, Expenditure),
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Cat(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub ward_code: String,
    pub schema: Arc<Schema>,
    pub values: Vec<Value>,
    /// Deprivation rank rose (the area became less deprived).
    pub improved: bool,
    /// IMD 2015 rank minus IMD 2010 rank.
    pub delta_rank: i64,
}

impl LabeledSample {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.schema.position(name).map(|i| &self.values[i])
    }
}

/// Samples sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Arc<Schema>,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    /// Panics if a sample's values do not fit the schema.
    pub fn new(schema: Schema, rows: impl IntoIterator<Item = (String, Vec<Value>, bool, i64)>) -> Self {
        let schema = Arc::new(schema);
        let samples = rows
            .into_iter()
            .map(|(ward_code, values, improved, delta_rank)| {
                assert_eq!(values.len(), schema.len(), "sample {ward_code} does not fit the schema");
                LabeledSample { ward_code, schema: schema.clone(), values, improved, delta_rank }
            })
            .collect();
        Dataset { schema, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.improved).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.samples.iter().filter(|s| s.improved).count();
        (pos, self.len() - pos)
    }

    fn rebuild(&self, columns: Vec<usize>, schema: Schema, f: impl Fn(usize, &Value) -> Value) -> Dataset {
        let schema = Arc::new(schema);
        let samples = self
            .samples
            .iter()
            .map(|s| LabeledSample {
                schema: schema.clone(),
                values: columns.iter().map(|&c| f(c, &s.values[c])).collect(),
                ..s.clone()
            })
            .collect();
        Dataset { schema, samples }
    }

    /// Drops every column of the given class.
    pub fn without_class(&self, class: FeatureClass) -> Dataset {
        let keep: Vec<usize> = (0..self.schema.len()).filter(|&i| self.schema.columns[i].class != class).collect();
        let schema = Schema { columns: keep.iter().map(|&i| self.schema.columns[i].clone()).collect() };
        self.rebuild(keep, schema, |_, v| v.clone())
    }

    /// Applies `f` to one numeric column and renames it, producing a new
    /// schema: models trained on the original refuse the result.
    pub fn map_numeric(&self, name: &str, new_name: &str, f: impl Fn(f64) -> f64) -> Option<Dataset> {
        let at = self.schema.position(name)?;
        let mut schema = (*self.schema).clone();
        schema.columns[at].name = new_name.to_string();
        Some(self.rebuild((0..self.schema.len()).collect(), schema, |c, v| match v {
            Value::Num(x) if c == at => Value::Num(f(*x)),
            other => other.clone(),
        }))
    }

    pub fn subset(&self, keep: impl Fn(&LabeledSample) -> bool) -> Dataset {
        Dataset { schema: self.schema.clone(), samples: self.samples.iter().filter(|s| keep(s)).cloned().collect() }
    }
}

/// Samples whose rank moved by more than `threshold` places.
pub fn subset_by_change(data: &Dataset, threshold: u32) -> Dataset {
    data.subset(|s| s.delta_rank.unsigned_abs() > threshold as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledDataset {
    pub dataset: Dataset,
    /// Wards left out, by reason.
    pub excluded: BTreeMap<String, usize>,
}

fn mean_of(rows: &[WardMetricsRow], f: impl Fn(&WardMetricsRow) -> Option<f64>) -> Option<f64> {
    let vals: Option<Vec<f64>> = rows.iter().map(f).collect();
    vals.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Builds one labelled sample per ward with complete features. Growth
/// features compare the last period with the first; expenditure features are
/// means over all periods.
pub fn assemble_dataset(panel: &WardMetricsPanel, imd: &ImdTable, wards: &WardSet, centre: LatLon) -> AssembledDataset {
    let imd10 = imd.edition(Edition::Imd2010);
    let imd15 = imd.edition(Edition::Imd2015);
    let mut excluded: BTreeMap<String, usize> = BTreeMap::new();
    let mut bump = |r: &str| *excluded.entry(r.to_string()).or_default() += 1;
    let mut rows = Vec::new();
    for code in panel.ward_codes() {
        let (Some(&(_, r10)), Some(&(_, r15))) = (imd10.get(code.as_str()), imd15.get(code.as_str())) else {
            bump("missing IMD edition");
            continue;
        };
        let delta = r15 as i64 - r10 as i64;
        if delta == 0 {
            bump("unchanged rank");
            continue;
        }
        let Some(ward) = wards.lookup(code).map(|w| wards.get(w)) else {
            bump("ward not in boundaries");
            continue;
        };
        let wr = panel.ward_rows(code).expect("panel ward");
        let g = panel.endpoint_growth(code).unwrap_or_default();
        let numeric = [
            Some(r10 as f64),
            Some(ward.area_km2),
            Some(ward_centroid_distance(ward, centre).km),
            g.grvc,
            g.grn,
            g.gri,
            g.gro,
            g.grior,
            g.gracc,
            mean_of(wr, |r| r.cea),
            mean_of(wr, |r| r.ceop),
            mean_of(wr, |r| r.cech),
            mean_of(wr, |r| r.cels),
            mean_of(wr, |r| r.cers),
            mean_of(wr, |r| r.cet),
        ];
        let Some(numeric) = numeric.into_iter().map(|v| v.filter(|x| x.is_finite())).collect::<Option<Vec<f64>>>()
        else {
            bump("missing feature");
            continue;
        };
        let mut values = vec![Value::Num(numeric[0]), Value::Cat(ward.sub_region.clone())];
        values.extend(numeric[1..].iter().map(|&x| Value::Num(x)));
        rows.push((code.clone(), values, delta > 0, delta));
    }
    AssembledDataset { dataset: Dataset::new(ward_feature_schema(), rows), excluded }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let rows = (0..10).map(|i| {
            let mut v = vec![Value::Num(i as f64), Value::Cat(["E", "W"][i % 2].into())];
            v.extend((0..14).map(|j| Value::Num((i * j) as f64)));
            (format!("w{i}"), v, i % 3 == 0, (i as i64 - 5) * 7)
        });
        Dataset::new(ward_feature_schema(), rows)
    }

    #[test]
    fn schema_counts() {
        let s = ward_feature_schema();
        assert_eq!(s.len(), 16);
        let d = toy();
        assert_eq!(d.without_class(FeatureClass::Geographic).schema.len(), 12);
        assert_eq!(d.without_class(FeatureClass::Network).schema.len(), 11);
        assert_eq!(d.without_class(FeatureClass::Expenditure).schema.len(), 10);
    }

    #[test]
    fn subsets_nest() {
        let d = toy();
        assert_eq!(subset_by_change(&d, 0).len(), 9); // delta 0 at i = 5
        let sizes: Vec<usize> = [0, 10, 20, 30, 40].iter().map(|&t| subset_by_change(&d, t).len()).collect();
        assert!(sizes.windows(2).all(|w| w[1] <= w[0]));
        let big = subset_by_change(&d, 40);
        assert!(big.samples.iter().all(|s| s.delta_rank.abs() > 40));
    }

    #[test]
    fn mapped_column_changes_schema() {
        let d = toy();
        let m = d.map_numeric("CEA", "log1p(CEA)", f64::ln_1p).unwrap();
        assert_ne!(m.schema, d.schema);
        assert_eq!(m.samples[3].get("log1p(CEA)"), Some(&Value::Num((24.0f64).ln_1p())));
    }
}
