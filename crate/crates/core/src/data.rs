//! Column-typed predictor table with response and exposure weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Code used for a categorical level that is absent from the dictionary.
/// It is never part of a split's left set, so such rows route right.
pub const UNSEEN_LEVEL: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureMeta {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical { levels },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }

    pub fn n_levels(&self) -> usize {
        match &self.kind {
            FeatureKind::Numeric => 0,
            FeatureKind::Categorical { levels } => levels.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<FeatureMeta>,
}

impl Schema {
    pub fn new(features: Vec<FeatureMeta>) -> Self {
        Self { features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// Level codes into the schema's dictionary.
    Categorical(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value as used by split rules: the number itself, or the level code.
    #[inline]
    pub fn value(&self, row: usize) -> f64 {
        match self {
            Column::Numeric(v) => v[row],
            Column::Categorical(v) => v[row] as f64,
        }
    }

    pub fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Column::Categorical(v) => Column::Categorical(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// `n` policies: predictors `x_i`, pure premium `y_i >= 0`, exposure `w_i > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<Column>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Dataset {
    pub fn new(schema: Schema, columns: Vec<Column>, y: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if schema.len() != columns.len() {
            return Err(Error::data(format!(
                "schema has {} features but {} columns were supplied",
                schema.len(),
                columns.len()
            )));
        }
        if w.len() != n {
            return Err(Error::data(format!("{} responses but {} weights", n, w.len())));
        }
        for (meta, col) in schema.features.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::data(format!(
                    "column '{}' has {} rows, expected {n}",
                    meta.name,
                    col.len()
                )));
            }
            match (&meta.kind, col) {
                (FeatureKind::Numeric, Column::Numeric(v)) => {
                    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                        return Err(Error::data(format!(
                            "column '{}' row {i}: non-finite value {}",
                            meta.name, v[i]
                        )));
                    }
                }
                (FeatureKind::Categorical { levels }, Column::Categorical(codes)) => {
                    if let Some(i) = codes
                        .iter()
                        .position(|&c| c != UNSEEN_LEVEL && c as usize >= levels.len())
                    {
                        return Err(Error::data(format!(
                            "column '{}' row {i}: level code {} outside dictionary of {}",
                            meta.name,
                            codes[i],
                            levels.len()
                        )));
                    }
                }
                _ => {
                    return Err(Error::data(format!(
                        "column '{}' storage does not match its declared kind",
                        meta.name
                    )))
                }
            }
        }
        if let Some(i) = y.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::data(format!("row {i}: response must be finite and >= 0, got {}", y[i])));
        }
        if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::data(format!("row {i}: weight must be finite and > 0, got {}", w[i])));
        }
        Ok(Self { schema, columns, y, w })
    }

    /// All-numeric dataset with unit weights when `w` is `None`.
    pub fn from_numeric(
        names: &[&str],
        columns: Vec<Vec<f64>>,
        y: Vec<f64>,
        w: Option<Vec<f64>>,
    ) -> Result<Self> {
        let schema = Schema::new(names.iter().map(|n| FeatureMeta::numeric(*n)).collect());
        let n = y.len();
        let w = w.unwrap_or_else(|| vec![1.0; n]);
        Self::new(schema, columns.into_iter().map(Column::Numeric).collect(), y, w)
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature].value(row)
    }

    /// Writes row `i` into `buf` in split-rule encoding.
    pub fn fill_row(&self, row: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.columns.iter().map(|c| c.value(row)));
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.n_features());
        self.fill_row(row, &mut buf);
        buf
    }

    /// Rows `rows` in the given order, sharing the schema.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            w: rows.iter().map(|&i| self.w[i]).collect(),
        }
    }

    /// Appends extra feature columns (used for permutation shadows).
    pub fn with_extra_features(&self, extra: Vec<(FeatureMeta, Column)>) -> Result<Dataset> {
        let mut schema = self.schema.clone();
        let mut columns = self.columns.clone();
        for (meta, col) in extra {
            schema.features.push(meta);
            columns.push(col);
        }
        Dataset::new(schema, columns, self.y.clone(), self.w.clone())
    }

    /// Same rows with the response replaced.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.schema.clone(), self.columns.clone(), y, self.w.clone())
    }

    /// Re-encodes this dataset against `target`: features are matched by
    /// name and categorical levels by label. Labels missing from the target
    /// dictionary become [`UNSEEN_LEVEL`].
    pub fn align_to(&self, target: &Schema) -> Result<Dataset> {
        let mut columns = Vec::with_capacity(target.len());
        for meta in &target.features {
            let j = self.schema.index_of(&meta.name).ok_or_else(|| {
                Error::SchemaMismatch(format!("feature '{}' missing from data", meta.name))
            })?;
            let col = match (&meta.kind, &self.schema.features[j].kind, &self.columns[j]) {
                (FeatureKind::Numeric, FeatureKind::Numeric, c) => c.clone(),
                (
                    FeatureKind::Categorical { levels: want },
                    FeatureKind::Categorical { levels: have },
                    Column::Categorical(codes),
                ) => {
                    let map: Vec<u32> = have
                        .iter()
                        .map(|l| {
                            want.iter()
                                .position(|x| x == l)
                                .map_or(UNSEEN_LEVEL, |p| p as u32)
                        })
                        .collect();
                    Column::Categorical(
                        codes
                            .iter()
                            .map(|&c| if c == UNSEEN_LEVEL { c } else { map[c as usize] })
                            .collect(),
                    )
                }
                (FeatureKind::Categorical { levels: want }, FeatureKind::Numeric, Column::Numeric(v)) => {
                    // Numeric-looking labels of a categorical training column.
                    Column::Categorical(
                        v.iter()
                            .map(|x| {
                                let label = format_number_label(*x);
                                want.iter()
                                    .position(|l| *l == label)
                                    .map_or(UNSEEN_LEVEL, |p| p as u32)
                            })
                            .collect(),
                    )
                }
                _ => {
                    return Err(Error::SchemaMismatch(format!(
                        "feature '{}' is categorical in one schema and numeric in the other",
                        meta.name
                    )))
                }
            };
            columns.push(col);
        }
        Dataset::new(target.clone(), columns, self.y.clone(), self.w.clone())
    }
}

fn format_number_label(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed() -> Dataset {
        let schema = Schema::new(vec![
            FeatureMeta::numeric("age"),
            FeatureMeta::categorical("area", vec!["rural".into(), "urban".into()]),
        ]);
        Dataset::new(
            schema,
            vec![
                Column::Numeric(vec![30.0, 40.0, 50.0]),
                Column::Categorical(vec![0, 1, 1]),
            ],
            vec![0.0, 1.0, 2.0],
            vec![1.0, 1.0, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        let ok = mixed();
        assert!(ok.with_response(vec![0.0, -1.0, 2.0]).is_err());
        assert!(Dataset::from_numeric(&["x"], vec![vec![1.0, f64::NAN]], vec![0.0, 1.0], None).is_err());
        assert!(Dataset::from_numeric(&["x"], vec![vec![1.0, 2.0]], vec![0.0, 1.0], Some(vec![1.0, 0.0])).is_err());
        assert!(Dataset::from_numeric(&["x"], vec![vec![1.0]], vec![0.0, 1.0], None).is_err());
    }

    #[test]
    fn subset_keeps_schema() {
        let d = mixed();
        let s = d.subset(&[2, 0]);
        assert_eq!(s.y(), &[2.0, 0.0]);
        assert_eq!(s.w(), &[0.5, 1.0]);
        assert_eq!(s.row(0), vec![50.0, 1.0]);
        assert_eq!(s.schema(), d.schema());
    }

    #[test]
    fn align_maps_levels_by_label() {
        let d = mixed();
        let other = Schema::new(vec![
            FeatureMeta::categorical("area", vec!["urban".into()]),
            FeatureMeta::numeric("age"),
        ]);
        let a = d.align_to(&other).unwrap();
        assert_eq!(a.column(0), &Column::Categorical(vec![UNSEEN_LEVEL, 0, 0]));
        assert_eq!(a.column(1), &Column::Numeric(vec![30.0, 40.0, 50.0]));
        let missing = Schema::new(vec![FeatureMeta::numeric("income")]);
        assert!(matches!(d.align_to(&missing), Err(Error::SchemaMismatch(_))));
    }
}
