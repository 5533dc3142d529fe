//! CSV ingestion with automatic column typing.

use std::collections::BTreeSet;
use std::path::Path;

use tweedie_boost::{Column, Dataset, FeatureMeta, Schema};

use crate::error::{CliError, CliResult};

/// Cell values treated as missing. Missing values are rejected.
pub const MISSING_TOKENS: &[&str] = &["", "NA", "N/A", "NaN", "nan", "NULL", "null"];

/// Column roles and typing overrides.
#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Response column; when `None` or absent from the file, responses are
    /// zero (prediction input).
    pub response: Option<String>,
    pub require_response: bool,
    pub weight: Option<String>,
    /// Columns to read as categorical even when every value is numeric.
    pub categorical: Vec<String>,
    /// Columns left out of the features.
    pub ignore: Vec<String>,
    /// Column holding the true log-mean of simulated data; kept aside and
    /// never used as a feature.
    pub truth: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: Dataset,
    pub truth: Option<Vec<f64>>,
    pub has_response: bool,
}

/// A CSV file read as a header and string cells.
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut seen = BTreeSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(CliError::data(format!("{}: duplicate column {h:?}", path.display())));
            }
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            rows.push(record.iter().map(|c| c.trim().to_string()).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn index(&self, name: &str) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data(format!("column {name:?} not found")))
    }

    /// Cell text, rejecting missing tokens with the row and column named.
    pub fn cell(&self, row: usize, col: usize) -> CliResult<&str> {
        let v = self.rows[row][col].as_str();
        if MISSING_TOKENS.contains(&v) {
            return Err(CliError::data(format!(
                "missing value at row {} (line {}), column {:?}",
                row + 1,
                row + 2,
                self.headers[col]
            )));
        }
        Ok(v)
    }

    pub fn numeric_column(&self, col: usize) -> CliResult<Vec<f64>> {
        (0..self.rows.len())
            .map(|r| {
                let v = self.cell(r, col)?;
                v.parse::<f64>().map_err(|_| {
                    CliError::data(format!(
                        "row {} (line {}), column {:?}: {v:?} is not a number",
                        r + 1,
                        r + 2,
                        self.headers[col]
                    ))
                })
            })
            .collect()
    }
}

fn parses_as_number(values: &[&str]) -> bool {
    values.iter().all(|v| v.parse::<f64>().is_ok())
}

/// Reads `path` into a dataset. A column is numeric when every cell parses
/// as a number, otherwise categorical with levels in sorted order.
pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> CliResult<Ingested> {
    let table = Table::read(path)?;
    ingest_table(&table, opts)
}

pub fn ingest_table(table: &Table, opts: &IngestOptions) -> CliResult<Ingested> {
    let n = table.rows.len();
    if n == 0 {
        return Err(CliError::data("input has no rows"));
    }
    let find = |name: &Option<String>| name.as_ref().and_then(|n| table.headers.iter().position(|h| h == n));
    let response = find(&opts.response);
    if response.is_none() && opts.require_response {
        return Err(CliError::data(format!(
            "response column {:?} not found",
            opts.response.clone().unwrap_or_default()
        )));
    }
    let weight = match &opts.weight {
        Some(name) => Some(table.index(name)?),
        None => None,
    };
    let truth = find(&opts.truth);
    for name in opts.categorical.iter().chain(&opts.ignore) {
        table.index(name)?;
    }

    let y = match response {
        Some(c) => {
            let y = table.numeric_column(c)?;
            if let Some(i) = y.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(CliError::data(format!(
                    "row {} (line {}), column {:?}: response must be >= 0, got {}",
                    i + 1,
                    i + 2,
                    table.headers[c],
                    y[i]
                )));
            }
            y
        }
        None => vec![0.0; n],
    };
    let w = match weight {
        Some(c) => {
            let w = table.numeric_column(c)?;
            if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(CliError::data(format!(
                    "row {} (line {}), column {:?}: weight must be > 0, got {}",
                    i + 1,
                    i + 2,
                    table.headers[c],
                    w[i]
                )));
            }
            w
        }
        None => vec![1.0; n],
    };
    let truth_values = match truth {
        Some(c) => Some(table.numeric_column(c)?),
        None => None,
    };

    let mut metas = Vec::new();
    let mut columns = Vec::new();
    for (j, name) in table.headers.iter().enumerate() {
        if Some(j) == response || Some(j) == weight || Some(j) == truth || opts.ignore.contains(name) {
            continue;
        }
        let cells: Vec<&str> = (0..n).map(|r| table.cell(r, j)).collect::<CliResult<_>>()?;
        if !opts.categorical.contains(name) && parses_as_number(&cells) {
            metas.push(FeatureMeta::numeric(name.clone()));
            columns.push(Column::Numeric(table.numeric_column(j)?));
        } else {
            let levels: Vec<String> = cells.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>().into_iter().collect();
            let codes = cells
                .iter()
                .map(|c| levels.binary_search_by(|l| l.as_str().cmp(c)).expect("level present") as u32)
                .collect();
            metas.push(FeatureMeta::categorical(name.clone(), levels));
            columns.push(Column::Categorical(codes));
        }
    }
    if metas.is_empty() {
        return Err(CliError::data("input has no feature columns"));
    }
    let data = Dataset::new(Schema::new(metas), columns, y, w)?;
    Ok(Ingested {
        data,
        truth: truth_values,
        has_response: response.is_some(),
    })
}
