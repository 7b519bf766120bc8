//! Aligned observation series `(Y, X, V)` and their CSV ingestion.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Aligned response `y`, regressors `x` (n×d) and nonstationary covariate `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    y: Vec<f64>,
    x: DMatrix<f64>,
    v: Vec<f64>,
    labels: Option<Labels>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    pub y: String,
    pub x: Vec<String>,
    pub v: String,
}

impl TimeSeriesDataset {
    /// Builds a dataset, rejecting anything [`TimeSeriesDataset::validate`]
    /// reports as an error.
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, v: Vec<f64>) -> Result<Self> {
        let ds = Self::new_unchecked(y, x, v);
        let report = ds.validate();
        if let Some(first) = report.errors().next() {
            return Err(Error::Dataset(first.to_string()));
        }
        Ok(ds)
    }

    /// Builds a dataset without checking lengths or finiteness.
    pub fn new_unchecked(y: Vec<f64>, x: DMatrix<f64>, v: Vec<f64>) -> Self {
        Self {
            y,
            x,
            v,
            labels: None,
        }
    }

    /// Convenience constructor for a single regressor column.
    pub fn univariate(y: Vec<f64>, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let n = x.len();
        Self::new(y, DMatrix::from_vec(n, 1, x), v)
    }

    pub fn with_labels(mut self, labels: Labels) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Number of regressors `d`.
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    /// Lists structural problems and warnings. Never mutates the dataset.
    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        let n = self.y.len();
        if n == 0 {
            findings.push(Finding::Empty);
        }
        if self.x.ncols() == 0 {
            findings.push(Finding::NoRegressors);
        }
        if self.x.nrows() != n {
            findings.push(Finding::LengthMismatch {
                series: "x",
                len: self.x.nrows(),
                expected: n,
            });
        }
        if self.v.len() != n {
            findings.push(Finding::LengthMismatch {
                series: "v",
                len: self.v.len(),
                expected: n,
            });
        }
        let mut non_finite = |series: &'static str, column: Option<usize>, values: &[f64]| {
            if let Some(index) = values.iter().position(|z| !z.is_finite()) {
                findings.push(Finding::NonFinite {
                    series,
                    column,
                    index,
                });
            }
        };
        non_finite("y", None, &self.y);
        non_finite("v", None, &self.v);
        for (j, col) in self.x.column_iter().enumerate() {
            non_finite("x", Some(j), col.as_slice());
        }
        for (j, col) in self.x.column_iter().enumerate() {
            if let Some(&first) = col.iter().next() {
                if col.len() > 1 && col.iter().all(|&z| z == first) {
                    findings.push(Finding::ConstantRegressor { column: j });
                }
            }
        }
        ValidationReport { findings }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    Empty,
    NoRegressors,
    LengthMismatch {
        series: &'static str,
        len: usize,
        expected: usize,
    },
    NonFinite {
        series: &'static str,
        column: Option<usize>,
        index: usize,
    },
    /// Warning: the smoothed design is singular for a constant column.
    ConstantRegressor {
        column: usize,
    },
}

impl Finding {
    pub fn is_error(&self) -> bool {
        !matches!(self, Finding::ConstantRegressor { .. })
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::Empty => write!(f, "dataset has no observations"),
            Finding::NoRegressors => write!(f, "dataset has no regressor columns"),
            Finding::LengthMismatch {
                series,
                len,
                expected,
            } => write!(
                f,
                "length mismatch: {series} has {len} rows, expected {expected}"
            ),
            Finding::NonFinite {
                series,
                column: Some(c),
                index,
            } => write!(f, "non-finite value in {series}[{c}] at index {index}"),
            Finding::NonFinite {
                series,
                column: None,
                index,
            } => write!(f, "non-finite value in {series} at index {index}"),
            Finding::ConstantRegressor { column } => {
                write!(f, "constant regressor in x column {column}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.is_error())
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| !f.is_error())
    }
}

/// Column selection for [`load_csv`]. With a header row the entries are
/// column names; without one they are 0-based column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub y_column: String,
    pub x_columns: Vec<String>,
    pub v_column: String,
    pub has_header: bool,
}

impl ColumnSchema {
    pub fn new(
        y_column: impl Into<String>,
        x_columns: Vec<String>,
        v_column: impl Into<String>,
    ) -> Self {
        Self {
            y_column: y_column.into(),
            x_columns,
            v_column: v_column.into(),
            has_header: true,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.x_columns.is_empty() {
            return Err(Error::Schema("x_columns must be nonempty".into()));
        }
        let mut names: Vec<&str> = self.x_columns.iter().map(String::as_str).collect();
        names.push(&self.y_column);
        names.push(&self.v_column);
        let mut sorted = names.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Schema(format!("column `{}` selected twice", w[0])));
        }
        Ok(())
    }
}

/// Loads the `(y, x, v)` columns named by `schema` from a comma-separated file.
pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, schema: &ColumnSchema) -> Result<TimeSeriesDataset> {
    schema.check()?;
    let mut names = vec![schema.y_column.clone(), schema.v_column.clone()];
    names.extend(schema.x_columns.iter().cloned());
    let mut columns = read_columns(reader, &names, schema.has_header)?;
    let x_cols = columns.split_off(2);
    let v = columns.pop().unwrap_or_default();
    let y = columns.pop().unwrap_or_default();
    let n = y.len();
    let x = DMatrix::from_fn(n, x_cols.len(), |t, j| x_cols[j][t]);
    let ds = TimeSeriesDataset::new(y, x, v)?;
    Ok(ds.with_labels(Labels {
        y: schema.y_column.clone(),
        x: schema.x_columns.clone(),
        v: schema.v_column.clone(),
    }))
}

/// One numeric column, by name or (without a header) 0-based index.
pub fn load_series(path: impl AsRef<Path>, column: &str, has_header: bool) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut columns = read_columns(file, &[column.to_owned()], has_header)?;
    let series = columns.pop().unwrap_or_default();
    if series.is_empty() {
        return Err(Error::Dataset(format!("column `{column}` has no rows")));
    }
    Ok(series)
}

fn read_columns<R: std::io::Read>(
    reader: R,
    names: &[String],
    has_header: bool,
) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(b',')
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if has_header {
        Some(rdr.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };
    let resolve = |name: &str| -> Result<usize> {
        match &header {
            Some(h) => h
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingColumn {
                    column: name.to_owned(),
                }),
            None => name.parse::<usize>().map_err(|_| {
                Error::Schema(format!(
                    "`{name}` is not a column index (file has no header row)"
                ))
            }),
        }
    };
    let indices = names
        .iter()
        .map(|c| resolve(c))
        .collect::<Result<Vec<_>>>()?;

    let mut columns = vec![Vec::new(); names.len()];
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        for ((&idx, name), out) in indices.iter().zip(names).zip(columns.iter_mut()) {
            let parse_error = |message: String| Error::Parse {
                row,
                column: name.clone(),
                message,
            };
            let raw = match record.get(idx) {
                Some(raw) if !raw.is_empty() => raw,
                _ => return Err(parse_error("missing value".into())),
            };
            let value: f64 = raw
                .parse()
                .map_err(|_| parse_error(format!("`{raw}` is not a number")))?;
            if !value.is_finite() {
                return Err(parse_error(format!("`{raw}` is not finite")));
            }
            out.push(value);
        }
    }
    Ok(columns)
}

/// Writes the dataset as `y,x...,v` with a header row. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: std::io::Write>(ds: &TimeSeriesDataset, writer: W) -> Result<()> {
    let labels = ds.labels().cloned().unwrap_or_else(|| Labels {
        y: "y".into(),
        x: (0..ds.dim())
            .map(|j| {
                if ds.dim() == 1 {
                    "x".into()
                } else {
                    format!("x{j}")
                }
            })
            .collect(),
        v: "v".into(),
    });
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![labels.y.clone()];
    header.extend(labels.x.iter().cloned());
    header.push(labels.v.clone());
    wtr.write_record(&header)?;
    for t in 0..ds.len() {
        let mut row = Vec::with_capacity(ds.dim() + 2);
        row.push(ds.y[t].to_string());
        row.extend((0..ds.dim()).map(|j| ds.x[(t, j)].to_string()));
        row.push(ds.v[t].to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
