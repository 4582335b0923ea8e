//! Time-series container, CSV ingestion, log returns and forecast-error
//! criteria.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{insufficient, invalid, Error, Result};

/// Ordered, finite observations with optional per-observation labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(insufficient("time series is empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at position {i}")));
        }
        Ok(Self {
            values,
            labels: None,
        })
    }

    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(invalid(format!(
                "{} labels for {} values",
                labels.len(),
                values.len()
            )));
        }
        let mut ts = Self::new(values)?;
        ts.labels = Some(labels);
        Ok(ts)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sub-series over `range`, labels carried along.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(insufficient(format!(
                "slice {}..{} of a series of length {}",
                range.start,
                range.end,
                self.len()
            )));
        }
        Ok(Self {
            values: self.values[range.clone()].to_vec(),
            labels: self.labels.as_ref().map(|l| l[range].to_vec()),
        })
    }

    /// The `k` most recent observations ending at position `end` (exclusive).
    pub fn window(&self, end: usize, k: usize) -> Result<Self> {
        if k == 0 || k > end {
            return Err(insufficient(format!(
                "window of {k} observations ending at {end}"
            )));
        }
        self.slice(end - k..end)
    }

    /// Writes `label,value` rows with a header. Unlabelled series use the
    /// 1-based position as the label.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            let label = match &self.labels {
                Some(l) => l[i].clone(),
                None => (i + 1).to_string(),
            };
            w.write_record([label, v.to_string()])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv output>".into(),
            source: e,
        })?;
        Ok(())
    }

    /// JSON array of `{"label": ..., "value": ...}` points for plotting;
    /// `label` is omitted for unlabelled series.
    pub fn to_json_points(&self) -> serde_json::Value {
        let points = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| match &self.labels {
                Some(l) => serde_json::json!({ "label": l[i], "value": v }),
                None => serde_json::json!({ "value": v }),
            })
            .collect();
        serde_json::Value::Array(points)
    }
}

/// Column selector for [`load_csv`]: a header name, or a zero-based index
/// when the text is an integer that is not itself a header name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnRef(pub String);

impl From<&str> for ColumnRef {
    fn from(s: &str) -> Self {
        ColumnRef(s.to_string())
    }
}

impl ColumnRef {
    fn resolve(&self, headers: &csv::StringRecord) -> Option<usize> {
        if let Some(i) = headers.iter().position(|h| h.trim() == self.0) {
            return Some(i);
        }
        self.0
            .parse::<usize>()
            .ok()
            .filter(|&i| i < headers.len())
    }
}

/// Reads one numeric column (and optionally a label column) from a CSV file
/// with a header row. Data rows are numbered from 1 in error messages.
pub fn load_csv(
    path: impl AsRef<Path>,
    column: &ColumnRef,
    label_column: Option<&ColumnRef>,
) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(std::io::BufReader::new(file));
    let headers = reader.headers()?.clone();
    let missing = |c: &ColumnRef| Error::MissingColumn {
        path: path.to_path_buf(),
        column: c.0.clone(),
    };
    let col = column.resolve(&headers).ok_or_else(|| missing(column))?;
    let label_col = match label_column {
        Some(c) => Some(c.resolve(&headers).ok_or_else(|| missing(c))?),
        None => None,
    };

    let mut values = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        let cell = record.get(col).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("missing field {col}"),
        })?;
        let value = f64::from_str(cell.trim()).map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("cannot parse `{cell}` as a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("non-finite value `{cell}`"),
            });
        }
        values.push(value);
        if let (Some(lc), Some(labels)) = (label_col, labels.as_mut()) {
            labels.push(record.get(lc).unwrap_or_default().to_string());
        }
    }
    if values.is_empty() {
        return Err(insufficient(format!("{} has no data rows", path.display())));
    }
    match labels {
        Some(l) => TimeSeries::with_labels(values, l),
        None => TimeSeries::new(values),
    }
}

/// Log returns `ln p[t+1] - ln p[t]`; labels (if any) follow the later price.
pub fn log_return(prices: &TimeSeries) -> Result<TimeSeries> {
    if prices.len() < 2 {
        return Err(insufficient("log returns need at least two prices"));
    }
    if let Some(i) = prices.values().iter().position(|&p| p <= 0.0) {
        return Err(invalid(format!(
            "price at position {i} is not strictly positive"
        )));
    }
    let values = prices
        .values()
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect();
    match prices.labels() {
        Some(l) => TimeSeries::with_labels(values, l[1..].to_vec()),
        None => TimeSeries::new(values),
    }
}

/// Forecast-error criterion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Criterion {
    #[default]
    Mse,
    Mae,
    Mape,
    Rmse,
    Smape,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Mse,
        Criterion::Mae,
        Criterion::Mape,
        Criterion::Rmse,
        Criterion::Smape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Mse => "MSE",
            Criterion::Mae => "MAE",
            Criterion::Mape => "MAPE",
            Criterion::Rmse => "RMSE",
            Criterion::Smape => "SMAPE",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown criterion `{s}`")))
    }
}

/// Scores `predicted` against `actual`.
///
/// MAPE is a fraction (not a percentage); SMAPE is on the 0-100 scale.
/// Both reject an exact zero in `actual` instead of dropping the term.
pub fn evaluate(actual: &[f64], predicted: &[f64], criterion: Criterion) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(invalid(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(insufficient("cannot score an empty horizon"));
    }
    if matches!(criterion, Criterion::Mape | Criterion::Smape) {
        if let Some(index) = actual.iter().position(|&a| a == 0.0) {
            return Err(Error::ZeroActual {
                criterion: criterion.name(),
                index,
            });
        }
    }
    let h = actual.len() as f64;
    let pairs = actual.iter().zip(predicted);
    let score = match criterion {
        Criterion::Mse => pairs.map(|(a, p)| (a - p) * (a - p)).sum::<f64>() / h,
        Criterion::Rmse => (pairs.map(|(a, p)| (a - p) * (a - p)).sum::<f64>() / h).sqrt(),
        Criterion::Mae => pairs.map(|(a, p)| (a - p).abs()).sum::<f64>() / h,
        Criterion::Mape => pairs.map(|(a, p)| ((a - p) / a).abs()).sum::<f64>() / h,
        Criterion::Smape => {
            100.0 / h
                * pairs
                    .map(|(a, p)| (a - p).abs() / ((a.abs() + p.abs()) / 2.0))
                    .sum::<f64>()
        }
    };
    Ok(score)
}

/// History length `n`, development size `k` and horizon `h` for one
/// backsubsampling evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n: usize,
    pub k: usize,
    pub h: usize,
}

impl SplitSpec {
    pub fn new(n: usize, k: usize, h: usize, series_len: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(invalid(format!("development size {k} outside 1..={n}")));
        }
        if h == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        if n + h > series_len {
            return Err(insufficient(format!(
                "need n + h = {} observations, series has {series_len}",
                n + h
            )));
        }
        Ok(Self { n, k, h })
    }

    /// Index range of the development window.
    pub fn development(&self) -> std::ops::Range<usize> {
        self.n - self.k..self.n
    }

    /// Index range of the validation window.
    pub fn validation(&self) -> std::ops::Range<usize> {
        self.n..self.n + self.h
    }
}
