//! Uniformly sampled series: CSV ingestion, alignment and descriptive
//! statistics.

use std::io::Read;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

/// Minimum number of observations accepted for any series.
pub const MIN_LEN: usize = 8;

const SPACING_TOLERANCE: f64 = 1e-6;

/// A uniformly sampled, finite, real-valued series.
///
/// Series loaded from CSV carry their calendar dates. Synthetic series built
/// with [`TimeSeries::from_values`] are indexed by sample number instead; two
/// undated series are aligned on that index.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    dates: Option<Vec<NaiveDate>>,
    values: Vec<f64>,
    dt: f64,
}

impl TimeSeries {
    /// Undated series sampled every `dt` time units.
    pub fn from_values(values: Vec<f64>, dt: f64) -> Result<Self> {
        validate_values(&values)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        Ok(Self {
            dates: None,
            values,
            dt,
        })
    }

    /// Dated series. Dates must be strictly increasing and uniformly spaced
    /// (or monthly, in which case `dt` is 1.0 month).
    pub fn from_dated(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch(dates.len(), values.len()));
        }
        validate_values(&values)?;
        let dt = infer_spacing(&dates)?;
        Ok(Self {
            dates: Some(dates),
            values,
            dt,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Same timestamps, new values (used for transforms such as logs).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch(values.len(), self.values.len()));
        }
        validate_values(&values)?;
        Ok(Self {
            dates: self.dates.clone(),
            values,
            dt: self.dt,
        })
    }

    /// First differences; the first timestamp is dropped.
    pub fn diff(&self) -> Result<Self> {
        let values: Vec<f64> = self.values.windows(2).map(|w| w[1] - w[0]).collect();
        validate_values(&values)?;
        Ok(Self {
            dates: self.dates.as_ref().map(|d| d[1..].to_vec()),
            values,
            dt: self.dt,
        })
    }

    /// Natural logarithm of every value; all values must be positive.
    pub fn ln(&self) -> Result<Self> {
        if let Some(i) = self.values.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "log transform needs positive values (index {i} is {})",
                self.values[i]
            )));
        }
        self.with_values(self.values.iter().map(|v| v.ln()).collect())
    }
}

fn validate_values(values: &[f64]) -> Result<()> {
    if values.len() < MIN_LEN {
        return Err(Error::SeriesTooShort {
            len: values.len(),
            min: MIN_LEN,
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

fn is_monthly_gap(days: i64) -> bool {
    (28..=31).contains(&days)
}

fn months_between(a: NaiveDate, b: NaiveDate) -> i32 {
    (b.year() - a.year()) * 12 + b.month() as i32 - a.month() as i32
}

/// Returns the sampling interval: 1.0 for monthly data, otherwise the common
/// gap in days.
fn infer_spacing(dates: &[NaiveDate]) -> Result<f64> {
    let gaps: Vec<i64> = dates.windows(2).map(|w| (w[1] - w[0]).num_days()).collect();
    let Some(&first) = gaps.first() else {
        return Ok(1.0);
    };
    if gaps.iter().all(|&g| is_monthly_gap(g)) {
        for (i, w) in dates.windows(2).enumerate() {
            if months_between(w[0], w[1]) != 1 {
                return Err(Error::NonUniformSpacing {
                    row: i + 1,
                    next: i + 2,
                    detail: format!("{} -> {} is not one calendar month", w[0], w[1]),
                });
            }
        }
        return Ok(1.0);
    }
    for (i, &g) in gaps.iter().enumerate() {
        let rel = ((g - first) as f64).abs() / first.abs().max(1) as f64;
        if g <= 0 || rel > SPACING_TOLERANCE {
            return Err(Error::NonUniformSpacing {
                row: i + 1,
                next: i + 2,
                detail: format!("gap of {g} days, expected {first}"),
            });
        }
    }
    Ok(first as f64)
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .or_else(|| NaiveDate::parse_from_str(&format!("{raw}-01"), "%Y-%m-%d").ok())
}

/// Column selection for [`load_csv`].
#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub date_column: String,
    /// `None` picks the first column other than the date column.
    pub value_column: Option<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            date_column: "date".to_owned(),
            value_column: None,
        }
    }
}

impl CsvOptions {
    pub fn value(column: &str) -> Self {
        Self {
            value_column: Some(column.to_owned()),
            ..Self::default()
        }
    }
}

/// Reads a headed CSV with an ISO-8601 date column and one value column.
///
/// Rows are sorted by date. Row numbers in errors are 1-based data rows
/// (the header is not counted).
pub fn load_csv<R: Read>(source: R, options: &CsvOptions) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h == options.date_column)
        .ok_or_else(|| Error::MissingColumn(options.date_column.clone()))?;
    let value_idx = match &options.value_column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?,
        None => (0..headers.len())
            .find(|&i| i != date_idx)
            .ok_or_else(|| Error::MissingColumn("<value>".to_owned()))?,
    };

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let raw_date = record.get(date_idx).unwrap_or("");
        let date = parse_date(raw_date).ok_or_else(|| Error::InvalidDate {
            row,
            value: raw_date.to_owned(),
        })?;
        let raw_value = record.get(value_idx).unwrap_or("");
        if raw_value.is_empty() {
            return Err(Error::MissingValue { row });
        }
        let value: f64 = raw_value.parse().map_err(|_| Error::NonNumericValue {
            row,
            value: raw_value.to_owned(),
        })?;
        if !value.is_finite() {
            return Err(Error::NonNumericValue {
                row,
                value: raw_value.to_owned(),
            });
        }
        rows.push((date, value));
    }
    rows.sort_by_key(|&(d, _)| d);
    let (dates, values) = rows.into_iter().unzip();
    TimeSeries::from_dated(dates, values)
}

/// Restricts both series to their common timestamps.
pub fn align(a: &TimeSeries, b: &TimeSeries) -> Result<(TimeSeries, TimeSeries)> {
    let (ia, ib): (Vec<usize>, Vec<usize>) = match (&a.dates, &b.dates) {
        (Some(da), Some(db)) => {
            let mut pairs = Vec::new();
            let (mut i, mut j) = (0, 0);
            while i < da.len() && j < db.len() {
                match da[i].cmp(&db[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        pairs.push((i, j));
                        i += 1;
                        j += 1;
                    }
                }
            }
            pairs.into_iter().unzip()
        }
        (None, None) => {
            let m = a.len().min(b.len());
            ((0..m).collect(), (0..m).collect())
        }
        _ => {
            return Err(Error::InvalidParameter(
                "cannot align a dated series with an undated one".to_owned(),
            ))
        }
    };
    if ia.len() < MIN_LEN {
        return Err(Error::InsufficientOverlap {
            found: ia.len(),
            min: MIN_LEN,
        });
    }
    Ok((subset(a, &ia), subset(b, &ib)))
}

fn subset(s: &TimeSeries, idx: &[usize]) -> TimeSeries {
    TimeSeries {
        dates: s
            .dates
            .as_ref()
            .map(|d| idx.iter().map(|&i| d[i]).collect()),
        values: idx.iter().map(|&i| s.values[i]).collect(),
        dt: s.dt,
    }
}

/// Higher-moment statistics, absent for a constant series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeStats {
    Regular {
        skewness: f64,
        /// Fourth standardized moment minus 3.
        excess_kurtosis: f64,
        jarque_bera: f64,
        ljung_box: f64,
    },
    /// Zero variance: skewness, kurtosis, Jarque-Bera and Ljung-Box are undefined.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub ljung_box_lag: usize,
    pub shape: ShapeStats,
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample autocorrelation at `lag` with the usual n-denominator estimator.
pub(crate) fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    let denom: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let num: f64 = x[lag..].iter().zip(x).map(|(a, b)| (a - m) * (b - m)).sum();
    num / denom
}

/// Mean, spread, skewness, excess kurtosis, Jarque-Bera and Ljung-Box Q(`lb_lag`).
///
/// Skewness and kurtosis use n-denominator central moments.
pub fn describe(x: &TimeSeries, lb_lag: usize) -> Result<SummaryStats> {
    let v = x.values();
    let n = v.len();
    if lb_lag == 0 {
        return Err(Error::InvalidParameter(
            "Ljung-Box lag must be positive".to_owned(),
        ));
    }
    if n < lb_lag + 2 {
        return Err(Error::SeriesTooShort {
            len: n,
            min: lb_lag + 2,
        });
    }
    let nf = n as f64;
    let m = mean(v);
    let (min, max) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        });
    let m2 = v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / nf;
    let std_dev = (m2 * nf / (nf - 1.0)).sqrt();

    let shape = if m2 == 0.0 {
        ShapeStats::Degenerate
    } else {
        let m3 = v.iter().map(|a| (a - m).powi(3)).sum::<f64>() / nf;
        let m4 = v.iter().map(|a| (a - m).powi(4)).sum::<f64>() / nf;
        let skewness = m3 / m2.powf(1.5);
        let excess_kurtosis = m4 / (m2 * m2) - 3.0;
        let jarque_bera =
            nf / 6.0 * (skewness * skewness + excess_kurtosis * excess_kurtosis / 4.0);
        let ljung_box = nf
            * (nf + 2.0)
            * (1..=lb_lag)
                .map(|k| autocorrelation(v, k).powi(2) / (nf - k as f64))
                .sum::<f64>();
        ShapeStats::Regular {
            skewness,
            excess_kurtosis,
            jarque_bera,
            ljung_box,
        }
    };

    Ok(SummaryStats {
        n,
        // clamp guards min <= mean <= max against summation rounding
        mean: m.clamp(min, max),
        std_dev,
        min,
        max,
        ljung_box_lag: lb_lag,
        shape,
    })
}
