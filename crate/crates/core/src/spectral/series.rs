use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A uniformly sampled real signal. `dt` is in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    samples: Vec<f64>,
    dt: f64,
    label: String,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, dt: f64, label: impl Into<String>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidSeries(format!("dt must be positive, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(k) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite sample at index {k}")));
        }
        Ok(Self {
            samples,
            dt,
            label: label.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance (1/n normalization).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / self.len() as f64
    }

    /// Circular sample autocovariance at `lag` samples, mean removed.
    pub fn autocovariance(&self, lag: usize) -> f64 {
        let n = self.len();
        let m = self.mean();
        (0..n)
            .map(|k| (self.samples[k] - m) * (self.samples[(k + lag) % n] - m))
            .sum::<f64>()
            / n as f64
    }
}

/// Policy for gaps in an ingested demand record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapFill {
    /// Any gap is an error.
    #[default]
    None,
    /// Gaps that are whole multiples of the sampling interval are filled by
    /// linear interpolation.
    Linear,
}

fn parse_timestamp(text: &str) -> Option<i64> {
    let text = text.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(t.timestamp_millis());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(t.and_utc().timestamp_millis());
        }
    }
    None
}

/// Reads a `timestamp_iso8601, net_demand_kw` CSV with a header row.
///
/// The sampling interval is taken from the first two rows and enforced for
/// the rest of the file.
pub fn read_net_demand_csv(path: &Path, fill: GapFill) -> Result<TimeSeries> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "timestamp_iso8601" || &headers[1] != "net_demand_kw" {
        return Err(csv_err(format!(
            "expected header `timestamp_iso8601,net_demand_kw`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut rows: Vec<(i64, f64)> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let row = line + 2;
        if record.len() != 2 {
            return Err(csv_err(format!("row {row}: expected 2 columns")));
        }
        let t =
            parse_timestamp(&record[0]).ok_or_else(|| csv_err(format!("row {row}: bad timestamp `{}`", &record[0])))?;
        let v: f64 = record[1]
            .parse()
            .map_err(|_| csv_err(format!("row {row}: bad value `{}`", &record[1])))?;
        if !v.is_finite() {
            return Err(csv_err(format!("row {row}: non-finite value")));
        }
        rows.push((t, v));
    }
    if rows.len() < 2 {
        return Err(csv_err("need at least two rows".into()));
    }

    let step = rows[1].0 - rows[0].0;
    if step <= 0 {
        return Err(csv_err("timestamps must be strictly increasing".into()));
    }
    let mut samples = vec![rows[0].1];
    for pair in rows.windows(2) {
        let (t0, v0) = pair[0];
        let (t1, v1) = pair[1];
        let diff = t1 - t0;
        if diff == step {
            samples.push(v1);
            continue;
        }
        if diff <= 0 || diff % step != 0 {
            return Err(csv_err(format!(
                "irregular sampling between {t0} ms and {t1} ms (expected {step} ms steps)"
            )));
        }
        match fill {
            GapFill::None => {
                return Err(csv_err(format!(
                    "gap of {} samples after {t0} ms; pass `--fill linear` to interpolate",
                    diff / step - 1
                )))
            }
            GapFill::Linear => {
                let k = diff / step;
                for j in 1..=k {
                    let a = j as f64 / k as f64;
                    samples.push(v0 + a * (v1 - v0));
                }
            }
        }
    }
    let dt_hours = step as f64 / 3.6e6;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "net_demand".into());
    TimeSeries::new(samples, dt_hours, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn validates_series() {
        assert!(TimeSeries::new(vec![1.0], 1.0, "x").is_err());
        assert!(TimeSeries::new(vec![1.0, 2.0], 0.0, "x").is_err());
        assert!(TimeSeries::new(vec![1.0, f64::INFINITY], 1.0, "x").is_err());
        let s = TimeSeries::new(vec![1.0, 3.0], 0.5, "x").unwrap();
        assert_eq!(s.mean(), 2.0);
        assert_eq!(s.variance(), 1.0);
    }

    #[test]
    fn reads_uniform_csv() {
        let f = write_csv(
            "timestamp_iso8601,net_demand_kw\n\
             2020-01-01T00:00:00Z,10\n\
             2020-01-01T00:05:00Z,11.5\n\
             2020-01-01T00:10:00Z,9\n",
        );
        let s = read_net_demand_csv(f.path(), GapFill::None).unwrap();
        assert_eq!(s.samples(), &[10.0, 11.5, 9.0]);
        assert!((s.dt() - 5.0 / 60.0).abs() < 1e-12);
    }

    #[test]
    fn gaps_need_fill_flag() {
        let body = "timestamp_iso8601,net_demand_kw\n\
                    2020-01-01T00:00:00Z,0\n\
                    2020-01-01T00:05:00Z,1\n\
                    2020-01-01T00:20:00Z,4\n";
        let f = write_csv(body);
        let err = read_net_demand_csv(f.path(), GapFill::None).unwrap_err();
        assert!(err.to_string().contains("--fill linear"), "{err}");
        let s = read_net_demand_csv(f.path(), GapFill::Linear).unwrap();
        assert_eq!(s.samples(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn rejects_wrong_header_and_irregular_steps() {
        let f = write_csv("time,kw\n2020-01-01T00:00:00Z,1\n2020-01-01T00:05:00Z,2\n");
        assert!(read_net_demand_csv(f.path(), GapFill::Linear).is_err());
        let f = write_csv(
            "timestamp_iso8601,net_demand_kw\n\
             2020-01-01T00:00:00Z,0\n\
             2020-01-01T00:05:00Z,1\n\
             2020-01-01T00:12:00Z,4\n",
        );
        assert!(read_net_demand_csv(f.path(), GapFill::Linear).is_err());
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_net_demand_csv(Path::new("/nonexistent/nd.csv"), GapFill::None).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/nd.csv"));
    }
}
