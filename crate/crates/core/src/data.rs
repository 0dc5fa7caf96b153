//! Workload time-series data model and the series CSV format.
//!
//! A [`SubjectSeries`] holds one subject's uniformly sampled workload
//! estimates: the seven workload components plus the overall channel.
//! Series are read from and written to CSV files with the fixed header
//! [`CSV_HEADER`], one file per subject named `<subject_id>.csv`.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Base sample period of every series used for modelling, in seconds.
pub const BASE_PERIOD_S: f64 = 5.0;

/// Maximum tolerated deviation between successive time deltas, in seconds.
pub const GRID_TOLERANCE_S: f64 = 1e-6;

/// Exact header line of the series CSV format.
pub const CSV_HEADER: &str =
    "time_s,cognitive,visual,auditory,speech,gross_motor,fine_motor,tactile,overall";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("missing column `{0}` in series header")]
    MissingColumn(String),
    #[error("duplicate column `{0}` in series header")]
    DuplicateColumn(String),
    #[error("non-uniform time grid at row {row}: delta {delta} s, expected {expected} s")]
    NonUniformGrid { row: usize, delta: f64, expected: f64 },
    #[error("non-finite or unparsable value in channel `{channel}` at row {row}")]
    NonFiniteValue { channel: String, row: usize },
    #[error("series has no samples")]
    EmptySeries,
    #[error("channel `{channel}` has {len} samples, expected {expected}")]
    ChannelLengthMismatch {
        channel: String,
        len: usize,
        expected: usize,
    },
    #[error("invalid sample period {0} s")]
    InvalidPeriod(f64),
    #[error("sample period {from} s cannot be mean-binned to {to} s")]
    IncompatiblePeriod { from: f64, to: f64 },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

/// The seven workload components and the overall composite, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadComponent {
    Cognitive,
    Visual,
    Auditory,
    Speech,
    GrossMotor,
    FineMotor,
    Tactile,
    Overall,
}

impl WorkloadComponent {
    /// All eight channels in canonical (CSV column) order.
    pub const ALL: [WorkloadComponent; 8] = [
        WorkloadComponent::Cognitive,
        WorkloadComponent::Visual,
        WorkloadComponent::Auditory,
        WorkloadComponent::Speech,
        WorkloadComponent::GrossMotor,
        WorkloadComponent::FineMotor,
        WorkloadComponent::Tactile,
        WorkloadComponent::Overall,
    ];

    /// The seven components, excluding the overall composite.
    pub const COMPONENTS: [WorkloadComponent; 7] = [
        WorkloadComponent::Cognitive,
        WorkloadComponent::Visual,
        WorkloadComponent::Auditory,
        WorkloadComponent::Speech,
        WorkloadComponent::GrossMotor,
        WorkloadComponent::FineMotor,
        WorkloadComponent::Tactile,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name in the series CSV.
    pub fn column(self) -> &'static str {
        match self {
            WorkloadComponent::Cognitive => "cognitive",
            WorkloadComponent::Visual => "visual",
            WorkloadComponent::Auditory => "auditory",
            WorkloadComponent::Speech => "speech",
            WorkloadComponent::GrossMotor => "gross_motor",
            WorkloadComponent::FineMotor => "fine_motor",
            WorkloadComponent::Tactile => "tactile",
            WorkloadComponent::Overall => "overall",
        }
    }

    pub fn from_column(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.column() == name)
    }

    /// Capitalized name used in report headings.
    pub fn title(self) -> &'static str {
        match self {
            WorkloadComponent::Cognitive => "Cognitive",
            WorkloadComponent::Visual => "Visual",
            WorkloadComponent::Auditory => "Auditory",
            WorkloadComponent::Speech => "Speech",
            WorkloadComponent::GrossMotor => "Gross Motor",
            WorkloadComponent::FineMotor => "Fine Motor",
            WorkloadComponent::Tactile => "Tactile",
            WorkloadComponent::Overall => "Overall",
        }
    }
}

impl fmt::Display for WorkloadComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl std::str::FromStr for WorkloadComponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::from_column(&norm).ok_or_else(|| format!("unknown workload component `{s}`"))
    }
}

/// One subject's uniformly sampled multi-channel workload trace.
///
/// Invariants (checked by [`validate_series`]): all eight channels share the
/// same length `N >= 1`, every value is finite, and `sample_period_s > 0`.
/// Sample `i` lies at `start_time_s + i * sample_period_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectSeries {
    pub subject_id: String,
    pub sample_period_s: f64,
    pub start_time_s: f64,
    /// Indexed by [`WorkloadComponent::index`].
    pub channels: [Vec<f64>; 8],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub subject_id: String,
    pub duration_s: f64,
    pub n_samples: usize,
}

impl SubjectSeries {
    /// Builds a series and validates it.
    pub fn new(
        subject_id: impl Into<String>,
        sample_period_s: f64,
        start_time_s: f64,
        channels: [Vec<f64>; 8],
    ) -> Result<Self, DataError> {
        let s = SubjectSeries {
            subject_id: subject_id.into(),
            sample_period_s,
            start_time_s,
            channels,
        };
        validate_series(&s)?;
        Ok(s)
    }

    pub fn channel(&self, c: WorkloadComponent) -> &[f64] {
        &self.channels[c.index()]
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Time stamp of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        self.start_time_s + i as f64 * self.sample_period_s
    }

    pub fn meta(&self) -> SeriesMeta {
        SeriesMeta {
            subject_id: self.subject_id.clone(),
            duration_s: self.len() as f64 * self.sample_period_s,
            n_samples: self.len(),
        }
    }
}

/// Checks every [`SubjectSeries`] invariant and returns its metadata.
pub fn validate_series(s: &SubjectSeries) -> Result<SeriesMeta, DataError> {
    if !(s.sample_period_s.is_finite() && s.sample_period_s > 0.0) {
        return Err(DataError::InvalidPeriod(s.sample_period_s));
    }
    let n = s.channels[0].len();
    for c in WorkloadComponent::ALL {
        let len = s.channels[c.index()].len();
        if len != n {
            return Err(DataError::ChannelLengthMismatch {
                channel: c.column().to_string(),
                len,
                expected: n,
            });
        }
    }
    if n == 0 {
        return Err(DataError::EmptySeries);
    }
    for c in WorkloadComponent::ALL {
        if let Some(row) = s.channels[c.index()].iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteValue {
                channel: c.column().to_string(),
                row,
            });
        }
    }
    Ok(s.meta())
}

/// Parses a series CSV. The sample period is inferred from the time column.
pub fn parse_series_csv(text: &str, subject_id: &str) -> Result<SubjectSeries, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .clone();

    let find = |name: &str| -> Result<usize, DataError> {
        let mut hits = headers.iter().enumerate().filter(|(_, h)| *h == name);
        let first = hits
            .next()
            .map(|(i, _)| i)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
        if hits.next().is_some() {
            return Err(DataError::DuplicateColumn(name.to_string()));
        }
        Ok(first)
    };
    let time_col = find("time_s")?;
    let mut cols = [0usize; 8];
    for c in WorkloadComponent::ALL {
        cols[c.index()] = find(c.column())?;
    }

    let mut times = Vec::new();
    let mut channels: [Vec<f64>; 8] = Default::default();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        let parse = |col: usize, name: &str| -> Result<f64, DataError> {
            record
                .get(col)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::NonFiniteValue {
                    channel: name.to_string(),
                    row,
                })
        };
        times.push(parse(time_col, "time_s")?);
        for c in WorkloadComponent::ALL {
            channels[c.index()].push(parse(cols[c.index()], c.column())?);
        }
    }
    if times.is_empty() {
        return Err(DataError::EmptySeries);
    }

    let period = if times.len() >= 2 {
        times[1] - times[0]
    } else {
        BASE_PERIOD_S
    };
    if period <= 0.0 {
        return Err(DataError::NonUniformGrid {
            row: 1,
            delta: period,
            expected: period,
        });
    }
    for (row, pair) in times.windows(2).enumerate() {
        let delta = pair[1] - pair[0];
        if (delta - period).abs() > GRID_TOLERANCE_S {
            return Err(DataError::NonUniformGrid {
                row: row + 1,
                delta,
                expected: period,
            });
        }
    }

    SubjectSeries::new(subject_id, period, times[0], channels)
}

/// Writes a series in the CSV format accepted by [`parse_series_csv`].
///
/// Values use the shortest representation that parses back to the same `f64`.
pub fn serialize_series_csv(s: &SubjectSeries) -> String {
    let mut out = String::with_capacity(s.len() * 96);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..s.len() {
        out.push_str(&format_value(s.time_at(i)));
        for c in WorkloadComponent::ALL {
            out.push(',');
            out.push_str(&format_value(s.channels[c.index()][i]));
        }
        out.push('\n');
    }
    out
}

fn format_value(v: f64) -> String {
    // `{}` prints integral floats without a fractional part; keep them decimal.
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Mean-bins a finer uniform series onto `target_period_s` bins.
///
/// The target period must be an integer multiple of the source period. A
/// trailing partial bin is dropped.
pub fn rebin_mean(s: &SubjectSeries, target_period_s: f64) -> Result<SubjectSeries, DataError> {
    let ratio = target_period_s / s.sample_period_s;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio.max(1.0) {
        return Err(DataError::IncompatiblePeriod {
            from: s.sample_period_s,
            to: target_period_s,
        });
    }
    let factor = factor as usize;
    if factor == 1 {
        return Ok(s.clone());
    }
    let bins = s.len() / factor;
    if bins == 0 {
        return Err(DataError::EmptySeries);
    }
    let channels = s.channels.clone().map(|values| {
        values
            .chunks_exact(factor)
            .map(|chunk| chunk.iter().sum::<f64>() / factor as f64)
            .collect::<Vec<_>>()
    });
    SubjectSeries::new(
        s.subject_id.clone(),
        target_period_s,
        s.start_time_s,
        channels,
    )
}

/// Reads `<subject_id>.csv` from disk.
pub fn load_series(path: &Path) -> Result<SubjectSeries, DataError> {
    let io_err = |e: std::io::Error| DataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let text = fs::read_to_string(path).map_err(io_err)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_series_csv(&text, &id)
}

/// Loads every `*.csv` in a cohort directory, rebinned to the base period and
/// sorted by subject id.
pub fn load_cohort(dir: &Path) -> Result<Vec<SubjectSeries>, DataError> {
    let io_err = |e: std::io::Error| DataError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            paths.push(path);
        }
    }
    paths.sort();
    let mut cohort = paths
        .iter()
        .map(|p| load_series(p).and_then(|s| rebin_mean(&s, BASE_PERIOD_S)))
        .collect::<Result<Vec<_>, _>>()?;
    cohort.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(cohort)
}

/// Writes each series to `<dir>/<subject_id>.csv`, creating `dir` if needed.
pub fn write_cohort(dir: &Path, cohort: &[SubjectSeries]) -> Result<(), DataError> {
    let io_err = |e: std::io::Error| DataError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(io_err)?;
    for s in cohort {
        fs::write(
            dir.join(format!("{}.csv", s.subject_id)),
            serialize_series_csv(s),
        )
        .map_err(io_err)?;
    }
    Ok(())
}
