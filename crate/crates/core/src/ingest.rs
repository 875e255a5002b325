//! Vibration snapshot ingestion.
//!
//! A snapshot directory holds one ASCII file per acquisition, named by its
//! timestamp (`2004.02.12.10.32.39`), with one whitespace-separated row per
//! sample and one column per sensor channel. Each snapshot is reduced to a
//! single feature value per selected channel, giving one row of the
//! observation series.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Duration, NaiveDateTime};

use crate::error::{Error, Result};
use crate::series::{ObservationSeries, Stamp};

const FILENAME_FORMAT: &str = "%Y.%m.%d.%H.%M.%S";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub timestamp: NaiveDateTime,
    pub source: PathBuf,
    /// `samples[c]` holds the readings of selected channel `c`.
    pub samples: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn channels(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureKind {
    #[default]
    Rms,
    /// Standardized fourth moment, not excess (a Gaussian gives about 3).
    Kurtosis,
    Peak,
    Crest,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Rms => "rms",
            FeatureKind::Kurtosis => "kurtosis",
            FeatureKind::Peak => "peak",
            FeatureKind::Crest => "crest",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rms" => Ok(FeatureKind::Rms),
            "kurtosis" => Ok(FeatureKind::Kurtosis),
            "peak" => Ok(FeatureKind::Peak),
            "crest" => Ok(FeatureKind::Crest),
            other => Err(Error::Config(format!(
                "unknown feature `{other}` (expected rms, kurtosis, peak or crest)"
            ))),
        }
    }
}

pub fn parse_snapshot_name(name: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(name, FILENAME_FORMAT).ok()
}

/// Parses one snapshot file, keeping the columns in `channels` (all columns
/// when empty) in the given order.
pub fn read_snapshot_file(path: &Path, timestamp: NaiveDateTime, channels: &[usize]) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        file: path.to_path_buf(),
        line,
        message,
    };
    let mut width = None;
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let cells: Vec<&str> = line.split_whitespace().collect();
        if cells.is_empty() {
            continue;
        }
        let w = *width.get_or_insert(cells.len());
        if cells.len() != w {
            return Err(parse_err(
                lineno,
                format!("expected {w} columns, found {}", cells.len()),
            ));
        }
        if samples.is_empty() {
            if let Some(&bad) = channels.iter().find(|&&c| c >= w) {
                return Err(parse_err(
                    lineno,
                    format!("channel index {bad} out of range for {w} columns"),
                ));
            }
            let selected = if channels.is_empty() { w } else { channels.len() };
            samples = vec![Vec::new(); selected];
        }
        let mut pick = |slot: usize, col: usize| -> Result<()> {
            let cell = cells[col];
            let v = cell
                .parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("non-numeric value `{cell}` in column {col}")))?;
            samples[slot].push(v);
            Ok(())
        };
        if channels.is_empty() {
            for col in 0..w {
                pick(col, col)?;
            }
        } else {
            for (slot, &col) in channels.iter().enumerate() {
                pick(slot, col)?;
            }
        }
    }
    if samples.is_empty() {
        return Err(parse_err(0, "file contains no samples".into()));
    }
    Ok(Snapshot {
        timestamp,
        source: path.to_path_buf(),
        samples,
    })
}

/// Reads every timestamp-named file in `dir`, sorted by time. Files whose
/// names are not timestamps are ignored.
pub fn read_snapshot_dir(dir: &Path, channels: &[usize]) -> Result<Vec<Snapshot>> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| Error::io(format!("reading directory {}", dir.display()), e))?;
    let mut named = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let Some(ts) = path.file_name().and_then(|n| n.to_str()).and_then(parse_snapshot_name) else {
            continue;
        };
        named.push((ts, path));
    }
    if named.is_empty() {
        return Err(Error::NoValidFiles(dir.to_path_buf()));
    }
    named.sort();
    if let Some(i) = named.windows(2).position(|w| w[0].0 == w[1].0) {
        return Err(Error::UnorderedTimestamps(i + 1));
    }
    named
        .iter()
        .map(|(ts, path)| read_snapshot_file(path, *ts, channels))
        .collect()
}

/// One feature value per channel of `snapshot`.
pub fn extract_feature(snapshot: &Snapshot, kind: FeatureKind) -> Result<Vec<f64>> {
    snapshot
        .samples
        .iter()
        .enumerate()
        .map(|(c, x)| channel_feature(x, kind).map_err(|m| Error::Feature(format!("{}, channel {c}: {m}", snapshot.source.display()))))
        .collect()
}

fn channel_feature(x: &[f64], kind: FeatureKind) -> std::result::Result<f64, String> {
    let n = x.len();
    if n == 0 {
        return Err("no samples".into());
    }
    let rms = || (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let peak = || x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    match kind {
        FeatureKind::Rms => Ok(rms()),
        FeatureKind::Peak => Ok(peak()),
        FeatureKind::Crest => {
            let r = rms();
            if r == 0.0 {
                return Err("crest factor undefined for zero RMS".into());
            }
            Ok(peak() / r)
        }
        FeatureKind::Kurtosis => {
            if n < 2 {
                return Err("kurtosis needs at least 2 samples".into());
            }
            let mean = x.iter().sum::<f64>() / n as f64;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            if var == 0.0 {
                return Err("kurtosis undefined for a constant channel".into());
            }
            let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n as f64;
            Ok(m4 / (var * var))
        }
    }
}

/// Twice the median spacing between consecutive snapshots.
pub fn default_gap_threshold(snapshots: &[Snapshot]) -> Option<Duration> {
    let mut gaps: Vec<Duration> = snapshots
        .windows(2)
        .map(|w| w[1].timestamp - w[0].timestamp)
        .collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort();
    let mid = gaps.len() / 2;
    let median = if gaps.len() % 2 == 1 {
        gaps[mid]
    } else {
        (gaps[mid - 1] + gaps[mid]) / 2
    };
    Some(median * 2)
}

/// Builds the feature series. Sample `n` is contiguous with `n - 1` when the
/// snapshots are at most `gap_threshold` apart (default:
/// [`default_gap_threshold`]).
pub fn to_observation_series(
    snapshots: &[Snapshot],
    kind: FeatureKind,
    gap_threshold: Option<Duration>,
) -> Result<ObservationSeries> {
    if snapshots.len() < 2 {
        return Err(Error::SeriesTooShort {
            required: 2,
            actual: snapshots.len(),
        });
    }
    let g = snapshots[0].channels();
    if let Some(s) = snapshots.iter().find(|s| s.channels() != g) {
        return Err(Error::DimensionMismatch {
            context: "snapshot channel count",
            expected: g,
            actual: s.channels(),
        });
    }
    if let Some(i) = snapshots.windows(2).position(|w| w[1].timestamp <= w[0].timestamp) {
        return Err(Error::UnorderedTimestamps(i + 1));
    }
    let threshold = gap_threshold
        .or_else(|| default_gap_threshold(snapshots))
        .expect("at least two snapshots");
    let values = snapshots
        .iter()
        .map(|s| extract_feature(s, kind))
        .collect::<Result<Vec<_>>>()?;
    let stamps = snapshots.iter().map(|s| Stamp::Time(s.timestamp)).collect();
    let mut flags = vec![false];
    flags.extend(
        snapshots
            .windows(2)
            .map(|w| w[1].timestamp - w[0].timestamp <= threshold),
    );
    let labels = (1..=g).map(|i| format!("y{i}")).collect();
    ObservationSeries::new(labels, values, stamps, flags)
}
