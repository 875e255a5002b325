//! Multichannel observation series and its CSV form.
//!
//! CSV layout: header `timestamp,contiguous,<label_1>,...,<label_G>`, one row
//! per sample. `timestamp` is either a sample index or an ISO-8601 local
//! date-time; `contiguous` is `1` or `0`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};

const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stamp {
    Index(u64),
    Time(NaiveDateTime),
}

impl fmt::Display for Stamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stamp::Index(i) => write!(f, "{i}"),
            Stamp::Time(t) => write!(f, "{}", t.format(TIME_FORMAT)),
        }
    }
}

impl Stamp {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(i) = s.parse::<u64>() {
            return Some(Stamp::Index(i));
        }
        NaiveDateTime::parse_from_str(s, TIME_FORMAT)
            .ok()
            .map(Stamp::Time)
    }
}

/// Per-channel affine transform applied by [`ObservationSeries::standardize`]:
/// `standardized = (raw - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
    timestamps: Vec<Stamp>,
    contiguous: Vec<bool>,
    standardization: Option<Standardization>,
}

impl ObservationSeries {
    /// `contiguous[n]` says whether sample `n` directly follows sample `n-1`;
    /// `contiguous[0]` is forced to `false`.
    pub fn new(
        labels: Vec<String>,
        values: Vec<Vec<f64>>,
        timestamps: Vec<Stamp>,
        mut contiguous: Vec<bool>,
    ) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::SeriesTooShort {
                required: 2,
                actual: n,
            });
        }
        let g = labels.len();
        if let Some(row) = values.iter().find(|r| r.len() != g) {
            return Err(Error::DimensionMismatch {
                context: "series row width",
                expected: g,
                actual: row.len(),
            });
        }
        for (what, len) in [("timestamps", timestamps.len()), ("contiguity flags", contiguous.len())] {
            if len != n {
                return Err(Error::InvariantViolation(format!(
                    "{what} has {len} entries for {n} samples"
                )));
            }
        }
        contiguous[0] = false;
        Ok(Self {
            labels,
            values,
            timestamps,
            contiguous,
            standardization: None,
        })
    }

    /// Fully contiguous series indexed `0..N`.
    pub fn from_rows(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        let stamps = (0..n as u64).map(Stamp::Index).collect();
        Self::new(labels, values, stamps, vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[c]).collect()
    }

    pub fn timestamps(&self) -> &[Stamp] {
        &self.timestamps
    }

    pub fn contiguous_with_previous(&self, n: usize) -> bool {
        self.contiguous[n]
    }

    pub fn contiguity(&self) -> &[bool] {
        &self.contiguous
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Replaces channel labels, keeping everything else.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.channels() {
            return Err(Error::DimensionMismatch {
                context: "channel labels",
                expected: self.channels(),
                actual: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// First `len` samples.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        let len = len.min(self.len());
        let mut out = Self::new(
            self.labels.clone(),
            self.values[..len].to_vec(),
            self.timestamps[..len].to_vec(),
            self.contiguous[..len].to_vec(),
        )?;
        out.standardization = self.standardization.clone();
        Ok(out)
    }

    /// Per-channel zero mean and unit sample standard deviation (N - 1
    /// denominator). The transform is composed with any earlier one so that
    /// [`destandardize`](Self::destandardize) always returns raw values.
    pub fn standardize(&self) -> Result<Self> {
        let n = self.len() as f64;
        let mut mean = vec![0.0; self.channels()];
        let mut scale = vec![0.0; self.channels()];
        for c in 0..self.channels() {
            let col = self.column(c);
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
            if !(var > 0.0) {
                return Err(Error::ZeroVariance(c));
            }
            mean[c] = m;
            scale[c] = var.sqrt();
        }
        let values = self
            .values
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(c, v)| (v - mean[c]) / scale[c])
                    .collect()
            })
            .collect();
        let combined = match &self.standardization {
            None => Standardization { mean, scale },
            Some(prev) => Standardization {
                mean: (0..self.channels())
                    .map(|c| prev.mean[c] + prev.scale[c] * mean[c])
                    .collect(),
                scale: (0..self.channels())
                    .map(|c| prev.scale[c] * scale[c])
                    .collect(),
            },
        };
        Ok(Self {
            values,
            standardization: Some(combined),
            ..self.clone()
        })
    }

    /// Undoes the recorded standardization; identity when none is recorded.
    pub fn destandardize(&self) -> Self {
        let Some(t) = &self.standardization else {
            return self.clone();
        };
        let values = self
            .values
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(c, v)| v * t.scale[c] + t.mean[c])
                    .collect()
            })
            .collect();
        Self {
            values,
            standardization: None,
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::io("writing series CSV", e.into());
        let mut header = vec!["timestamp".to_string(), "contiguous".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for n in 0..self.len() {
            let mut rec = vec![
                self.timestamps[n].to_string(),
                if self.contiguous[n] { "1" } else { "0" }.to_string(),
            ];
            rec.extend(self.values[n].iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("writing series CSV", e))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(input: R, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let parse_err = |line: usize, message: String| Error::Parse {
            file: origin.to_path_buf(),
            line,
            message,
        };
        let header = rdr
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if header.len() < 4 || &header[0] != "timestamp" || &header[1] != "contiguous" {
            return Err(parse_err(
                1,
                "expected header `timestamp,contiguous,<channel>,<channel>,...`".into(),
            ));
        }
        let labels: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut values = Vec::new();
        let mut stamps = Vec::new();
        let mut flags = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            let stamp = Stamp::parse(&rec[0])
                .ok_or_else(|| parse_err(line, format!("bad timestamp `{}`", &rec[0])))?;
            let flag = match &rec[1] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(parse_err(line, format!("bad contiguity flag `{other}`"))),
            };
            let row = rec
                .iter()
                .skip(2)
                .map(|cell| {
                    cell.parse::<f64>()
                        .map_err(|_| parse_err(line, format!("non-numeric value `{cell}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            values.push(row);
            stamps.push(stamp);
            flags.push(flag);
        }
        Self::new(labels, values, stamps, flags)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}

/// Shortest decimal that parses back to the same `f64`. Very large or very
/// small magnitudes use exponent notation.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && v.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
