//! Probability datasets: one class-probability vector and one label per sample.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Absolute tolerance on each row's probability sum.
pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// One `{"probs": [...], "label": n}` object per line.
    Jsonl,
    /// Headerless rows of `N` probabilities followed by the label.
    Csv,
}

impl DataFormat {
    /// Guess the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Jsonl,
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(DataFormat::Jsonl),
            "csv" => Ok(DataFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown data format {other:?}"
            ))),
        }
    }
}

/// `M` samples over `N` classes, stored row-major.
///
/// Immutable once built; every constructor validates the row sums, the
/// label range and `M >= 1`, `N >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDataset<T> {
    num_classes: usize,
    probs: Vec<T>,
    labels: Vec<usize>,
}

impl<T: Scalar> ProbabilityDataset<T> {
    pub fn new(num_classes: usize, rows: Vec<(Vec<T>, usize)>) -> Result<Self> {
        let mut probs = Vec::with_capacity(rows.len() * num_classes);
        let mut labels = Vec::with_capacity(rows.len());
        for (line, (row, label)) in rows.into_iter().enumerate() {
            check_row(&row, label, num_classes, line)?;
            probs.extend(row);
            labels.push(label);
        }
        Self::from_parts(num_classes, probs, labels)
    }

    fn from_parts(num_classes: usize, probs: Vec<T>, labels: Vec<usize>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        debug_assert_eq!(probs.len(), labels.len() * num_classes);
        Ok(Self {
            num_classes,
            probs,
            labels,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn probs(&self, m: usize) -> &[T] {
        let n = self.num_classes;
        &self.probs[m * n..(m + 1) * n]
    }

    pub fn label(&self, m: usize) -> usize {
        self.labels[m]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&[T], usize)> + '_ {
        self.probs
            .chunks_exact(self.num_classes)
            .zip(self.labels.iter().copied())
    }

    /// Number of samples carrying each label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// New dataset holding the given samples in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let n = self.num_classes;
        let mut probs = Vec::with_capacity(indices.len() * n);
        let mut labels = Vec::with_capacity(indices.len());
        for &m in indices {
            if m >= self.len() {
                return Err(Error::InvalidConfig(format!(
                    "sample index {m} out of range for {} samples",
                    self.len()
                )));
            }
            probs.extend_from_slice(self.probs(m));
            labels.push(self.labels[m]);
        }
        Self::from_parts(n, probs, labels)
    }

    /// SHA-256 over a canonical byte encoding (class count, then each
    /// sample's probabilities as `f64` bits and its label).
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"dnip-dataset-v1");
        hasher.update((self.num_classes as u64).to_le_bytes());
        for (probs, label) in self.iter() {
            for p in probs {
                hasher.update(p.as_f64().to_bits().to_le_bytes());
            }
            hasher.update((label as u64).to_le_bytes());
        }
        hasher.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (probs, label) in self.iter() {
            let row: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
            writeln!(w, "{{\"probs\":[{}],\"label\":{}}}", row.join(","), label)?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (probs, label) in self.iter() {
            let row: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
            writeln!(w, "{},{}", row.join(","), label)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path, format: DataFormat) -> Result<()> {
        let mut w = std::io::BufWriter::new(File::create(path)?);
        match format {
            DataFormat::Jsonl => self.write_jsonl(&mut w)?,
            DataFormat::Csv => self.write_csv(&mut w)?,
        }
        w.flush()?;
        Ok(())
    }
}

fn check_row<T: Scalar>(row: &[T], label: usize, num_classes: usize, line: usize) -> Result<()> {
    if row.len() != num_classes {
        return Err(Error::Parse {
            line,
            reason: format!("expected {num_classes} probabilities, got {}", row.len()),
        });
    }
    if label >= num_classes {
        return Err(Error::LabelOutOfRange {
            line,
            label: label as i64,
            num_classes,
        });
    }
    if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < T::zero()) {
        return Err(Error::Parse {
            line,
            reason: format!("probability {p} is negative or not finite"),
        });
    }
    let sum: f64 = row.iter().map(|p| p.as_f64()).sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::Parse {
            line,
            reason: format!("probabilities sum to {sum}, not 1"),
        });
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRow {
    probs: Vec<f64>,
    label: i64,
}

/// Raw rows as parsed, before renormalization and validation.
fn read_rows<R: BufRead>(reader: R, format: DataFormat) -> Result<Vec<(usize, Vec<f64>, i64)>> {
    let mut rows = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (probs, label) = match format {
            DataFormat::Jsonl => {
                let row: JsonRow = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
                    line: line_no,
                    reason: e.to_string(),
                })?;
                (row.probs, row.label)
            }
            DataFormat::Csv => parse_csv_row(trimmed, line_no)?,
        };
        rows.push((line_no, probs, label));
    }
    Ok(rows)
}

fn parse_csv_row(line: &str, line_no: usize) -> Result<(Vec<f64>, i64)> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 3 {
        return Err(Error::Parse {
            line: line_no,
            reason: format!("expected at least 3 columns, got {}", fields.len()),
        });
    }
    let (label_field, prob_fields) = fields.split_last().expect("non-empty");
    let probs = prob_fields
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                reason: format!("non-numeric probability {f:?}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let label = label_field.parse::<i64>().map_err(|_| Error::Parse {
        line: line_no,
        reason: format!("non-integer label {label_field:?}"),
    })?;
    Ok((probs, label))
}

/// Parse a dataset from any reader. `N` is taken from the first row and
/// enforced on every later one. Blank lines are skipped; reported line
/// numbers are 0-based positions in the input.
pub fn read_dataset<T: Scalar, R: BufRead>(
    reader: R,
    format: DataFormat,
    renormalize: bool,
) -> Result<ProbabilityDataset<T>> {
    let rows = read_rows(reader, format)?;
    let Some((_, first, _)) = rows.first() else {
        return Err(Error::EmptyDataset);
    };
    let num_classes = first.len();
    if num_classes < 2 {
        return Err(Error::Parse {
            line: rows[0].0,
            reason: format!("need at least 2 probabilities, got {num_classes}"),
        });
    }

    let mut probs = Vec::with_capacity(rows.len() * num_classes);
    let mut labels = Vec::with_capacity(rows.len());
    for (line, mut row, label) in rows {
        if row.len() != num_classes {
            return Err(Error::Parse {
                line,
                reason: format!("expected {num_classes} probabilities, got {}", row.len()),
            });
        }
        if label < 0 || label as usize >= num_classes {
            return Err(Error::LabelOutOfRange {
                line,
                label,
                num_classes,
            });
        }
        if renormalize {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Parse {
                    line,
                    reason: "probabilities must be finite and nonnegative".into(),
                });
            }
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(Error::ZeroSumRow { line });
            }
            row.iter_mut().for_each(|p| *p /= sum);
        }
        let row: Vec<T> = row.into_iter().map(T::of).collect();
        check_row(&row, label as usize, num_classes, line)?;
        probs.extend(row);
        labels.push(label as usize);
    }
    ProbabilityDataset::from_parts(num_classes, probs, labels)
}

pub fn load_dataset<T: Scalar>(
    path: &Path,
    format: DataFormat,
    renormalize: bool,
) -> Result<ProbabilityDataset<T>> {
    let file = File::open(path)?;
    read_dataset(BufReader::new(file), format, renormalize)
}
