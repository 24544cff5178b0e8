//! Feature matrices, labelled datasets and their on-disk formats.
//!
//! Two feature formats are supported:
//!
//! * `csv`: UTF-8, one sample per line, comma separated, no header.
//! * `epb`: the bytes `EPB1`, then `n_samples` and `n_dims` as little-endian
//!   `u64`, then `n_samples * n_dims` little-endian `f64` values, row-major.
//!
//! Labels are always a text file with one non-negative integer per line.
//! Class ids are 0-based.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EPB_MAGIC: &[u8; 4] = b"EPB1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Epb,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "epb" => Ok(Format::Epb),
            other => Err(Error::InvalidParams(format!("unknown format {other:?}"))),
        }
    }
}

/// Dense row-major matrix of finite `f64` values, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_samples: usize,
    n_dims: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_samples: usize, n_dims: usize, values: Vec<f64>) -> Result<Self> {
        if n_samples == 0 || n_dims == 0 {
            return Err(Error::Validation(format!(
                "matrix must be non-empty, got {n_samples}x{n_dims}"
            )));
        }
        if values.len() != n_samples * n_dims {
            return Err(Error::Validation(format!(
                "{n_samples}x{n_dims} matrix needs {} values, got {}",
                n_samples * n_dims,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value {} at row {}, column {}",
                values[pos],
                pos / n_dims,
                pos % n_dims
            )));
        }
        Ok(Self {
            n_samples,
            n_dims,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_dims = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_dims) {
            return Err(Error::Validation(format!(
                "row {bad} has {} columns, expected {n_dims}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), n_dims, rows.concat())
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n_dims)
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.n_dims);
        for &i in indices {
            if i >= self.n_samples {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.n_samples,
                });
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.n_dims, values)
    }

    /// Copy with every row scaled to unit Euclidean norm. All-zero rows are
    /// left untouched.
    pub fn l2_normalized(&self) -> Self {
        let mut values = self.values.clone();
        for row in values.chunks_exact_mut(self.n_dims) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Self {
            n_samples: self.n_samples,
            n_dims: self.n_dims,
            values,
        }
    }
}

/// Feature matrix with optional 0-based class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: FeatureMatrix,
    labels: Option<Vec<usize>>,
    n_classes: Option<usize>,
}

impl Dataset {
    pub fn unlabeled(features: FeatureMatrix) -> Self {
        Self {
            features,
            labels: None,
            n_classes: None,
        }
    }

    /// Labelled dataset. `n_classes` defaults to `max(label) + 1`; every
    /// class id below it must occur at least once.
    pub fn labeled(
        features: FeatureMatrix,
        labels: Vec<usize>,
        n_classes: Option<usize>,
    ) -> Result<Self> {
        if labels.len() != features.n_samples() {
            return Err(Error::Validation(format!(
                "{} labels for {} samples",
                labels.len(),
                features.n_samples()
            )));
        }
        let inferred = labels.iter().max().map_or(0, |m| m + 1);
        let n_classes = n_classes.unwrap_or(inferred);
        if inferred > n_classes {
            return Err(Error::Validation(format!(
                "label {} out of range for {n_classes} classes",
                inferred - 1
            )));
        }
        let mut seen = vec![false; n_classes];
        labels.iter().for_each(|&l| seen[l] = true);
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Validation(format!("class {missing} has no samples")));
        }
        Ok(Self {
            features,
            labels: Some(labels),
            n_classes: Some(n_classes),
        })
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_classes(&self) -> Option<usize> {
        self.n_classes
    }

    pub fn n_samples(&self) -> usize {
        self.features.n_samples()
    }

    /// Labels and class count, or `LabelsRequired`.
    pub fn require_labels(&self) -> Result<(&[usize], usize)> {
        match (&self.labels, self.n_classes) {
            (Some(l), Some(c)) => Ok((l, c)),
            _ => Err(Error::LabelsRequired),
        }
    }

    /// Same features with labels dropped.
    pub fn strip_labels(&self) -> Self {
        Self::unlabeled(self.features.clone())
    }
}

pub fn load_dataset(
    features_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
    format: Format,
) -> Result<Dataset> {
    let features = match format {
        Format::Csv => read_csv_matrix(features_path.as_ref())?,
        Format::Epb => read_epb_matrix(features_path.as_ref())?,
    };
    match labels_path {
        None => Ok(Dataset::unlabeled(features)),
        Some(p) => {
            let labels = read_labels(p)?;
            Dataset::labeled(features, labels, None)
        }
    }
}

pub fn save_dataset(
    d: &Dataset,
    features_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
    format: Format,
) -> Result<()> {
    match format {
        Format::Csv => write_csv_matrix(&d.features, features_path.as_ref())?,
        Format::Epb => write_epb_matrix(&d.features, features_path.as_ref())?,
    }
    if let (Some(p), Some(labels)) = (labels_path, d.labels()) {
        write_labels(labels, p)?;
    }
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>, format: Format) -> Result<FeatureMatrix> {
    match format {
        Format::Csv => read_csv_matrix(path.as_ref()),
        Format::Epb => read_epb_matrix(path.as_ref()),
    }
}

pub fn write_matrix(m: &FeatureMatrix, path: impl AsRef<Path>, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv_matrix(m, path.as_ref()),
        Format::Epb => write_epb_matrix(m, path.as_ref()),
    }
}

pub fn parse_csv_matrix(text: &str) -> Result<FeatureMatrix> {
    let mut values = Vec::new();
    let mut n_dims = 0;
    let mut n_samples = 0;
    let lines: Vec<&str> = text.lines().collect();
    let n_lines = lines
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .map_or(0, |p| p + 1);
    for (lineno, line) in lines[..n_lines].iter().enumerate() {
        let line = line.trim();
        let before = values.len();
        for cell in line.split(',') {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("not a number: {cell:?}"),
            })?;
            values.push(v);
        }
        let width = values.len() - before;
        if n_samples == 0 {
            n_dims = width;
        } else if width != n_dims {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected {n_dims} columns, found {width}"),
            });
        }
        n_samples += 1;
    }
    FeatureMatrix::new(n_samples, n_dims, values)
}

fn read_csv_matrix(path: &Path) -> Result<FeatureMatrix> {
    parse_csv_matrix(&fs::read_to_string(path)?)
}

fn write_csv_matrix(m: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in m.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                w.write_all(b",")?;
            }
            // Debug formatting is the shortest representation that parses
            // back to the same bits.
            write!(w, "{v:?}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn encode_epb(m: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * m.values.len());
    out.extend_from_slice(EPB_MAGIC);
    out.extend_from_slice(&(m.n_samples as u64).to_le_bytes());
    out.extend_from_slice(&(m.n_dims as u64).to_le_bytes());
    for v in &m.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_epb(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < 20 || &bytes[..4] != EPB_MAGIC {
        return Err(Error::Format("missing EPB1 header".into()));
    }
    let n_samples = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let n_dims = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let expected = n_samples
        .checked_mul(n_dims)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("matrix size overflows".into()))?;
    let body = &bytes[20..];
    if body.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} payload bytes, found {}",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(n_samples, n_dims, values)
}

fn read_epb_matrix(path: &Path) -> Result<FeatureMatrix> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_epb(&bytes)
}

fn write_epb_matrix(m: &FeatureMatrix, path: &Path) -> Result<()> {
    fs::write(path, encode_epb(m))?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let reader = BufReader::new(File::open(path)?);
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(line.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("not a class id: {line:?}"),
        })?);
    }
    Ok(labels)
}

pub fn write_labels(labels: &[usize], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}
