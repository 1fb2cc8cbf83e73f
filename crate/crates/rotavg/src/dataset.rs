//! Dataset files: numeric text, one record per line.
//!
//! A record is either a row-major 3×3 rotation matrix (9 fields) or a unit
//! quaternion `w x y z` (4 fields), optionally followed by one weight
//! field (10 or 5 fields). Fields are separated by whitespace and/or
//! commas; lines starting with `#` (and blank lines) are ignored. All
//! records in a file must share one representation and arity.
//!
//! Values are written with 17 significant digits, so write → read round
//! trips reproduce every double exactly. Writes go through a temporary
//! file in the destination directory and a final rename.

use crate::means::{MeanError, WeightedDataset};
use crate::so3::{Rotation, So3Error, UnitQuaternion};
use nalgebra::Matrix3;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Largest manifold defect `--repair` will fix by projection; anything
/// farther from the manifold is rejected even with repair enabled.
pub const MAX_REPAIRABLE_DEFECT: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid number {token:?}")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: {found} fields, expected 4, 5, 9, or 10")]
    BadArity { line: usize, found: usize },
    #[error("line {line}: {found} fields, but earlier records have {expected}")]
    MixedArity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: weight must be finite and nonnegative, got {value}")]
    BadWeight { line: usize, value: f64 },
    #[error("line {line}: {source}")]
    InvalidRecord {
        line: usize,
        #[source]
        source: So3Error,
    },
    #[error("dataset contains no records")]
    Empty,
    #[error(transparent)]
    Dataset(#[from] MeanError),
}

/// How records are stored in a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Matrix,
    Quaternion,
}

impl RecordKind {
    pub fn name(&self) -> &'static str {
        match self {
            RecordKind::Matrix => "matrix",
            RecordKind::Quaternion => "quaternion",
        }
    }
}

/// Validation mode for parsed records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairPolicy {
    /// Records must sit on the manifold at the construction tolerance.
    Strict,
    /// Records within [`MAX_REPAIRABLE_DEFECT`] are projected onto the
    /// manifold (rounded interchange data); anything farther still fails.
    Repair,
}

/// A parsed dataset plus what the file looked like.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub data: WeightedDataset,
    pub kind: RecordKind,
    pub has_weights: bool,
}

fn parse_fields(line: &str, line_no: usize) -> Result<Vec<f64>, DatasetError> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|token| {
            token.parse::<f64>().map_err(|_| DatasetError::BadNumber {
                line: line_no,
                token: token.to_string(),
            })
        })
        .collect()
}

fn rotation_from_fields(
    fields: &[f64],
    line: usize,
    policy: RepairPolicy,
) -> Result<Rotation, DatasetError> {
    let m = Matrix3::from_row_slice(&fields[..9]);
    let result = match policy {
        RepairPolicy::Strict => Rotation::from_matrix(m),
        RepairPolicy::Repair => Rotation::from_matrix_repaired(m, MAX_REPAIRABLE_DEFECT),
    };
    result.map_err(|source| DatasetError::InvalidRecord { line, source })
}

fn quaternion_from_fields(
    fields: &[f64],
    line: usize,
    policy: RepairPolicy,
) -> Result<UnitQuaternion, DatasetError> {
    let result = match policy {
        RepairPolicy::Strict => UnitQuaternion::new(fields[0], fields[1], fields[2], fields[3]),
        RepairPolicy::Repair => UnitQuaternion::new_repaired(
            fields[0],
            fields[1],
            fields[2],
            fields[3],
            MAX_REPAIRABLE_DEFECT,
        ),
    };
    result.map_err(|source| DatasetError::InvalidRecord { line, source })
}

/// Parses a dataset file. Weightless files load with unit weights.
pub fn read_dataset(path: &Path, policy: RepairPolicy) -> Result<LoadedDataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, policy)
}

/// Parses dataset text (see module docs for the format).
pub fn parse_dataset(text: &str, policy: RepairPolicy) -> Result<LoadedDataset, DatasetError> {
    let mut arity: Option<usize> = None;
    let mut rotations = Vec::new();
    let mut weights = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = parse_fields(line, line_no)?;
        match arity {
            None => {
                if !matches!(fields.len(), 4 | 5 | 9 | 10) {
                    return Err(DatasetError::BadArity {
                        line: line_no,
                        found: fields.len(),
                    });
                }
                arity = Some(fields.len());
            }
            Some(expected) if expected != fields.len() => {
                return Err(DatasetError::MixedArity {
                    line: line_no,
                    expected,
                    found: fields.len(),
                });
            }
            Some(_) => {}
        }

        let arity = arity.unwrap();
        let rotation = match arity {
            4 | 5 => quaternion_from_fields(&fields, line_no, policy)?.to_rotation(),
            _ => rotation_from_fields(&fields, line_no, policy)?,
        };
        rotations.push(rotation);

        if matches!(arity, 5 | 10) {
            let value = *fields.last().unwrap();
            if !value.is_finite() || value < 0.0 {
                return Err(DatasetError::BadWeight {
                    line: line_no,
                    value,
                });
            }
            weights.push(value);
        }
    }

    let Some(arity) = arity else {
        return Err(DatasetError::Empty);
    };
    let kind = if arity <= 5 {
        RecordKind::Quaternion
    } else {
        RecordKind::Matrix
    };
    let has_weights = matches!(arity, 5 | 10);
    let data = if has_weights {
        WeightedDataset::new(rotations, weights)?
    } else {
        WeightedDataset::unweighted(rotations)?
    };
    Ok(LoadedDataset {
        data,
        kind,
        has_weights,
    })
}

// 17 significant digits: lossless text round trip for f64.
fn fmt(value: f64) -> String {
    format!("{value:.16e}")
}

/// Atomically writes `content` via a sibling temporary file and rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension(format!(
        "{}tmp",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let mut file = std::fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(content.as_bytes()).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Writes rotations as row-major matrix records (plus a weight column when
/// given).
pub fn write_matrix_dataset(
    path: &Path,
    rotations: &[Rotation],
    weights: Option<&[f64]>,
) -> Result<(), DatasetError> {
    let mut out = String::new();
    out.push_str("# rotation matrices, row-major");
    out.push_str(if weights.is_some() {
        "; last column: weight\n"
    } else {
        "\n"
    });
    for (index, rotation) in rotations.iter().enumerate() {
        let m = rotation.matrix();
        let mut fields: Vec<String> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| fmt(m[(i, j)]))
            .collect();
        if let Some(w) = weights {
            fields.push(fmt(w[index]));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    write_atomic(path, &out)
}

/// Writes quaternion records `w x y z` exactly as given (no sign
/// canonicalization: samples are kept as drawn).
pub fn write_quaternion_dataset(
    path: &Path,
    quaternions: &[UnitQuaternion],
    weights: Option<&[f64]>,
) -> Result<(), DatasetError> {
    let mut out = String::new();
    out.push_str("# unit quaternions: w x y z");
    out.push_str(if weights.is_some() {
        "; last column: weight\n"
    } else {
        "\n"
    });
    for (index, q) in quaternions.iter().enumerate() {
        let mut fields: Vec<String> = q.components().iter().map(|&v| fmt(v)).collect();
        if let Some(w) = weights {
            fields.push(fmt(w[index]));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    write_atomic(path, &out)
}
