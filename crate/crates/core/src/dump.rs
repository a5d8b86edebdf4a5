//! Candidate dumps: JSON with `[re, im]` pairs, shortest round-trip floats
//! and a SHA-256 checksum over the payload.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lindblad_family::LindbladCandidate;
use crate::linalg::CMatrix;
use crate::pipeline::PointSpec;
use crate::sdp::Objective;

pub const DUMP_FORMAT: &str = "lindblad-sdp-candidate";
pub const DUMP_VERSION: u32 = 1;

/// Row-major `[re, im]` pairs.
pub type ComplexRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_rows(m: &CMatrix) -> ComplexRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &ComplexRows) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Dump("ragged matrix".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMatrices {
    pub gamma_left: ComplexRows,
    pub gamma_right: ComplexRows,
    pub hls_left: ComplexRows,
    pub hls_right: ComplexRows,
}

impl CandidateMatrices {
    pub fn from_candidate(c: &LindbladCandidate) -> Self {
        Self {
            gamma_left: matrix_to_rows(&c.gamma_left),
            gamma_right: matrix_to_rows(&c.gamma_right),
            hls_left: matrix_to_rows(&c.hls_left),
            hls_right: matrix_to_rows(&c.hls_right),
        }
    }

    pub fn to_candidate(&self) -> Result<LindbladCandidate> {
        Ok(LindbladCandidate {
            gamma_left: rows_to_matrix(&self.gamma_left)?,
            gamma_right: rows_to_matrix(&self.gamma_right)?,
            hls_left: rows_to_matrix(&self.hls_left)?,
            hls_right: rows_to_matrix(&self.hls_right)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpMetadata {
    pub point: PointSpec,
    /// SHA-256 of the canonical JSON of `point`.
    pub point_hash: String,
    pub grid_index: Vec<usize>,
    pub grid_label: String,
    pub objective: Objective,
    pub t_left: f64,
    pub t_right: f64,
    pub free_trace: bool,
    pub delta_tol: f64,
    pub epsilon: f64,
    pub solver: String,
    pub status: String,
    /// Solver objective.
    pub tau_opt: f64,
    /// Independent re-evaluation on the stored candidate.
    pub oracle_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDump {
    pub format: String,
    pub version: u32,
    pub metadata: DumpMetadata,
    pub candidate: CandidateMatrices,
    pub checksum: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn point_hash(point: &PointSpec) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(point)?.as_bytes()))
}

fn payload_checksum(meta: &DumpMetadata, cand: &CandidateMatrices) -> Result<String> {
    let text = serde_json::to_string(&(meta, cand))?;
    Ok(sha256_hex(text.as_bytes()))
}

impl CandidateDump {
    pub fn new(mut metadata: DumpMetadata, candidate: &LindbladCandidate) -> Result<Self> {
        metadata.point_hash = point_hash(&metadata.point)?;
        let candidate = CandidateMatrices::from_candidate(candidate);
        let checksum = payload_checksum(&metadata, &candidate)?;
        Ok(Self {
            format: DUMP_FORMAT.into(),
            version: DUMP_VERSION,
            metadata,
            candidate,
            checksum,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and checks format, version, checksum and point hash.
    pub fn from_json(text: &str) -> Result<Self> {
        let dump: CandidateDump = serde_json::from_str(text)?;
        if dump.format != DUMP_FORMAT || dump.version != DUMP_VERSION {
            return Err(Error::Dump(format!("unsupported dump {} v{}", dump.format, dump.version)));
        }
        let expected = payload_checksum(&dump.metadata, &dump.candidate)?;
        if expected != dump.checksum {
            return Err(Error::Dump(format!(
                "checksum mismatch: stored {}, computed {expected}; the file was modified",
                dump.checksum
            )));
        }
        if point_hash(&dump.metadata.point)? != dump.metadata.point_hash {
            return Err(Error::Dump("point hash does not match the stored point".into()));
        }
        Ok(dump)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Leaf-level differences between two points, as `path: left != right`.
pub fn diff_points(a: &PointSpec, b: &PointSpec) -> Result<Vec<String>> {
    fn walk(path: String, a: &Value, b: &Value, out: &mut Vec<String>) {
        match (a, b) {
            (Value::Object(x), Value::Object(y)) => {
                let mut keys: Vec<&String> = x.keys().chain(y.keys()).collect();
                keys.sort();
                keys.dedup();
                for k in keys {
                    let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    walk(p, x.get(k).unwrap_or(&Value::Null), y.get(k).unwrap_or(&Value::Null), out);
                }
            }
            (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
                for (i, (u, v)) in x.iter().zip(y).enumerate() {
                    walk(format!("{path}[{i}]"), u, v, out);
                }
            }
            _ if a != b => out.push(format!("{path}: {a} != {b}")),
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(String::new(), &serde_json::to_value(a)?, &serde_json::to_value(b)?, &mut out);
    Ok(out)
}
