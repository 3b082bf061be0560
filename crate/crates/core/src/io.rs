//! State files and result serialization.
//!
//! A state file is a JSON object
//! `{"dA": 2, "dB": 2, "matrix": [[[re, im], ...], ...]}` holding the
//! `dA*dB x dA*dB` matrix row by row in the A-major basis.

use std::path::Path;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measures::{BoundResult, Certificate, FeasibleTriple, Method, SolverStats};
use crate::opalg::{BipartiteOp, CMat, DensityMatrix, HermitianOp, Subsystem};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    #[serde(rename = "dA")]
    da: usize,
    #[serde(rename = "dB")]
    db: usize,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Parse a state from JSON text. Errors name the offending field, row or
/// entry; syntax errors carry serde's line and column.
pub fn parse_state(text: &str) -> Result<DensityMatrix<f64>> {
    let raw: StateFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("state file: {e}")))?;
    if raw.da == 0 || raw.db == 0 {
        return Err(Error::Parse("field `dA`/`dB`: dimensions must be positive".into()));
    }
    let n = raw.da * raw.db;
    if raw.matrix.len() != n {
        return Err(Error::Parse(format!(
            "field `matrix`: {} rows, expected dA*dB = {n}",
            raw.matrix.len()
        )));
    }
    let mut m = CMat::<f64>::zeros(n, n);
    for (i, row) in raw.matrix.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse(format!("field `matrix[{i}]`: {} entries, expected {n}", row.len())));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Parse(format!("field `matrix[{i}][{j}]`: non-finite entry")));
            }
            m[(i, j)] = Complex::new(re, im);
        }
    }
    let op = HermitianOp::new(m).map_err(|e| Error::Parse(format!("field `matrix`: {e}")))?;
    let bip = BipartiteOp::new(op, raw.da, raw.db)?;
    DensityMatrix::new(bip).map_err(|e| Error::Parse(format!("field `matrix`: {e}")))
}

pub fn read_state(path: &Path) -> Result<DensityMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_state(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn state_to_json(x: &BipartiteOp<f64>) -> String {
    let m = x.op().matrix();
    let n = m.nrows();
    let raw = StateFile {
        da: x.da(),
        db: x.db(),
        matrix: (0..n).map(|i| (0..n).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect(),
    };
    serde_json::to_string_pretty(&raw).expect("state serializes")
}

pub fn write_state(path: &Path, x: &BipartiteOp<f64>) -> Result<()> {
    std::fs::write(path, state_to_json(x) + "\n")?;
    Ok(())
}

/// SHA-256 of the dimension and the little-endian `(re, im)` entries,
/// row-major. Equal matrices hash equally on every platform.
pub fn fingerprint(x: &HermitianOp<f64>) -> String {
    let m = x.matrix();
    let mut h = Sha256::new();
    h.update((m.nrows() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            h.update(m[(i, j)].re.to_le_bytes());
            h.update(m[(i, j)].im.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TripleSummary {
    pub value: f64,
    pub trace_k: f64,
    pub trace_l: f64,
    pub verified: bool,
    pub worst_residual: Option<f64>,
    pub k_sha256: String,
    pub l_sha256: String,
    pub v_sha256: String,
}

impl TripleSummary {
    pub fn of(t: &FeasibleTriple) -> Self {
        Self {
            value: t.value,
            trace_k: t.k.trace(),
            trace_l: t.l.trace(),
            verified: t.is_verified(),
            worst_residual: t.verification.as_ref().map(|v| v.worst()),
            k_sha256: fingerprint(&t.k),
            l_sha256: fingerprint(&t.l),
            v_sha256: fingerprint(t.v.op()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SigmaSummary {
    pub side: Subsystem,
    pub beta: f64,
    pub trace: f64,
    pub sigma_sha256: String,
    pub triple: TripleSummary,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum CertificateSummary {
    None,
    Triple(TripleSummary),
    Sigma { sigmas: Vec<SigmaSummary> },
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StatsReport {
    pub iterations: usize,
    pub solves: usize,
    pub elapsed_ms: f64,
}

impl From<SolverStats> for StatsReport {
    fn from(s: SolverStats) -> Self {
        Self {
            iterations: s.iterations,
            solves: s.solves,
            elapsed_ms: s.elapsed_ms,
        }
    }
}

/// JSON view of a [`BoundResult`]: operators are replaced by fingerprints.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport {
    pub method: Method,
    pub value: f64,
    pub value_bits: f64,
    pub certified: bool,
    pub fw_gap_bits: Option<f64>,
    pub penalty_bits: Option<f64>,
    pub certificate: CertificateSummary,
    pub stats: StatsReport,
    pub history: Vec<f64>,
    pub warnings: Vec<String>,
}

impl BoundReport {
    pub fn of(r: &BoundResult) -> Self {
        let certificate = match &r.certificate {
            Certificate::None => CertificateSummary::None,
            Certificate::Triple(t) => CertificateSummary::Triple(TripleSummary::of(t)),
            Certificate::Sigma(list) => CertificateSummary::Sigma {
                sigmas: list
                    .iter()
                    .map(|c| SigmaSummary {
                        side: c.side,
                        beta: c.beta,
                        trace: c.sigma.trace(),
                        sigma_sha256: fingerprint(c.sigma.op()),
                        triple: TripleSummary::of(&c.triple),
                    })
                    .collect(),
            },
        };
        Self {
            method: r.method,
            value: r.value,
            value_bits: r.value_bits,
            certified: r.certified,
            fw_gap_bits: r.fw_gap_bits,
            penalty_bits: r.penalty_bits,
            certificate,
            stats: r.stats.into(),
            history: r.history.clone(),
            warnings: r.warnings.clone(),
        }
    }
}

pub fn bound_to_json(r: &BoundResult) -> String {
    serde_json::to_string_pretty(&BoundReport::of(r)).expect("report serializes")
}
