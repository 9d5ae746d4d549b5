//! Distributed inner-product estimators.
//!
//! Three routes to tr(rho_A rho_B) between two n-qubit modules:
//!
//! * [`qst`] — full tomographic reconstruction of both modules,
//! * [`rm`] — cross-correlated randomized local measurements,
//! * [`bbm`] — pairwise Bell-basis measurements across the modules,
//!
//! plus single-qubit unitary fidelity estimation in [`unitary`] and phase
//! sweeps over prepared state pairs in [`sweep`].

pub mod bbm;
pub mod qst;
pub mod rm;
pub mod sweep;
pub mod unitary;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Which estimation protocol produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Qst,
    Rm,
    Bbm,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Qst, Protocol::Rm, Protocol::Bbm];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Qst => "qst",
            Protocol::Rm => "rm",
            Protocol::Bbm => "bbm",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qst" => Ok(Protocol::Qst),
            "rm" => Ok(Protocol::Rm),
            "bbm" => Ok(Protocol::Bbm),
            other => Err(Error::Parse(format!("unknown protocol {other:?}"))),
        }
    }
}

/// One overlap estimate. `phi` is filled by sweep drivers; estimators
/// working from bare datasets leave it unset. Raw RM and BBM estimates are
/// unbiased and may fall slightly outside [0, 1]; QST estimates are clamped
/// to physical states by construction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EstimateReport {
    pub protocol: Protocol,
    pub n: usize,
    pub phi: Option<f64>,
    pub overlap: f64,
    pub variance: Option<f64>,
    pub shots: u64,
    pub seed: u64,
}

impl EstimateReport {
    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(reports: &[EstimateReport], w: &mut W) -> Result<()> {
        for r in reports {
            let line = serde_json::to_string(r)
                .map_err(|e| Error::Parse(format!("report serialization: {e}")))?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<EstimateReport>> {
        let mut out = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            out.push(
                serde_json::from_str(&line)
                    .map_err(|e| Error::Parse(format!("report line: {e}")))?,
            );
        }
        Ok(out)
    }
}
