//! JSON run report.
//!
//! Everything except `timings` and `content_digest` is covered by `content_digest`, the SHA-256
//! of the compact JSON encoding of those fields, so two runs can be compared by digest alone.

use serde::Serialize;
use sha2::{Digest, Sha256};
use wavefront_core::{BoundsReport, GammaResult, PotentialConstants, SpeedResult, VerifyReport};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Result of one speed in `gamma` mode; exactly one of `result` and `error` is set.
#[derive(Debug, Clone, Serialize)]
pub struct GammaEntry {
    pub c: f64,
    pub result: Option<GammaResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeResult {
    Bounds {},
    Gamma { entries: Vec<GammaEntry> },
    Speed { speed: Box<SpeedResult> },
    Verify { c: f64, gamma_hat: f64, profile: String },
}

/// The reproducible part of a report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBody {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_digest: String,
    pub config: RunConfig,
    pub constants: PotentialConstants,
    pub bounds: BoundsReport,
    pub result: ModeResult,
    pub verify: Option<VerifyReport>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub setup_ms: f64,
    pub solve_ms: f64,
    pub verify_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub body: ReportBody,
    pub content_digest: String,
    pub timings: Timings,
}

pub fn sha256_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("report values serialize");
    hex::encode(Sha256::digest(&bytes))
}

impl RunReport {
    pub fn new(body: ReportBody, timings: Timings) -> Self {
        let content_digest = sha256_json(&body);
        RunReport { body, content_digest, timings }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values serialize")
    }
}
