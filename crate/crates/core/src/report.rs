//! Deterministic check reports.
//!
//! A [`Report`] is a sorted list of [`CheckRecord`]s plus an overall verdict.
//! Reports are byte-identical across runs with the same input, seed and tool
//! version: records are sorted by check id, no timestamps or durations are
//! recorded, and all maps involved are ordered.
//!
//! `warn` records flag documented discrepancies (they never affect the exit
//! verdict); `info` records carry experiment outcomes with no pass/fail
//! semantics.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Warn,
    Info,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Warn => "WARN",
            Status::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<u64>,
    /// Normalized residual (raw residual divided by the check's scale
    /// factor), comparable against `threshold`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub diagnostics: Vec<String>,
}

impl CheckRecord {
    /// Residual-style check: passes when `residual <= threshold`.
    pub fn residual_check(id: impl Into<String>, residual: f64, threshold: f64, points: usize) -> Self {
        CheckRecord {
            id: id.into(),
            status: if residual <= threshold {
                Status::Pass
            } else {
                Status::Fail
            },
            points: Some(points as u64),
            residual: Some(residual),
            threshold: Some(threshold),
            diagnostics: Vec::new(),
        }
    }

    /// Negative control: passes when `residual >= threshold` (the check must
    /// be able to detect a planted defect).
    pub fn negative_control(id: impl Into<String>, residual: f64, threshold: f64, points: usize) -> Self {
        CheckRecord {
            id: id.into(),
            status: if residual >= threshold {
                Status::Pass
            } else {
                Status::Fail
            },
            points: Some(points as u64),
            residual: Some(residual),
            threshold: Some(threshold),
            diagnostics: vec!["negative control: residual must exceed the threshold".into()],
        }
    }

    pub fn info(id: impl Into<String>, diagnostics: Vec<String>) -> Self {
        CheckRecord {
            id: id.into(),
            status: Status::Info,
            points: None,
            residual: None,
            threshold: None,
            diagnostics,
        }
    }

    pub fn with_diagnostic(mut self, line: impl Into<String>) -> Self {
        self.diagnostics.push(line.into());
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub tool_version: String,
    pub input_digest: String,
    pub verdict: String,
    pub passed: usize,
    pub failed: usize,
    pub warned: usize,
    pub info: usize,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(input_digest: String, mut checks: Vec<CheckRecord>) -> Self {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
        let failed = count(Status::Fail);
        Report {
            schema: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest,
            verdict: if failed > 0 { "fail" } else { "pass" }.to_string(),
            passed: count(Status::Pass),
            failed,
            warned: count(Status::Warn),
            info: count(Status::Info),
            checks,
        }
    }

    /// Process exit code: 0 all pass, 1 at least one failure. Warnings and
    /// info records never affect it.
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            1
        } else {
            0
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serialization")
    }

    pub fn render_human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "verification report (schema {}, tool {})\ninput: {}\n",
            self.schema, self.tool_version, self.input_digest
        ));
        for c in &self.checks {
            let mut line = format!("{:<4} {}", c.status.to_string(), c.id);
            if let Some(r) = c.residual {
                line.push_str(&format!("  residual={r:.3e}"));
            }
            if let Some(t) = c.threshold {
                line.push_str(&format!("  threshold={t:.1e}"));
            }
            if let Some(p) = c.points {
                line.push_str(&format!("  points={p}"));
            }
            out.push_str(&line);
            out.push('\n');
            for d in &c.diagnostics {
                out.push_str(&format!("     | {d}\n"));
            }
        }
        out.push_str(&format!(
            "verdict: {} ({} pass, {} fail, {} warn, {} info)\n",
            self.verdict, self.passed, self.failed, self.warned, self.info
        ));
        out
    }
}

/// Hex SHA-256 of raw input bytes, recorded in reports for traceability.
pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_str(s: &str) -> String {
    digest_bytes(s.as_bytes())
}
