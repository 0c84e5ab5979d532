//! Machine-readable verification reports: versioned JSON and a flat CSV
//! slack series. Output is byte-deterministic for a given scenario and tool
//! version (sorted keys, fixed iteration orders, no timestamps).

use serde::Serialize;
use sha2::{Digest, Sha256};
use srf_core::Real;

pub const SCHEMA_VERSION: u32 = 1;

/// One slack sample row of the CSV series.
#[derive(Debug, Clone, Serialize)]
pub struct SlackRow {
    pub t: Option<Real>,
    pub pair_id: Option<usize>,
    pub tau: Option<Real>,
    pub slack: Real,
}

/// Outcome of one executed check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub op: String,
    pub status: CheckStatus,
    pub min_slack: Option<Real>,
    pub notes: Vec<String>,
    pub details: serde_json::Value,
    pub slack_rows: Vec<SlackRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Undetermined,
    ConfigError,
    NumericalFailure,
}

/// Whole-run report.
#[derive(Debug, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool_version: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub all_pass: bool,
    pub checks: Vec<CheckRecord>,
}

impl ReportDocument {
    pub fn new(scenario_bytes: &[u8], seed: u64, checks: Vec<CheckRecord>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(scenario_bytes);
        let hash = format!("sha256:{:x}", hasher.finalize());
        let all_pass = checks.iter().all(|c| c.status == CheckStatus::Pass);
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario_hash: hash,
            seed,
            all_pass,
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        // serde_json maps are sorted; struct fields are emitted in
        // declaration order: byte-deterministic
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV slack series with columns `check_id,t,pair_id,tau,slack`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check_id,t,pair_id,tau,slack\n");
        for check in &self.checks {
            for row in &check.slack_rows {
                let t = row.t.map(|v| format!("{}", v)).unwrap_or_default();
                let p = row.pair_id.map(|v| v.to_string()).unwrap_or_default();
                let tau = row.tau.map(|v| format!("{}", v)).unwrap_or_default();
                out.push_str(&format!("{},{},{},{},{}\n", check.id, t, p, tau, row.slack));
            }
        }
        out
    }

    /// Exit status per the CLI contract: 0 pass, 1 inequality violation,
    /// 2 configuration error, 3 numerical failure (stalled solver or a
    /// stiff ODE step).
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.status == CheckStatus::ConfigError) {
            2
        } else if self.checks.iter().any(|c| c.status == CheckStatus::NumericalFailure) {
            3
        } else if self
            .checks
            .iter()
            .any(|c| matches!(c.status, CheckStatus::Fail | CheckStatus::Undetermined))
        {
            1
        } else {
            0
        }
    }
}
