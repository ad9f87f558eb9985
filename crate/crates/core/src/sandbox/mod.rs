//! Ground-truth verification of candidate snippets.
//!
//! Candidate code never runs in this process. An [`Executor`] hands it to an
//! isolated harness worker ([`ProcessExecutor`]) or, for offline scripted
//! games, looks the snippet up in a table of pre-verified fixtures
//! ([`FixtureExecutor`]).

mod fixture;
mod process;
mod protocol;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::GameConfig;

pub use fixture::FixtureExecutor;
pub use process::{resolve_harness_cmd, ProcessExecutor, KILL_GRACE, SANDBOX_CMD_ENV};
pub use protocol::{HarnessRequest, HarnessResponse};

/// Infrastructure failures: the harness could not be reached at all.
#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("failed to launch sandbox harness `{cmd}`: {source}")]
    Spawn {
        cmd: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sandbox harness command is empty")]
    EmptyCommand,
    #[error("sandbox I/O failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionRequest {
    pub code: String,
    pub timeout: Duration,
    pub memory_limit: u64,
}

impl ExecutionRequest {
    pub fn new(code: impl Into<String>) -> Self {
        Self { code: code.into(), timeout: Duration::from_secs(5), memory_limit: 256 * 1024 * 1024 }
    }

    pub fn from_config(code: impl Into<String>, config: &GameConfig) -> Self {
        Self {
            code: code.into(),
            timeout: Duration::from_millis(config.sandbox_timeout_ms),
            memory_limit: config.sandbox_memory_limit_bytes,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExecStatus {
    Ok,
    RuntimeError,
    Timeout,
    ResourceExceeded,
    HarnessFailure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionResult {
    pub status: ExecStatus,
    pub stdout_capture: String,
    /// Captured output without trailing newlines; present iff status is `Ok`.
    pub final_value: Option<String>,
    pub error_detail: String,
}

impl ExecutionResult {
    pub fn ok(stdout: impl Into<String>) -> Self {
        let stdout = stdout.into();
        let value = stdout.trim_end_matches(['\n', '\r']).to_string();
        Self { status: ExecStatus::Ok, stdout_capture: stdout, final_value: Some(value), error_detail: String::new() }
    }

    pub fn failed(status: ExecStatus, stdout: impl Into<String>, detail: impl Into<String>) -> Self {
        debug_assert_ne!(status, ExecStatus::Ok);
        Self { status, stdout_capture: stdout.into(), final_value: None, error_detail: detail.into() }
    }
}

pub trait Executor: Send + Sync {
    fn execute(&self, request: &ExecutionRequest) -> Result<ExecutionResult, SandboxError>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerificationFailure {
    RuntimeError(String),
    Timeout(String),
    ResourceExceeded(String),
    HarnessFailure(String),
    Nondeterministic(String),
    /// The snippet ran cleanly but printed nothing.
    NoOutput,
}

impl fmt::Display for VerificationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RuntimeError(d) => write!(f, "RUNTIME_ERROR: {d}"),
            Self::Timeout(d) => write!(f, "TIMEOUT: {d}"),
            Self::ResourceExceeded(d) => write!(f, "RESOURCE_EXCEEDED: {d}"),
            Self::HarnessFailure(d) => write!(f, "HARNESS_FAILURE: {d}"),
            Self::Nondeterministic(d) => write!(f, "NONDETERMINISTIC: {d}"),
            Self::NoOutput => f.write_str("NO_OUTPUT: the snippet printed nothing"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationResult {
    pub verifiable: bool,
    pub truth: Option<String>,
    pub failure_reason: Option<VerificationFailure>,
}

impl VerificationResult {
    fn pass(truth: String) -> Self {
        Self { verifiable: true, truth: Some(truth), failure_reason: None }
    }

    fn fail(reason: VerificationFailure) -> Self {
        Self { verifiable: false, truth: None, failure_reason: Some(reason) }
    }
}

/// Runs `code` `runs` times in separate workers. Verifiable iff every run
/// succeeds with the same non-empty output.
pub fn verify_question(
    executor: &dyn Executor,
    code: &str,
    runs: usize,
    config: &GameConfig,
) -> Result<VerificationResult, SandboxError> {
    let request = ExecutionRequest::from_config(code, config);
    let mut truth: Option<String> = None;
    for run in 0..runs.max(1) {
        let result = executor.execute(&request)?;
        let value = match result.status {
            ExecStatus::Ok => result.final_value.unwrap_or_default(),
            ExecStatus::RuntimeError => {
                return Ok(VerificationResult::fail(VerificationFailure::RuntimeError(result.error_detail)))
            }
            ExecStatus::Timeout => {
                return Ok(VerificationResult::fail(VerificationFailure::Timeout(result.error_detail)))
            }
            ExecStatus::ResourceExceeded => {
                return Ok(VerificationResult::fail(VerificationFailure::ResourceExceeded(result.error_detail)))
            }
            ExecStatus::HarnessFailure => {
                return Ok(VerificationResult::fail(VerificationFailure::HarnessFailure(result.error_detail)))
            }
        };
        if value.is_empty() {
            return Ok(VerificationResult::fail(VerificationFailure::NoOutput));
        }
        match &truth {
            None => truth = Some(value),
            Some(first) if *first != value => {
                return Ok(VerificationResult::fail(VerificationFailure::Nondeterministic(format!(
                    "run 1 printed {first:?} but run {} printed {value:?}",
                    run + 1
                ))))
            }
            Some(_) => {}
        }
    }
    Ok(VerificationResult::pass(truth.expect("at least one run")))
}
