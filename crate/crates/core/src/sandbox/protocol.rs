//! One-shot JSON line protocol spoken with a harness worker.
//!
//! Request:  `{"code": str, "timeout_ms": int, "memory_limit_bytes": int}`
//! Response: `{"status": "ok"|"error"|"timeout"|"resource", "output": str, "error": str}`

use serde::{Deserialize, Serialize};

use super::{ExecStatus, ExecutionRequest, ExecutionResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessRequest {
    pub code: String,
    pub timeout_ms: u64,
    pub memory_limit_bytes: u64,
}

impl From<&ExecutionRequest> for HarnessRequest {
    fn from(r: &ExecutionRequest) -> Self {
        Self {
            code: r.code.clone(),
            timeout_ms: r.timeout.as_millis() as u64,
            memory_limit_bytes: r.memory_limit,
        }
    }
}

impl HarnessRequest {
    /// The request as a single line, newline-terminated.
    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("request serializes");
        line.push('\n');
        line
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessResponse {
    pub status: String,
    pub output: String,
    pub error: String,
}

impl HarnessResponse {
    pub fn ok(output: impl Into<String>) -> Self {
        Self { status: "ok".into(), output: output.into(), error: String::new() }
    }

    pub fn parse_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line.trim_end_matches(['\n', '\r']))
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("response serializes");
        line.push('\n');
        line
    }

    pub fn into_result(self) -> ExecutionResult {
        let status = match self.status.as_str() {
            "ok" => return ExecutionResult::ok(self.output),
            "error" => ExecStatus::RuntimeError,
            "timeout" => ExecStatus::Timeout,
            "resource" => ExecStatus::ResourceExceeded,
            other => {
                return ExecutionResult::failed(
                    ExecStatus::HarnessFailure,
                    self.output,
                    format!("unknown status `{other}`"),
                )
            }
        };
        ExecutionResult::failed(status, self.output, self.error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn request_line_is_bit_exact() {
        let req = ExecutionRequest {
            code: "print(\"hi\")\nprint(2**10)".into(),
            timeout: Duration::from_secs(5),
            memory_limit: 268_435_456,
        };
        assert_eq!(
            HarnessRequest::from(&req).to_line(),
            "{\"code\":\"print(\\\"hi\\\")\\nprint(2**10)\",\"timeout_ms\":5000,\"memory_limit_bytes\":268435456}\n"
        );
    }

    #[test]
    fn golden_responses_decode() {
        let ok = HarnessResponse::parse_line("{\"status\":\"ok\",\"output\":\"1024\\n\",\"error\":\"\"}\n").unwrap();
        assert_eq!(ok.clone().into_result(), ExecutionResult::ok("1024\n"));
        assert_eq!(ok.to_line(), "{\"status\":\"ok\",\"output\":\"1024\\n\",\"error\":\"\"}\n");

        let err = HarnessResponse::parse_line(r#"{"status":"error","output":"","error":"ImportError: os"}"#).unwrap();
        let r = err.into_result();
        assert_eq!(r.status, ExecStatus::RuntimeError);
        assert_eq!(r.final_value, None);
        assert!(r.error_detail.contains("ImportError"));

        for (s, st) in [("timeout", ExecStatus::Timeout), ("resource", ExecStatus::ResourceExceeded), ("weird", ExecStatus::HarnessFailure)] {
            let line = format!(r#"{{"status":"{s}","output":"","error":""}}"#);
            assert_eq!(HarnessResponse::parse_line(&line).unwrap().into_result().status, st);
        }
    }

    #[test]
    fn malformed_responses_are_rejected() {
        assert!(HarnessResponse::parse_line("{\"status\":\"ok\"}").is_err());
        assert!(HarnessResponse::parse_line("not json").is_err());
        assert!(HarnessResponse::parse_line(r#"{"status":"ok","output":"","error":"","x":1}"#).is_err());
    }
}
