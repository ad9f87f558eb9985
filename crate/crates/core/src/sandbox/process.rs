use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::thread::JoinHandle;
use std::time::Duration;

use wait_timeout::ChildExt;

use super::{ExecStatus, ExecutionRequest, ExecutionResult, Executor, HarnessRequest, HarnessResponse, SandboxError};
use crate::config::GameConfig;

/// Env var that overrides the `sandbox_harness_cmd` config key.
pub const SANDBOX_CMD_ENV: &str = "SKATE_SANDBOX_CMD";

/// Extra wall-clock time a worker gets beyond the request timeout before it
/// is killed.
pub const KILL_GRACE: Duration = Duration::from_secs(1);

/// Harness command line from the environment or config, split shell-style.
/// `None` when neither is set.
pub fn resolve_harness_cmd(config: &GameConfig) -> Option<Vec<String>> {
    let raw = std::env::var(SANDBOX_CMD_ENV)
        .ok()
        .filter(|s| !s.trim().is_empty())
        .unwrap_or_else(|| config.sandbox_harness_cmd.clone());
    if raw.trim().is_empty() {
        return None;
    }
    shlex::split(&raw).filter(|argv| !argv.is_empty())
}

/// Spawns one harness worker per request.
#[derive(Clone, Debug)]
pub struct ProcessExecutor {
    argv: Vec<String>,
    grace: Duration,
}

impl ProcessExecutor {
    pub fn new(argv: Vec<String>) -> Result<Self, SandboxError> {
        if argv.is_empty() {
            return Err(SandboxError::EmptyCommand);
        }
        Ok(Self { argv, grace: KILL_GRACE })
    }

    pub fn from_command_line(cmd: &str) -> Result<Self, SandboxError> {
        Self::new(shlex::split(cmd).unwrap_or_default())
    }

    pub fn command_line(&self) -> String {
        self.argv.join(" ")
    }

    fn spawn(&self) -> Result<Child, SandboxError> {
        Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| SandboxError::Spawn { cmd: self.command_line(), source })
    }
}

fn drain<R: Read + Send + 'static>(mut pipe: R) -> JoinHandle<String> {
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    })
}

impl Executor for ProcessExecutor {
    fn execute(&self, request: &ExecutionRequest) -> Result<ExecutionResult, SandboxError> {
        let mut child = self.spawn()?;
        let stdout = drain(child.stdout.take().expect("piped stdout"));
        let stderr = drain(child.stderr.take().expect("piped stderr"));
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            // A worker that exits before reading its request shows up below
            // as a missing response.
            let _ = stdin.write_all(HarnessRequest::from(request).to_line().as_bytes());
        }

        let status = match child.wait_timeout(request.timeout + self.grace)? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(ExecutionResult::failed(
                    ExecStatus::Timeout,
                    "",
                    format!("worker killed after {:?}", request.timeout + self.grace),
                ));
            }
        };
        let out = stdout.join().unwrap_or_default();
        let err = stderr.join().unwrap_or_default();

        let Some(line) = out.lines().find(|l| !l.trim().is_empty()) else {
            return Ok(ExecutionResult::failed(
                ExecStatus::HarnessFailure,
                "",
                format!("worker exited with {status} without a response; stderr: {}", err.trim()),
            ));
        };
        match HarnessResponse::parse_line(line) {
            Ok(response) => Ok(response.into_result()),
            Err(e) => Ok(ExecutionResult::failed(
                ExecStatus::HarnessFailure,
                "",
                format!("unparseable worker response ({e}): {line}"),
            )),
        }
    }
}
