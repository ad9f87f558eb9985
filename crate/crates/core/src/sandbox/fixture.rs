use std::collections::HashMap;
use std::sync::Mutex;

use super::{ExecStatus, ExecutionRequest, ExecutionResult, Executor, SandboxError};

/// Offline executor backed by a table of known snippets.
///
/// Nothing is executed: each registered snippet maps to a canned result (or a
/// cycle of results, for nondeterminism fixtures). Unregistered code reports a
/// runtime error. Every call is recorded.
#[derive(Default)]
pub struct FixtureExecutor {
    table: Mutex<HashMap<String, (Vec<ExecutionResult>, usize)>>,
    calls: Mutex<Vec<String>>,
}

impl FixtureExecutor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a snippet whose stdout is `stdout` on every run.
    pub fn register(&self, code: &str, stdout: &str) {
        self.register_result(code, ExecutionResult::ok(stdout));
    }

    pub fn register_result(&self, code: &str, result: ExecutionResult) {
        self.table.lock().expect("fixture table").insert(code.to_string(), (vec![result], 0));
    }

    /// Registers a snippet that prints each of `outputs` in turn, cycling.
    pub fn register_sequence(&self, code: &str, outputs: &[&str]) {
        let results = outputs.iter().map(|o| ExecutionResult::ok(*o)).collect();
        self.table.lock().expect("fixture table").insert(code.to_string(), (results, 0));
    }

    pub fn calls(&self) -> Vec<String> {
        self.calls.lock().expect("call log").clone()
    }

    pub fn len(&self) -> usize {
        self.table.lock().expect("fixture table").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Executor for FixtureExecutor {
    fn execute(&self, request: &ExecutionRequest) -> Result<ExecutionResult, SandboxError> {
        self.calls.lock().expect("call log").push(request.code.clone());
        let mut table = self.table.lock().expect("fixture table");
        Ok(match table.get_mut(&request.code) {
            Some((results, next)) => {
                let r = results[*next % results.len()].clone();
                *next += 1;
                r
            }
            None => ExecutionResult::failed(
                ExecStatus::RuntimeError,
                "",
                "snippet is not a registered fixture and no sandbox harness is configured",
            ),
        })
    }
}
