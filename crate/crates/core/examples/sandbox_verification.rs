//! Establishing a snippet's output by repeated sandboxed runs.
//!
//! With `SKATE_SANDBOX_CMD` set, snippets run through that harness.
//! Otherwise canned results stand in for it:
//!
//! ```text
//! SKATE_SANDBOX_CMD="python3 crates/core/tests/fixtures/harness_stub.py" \
//!     cargo run --example sandbox_verification
//! ```

use skate::sandbox::{verify_question, ExecStatus, ExecutionResult, Executor, FixtureExecutor, ProcessExecutor, SANDBOX_CMD_ENV};
use skate::default_config;

const SNIPPETS: [&str; 4] = [
    "acc = 0\nfor i in range(4):\n    acc += i * i\nprint(acc)",
    "xs = [1, 2]\nprint(xs[5])",
    "print(hash('salted') % 97)",
    "x = 1",
];

fn main() {
    let config = default_config();
    let executor: Box<dyn Executor> = match std::env::var(SANDBOX_CMD_ENV) {
        Ok(cmd) => {
            println!("harness: {cmd}");
            Box::new(ProcessExecutor::from_command_line(&cmd).expect("unparsable harness command"))
        }
        Err(_) => {
            println!("harness: canned results ({SANDBOX_CMD_ENV} not set)");
            let f = FixtureExecutor::new();
            f.register(SNIPPETS[0], "14\n");
            f.register_result(
                SNIPPETS[1],
                ExecutionResult::failed(ExecStatus::RuntimeError, "", "IndexError: list index out of range"),
            );
            f.register_sequence(SNIPPETS[2], &["41\n", "7\n"]);
            f.register(SNIPPETS[3], "");
            Box::new(f)
        }
    };
    for code in SNIPPETS {
        let r = verify_question(executor.as_ref(), code, config.verification_runs, &config).unwrap();
        let first = code.lines().next().unwrap_or_default();
        match (r.truth, r.failure_reason) {
            (Some(t), _) => println!("{first:<40} -> verified: {t:?}"),
            (_, Some(why)) => println!("{first:<40} -> {why}"),
            _ => unreachable!(),
        }
    }
}
