//! Acceptance suite: one PASS/FAIL line per numbered criterion.

use std::process::ExitCode;

use revheat::verify::{verify_all, VerifyConfig};

fn main() -> ExitCode {
    let results = match verify_all(&VerifyConfig::default()) {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL acceptance suite could not start: {e}");
            return ExitCode::FAILURE;
        }
    };
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
