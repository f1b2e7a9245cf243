//! Acceptance criteria 1–10, one PASS/FAIL line each.
//!
//! The process fails when a criterion fails, unless the report carries a
//! documented deviation; those are still printed as FAIL.

use std::process::ExitCode;

use jacobi_weyl::verify::{run_all, DEFAULT_SEED};

fn main() -> ExitCode {
    let seed = std::env::var("JWEYL_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    println!("acceptance suite, seed {seed}");
    let reports = run_all(seed);
    for r in &reports {
        println!("{}", r.line());
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    let documented = reports
        .iter()
        .filter(|r| !r.passed && r.known_deviation.is_some())
        .count();
    let hard = reports.len() - passed - documented;
    println!(
        "summary: {passed}/{} PASS, {documented} FAIL with documented deviation, {hard} FAIL",
        reports.len()
    );
    if hard == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
