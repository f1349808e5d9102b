//! Runs every acceptance criterion and prints one PASS/FAIL line each.

use std::process::ExitCode;

use l2tor_core::acceptance::{run_all, AcceptanceConfig};

fn main() -> ExitCode {
    let results = run_all(&AcceptanceConfig::default());
    for r in &results {
        println!("{}", r.line());
        for p in &r.parts {
            println!("       {} {:<15} {}", if p.passed { "ok  " } else { "FAIL" }, p.key, p.detail);
        }
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.key).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
