//! The acceptance suite as its own test target. Runs without the libtest
//! harness so the per-criterion lines always reach the output.

use std::process::ExitCode;

use cylpot_core::acceptance::{run_criterion, CRITERION_COUNT};

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for id in 1..=CRITERION_COUNT {
        let outcome = run_criterion(id, 7).expect("known criterion");
        println!("{}", outcome.line());
        for (k, v) in &outcome.details {
            println!("      {k} = {v:.3e}");
        }
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {CRITERION_COUNT} of {CRITERION_COUNT} criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
