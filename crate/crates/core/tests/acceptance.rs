//! Runs every numbered check on the default configuration and prints one
//! report line per check. Exits non-zero if any check fails.

use std::process::ExitCode;
use std::time::Instant;

use szego::config::RunConfig;
use szego::verify::{run_criterion, Status, CRITERIA};

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let mut failed = Vec::new();
    for id in 1..=CRITERIA.len() {
        let start = Instant::now();
        let report = run_criterion(id, &cfg);
        println!("{}  [{:.1}s]", report.line(), start.elapsed().as_secs_f64());
        if report.status() == Status::Fail {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} checks passed", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed checks {failed:?}");
        ExitCode::FAILURE
    }
}
