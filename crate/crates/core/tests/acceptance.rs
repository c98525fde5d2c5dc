//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Criteria marked known-infeasible are reported but do not fail the run.

use std::process::ExitCode;
use std::time::Instant;

use moment_lab::acceptance::{self, CriterionResult};
use moment_lab::PrecisionContext;

fn main() -> ExitCode {
    let ctx = PrecisionContext::default();
    let t0 = Instant::now();
    let results: Vec<CriterionResult> = std::thread::scope(|s| {
        let handles: Vec<_> = acceptance::CRITERIA.iter().map(|c| s.spawn(|| acceptance::run(c, &ctx))).collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread panicked")).collect()
    });
    println!("acceptance criteria at {} bits", ctx.prec_bits);
    let mut unexpected = Vec::new();
    for r in &results {
        println!("{}", r.line());
        if !r.passed && r.known_infeasible.is_none() {
            unexpected.push(r.id);
        }
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} passed in {:.1} s", results.len(), t0.elapsed().as_secs_f64());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
