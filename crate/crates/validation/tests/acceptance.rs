//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report is printed in
//! order; the process fails if any criterion fails.

use std::panic::{AssertUnwindSafe, catch_unwind};
use std::time::{Duration, Instant};

use oamqkd_validation::*;

/// Name, check and runtime limit.
type Criterion = (&'static str, fn() -> Verdict, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("key-rate formulas", criterion_1, Duration::from_secs(1)),
        ("entanglement oracles", criterion_2, Duration::from_secs(1)),
        (
            "phase-screen statistics",
            criterion_3,
            Duration::from_secs(120),
        ),
        (
            "no-turbulence end-to-end",
            criterion_4,
            Duration::from_secs(10),
        ),
        (
            "turbulence decay shape",
            criterion_5,
            Duration::from_secs(30 * 60),
        ),
        ("link budget", criterion_6, Duration::from_secs(1)),
        (
            "tomography round trip",
            criterion_7,
            Duration::from_secs(60),
        ),
        (
            "determinism and parallel equivalence",
            criterion_8,
            Duration::from_secs(300),
        ),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && elapsed <= *limit, v.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {} [{name}]: {} ({:.2} s, limit {} s) {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
