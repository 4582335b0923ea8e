//! Minimal harness for the acceptance suite: each check fills a [`Report`]
//! and [`run`] prints one PASS/FAIL line per check plus its notes.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

/// Accumulates sub-checks of one criterion.
#[derive(Debug, Default)]
pub struct Report {
    pub failed: Vec<String>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn check(&mut self, name: &str, ok: bool, detail: String) {
        let line = format!("{name}: {detail}");
        if !ok {
            self.failed.push(line.clone());
        }
        self.notes.push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    pub fn close(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        self.check(name, (got - want).abs() <= tol, format!("got {got:.6}, want {want} +/- {tol}"));
    }
}

/// `(id, title, body)`.
pub type Check = (&'static str, &'static str, fn(&mut Report));

/// Runs the checks whose id is in `selected` (all when empty) and returns
/// the number that failed. A panic counts as a failure.
pub fn run(checks: &[Check], selected: &[String]) -> usize {
    let mut failures = 0;
    let mut ran = 0;
    for (id, title, body) in checks {
        if !selected.is_empty() && !selected.iter().any(|s| s == id) {
            continue;
        }
        let start = Instant::now();
        let mut report = Report::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| body(&mut report)));
        let passed = outcome.is_ok() && report.failed.is_empty();
        ran += 1;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {id}: {} - {title} ({:.1}s)",
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for note in &report.notes {
            println!("    {note}");
        }
        if outcome.is_err() {
            println!("    panicked");
        }
    }
    println!("acceptance: {} of {ran} checks passed", ran - failures);
    failures
}
