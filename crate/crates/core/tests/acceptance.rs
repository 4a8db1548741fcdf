//! Runs every acceptance criterion at full tolerance and prints one
//! `[PASS]` / `[FAIL]` line each. Plain `main` so the lines are never
//! captured; a failure exits non-zero.

use std::process::ExitCode;
use std::time::Instant;

use kinetic_spectra::acceptance::{self, AcceptanceOptions};

fn main() -> ExitCode {
    let opts = AcceptanceOptions::default();
    let mut failed = 0;
    for criterion in acceptance::CRITERIA {
        let start = Instant::now();
        let outcome = criterion(&opts);
        println!("{outcome}  ({:.2?})", start.elapsed());
        if !outcome.passed {
            failed += 1;
        }
    }

    // The criteria must be able to fail: crushing the tolerances has to
    // flip at least the closed-form and projection checks.
    let strict = AcceptanceOptions { tolerance_scale: 1e-30, ..Default::default() };
    let flips = [acceptance::closed_form_branch, acceptance::riesz].iter().all(|c| !c(&strict).passed);
    println!("[{}] tightened tolerances fail", if flips { "PASS" } else { "FAIL" });
    if !flips {
        failed += 1;
    }

    println!("{} failures", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
