//! The acceptance suite with its default seed, as `kbm selftest` runs it.

use kinetic_spectra::acceptance::{run_all, AcceptanceOptions};

fn main() {
    let outcomes = run_all(&AcceptanceOptions::default());
    for o in &outcomes {
        println!("{o}");
    }
    if outcomes.iter().any(|o| !o.passed) {
        std::process::exit(1);
    }
}
