//! Adaptive truncation of unbounded ladders: the branch value at the target
//! coupling must not move when k_max doubles.

use kinetic_spectra::operator::{truncate, TruncationPolicy};

fn main() -> kinetic_spectra::Result<()> {
    for (eta, curvature) in [(1.0, 0.0), (5.0, -1.0), (40.0, -1.0)] {
        for gamma in [100.0, 1000.0, 10000.0] {
            let cert = truncate(eta, curvature, TruncationPolicy::Adaptive { tol: 1e-10 }, -2.0 / gamma)?;
            println!(
                "eta = {eta:<4} K = {curvature:<4} gamma = {gamma:<6} k_max = {:<4} shift = {:.2e}",
                cert.block.k_max,
                cert.shift.unwrap_or(0.0)
            );
        }
    }
    Ok(())
}
