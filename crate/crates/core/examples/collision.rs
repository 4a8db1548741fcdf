//! Where the branch through 0 stops being simple, and what the sweep
//! reports below that point.

use kinetic_spectra::eig::track_branch;
use kinetic_spectra::ladder::{CasimirBlock, LadderCoefficients};
use kinetic_spectra::operator::TruncationPolicy;
use kinetic_spectra::spectra::gamma_sweep;
use num_complex::Complex64;

fn main() -> kinetic_spectra::Result<()> {
    for (eta, curvature) in [(2.0, 1.0), (6.0, 1.0), (5.0, -1.0)] {
        let coeffs = LadderCoefficients::new(CasimirBlock::for_curvature(eta, curvature, 48)?)?;
        let branch = track_branch(&coeffs, Complex64::new(-1.0, 0.0), 8)?;
        match branch.collision() {
            Some(x) => println!("eta = {eta}, K = {curvature}: collision at x = {:.8}, gamma = {:.6}", x.re, 2.0 / x.norm()),
            None => println!("eta = {eta}, K = {curvature}: no collision up to |x| = 1"),
        }
    }

    let table = gamma_sweep(2.0, 1.0, &[2.0, 3.0, 3.9, 4.1, 5.0], TruncationPolicy::default())?;
    for r in &table.rows {
        println!("gamma {:>4}: lambda = {:.12} simple {}", r.gamma, r.lambda, r.simple);
    }
    Ok(())
}
