//! Second-order series of the branch at x = 0 against the tracked branch.

use kinetic_spectra::eig::track_branch;
use kinetic_spectra::ladder::{CasimirBlock, LadderCoefficients};
use kinetic_spectra::perturb::rs_series;
use num_complex::Complex64;

fn main() -> kinetic_spectra::Result<()> {
    for (eta, curvature) in [(2.0, 1.0), (12.0, 1.0), (1.0, 0.0), (10.0, -1.0)] {
        let coeffs = LadderCoefficients::new(CasimirBlock::for_curvature(eta, curvature, 64)?)?;
        let series = rs_series(&coeffs)?;
        println!(
            "eta = {eta:<4} K = {curvature:<4} mu1 = {:.1e}  mu2 = {:.15}  mu''(0) = {:.15}",
            series.mu1.norm(),
            series.mu2.re,
            series.second_derivative().re
        );
        for x in [0.1, 0.05, 0.025, 0.0125] {
            let z = Complex64::new(x, 0.0);
            let mu = track_branch(&coeffs, z, 4)?.final_mu()?;
            println!("    x = {x:<7} |mu - series| = {:.3e}", (mu - series.taylor(z)).norm());
        }
    }
    Ok(())
}
