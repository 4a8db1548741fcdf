//! Minimum of Re <P v, v> over random unit vectors for a few gammas.

use kinetic_spectra::ladder::{CasimirBlock, LadderCoefficients};
use kinetic_spectra::operator::{accretivity_minimum, assemble_p_gamma};

fn main() -> kinetic_spectra::Result<()> {
    for (eta, curvature) in [(6.0, 1.0), (2.0, 0.0), (10.0, -1.0)] {
        let coeffs = LadderCoefficients::new(CasimirBlock::for_curvature(eta, curvature, 48)?)?;
        for gamma in [0.5, 2.0, 10.0] {
            let p = assemble_p_gamma(&coeffs, gamma)?;
            let m = accretivity_minimum(&p, 1000, 7);
            println!("eta = {eta:<4} K = {curvature:<4} gamma = {gamma:<4} min Re<Pv,v> = {m:.6e}");
        }
    }
    Ok(())
}
