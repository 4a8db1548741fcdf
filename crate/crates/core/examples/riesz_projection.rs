//! Riesz projections on the l = 1 block, and the perturbation radius of the
//! default contour as eta grows.

use kinetic_spectra::ladder::{CasimirBlock, LadderCoefficients};
use kinetic_spectra::operator::assemble_t;
use kinetic_spectra::perturb::{perturbation_radius, projection_defect, riesz_projection, Contour};
use num_complex::Complex64;

fn main() -> kinetic_spectra::Result<()> {
    let contour = Contour::default();
    let coeffs = LadderCoefficients::new(CasimirBlock::intrinsic(2.0, 1.0)?)?;
    for x in [0.0, 0.1, 0.3] {
        let p = riesz_projection(&assemble_t(&coeffs, Complex64::new(x, 0.0)), &contour)?;
        println!("x = {x}: trace {:.15}, ||P^2 - P|| {:.2e}", p.trace().re, projection_defect(&p));
    }

    println!("\n{:>6} {:>14} {:>14}", "eta", "radius", "0.5/sqrt(eta/2)");
    for eta in [2.0, 8.0, 32.0, 128.0] {
        let coeffs = LadderCoefficients::new(CasimirBlock::truncated(eta, -1.0, 64)?)?;
        let r = perturbation_radius(&coeffs, &contour)?;
        println!("{eta:>6} {r:>14.6e} {:>14.6e}", 0.5 / (eta / 2.0).sqrt());
    }
    Ok(())
}
