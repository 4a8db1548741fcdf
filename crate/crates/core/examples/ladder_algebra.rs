//! Ladder coefficients and the algebraic identities they satisfy on a
//! sphere block and on a truncated hyperbolic block.

use kinetic_spectra::ladder::{
    casimir_residual, ladder_extent, raising_lowering_residual, CasimirBlock, LadderCoefficients,
};

fn main() -> kinetic_spectra::Result<()> {
    for (eta, curvature) in [(6.0, 1.0), (5.0, -1.0), (2.0, 0.0)] {
        let extent = ladder_extent(eta, curvature)?;
        let block = CasimirBlock::for_curvature(eta, curvature, 12)?;
        let coeffs = LadderCoefficients::new(block)?;
        println!("eta = {eta}, K = {curvature}: {extent:?}, dim {}", coeffs.block.dim());
        for k in coeffs.block.k_min..coeffs.block.k_max.min(coeffs.block.k_min + 6) {
            println!("  a_{k:<3} = {:.12}", coeffs.coeff(k));
        }
        println!("  casimir residual      {:.3e}", casimir_residual(&coeffs));
        println!("  X+X- scalar residual  {:.3e}", raising_lowering_residual(&coeffs));
    }
    Ok(())
}
