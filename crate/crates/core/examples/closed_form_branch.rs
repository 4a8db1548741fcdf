//! Track the branch through 0 on the l = 1 sphere block and compare it with
//! the roots of `(1 - mu)(mu^2 - mu + x^2)`.

use kinetic_spectra::eig::track_branch;
use kinetic_spectra::ladder::{CasimirBlock, LadderCoefficients};
use num_complex::Complex64;

fn main() -> kinetic_spectra::Result<()> {
    let coeffs = LadderCoefficients::new(CasimirBlock::intrinsic(2.0, 1.0)?)?;
    let branch = track_branch(&coeffs, Complex64::new(0.45, 0.0), 9)?;
    println!("{:>8} {:>22} {:>22} {:>10} {:>10}", "x", "mu", "closed form", "|diff|", "gap");
    for s in &branch.samples {
        let x = s.x.re;
        let exact = 0.5 * (1.0 - (1.0 - 4.0 * x * x).sqrt());
        println!(
            "{x:>8.4} {:>22.16} {exact:>22.16} {:>10.2e} {:>10.3e}",
            s.mu.re,
            (s.mu.re - exact).abs(),
            s.gap
        );
    }
    Ok(())
}
