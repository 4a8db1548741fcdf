//! `lambda_eta(gamma)` for the first sphere eigenvalue and a hyperbolic
//! one, with the convergence verdict for each.

use kinetic_spectra::operator::TruncationPolicy;
use kinetic_spectra::spectra::{convergence_summary, gamma_sweep, log_grid};

fn main() -> kinetic_spectra::Result<()> {
    let grid = log_grid(0.0, 4.0, 17)?;
    for (eta, curvature) in [(2.0, 1.0), (5.0, -1.0)] {
        let table = gamma_sweep(eta, curvature, &grid, TruncationPolicy::default())?;
        println!("eta = {eta}, K = {curvature}, k_max = {}", table.k_max);
        println!("{:>10} {:>22} {:>22} {:>10} {:>6}", "gamma", "re lambda", "im lambda", "error", "simple");
        for r in &table.rows {
            println!(
                "{:>10.3} {:>22.15} {:>22.15} {:>10.3e} {:>6}",
                r.gamma, r.lambda.re, r.lambda.im, r.abs_error, r.simple
            );
        }
        let s = convergence_summary(&table);
        println!(
            "tail monotone {}, fitted rate {:.3} (empirical), r_hat {:?}, collision gamma {:?}\n",
            s.monotone_tail,
            s.fitted_rate.unwrap_or(f64::NAN),
            s.empirical_r,
            s.collision_gamma
        );
    }
    Ok(())
}
