//! How Re lambda for the spectral gap approaches eta_1 on the unit sphere.

use kinetic_spectra::operator::TruncationPolicy;
use kinetic_spectra::spectra::{log_grid, mixing_report, sphere_spectrum, sweep_spectrum};

fn main() -> kinetic_spectra::Result<()> {
    let spectrum = sphere_spectrum(1.0, 3)?;
    let grid = log_grid(0.0, 3.0, 13)?;
    let tables = sweep_spectrum(&spectrum, &grid, TruncationPolicy::default())
        .into_iter()
        .collect::<kinetic_spectra::Result<Vec<_>>>()?;
    let report = mixing_report(&spectrum, &tables)?;
    println!("eta_1 = {}", report.eta1);
    println!("{:>10} {:>18} {:>14} {:>18}", "gamma", "re lambda", "excess", "gap bound");
    for r in &report.rows {
        println!("{:>10.3} {:>18.12} {:>14.4e} {:>18.12}", r.gamma, r.re_lambda, r.excess, r.gap_bound);
    }
    println!(
        "limit estimate {:.12}, excess rate {:.3}, from above {}",
        report.limit_estimate,
        report.excess_rate.unwrap_or(f64::NAN),
        report.from_above
    );
    Ok(())
}
