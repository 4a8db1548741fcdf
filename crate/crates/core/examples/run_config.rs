//! Programmatic version of `kbm run`: a flat torus sweep written to a
//! scratch directory.

use kinetic_spectra::config::{GridConfig, RunConfig, SurfaceConfig};
use kinetic_spectra::run::run;

fn main() {
    let mut config = RunConfig {
        surface: SurfaceConfig::Torus { side: 2.0 * std::f64::consts::PI, eta_cap: 2.5 },
        gamma_grid: GridConfig::Log { log_start: 0.0, log_end: 3.0, points: 31 },
        ..Default::default()
    };
    config.output.directory = std::env::temp_dir().join("kbm-example-torus");
    println!("{}", config.to_toml());
    let outcome = run(&config);
    for s in &outcome.summaries {
        println!("eta {} (m = {}): max tail error {:.3e}", s.eta, s.multiplicity, s.max_tail_error);
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if !outcome.success() {
        eprintln!("{:#?}", outcome.errors);
        std::process::exit(1);
    }
}
