//! End-to-end run: sweep every eigenvalue of a surface spectrum and write
//! tables, reports and plot data to the output directory.
//!
//! Layout of the output directory:
//!
//! ```text
//! tables/eta_000.csv   one gamma table per distinct eta (and .json)
//! summary.csv          convergence verdict per eta (and .json)
//! perturbation.csv     series coefficients and radius per eta (and .json)
//! diagnostics.json     accretivity, Casimir, slot-zero bound, mixing report
//! plot/eta_000.dat     gamma, |lambda - eta|
//! plot/mixing.dat      gamma, Re lambda_{eta_1}, gap bound
//! errors.json          only when something failed
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Check, OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::ladder::{casimir_residual, raising_lowering_residual, CasimirBlock, LadderCoefficients};
use crate::operator::{accretivity_minimum, assemble_p_gamma, default_k_max};
use crate::perturb::{perturbation_radius, remark_bound, rs_series};
use crate::spectra::{
    convergence_summary, mixing_report, sweep_spectrum, ConvergenceSummary, GammaTable, MixingReport,
    SurfaceSpectrum,
};

/// Fixed leading CSV columns of a gamma table.
pub const TABLE_COLUMNS: [&str; 7] = ["gamma", "re_lambda", "im_lambda", "abs_error", "simple", "k_max", "residual"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub stage: String,
    pub eta: Option<f64>,
    pub kind: String,
    pub message: String,
}

impl ErrorRecord {
    fn new(stage: &str, eta: Option<f64>, e: &Error) -> Self {
        Self { stage: stage.into(), eta, kind: e.kind().into(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationRecord {
    pub eta: f64,
    pub k_max: i64,
    pub mu1: Complex64,
    pub mu2: Complex64,
    /// `2 mu2`, the second derivative of the branch at 0.
    pub second_derivative: Complex64,
    /// `|mu2 - eta / 2|`.
    pub half_eta_residual: f64,
    /// `None` when the coupling vanishes and the radius is unbounded.
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccretivityRecord {
    pub eta: f64,
    pub gamma: f64,
    pub minimum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CasimirRecord {
    pub eta: f64,
    pub k_max: i64,
    pub truncated: bool,
    pub casimir_residual: f64,
    pub raising_lowering_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotZeroRecord {
    pub eta: f64,
    pub zeta: f64,
    pub computed: f64,
    pub closed_form: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub accretivity: Vec<AccretivityRecord>,
    pub casimir: Vec<CasimirRecord>,
    pub slot_zero_bound: Vec<SlotZeroRecord>,
    pub mixing: Option<MixingReport>,
}

#[derive(Debug, Default)]
pub struct RunOutcome {
    pub summaries: Vec<ConvergenceSummary>,
    pub files: Vec<PathBuf>,
    pub errors: Vec<ErrorRecord>,
}

impl RunOutcome {
    pub fn success(&self) -> bool {
        self.errors.is_empty()
    }
}

const ACCRETIVITY_GAMMAS: [f64; 3] = [0.5, 2.0, 10.0];
const SLOT_ZERO_SHIFTS: [f64; 3] = [0.25, 0.5, 0.75];

/// Runs the configured sweep. Failures never abort the whole run; they are
/// collected in the outcome and written to `errors.json`.
pub fn run(config: &RunConfig) -> RunOutcome {
    let mut outcome = RunOutcome::default();
    if let Err(e) = execute(config, &mut outcome) {
        outcome.errors.push(ErrorRecord::new("run", None, &e));
    }
    if !outcome.errors.is_empty() {
        let path = config.output.directory.join("errors.json");
        let written = fs::create_dir_all(&config.output.directory)
            .map_err(Error::from)
            .and_then(|_| write_json(&path, &outcome.errors));
        if written.is_ok() {
            outcome.files.push(path);
        }
    }
    outcome
}

fn execute(config: &RunConfig, outcome: &mut RunOutcome) -> Result<()> {
    config.validate()?;
    let spectrum = config.spectrum()?;
    let grid = config.gamma_grid.values()?;
    let dir = &config.output.directory;
    fs::create_dir_all(dir.join("tables"))?;
    fs::create_dir_all(dir.join("plot"))?;

    let results = sweep_spectrum(&spectrum, &grid, config.truncation);
    let mut tables: Vec<(usize, GammaTable)> = Vec::new();
    for (i, (entry, r)) in spectrum.entries.iter().zip(results).enumerate() {
        match r {
            Ok(t) => tables.push((i, t)),
            Err(e) => outcome.errors.push(ErrorRecord::new("gamma_sweep", Some(entry.eta), &e)),
        }
    }

    for (i, t) in &tables {
        let stem = format!("eta_{i:03}");
        for format in &config.output.formats {
            let path = match format {
                OutputFormat::Csv => {
                    let p = dir.join("tables").join(format!("{stem}.csv"));
                    write_table_csv(&p, t)?;
                    p
                }
                OutputFormat::Json => {
                    let p = dir.join("tables").join(format!("{stem}.json"));
                    write_json(&p, t)?;
                    p
                }
            };
            outcome.files.push(path);
        }
        let p = dir.join("plot").join(format!("{stem}.dat"));
        write_dat(&p, &format!("gamma abs_error (eta = {})", fmt(t.eta)), t.rows.iter().map(|r| vec![r.gamma, r.abs_error]))?;
        outcome.files.push(p);
    }

    let summaries: Vec<ConvergenceSummary> = tables.iter().map(|(_, t)| convergence_summary(t)).collect();
    write_records(config, outcome, "summary", &summaries, summary_row)?;
    outcome.summaries = summaries;

    let perturbation: Vec<Result<PerturbationRecord>> = tables
        .par_iter()
        .map(|(_, t)| perturbation_record(config, &spectrum, t))
        .collect();
    let mut records = Vec::new();
    for (r, (_, t)) in perturbation.into_iter().zip(&tables) {
        match r {
            Ok(r) => records.push(r),
            Err(e) => outcome.errors.push(ErrorRecord::new("perturbation", Some(t.eta), &e)),
        }
    }
    write_records(config, outcome, "perturbation", &records, perturbation_row)?;

    let diagnostics = diagnostics(config, &spectrum, &tables, outcome);
    let p = dir.join("diagnostics.json");
    write_json(&p, &diagnostics)?;
    outcome.files.push(p);
    if let Some(m) = &diagnostics.mixing {
        let p = dir.join("plot").join("mixing.dat");
        write_dat(
            &p,
            &format!("gamma re_lambda gap_bound (eta_1 = {})", fmt(m.eta1)),
            m.rows.iter().map(|r| vec![r.gamma, r.re_lambda, r.gap_bound]),
        )?;
        outcome.files.push(p);
    }
    Ok(())
}

fn block_for(spectrum: &SurfaceSpectrum, eta: f64, k_max: i64) -> Result<LadderCoefficients> {
    let k_max = if k_max > 0 { k_max } else { default_k_max(eta) };
    LadderCoefficients::new(CasimirBlock::for_curvature(eta, spectrum.curvature, k_max)?)
}

fn perturbation_record(config: &RunConfig, spectrum: &SurfaceSpectrum, t: &GammaTable) -> Result<PerturbationRecord> {
    let coeffs = block_for(spectrum, t.eta, t.k_max)?;
    let series = rs_series(&coeffs)?;
    let radius = if config.checks.contains(&Check::PerturbationRadius) {
        let r = perturbation_radius(&coeffs, &config.contour_shape()?)?;
        r.is_finite().then_some(r)
    } else {
        None
    };
    Ok(PerturbationRecord {
        eta: t.eta,
        k_max: coeffs.block.k_max,
        mu1: series.mu1,
        mu2: series.mu2,
        second_derivative: series.second_derivative(),
        half_eta_residual: (series.mu2 - 0.5 * t.eta).norm(),
        radius,
    })
}

fn diagnostics(
    config: &RunConfig,
    spectrum: &SurfaceSpectrum,
    tables: &[(usize, GammaTable)],
    outcome: &mut RunOutcome,
) -> Diagnostics {
    let mut d = Diagnostics::default();
    for (i, (_, t)) in tables.iter().enumerate() {
        let coeffs = match block_for(spectrum, t.eta, t.k_max) {
            Ok(c) => c,
            Err(e) => {
                outcome.errors.push(ErrorRecord::new("diagnostics", Some(t.eta), &e));
                continue;
            }
        };
        if config.checks.contains(&Check::Accretivity) {
            for (j, gamma) in ACCRETIVITY_GAMMAS.into_iter().enumerate() {
                let seed = config.seed.wrapping_add((ACCRETIVITY_GAMMAS.len() * i + j) as u64);
                match assemble_p_gamma(&coeffs, gamma) {
                    Ok(p) => d.accretivity.push(AccretivityRecord {
                        eta: t.eta,
                        gamma,
                        minimum: accretivity_minimum(&p, 1000, seed),
                    }),
                    Err(e) => outcome.errors.push(ErrorRecord::new("accretivity", Some(t.eta), &e)),
                }
            }
        }
        if config.checks.contains(&Check::Casimir) {
            d.casimir.push(CasimirRecord {
                eta: t.eta,
                k_max: coeffs.block.k_max,
                truncated: !coeffs.block.finite,
                casimir_residual: casimir_residual(&coeffs),
                raising_lowering_residual: raising_lowering_residual(&coeffs),
            });
        }
        if config.checks.contains(&Check::SlotZeroBound) && t.eta > 0.0 {
            for zeta in SLOT_ZERO_SHIFTS {
                match remark_bound(t.eta, Complex64::new(zeta, 0.0)) {
                    Ok(b) => d.slot_zero_bound.push(SlotZeroRecord {
                        eta: t.eta,
                        zeta,
                        computed: b.computed,
                        closed_form: b.closed_form,
                        relative_error: b.relative_error(),
                    }),
                    Err(e) => outcome.errors.push(ErrorRecord::new("slot_zero_bound", Some(t.eta), &e)),
                }
            }
        }
    }
    if config.checks.contains(&Check::Mixing) && spectrum.spectral_gap().is_some() {
        let only: Vec<GammaTable> = tables.iter().map(|(_, t)| t.clone()).collect();
        match mixing_report(spectrum, &only) {
            Ok(m) => d.mixing = Some(m),
            Err(e) => outcome.errors.push(ErrorRecord::new("mixing", None, &e)),
        }
    }
    d
}

/// Shortest round-trip decimal form.
fn fmt(v: f64) -> String {
    format!("{v}")
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_table_csv(path: &Path, t: &GammaTable) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = TABLE_COLUMNS.to_vec();
    header.extend(["eta", "curvature", "certificate"]);
    w.write_record(&header).map_err(csv_error)?;
    for r in &t.rows {
        w.write_record([
            num(r.gamma),
            num(r.lambda.re),
            num(r.lambda.im),
            num(r.abs_error),
            r.simple.to_string(),
            r.k_max.to_string(),
            num(r.residual),
            num(t.eta),
            num(t.curvature),
            opt(r.certificate),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

const SUMMARY_HEADER: [&str; 13] = [
    "eta",
    "curvature",
    "multiplicity",
    "k_max",
    "tail_start",
    "max_tail_error",
    "gamma_max",
    "error_at_gamma_max",
    "monotone_tail",
    "fitted_rate_empirical",
    "empirical_r",
    "collision_gamma",
    "truncation_shift",
];

fn summary_row(s: &ConvergenceSummary) -> Vec<String> {
    vec![
        num(s.eta),
        num(s.curvature),
        s.multiplicity.to_string(),
        s.k_max.to_string(),
        num(s.tail_start),
        num(s.max_tail_error),
        num(s.gamma_max),
        num(s.error_at_gamma_max),
        s.monotone_tail.to_string(),
        opt(s.fitted_rate),
        opt(s.empirical_r),
        opt(s.collision_gamma),
        opt(s.truncation_shift),
    ]
}

const PERTURBATION_HEADER: [&str; 9] = [
    "eta",
    "k_max",
    "re_mu1",
    "im_mu1",
    "re_mu2",
    "im_mu2",
    "second_derivative",
    "half_eta_residual",
    "radius",
];

fn perturbation_row(r: &PerturbationRecord) -> Vec<String> {
    vec![
        num(r.eta),
        r.k_max.to_string(),
        num(r.mu1.re),
        num(r.mu1.im),
        num(r.mu2.re),
        num(r.mu2.im),
        num(r.second_derivative.re),
        num(r.half_eta_residual),
        opt(r.radius),
    ]
}

trait Header {
    const HEADER: &'static [&'static str];
}

impl Header for ConvergenceSummary {
    const HEADER: &'static [&'static str] = &SUMMARY_HEADER;
}

impl Header for PerturbationRecord {
    const HEADER: &'static [&'static str] = &PERTURBATION_HEADER;
}

fn write_records<T: Serialize + Header>(
    config: &RunConfig,
    outcome: &mut RunOutcome,
    stem: &str,
    records: &[T],
    row: fn(&T) -> Vec<String>,
) -> Result<()> {
    let dir = &config.output.directory;
    for format in &config.output.formats {
        let path = match format {
            OutputFormat::Csv => {
                let p = dir.join(format!("{stem}.csv"));
                let mut w = csv_writer(&p)?;
                w.write_record(T::HEADER).map_err(csv_error)?;
                for r in records {
                    w.write_record(row(r)).map_err(csv_error)?;
                }
                w.flush()?;
                p
            }
            OutputFormat::Json => {
                let p = dir.join(format!("{stem}.json"));
                write_json(&p, &records)?;
                p
            }
        };
        outcome.files.push(path);
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_dat(path: &Path, comment: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# {comment}")?;
    for r in rows {
        let cols: Vec<String> = r.into_iter().map(num).collect();
        writeln!(out, "{}", cols.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GridConfig, SurfaceConfig};

    fn quick(dir: &Path, surface: SurfaceConfig) -> RunConfig {
        RunConfig {
            surface,
            gamma_grid: GridConfig::Log { log_start: 0.0, log_end: 3.0, points: 16 },
            output: crate::config::OutputConfig { directory: dir.to_path_buf(), ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn sphere_run_writes_three_tables() {
        let dir = tempfile::tempdir().unwrap();
        let config = quick(dir.path(), SurfaceConfig::Sphere { curvature: 1.0, l_max: 2 });
        let outcome = run(&config);
        assert!(outcome.success(), "{:?}", outcome.errors);
        assert_eq!(outcome.summaries.len(), 3);
        for i in 0..3 {
            assert!(dir.path().join(format!("tables/eta_{i:03}.csv")).exists());
        }
        let text = fs::read_to_string(dir.path().join("tables/eta_001.csv")).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("gamma,re_lambda,im_lambda,abs_error,simple,k_max,residual"));
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        let lambda: f64 = last[1].parse().unwrap();
        let gamma: f64 = last[0].parse().unwrap();
        let closed = 0.25 * gamma * gamma * (1.0 - (1.0 - 16.0 / (gamma * gamma)).sqrt());
        assert!((lambda - closed).abs() < 1e-9);
        assert!(!dir.path().join("errors.json").exists());
    }

    #[test]
    fn torus_run_and_determinism() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let surface = SurfaceConfig::Torus { side: 2.0 * std::f64::consts::PI, eta_cap: 2.5 };
        let oa = run(&quick(a.path(), surface.clone()));
        let ob = run(&quick(b.path(), surface));
        assert!(oa.success(), "{:?}", oa.errors);
        let etas: Vec<f64> = oa.summaries.iter().map(|s| s.eta).collect();
        assert_eq!(etas, vec![0.0, 1.0, 2.0]);
        for (fa, fb) in oa.files.iter().zip(&ob.files) {
            assert_eq!(fs::read(fa).unwrap(), fs::read(fb).unwrap(), "{}", fa.display());
        }
    }

    #[test]
    fn missing_zero_mode_is_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eta.csv");
        fs::write(&path, "2,1\n").unwrap();
        let outcome = run(&quick(dir.path(), SurfaceConfig::Custom { curvature: -1.0, path }));
        assert!(!outcome.success());
        assert_eq!(outcome.errors[0].kind, "invalid_input");
        let text = fs::read_to_string(dir.path().join("errors.json")).unwrap();
        assert!(text.contains("zero mode"));
    }
}
