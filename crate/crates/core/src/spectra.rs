//! Base-surface Laplace spectra, gamma sweeps of the converging eigenvalue
//! `lambda_eta(gamma) = gamma^2 / 2 mu(-2 / gamma)` and the reports built on
//! top of them.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eig::{inverse_iteration, nearest_eigenvalue, BranchTracker, TrackerSettings};
use crate::error::{Error, Result};
use crate::ladder::{ladder_extent, CasimirBlock, LadderCoefficients, LadderExtent};
use crate::operator::{adaptive_start, assemble_t, TruncationPolicy, MAX_ADAPTIVE_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Sphere,
    FlatTorus,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub eta: f64,
    pub multiplicity: usize,
    pub label: String,
}

/// Laplace spectrum of the base surface, one entry per distinct eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpectrum {
    pub curvature: f64,
    pub entries: Vec<SpectrumEntry>,
    pub source: SpectrumSource,
}

impl SurfaceSpectrum {
    /// Smallest nonzero eigenvalue.
    pub fn spectral_gap(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.eta).find(|&eta| eta > 0.0)
    }

    pub fn multiplicity(&self, eta: f64) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| same_eta(e.eta, eta))
            .map(|e| e.multiplicity)
    }
}

fn same_eta(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Round sphere of curvature `K`: `eta = K l (l + 1)` with multiplicity `2l + 1`.
pub fn sphere_spectrum(curvature: f64, l_max: u32) -> Result<SurfaceSpectrum> {
    if !(curvature > 0.0 && curvature.is_finite()) {
        return Err(Error::InvalidInput(format!("sphere needs K > 0, got {curvature}")));
    }
    let entries = (0..=l_max as u64)
        .map(|l| SpectrumEntry {
            eta: curvature * (l * (l + 1)) as f64,
            multiplicity: (2 * l + 1) as usize,
            label: format!("l={l}"),
        })
        .collect();
    Ok(SurfaceSpectrum { curvature, entries, source: SpectrumSource::Sphere })
}

/// Flat square torus of side `side`: `eta = (2 pi / side)^2 (m^2 + n^2)`.
pub fn torus_spectrum(side: f64, eta_cap: f64) -> Result<SurfaceSpectrum> {
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::InvalidInput(format!("torus side must be > 0, got {side}")));
    }
    if !(eta_cap >= 0.0) {
        return Err(Error::InvalidInput(format!("eta_cap must be >= 0, got {eta_cap}")));
    }
    let scale = (2.0 * PI / side).powi(2);
    let bound = (eta_cap / scale).sqrt().floor() as i64 + 1;
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for m in -bound..=bound {
        for n in -bound..=bound {
            let norm_sq = m * m + n * n;
            if scale * norm_sq as f64 <= eta_cap * (1.0 + 1e-12) {
                *counts.entry(norm_sq).or_default() += 1;
            }
        }
    }
    let entries = counts
        .into_iter()
        .map(|(norm_sq, multiplicity)| SpectrumEntry {
            eta: scale * norm_sq as f64,
            multiplicity,
            label: format!("|n|^2={norm_sq}"),
        })
        .collect();
    Ok(SurfaceSpectrum { curvature: 0.0, entries, source: SpectrumSource::FlatTorus })
}

/// User-supplied `(eta, multiplicity)` list, e.g. for hyperbolic surfaces.
pub fn custom_spectrum(curvature: f64, etas: &[(f64, usize)]) -> Result<SurfaceSpectrum> {
    if !curvature.is_finite() {
        return Err(Error::InvalidInput(format!("curvature must be finite, got {curvature}")));
    }
    let mut entries: Vec<SpectrumEntry> = Vec::with_capacity(etas.len());
    for &(eta, multiplicity) in etas {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput(format!("eigenvalue {eta} is negative or not finite")));
        }
        if multiplicity == 0 {
            return Err(Error::InvalidInput(format!("eigenvalue {eta} has multiplicity 0")));
        }
        // For K > 0 this rejects eta off the terminating ladders.
        ladder_extent(eta, curvature)?;
        match entries.iter_mut().find(|e| same_eta(e.eta, eta)) {
            Some(e) => e.multiplicity += multiplicity,
            None => entries.push(SpectrumEntry { eta, multiplicity, label: format!("eta={eta}") }),
        }
    }
    if !entries.iter().any(|e| e.eta == 0.0) {
        return Err(Error::InvalidInput("zero mode missing from the spectrum".into()));
    }
    entries.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    Ok(SurfaceSpectrum { curvature, entries, source: SpectrumSource::Custom })
}

/// `points` values `10^t` with `t` equispaced in `[log_start, log_end]`.
pub fn log_grid(log_start: f64, log_end: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidInput(format!("grid needs >= 2 points, got {points}")));
    }
    if !(log_end > log_start) {
        return Err(Error::InvalidInput(format!("empty grid range [{log_start}, {log_end}]")));
    }
    let span = log_end - log_start;
    Ok((0..points)
        .map(|i| 10f64.powf(log_start + i as f64 * span / (points - 1) as f64))
        .collect())
}

/// 25 points per decade from 1 to 10^4.
pub fn default_gamma_grid() -> Vec<f64> {
    log_grid(0.0, 4.0, 101).expect("static grid")
}

/// Start of the asymptotic tail, `4 (1 + sqrt(eta))`.
pub fn tail_start(eta: f64) -> f64 {
    4.0 * (1.0 + eta.max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRow {
    pub gamma: f64,
    pub lambda: Complex64,
    pub abs_error: f64,
    /// True while the value lies on the tracked simple branch.
    pub simple: bool,
    pub k_max: i64,
    /// `||(P_gamma - lambda) v||` for the unit eigenvector.
    pub residual: f64,
    /// `|lambda(k_max) - lambda(2 k_max)|`, when the truncation was certified.
    pub certificate: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaTable {
    pub eta: f64,
    pub curvature: f64,
    pub multiplicity: usize,
    pub k_max: i64,
    pub truncated: bool,
    /// Rows in ascending gamma.
    pub rows: Vec<GammaRow>,
    /// Smallest gamma of the unbroken run of simple rows at the top of the grid.
    pub empirical_r: Option<f64>,
    /// `2 / |x_c|` for the first detected collision.
    pub collision_gamma: Option<f64>,
    /// Largest tail shift seen when doubling the truncation.
    pub truncation_shift: Option<f64>,
}

impl GammaTable {
    pub fn gamma_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gamma).collect()
    }

    pub fn lambda(&self) -> Vec<Complex64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    pub fn abs_error(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.abs_error).collect()
    }

    pub fn simple_flags(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.simple).collect()
    }

    pub fn row_at(&self, gamma: f64) -> Option<&GammaRow> {
        self.rows.iter().find(|r| (r.gamma - gamma).abs() <= 1e-12 * gamma)
    }

    fn tail(&self) -> impl Iterator<Item = &GammaRow> {
        let start = tail_start(self.eta);
        self.rows.iter().filter(move |r| r.gamma >= start)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("gamma grid is empty".into()));
    }
    if grid.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidInput("gamma grid must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("gamma grid must be strictly ascending".into()));
    }
    Ok(())
}

struct SweepRun {
    rows: Vec<GammaRow>,
    collision_gamma: Option<f64>,
}

/// Sweep one block, continuing the branch from large to small gamma.
/// Once the branch collides, rows follow the nearest dense eigenvalue and
/// are flagged as not simple.
fn sweep_block(coeffs: &LadderCoefficients, grid: &[f64]) -> Result<SweepRun> {
    let k_max = coeffs.block.k_max;
    let mut tracker = BranchTracker::new(coeffs, TrackerSettings::default())?;
    let mut broken: Option<String> = None;
    let mut reference = Complex64::new(0.0, 0.0);
    let mut rows: Vec<Option<GammaRow>> = vec![None; grid.len()];
    for (idx, &gamma) in grid.iter().enumerate().rev() {
        let x = Complex64::new(-2.0 / gamma, 0.0);
        let scale = 0.5 * gamma * gamma;
        if broken.is_none() {
            if let Err(e) = tracker.advance_to(x, 2) {
                broken = Some(e.to_string());
            } else if let Some(xc) = tracker.collision() {
                broken = Some(format!("branch collision at x = {:.6e}", xc.re));
            }
            reference = tracker.current().mu;
        }
        let row = if broken.is_none() {
            let s = tracker.current();
            GammaRow {
                gamma,
                lambda: scale * s.mu,
                abs_error: 0.0,
                simple: s.simple,
                k_max,
                residual: scale * s.residual,
                certificate: None,
                note: None,
            }
        } else {
            let op = assemble_t(coeffs, x);
            match nearest_eigenvalue(&op, reference) {
                Ok((mu, _)) => {
                    reference = mu;
                    let mut start = vec![Complex64::new(0.0, 0.0); op.dim()];
                    start[coeffs.block.zero_index()] = Complex64::new(1.0, 0.0);
                    start.iter_mut().enumerate().for_each(|(j, z)| *z += 1e-3 / (1.0 + j as f64));
                    let (_, res) = inverse_iteration(&op, mu, start);
                    GammaRow {
                        gamma,
                        lambda: scale * mu,
                        abs_error: 0.0,
                        simple: false,
                        k_max,
                        residual: scale * res,
                        certificate: None,
                        note: broken.clone(),
                    }
                }
                Err(e) => GammaRow {
                    gamma,
                    lambda: Complex64::new(f64::NAN, f64::NAN),
                    abs_error: f64::NAN,
                    simple: false,
                    k_max,
                    residual: f64::NAN,
                    certificate: None,
                    note: Some(e.to_string()),
                },
            }
        };
        rows[idx] = Some(row);
    }
    let collision_gamma = tracker.collision().map(|xc| 2.0 / xc.norm());
    let mut rows: Vec<GammaRow> = rows.into_iter().map(|r| r.expect("every row filled")).collect();
    let eta = coeffs.block.eta;
    for r in &mut rows {
        r.abs_error = (r.lambda - eta).norm();
    }
    Ok(SweepRun { rows, collision_gamma })
}

fn tail_shift(eta: f64, a: &[GammaRow], b: &[GammaRow]) -> f64 {
    let start = tail_start(eta);
    let pick = |use_tail: bool| {
        a.iter()
            .zip(b)
            .filter(|(r, s)| (!use_tail || r.gamma >= start) && r.simple && s.simple)
            .map(|(r, s)| (r.lambda - s.lambda).norm())
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))))
    };
    pick(true).or_else(|| pick(false)).unwrap_or(0.0)
}

/// `lambda_eta(gamma)` over the grid.
///
/// Collisions and truncation problems are recorded per row.
pub fn gamma_sweep(
    eta: f64,
    curvature: f64,
    grid: &[f64],
    policy: TruncationPolicy,
) -> Result<GammaTable> {
    validate_grid(grid)?;
    let extent = ladder_extent(eta, curvature)?;
    let mut table = GammaTable {
        eta,
        curvature,
        multiplicity: 1,
        k_max: 0,
        truncated: false,
        rows: Vec::new(),
        empirical_r: None,
        collision_gamma: None,
        truncation_shift: None,
    };
    match (extent, policy) {
        (LadderExtent::Finite { .. }, _) => {
            let block = CasimirBlock::intrinsic(eta, curvature)?;
            table.k_max = block.k_max;
            let run = sweep_block(&LadderCoefficients::new(block)?, grid)?;
            table.rows = run.rows;
            table.collision_gamma = run.collision_gamma;
        }
        (LadderExtent::Unbounded, TruncationPolicy::Fixed { k_max }) => {
            let block = CasimirBlock::truncated(eta, curvature, k_max)?;
            table.k_max = k_max;
            table.truncated = true;
            let run = sweep_block(&LadderCoefficients::new(block)?, grid)?;
            table.rows = run.rows;
            table.collision_gamma = run.collision_gamma;
        }
        (LadderExtent::Unbounded, TruncationPolicy::Adaptive { tol }) => {
            table.truncated = true;
            let run_at = |k: i64| -> Result<SweepRun> {
                sweep_block(&LadderCoefficients::new(CasimirBlock::truncated(eta, curvature, k)?)?, grid)
            };
            let mut k_max = adaptive_start(eta);
            let mut current = run_at(k_max)?;
            loop {
                let doubled = run_at(2 * k_max)?;
                let shift = tail_shift(eta, &current.rows, &doubled.rows);
                let certified = shift < tol;
                if certified || 4 * k_max > MAX_ADAPTIVE_K {
                    for (r, s) in current.rows.iter_mut().zip(&doubled.rows) {
                        r.certificate = Some((r.lambda - s.lambda).norm());
                        if !certified {
                            let msg = format!("truncation not certified (shift {shift:.3e})");
                            r.note = Some(match r.note.take() {
                                Some(n) => format!("{n}; {msg}"),
                                None => msg,
                            });
                        }
                    }
                    table.k_max = k_max;
                    table.truncation_shift = Some(shift);
                    table.rows = current.rows;
                    table.collision_gamma = current.collision_gamma;
                    break;
                }
                k_max *= 2;
                current = doubled;
            }
        }
    }
    table.empirical_r = table
        .rows
        .iter()
        .rev()
        .take_while(|r| r.simple)
        .last()
        .map(|r| r.gamma);
    Ok(table)
}

/// Sweep every entry of a surface spectrum; multiplicities are copied from
/// the spectrum, the branch is computed once per distinct eigenvalue.
pub fn sweep_spectrum(
    spectrum: &SurfaceSpectrum,
    grid: &[f64],
    policy: TruncationPolicy,
) -> Vec<Result<GammaTable>> {
    use rayon::prelude::*;
    spectrum
        .entries
        .par_iter()
        .map(|e| {
            let mut t = gamma_sweep(e.eta, spectrum.curvature, grid, policy)?;
            t.multiplicity = e.multiplicity;
            Ok(t)
        })
        .collect()
}

/// Least-squares slope of `(ln x, ln y)` points.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Convergence verdict for one table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    pub eta: f64,
    pub curvature: f64,
    pub multiplicity: usize,
    pub k_max: i64,
    pub tail_start: f64,
    pub max_tail_error: f64,
    pub gamma_max: f64,
    pub error_at_gamma_max: f64,
    pub monotone_tail: bool,
    /// Fitted exponent of `|lambda - eta|` against gamma on the tail. This is
    /// an observation, not a proven rate.
    pub fitted_rate: Option<f64>,
    pub empirical_r: Option<f64>,
    pub collision_gamma: Option<f64>,
    pub truncation_shift: Option<f64>,
}

pub fn convergence_summary(table: &GammaTable) -> ConvergenceSummary {
    let slack = 1e-13 * (1.0 + table.eta);
    let tail: Vec<&GammaRow> = table.tail().collect();
    let monotone_tail = tail.windows(2).all(|w| w[1].abs_error <= w[0].abs_error + slack);
    let max_tail_error = tail.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    let fit: Vec<(f64, f64)> = tail
        .iter()
        .filter(|r| r.abs_error > slack)
        .map(|r| (r.gamma.ln(), r.abs_error.ln()))
        .collect();
    let last = table.rows.last();
    ConvergenceSummary {
        eta: table.eta,
        curvature: table.curvature,
        multiplicity: table.multiplicity,
        k_max: table.k_max,
        tail_start: tail_start(table.eta),
        max_tail_error,
        gamma_max: last.map_or(f64::NAN, |r| r.gamma),
        error_at_gamma_max: last.map_or(f64::NAN, |r| r.abs_error),
        monotone_tail,
        fitted_rate: (fit.len() >= 2).then(|| loglog_slope(&fit)),
        empirical_r: table.empirical_r,
        collision_gamma: table.collision_gamma,
        truncation_shift: table.truncation_shift,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingRow {
    pub gamma: f64,
    /// `Re lambda_{eta_1}(gamma)`.
    pub re_lambda: f64,
    pub excess: f64,
    /// Smallest `Re lambda_eta(gamma)` over all nonzero eta with a table.
    pub gap_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingReport {
    pub eta1: f64,
    pub rows: Vec<MixingRow>,
    /// `Re lambda_{eta_1}` at the largest gamma.
    pub limit_estimate: f64,
    /// Fitted exponent of the excess over the tail.
    pub excess_rate: Option<f64>,
    /// The excess is positive on the whole tail.
    pub from_above: bool,
}

/// Spectral-gap report: how `Re lambda_{eta_1}(gamma)` approaches `eta_1`.
pub fn mixing_report(spectrum: &SurfaceSpectrum, tables: &[GammaTable]) -> Result<MixingReport> {
    let eta1 = spectrum
        .spectral_gap()
        .ok_or(Error::InvalidInput("spectrum has no nonzero eigenvalue".into()))?;
    let gap_table = tables
        .iter()
        .find(|t| same_eta(t.eta, eta1) && t.curvature == spectrum.curvature)
        .ok_or(Error::MissingGapTable { eta: eta1 })?;
    let rows: Vec<MixingRow> = gap_table
        .rows
        .iter()
        .map(|r| {
            let gap_bound = tables
                .iter()
                .filter(|t| t.eta > 0.0)
                .filter_map(|t| t.row_at(r.gamma))
                .map(|s| s.lambda.re)
                .fold(f64::INFINITY, f64::min);
            MixingRow { gamma: r.gamma, re_lambda: r.lambda.re, excess: r.lambda.re - eta1, gap_bound }
        })
        .collect();
    let start = tail_start(eta1);
    let tail: Vec<&MixingRow> = rows.iter().filter(|r| r.gamma >= start).collect();
    let fit: Vec<(f64, f64)> = tail
        .iter()
        .filter(|r| r.excess > 0.0)
        .map(|r| (r.gamma.ln(), r.excess.ln()))
        .collect();
    Ok(MixingReport {
        eta1,
        limit_estimate: rows.last().map_or(f64::NAN, |r| r.re_lambda),
        excess_rate: (fit.len() >= 2).then(|| loglog_slope(&fit)),
        from_above: !tail.is_empty() && tail.iter().all(|r| r.excess > 0.0),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1_lambda(gamma: f64) -> f64 {
        0.25 * gamma * gamma * (1.0 - (1.0 - 16.0 / (gamma * gamma)).sqrt())
    }

    fn pairs(s: &SurfaceSpectrum) -> Vec<(f64, usize)> {
        s.entries.iter().map(|e| (e.eta, e.multiplicity)).collect()
    }

    #[test]
    fn sphere_examples() {
        assert_eq!(pairs(&sphere_spectrum(1.0, 2).unwrap()), vec![(0.0, 1), (2.0, 3), (6.0, 5)]);
        assert_eq!(pairs(&sphere_spectrum(4.0, 1).unwrap()), vec![(0.0, 1), (8.0, 3)]);
        assert_eq!(pairs(&sphere_spectrum(1.0, 0).unwrap()), vec![(0.0, 1)]);
        assert!(sphere_spectrum(0.0, 2).is_err());
        assert!(sphere_spectrum(-1.0, 2).is_err());
    }

    #[test]
    fn torus_examples() {
        let t = torus_spectrum(2.0 * PI, 2.5).unwrap();
        let p = pairs(&t);
        assert_eq!(p.len(), 3);
        for ((eta, m), (e, em)) in p.iter().zip([(0.0, 1), (1.0, 4), (2.0, 4)]) {
            assert!((eta - e).abs() < 1e-12);
            assert_eq!(*m, em);
        }
        assert_eq!(pairs(&torus_spectrum(2.0 * PI, 0.5).unwrap()), vec![(0.0, 1)]);
        let p = pairs(&torus_spectrum(PI, 5.0).unwrap());
        assert_eq!(p.len(), 2);
        assert!((p[1].0 - 4.0).abs() < 1e-12 && p[1].1 == 4);
        // m^2 + n^2 = 25 has 12 lattice points
        let p = pairs(&torus_spectrum(2.0 * PI, 25.0).unwrap());
        assert_eq!(p.last().unwrap().1, 12);
        assert!(torus_spectrum(0.0, 1.0).is_err());
    }

    #[test]
    fn custom_examples() {
        let s = custom_spectrum(-1.0, &[(3.838, 1), (0.0, 1)]).unwrap();
        assert_eq!(s.entries[0].eta, 0.0);
        assert_eq!(s.source, SpectrumSource::Custom);
        assert!(custom_spectrum(-1.0, &[(-1.0, 1)]).is_err());
        assert!(matches!(custom_spectrum(-1.0, &[(2.0, 1)]), Err(Error::InvalidInput(_))));
        assert!(custom_spectrum(1.0, &[(0.0, 1), (3.0, 1)]).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(gamma_sweep(2.0, 1.0, &[], TruncationPolicy::default()).is_err());
        assert!(gamma_sweep(2.0, 1.0, &[2.0, 1.0], TruncationPolicy::default()).is_err());
        assert!(gamma_sweep(2.0, 1.0, &[-1.0, 1.0], TruncationPolicy::default()).is_err());
        let g = default_gamma_grid();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[75], 1000.0);
        assert_eq!(g[100], 10000.0);
    }

    #[test]
    fn l1_sweep_matches_closed_form() {
        let grid = [4.0, 5.0, 10.0, 100.0];
        let t = gamma_sweep(2.0, 1.0, &grid, TruncationPolicy::default()).unwrap();
        let r5 = t.row_at(5.0).unwrap();
        assert!((r5.lambda - 2.5).norm() < 1e-9);
        assert!(r5.simple);
        let r4 = t.row_at(4.0).unwrap();
        assert!((r4.lambda - 4.0).norm() < 1e-6, "{:?}", r4.lambda);
        assert!(!r4.simple);
        for r in &t.rows[1..] {
            assert!((r.lambda - l1_lambda(r.gamma)).norm() < 1e-9);
            assert_eq!(r.abs_error, (r.lambda - 2.0).norm());
        }
        assert_eq!(t.empirical_r, Some(5.0));
        assert!((t.collision_gamma.unwrap() - 4.0).abs() < 0.1);
    }

    #[test]
    fn zero_mode_sweep_is_identically_zero() {
        for k in [1.0, 0.0, -1.0] {
            let t = gamma_sweep(0.0, k, &[0.5, 3.0, 100.0], TruncationPolicy::default()).unwrap();
            assert!(t.rows.iter().all(|r| r.lambda == Complex64::new(0.0, 0.0) && r.simple));
        }
    }

    #[test]
    fn mixing_on_sphere() {
        let spectrum = sphere_spectrum(1.0, 2).unwrap();
        let grid = log_grid(1.0, 3.0, 21).unwrap();
        let tables: Vec<GammaTable> = sweep_spectrum(&spectrum, &grid, TruncationPolicy::default())
            .into_iter()
            .collect::<Result<_>>()
            .unwrap();
        let report = mixing_report(&spectrum, &tables).unwrap();
        assert_eq!(report.eta1, 2.0);
        let at10 = report.rows.iter().find(|r| r.gamma == 10.0).unwrap();
        assert!((at10.re_lambda - 2.0871215252208).abs() < 1e-9, "{}", at10.re_lambda);
        assert!(report.from_above);
        let rate = report.excess_rate.unwrap();
        assert!((rate + 2.0).abs() < 0.05, "{rate}");
        assert!(report.rows.iter().all(|r| r.gap_bound <= r.re_lambda));

        assert!(matches!(
            mixing_report(&spectrum, &tables[2..]),
            Err(Error::MissingGapTable { .. })
        ));
    }
}
