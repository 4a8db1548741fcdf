//! Eigenvalues of complex tridiagonal matrices and continuation of the
//! eigenvalue branch of `T(x)` that starts at the unperturbed eigenvalue 0.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ladder::{CasimirBlock, LadderCoefficients};
use crate::operator::{assemble_t, random_unit_vector, TridiagonalOperator};

/// Largest dimension accepted by [`eig_dense`].
pub const DENSE_LIMIT: usize = 4096;

const RESCALE_HIGH: f64 = 1.0e120;
const RESCALE_LOW: f64 = 1.0e-120;

/// `det(op - lambda)` and its derivative, both stored as mantissas
/// sharing the binary exponent `exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoly {
    pub value: Complex64,
    pub derivative: Complex64,
    pub exponent: i32,
}

impl CharPoly {
    /// Unscaled determinant; may overflow to infinity for large blocks.
    pub fn determinant(&self) -> Complex64 {
        self.value * 2f64.powi(self.exponent)
    }

    pub fn derivative_unscaled(&self) -> Complex64 {
        self.derivative * 2f64.powi(self.exponent)
    }

    /// `p / p'`, independent of the scaling.
    pub fn newton_step(&self) -> Complex64 {
        self.value / self.derivative
    }
}

/// Three-term recurrence `p_j = (d_j - lambda) p_{j-1} - sub_{j-1} sup_{j-1} p_{j-2}`
/// together with its lambda-derivative.
pub fn char_poly(op: &TridiagonalOperator, lambda: Complex64) -> CharPoly {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    // (p_{j-1}, p_{j-2}) and their derivatives.
    let (mut p1, mut p2) = (one, zero);
    let (mut d1, mut d2) = (zero, zero);
    let mut exponent = 0i32;
    for j in 0..op.dim() {
        let shifted = op.diag[j] - lambda;
        let coupling = if j > 0 { op.sub[j - 1] * op.sup[j - 1] } else { zero };
        let p = shifted * p1 - coupling * p2;
        let d = -p1 + shifted * d1 - coupling * d2;
        p2 = p1;
        p1 = p;
        d2 = d1;
        d1 = d;
        let m = p1.l1_norm().max(p2.l1_norm()).max(d1.l1_norm()).max(d2.l1_norm());
        if m > RESCALE_HIGH || (m < RESCALE_LOW && m > 0.0) {
            let e = m.log2().floor() as i32;
            let s = 2f64.powi(-e);
            p1 *= s;
            p2 *= s;
            d1 *= s;
            d2 *= s;
            exponent += e;
        }
    }
    CharPoly { value: p1, derivative: d1, exponent }
}

fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// All eigenvalues by a dense Hessenberg QR eigensolver, sorted by real then
/// imaginary part. Real matrices stay in real arithmetic.
pub fn eig_dense(op: &TridiagonalOperator) -> Result<Vec<Complex64>> {
    let n = op.dim();
    if n > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge { dim: n, limit: DENSE_LIMIT });
    }
    let failed = |e: faer::linalg::evd::EvdError| Error::NonConvergence(format!("dense eigensolver: {e:?}"));
    let mut values: Vec<Complex64> = if op.is_real() {
        let m = faer::Mat::<f64>::from_fn(n, n, |i, j| op.entry(i, j).re);
        m.eigenvalues().map_err(failed)?
    } else {
        let m = faer::Mat::<Complex64>::from_fn(n, n, |i, j| op.entry(i, j));
        m.eigenvalues().map_err(failed)?
    };
    sort_spectrum(&mut values);
    Ok(values)
}

/// Index of the eigenvalue nearest `target`; ties go to the larger
/// imaginary part.
fn nearest_index(values: &[Complex64], target: Complex64) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        let d = (v - target).norm();
        let db = (values[best] - target).norm();
        let tie = 1e-12 * (1.0 + target.norm());
        if d < db - tie || ((d - db).abs() <= tie && v.im > values[best].im) {
            best = i;
        }
    }
    best
}

/// Nearest eigenvalue to `target` and its distance to the rest of the
/// spectrum.
pub fn nearest_with_gap(values: &[Complex64], target: Complex64) -> (Complex64, f64) {
    let i = nearest_index(values, target);
    let mu = values[i];
    let gap = values
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, v)| (v - mu).norm())
        .fold(f64::INFINITY, f64::min);
    (mu, gap)
}

/// Eigenvalue of `op` nearest `target`, from the dense spectrum.
pub fn nearest_eigenvalue(op: &TridiagonalOperator, target: Complex64) -> Result<(Complex64, f64)> {
    let values = eig_dense(op)?;
    Ok(nearest_with_gap(&values, target))
}

const INVERSE_ITERATIONS: usize = 30;
const EIGVEC_SEED: u64 = 0x6b62_6d5f_6569_6776;

fn normalize_phase(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = v.iter().copied().fold(Complex64::new(0.0, 0.0), |best, z| {
        if z.norm() > best.norm() {
            z
        } else {
            best
        }
    });
    let phase = pivot.conj() / pivot.norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

fn residual(op: &TridiagonalOperator, mu: Complex64, v: &[Complex64]) -> f64 {
    op.shifted_matvec(mu, v).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inverse iteration from `start`; returns the phase-normalized vector
/// and its residual `||(op - mu) v||`.
pub(crate) fn inverse_iteration(
    op: &TridiagonalOperator,
    mu: Complex64,
    start: Vec<Complex64>,
) -> (Vec<Complex64>, f64) {
    let guard = f64::EPSILON * op.max_abs_entry().max(mu.norm()).max(1e-300);
    let target = 1e-10 * op.frobenius_norm().max(mu.norm());
    let mut v = start;
    normalize_phase(&mut v);
    let mut res = residual(op, mu, &v);
    for _ in 0..INVERSE_ITERATIONS {
        let Some(mut w) = op.solve_pivoted(mu, &v, Some(guard)) else {
            break;
        };
        if w.iter().any(|z| !z.is_finite()) {
            break;
        }
        normalize_phase(&mut w);
        let r = residual(op, mu, &w);
        let moved = w.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        v = w;
        res = r;
        if res <= target && moved <= 1e-8 {
            break;
        }
    }
    (v, res)
}

/// Unit eigenvector for the simple eigenvalue `mu`, largest entry real
/// positive. Two independent starts must agree, otherwise the eigenvalue
/// is reported as not simple.
pub fn eigvec(op: &TridiagonalOperator, mu: Complex64) -> Result<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(EIGVEC_SEED);
    let n = op.dim();
    let (v1, r1) = inverse_iteration(op, mu, random_unit_vector(&mut rng, n));
    let (v2, r2) = inverse_iteration(op, mu, random_unit_vector(&mut rng, n));
    let tol = 1e-10 * op.frobenius_norm().max(mu.norm());
    if r1 > tol || r2 > tol {
        return Err(Error::NonConvergence(format!(
            "inverse iteration at {mu}: residual {:.3e}",
            r1.max(r2)
        )));
    }
    let overlap: Complex64 = v1.iter().zip(&v2).map(|(a, b)| a * b.conj()).sum();
    if overlap.norm() < 1.0 - 1e-6 {
        return Err(Error::NotSimple { mu });
    }
    Ok(v1)
}

/// Step control and diagnostics for [`BranchTracker`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerSettings {
    /// Gap below `collision_rel * (1 + |mu|)` counts as loss of simplicity.
    pub collision_rel: f64,
    pub max_step: f64,
    /// Smallest step, relative to `max(1, |x|)`.
    pub min_step: f64,
    /// A step may move `mu` by at most this fraction of the local gap.
    pub gap_fraction: f64,
    /// Up to this dimension every sample is checked densely.
    pub dense_every_sample: usize,
    /// Check stride above `dense_every_sample`.
    pub dense_stride: usize,
    pub newton_iterations: usize,
}

impl Default for TrackerSettings {
    fn default() -> Self {
        Self {
            collision_rel: 1e-6,
            max_step: 0.05,
            min_step: 1e-14,
            gap_fraction: 0.25,
            dense_every_sample: 512,
            dense_stride: 8,
            newton_iterations: 80,
        }
    }
}

impl TrackerSettings {
    pub fn collision_threshold(&self, mu: Complex64) -> f64 {
        self.collision_rel * (1.0 + mu.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchSample {
    pub x: Complex64,
    pub mu: Complex64,
    /// `||(T(x) - mu) v||` for the unit eigenvector from inverse iteration.
    pub residual: f64,
    /// Distance from `mu` to the rest of the spectrum (last dense value).
    pub gap: f64,
    pub gap_checked: bool,
    /// Distance from `mu` to the nearest dense eigenvalue, when checked.
    pub oracle_error: Option<f64>,
    pub simple: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BranchStatus {
    Complete,
    /// The branch stopped being separable at `x`.
    Collision { x: Complex64 },
}

/// Continuation record of the eigenvalue branch through 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBranch {
    pub block: CasimirBlock,
    pub samples: Vec<BranchSample>,
    pub status: BranchStatus,
}

impl EigenBranch {
    pub fn x_samples(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn mu_values(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.mu).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.residual).collect()
    }

    pub fn gap_to_rest(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.gap).collect()
    }

    pub fn simple(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.simple).collect()
    }

    pub fn last(&self) -> &BranchSample {
        self.samples.last().expect("branch always holds the x = 0 sample")
    }

    pub fn collision(&self) -> Option<Complex64> {
        match self.status {
            BranchStatus::Collision { x } => Some(x),
            BranchStatus::Complete => None,
        }
    }

    pub fn final_mu(&self) -> Result<Complex64> {
        Ok(self.last().mu)
    }

    /// Turns a collision into an error.
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            BranchStatus::Collision { x } => Err(Error::Collision { x }),
            BranchStatus::Complete => Ok(self),
        }
    }
}

/// Incremental continuation of the branch `mu(x)` with `mu(0) = 0`.
///
/// Steps are accepted only if Newton on the characteristic polynomial
/// converges and `mu` moves by less than a fixed fraction of the distance
/// to the rest of the spectrum; otherwise the step is halved. Near a
/// collision the steps shrink geometrically until the gap drops below the
/// collision threshold.
pub struct BranchTracker<'a> {
    coeffs: &'a LadderCoefficients,
    settings: TrackerSettings,
    samples: Vec<BranchSample>,
    status: BranchStatus,
    accepted: usize,
}

impl<'a> BranchTracker<'a> {
    pub fn new(coeffs: &'a LadderCoefficients, settings: TrackerSettings) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        let t0 = assemble_t(coeffs, zero);
        let values = unperturbed_spectrum(&coeffs.block);
        let (mu, gap) = nearest_with_gap(&values, zero);
        debug_assert_eq!(mu, zero);
        let mut start = vec![zero; t0.dim()];
        start[coeffs.block.zero_index()] = Complex64::new(1.0, 0.0);
        let residual = residual(&t0, zero, &start);
        let simple = gap > settings.collision_threshold(zero);
        let sample = BranchSample {
            x: zero,
            mu: zero,
            residual,
            gap,
            gap_checked: true,
            oracle_error: Some(0.0),
            simple,
        };
        let status = if simple {
            BranchStatus::Complete
        } else {
            BranchStatus::Collision { x: zero }
        };
        Ok(Self { coeffs, settings, samples: vec![sample], status, accepted: 0 })
    }

    pub fn current(&self) -> &BranchSample {
        self.samples.last().expect("tracker holds the x = 0 sample")
    }

    pub fn collision(&self) -> Option<Complex64> {
        match self.status {
            BranchStatus::Collision { x } => Some(x),
            BranchStatus::Complete => None,
        }
    }

    pub fn finish(self) -> EigenBranch {
        EigenBranch { block: self.coeffs.block.clone(), samples: self.samples, status: self.status }
    }

    fn newton(&self, op: &TridiagonalOperator, start: Complex64) -> Option<Complex64> {
        let mut lambda = start;
        let mut last = f64::INFINITY;
        for _ in 0..self.settings.newton_iterations {
            let cp = char_poly(op, lambda);
            if cp.value == Complex64::new(0.0, 0.0) {
                return Some(lambda);
            }
            if cp.derivative == Complex64::new(0.0, 0.0) {
                return None;
            }
            let delta = cp.newton_step();
            lambda -= delta;
            if !lambda.is_finite() {
                return None;
            }
            let size = delta.norm();
            if size <= 4.0 * f64::EPSILON * lambda.norm() {
                return Some(lambda);
            }
            // Roundoff floor: the step stopped shrinking.
            if size >= 0.5 * last && size <= 1e-12 * lambda.norm() {
                return Some(lambda);
            }
            last = size;
        }
        (last <= 1e-10 * (1.0 + lambda.norm())).then_some(lambda)
    }

    /// Continue the branch to `target` along the straight segment from the
    /// current sample, taking at least `steps` steps. A no-op once a
    /// collision has been flagged.
    pub fn advance_to(&mut self, target: Complex64, steps: usize) -> Result<()> {
        if self.collision().is_some() {
            return Ok(());
        }
        let start = self.current().x;
        let span = (target - start).norm();
        if span == 0.0 {
            return Ok(());
        }
        let direction = (target - start) / span;
        let nominal = (span / steps.max(1) as f64).min(self.settings.max_step);
        let mut h = nominal;
        let n = self.coeffs.block.dim();
        loop {
            let cur = *self.current();
            let remaining = (target - cur.x).norm();
            if remaining == 0.0 {
                return Ok(());
            }
            let min_step = self.settings.min_step * cur.x.norm().max(1.0);
            // Snap to the target instead of leaving a sliver from rounding.
            let (x_new, step) = if h >= remaining * (1.0 - 1e-9) {
                (target, remaining)
            } else {
                (cur.x + direction * h, h)
            };
            let predicted = match self.samples.len() {
                0 | 1 => cur.mu,
                len => {
                    let prev = self.samples[len - 2];
                    let slope = (cur.mu - prev.mu) / (cur.x - prev.x);
                    cur.mu + slope * (x_new - cur.x)
                }
            };
            let op = assemble_t(self.coeffs, x_new);
            let Some(mu) = self.newton(&op, predicted) else {
                h = 0.5 * step;
                if h < min_step {
                    return Err(Error::NonConvergence(format!("Newton stalled near x = {}", cur.x)));
                }
                continue;
            };
            let check = n <= self.settings.dense_every_sample
                || (self.accepted + 1).is_multiple_of(self.settings.dense_stride);
            let (gap, oracle_error) = if check {
                let values = eig_dense(&op)?;
                let i = nearest_index(&values, mu);
                let g = values
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| (v - mu).norm())
                    .fold(f64::INFINITY, f64::min);
                (g, Some((values[i] - mu).norm()))
            } else {
                (cur.gap, None)
            };
            let jump = (mu - cur.mu).norm();
            let limit = self.settings.gap_fraction * cur.gap.min(gap);
            let threshold = self.settings.collision_threshold(mu);
            if jump > limit && gap >= threshold {
                h = 0.5 * step;
                if h < min_step {
                    self.mark_collision(cur.x);
                    return Ok(());
                }
                continue;
            }
            let mut seed = vec![Complex64::new(0.0, 0.0); n];
            seed[self.coeffs.block.zero_index()] = Complex64::new(1.0, 0.0);
            for (s, prev) in seed.iter_mut().zip(self.warm_vector(n)) {
                *s += prev;
            }
            let (_, res) = inverse_iteration(&op, mu, seed);
            let simple = gap > threshold;
            self.samples.push(BranchSample {
                x: x_new,
                mu,
                residual: res,
                gap,
                gap_checked: check,
                oracle_error,
                simple,
            });
            self.accepted += 1;
            if !simple {
                self.status = BranchStatus::Collision { x: x_new };
                return Ok(());
            }
            h = (2.0 * step).min(nominal);
        }
    }

    fn warm_vector(&self, n: usize) -> Vec<Complex64> {
        // Small fixed admixture so the start vector is never orthogonal to
        // the eigenvector.
        (0..n).map(|j| Complex64::new(1e-3 / (1.0 + j as f64), 1e-4)).collect()
    }

    fn mark_collision(&mut self, x: Complex64) {
        if let Some(last) = self.samples.last_mut() {
            last.simple = false;
        }
        self.status = BranchStatus::Collision { x };
    }
}

fn unperturbed_spectrum(block: &CasimirBlock) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = block.slots().map(|k| Complex64::new((k * k) as f64, 0.0)).collect();
    sort_spectrum(&mut v);
    v
}

/// Track the branch through 0 along `[0, x_target]` with default settings.
pub fn track_branch(
    coeffs: &LadderCoefficients,
    x_target: Complex64,
    steps: usize,
) -> Result<EigenBranch> {
    track_branch_with(coeffs, x_target, steps, TrackerSettings::default())
}

pub fn track_branch_with(
    coeffs: &LadderCoefficients,
    x_target: Complex64,
    steps: usize,
    settings: TrackerSettings,
) -> Result<EigenBranch> {
    let mut tracker = BranchTracker::new(coeffs, settings)?;
    tracker.advance_to(x_target, steps)?;
    Ok(tracker.finish())
}
