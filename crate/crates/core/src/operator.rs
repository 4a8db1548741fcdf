//! Tridiagonal restrictions of `T(x) = Delta_S + x X` and of the kinetic
//! generator `P_gamma = -gamma X + gamma^2 / 2 Delta_S` to one Casimir block.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eig;
use crate::error::{Error, Result};
use crate::ladder::{CasimirBlock, LadderCoefficients, LadderExtent};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which member of which family an operator represents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OperatorParameter {
    None,
    /// `T(x)` at the given (possibly complex) coupling.
    Coupling(Complex64),
    /// `P_gamma` at the given friction.
    Gamma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub eta: f64,
    pub curvature: f64,
    pub parameter: OperatorParameter,
    pub k_max: i64,
    pub truncated: bool,
}

/// Complex tridiagonal matrix indexed by ladder slots.
///
/// `sub[j]` is the entry `(j + 1, j)` and `sup[j]` the entry `(j, j + 1)`;
/// array index `j` corresponds to the ladder index `k_offset + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub diag: Vec<Complex64>,
    pub sup: Vec<Complex64>,
    pub sub: Vec<Complex64>,
    pub k_offset: i64,
    pub meta: OperatorMeta,
}

impl TridiagonalOperator {
    pub fn new(
        diag: Vec<Complex64>,
        sup: Vec<Complex64>,
        sub: Vec<Complex64>,
        k_offset: i64,
        meta: OperatorMeta,
    ) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidInput("tridiagonal operator needs dim >= 1".into()));
        }
        let off = diag.len() - 1;
        for len in [sup.len(), sub.len()] {
            if len != off {
                return Err(Error::DimensionMismatch { expected: off, found: len });
            }
        }
        Ok(Self { diag, sup, sub, k_offset, meta })
    }

    pub fn zeros(dim: usize, k_offset: i64, meta: OperatorMeta) -> Self {
        assert!(dim >= 1);
        Self {
            diag: vec![ZERO; dim],
            sup: vec![ZERO; dim - 1],
            sub: vec![ZERO; dim - 1],
            k_offset,
            meta,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.sup[i]
        } else if i == j + 1 {
            self.sub[j]
        } else {
            ZERO
        }
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(v.len(), n);
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i + 1 < n {
                    s += self.sup[i] * v[i + 1];
                }
                if i > 0 {
                    s += self.sub[i - 1] * v[i - 1];
                }
                s
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self {
            diag: self.diag.clone(),
            sup: self.sub.clone(),
            sub: self.sup.clone(),
            k_offset: self.k_offset,
            meta: self.meta,
        }
    }

    pub fn adjoint(&self) -> Self {
        let conj = |v: &[Complex64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
        Self {
            diag: conj(&self.diag),
            sup: conj(&self.sub),
            sub: conj(&self.sup),
            k_offset: self.k_offset,
            meta: self.meta,
        }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mul = |v: &[Complex64]| v.iter().map(|z| z * s).collect::<Vec<_>>();
        Self {
            diag: mul(&self.diag),
            sup: mul(&self.sup),
            sub: mul(&self.sub),
            k_offset: self.k_offset,
            meta: self.meta,
        }
    }

    /// Entrywise sum; the metadata of `self` is kept.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let add = |a: &[Complex64], b: &[Complex64]| {
            a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>()
        };
        Ok(Self {
            diag: add(&self.diag, &other.diag),
            sup: add(&self.sup, &other.sup),
            sub: add(&self.sub, &other.sub),
            k_offset: self.k_offset,
            meta: self.meta,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.sup)
            .chain(&self.sub)
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.sup)
            .chain(&self.sub)
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_real(&self) -> bool {
        self.diag.iter().chain(&self.sup).chain(&self.sub).all(|z| z.im == 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j).re)
    }

    /// Solve `(self - shift) y = rhs`.
    ///
    /// LU without pivoting plus one refinement step; falls back to partial
    /// pivoting when a pivot is small relative to the matrix scale.
    pub fn solve_shifted(&self, shift: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let scale = self.max_abs_entry().max(shift.norm()).max(1.0);
        if let Some(mut y) = self.solve_no_pivot(shift, rhs, 1e-10 * scale) {
            let ay = self.shifted_matvec(shift, &y);
            let r: Vec<Complex64> = rhs.iter().zip(&ay).map(|(b, a)| b - a).collect();
            if let Some(dy) = self.solve_no_pivot(shift, &r, 1e-10 * scale) {
                for (yi, di) in y.iter_mut().zip(dy) {
                    *yi += di;
                }
                return Ok(y);
            }
        }
        self.solve_pivoted(shift, rhs, None)
            .ok_or(Error::SingularSolve { shift })
    }

    /// `(self - shift) v`.
    pub fn shifted_matvec(&self, shift: Complex64, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.matvec(v);
        for (o, vi) in out.iter_mut().zip(v) {
            *o -= shift * vi;
        }
        out
    }

    fn solve_no_pivot(
        &self,
        shift: Complex64,
        rhs: &[Complex64],
        min_pivot: f64,
    ) -> Option<Vec<Complex64>> {
        let n = self.dim();
        let mut u = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        u.push(self.diag[0] - shift);
        y.push(rhs[0]);
        if u[0].norm() < min_pivot {
            return None;
        }
        for j in 1..n {
            let l = self.sub[j - 1] / u[j - 1];
            let p = self.diag[j] - shift - l * self.sup[j - 1];
            if p.norm() < min_pivot {
                return None;
            }
            u.push(p);
            y.push(rhs[j] - l * y[j - 1]);
        }
        let mut x = vec![ZERO; n];
        x[n - 1] = y[n - 1] / u[n - 1];
        for j in (0..n - 1).rev() {
            x[j] = (y[j] - self.sup[j] * x[j + 1]) / u[j];
        }
        Some(x)
    }

    /// Gaussian elimination with partial pivoting (LAPACK `gtsv` layout).
    /// With `guard = Some(g)`, zero pivots are replaced by `g` instead of
    /// failing, which is what inverse iteration needs.
    pub(crate) fn solve_pivoted(
        &self,
        shift: Complex64,
        rhs: &[Complex64],
        guard: Option<f64>,
    ) -> Option<Vec<Complex64>> {
        let n = self.dim();
        let mut d: Vec<Complex64> = self.diag.iter().map(|z| z - shift).collect();
        let mut dl = self.sub.clone();
        let mut du = self.sup.clone();
        let mut b = rhs.to_vec();
        let fix = |p: Complex64| -> Option<Complex64> {
            match guard {
                Some(g) if p.norm() < g => Some(Complex64::new(g, 0.0)),
                None if p == ZERO => None,
                _ => Some(p),
            }
        };
        for k in 0..n.saturating_sub(1) {
            if d[k].l1_norm() >= dl[k].l1_norm() {
                let dk = fix(d[k])?;
                d[k] = dk;
                let mult = dl[k] / dk;
                d[k + 1] -= mult * du[k];
                b[k + 1] = b[k + 1] - mult * b[k];
                if k + 2 < n {
                    dl[k] = ZERO;
                }
            } else {
                let mult = d[k] / dl[k];
                d[k] = dl[k];
                let temp = d[k + 1];
                d[k + 1] = du[k] - mult * temp;
                if k + 2 < n {
                    dl[k] = du[k + 1];
                    du[k + 1] = -mult * dl[k];
                }
                du[k] = temp;
                let tb = b[k];
                b[k] = b[k + 1];
                b[k + 1] = tb - mult * b[k + 1];
            }
        }
        d[n - 1] = fix(d[n - 1])?;
        b[n - 1] /= d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        }
        for k in (0..n.saturating_sub(2)).rev() {
            b[k] = (b[k] - du[k] * b[k + 1] - dl[k] * b[k + 2]) / d[k];
        }
        Some(b)
    }
}

/// `T(x) = Delta_S + x X` on the block.
pub fn assemble_t(coeffs: &LadderCoefficients, x: Complex64) -> TridiagonalOperator {
    let block = &coeffs.block;
    let mut op = coeffs.geodesic().scaled(x);
    for (j, d) in op.diag.iter_mut().enumerate() {
        let k = (block.k_min + j as i64) as f64;
        *d = Complex64::new(k * k, 0.0);
    }
    op.meta.parameter = OperatorParameter::Coupling(x);
    op
}

/// `P_gamma = gamma^2 / 2 Delta_S - gamma X` on the block.
pub fn assemble_p_gamma(coeffs: &LadderCoefficients, gamma: f64) -> Result<TridiagonalOperator> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma must be > 0, got {gamma}")));
    }
    let block = &coeffs.block;
    let half = 0.5 * gamma * gamma;
    let mut op = coeffs.geodesic().scaled(Complex64::new(-gamma, 0.0));
    for (j, d) in op.diag.iter_mut().enumerate() {
        let k = (block.k_min + j as i64) as f64;
        *d = Complex64::new(half * k * k, 0.0);
    }
    op.meta.parameter = OperatorParameter::Gamma(gamma);
    Ok(op)
}

/// Truncation range for unbounded ladders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TruncationPolicy {
    Fixed { k_max: i64 },
    /// Double `k_max` from a power-of-two start until the tracked branch
    /// moves by less than `tol`.
    Adaptive { tol: f64 },
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::Adaptive { tol: 1e-10 }
    }
}

/// Largest `k_max` the doubling search will try.
pub const MAX_ADAPTIVE_K: i64 = 2048;

/// `max(32, ceil(8 (1 + sqrt(eta))))`.
pub fn default_k_max(eta: f64) -> i64 {
    (8.0 * (1.0 + eta.max(0.0).sqrt())).ceil().max(32.0) as i64
}

/// First `k_max` tried by the adaptive policy.
pub fn adaptive_start(eta: f64) -> i64 {
    (default_k_max(eta) as u64).next_power_of_two() as i64
}

/// A truncated block and the branch shift observed when doubling it.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationCertificate {
    pub block: CasimirBlock,
    pub shift: Option<f64>,
}

/// Truncation of an unbounded ladder (`K <= 0`, `eta > 0`).
///
/// The adaptive policy certifies the range against the branch of
/// `T(target_x)` emanating from 0.
pub fn truncate(
    eta: f64,
    curvature: f64,
    policy: TruncationPolicy,
    target_x: f64,
) -> Result<TruncationCertificate> {
    if curvature > 0.0 {
        return Err(Error::InvalidInput(format!(
            "K = {curvature} > 0 gives a finite ladder; truncation is not defined"
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidInput(format!("truncation needs eta > 0, got {eta}")));
    }
    debug_assert_eq!(crate::ladder::ladder_extent(eta, curvature)?, LadderExtent::Unbounded);
    match policy {
        TruncationPolicy::Fixed { k_max } => Ok(TruncationCertificate {
            block: CasimirBlock::truncated(eta, curvature, k_max)?,
            shift: None,
        }),
        TruncationPolicy::Adaptive { tol } => {
            let x = Complex64::new(target_x, 0.0);
            let branch_at = |k_max: i64| -> Result<Complex64> {
                let coeffs = LadderCoefficients::new(CasimirBlock::truncated(eta, curvature, k_max)?)?;
                let branch = eig::track_branch(&coeffs, x, 16)?;
                branch.into_result()?.final_mu()
            };
            let mut k_max = adaptive_start(eta);
            let mut current = branch_at(k_max)?;
            let mut shift = f64::INFINITY;
            while 2 * k_max <= MAX_ADAPTIVE_K {
                let doubled = branch_at(2 * k_max)?;
                shift = (doubled - current).norm();
                if shift < tol {
                    return Ok(TruncationCertificate {
                        block: CasimirBlock::truncated(eta, curvature, k_max)?,
                        shift: Some(shift),
                    });
                }
                k_max *= 2;
                current = doubled;
            }
            Err(Error::TruncationNotCertified { k_max, shift })
        }
    }
}

/// Pseudo-random unit vector with entries uniform in the unit square.
pub(crate) fn random_unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// `min Re <op v, v>` over `trials` seeded random unit vectors.
pub fn accretivity_minimum(op: &TridiagonalOperator, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..trials.max(1) {
        let v = random_unit_vector(&mut rng, op.dim());
        let av = op.matvec(&v);
        let energy: f64 = av.iter().zip(&v).map(|(a, b)| (a * b.conj()).re).sum();
        worst = worst.min(energy);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn l1() -> LadderCoefficients {
        LadderCoefficients::new(CasimirBlock::intrinsic(2.0, 1.0).unwrap()).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn unperturbed_l1_block_is_diagonal() {
        let t = assemble_t(&l1(), c(0.0));
        assert_eq!(t.diag, vec![c(1.0), c(0.0), c(1.0)]);
        assert!(t.sup.iter().chain(&t.sub).all(|z| *z == c(0.0)));
        assert_eq!(t.k_offset, -1);
    }

    #[test]
    fn perturbed_l1_block_entries() {
        let t = assemble_t(&l1(), c(0.3));
        let h = 0.3 * 0.5f64.sqrt();
        for j in 0..2 {
            assert_relative_eq!(t.sub[j].re, h, max_relative = 1e-15);
            assert_relative_eq!(t.sup[j].re, -h, max_relative = 1e-15);
        }
        assert_eq!(t.diag, vec![c(1.0), c(0.0), c(1.0)]);
    }

    #[test]
    fn trivial_block_is_one_by_one_zero() {
        let coeffs = LadderCoefficients::new(CasimirBlock::intrinsic(0.0, -1.0).unwrap()).unwrap();
        let t = assemble_t(&coeffs, c(0.7));
        assert_eq!(t.dim(), 1);
        assert_eq!(t.diag[0], c(0.0));
        let p = assemble_p_gamma(&coeffs, 3.0).unwrap();
        assert_eq!(p.diag[0], c(0.0));
        assert_eq!(accretivity_minimum(&p, 10, 1), 0.0);
    }

    #[test]
    fn p_gamma_entries_and_consistency() {
        let coeffs = l1();
        let p = assemble_p_gamma(&coeffs, 4.0).unwrap();
        assert_eq!(p.diag, vec![c(8.0), c(0.0), c(8.0)]);
        let h = 4.0 * 0.5f64.sqrt();
        assert_relative_eq!(p.sub[0].re, -h, max_relative = 1e-15);
        assert_relative_eq!(p.sup[1].re, h, max_relative = 1e-15);

        let trunc = LadderCoefficients::new(CasimirBlock::truncated(5.0, -1.0, 16).unwrap()).unwrap();
        for coeffs in [coeffs, trunc] {
            for gamma in [1.0, 10.0, 100.0] {
                let p = assemble_p_gamma(&coeffs, gamma).unwrap();
                let t = assemble_t(&coeffs, c(-2.0 / gamma)).scaled(c(0.5 * gamma * gamma));
                for i in 0..p.dim() {
                    for j in 0..p.dim() {
                        let (a, b) = (p.entry(i, j), t.entry(i, j));
                        assert!((a - b).norm() <= 1e-13 * a.norm().max(b.norm()).max(1e-300));
                    }
                }
            }
        }
        assert!(assemble_p_gamma(&l1(), 0.0).is_err());
        assert!(assemble_p_gamma(&l1(), -1.0).is_err());
    }

    #[test]
    fn fixed_truncation_echoes_policy() {
        let t = truncate(5.0, -1.0, TruncationPolicy::Fixed { k_max: 32 }, 0.0).unwrap();
        assert_eq!((t.block.k_min, t.block.k_max), (-32, 32));
        let t = truncate(1.0, 0.0, TruncationPolicy::Fixed { k_max: 16 }, 0.0).unwrap();
        assert_eq!((t.block.k_min, t.block.k_max), (-16, 16));
        assert!(truncate(2.0, 1.0, TruncationPolicy::Fixed { k_max: 16 }, 0.0).is_err());
        assert!(truncate(0.0, -1.0, TruncationPolicy::Fixed { k_max: 16 }, 0.0).is_err());
    }

    #[test]
    fn adaptive_truncation_certifies_branch() {
        let t = truncate(5.0, -1.0, TruncationPolicy::Adaptive { tol: 1e-10 }, -0.2).unwrap();
        assert_eq!(t.block.k_max, 32);
        assert!(t.shift.unwrap() < 1e-10);
        assert_eq!(default_k_max(5.0), 32);
        assert_eq!(default_k_max(100.0), 88);
        assert_eq!(adaptive_start(100.0), 128);
    }

    #[test]
    fn solvers_agree_with_dense() {
        let coeffs = LadderCoefficients::new(CasimirBlock::truncated(3.0, -1.0, 6).unwrap()).unwrap();
        let t = assemble_t(&coeffs, Complex64::new(0.4, 0.1));
        let shift = Complex64::new(0.3, -0.2);
        let rhs: Vec<Complex64> = (0..t.dim()).map(|j| Complex64::new(j as f64, 1.0)).collect();
        let y = t.solve_shifted(shift, &rhs).unwrap();
        let back = t.shifted_matvec(shift, &y);
        for (a, b) in back.iter().zip(&rhs) {
            assert!((a - b).norm() < 1e-12);
        }
        let y2 = t.solve_pivoted(shift, &rhs, None).unwrap();
        for (a, b) in y.iter().zip(&y2) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_pivot() {
        // diag(0, 1, 2) has a zero first pivot without row exchanges but
        // is nonsingular.
        let meta = l1().geodesic().meta;
        let t = TridiagonalOperator::new(
            vec![c(0.0), c(1.0), c(2.0)],
            vec![c(0.5), c(-0.25)],
            vec![c(-0.5), c(0.25)],
            -1,
            meta,
        )
        .unwrap();
        let rhs = vec![c(1.0), c(2.0), c(3.0)];
        let y = t.solve_shifted(c(0.0), &rhs).unwrap();
        let back = t.shifted_matvec(c(0.0), &y);
        for (a, b) in back.iter().zip(&rhs) {
            assert!((a - b).norm() < 1e-12);
        }
        let exact = assemble_t(&l1(), c(0.0));
        assert!(exact.solve_shifted(c(0.0), &rhs).is_err());
    }

    #[test]
    fn accretivity_examples() {
        let p = assemble_p_gamma(&l1(), 3.0).unwrap();
        assert!(accretivity_minimum(&p, 100, 7) >= -1e-12);
        let coeffs = LadderCoefficients::new(CasimirBlock::truncated(5.0, -1.0, 64).unwrap()).unwrap();
        let p = assemble_p_gamma(&coeffs, 0.5).unwrap();
        assert!(accretivity_minimum(&p, 100, 7) >= -1e-12);
    }
}
