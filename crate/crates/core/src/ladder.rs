//! Ladder algebra of a single Casimir block.
//!
//! A block carries one basis vector per vertical Fourier mode `k`. The
//! raising operator `X+` sends slot `k` to slot `k + 1` with coefficient
//! `a_k >= 0`, where
//!
//! ```text
//! a_k^2 = (eta - K k - K k^2) / 4
//! ```
//!
//! and the lowering operator is fixed by `X- = -(X+)^*`, so slot `k + 1`
//! goes back to slot `k` with coefficient `-a_k`. In this gauge every
//! assembled operator is a real tridiagonal matrix and the geodesic field
//! `X = X+ + X-` is skew-symmetric.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{OperatorMeta, OperatorParameter, TridiagonalOperator};

/// Absolute tolerance for the algebraic identities on a ladder.
pub const TOL_ZERO: f64 = 1e-12;

/// Tolerance for a slightly negative coefficient square inside a ladder.
pub const TOL_NEG: f64 = 1e-12;

/// Squared norm factor of `X+` on slot `k`. Negative values mean the slot
/// `k + 1` does not exist in the block.
pub fn ladder_coeff_sq(eta: f64, curvature: f64, k: i64) -> f64 {
    let k = k as f64;
    0.25 * (eta - curvature * k - curvature * k * k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderExtent {
    /// The ladder terminates on its own (sphere-type curvature or eta = 0).
    Finite { k_min: i64, k_max: i64 },
    /// The ladder runs over all of `Z`; any finite range is a truncation.
    Unbounded,
}

impl LadderExtent {
    pub fn is_finite(&self) -> bool {
        matches!(self, LadderExtent::Finite { .. })
    }
}

/// Intrinsic index range of the block with Casimir value `eta`.
///
/// For `K > 0` the ladder stops at the first rung whose coefficient
/// vanishes; `eta` must then be of the form `K l (l + 1)`, otherwise the
/// block does not exist and `NotInSpectrum` is returned.
pub fn ladder_extent(eta: f64, curvature: f64) -> Result<LadderExtent> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::InvalidInput(format!("eta must be >= 0, got {eta}")));
    }
    if !curvature.is_finite() {
        return Err(Error::InvalidInput(format!("curvature must be finite, got {curvature}")));
    }
    if eta == 0.0 {
        return Ok(LadderExtent::Finite { k_min: 0, k_max: 0 });
    }
    if curvature <= 0.0 {
        return Ok(LadderExtent::Unbounded);
    }
    let tol = TOL_ZERO * eta.max(1.0);
    let mut k: i64 = 0;
    loop {
        let q = 4.0 * ladder_coeff_sq(eta, curvature, k);
        if q.abs() <= tol {
            // a_{-k-1}^2 equals a_k^2, so the range is symmetric.
            return Ok(LadderExtent::Finite { k_min: -k, k_max: k });
        }
        if q < 0.0 {
            return Err(Error::NotInSpectrum { eta, curvature });
        }
        k += 1;
    }
}

/// One invariant subspace `V'_eta` restricted to the slots `k_min..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirBlock {
    pub curvature: f64,
    pub eta: f64,
    pub k_min: i64,
    pub k_max: i64,
    /// True iff the range is intrinsic rather than a truncation.
    pub finite: bool,
}

impl CasimirBlock {
    /// The block on its intrinsic ladder. Fails for unbounded ladders.
    pub fn intrinsic(eta: f64, curvature: f64) -> Result<Self> {
        match ladder_extent(eta, curvature)? {
            LadderExtent::Finite { k_min, k_max } => Ok(Self {
                curvature,
                eta,
                k_min,
                k_max,
                finite: true,
            }),
            LadderExtent::Unbounded => Err(Error::Unbounded { eta, curvature }),
        }
    }

    /// The symmetric truncation `[-k_max, k_max]` of an unbounded ladder.
    pub fn truncated(eta: f64, curvature: f64, k_max: i64) -> Result<Self> {
        match ladder_extent(eta, curvature)? {
            LadderExtent::Unbounded => {}
            LadderExtent::Finite { .. } => {
                return Err(Error::InvalidInput(format!(
                    "eta = {eta}, K = {curvature} has a finite ladder; no truncation needed"
                )))
            }
        }
        if k_max < 1 {
            return Err(Error::InvalidInput(format!("k_max must be >= 1, got {k_max}")));
        }
        let block = Self {
            curvature,
            eta,
            k_min: -k_max,
            k_max,
            finite: false,
        };
        block.validate()?;
        Ok(block)
    }

    /// Block for any `(eta, K)`: intrinsic when the ladder is finite,
    /// otherwise truncated at `k_max`.
    pub fn for_curvature(eta: f64, curvature: f64, k_max: i64) -> Result<Self> {
        match ladder_extent(eta, curvature)? {
            LadderExtent::Finite { .. } => Self::intrinsic(eta, curvature),
            LadderExtent::Unbounded => Self::truncated(eta, curvature, k_max),
        }
    }

    pub fn dim(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    /// Array index of the slot `k = 0`.
    pub fn zero_index(&self) -> usize {
        (-self.k_min) as usize
    }

    pub fn slots(&self) -> impl Iterator<Item = i64> {
        self.k_min..=self.k_max
    }

    fn validate(&self) -> Result<()> {
        if self.k_min > 0 || self.k_max < 0 {
            return Err(Error::InvalidInput(format!(
                "range [{}, {}] must contain 0",
                self.k_min, self.k_max
            )));
        }
        let tol = TOL_NEG * self.eta.max(1.0);
        for k in self.slots() {
            let q = 4.0 * ladder_coeff_sq(self.eta, self.curvature, k);
            if q < -tol {
                return Err(Error::InvalidInput(format!(
                    "negative ladder coefficient at k = {k} for eta = {}, K = {}",
                    self.eta, self.curvature
                )));
            }
        }
        Ok(())
    }
}

/// Raising coefficients `a_k` for `k` in `k_min..k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderCoefficients {
    pub block: CasimirBlock,
    pub a: Vec<f64>,
}

impl LadderCoefficients {
    pub fn new(block: CasimirBlock) -> Result<Self> {
        block.validate()?;
        let a = (block.k_min..block.k_max)
            .map(|k| ladder_coeff_sq(block.eta, block.curvature, k).max(0.0).sqrt())
            .collect();
        Ok(Self { block, a })
    }

    /// `a_k`, or zero outside the stored rungs.
    pub fn coeff(&self, k: i64) -> f64 {
        if k < self.block.k_min || k >= self.block.k_max {
            return 0.0;
        }
        self.a[(k - self.block.k_min) as usize]
    }

    fn meta(&self) -> OperatorMeta {
        OperatorMeta {
            eta: self.block.eta,
            curvature: self.block.curvature,
            parameter: OperatorParameter::None,
            k_max: self.block.k_max,
            truncated: !self.block.finite,
        }
    }

    fn shell(&self) -> TridiagonalOperator {
        TridiagonalOperator::zeros(self.block.dim(), self.block.k_min, self.meta())
    }

    /// Matrix of `X+`: sub-diagonal `a_k`.
    pub fn raising(&self) -> TridiagonalOperator {
        let mut op = self.shell();
        for (s, &a) in op.sub.iter_mut().zip(&self.a) {
            *s = Complex64::new(a, 0.0);
        }
        op
    }

    /// Matrix of `X-`: super-diagonal `-a_k`.
    pub fn lowering(&self) -> TridiagonalOperator {
        let mut op = self.shell();
        for (s, &a) in op.sup.iter_mut().zip(&self.a) {
            *s = Complex64::new(-a, 0.0);
        }
        op
    }

    /// Matrix of the vertical field `V`, acting by `i k` on slot `k`.
    pub fn vertical(&self) -> TridiagonalOperator {
        let mut op = self.shell();
        for (j, d) in op.diag.iter_mut().enumerate() {
            *d = Complex64::new(0.0, (self.block.k_min + j as i64) as f64);
        }
        op
    }

    /// Matrix of the geodesic field `X = X+ + X-`.
    pub fn geodesic(&self) -> TridiagonalOperator {
        let mut op = self.shell();
        for (j, &a) in self.a.iter().enumerate() {
            op.sub[j] = Complex64::new(a, 0.0);
            op.sup[j] = Complex64::new(-a, 0.0);
        }
        op
    }
}

/// Band of a product of two tridiagonal matrices: `rows[i][d + 2]` holds
/// the entry `(i, i + d)` for `d` in `-2..=2`.
pub(crate) fn tridiagonal_product(
    lhs: &TridiagonalOperator,
    rhs: &TridiagonalOperator,
) -> Vec<[Complex64; 5]> {
    let n = lhs.dim();
    let zero = Complex64::new(0.0, 0.0);
    let mut rows = vec![[zero; 5]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for m in i.saturating_sub(1)..(i + 2).min(n) {
            let l = lhs.entry(i, m);
            if l == zero {
                continue;
            }
            for j in m.saturating_sub(1)..(m + 2).min(n) {
                let d = j as i64 - i as i64;
                row[(d + 2) as usize] += l * rhs.entry(m, j);
            }
        }
    }
    rows
}

/// Max-norm of `(-4 X+ X- + i K V - K V^2) - eta I`.
///
/// On a finite ladder every row is checked. On a truncation only rows
/// whose product stencil stays inside the range are checked, i.e. the
/// first and last rows are skipped.
pub fn casimir_residual(coeffs: &LadderCoefficients) -> f64 {
    let block = &coeffs.block;
    let n = block.dim();
    let k = block.curvature;
    let xpxm = tridiagonal_product(&coeffs.raising(), &coeffs.lowering());
    let v = coeffs.vertical();
    let rows = if block.finite || n < 3 { 0..n } else { 1..n - 1 };
    let i = Complex64::new(0.0, 1.0);
    let mut worst: f64 = 0.0;
    for r in rows {
        for (band, &p) in xpxm[r].iter().enumerate() {
            let mut value = -4.0 * p;
            if band == 2 {
                let vr = v.diag[r];
                value += i * k * vr - k * vr * vr - block.eta;
            }
            worst = worst.max(value.norm());
        }
    }
    worst
}

/// Max deviation of `X+ X-` from the scalar `-(eta + K k - K k^2) / 4` on
/// slot `k`, including the off-diagonal bands which must vanish. The first
/// row of a truncation is skipped since its lower rung is missing.
pub fn raising_lowering_residual(coeffs: &LadderCoefficients) -> f64 {
    let block = &coeffs.block;
    let xpxm = tridiagonal_product(&coeffs.raising(), &coeffs.lowering());
    let skip = usize::from(!block.finite);
    let mut worst: f64 = 0.0;
    for (row, k) in xpxm.iter().zip(block.slots()).skip(skip) {
        let kf = k as f64;
        let expected = -0.25 * (block.eta + block.curvature * kf - block.curvature * kf * kf);
        for (band, &p) in row.iter().enumerate() {
            let target = if band == 2 { expected } else { 0.0 };
            worst = worst.max((p - target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coeff_sq_examples() {
        assert_eq!(ladder_coeff_sq(2.0, 1.0, 0), 0.5);
        for k in -5..5 {
            assert_eq!(ladder_coeff_sq(3.0, 0.0, k), 0.75);
        }
        assert_eq!(ladder_coeff_sq(0.0, -1.0, 0), 0.0);
    }

    #[test]
    fn extent_examples() {
        assert_eq!(
            ladder_extent(2.0, 1.0).unwrap(),
            LadderExtent::Finite { k_min: -1, k_max: 1 }
        );
        assert_eq!(
            ladder_extent(6.0, 1.0).unwrap(),
            LadderExtent::Finite { k_min: -2, k_max: 2 }
        );
        assert_eq!(ladder_extent(5.0, -1.0).unwrap(), LadderExtent::Unbounded);
        assert_eq!(ladder_extent(5.0, 0.0).unwrap(), LadderExtent::Unbounded);
        assert_eq!(
            ladder_extent(0.0, -1.0).unwrap(),
            LadderExtent::Finite { k_min: 0, k_max: 0 }
        );
        assert!(matches!(ladder_extent(-1.0, 1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(ladder_extent(3.0, 1.0), Err(Error::NotInSpectrum { .. })));
    }

    #[test]
    fn sphere_ladders_have_dimension_2l_plus_1() {
        for l in 0..12i64 {
            let eta = (l * (l + 1)) as f64 * 0.7;
            let block = CasimirBlock::intrinsic(eta, 0.7).unwrap();
            assert_eq!(block.dim() as i64, 2 * l + 1);
            let top = ladder_coeff_sq(eta, 0.7, block.k_max);
            let bottom = ladder_coeff_sq(eta, 0.7, block.k_min - 1);
            assert!(top.abs() <= TOL_ZERO * eta.max(1.0));
            assert!(bottom.abs() <= TOL_ZERO * eta.max(1.0));
        }
    }

    #[test]
    fn truncation_rejects_finite_ladders() {
        assert!(CasimirBlock::truncated(2.0, 1.0, 8).is_err());
        assert!(CasimirBlock::truncated(0.0, -1.0, 8).is_err());
        let b = CasimirBlock::truncated(5.0, -1.0, 20).unwrap();
        assert_eq!((b.k_min, b.k_max, b.finite), (-20, 20, false));
    }

    #[test]
    fn lowering_norm_matches_previous_rung() {
        let coeffs = LadderCoefficients::new(CasimirBlock::truncated(5.0, -1.0, 10).unwrap()).unwrap();
        for k in -9..=10 {
            let expected = 0.25 * (5.0 - k as f64 + (k * k) as f64);
            let a = coeffs.coeff(k - 1);
            assert!((a * a - expected).abs() <= TOL_ZERO);
        }
    }

    #[test]
    fn casimir_examples() {
        let c = LadderCoefficients::new(CasimirBlock::intrinsic(2.0, 1.0).unwrap()).unwrap();
        assert!(casimir_residual(&c) <= 1e-12);
        let c = LadderCoefficients::new(CasimirBlock::truncated(5.0, -1.0, 20).unwrap()).unwrap();
        assert!(casimir_residual(&c) <= 1e-12);
        let c = LadderCoefficients::new(CasimirBlock::intrinsic(0.0, 3.0).unwrap()).unwrap();
        assert_eq!(casimir_residual(&c), 0.0);
    }

    #[test]
    fn raising_lowering_scalars() {
        for (eta, k, k_max) in [(2.0, 1.0, 0), (12.0, 1.0, 0), (5.0, -1.0, 40), (2.0, 0.0, 40)] {
            let c = LadderCoefficients::new(CasimirBlock::for_curvature(eta, k, k_max).unwrap()).unwrap();
            assert!(raising_lowering_residual(&c) <= 1e-12);
        }
        // l=1, slot k=1: -(2 + 1 - 1)/4
        let c = LadderCoefficients::new(CasimirBlock::intrinsic(2.0, 1.0).unwrap()).unwrap();
        let p = tridiagonal_product(&c.raising(), &c.lowering());
        assert!((p[2][2].re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn truncation_edge_rows_are_not_casimir() {
        // The skipped first row really is polluted by the cut.
        let c = LadderCoefficients::new(CasimirBlock::truncated(5.0, -1.0, 6).unwrap()).unwrap();
        let xpxm = tridiagonal_product(&c.raising(), &c.lowering());
        let vr = c.vertical().diag[0];
        let i = Complex64::new(0.0, 1.0);
        let first = -4.0 * xpxm[0][2] + i * -1.0 * vr + vr * vr;
        assert!((first - 5.0).norm() > 1.0);
    }
}
