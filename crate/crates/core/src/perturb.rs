//! Analytic perturbation theory for the linear family `T(x) = Delta_S + x X`
//! at matrix level: Rayleigh-Schroedinger coefficients of the branch through
//! 0, Riesz projections by contour quadrature, and resolvent norms.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::eig::eig_dense;
use crate::error::{Error, Result};
use crate::ladder::{CasimirBlock, LadderCoefficients};
use crate::operator::{assemble_t, TridiagonalOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest dimension for which norms are certified by a dense SVD.
pub const SVD_CERTIFY_LIMIT: usize = 512;

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Taylor data of `mu(x) = sum x^n mu_n` around `x = 0`.
///
/// `mu2` is the Taylor coefficient, so `mu''(0) = 2 mu2`. The correction
/// vector `phi1` has no component along `phi0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSeries {
    pub block: CasimirBlock,
    pub mu0: Complex64,
    pub mu1: Complex64,
    pub mu2: Complex64,
    pub phi0: Vec<Complex64>,
    pub phi1: Vec<Complex64>,
}

impl PerturbationSeries {
    pub fn second_derivative(&self) -> Complex64 {
        2.0 * self.mu2
    }

    /// Second-order Taylor polynomial.
    pub fn taylor(&self, x: Complex64) -> Complex64 {
        self.mu0 + self.mu1 * x + self.mu2 * x * x
    }
}

pub fn rs_series(coeffs: &LadderCoefficients) -> Result<PerturbationSeries> {
    let block = coeffs.block.clone();
    let n = block.dim();
    let zero_slot = block.zero_index();
    let x = coeffs.geodesic();
    let unperturbed = assemble_t(coeffs, ZERO);

    let mut phi0 = vec![ZERO; n];
    phi0[zero_slot] = ONE;
    let mu0 = unperturbed.diag[zero_slot];

    let x_phi0 = x.matvec(&phi0);
    let mu1 = inner(&x_phi0, &phi0);

    // (Delta_S - mu0) phi1 = -(X - mu1) phi0 on the complement of phi0.
    let mut phi1 = vec![ZERO; n];
    for j in 0..n {
        if j == zero_slot {
            continue;
        }
        let rhs = -(x_phi0[j] - mu1 * phi0[j]);
        let pivot = unperturbed.diag[j] - mu0;
        if pivot.norm() < 1e-12 {
            return Err(Error::SingularSolve { shift: mu0 });
        }
        phi1[j] = rhs / pivot;
    }

    let x_phi1 = x.matvec(&phi1);
    let shifted: Vec<Complex64> = x_phi1.iter().zip(&phi1).map(|(a, b)| a - mu1 * b).collect();
    let mu2 = inner(&shifted, &phi0);

    Ok(PerturbationSeries { block, mu0, mu1, mu2, phi0, phi1 })
}

/// Circle with equispaced trapezoidal nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contour {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

impl Default for Contour {
    /// Radius 1/2 around 0 with 64 nodes: separates 0 from `{k^2 : k != 0}`.
    fn default() -> Self {
        Self { center: ZERO, radius: 0.5, nodes: 64 }
    }
}

impl Contour {
    pub fn new(center: Complex64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("contour radius must be > 0, got {radius}")));
        }
        if nodes < 8 {
            return Err(Error::InvalidInput(format!("contour needs >= 8 nodes, got {nodes}")));
        }
        Ok(Self { center, radius, nodes })
    }

    /// Quadrature nodes `zeta_j = c + r e^{i theta_j}` with their unit
    /// directions `e^{i theta_j}`.
    pub fn points(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        (0..self.nodes).map(move |j| {
            let dir = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / self.nodes as f64);
            (self.center + self.radius * dir, dir)
        })
    }

    pub fn encloses(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }

    pub fn distance(&self, z: Complex64) -> f64 {
        ((z - self.center).norm() - self.radius).abs()
    }

    /// The circle must avoid the unperturbed spectrum `{k^2}` of the block.
    pub fn check_separates(&self, block: &CasimirBlock) -> Result<()> {
        for k in block.slots() {
            let z = Complex64::new((k * k) as f64, 0.0);
            if self.distance(z) < 1e-8 {
                return Err(Error::EigenvalueOnContour { eigenvalue: z, distance: self.distance(z) });
            }
        }
        Ok(())
    }
}

/// Minimum distance between spectrum and contour for a projection.
pub const CONTOUR_MIN_DISTANCE: f64 = 1e-8;

/// Dense resolvent `(op - zeta)^{-1}` by column tridiagonal solves.
pub fn resolvent(op: &TridiagonalOperator, zeta: Complex64) -> Result<DMatrix<Complex64>> {
    let n = op.dim();
    let mut r = DMatrix::zeros(n, n);
    let mut e = vec![ZERO; n];
    for j in 0..n {
        e[j] = ONE;
        let col = op.solve_shifted(zeta, &e)?;
        for (i, v) in col.into_iter().enumerate() {
            r[(i, j)] = v;
        }
        e[j] = ZERO;
    }
    Ok(r)
}

/// Riesz projection `-(1 / 2 pi i) \oint R(zeta) dzeta` by the trapezoidal
/// rule on the contour.
pub fn riesz_projection(op: &TridiagonalOperator, contour: &Contour) -> Result<DMatrix<Complex64>> {
    for ev in eig_dense(op)? {
        let d = contour.distance(ev);
        if d < CONTOUR_MIN_DISTANCE {
            return Err(Error::EigenvalueOnContour { eigenvalue: ev, distance: d });
        }
    }
    let n = op.dim();
    let mut p = DMatrix::<Complex64>::zeros(n, n);
    for (zeta, dir) in contour.points() {
        // dzeta = i r dir dtheta, so each node carries -(r / N) dir R(zeta).
        let weight = -contour.radius / contour.nodes as f64 * dir;
        p += resolvent(op, zeta)? * weight;
    }
    Ok(p)
}

/// Frobenius norm of `P^2 - P`.
pub fn projection_defect(p: &DMatrix<Complex64>) -> f64 {
    (p * p - p).norm()
}

/// Number of eigenvalues of `op` strictly inside the contour.
pub fn enclosed_count(op: &TridiagonalOperator, contour: &Contour) -> Result<usize> {
    Ok(eig_dense(op)?.into_iter().filter(|&z| contour.encloses(z)).count())
}

/// Largest singular value of `X (Delta_S - zeta)^{-1}` on a block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub power: f64,
    pub iterations: usize,
    /// Dense SVD value, when the dimension allows it.
    pub dense: Option<f64>,
}

impl NormEstimate {
    pub fn value(&self) -> f64 {
        self.dense.unwrap_or(self.power)
    }
}

fn diagonal_shift(block: &CasimirBlock, zeta: Complex64) -> Result<Vec<Complex64>> {
    block
        .slots()
        .map(|k| {
            let d = Complex64::new((k * k) as f64, 0.0) - zeta;
            if d.norm() < 1e-14 {
                Err(Error::EigenvalueOnContour { eigenvalue: d + zeta, distance: d.norm() })
            } else {
                Ok(d)
            }
        })
        .collect()
}

/// Power iteration on `M^H M` for `M = X (Delta_S - zeta)^{-1}`.
pub fn resolvent_coupling_norm(
    coeffs: &LadderCoefficients,
    zeta: Complex64,
    certify: bool,
) -> Result<NormEstimate> {
    let block = &coeffs.block;
    let n = block.dim();
    let shift = diagonal_shift(block, zeta)?;
    let x = coeffs.geodesic();
    let xh = x.adjoint();
    if coeffs.a.iter().all(|&a| a == 0.0) {
        return Ok(NormEstimate { power: 0.0, iterations: 0, dense: certify.then_some(0.0) });
    }
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        let scaled: Vec<Complex64> = v.iter().zip(&shift).map(|(a, d)| a / d).collect();
        x.matvec(&scaled)
    };
    let apply_adjoint = |w: &[Complex64]| -> Vec<Complex64> {
        xh.matvec(w).iter().zip(&shift).map(|(a, d)| a / d.conj()).collect()
    };

    let mut v: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(1.0 + 0.1 * j as f64, 0.05 * j as f64))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut sigma = 0.0;
    let mut iterations = 0;
    for it in 1..=20_000 {
        let w = apply(&v);
        let next = norm(&w);
        let mut u = apply_adjoint(&w);
        let nu = norm(&u);
        iterations = it;
        if nu == 0.0 {
            sigma = next;
            break;
        }
        u.iter_mut().for_each(|z| *z /= nu);
        v = u;
        if (next - sigma).abs() <= 1e-12 * next {
            sigma = next;
            break;
        }
        sigma = next;
    }

    let dense = if certify && n <= SVD_CERTIFY_LIMIT {
        let mut m = x.to_dense();
        for (j, d) in shift.iter().enumerate() {
            let inv = 1.0 / d;
            m.column_mut(j).iter_mut().for_each(|z| *z *= inv);
        }
        Some(m.singular_values().max())
    } else {
        None
    };
    Ok(NormEstimate { power: sigma, iterations, dense })
}

/// `min` over contour nodes of `1 / ||X (Delta_S - zeta)^{-1}||`.
///
/// This is a guaranteed radius in `x` within which the spectrum of `T(x)`
/// stays split by the contour. The minimizing node is certified by a dense
/// SVD when the block is small enough.
pub fn perturbation_radius(coeffs: &LadderCoefficients, contour: &Contour) -> Result<f64> {
    contour.check_separates(&coeffs.block)?;
    let mut worst: Option<(f64, Complex64)> = None;
    for (zeta, _) in contour.points() {
        let est = resolvent_coupling_norm(coeffs, zeta, false)?;
        if worst.is_none_or(|(s, _)| est.power > s) {
            worst = Some((est.power, zeta));
        }
    }
    let (sigma, zeta) = worst.expect("contour has nodes");
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    let certified = resolvent_coupling_norm(coeffs, zeta, true)?.value();
    Ok(1.0 / certified.max(sigma))
}

/// Norm of `X (Delta_S - zeta)^{-1}` on the slot `k = 0` next to its
/// closed form `|zeta|^{-1} sqrt(eta / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemarkBound {
    pub computed: f64,
    pub closed_form: f64,
}

impl RemarkBound {
    pub fn relative_error(&self) -> f64 {
        (self.computed - self.closed_form).abs() / self.closed_form.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn remark_bound_on(coeffs: &LadderCoefficients, zeta: Complex64) -> Result<RemarkBound> {
    let block = &coeffs.block;
    if !(block.eta > 0.0) {
        return Err(Error::InvalidInput("the k = 0 bound needs eta > 0".into()));
    }
    if block.k_min > -1 || block.k_max < 1 {
        return Err(Error::InvalidInput("the k = 0 bound needs slots -1..=1".into()));
    }
    let shift = diagonal_shift(block, zeta)?;
    let mut e0 = vec![ZERO; block.dim()];
    let z = block.zero_index();
    e0[z] = ONE / shift[z];
    let computed = norm(&coeffs.geodesic().matvec(&e0));
    let closed_form = (0.5 * block.eta).sqrt() / zeta.norm();
    Ok(RemarkBound { computed, closed_form })
}

/// The bound on the flat ladder; the `k = 0` slot does not see `K`.
pub fn remark_bound(eta: f64, zeta: Complex64) -> Result<RemarkBound> {
    let coeffs = LadderCoefficients::new(CasimirBlock::truncated(eta, 0.0, 1)?)?;
    remark_bound_on(&coeffs, zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::track_branch;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn l1() -> LadderCoefficients {
        LadderCoefficients::new(CasimirBlock::intrinsic(2.0, 1.0).unwrap()).unwrap()
    }

    fn blocks() -> Vec<LadderCoefficients> {
        vec![
            l1(),
            LadderCoefficients::new(CasimirBlock::intrinsic(12.0, 1.0).unwrap()).unwrap(),
            LadderCoefficients::new(CasimirBlock::truncated(1.0, 0.0, 16).unwrap()).unwrap(),
            LadderCoefficients::new(CasimirBlock::truncated(5.0, -1.0, 16).unwrap()).unwrap(),
        ]
    }

    #[test]
    fn series_invariants() {
        for coeffs in blocks() {
            let s = rs_series(&coeffs).unwrap();
            let eta = coeffs.block.eta;
            assert_eq!(s.mu0, c(0.0));
            assert!(s.mu1.norm() <= 1e-15);
            assert!((s.second_derivative() - c(eta)).norm() <= 1e-12 * eta);
            assert!((norm(&s.phi0) - 1.0).abs() < 1e-15);
            assert!(inner(&s.phi1, &s.phi0).norm() <= 1e-12);
            // (Delta_S - mu0) phi1 = -(X - mu1) phi0
            let t0 = assemble_t(&coeffs, c(0.0));
            let lhs = t0.shifted_matvec(s.mu0, &s.phi1);
            let xphi0 = coeffs.geodesic().matvec(&s.phi0);
            for j in 0..lhs.len() {
                let rhs = -(xphi0[j] - s.mu1 * s.phi0[j]);
                if j != coeffs.block.zero_index() {
                    assert!((lhs[j] - rhs).norm() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn l1_series_matches_taylor_expansion() {
        // (1 - sqrt(1 - 4x^2)) / 2 = x^2 + x^4 + ...
        let s = rs_series(&l1()).unwrap();
        assert!((s.mu2 - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn trivial_series_is_zero() {
        let coeffs = LadderCoefficients::new(CasimirBlock::intrinsic(0.0, -1.0).unwrap()).unwrap();
        let s = rs_series(&coeffs).unwrap();
        assert_eq!((s.mu0, s.mu1, s.mu2), (c(0.0), c(0.0), c(0.0)));
    }

    #[test]
    fn branch_deviates_from_series_at_third_order() {
        for coeffs in blocks() {
            let s = rs_series(&coeffs).unwrap();
            let pts: Vec<(f64, f64)> = (3..=9)
                .map(|p| {
                    let x = 2f64.powi(-p);
                    let mu = track_branch(&coeffs, c(x), 4).unwrap().last().mu;
                    (x.ln(), (mu - s.taylor(c(x))).norm().ln())
                })
                .collect();
            let slope = crate::spectra::loglog_slope(&pts);
            assert!(slope >= 2.7, "slope {slope} for eta {}", coeffs.block.eta);
        }
    }

    #[test]
    fn contour_validation() {
        assert!(Contour::new(c(0.0), 0.0, 64).is_err());
        assert!(Contour::new(c(0.0), 0.5, 4).is_err());
        let bad = Contour::new(c(0.0), 1.0, 64).unwrap();
        assert!(bad.check_separates(&l1().block).is_err());
        assert!(Contour::default().check_separates(&l1().block).is_ok());
    }

    #[test]
    fn riesz_examples() {
        let contour = Contour::default();
        let p = riesz_projection(&assemble_t(&l1(), c(0.0)), &contour).unwrap();
        let mut e = DMatrix::zeros(3, 3);
        e[(1, 1)] = c(1.0);
        assert!((&p - e).norm() < 1e-12);

        let t = assemble_t(&l1(), c(0.3));
        let p = riesz_projection(&t, &contour).unwrap();
        assert!(projection_defect(&p) <= 1e-8);
        assert!((p.trace() - c(1.0)).norm() <= 1e-8);
        assert_eq!(enclosed_count(&t, &contour).unwrap(), 1);

        let around_one = Contour::new(c(1.0), 0.05, 64).unwrap();
        let p = riesz_projection(&t, &around_one).unwrap();
        assert!(projection_defect(&p) <= 1e-8);
        assert!((p.trace() - c(1.0)).norm() <= 1e-8);

        let through = Contour::new(c(0.0), 0.1, 64).unwrap();
        assert!(matches!(riesz_projection(&t, &through), Err(Error::EigenvalueOnContour { .. })));
    }

    #[test]
    fn riesz_quadrature_converges() {
        for coeffs in blocks() {
            let t = assemble_t(&coeffs, c(0.1));
            let p64 = riesz_projection(&t, &Contour::new(c(0.0), 0.5, 64).unwrap()).unwrap();
            let p128 = riesz_projection(&t, &Contour::new(c(0.0), 0.5, 128).unwrap()).unwrap();
            assert!((p64 - p128).norm() < 1e-10);
        }
    }

    #[test]
    fn resolvent_identity() {
        for coeffs in blocks() {
            let x = 0.05;
            let t0 = assemble_t(&coeffs, c(0.0));
            let tx = assemble_t(&coeffs, c(x));
            let xm = coeffs.geodesic().to_dense();
            let n = t0.dim();
            for (zeta, _) in Contour::new(c(0.0), 0.5, 8).unwrap().points() {
                let r0 = resolvent(&t0, zeta).unwrap();
                let rx = resolvent(&tx, zeta).unwrap();
                let inner = DMatrix::<Complex64>::identity(n, n) + &xm * &r0 * c(x);
                let alt = &r0 * inner.try_inverse().unwrap();
                let diff = (rx - &alt).singular_values().max();
                assert!(diff <= 1e-9, "{diff}");
            }
        }
    }

    #[test]
    fn radius_examples() {
        let contour = Contour::default();
        let r = perturbation_radius(&l1(), &contour).unwrap();
        assert!(r <= 0.5 + 1e-12 && r > 0.0);
        let trivial = LadderCoefficients::new(CasimirBlock::intrinsic(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(perturbation_radius(&trivial, &contour).unwrap(), f64::INFINITY);
        let big = LadderCoefficients::new(CasimirBlock::truncated(8.0, -1.0, 64).unwrap()).unwrap();
        let r = perturbation_radius(&big, &contour).unwrap();
        assert!(r <= 0.25 + 1e-12 && r > 0.0);
    }

    #[test]
    fn power_iteration_matches_svd() {
        for coeffs in blocks() {
            for zeta in [c(0.5), Complex64::new(0.2, 0.3), c(-0.4)] {
                let est = resolvent_coupling_norm(&coeffs, zeta, true).unwrap();
                let dense = est.dense.unwrap();
                assert!((est.power - dense).abs() <= 1e-8 * dense, "{est:?}");
            }
        }
    }

    #[test]
    fn remark_examples() {
        for (eta, zeta, expected) in [(2.0, 0.5, 2.0), (8.0, 0.5, 4.0), (2.0, 0.25, 4.0)] {
            let b = remark_bound(eta, c(zeta)).unwrap();
            assert!((b.computed - expected).abs() <= 1e-12 * expected);
            assert!((b.closed_form - expected).abs() <= 1e-12 * expected);
        }
        assert!(remark_bound(2.0, c(1.0)).is_err());
        assert!(remark_bound(2.0, c(0.0)).is_err());
    }
}
