use kinetic_spectra::eig::{char_poly, eig_dense, nearest_with_gap, track_branch};
use kinetic_spectra::ladder::{raising_lowering_residual, CasimirBlock, LadderCoefficients};
use kinetic_spectra::operator::{assemble_t, TridiagonalOperator};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Sphere ladders for small l, or truncated flat and hyperbolic ladders.
fn blocks() -> impl Strategy<Value = LadderCoefficients> {
    prop_oneof![
        (1u32..7, 0.25f64..4.0).prop_map(|(l, k)| (k * (l * (l + 1)) as f64, k, 0)),
        (0.1f64..20.0, 4i64..40).prop_map(|(eta, k_max)| (eta, 0.0, k_max)),
        (0.1f64..20.0, 4i64..40).prop_map(|(eta, k_max)| (eta, -1.0, k_max)),
        (0.1f64..20.0, 4i64..40).prop_map(|(eta, k_max)| (eta, -2.5, k_max)),
    ]
    .prop_map(|(eta, k, k_max)| {
        LadderCoefficients::new(CasimirBlock::for_curvature(eta, k, k_max).unwrap()).unwrap()
    })
}

fn vector(n: usize, seed: &[f64]) -> Vec<Complex64> {
    (0..n)
        .map(|j| c(seed[(2 * j) % seed.len()] + 0.1 * j as f64, seed[(2 * j + 1) % seed.len()]))
        .collect()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn dense(op: &TridiagonalOperator) -> DMatrix<Complex64> {
    op.to_dense()
}

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn geodesic_field_is_skew(coeffs in blocks(), seed in prop::collection::vec(-1.0f64..1.0, 8)) {
        let x = coeffs.geodesic();
        prop_assert!(x.diag.iter().all(|d| *d == c(0.0, 0.0)));
        prop_assert!(x.sub.iter().zip(&x.sup).all(|(l, u)| *l == -*u));
        let v = vector(x.dim(), &seed);
        let q = inner(&x.matvec(&v), &v);
        let scale = x.max_abs_entry() * inner(&v, &v).re;
        prop_assert!(q.re.abs() <= 1e-13 * (1.0 + scale));
    }

    #[test]
    fn raising_adjoint_is_minus_lowering(coeffs in blocks()) {
        let diff = dense(&coeffs.raising().adjoint()) + dense(&coeffs.lowering());
        prop_assert_eq!(max_entry(&diff), 0.0);
    }

    #[test]
    fn vertical_commutators(coeffs in blocks()) {
        let v = dense(&coeffs.vertical());
        let i = c(0.0, 1.0);
        let up = dense(&coeffs.raising());
        let down = dense(&coeffs.lowering());
        let scale = 1.0 + max_entry(&up) * coeffs.block.k_max as f64;
        prop_assert!(max_entry(&(&v * &up - &up * &v - &up * i)) <= 1e-13 * scale);
        prop_assert!(max_entry(&(&v * &down - &down * &v + &down * i)) <= 1e-13 * scale);
    }

    #[test]
    fn raising_lowering_scalars(coeffs in blocks()) {
        prop_assert!(raising_lowering_residual(&coeffs) <= 1e-12 * (1.0 + coeffs.block.eta));
    }

    #[test]
    fn gauge_phases_leave_spectrum_invariant(
        coeffs in blocks(),
        x in -0.6f64..0.6,
        phases in prop::collection::vec(0.0f64..std::f64::consts::TAU, 81),
    ) {
        let t = assemble_t(&coeffs, c(x, 0.0));
        let n = t.dim();
        let d: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, phases[j % phases.len()])).collect();
        let mut g = t.clone();
        for j in 0..n - 1 {
            g.sub[j] = d[j + 1] * t.sub[j] * d[j].conj();
            g.sup[j] = d[j] * t.sup[j] * d[j + 1].conj();
        }
        let a = eig_dense(&t).unwrap();
        let b = eig_dense(&g).unwrap();
        let scale = 1.0 + t.max_abs_entry();
        for z in &a {
            let (w, _) = nearest_with_gap(&b, *z);
            prop_assert!((w - z).norm() <= 1e-8 * scale, "{z} vs {w}");
        }
        let lambda = c(0.3, 0.2);
        let (pa, pb) = (char_poly(&t, lambda), char_poly(&g, lambda));
        prop_assert!((pa.determinant() - pb.determinant()).norm() <= 1e-10 * pa.determinant().norm().max(1e-300));
    }

    #[test]
    fn real_coupling_spectrum_is_conjugate_closed(coeffs in blocks(), x in -1.5f64..1.5) {
        let values = eig_dense(&assemble_t(&coeffs, c(x, 0.0))).unwrap();
        let scale = 1.0 + values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for z in &values {
            let (w, _) = nearest_with_gap(&values, z.conj());
            prop_assert!((w - z.conj()).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn tracked_branch_agrees_with_dense_oracle(coeffs in blocks(), x in -0.2f64..0.2) {
        let branch = track_branch(&coeffs, c(x, 0.0), 4).unwrap();
        let t_norm = assemble_t(&coeffs, c(x, 0.0)).frobenius_norm();
        for s in &branch.samples {
            // The eigenvalue condition number grows like 1 / gap next to a
            // branch point, so the 1e-9 agreement is required only on
            // well separated samples.
            if let Some(err) = s.oracle_error {
                let allowed = 1e-9 * (1e-3 / s.gap).max(1.0);
                prop_assert!(err <= allowed, "oracle error {err} at gap {}", s.gap);
            }
            prop_assert!(s.residual <= 1e-9 * (1.0 + t_norm));
        }
    }

    #[test]
    fn branch_is_holomorphic(coeffs in blocks(), re in -0.1f64..0.1, im in -0.1f64..0.1) {
        let h = 1e-5;
        let mu = |z: Complex64| track_branch(&coeffs, z, 4).unwrap().final_mu().unwrap();
        let z = c(re, im);
        let dx = (mu(z + h) - mu(z - h)) / (2.0 * h);
        let dy = (mu(z + c(0.0, h)) - mu(z - c(0.0, h))) / (2.0 * h);
        prop_assert!((dy - c(0.0, 1.0) * dx).norm() <= 1e-6 * (1.0 + dx.norm()), "{dx} {dy}");
    }

    #[test]
    fn sphere_l1_branch_stays_real(x in -0.49f64..0.49) {
        let coeffs = LadderCoefficients::new(CasimirBlock::intrinsic(2.0, 1.0).unwrap()).unwrap();
        let mu = track_branch(&coeffs, c(x, 0.0), 4).unwrap().final_mu().unwrap();
        prop_assert!(mu.im.abs() <= 1e-10);
    }
}
