use beltrami_core::adjoint::{
    divergence_residual, geometric_radii, matrix_from_lambda, zero_decay_probe, RealGradient,
    TensorBump, TestFunction,
};
use beltrami_core::beltrami::{
    linear_result, random_reduced, solve, LinearCoefficients, SolveOptions, SolveResult,
};
use beltrami_core::field::{measure_below, norm, NormKind, Region};
use beltrami_core::recovery::{recover_pair, DEFAULT_EPS_REL};
use beltrami_core::transforms::{random_band_limited, Spectral};
use beltrami_core::wronskian::{stoilow_lambda, wronskian};
use beltrami_core::{ComplexField, GridSpec, RealField};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, 2.0, 1.5).unwrap()
}

fn l2(f: &ComplexField) -> f64 {
    norm(f, NormKind::L2).unwrap()
}

fn complex_in_disk(r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..r, 0.0..std::f64::consts::TAU).prop_map(|(m, t)| Complex64::from_polar(m, t))
}

/// Real 2x2 matrices with `|det| >= 0.2`.
fn invertible() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-2.0..2.0f64)
        .prop_filter("singular", |m| (m[0] * m[3] - m[1] * m[2]).abs() >= 0.2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn beurling_is_unitary_and_factorizes(seed in 0u64..1000, modes in 1usize..15) {
        let g = grid(32);
        let sp = Spectral::new(g);
        let h = random_band_limited(g, seed, modes);
        let s = sp.beurling(&h);
        prop_assert!((l2(&s) / l2(&h) - 1.0).abs() <= 1e-12);
        let ch = sp.cauchy(&h);
        let fac = sp.d_z(&ch).zip_map(&s, |a, b| a - b).unwrap();
        prop_assert!(l2(&fac) <= 1e-12 * l2(&h));
        let inv = sp.d_zbar(&ch).zip_map(&h, |a, b| a - b).unwrap();
        prop_assert!(l2(&inv) <= 1e-12 * l2(&h));
    }

    #[test]
    fn transforms_are_complex_linear(s1 in 0u64..500, s2 in 0u64..500, a in complex_in_disk(3.0), b in complex_in_disk(3.0)) {
        let g = grid(32);
        let sp = Spectral::new(g);
        let (f, h) = (random_band_limited(g, s1, 8), random_band_limited(g, s2, 8));
        let lhs = sp.beurling(&f.axpby(a, &h, b).unwrap());
        let rhs = sp.beurling(&f).axpby(a, &sp.beurling(&h), b).unwrap();
        let diff = lhs.zip_map(&rhs, |x, y| x - y).unwrap();
        prop_assert!(l2(&diff) <= 1e-12 * (1.0 + l2(&lhs)));
    }

    #[test]
    fn wronskian_scales_by_determinant(a in complex_in_disk(2.0), b in complex_in_disk(2.0), m in invertible()) {
        let g = grid(16);
        let phi = SolveResult::linear(g, Complex64::new(1.0, 0.0) + a * 0.1, b * 0.1);
        let psi = SolveResult::linear(g, Complex64::i() + b * 0.1, a * 0.1);
        let p2 = phi.combine(m[0], &psi, m[1]).unwrap();
        let q2 = phi.combine(m[2], &psi, m[3]).unwrap();
        let det = m[0] * m[3] - m[1] * m[2];
        let j = wronskian(&phi, &psi).unwrap();
        let j2 = wronskian(&p2, &q2).unwrap();
        for (x, y) in j.values().iter().zip(j2.values()) {
            prop_assert!((det * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        let anti = wronskian(&psi, &phi).unwrap();
        prop_assert!(j.values().iter().zip(anti.values()).all(|(x, y)| *x == -*y));
    }

    #[test]
    fn recovery_is_generator_invariant(mu in complex_in_disk(0.45), nu in complex_in_disk(0.45), m in invertible()) {
        let g = grid(16);
        let lin = LinearCoefficients::General { mu, nu };
        let p = linear_result(g, lin, Complex64::new(1.0, 0.0)).unwrap();
        let q = linear_result(g, lin, Complex64::i()).unwrap();
        let base = recover_pair(&p, &q, DEFAULT_EPS_REL).unwrap();
        let exact = base
            .coefficient_error(&ComplexField::constant(g, mu), &ComplexField::constant(g, nu))
            .unwrap();
        prop_assert!(exact <= 1e-12);
        let p2 = p.combine(m[0], &q, m[1]).unwrap();
        let q2 = p.combine(m[2], &q, m[3]).unwrap();
        let changed = recover_pair(&p2, &q2, DEFAULT_EPS_REL).unwrap();
        prop_assert_eq!(&changed.singular_mask, &base.singular_mask);
        prop_assert!(base.coefficient_error(&changed.mu_hat, &changed.nu_hat).unwrap() <= 1e-10);
    }

    #[test]
    fn stoilow_coefficient_is_elliptic(mu in complex_in_disk(0.49), nu in complex_in_disk(0.49)) {
        let g = grid(16);
        let lam = stoilow_lambda(&ComplexField::constant(g, mu), &ComplexField::constant(g, nu)).unwrap();
        prop_assert!(lam.sup() < 1.0);
    }

    #[test]
    fn matrix_eigenvalues_within_distortion(l in complex_in_disk(0.9), slack in 0.0..0.09f64) {
        let g = grid(16);
        let k = l.norm() + slack;
        let m = matrix_from_lambda(&ComplexField::constant(g, l), k).unwrap();
        let (lo, hi) = m.eigen_range();
        let big_k = (1.0 + k) / (1.0 - k);
        prop_assert!(lo >= 1.0 / big_k - 1e-12 && hi <= big_k + 1e-12);
    }

    #[test]
    fn measure_below_is_monotone(seed in 0u64..500, t1 in 0.0..2.0f64, t2 in 0.0..2.0f64) {
        let g = grid(32);
        let f = random_band_limited(g, seed, 6).abs();
        let scale = f.sup();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = measure_below(&f, lo * scale, Region::Whole).unwrap();
        let b = measure_below(&f, hi * scale, Region::Whole).unwrap();
        prop_assert!(a <= b && b <= g.area() + 1e-12);
    }

    #[test]
    fn norms_follow_holder_chain(seed in 0u64..500) {
        let g = grid(32);
        let f = random_band_limited(g, seed, 6);
        let (n1, n2, ns) = (
            norm(&f, NormKind::L1).unwrap(),
            norm(&f, NormKind::L2).unwrap(),
            norm(&f, NormKind::Sup).unwrap(),
        );
        prop_assert!(n1 <= g.area().sqrt() * n2 * (1.0 + 1e-12));
        prop_assert!(n2 <= g.area().sqrt() * ns * (1.0 + 1e-12));
    }

    #[test]
    fn divergence_residual_is_bilinear(gx in -2.0..2.0f64, gy in -2.0..2.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64, l in complex_in_disk(0.6)) {
        let g = grid(32);
        let m = matrix_from_lambda(&ComplexField::constant(g, l), 0.6).unwrap();
        let u1 = RealGradient::constant(g, gx, gy);
        let u2 = RealGradient::of_periodic(&random_band_limited(g, 3, 4).re());
        let mix = RealGradient::new(
            u1.x.zip_map(&u2.x, |p, q| a * p + b * q).unwrap(),
            u1.y.zip_map(&u2.y, |p, q| a * p + b * q).unwrap(),
        ).unwrap();
        let phi = TestFunction::tensor(g, TensorBump { center: [0.1, -0.2], width: [0.8, 0.9] }).unwrap();
        let psi = TestFunction::tensor(g, TensorBump { center: [-0.3, 0.2], width: [0.7, 0.6] }).unwrap();
        let i = |u: &RealGradient, t: &TestFunction| divergence_residual(u, &m, t).unwrap().integral;
        let lhs = i(&mix, &phi);
        let rhs = a * i(&u1, &phi) + b * i(&u2, &phi);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let both = phi.combine(a, &psi, b).unwrap();
        let lhs = i(&u2, &both);
        let rhs = a * i(&u2, &phi) + b * i(&u2, &psi);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn constant_fields_decay_with_order_two(v in 0.1..10.0f64, x in -0.5..0.5f64, y in -0.5..0.5f64) {
        let g = grid(128);
        let probe = zero_decay_probe(&RealField::constant(g, v), Complex64::new(x, y), &geometric_radii(0.8, 4.0, 4), 3).unwrap();
        prop_assert!((probe.order - 2.0).abs() <= 0.1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn reduced_solutions_are_real_linear(seed in 0u64..100, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let g = grid(64);
        let coeffs = random_reduced(g, seed, 0.5).unwrap();
        let o = SolveOptions { tol: 1e-13, ..SolveOptions::default() };
        let s1 = Complex64::new(0.3, 1.0);
        let s2 = Complex64::new(-1.0, 0.4);
        let f1 = solve(&coeffs, s1, &o).unwrap();
        let f2 = solve(&coeffs, s2, &o).unwrap();
        prop_assume!((a * s1 + b * s2).norm() > 0.1);
        let f3 = solve(&coeffs, a * s1 + b * s2, &o).unwrap();
        let mix = f1.combine(a, &f2, b).unwrap();
        let diff = mix.fz().zip_map(f3.fz(), |p, q| p - q).unwrap();
        prop_assert!(l2(&diff) <= 1e-9 * l2(f3.fz()));
    }
}
