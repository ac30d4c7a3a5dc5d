use proptest::prelude::*;
use resolvent_core::caps::{make_caps, shell_window};
use resolvent_core::endpoint::m_eps_hat;
use resolvent_core::family::{band_limited, seeded_rng};
use resolvent_core::free_resolvent::{apply_resolvent_at, kernel_value, SpectralParam};
use resolvent_core::grid::{lp_norm, spectral_l2_norm, transform};
use resolvent_core::numerics::{fit_power_law, richardson_unchecked};
use resolvent_core::{make_grid, Direction, Domain, Field, C64};

fn field_from(n: usize, l: f64, raw: &[(f64, f64)]) -> Field {
    let g = make_grid(n, l).unwrap();
    let vals = raw.iter().map(|&(a, b)| C64::new(a, b)).collect();
    Field::from_values(g, vals, Domain::Position).unwrap()
}

fn raw_values(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fft_round_trip(raw in raw_values(8), l in 2.0f64..40.0) {
        let f = field_from(8, l, &raw);
        let back = transform(&transform(&f, Direction::Forward).unwrap(), Direction::Inverse).unwrap();
        let err = back.sub(&f).unwrap().vector_norm() / f.vector_norm();
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn plancherel(raw in raw_values(8), l in 2.0f64..40.0) {
        let f = field_from(8, l, &raw);
        let a = lp_norm(&f, 2.0).unwrap();
        let b = spectral_l2_norm(&f.forward().unwrap()).unwrap() * (2.0 * std::f64::consts::PI).powf(-1.5);
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn lp_norm_is_homogeneous(raw in raw_values(8), c in -5.0f64..5.0, p in 1.0f64..8.0) {
        let f = field_from(8, 8.0, &raw);
        let a = lp_norm(&f.scale_real(c), p).unwrap();
        let b = c.abs() * lp_norm(&f, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn lp_triangle_inequality(a in raw_values(8), b in raw_values(8), p in 1.0f64..6.0) {
        let f = field_from(8, 8.0, &a);
        let g = field_from(8, 8.0, &b);
        let lhs = lp_norm(&f.add(&g).unwrap(), p).unwrap();
        let rhs = lp_norm(&f, p).unwrap() + lp_norm(&g, p).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn resolvent_adjoint_is_conjugate_energy(
        a in raw_values(8), b in raw_values(8), x in 0.2f64..4.0, e in 0.05f64..2.0
    ) {
        let f = field_from(8, 8.0, &a);
        let g = field_from(8, 8.0, &b);
        let z = C64::new(x, e);
        let lhs = apply_resolvent_at(&f, z).unwrap().inner(&g).unwrap();
        let rhs = f.inner(&apply_resolvent_at(&g, z.conj()).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1e-12));
    }

    #[test]
    fn resolvent_commutes_with_conjugation(a in raw_values(8), x in 0.2f64..4.0, e in 0.05f64..2.0) {
        let f = field_from(8, 8.0, &a);
        let z = C64::new(x, e);
        let u = apply_resolvent_at(&f.conj(), z.conj()).unwrap();
        let w = apply_resolvent_at(&f, z).unwrap().conj();
        prop_assert!(u.sub(&w).unwrap().vector_norm() <= 1e-12 * w.vector_norm());
    }

    #[test]
    fn resolvent_bounded_by_distance_to_spectrum(a in raw_values(8), x in 0.2f64..4.0, e in 0.05f64..2.0) {
        let f = field_from(8, 8.0, &a);
        let u = apply_resolvent_at(&f, C64::new(x, e)).unwrap();
        prop_assert!(lp_norm(&u, 2.0).unwrap() <= lp_norm(&f, 2.0).unwrap() / e * (1.0 + 1e-12));
    }

    #[test]
    fn kernel_magnitude_decays(r in 0.1f64..10.0, lambda in 0.1f64..5.0, eps in 0.0f64..3.0) {
        let z = SpectralParam::upper(lambda, eps).unwrap();
        let k = kernel_value(r, &z).unwrap();
        prop_assert!(k.norm() <= 1.0 / (4.0 * std::f64::consts::PI * r) * (1.0 + 1e-12));
        prop_assert!(z.sqrt_z().im >= 0.0);
    }

    #[test]
    fn m_eps_hat_is_real_and_even(tau in -6.0f64..6.0, eps in 0.05f64..3.0) {
        let v = m_eps_hat(tau, eps).unwrap();
        prop_assert!(v.im.abs() <= 1e-12 * v.norm().max(1.0));
        prop_assert_eq!(v, m_eps_hat(-tau, eps).unwrap());
    }

    #[test]
    fn shell_window_in_unit_interval(rad in 0.0f64..3.0, r in 1.0f64..300.0) {
        let w = shell_window(rad, r);
        prop_assert!((0.0..=1.0).contains(&w));
        if (rad - 1.0).abs() * r >= 2.0 {
            prop_assert_eq!(w, 0.0);
        }
    }

    #[test]
    fn power_law_fit_recovers_exponent(c in 0.1f64..10.0, a in -2.0f64..2.0) {
        let s: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|&x| (x, c * x.powf(a))).collect();
        let fit = fit_power_law(&s).unwrap();
        prop_assert!((fit.exponent - a).abs() < 1e-10);
    }

    #[test]
    fn richardson_exact_on_polynomials(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
        let eps = [0.4, 0.2, 0.1];
        let ys: Vec<f64> = eps.iter().map(|e| c0 + c1 * e + c2 * e * e).collect();
        let l = richardson_unchecked(&eps, &ys).unwrap();
        prop_assert!((l - c0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn caps_cover_unit_sphere(x in -1.0f64..1.0, y in -1.0f64..1.0, zc in -1.0f64..1.0) {
        let n = (x * x + y * y + zc * zc).sqrt();
        prop_assume!(n > 1e-3);
        let w = [x / n, y / n, zc / n];
        let caps = make_caps(16.0).unwrap();
        let total: f64 = caps.angular_weights(w).iter().map(|p| p.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(caps.angular_weights(w).len() <= resolvent_core::caps::MAX_OVERLAP);
    }
}

#[test]
fn band_limited_seed_reproducible() {
    let g = make_grid(8, 8.0).unwrap();
    let a = band_limited(g, &mut seeded_rng(11));
    let b = band_limited(g, &mut seeded_rng(11));
    assert_eq!(a.values(), b.values());
}
