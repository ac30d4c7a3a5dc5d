use resolvent_core::endpoint::{m_eps_hat, m_eps_hat_quadrature};
use resolvent_core::family::{mid_box_band_limited, seeded_rng};
use resolvent_core::free_resolvent::{
    apply_free_resolvent, apply_free_resolvent_direct, DirectOptions, SpectralParam,
};
use resolvent_core::grid::lp_norm;
use resolvent_core::make_grid;
use resolvent_core::sphere::{sphere_quadrature, SphereQuadrature};

#[test]
fn closed_form_transform_matches_quadrature_on_grid() {
    for tau in [0.0, 1.0, 2.0, 3.0, 4.0] {
        for eps in [0.125, 0.25, 0.5, 1.0, 2.0] {
            let c = m_eps_hat(tau, eps).unwrap();
            let q = m_eps_hat_quadrature(tau, eps).unwrap();
            let rel = (c.re - q).abs() / c.re.abs();
            assert!(
                rel <= 1e-4,
                "tau {tau} eps {eps}: {} vs {q} ({rel:e})",
                c.re
            );
        }
    }
}

#[test]
fn multiplier_matches_direct_sum() {
    let g = make_grid(16, 16.0).unwrap();
    let z = SpectralParam::upper(1.0, 0.5).unwrap();
    let mut rng = seeded_rng(2024);
    for _ in 0..3 {
        let f = mid_box_band_limited(g, &mut rng);
        let a = apply_free_resolvent(&f, &z).unwrap();
        let b = apply_free_resolvent_direct(&f, &z, DirectOptions::periodic_corrected()).unwrap();
        let rel = lp_norm(&a.sub(&b).unwrap(), 2.0).unwrap() / lp_norm(&b, 2.0).unwrap();
        assert!(rel <= 1e-3, "{rel:e}");
    }
}

#[test]
fn quadrature_integrates_low_degree_harmonics() {
    let q: SphereQuadrature = sphere_quadrature(2048).unwrap();
    let m2 = q.integrate(|w| w[2] * w[2]);
    let m4 = q.integrate(|w| w[0].powi(4));
    assert!((m2 - 1.0 / 3.0).abs() < 1e-3);
    assert!((m4 - 0.2).abs() < 1e-3);
    // area-normalized mean of a zonal exponential: sinh(1)/1
    let e = q.integrate(|w| w[1].exp());
    assert!((e - 1f64.sinh()).abs() < 1e-3);
}
