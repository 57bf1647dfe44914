use std::f64::consts::SQRT_2;

use muskat_core::geometry::*;
use muskat_core::spectral::{SpectralFunction, TorusGrid};
use muskat_core::Error;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn sigma_map_flat_interface_is_identity_in_z() {
    let g = TorusGrid::periodic(32).unwrap();
    let eta = SpectralFunction::zeros(&g);
    let map = build_sigma_map(&eta, &DomainGeometry::flat(1.0, 0.1), Side::Lower, 16, ZSpacing::Uniform).unwrap();
    for (j, &z) in map.z.iter().enumerate() {
        assert!(map.node_level(&map.rho, j).iter().all(|&r| (r - z).abs() < 1e-15));
        assert!(map.node_level(&map.drho_dz, j).iter().all(|&d| (d - 1.0).abs() < 1e-15));
    }
}

#[test]
fn sigma_map_follows_interface() {
    let g = TorusGrid::periodic(32).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.1 * x.cos());
    let map = build_sigma_map(&eta, &DomainGeometry::flat(1.0, 0.1), Side::Lower, 16, ZSpacing::Auto).unwrap();
    let expect: Vec<f64> = g.points().map(|x| 1.0 + 0.1 * x.cos()).collect();
    for j in 0..=16 {
        assert!(max_abs_diff(map.node_level(&map.drho_dz, j), &expect) < 1e-13);
    }
    // rho(., 0) = eta, rho(., -1) = bottom
    assert!(max_abs_diff(map.node_level(&map.rho, 16), eta.values()) < 1e-15);
    assert!(map.node_level(&map.rho, 0).iter().all(|&r| (r + 1.0).abs() < 1e-13));
    assert!(map.min_drho_dz() >= 1f64.min(0.05));
}

#[test]
fn separation_guard() {
    let g = TorusGrid::periodic(32).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| -0.95 * x.cos());
    let err = build_sigma_map(&eta, &DomainGeometry::flat(1.0, 0.1), Side::Lower, 16, ZSpacing::Uniform).unwrap_err();
    match err {
        Error::Geometry { min_gap, required } => {
            assert!((min_gap - 0.05).abs() < 1e-12);
            assert_eq!(required, 0.1);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(build_sigma_map(&eta, &DomainGeometry::flat(1.0, 0.1), Side::Lower, 4, ZSpacing::Uniform).is_err());
}

#[test]
fn upper_fluid_is_reflected() {
    let g = TorusGrid::periodic(16).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.2 * x.sin());
    let geom = DomainGeometry::flat(1.0, 0.1).with_top(Boundary::FlatDepth(2.0));
    let (iface, level) = geom.lower_form(&eta, Side::Upper);
    assert!(max_abs_diff(iface.values(), eta.scale(-1.0).values()) < 1e-15);
    assert!(level.values().iter().all(|&v| v == -2.0));
    assert!((geom.min_gap(&eta, Side::Upper).unwrap() - 1.8).abs() < 1e-3);
    assert_eq!(DomainGeometry::infinite(0.1).min_gap(&eta, Side::Lower), None);
}

#[test]
fn z_grids_are_increasing() {
    for spacing in [ZSpacing::Uniform, ZSpacing::Stretched(6.0), ZSpacing::Cosine, ZSpacing::Auto] {
        let z = z_nodes(16, spacing, 5.0);
        assert_eq!(z.len(), 17);
        assert_eq!(z[0], -1.0);
        assert_eq!(z[16], 0.0);
        assert!(z.windows(2).all(|w| w[1] > w[0]));
    }
    let s = z_nodes(16, ZSpacing::Stretched(4.0), 1.0);
    assert!(s[16] - s[15] < s[1] - s[0]);
}

#[test]
fn near_surface_map_flat_interface() {
    let g = TorusGrid::periodic(32).unwrap();
    let eta = SpectralFunction::zeros(&g);
    let h = 0.6;
    let map = build_near_surface_map(&eta, h, Some(0.3), 16, ZSpacing::Uniform, None).unwrap();
    for (j, &z) in map.z.iter().enumerate() {
        assert!(map.node_level(&map.rho, j).iter().all(|&r| (r - z * h).abs() < 1e-14));
        assert!(map.node_level(&map.drho_dz, j).iter().all(|&d| (d - h).abs() < 1e-14));
    }
}

#[test]
fn near_surface_map_single_mode_matches_closed_form() {
    let g = TorusGrid::periodic(32).unwrap();
    let (a, h, tau) = (0.05, 0.5, 0.1);
    let eta = SpectralFunction::from_fn(&g, |x| a * x.cos());
    let map = build_near_surface_map(&eta, h, Some(tau), 16, ZSpacing::Uniform, None).unwrap();
    // <D> = sqrt(2) on cos x: differentiate the map by hand.
    let s = SQRT_2 * tau;
    for (j, &z) in map.z.iter().enumerate() {
        let factor = (s * z).exp() * (1.0 + (1.0 + z) * s) - (-(1.0 + z) * s).exp() * (1.0 - z * s);
        let expect: Vec<f64> = g.points().map(|x| h + a * x.cos() * factor).collect();
        assert!(max_abs_diff(map.node_level(&map.drho_dz, j), &expect) < 1e-13);
        let rho_expect: Vec<f64> = g
            .points()
            .map(|x| (1.0 + z) * (s * z).exp() * a * x.cos() - z * ((-(1.0 + z) * s).exp() * a * x.cos() - h))
            .collect();
        assert!(max_abs_diff(map.node_level(&map.rho, j), &rho_expect) < 1e-14);
    }
    // rho(., 0) = eta and rho(., -1) = eta - h exactly
    assert!(max_abs_diff(map.node_level(&map.rho, 16), eta.values()) < 1e-14);
    let base: Vec<f64> = eta.values().iter().map(|v| v - h).collect();
    assert!(max_abs_diff(map.node_level(&map.rho, 0), &base) < 1e-14);
    assert!(map.min_drho_dz() >= 1f64.min(h / 2.0));
}

#[test]
fn near_surface_map_rejects_large_tau() {
    let g = TorusGrid::periodic(64).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.3 * (8.0 * x).cos());
    let err = build_near_surface_map(&eta, 0.2, Some(5.0), 16, ZSpacing::Uniform, None).unwrap_err();
    assert!(matches!(err, Error::MapValidity { threshold, .. } if threshold == 0.1));
    // the default tau is admissible for the same interface
    assert!(build_near_surface_map(&eta, 0.2, None, 16, ZSpacing::Uniform, None).is_ok());
}

#[test]
fn near_surface_map_with_lower_patch_reaches_the_wall() {
    let g = TorusGrid::periodic(32).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.1 * x.cos());
    let bottom = SpectralFunction::constant(&g, -1.0);
    let map = build_near_surface_map(&eta, 0.4, None, 16, ZSpacing::Uniform, Some((&bottom, 8))).unwrap();
    assert_eq!(map.z.len(), 8 + 17);
    assert_eq!(map.z[0], -2.0);
    assert_eq!(map.strip_base, 8);
    assert!(map.node_level(&map.rho, 0).iter().all(|&r| (r + 1.0).abs() < 1e-14));
    let base: Vec<f64> = eta.values().iter().map(|v| v - 0.4).collect();
    assert!(max_abs_diff(map.node_level(&map.rho, 8), &base) < 1e-14);
    // strip thicker than the column
    assert!(build_near_surface_map(&eta, 1.0, None, 16, ZSpacing::Uniform, Some((&bottom, 8))).is_err());
}

#[test]
fn flat_coefficients() {
    let g = TorusGrid::periodic(16).unwrap();
    let eta = SpectralFunction::zeros(&g);
    for depth in [1.0, 2.5] {
        let map = build_sigma_map(&eta, &DomainGeometry::flat(depth, 0.1), Side::Lower, 8, ZSpacing::Auto).unwrap();
        let c = coefficients_from_map(&map).unwrap();
        assert!(c.alpha.iter().all(|&a| (a - depth * depth).abs() < 1e-13));
        assert!(c.beta.iter().all(|&b| b.abs() < 1e-15));
        assert!(c.gamma.iter().all(|&v| v.abs() < 1e-12));
        assert!(c.det_defect() < 1e-12);
    }
}

#[test]
fn single_mode_coefficients_match_hand_formula() {
    let g = TorusGrid::periodic(32).unwrap();
    let a = 0.2;
    let eta = SpectralFunction::from_fn(&g, |x| a * x.cos());
    let map = build_sigma_map(&eta, &DomainGeometry::flat(1.0, 0.1), Side::Lower, 12, ZSpacing::Uniform).unwrap();
    let c = coefficients_from_map(&map).unwrap();
    // rho = eta + z (eta + 1): p = 1 + a cos x, q = -(1 + z) a sin x,
    // dzz rho = 0, dx dz rho = -a sin x, dxx rho = -(1 + z) a cos x.
    for (j, &z) in map.z.iter().enumerate() {
        for (i, x) in g.points().enumerate() {
            let p = 1.0 + a * x.cos();
            let q = -(1.0 + z) * a * x.sin();
            let al = p * p / (1.0 + q * q);
            let be = -2.0 * p * q / (1.0 + q * q);
            let ga = (al * (-(1.0 + z) * a * x.cos()) + be * (-a * x.sin())) / p;
            let k = j * 32 + i;
            assert!((c.alpha[k] - al).abs() < 1e-12);
            assert!((c.beta[k] - be).abs() < 1e-12);
            assert!((c.gamma[k] - ga).abs() < 1e-11, "gamma at {j},{i}");
        }
    }
    assert!(c.det_defect() < 1e-10);
    assert!(c.alpha.iter().all(|&v| v > 0.0));
}

#[test]
fn both_maps_agree_on_flat_interface() {
    let g = TorusGrid::periodic(16).unwrap();
    let eta = SpectralFunction::zeros(&g);
    let depth = 0.8;
    let sigma = build_sigma_map(&eta, &DomainGeometry::flat(depth, 0.1), Side::Lower, 16, ZSpacing::Uniform).unwrap();
    let near = build_near_surface_map(&eta, depth, None, 16, ZSpacing::Uniform, None).unwrap();
    let (a, b) = (coefficients_from_map(&sigma).unwrap(), coefficients_from_map(&near).unwrap());
    assert!(max_abs_diff(&a.alpha, &b.alpha) < 1e-12);
    assert!(max_abs_diff(&a.beta, &b.beta) < 1e-12);
    assert!(max_abs_diff(&a.gamma, &b.gamma) < 1e-12);
}

#[test]
fn determinant_identity_on_rough_interface() {
    let g = TorusGrid::periodic(64).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.3 * x.sin() + 0.1 * (5.0 * x).cos() - 0.05 * (11.0 * x).sin());
    let map = build_near_surface_map(&eta, 0.5, None, 16, ZSpacing::Auto, None).unwrap();
    let c = coefficients_from_map(&map).unwrap();
    assert!(c.det_defect() < 1e-10);
    let sigma = build_sigma_map(&eta, &DomainGeometry::infinite(0.1), Side::Lower, 16, ZSpacing::Auto).unwrap();
    assert!(coefficients_from_map(&sigma).unwrap().det_defect() < 1e-10);
}

#[test]
fn besov_proxy_and_default_tau() {
    let g = TorusGrid::periodic(64).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.1 * (4.0 * x).cos());
    // single block j = 2 with sup norm 0.1
    assert!((besov_proxy(&eta) - 0.4).abs() < 1e-12);
    assert!((default_tau(&eta, 0.5) - 0.5 / (4.0 * 1.4)).abs() < 1e-12);
}
