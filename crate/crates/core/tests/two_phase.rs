use muskat_core::dirichlet_neumann::{flat_dn_multiplier, DnConfig};
use muskat_core::geometry::*;
use muskat_core::spectral::{SpectralFunction, TorusGrid};
use muskat_core::two_phase::*;

fn config(mu_plus: f64, mu_minus: f64) -> TwoPhaseConfig {
    TwoPhaseConfig::new(mu_plus, mu_minus, 1.0, 2.5, DomainGeometry::infinite(0.1))
}

#[test]
fn flat_interface_has_zero_potentials() {
    let g = TorusGrid::periodic(32).unwrap();
    let eta = SpectralFunction::zeros(&g);
    let cfg = config(1.0, 3.0);
    let sol = solve_interface_potentials(&eta, &cfg).unwrap();
    assert_eq!(sol.f_minus.sup_norm(), 0.0);
    assert_eq!(sol.f_plus.sup_norm(), 0.0);
    for rt in [&sol.rt_via_b, &sol.rt_via_darcy] {
        assert!(rt.values().iter().all(|&v| (v - cfg.density_jump()).abs() < 1e-14));
    }
    let (jb, jv) = reduced_coefficients(&eta, &sol);
    assert_eq!(jb.sup_norm(), 0.0);
    assert_eq!(jv.sup_norm(), 0.0);
}

#[test]
fn small_amplitude_matches_linear_oracle() {
    let g = TorusGrid::periodic(32).unwrap();
    let cfg = config(1.0, 2.0);
    let share = cfg.density_jump() * cfg.mu_minus / (cfg.mu_plus + cfg.mu_minus);
    for a in [1e-2, 1e-3] {
        let eta = SpectralFunction::cosine_modes(&g, &[(2, a)]);
        let sol = solve_interface_potentials(&eta, &cfg).unwrap();
        let lin = eta.scale(share);
        assert!((&sol.f_minus - &lin).l2_norm() <= 10.0 * a * lin.l2_norm());
        // [B] ~ [rho] [mu] / (mu+ + mu-) |D| eta,  [V] ~ [rho] eta'
        let (jb, jv) = reduced_coefficients(&eta, &sol);
        let jb_lin = eta.scale(2.0 * cfg.density_jump() * cfg.viscosity_jump() / (cfg.mu_plus + cfg.mu_minus));
        let jv_lin = eta.derivative().scale(cfg.density_jump());
        assert!((&jb - &jb_lin).l2_norm() <= 10.0 * a * jb_lin.l2_norm() + 1e-3 * a);
        assert!((&jv - &jv_lin).l2_norm() <= 10.0 * a * jv_lin.l2_norm());
    }
}

#[test]
fn finite_depth_linear_oracle() {
    let g = TorusGrid::periodic(32).unwrap();
    let geom = DomainGeometry::flat(1.0, 0.1).with_top(Boundary::FlatDepth(0.5));
    let cfg = TwoPhaseConfig::new(1.5, 1.0, 0.0, 1.0, geom);
    let a = 1e-3;
    let eta = SpectralFunction::cosine_modes(&g, &[(1, a)]);
    let sol = solve_interface_potentials(&eta, &cfg).unwrap();
    let (sp, sm) = (flat_dn_multiplier(1.0, Some(0.5)), flat_dn_multiplier(1.0, Some(1.0)));
    let share = (sp / cfg.mu_plus) / (sp / cfg.mu_plus + sm / cfg.mu_minus);
    let lin = eta.scale(share * cfg.density_jump());
    assert!((&sol.f_minus - &lin).l2_norm() <= 1e-2 * lin.l2_norm());
}

#[test]
fn jump_identity_and_flux_continuity() {
    let g = TorusGrid::periodic(64).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.2 * x.cos() + 0.1 * (2.0 * x).sin());
    let cfg = config(2.0, 0.5);
    let sol = solve_interface_potentials(&eta, &cfg).unwrap();
    let jump = &sol.f_plus - &sol.f_minus;
    for (j, e) in jump.values().iter().zip(eta.values()) {
        assert!((j + cfg.density_jump() * e).abs() <= 1e-15 * (1.0 + e.abs()));
    }
    assert!(sol.f_minus.mean().abs() < 1e-13);
    assert!(sol.certificate.residual <= cfg.solver.tol);
    assert!(sol.flux_residual <= 1e-8, "{}", sol.flux_residual);
}

#[test]
fn equal_viscosities_reduce_darcy_formula() {
    let g = TorusGrid::periodic(32).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.3 * x.sin());
    let cfg = config(1.3, 1.3);
    let sol = solve_interface_potentials(&eta, &cfg).unwrap();
    let expected = eta.derivative().map_values(|q| cfg.density_jump() / (1.0 + q * q).sqrt());
    assert!((&sol.rt_via_darcy - &expected).sup_norm() <= 1e-15);
}

#[test]
fn rayleigh_taylor_formulas_agree_under_refinement() {
    let cfg = config(1.0, 3.0);
    let diffs: Vec<f64> = [(16usize, 16usize), (32, 32), (64, 64)]
        .iter()
        .map(|&(n, m)| {
            let g = TorusGrid::periodic(n).unwrap();
            let eta = SpectralFunction::from_fn(&g, |x| 0.2 * x.cos());
            let mut c = cfg.clone();
            c.dn = DnConfig::default().with_cells(m).with_tol(1e-12);
            let sol = solve_interface_potentials(&eta, &c).unwrap();
            assert!(sol.rt_via_b.min() > 0.0);
            (&sol.rt_via_b - &sol.rt_via_darcy).sup_norm()
        })
        .collect();
    for w in diffs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.0, "{diffs:?}");
    }
    assert!(diffs[2] <= 1e-2 * cfg.density_jump());
}

#[test]
fn parabolic_sign_on_admissible_state() {
    let g = TorusGrid::periodic(64).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.25 * x.cos() + 0.1 * (3.0 * x).cos());
    let cfg = config(0.5, 2.0);
    let sol = solve_interface_potentials(&eta, &cfg).unwrap();
    assert!(sol.rt_via_b.min() > 0.0);
    let (jb, _) = reduced_coefficients(&eta, &sol);
    assert!(jb.map_values(|b| cfg.density_jump() - b).min() > 0.0);
}

#[test]
fn rejects_unstable_stratification() {
    let g = TorusGrid::periodic(16).unwrap();
    let eta = SpectralFunction::zeros(&g);
    let bad = TwoPhaseConfig::new(-1.0, 1.0, 2.0, 1.0, DomainGeometry::infinite(0.1));
    let err = solve_interface_potentials(&eta, &bad).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("mu_plus") && msg.contains("rho_minus"), "{msg}");
}
