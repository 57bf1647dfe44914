use std::sync::Arc;

use muskat_core::dirichlet_neumann::DnConfig;
use muskat_core::geometry::*;
use muskat_core::krylov::KrylovSettings;
use muskat_core::paradiff::*;
use muskat_core::spectral::{SpectralFunction, TorusGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn close(a: &SpectralFunction, b: &SpectralFunction, tol: f64) {
    let d = (a - b).sup_norm();
    assert!(d <= tol, "difference {d:e}");
}

fn abs_symbol(g: &Arc<TorusGrid>) -> SymbolField {
    SymbolField::multiplier(g, 1.0, |xi| Complex64::new(xi.abs(), 0.0))
}

#[test]
fn cutoff_constraints() {
    let c = CutoffPair::default();
    assert_eq!(c.psi(0.0), 0.0);
    assert_eq!(c.psi(0.2), 0.0);
    assert_eq!(c.psi(-0.25), 1.0);
    assert_eq!(c.psi(3.0), 1.0);
    let mid = c.psi(0.225);
    assert!(mid > 0.0 && mid < 1.0);
    assert_eq!(c.chi(1.0, 10.0), 1.0);
    assert_eq!(c.chi(-2.0, 10.0), 0.0);
    assert_eq!(c.chi(0.0, 0.0), 1.0);
    let ramp: Vec<f64> = (0..=20).map(|i| c.chi(1.0 + 0.05 * i as f64, 10.0)).collect();
    assert!(ramp.windows(2).all(|w| w[1] <= w[0]));
    assert!(CutoffPair::new(0.2, 0.1).is_err());
}

#[test]
fn lambda_is_abs_xi_in_one_dimension() {
    let g = TorusGrid::periodic(32).unwrap();
    let eta = SpectralFunction::from_fn(&g, |x| 0.7 * x.sin() + 0.2 * (3.0 * x).cos());
    let lam = symbol_lambda(&eta);
    for i in 0..32 {
        for xi in [-5.0, -0.3, 0.0, 2.0, 11.0] {
            assert_eq!(lam.eval(i, xi), Complex64::new(f64::abs(xi), 0.0));
        }
    }
    // the general formula collapses to |xi| for a one-dimensional gradient
    for (q, xi) in [(0.3, 2.0), (-1.7, 5.0), (4.0, -1.0)] {
        assert!((lambda_2d([q, 0.0], [xi, 0.0]) - f64::abs(xi)).abs() < 1e-12);
    }
    assert_eq!(lambda_2d([0.0, 0.0], [3.0, 4.0]), 5.0);
    assert!((lambda_2d([1.0, 0.0], [0.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn symbol_growth_constant() {
    let g = TorusGrid::periodic(16).unwrap();
    let xis: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
    let c = abs_symbol(&g).growth_constant(&xis);
    assert!(c <= 1.0 && c > 0.9);
}

#[test]
fn flat_factorization() {
    let g = TorusGrid::periodic(16).unwrap();
    let map = build_sigma_map(&SpectralFunction::zeros(&g), &DomainGeometry::flat(2.0, 0.1), Side::Lower, 8, ZSpacing::Uniform).unwrap();
    let coeffs = coefficients_from_map(&map).unwrap();
    let (a, big) = factorization_symbols(&coeffs, &g, 4).unwrap();
    for xi in [-3.0, 1.0, 7.0] {
        assert!((a.eval(0, xi) - Complex64::new(-2.0 * f64::abs(xi), 0.0)).norm() < 1e-12);
        assert!((big.eval(5, xi) - Complex64::new(2.0 * f64::abs(xi), 0.0)).norm() < 1e-12);
    }
}

#[test]
fn factorization_identities_on_curved_maps() {
    let g = TorusGrid::periodic(64).unwrap();
    for (amp, geom) in [(0.4, DomainGeometry::flat(1.0, 0.1)), (0.8, DomainGeometry::infinite(0.1))] {
        let eta = SpectralFunction::from_fn(&g, |x| amp * (x.cos() + 0.3 * (2.0 * x + 1.0).sin()));
        let map = build_sigma_map(&eta, &geom, Side::Lower, 16, ZSpacing::Auto).unwrap();
        let coeffs = coefficients_from_map(&map).unwrap();
        for z in [0, 7, 16] {
            let (a, big) = factorization_symbols(&coeffs, &g, z).unwrap();
            let c = factorization_ellipticity(&coeffs, z);
            assert!(c > 0.0);
            for i in 0..64 {
                let al = coeffs.level(&coeffs.alpha, z)[i];
                let be = coeffs.level(&coeffs.beta, z)[i];
                for xi in [-9.0, -1.0, 2.0, 20.0] {
                    let (s, p) = (a.eval(i, xi), big.eval(i, xi));
                    let scale = al * xi * xi;
                    assert!((s + p - Complex64::new(0.0, -be * xi)).norm() <= 1e-10 * scale.max(1.0));
                    assert!((s * p + scale).norm() <= 1e-10 * scale.max(1.0));
                    assert!(-s.re >= c * f64::abs(xi) * (1.0 - 1e-12));
                    // Re(-a) = sqrt(alpha / (1 + q^2)) |xi|
                    let q = map.node_level(&map.drho_dx, z)[i];
                    assert!((-s.re - (al / (1.0 + q * q)).sqrt() * f64::abs(xi)).abs() <= 1e-10 * f64::abs(xi));
                }
            }
        }
    }
}

#[test]
fn identity_symbol_is_high_pass() {
    let g = TorusGrid::periodic(32).unwrap();
    let one = SymbolField::multiplier(&g, 0.0, |_| Complex64::new(1.0, 0.0));
    let u = SpectralFunction::from_fn(&g, |x| 2.0 + (3.0 * x).cos());
    let out = apply_paradiff(&one, &u, &CutoffPair::default());
    close(&out, &SpectralFunction::from_fn(&g, |x| (3.0 * x).cos()), 1e-13);
}

#[test]
fn fourier_multiplier_symbol() {
    let g = TorusGrid::periodic(32).unwrap();
    let u = SpectralFunction::from_fn(&g, |x| (3.0 * x).cos());
    let out = apply_paradiff(&abs_symbol(&g), &u, &CutoffPair::default());
    close(&out, &u.scale(3.0), 1e-13);
}

#[test]
fn paraproduct_against_high_mode() {
    let g = TorusGrid::periodic(64).unwrap();
    let cut = CutoffPair::default();
    let a = SpectralFunction::from_fn(&g, |x| 0.5 + x.cos() + 0.4 * (2.0 * x).sin() + 0.3 * (3.0 * x).cos());
    let m = 20.0;
    let u = SpectralFunction::from_fn(&g, |x| (m * x).cos());
    // T_a u = (chi(D, m) a) u for a single input frequency
    let low = a.map_spectrum(|theta| cut.chi(theta, m));
    let expected = low.pointwise_product(&u);
    close(&paraproduct(&a, &u, &cut), &expected, 1e-12);
    // 2/20 = 0.1 and 3/20 = 0.15 fall on and inside the ramp
    assert!(cut.chi(3.0, m) > 0.0 && cut.chi(3.0, m) < 1.0);
}

#[test]
fn bony_identity_is_exact() {
    let g = TorusGrid::periodic(64).unwrap();
    let cut = CutoffPair::default();
    let a = SpectralFunction::from_fn(&g, |x| x.cos());
    let r = bony_remainder(&a, &a, &cut);
    let sum = &(&paraproduct(&a, &a, &cut) + &paraproduct(&a, &a, &cut)) + &r;
    close(&sum, &SpectralFunction::from_fn(&g, |x| x.cos().powi(2)), 1e-13);
    let a = SpectralFunction::from_fn(&g, |x| x.sin() + 0.2 * (7.0 * x).cos() + 0.1 * (15.0 * x).sin());
    let u = SpectralFunction::from_fn(&g, |x| (4.0 * x).cos() + 0.3 * (11.0 * x).sin());
    let r = bony_remainder(&a, &u, &cut);
    close(&(&(&paraproduct(&a, &u, &cut) + &paraproduct(&u, &a, &cut)) + &r), &a.product(&u), 1e-12);
}

#[test]
fn bony_remainder_of_constant() {
    let g = TorusGrid::periodic(32).unwrap();
    let cut = CutoffPair::default();
    let c = SpectralFunction::constant(&g, 2.5);
    let u = SpectralFunction::from_fn(&g, |x| 1.5 + (3.0 * x).sin());
    let r = bony_remainder(&c, &u, &cut);
    close(&r, &SpectralFunction::constant(&g, 2.5 * 1.5), 1e-12);
}

#[test]
fn bony_remainder_vanishes_for_separated_frequencies() {
    let g = TorusGrid::periodic(128).unwrap();
    let cut = CutoffPair::default();
    let a = SpectralFunction::from_fn(&g, |x| x.cos());
    let u = SpectralFunction::from_fn(&g, |x| (32.0 * x).cos());
    let r = bony_remainder(&a, &u, &cut);
    assert!(r.l2_norm() <= 1e-8 * a.product(&u).l2_norm());
}

#[test]
fn adjoint_of_real_multiplier_is_itself() {
    let g = TorusGrid::periodic(32).unwrap();
    let t = Quantized::new(&abs_symbol(&g), &CutoffPair::default());
    let ta = t.adjoint();
    let u = SpectralFunction::from_fn(&g, |x| x.sin() + (5.0 * x).cos());
    close(&t.apply(&u), &ta.apply(&u), 1e-13);
}

#[test]
fn adjoint_satisfies_inner_product_identity() {
    let g = TorusGrid::periodic(64).unwrap();
    let q = SpectralFunction::from_fn(&g, |x| 0.3 * x.sin());
    let qv = q.values().to_vec();
    let a = SymbolField::new(&g, 1.0, 10.0, move |i, xi| Complex64::new((1.0 + qv[i] * qv[i]).sqrt() * xi.abs(), -qv[i] * xi));
    let t = Quantized::new(&a, &CutoffPair::default());
    let ta = t.adjoint();
    let corpus = random_corpus(&g, 2, 5, 0.3);
    let (u, v) = (corpus[0].coeffs(), corpus[1].coeffs());
    let tu = t.apply_coeffs(u);
    let tav = ta.apply_coeffs(v);
    let lhs: Complex64 = tu.iter().zip(v).map(|(x, y)| x * y.conj()).sum();
    let rhs: Complex64 = u.iter().zip(&tav).map(|(x, y)| x * y.conj()).sum();
    assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
}

#[test]
fn symbolic_calculus_surrogates_do_not_grow() {
    let cut = CutoffPair::default();
    let mut comp = Vec::new();
    let mut adj = Vec::new();
    for n in [128usize, 256] {
        let g = TorusGrid::periodic(n).unwrap();
        let eta = SpectralFunction::from_fn(&g, |x| 0.3 * x.cos());
        let q = eta.derivative();
        let b = SymbolField::function(&q.map_values(|q| q / (1.0 + q * q)), 10.0);
        let lam = symbol_lambda(&eta);
        let qv = q.values().to_vec();
        let a = SymbolField::new(&g, 1.0, 10.0, move |i, xi| Complex64::new((1.0 + qv[i] * qv[i]).sqrt() * xi.abs(), -qv[i] * xi));
        let corpus = random_corpus(&g, 16, 2024, 1.0 / 3.0);
        let (tl, tb, tlb) = (Quantized::new(&lam, &cut), Quantized::new(&b, &cut), Quantized::new(&lam.product(&b), &cut));
        comp.push(rayleigh_surrogate(&corpus, 0.0, -0.1, |u| {
            let x = tl.apply_coeffs(&tb.apply_coeffs(u));
            x.iter().zip(tlb.apply_coeffs(u)).map(|(p, q)| p - q).collect()
        }));
        let (tadj, tbar) = (Quantized::new(&a, &cut).adjoint(), Quantized::new(&a.conj(), &cut));
        adj.push(rayleigh_surrogate(&corpus, 0.0, -0.1, |u| {
            tadj.apply_coeffs(u).iter().zip(tbar.apply_coeffs(u)).map(|(p, q)| p - q).collect()
        }));
    }
    for v in [&comp, &adj] {
        assert!(v[0] > 0.0);
        assert!(v[1] <= v[0], "{v:?}");
    }
}

#[test]
fn corpus_is_reproducible_and_nested() {
    let g1 = TorusGrid::periodic(32).unwrap();
    let g2 = TorusGrid::periodic(64).unwrap();
    let a = random_corpus(&g1, 4, 9, 1.0 / 3.0);
    let b = random_corpus(&g1, 4, 9, 1.0 / 3.0);
    let c = random_corpus(&g2, 4, 9, 1.0 / 3.0);
    assert_eq!(a, b);
    for (u, v) in a.iter().zip(&c) {
        for k in 1..=5i64 {
            let (i, j) = (g1.index_of(k).unwrap(), g2.index_of(k).unwrap());
            assert!((u.coeffs()[i] - v.coeffs()[j]).norm() < 1e-14);
        }
        assert!(u.coeffs()[g1.index_of(6).unwrap()].norm() < 1e-15);
    }
}

#[test]
fn paralinearization_flat_residual() {
    let g = TorusGrid::periodic(64).unwrap();
    let eta = SpectralFunction::zeros(&g);
    let f = SpectralFunction::from_fn(&g, |x| (3.0 * x).cos());
    let cfg = DnConfig::default();
    for geom in [DomainGeometry::infinite(0.1), DomainGeometry::flat(1.0, 0.1)] {
        let r = paralinearize_dn(&eta, &f, &geom, &cfg, PrincipalSymbol::Discrete, &CutoffPair::default()).unwrap();
        assert!(r.residual.l2_norm() <= 10.0 * cfg.solver.tol * r.g.l2_norm());
        // with |xi| itself the flat residual is the discretisation error
        let r = paralinearize_dn(&eta, &f, &geom, &cfg, PrincipalSymbol::Exact, &CutoffPair::default()).unwrap();
        assert!(r.residual.l2_norm() < 1e-2 * r.g.l2_norm());
    }
}

#[test]
fn paralinearization_residual_is_quadratic_in_amplitude() {
    let g = TorusGrid::periodic(32).unwrap();
    let cfg = DnConfig::default().with_tol(1e-13);
    for geom in [DomainGeometry::infinite(0.1), DomainGeometry::flat(1.0, 0.1)] {
        let res: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&a| {
                let eta = SpectralFunction::cosine_modes(&g, &[(1, a)]);
                paralinearize_dn(&eta, &eta, &geom, &cfg, PrincipalSymbol::Discrete, &CutoffPair::default())
                    .unwrap()
                    .residual
                    .l2_norm()
            })
            .collect();
        for w in res.windows(2) {
            assert!((w[0] / w[1]).log10() >= 1.8, "{res:?}");
        }
    }
}

#[test]
fn paralinearization_block_ratios_are_bounded() {
    let mut worst = Vec::new();
    for n in [64usize, 128] {
        let g = TorusGrid::periodic(n).unwrap();
        let eta = SpectralFunction::from_fn(&g, |x| 0.2 * x.cos() + 0.05 * (2.0 * x).sin());
        let f = SpectralFunction::from_fn(&g, |x| 1.0 / (1.2 - x.cos()));
        let r = paralinearize_dn(&eta, &f, &DomainGeometry::infinite(0.1), &DnConfig::default(), PrincipalSymbol::Discrete, &CutoffPair::default()).unwrap();
        let gmax = r.blocks.iter().map(|b| b.g_norm).fold(0.0, f64::max);
        // block -1 only holds the O(dz^2) mean of the discrete G
        let w = r.blocks.iter().filter(|b| b.j >= 0 && b.g_norm > 1e-8 * gmax).map(|b| b.ratio).fold(0.0, f64::max);
        worst.push(w);
    }
    assert!(worst.iter().all(|&w| w < 0.2), "{worst:?}");
    assert!(worst[1] <= 2.0 * worst[0], "{worst:?}");
}

#[test]
fn parabolic_march_matches_exponential() {
    let g = TorusGrid::periodic(32).unwrap();
    let p = abs_symbol(&g);
    let settings = KrylovSettings::new(1e-13, 100);
    for k in [1i64, 3] {
        let w0 = SpectralFunction::cosine_modes(&g, &[(k, 1.0)]);
        let exact = w0.scale((-(k as f64)).exp());
        let errs: Vec<f64> = [20, 40]
            .iter()
            .map(|&steps| {
                let out = parabolic_step(&p, &w0, None, (0.0, 1.0), steps, &CutoffPair::default(), settings).unwrap();
                (&out.w - &exact).l2_norm() / exact.l2_norm()
            })
            .collect();
        assert!(errs[1] < 2e-3, "{errs:?}");
        assert!((errs[0] / errs[1]).log2() > 1.9, "{errs:?}");
    }
    let zero = SpectralFunction::zeros(&g);
    let out = parabolic_step(&p, &zero, None, (0.0, 1.0), 10, &CutoffPair::default(), settings).unwrap();
    assert_eq!(out.w.sup_norm(), 0.0);
}

#[test]
fn parabolic_forcing_and_smoothing() {
    let g = TorusGrid::periodic(64).unwrap();
    let cut = CutoffPair::default();
    let settings = KrylovSettings::new(1e-12, 200);
    // dz w + |D| w = cos(2x), w(0) = 0  =>  w = (1 - e^{-2z}) / 2 cos(2x)
    let p = abs_symbol(&g);
    let force = SpectralFunction::cosine_modes(&g, &[(2, 1.0)]);
    let fz = |_z: f64| force.clone();
    let out = parabolic_step(&p, &SpectralFunction::zeros(&g), Some(&fz), (0.0, 1.0), 80, &cut, settings).unwrap();
    let exact = force.scale(0.5 * (1.0 - (-2.0f64).exp()));
    assert!((&out.w - &exact).l2_norm() < 1e-4 * exact.l2_norm());

    // x-dependent symbol with Re p >= |xi| / 2: 2^j int |P_j w|^2 dz <= |P_j w0|^2
    let c = SpectralFunction::from_fn(&g, |x| 1.0 + 0.5 * x.cos());
    let cv = c.values().to_vec();
    let p = SymbolField::new(&g, 1.0, 10.0, move |i, xi| Complex64::new(cv[i] * xi.abs(), 0.0));
    let w0 = random_corpus(&g, 1, 3, 0.3).remove(0);
    let out = parabolic_step(&p, &w0, None, (0.0, 1.0), 40, &cut, settings).unwrap();
    // per block: 2^j int |P_j w|^2 dz <= |P_j w|^2 / (2c) summed, c = 1/2
    let weighted: f64 = out.block_energy.iter().enumerate().skip(1).map(|(b, e)| 2f64.powi(b as i32 - 1) * e).sum();
    let init = w0.l2_norm().powi(2);
    assert!(weighted <= init, "{weighted:e} vs {init:e}");
    assert!(weighted > 0.1 * init);
    assert!(parabolic_step(&SymbolField::multiplier(&g, 1.0, |_| Complex64::new(0.0, 0.0)), &w0, None, (0.0, 1.0), 4, &cut, settings).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn quantization_is_linear(s in -3.0f64..3.0, t in -3.0f64..3.0, seed in 0u64..1000) {
        let g = TorusGrid::periodic(32).unwrap();
        let cut = CutoffPair::default();
        let fs = random_corpus(&g, 4, seed, 0.3);
        let (u, v, a1, a2) = (&fs[0], &fs[1], &fs[2], &fs[3]);
        let mix = &u.scale(s) + &v.scale(t);
        let lhs = paraproduct(a1, &mix, &cut);
        let rhs = &paraproduct(a1, u, &cut).scale(s) + &paraproduct(a1, v, &cut).scale(t);
        prop_assert!((&lhs - &rhs).sup_norm() < 1e-10);
        let amix = &a1.scale(s) + &a2.scale(t);
        let lhs = paraproduct(&amix, u, &cut);
        let rhs = &paraproduct(a1, u, &cut).scale(s) + &paraproduct(a2, u, &cut).scale(t);
        prop_assert!((&lhs - &rhs).sup_norm() < 1e-10);
    }

    #[test]
    fn bony_identity_holds(seed in 0u64..1000) {
        let g = TorusGrid::periodic(64).unwrap();
        let cut = CutoffPair::default();
        let fs = random_corpus(&g, 2, seed, 1.0 / 3.0);
        let r = bony_remainder(&fs[0], &fs[1], &cut);
        let sum = &(&paraproduct(&fs[0], &fs[1], &cut) + &paraproduct(&fs[1], &fs[0], &cut)) + &r;
        prop_assert!((&sum - &fs[0].product(&fs[1])).sup_norm() < 1e-12 * (1.0 + fs[0].sup_norm() * fs[1].sup_norm()));
    }
}
