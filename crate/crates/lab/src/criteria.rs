//! The twelve acceptance criteria. Each returns the measured numbers with
//! a pass flag; nothing is adjusted to make a criterion pass.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use muskat_core::dirichlet_neumann::{dn_apply, flat_dn_multiplier, DnConfig};
use muskat_core::evolution::{EvolutionConfig, HaltReason, Model};
use muskat_core::geometry::{DomainGeometry, Side};
use muskat_core::paradiff::{paralinearize_dn, random_corpus, rayleigh_surrogate, symbol_lambda, CutoffPair, PrincipalSymbol, Quantized, SymbolField};
use muskat_core::spectral::{SpectralFunction, TorusGrid};
use muskat_core::two_phase::{solve_interface_potentials, TwoPhaseConfig};

use crate::config::{ExperimentConfig, Mode, Phase, Preset, RandomModes};
use crate::presets::{flat_dn_error, loglog_slope, rate_from_factor, scaling_discrepancy, simulate};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn() -> anyhow::Result<(bool, String)>;

pub const CRITERIA: [(usize, &str, Check); 12] = [
    (1, "flat DN oracle and z-convergence", flat_dn),
    (2, "perturbative DN accuracy", perturbative_dn),
    (3, "one-phase linear dispersion", one_phase_dispersion),
    (4, "two-phase linear dispersion", two_phase_dispersion),
    (5, "L2 monotonicity battery", l2_monotonicity),
    (6, "B < 1 with resolution-stable margin", b_below_one),
    (7, "Rayleigh-Taylor cross-check", rt_crosscheck),
    (8, "paralinearization remainder", paralinearization),
    (9, "scaling equivariance", scaling),
    (10, "vanishing regularization", vanishing_regularization),
    (11, "symbolic calculus orders", symbolic_calculus),
    (12, "determinism of preset summaries", determinism),
];

/// Runs the selected criteria (all if `only` is empty) in order.
pub fn run(only: &[usize]) -> Vec<Outcome> {
    CRITERIA
        .iter()
        .filter(|(id, ..)| only.is_empty() || only.contains(id))
        .map(|&(id, title, check)| {
            let start = Instant::now();
            let (pass, detail) = match check() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e:#}")),
            };
            Outcome { id, title, pass, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

pub fn format_outcome(o: &Outcome) -> String {
    format!("[{}] {:>2} {} ({:.1} s): {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.title, o.seconds, o.detail)
}

fn depth_label(d: Option<f64>) -> String {
    d.map_or_else(|| "inf".into(), |h| format!("H={h}"))
}

fn flat_dn() -> anyhow::Result<(bool, String)> {
    let ks = [1i64, 2, 3, 5, 8];
    let ms = [32usize, 64, 128];
    let mut pass = true;
    let mut worst_err: f64 = 0.0;
    let mut worst_order = f64::INFINITY;
    let cases: Vec<(Option<f64>, i64)> = [None, Some(1.0)].iter().flat_map(|&d| ks.iter().map(move |&k| (d, k))).collect();
    let errs: Vec<Vec<f64>> = cases
        .par_iter()
        .map(|&(d, k)| ms.iter().map(|&m| flat_dn_error(256, m, k, d, 1e-12)).collect::<anyhow::Result<Vec<_>>>())
        .collect::<anyhow::Result<_>>()?;
    let mut notes = Vec::new();
    for ((d, k), e) in cases.iter().zip(&errs) {
        let order = -loglog_slope(&ms.map(|m| m as f64), e);
        let ok = e[1] <= 1e-3 && order >= 1.9;
        pass &= ok;
        worst_err = worst_err.max(e[1]);
        worst_order = worst_order.min(order);
        if !ok {
            notes.push(format!("{} k={k}: err(M=64)={:.2e} order={order:.2}", depth_label(*d), e[1]));
        }
    }
    Ok((pass, format!("N=256, max err at M=64 {worst_err:.2e} (<= 1e-3), min order {worst_order:.2} (>= 1.9) {}", notes.join("; "))))
}

/// `|G(eta) eta - G_0 eta|` for `eta = a cos x`, where `G_0` is the exact
/// flat symbol of the same depth.
fn dn_deviation(geom: &DomainGeometry, depth: Option<f64>, cells: usize) -> anyhow::Result<Vec<f64>> {
    let g = TorusGrid::periodic(32)?;
    let cfg = DnConfig::default().with_cells(cells).with_tol(1e-13);
    [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&a| {
            let eta = SpectralFunction::cosine_modes(&g, &[(1, a)]);
            let out = dn_apply(&eta, &eta, geom, Side::Lower, &cfg)?;
            Ok((&out.g - &eta.map_spectrum(|k| flat_dn_multiplier(k, depth))).l2_norm())
        })
        .collect()
}

fn perturbative_dn() -> anyhow::Result<(bool, String)> {
    let amps = [1e-2, 1e-3, 1e-4];
    let fin = dn_deviation(&DomainGeometry::flat(1.0, 0.1), Some(1.0), 128)?;
    let s_fin = loglog_slope(&amps, &fin);
    let pair: Vec<f64> = fin.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
    let pass = (1.8..=2.2).contains(&s_fin) && pair.iter().all(|s| (1.8..=2.2).contains(s));
    let inf = dn_deviation(&DomainGeometry::infinite(0.1), None, 128)?;
    let s_inf = loglog_slope(&amps, &inf);
    Ok((
        pass,
        format!(
            "H=1, N=32, M=128: slope {s_fin:.3} (pairwise {:.3}, {:.3}) in [1.8, 2.2]; infinite depth (quadratic term vanishes for a cosine) slope {s_inf:.2}, informational",
            pair[0], pair[1]
        ),
    ))
}

fn linear_run(cfg: &ExperimentConfig, n: usize, cells: usize, k: i64, theory: f64) -> anyhow::Result<f64> {
    let grid = TorusGrid::periodic(n)?;
    let eta = SpectralFunction::cosine_modes(&grid, &[(k, 1e-3)]);
    let mut ecfg = crate::presets::evolution_config(cfg, cells);
    ecfg.t_end = 1.0 / theory;
    ecfg.dt = 0.02 / theory;
    let (sim, _, _) = simulate("linear", eta, &crate::presets::model(cfg, cells), &ecfg)?;
    anyhow::ensure!(sim.halt == HaltReason::Completed, "run halted: {:?}", sim.halt);
    let (first, last) = (&sim.records[0], sim.records.last().expect("final record"));
    let q = (last.l2_norm / first.l2_norm).powf(1.0 / last.step as f64);
    Ok(rate_from_factor(q, ecfg.dt, ecfg.scheme))
}

fn dispersion_check(cfg: &ExperimentConfig, depths: &[Option<f64>]) -> anyhow::Result<(bool, String)> {
    let ks = [1i64, 2, 3, 5];
    let cases: Vec<(Option<f64>, i64)> = depths.iter().flat_map(|&d| ks.iter().map(move |&k| (d, k))).collect();
    let ratios: Vec<f64> = cases
        .par_iter()
        .map(|&(d, k)| {
            let mut c = cfg.clone();
            c.physics.depth = d;
            let theory = crate::presets::linear_rate(&c, k as f64);
            Ok(linear_run(&c, 32, 64, k, theory)? / theory)
        })
        .collect::<anyhow::Result<_>>()?;
    let worst = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    let list: Vec<String> = cases.iter().zip(&ratios).map(|((d, k), r)| format!("{} k={k}: {r:.5}", depth_label(*d))).collect();
    Ok((worst <= 1e-2, format!("max |ratio - 1| = {worst:.2e} (<= 1e-2); {}", list.join(", "))))
}

fn one_phase_dispersion() -> anyhow::Result<(bool, String)> {
    let mut cfg = ExperimentConfig::new(Preset::Dispersion);
    cfg.physics.kappa = 1.5;
    dispersion_check(&cfg, &[None, Some(1.0)])
}

fn two_phase_dispersion() -> anyhow::Result<(bool, String)> {
    let mut cfg = ExperimentConfig::new(Preset::Dispersion);
    cfg.physics.phase = Phase::Two;
    // [rho] |k| / (mu+ + mu-) is what the general flat formula reduces to
    let (j, m) = (cfg.physics.rho_minus - cfg.physics.rho_plus, cfg.physics.mu_plus + cfg.physics.mu_minus);
    for k in [1.0, 2.0, 3.0, 5.0] {
        let r = crate::presets::linear_rate(&cfg, k);
        anyhow::ensure!((r - j * k / m).abs() < 1e-12 * r, "flat formula mismatch at k={k}");
    }
    dispersion_check(&cfg, &[None])
}

fn modes(list: &[(i64, f64, f64)]) -> Vec<Mode> {
    list.iter().map(|&(k, amplitude, phase)| Mode { k, amplitude, phase }).collect()
}

/// The nonlinear battery: five one-phase and five two-phase runs.
pub fn battery() -> Vec<ExperimentConfig> {
    let base = |phase: Phase, depth: Option<f64>, m: Vec<Mode>| {
        let mut c = ExperimentConfig::new(Preset::Freeplay);
        c.physics.phase = phase;
        c.physics.depth = depth;
        c.initial.modes = m;
        c.time.dt = 0.02;
        c.time.t_end = 1.0;
        c.grid.resolutions = vec![64];
        c.grid.cells = vec![32];
        c
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut v = vec![
        base(Phase::One, None, modes(&[(1, 0.3, 0.0)])),
        base(Phase::One, None, modes(&[(1, 0.2, 0.0), (2, 0.1, half_pi)])),
        base(Phase::One, Some(1.0), modes(&[(1, 0.3, 0.0), (3, 0.05, 0.0)])),
        base(Phase::One, None, modes(&[(1, 0.1, 0.0), (2, 0.1, 0.0), (4, 0.05, half_pi)])),
        base(Phase::One, Some(2.0), modes(&[(1, 0.25, half_pi), (2, 0.1, 0.0)])),
        base(Phase::Two, None, modes(&[(1, 0.3, 0.0)])),
        base(Phase::Two, None, modes(&[(1, 0.2, 0.0), (2, 0.1, half_pi)])),
        base(Phase::Two, Some(1.5), modes(&[(1, 0.3, 0.0), (3, 0.05, 0.0)])),
        base(Phase::Two, None, modes(&[(1, 0.3, 0.0), (3, 0.1, 0.0)])),
        base(Phase::Two, None, modes(&[(1, 0.15, 0.0), (2, 0.1, 0.0), (4, 0.05, 0.0)])),
    ];
    v[6].physics.mu_plus = 2.0;
    v[6].physics.mu_minus = 1.0;
    v[8].physics.mu_plus = 1.0;
    v[8].physics.mu_minus = 1.0;
    v
}

struct BatteryRun {
    monotone: bool,
    worst_increase: f64,
    halt: HaltReason,
    min_margin: Option<f64>,
    steps: usize,
}

fn run_battery_case(cfg: &ExperimentConfig, n: usize) -> anyhow::Result<BatteryRun> {
    let cells = cfg.grid.cells[0];
    let eta = crate::presets::initial_data(cfg, n)?;
    let ecfg = crate::presets::evolution_config(cfg, cells);
    let (sim, _, _) = simulate("battery", eta, &crate::presets::model(cfg, cells), &ecfg)?;
    let worst_increase = sim
        .records
        .windows(2)
        .map(|w| (w[1].l2_norm - w[0].l2_norm) / (1.0 + w[0].l2_norm))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BatteryRun {
        monotone: sim.l2_monotone(crate::L2_SLACK),
        worst_increase,
        halt: sim.halt.clone(),
        min_margin: sim.records.iter().filter_map(|r| r.min_one_minus_b).reduce(f64::min),
        steps: sim.records.last().map_or(0, |r| r.step),
    })
}

fn l2_monotonicity() -> anyhow::Result<(bool, String)> {
    let runs: Vec<BatteryRun> = battery().par_iter().map(|c| run_battery_case(c, c.grid.resolutions[0])).collect::<anyhow::Result<_>>()?;
    let pass = runs.iter().all(|r| r.monotone && r.halt == HaltReason::Completed);
    let worst = runs.iter().map(|r| r.worst_increase).fold(f64::NEG_INFINITY, f64::max);
    let steps: usize = runs.iter().map(|r| r.steps).sum();
    let bad: Vec<String> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.monotone || r.halt != HaltReason::Completed)
        .map(|(i, r)| format!("run {i}: {:?}, worst {:.2e}", r.halt, r.worst_increase))
        .collect();
    Ok((pass, format!("10 runs, {steps} monitored steps, largest relative increase {worst:.2e} (<= 1e-10) {}", bad.join("; "))))
}

fn b_below_one() -> anyhow::Result<(bool, String)> {
    let cases: Vec<(ExperimentConfig, usize)> =
        battery().into_iter().filter(|c| c.physics.phase == Phase::One).flat_map(|c| [(c.clone(), 32), (c, 64)]).collect();
    let runs: Vec<BatteryRun> = cases.par_iter().map(|(c, n)| run_battery_case(c, *n)).collect::<anyhow::Result<_>>()?;
    let mut pass = true;
    let mut notes = Vec::new();
    for (i, pair) in runs.chunks(2).enumerate() {
        let (a, b) = (pair[0].min_margin.unwrap_or(f64::NAN), pair[1].min_margin.unwrap_or(f64::NAN));
        let stable = (a - b).abs() <= 0.05 * b;
        pass &= a > 0.0 && b > 0.0 && stable;
        notes.push(format!("run {i}: {a:.4}/{b:.4}"));
    }
    Ok((pass, format!("min(1 - max B) at N=32/64, must be > 0 and agree within 5%: {}", notes.join(", "))))
}

fn rt_crosscheck() -> anyhow::Result<(bool, String)> {
    let mut tp = TwoPhaseConfig::new(1.0, 3.0, 1.0, 2.5, DomainGeometry::infinite(0.1));
    tp.solver.tol = 1e-11;
    let ladder = [(64usize, 64usize), (128, 128), (256, 256)];
    let diffs: Vec<f64> = ladder
        .par_iter()
        .map(|&(n, m)| {
            let g = TorusGrid::periodic(n)?;
            let eta = SpectralFunction::from_fn(&g, |x| 0.2 * x.cos());
            let mut c = tp.clone();
            c.dn = DnConfig::default().with_cells(m).with_tol(1e-13);
            let sol = solve_interface_potentials(&eta, &c)?;
            Ok((&sol.rt_via_b - &sol.rt_via_darcy).sup_norm())
        })
        .collect::<anyhow::Result<_>>()?;
    let orders: Vec<f64> = diffs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let last = diffs[2] / tp.density_jump();
    let pass = orders.iter().all(|&o| o >= 1.0) && last <= 1e-2;
    Ok((
        pass,
        format!(
            "eta=0.2cos x, mu+=1, mu-=3, (N,M) = (64,64),(128,128),(256,256): sup diff {:.2e}, {:.2e}, {:.2e}; orders {:.2}, {:.2} (>= 1); at N=256 {last:.2e} [rho] (<= 1e-2)",
            diffs[0], diffs[1], diffs[2], orders[0], orders[1]
        ),
    ))
}

fn paralinearization() -> anyhow::Result<(bool, String)> {
    let cut = CutoffPair::default();
    // flat interface
    let g = TorusGrid::periodic(64)?;
    let cfg = DnConfig::default();
    let mut flat_ok = true;
    let mut flat_worst: f64 = 0.0;
    for geom in [DomainGeometry::infinite(0.1), DomainGeometry::flat(1.0, 0.1)] {
        let f = SpectralFunction::from_fn(&g, |x| (3.0 * x).cos());
        let r = paralinearize_dn(&SpectralFunction::zeros(&g), &f, &geom, &cfg, PrincipalSymbol::Discrete, &cut)?;
        let rel = r.residual.l2_norm() / r.g.l2_norm();
        flat_worst = flat_worst.max(rel);
        flat_ok &= rel <= 10.0 * cfg.solver.tol;
    }
    // amplitude scaling with criterion 2's data
    let g32 = TorusGrid::periodic(32)?;
    let tight = DnConfig::default().with_tol(1e-13);
    let amps = [1e-2, 1e-3, 1e-4];
    let mut slopes = Vec::new();
    for geom in [DomainGeometry::infinite(0.1), DomainGeometry::flat(1.0, 0.1)] {
        let res: Vec<f64> = amps
            .iter()
            .map(|&a| {
                let eta = SpectralFunction::cosine_modes(&g32, &[(1, a)]);
                Ok(paralinearize_dn(&eta, &eta, &geom, &tight, PrincipalSymbol::Discrete, &cut)?.residual.l2_norm())
            })
            .collect::<anyhow::Result<_>>()?;
        slopes.push(loglog_slope(&amps, &res));
    }
    // dyadic ratios over the resolved blocks
    let worst: Vec<f64> = [64usize, 128, 256]
        .par_iter()
        .map(|&n| {
            let g = TorusGrid::periodic(n)?;
            let eta = SpectralFunction::from_fn(&g, |x| 0.2 * x.cos() + 0.05 * (2.0 * x).sin());
            let f = SpectralFunction::from_fn(&g, |x| 1.0 / (1.2 - x.cos()));
            let r = paralinearize_dn(&eta, &f, &DomainGeometry::infinite(0.1), &DnConfig::default(), PrincipalSymbol::Discrete, &cut)?;
            let gmax = r.blocks.iter().map(|b| b.g_norm).fold(0.0, f64::max);
            // block -1 is k = 0 alone: the mean of the discrete G, which the main term cannot see
            Ok(r.blocks.iter().filter(|b| b.j >= 0 && b.g_norm > 1e-8 * gmax).map(|b| b.ratio).fold(0.0, f64::max))
        })
        .collect::<anyhow::Result<_>>()?;
    let bounded = worst.iter().all(|&w| w <= 2.0 * worst[0]);
    let pass = flat_ok && slopes.iter().all(|&s| s >= 1.8) && bounded;
    Ok((
        pass,
        format!(
            "flat residual {flat_worst:.2e} (<= 1e-9); amplitude slopes inf {:.2}, H=1 {:.2} (>= 1.8); max r_j (j >= 0) at N=64/128/256: {:.3}/{:.3}/{:.3} (bounded by 2x the N=64 value)",
            slopes[0], slopes[1], worst[0], worst[1], worst[2]
        ),
    ))
}

fn scaling() -> anyhow::Result<(bool, String)> {
    let g = TorusGrid::periodic(256)?;
    let eta = SpectralFunction::from_fn(&g, |x| 0.15 * x.cos() + 0.05 * (2.0 * x).sin());
    let ecfg = EvolutionConfig { dt: 0.01, t_end: 0.5, ..Default::default() };
    let cases = [DomainGeometry::infinite(0.1), DomainGeometry::flat(1.0, 0.1)];
    let d: Vec<f64> = cases
        .par_iter()
        .map(|geom| Ok(scaling_discrepancy(&eta, 2.0, &Model::OnePhase(geom.clone()), &ecfg)?.0))
        .collect::<anyhow::Result<_>>()?;
    Ok((
        d[0] <= 1e-2,
        format!("N=256, lambda=2, t in [0,0.5]: infinite depth {:.2e} (<= 1e-2); finite depth H=1 {:.2e} (symmetry broken, informational)", d[0], d[1]),
    ))
}

fn vanishing_regularization() -> anyhow::Result<(bool, String)> {
    let g = TorusGrid::periodic(32)?;
    let eta = SpectralFunction::from_fn(&g, |x| 0.2 * x.cos() + 0.1 * (2.0 * x).cos());
    let model = Model::OnePhase(DomainGeometry::infinite(0.1));
    let eps = [0.0, 1e-2, 1e-3, 1e-4];
    let runs: Vec<Vec<SpectralFunction>> = eps
        .par_iter()
        .map(|&e| {
            let c = EvolutionConfig { dt: 0.01, t_end: 0.5, epsilon: e, dn: DnConfig::default().with_cells(32).with_tol(1e-12), ..Default::default() };
            Ok(simulate("eps", eta.clone(), &model, &c)?.2)
        })
        .collect::<anyhow::Result<_>>()?;
    let d: Vec<f64> = runs[1..]
        .iter()
        .map(|r| r.iter().zip(&runs[0]).map(|(a, b)| (a - b).l2_norm()).fold(0.0, f64::max))
        .collect();
    let monotone = d.windows(2).all(|w| w[1] < w[0]);
    let slope = loglog_slope(&eps[1..], &d);
    Ok((
        monotone && slope >= 0.8,
        format!("sup_t |eta_eps - eta_0| for eps = 1e-2, 1e-3, 1e-4: {:.2e}, {:.2e}, {:.2e}; slope {slope:.3} (>= 0.8)", d[0], d[1], d[2]),
    ))
}

fn surrogates(n: usize) -> anyhow::Result<(f64, f64)> {
    let cut = CutoffPair::default();
    let g: Arc<TorusGrid> = TorusGrid::periodic(n)?;
    let eta = SpectralFunction::from_fn(&g, |x| 0.3 * x.cos());
    let q = eta.derivative();
    let b = SymbolField::function(&q.map_values(|q| q / (1.0 + q * q)), 10.0);
    let lam = symbol_lambda(&eta);
    let qv = q.values().to_vec();
    let a = SymbolField::new(&g, 1.0, 10.0, move |i, xi| Complex64::new((1.0 + qv[i] * qv[i]).sqrt() * xi.abs(), -qv[i] * xi));
    let corpus = random_corpus(&g, 64, 2024, 1.0 / 3.0);
    let (tl, tb, tlb) = (Quantized::new(&lam, &cut), Quantized::new(&b, &cut), Quantized::new(&lam.product(&b), &cut));
    let comp = rayleigh_surrogate(&corpus, 0.0, -0.1, |u| {
        let x = tl.apply_coeffs(&tb.apply_coeffs(u));
        x.iter().zip(tlb.apply_coeffs(u)).map(|(p, q)| p - q).collect()
    });
    let (tadj, tbar) = (Quantized::new(&a, &cut).adjoint(), Quantized::new(&a.conj(), &cut));
    let adj = rayleigh_surrogate(&corpus, 0.0, -0.1, |u| tadj.apply_coeffs(u).iter().zip(tbar.apply_coeffs(u)).map(|(p, q)| p - q).collect());
    Ok((comp, adj))
}

fn symbolic_calculus() -> anyhow::Result<(bool, String)> {
    let ns = [128usize, 256, 512];
    let s: Vec<(f64, f64)> = ns.par_iter().map(|&n| surrogates(n)).collect::<anyhow::Result<_>>()?;
    // "does not grow": each doubling may not increase the surrogate beyond roundoff
    let grows = |v: &[f64]| v.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-9));
    let comp: Vec<f64> = s.iter().map(|p| p.0).collect();
    let adj: Vec<f64> = s.iter().map(|p| p.1).collect();
    Ok((
        !grows(&comp) && !grows(&adj) && comp[0] > 0.0 && adj[0] > 0.0,
        format!(
            "64-function corpus, L2 -> H^-0.1, N=128/256/512: composition {:.3e}/{:.3e}/{:.3e}, adjoint {:.3e}/{:.3e}/{:.3e}",
            comp[0], comp[1], comp[2], adj[0], adj[1], adj[2]
        ),
    ))
}

fn determinism() -> anyhow::Result<(bool, String)> {
    let mut presets = Vec::new();
    let mut d = ExperimentConfig::new(Preset::Dispersion);
    d.grid.resolutions = vec![16, 32];
    d.study.wavenumbers = vec![1, 3];
    presets.push(d);
    let mut f = ExperimentConfig::new(Preset::Freeplay);
    f.seed = 17;
    f.grid.resolutions = vec![16, 32];
    f.grid.cells = vec![16];
    f.time.t_end = 0.2;
    f.initial.random = Some(RandomModes { modes: 4, amplitude: 0.2 });
    presets.push(f);
    let mut r = ExperimentConfig::new(Preset::RtCrosscheck);
    r.grid.resolutions = vec![16, 32];
    r.grid.cells = vec![16, 32];
    r.initial.modes = vec![Mode { k: 1, amplitude: 0.2, phase: 0.0 }];
    presets.push(r);
    let tmp = std::env::temp_dir().join(format!("muskat-determinism-{}", std::process::id()));
    let mut pass = true;
    let mut notes = Vec::new();
    for cfg in &presets {
        let mut bytes = Vec::new();
        for (i, threads) in [1usize, 4, 4].iter().enumerate() {
            let dir = tmp.join(format!("{}-{i}", cfg.preset));
            crate::run_to_dir(cfg, &dir, *threads)?;
            bytes.push(std::fs::read(dir.join("summary.csv"))?);
        }
        let same = bytes.windows(2).all(|w| w[0] == w[1]);
        pass &= same;
        notes.push(format!("{}: {}", cfg.preset, if same { "identical" } else { "DIFFERENT" }));
    }
    let _ = std::fs::remove_dir_all(&tmp);
    Ok((pass, format!("summary.csv over 3 runs (1, 4, 4 threads): {}", notes.join(", "))))
}
