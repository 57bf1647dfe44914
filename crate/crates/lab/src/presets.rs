//! The experiment presets. Each returns [`Artifacts`]; ladder points run on
//! the current rayon pool and are collected in ladder order.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context};
use muskat_core::dirichlet_neumann::{dn_apply, flat_dn_multiplier, DnConfig};
use muskat_core::evolution::{run_simulation_observed, EvolutionConfig, HaltReason, InterfaceState, Model, Scheme, Simulation};
use muskat_core::geometry::{Boundary, DomainGeometry, Side};
use muskat_core::krylov::KrylovSettings;
use muskat_core::paradiff::{paralinearize_dn, random_corpus, CutoffPair, PrincipalSymbol};
use muskat_core::spectral::{SpectralFunction, TorusGrid};
use muskat_core::two_phase::{solve_interface_potentials, TwoPhaseConfig};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Phase, Preset};
use crate::output::{halt_label, num, opt, Artifacts, MonitorLine, Plot, Series, Table};

pub fn run_preset(cfg: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    cfg.validate()?;
    match cfg.preset {
        Preset::Dispersion => dispersion(cfg),
        Preset::Scaling => scaling(cfg),
        Preset::Convergence => convergence(cfg),
        Preset::ParalinResidual => paralin_residual(cfg),
        Preset::RtCrosscheck => rt_crosscheck(cfg),
        Preset::Freeplay => freeplay(cfg),
    }
}

pub fn dn_config(cfg: &ExperimentConfig, cells: usize) -> DnConfig {
    let mut d = DnConfig::default().with_cells(cells).with_tol(cfg.tolerances.dn);
    d.solver.max_iter = cfg.tolerances.dn_max_iter;
    d
}

pub fn geometry(cfg: &ExperimentConfig) -> DomainGeometry {
    let p = &cfg.physics;
    let mut g = match p.depth {
        Some(d) => DomainGeometry::flat(d, p.h),
        None => DomainGeometry::infinite(p.h),
    };
    if let Some(u) = p.upper_depth {
        g = g.with_top(Boundary::FlatDepth(u));
    }
    g
}

pub fn two_phase_config(cfg: &ExperimentConfig, cells: usize) -> TwoPhaseConfig {
    let p = &cfg.physics;
    let mut tp = TwoPhaseConfig::new(p.mu_plus, p.mu_minus, p.rho_plus, p.rho_minus, geometry(cfg));
    tp.dn = dn_config(cfg, cells);
    tp.solver = KrylovSettings::new(cfg.tolerances.outer.min(1e-9), cfg.tolerances.outer_max_iter);
    tp
}

pub fn model(cfg: &ExperimentConfig, cells: usize) -> Model {
    match cfg.physics.phase {
        Phase::One => Model::OnePhase(geometry(cfg)),
        Phase::Two => Model::TwoPhase(two_phase_config(cfg, cells)),
    }
}

pub fn evolution_config(cfg: &ExperimentConfig, cells: usize) -> EvolutionConfig {
    let t = &cfg.time;
    EvolutionConfig {
        kappa: cfg.physics.kappa,
        dt: t.dt,
        t_end: t.t_end,
        scheme: t.scheme.into(),
        epsilon: t.epsilon,
        monitor_every: t.monitor_every,
        sobolev_index: t.sobolev_index,
        dn: dn_config(cfg, cells),
        solver: KrylovSettings::new(cfg.tolerances.outer, cfg.tolerances.outer_max_iter),
        ..Default::default()
    }
}

/// Samples of a `x,eta` CSV, resampled by trigonometric interpolation.
fn file_data(path: &Path, grid: &Arc<TorusGrid>) -> anyhow::Result<SpectralFunction> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut v = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let eta: f64 = rec.get(1).with_context(|| format!("{}: row {} has no eta column", path.display(), i + 2))?.trim().parse()?;
        v.push(eta);
    }
    if !v.len().is_power_of_two() || v.len() < 4 {
        bail!("{}: {} samples, need a power of two", path.display(), v.len());
    }
    let src = TorusGrid::new(v.len(), grid.period())?;
    let f = SpectralFunction::from_values(&src, v)?;
    let half = (src.len().min(grid.len()) / 2) as i64;
    let mut c = vec![Complex64::new(0.0, 0.0); grid.len()];
    for m in -(half - 1)..half {
        if let (Some(i), Some(j)) = (src.index_of(m), grid.index_of(m)) {
            c[j] = f.coeffs()[i];
        }
    }
    Ok(SpectralFunction::from_coeffs(grid, &c))
}

/// The initial interface of `cfg` on an `n`-point grid.
pub fn initial_data(cfg: &ExperimentConfig, n: usize) -> anyhow::Result<SpectralFunction> {
    let grid = TorusGrid::periodic(n)?;
    let modes = cfg.initial.modes.clone();
    let mut eta = SpectralFunction::from_fn(&grid, |x| modes.iter().map(|m| m.amplitude * (m.k as f64 * x - m.phase).cos()).sum());
    if let Some(path) = &cfg.initial.file {
        eta = &eta + &file_data(path, &grid)?;
    }
    if let Some(r) = &cfg.initial.random {
        let band = (r.modes as f64 + 0.5) / (n / 2) as f64;
        let u = random_corpus(&grid, 1, cfg.seed, band).remove(0);
        let s = u.sup_norm();
        if s > 0.0 {
            eta = &eta + &u.scale(r.amplitude / s);
        }
    }
    Ok(eta)
}

/// Runs one evolution, collecting monitor lines and the recorded states.
pub fn simulate(label: &str, eta: SpectralFunction, model: &Model, ecfg: &EvolutionConfig) -> anyhow::Result<(Simulation, Vec<MonitorLine>, Vec<SpectralFunction>)> {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut states = Vec::new();
    let sim = run_simulation_observed(InterfaceState::new(eta), model, ecfg, |r, e| {
        lines.push(MonitorLine::new(label, r, start.elapsed().as_secs_f64() * 1e3));
        states.push(e.clone());
    })
    .with_context(|| format!("run {label}"))?;
    Ok((sim, lines, states))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Linear decay rate of mode `k` predicted by the flat symbols.
pub fn linear_rate(cfg: &ExperimentConfig, k: f64) -> f64 {
    let p = &cfg.physics;
    match p.phase {
        Phase::One => p.kappa * flat_dn_multiplier(k, p.depth),
        Phase::Two => {
            let lo = flat_dn_multiplier(k, p.depth) / p.mu_minus;
            let up = flat_dn_multiplier(k, p.upper_depth) / p.mu_plus;
            (p.rho_minus - p.rho_plus) * lo * up / (lo + up)
        }
    }
}

/// Per-step amplitude factor `q` converted to a rate: `1/(1 + dt s)` for
/// the implicit scheme, `exp(-dt s)` for RK4.
pub fn rate_from_factor(q: f64, dt: f64, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::SemiImplicit => (1.0 / q - 1.0) / dt,
        Scheme::ExplicitRk4 => -q.ln() / dt,
    }
}

fn dispersion(cfg: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let cells = cfg.grid.cells[0];
    let points: Vec<(usize, i64)> = cfg.grid.resolutions.iter().flat_map(|&n| cfg.study.wavenumbers.iter().map(move |&k| (n, k))).collect();
    let results: Vec<_> = points
        .par_iter()
        .map(|&(n, k)| -> anyhow::Result<_> {
            let grid = TorusGrid::periodic(n)?;
            let theory = linear_rate(cfg, k as f64);
            let eta = SpectralFunction::cosine_modes(&grid, &[(k, cfg.study.linear_amplitude)]);
            let mut ecfg = evolution_config(cfg, cells);
            ecfg.t_end = 1.0 / theory;
            let steps = (ecfg.t_end / ecfg.dt).ceil().max(1.0);
            ecfg.dt = ecfg.t_end / steps;
            let label = format!("n={n},k={k}");
            let (sim, lines, _) = simulate(&label, eta, &model(cfg, cells), &ecfg)?;
            let (first, last) = (&sim.records[0], sim.records.last().expect("final record"));
            let q = (last.l2_norm / first.l2_norm).powf(1.0 / last.step as f64);
            let measured = rate_from_factor(q, ecfg.dt, ecfg.scheme);
            let curve: Vec<(f64, f64)> = sim.records.iter().map(|r| (r.t, r.l2_norm / first.l2_norm)).collect();
            Ok((n, k, theory, measured, curve, lines, halt_label(&sim.halt)))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut summary = Table::new(&["n", "cells", "k", "theory_rate", "measured_rate", "ratio", "halt"]);
    let mut art = Artifacts::default();
    let mut curves = Vec::new();
    for (n, k, theory, measured, curve, lines, halt) in results {
        summary.push(vec![n.to_string(), cells.to_string(), k.to_string(), num(theory), num(measured), num(measured / theory), halt]);
        if n == cfg.grid.resolutions[0] {
            let dt_theory: Vec<(f64, f64)> = curve.iter().map(|&(t, _)| (t, (-theory * t).exp())).collect();
            curves.push(Series::new(format!("k={k}"), curve));
            curves.push(Series::new(format!("e^(-st), k={k}"), dt_theory).dashed());
        }
        art.monitors.extend(lines);
    }
    art.summary = summary;
    art.plots.push(Plot {
        name: "decay".into(),
        title: "Modal decay".into(),
        x_label: "t".into(),
        y_label: "|eta(t)| / |eta(0)|".into(),
        log_x: false,
        log_y: true,
        series: curves,
    });
    Ok(art)
}

fn interpolate(f: &SpectralFunction, x: f64) -> f64 {
    f.grid().wavenumbers().iter().zip(f.coeffs()).map(|(&k, c)| (c * Complex64::new(0.0, k * x).exp()).re).sum()
}

/// `lambda^-1 f(lambda x)` for an integer `lambda`, exactly in Fourier.
pub fn dilate(f: &SpectralFunction, lambda: f64) -> SpectralFunction {
    let grid = f.grid();
    SpectralFunction::from_fn(grid, |x| interpolate(f, lambda * x) / lambda)
}

/// Largest matched-time relative discrepancy between the run from `eta`
/// and the run from its dilation, plus the curve.
pub fn scaling_discrepancy(eta: &SpectralFunction, lambda: f64, model: &Model, ecfg: &EvolutionConfig) -> anyhow::Result<(f64, Vec<(f64, f64)>)> {
    let (sa, _, a) = simulate("base", eta.clone(), model, ecfg)?;
    let mut scaled = ecfg.clone();
    scaled.dt = ecfg.dt / lambda;
    scaled.t_end = ecfg.t_end / lambda;
    let (sb, _, b) = simulate("dilated", dilate(eta, lambda), model, &scaled)?;
    for (name, s) in [("base", &sa), ("dilated", &sb)] {
        if s.halt != HaltReason::Completed {
            bail!("{name} run halted early: {}", halt_label(&s.halt));
        }
    }
    if a.len() != b.len() {
        bail!("scaling runs recorded {} and {} states", a.len(), b.len());
    }
    let mut worst: f64 = 0.0;
    let mut curve = Vec::new();
    for ((u, v), r) in a.iter().zip(&b).zip(&sb.records) {
        let target = dilate(u, lambda);
        let d = (&target - v).l2_norm() / target.l2_norm().max(f64::MIN_POSITIVE);
        worst = worst.max(d);
        curve.push((r.t * lambda, d));
    }
    Ok((worst, curve))
}

fn scaling(cfg: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let cells = cfg.grid.cells[0];
    let lambda = cfg.study.lambda;
    let results: Vec<_> = cfg
        .grid
        .resolutions
        .par_iter()
        .map(|&n| -> anyhow::Result<_> {
            let eta = initial_data(cfg, n)?;
            let (d, curve) = scaling_discrepancy(&eta, lambda, &model(cfg, cells), &evolution_config(cfg, cells))?;
            Ok((n, d, curve))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut summary = Table::new(&["n", "cells", "lambda", "depth", "max_relative_discrepancy"]);
    let depth = cfg.physics.depth.map_or_else(|| "infinite".to_owned(), num);
    let mut series = Vec::new();
    for (n, d, curve) in results {
        summary.push(vec![n.to_string(), cells.to_string(), num(lambda), depth.clone(), num(d)]);
        series.push(Series::new(format!("N={n}"), curve));
    }
    Ok(Artifacts {
        summary,
        plots: vec![Plot {
            name: "scaling".into(),
            title: format!("Dilation by {lambda}: matched-time discrepancy"),
            x_label: "t".into(),
            y_label: "relative L2 discrepancy".into(),
            log_x: false,
            log_y: true,
            series,
        }],
        ..Default::default()
    })
}

/// Relative L2 error of the flat DN operator on `cos(k x)`.
pub fn flat_dn_error(n: usize, cells: usize, k: i64, depth: Option<f64>, tol: f64) -> anyhow::Result<f64> {
    let grid = TorusGrid::periodic(n)?;
    let geom = match depth {
        Some(d) => DomainGeometry::flat(d, 0.1),
        None => DomainGeometry::infinite(0.1),
    };
    let f = SpectralFunction::cosine_modes(&grid, &[(k, 1.0)]);
    let out = dn_apply(&SpectralFunction::zeros(&grid), &f, &geom, Side::Lower, &DnConfig::default().with_cells(cells).with_tol(tol))?;
    let exact = f.scale(flat_dn_multiplier(k as f64, depth));
    Ok((&out.g - &exact).l2_norm() / exact.l2_norm())
}

fn convergence(cfg: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let n = cfg.grid.resolutions[0];
    let depth = cfg.physics.depth;
    let points: Vec<(i64, usize)> = cfg.study.wavenumbers.iter().flat_map(|&k| cfg.grid.cells.iter().map(move |&m| (k, m))).collect();
    let errors: Vec<f64> = points.par_iter().map(|&(k, m)| flat_dn_error(n, m, k, depth, cfg.tolerances.dn)).collect::<anyhow::Result<_>>()?;
    let mut summary = Table::new(&["n", "k", "cells", "relative_error", "fitted_slope"]);
    let mut series = Vec::new();
    let nm = cfg.grid.cells.len();
    for (i, &k) in cfg.study.wavenumbers.iter().enumerate() {
        let e = &errors[i * nm..(i + 1) * nm];
        let m: Vec<f64> = cfg.grid.cells.iter().map(|&c| c as f64).collect();
        let slope = if nm > 1 { -loglog_slope(&m, e) } else { f64::NAN };
        for (j, &c) in cfg.grid.cells.iter().enumerate() {
            summary.push(vec![n.to_string(), k.to_string(), c.to_string(), num(e[j]), num(slope)]);
        }
        series.push(Series::new(format!("k={k}"), m.iter().copied().zip(e.iter().copied()).collect()));
    }
    Ok(Artifacts {
        summary,
        plots: vec![Plot {
            name: "convergence".into(),
            title: "Flat DN oracle under z refinement".into(),
            x_label: "M".into(),
            y_label: "relative L2 error".into(),
            log_x: true,
            log_y: true,
            series,
        }],
        ..Default::default()
    })
}

fn paralin_residual(cfg: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let n = cfg.grid.resolutions[0];
    let cells = cfg.grid.cells[0];
    let grid = TorusGrid::periodic(n)?;
    let geom = geometry(cfg);
    let dn = dn_config(cfg, cells);
    let cut = CutoffPair::default();
    let amps = cfg.study.amplitudes.clone();
    let res: Vec<(f64, f64)> = amps
        .par_iter()
        .map(|&a| -> anyhow::Result<_> {
            let eta = SpectralFunction::cosine_modes(&grid, &[(1, a)]);
            let r = paralinearize_dn(&eta, &eta, &geom, &dn, PrincipalSymbol::Discrete, &cut)?;
            Ok((r.residual.l2_norm(), r.g.l2_norm()))
        })
        .collect::<anyhow::Result<_>>()?;
    let norms: Vec<f64> = res.iter().map(|r| r.0).collect();
    let slope = if amps.len() > 1 { loglog_slope(&amps, &norms) } else { f64::NAN };
    let mut summary = Table::new(&["n", "cells", "amplitude", "residual_l2", "relative_residual", "fitted_slope"]);
    for (a, (r, g)) in amps.iter().zip(&res) {
        summary.push(vec![n.to_string(), cells.to_string(), num(*a), num(*r), num(r / g), num(slope)]);
    }
    let mut plots = vec![Plot {
        name: "amplitude".into(),
        title: "Paralinearization remainder vs amplitude".into(),
        x_label: "a".into(),
        y_label: "|R|".into(),
        log_x: true,
        log_y: true,
        series: vec![Series::new("residual", amps.iter().copied().zip(norms.iter().copied()).collect())],
    }];
    // dyadic profile for the configured initial data, or a default profile
    let eta = if cfg.initial.modes.is_empty() && cfg.initial.file.is_none() && cfg.initial.random.is_none() {
        SpectralFunction::from_fn(&grid, |x| 0.2 * x.cos() + 0.05 * (2.0 * x).sin())
    } else {
        initial_data(cfg, n)?
    };
    let f = SpectralFunction::from_fn(&grid, |x| 1.0 / (1.2 - x.cos()));
    let r = paralinearize_dn(&eta, &f, &geom, &dn, PrincipalSymbol::Discrete, &cut)?;
    plots.push(Plot {
        name: "blocks".into(),
        title: "Dyadic ratios |P_j R| / (2^(-j/2) |P_j G|)".into(),
        x_label: "j".into(),
        y_label: "ratio".into(),
        log_x: false,
        log_y: true,
        series: vec![Series::new("r_j", r.blocks.iter().map(|b| (b.j as f64, b.ratio)).collect())],
    });
    Ok(Artifacts { summary, plots, ..Default::default() })
}

/// `sup |rt_via_b - rt_via_darcy|` at one resolution.
pub fn rt_gap(cfg: &ExperimentConfig, n: usize, cells: usize) -> anyhow::Result<(f64, f64)> {
    let eta = initial_data(cfg, n)?;
    let tp = two_phase_config(cfg, cells);
    let sol = solve_interface_potentials(&eta, &tp)?;
    Ok(((&sol.rt_via_b - &sol.rt_via_darcy).sup_norm(), sol.rt_via_b.min()))
}

fn rt_crosscheck(cfg: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let pairs: Vec<(usize, usize)> = if cfg.grid.cells.len() == cfg.grid.resolutions.len() {
        cfg.grid.resolutions.iter().copied().zip(cfg.grid.cells.iter().copied()).collect()
    } else {
        cfg.grid.resolutions.iter().map(|&n| (n, cfg.grid.cells[0])).collect()
    };
    let res: Vec<(f64, f64)> = pairs.par_iter().map(|&(n, m)| rt_gap(cfg, n, m)).collect::<anyhow::Result<_>>()?;
    let jump = cfg.physics.rho_minus - cfg.physics.rho_plus;
    let mut summary = Table::new(&["n", "cells", "sup_difference", "relative_to_jump", "min_rt", "order"]);
    for (i, (&(n, m), &(d, rt))) in pairs.iter().zip(&res).enumerate() {
        let order = if i > 0 { (res[i - 1].0 / d).log2() } else { f64::NAN };
        summary.push(vec![n.to_string(), m.to_string(), num(d), num(d / jump), num(rt), if i > 0 { num(order) } else { String::new() }]);
    }
    Ok(Artifacts {
        summary,
        plots: vec![Plot {
            name: "rt_crosscheck".into(),
            title: "Rayleigh-Taylor formulas: sup difference".into(),
            x_label: "N".into(),
            y_label: "sup |RT_B - RT_darcy|".into(),
            log_x: true,
            log_y: true,
            series: vec![Series::new("difference", pairs.iter().map(|p| p.0 as f64).zip(res.iter().map(|r| r.0)).collect())],
        }],
        ..Default::default()
    })
}

fn freeplay(cfg: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let cells = cfg.grid.cells[0];
    let results: Vec<_> = cfg
        .grid
        .resolutions
        .par_iter()
        .map(|&n| -> anyhow::Result<_> {
            let eta = initial_data(cfg, n)?;
            let (sim, lines, _) = simulate(&format!("n={n}"), eta, &model(cfg, cells), &evolution_config(cfg, cells))?;
            Ok((n, sim, lines))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut art = Artifacts::default();
    let mut summary = Table::new(&[
        "n",
        "cells",
        "steps",
        "t_final",
        "l2_initial",
        "l2_final",
        "hs_final",
        "min_one_minus_b",
        "min_rt",
        "energy_balance",
        "l2_monotone",
        "halt",
    ]);
    let mut spectra = Table::new(&["n", "k", "re", "im"]);
    let (mut l2s, mut hss) = (Vec::new(), Vec::new());
    for (n, sim, lines) in results {
        let r = &sim.records;
        let last = r.last().expect("final record");
        let min_of = |f: fn(&muskat_core::evolution::MonitorRecord) -> Option<f64>| r.iter().filter_map(f).reduce(f64::min);
        summary.push(vec![
            n.to_string(),
            cells.to_string(),
            last.step.to_string(),
            num(last.t),
            num(r[0].l2_norm),
            num(last.l2_norm),
            num(last.hs_norm),
            opt(min_of(|m| m.min_one_minus_b)),
            opt(min_of(|m| m.min_rt)),
            num(last.energy_balance),
            sim.l2_monotone(crate::L2_SLACK).to_string(),
            halt_label(&sim.halt),
        ]);
        for (k, re, im) in sim.final_state.eta.spectrum_rows() {
            spectra.push(vec![n.to_string(), format!("{k}"), num(re), num(im)]);
        }
        l2s.push(Series::new(format!("N={n}"), r.iter().map(|m| (m.t, m.l2_norm)).collect()));
        hss.push(Series::new(format!("N={n}"), r.iter().map(|m| (m.t, m.hs_norm)).collect()));
        art.monitors.extend(lines);
    }
    art.summary = summary;
    art.tables.push(("spectra.csv".into(), spectra));
    let any_positive = l2s.iter().any(|s| s.points.iter().any(|p| p.1 > 0.0));
    art.plots.push(Plot {
        name: "l2".into(),
        title: "L2 norm".into(),
        x_label: "t".into(),
        y_label: "|eta|".into(),
        log_x: false,
        log_y: any_positive,
        series: l2s,
    });
    art.plots.push(Plot {
        name: "hs".into(),
        title: format!("H^{} norm", cfg.time.sobolev_index),
        x_label: "t".into(),
        y_label: "|eta|_Hs".into(),
        log_x: false,
        log_y: any_positive,
        series: hss,
    });
    Ok(art)
}
