//! Time integration of the interface equations
//!
//! ```text
//! one phase:  dt eta = -kappa G(eta) eta - eps |D|^2 eta
//! two phase:  dt eta = -(1/mu-) G-(eta) f-  - eps |D|^2 eta
//! ```
//!
//! The default scheme is linearly implicit: the geometry is frozen at
//! `eta_n` and the data argument is taken at `eta_{n+1}`, which only needs
//! linear solves because `G(eta) f` is linear in `f`. For one phase this is
//! backward Euler in the data, so
//! `|eta_{n+1}|^2 + |eta_{n+1} - eta_n|^2 + 2 dt kappa (G_n eta_{n+1}, eta_{n+1}) = |eta_n|^2`
//! holds exactly (for `eps = 0`).

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dirichlet_neumann::{compute_b_v, DnConfig, DnOperator};
use crate::geometry::{DomainGeometry, Side};
use crate::krylov::{pcg, KrylovReport, KrylovSettings};
use crate::spectral::{SpectralFunction, TWO_THIRDS};
use crate::two_phase::{solve_with_system, InterfaceSystem, TwoPhaseConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    SemiImplicit,
    ExplicitRk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    /// `rho- / mu-` (one phase only).
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Parabolic regularization `eps |D|^2`.
    pub epsilon: f64,
    pub monitor_every: usize,
    /// Index `s` of the monitored `H^s` norm.
    pub sobolev_index: f64,
    pub cfl: f64,
    /// Inner DN solves.
    pub dn: DnConfig,
    /// Outer (time step) Krylov solve.
    pub solver: KrylovSettings,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            dt: 1e-2,
            t_end: 1.0,
            scheme: Scheme::SemiImplicit,
            epsilon: 0.0,
            monitor_every: 1,
            sobolev_index: 2.0,
            cfl: 0.5,
            dn: DnConfig::default().with_tol(1e-12),
            solver: KrylovSettings::new(1e-10, 200),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            bad.push(alloc::format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad.push(alloc::format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            bad.push(alloc::format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            bad.push(alloc::format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if self.monitor_every == 0 {
            bad.push("monitor_every must be at least 1".into());
        }
        if !(self.cfl > 0.0) {
            bad.push(alloc::format!("cfl constant must be positive, got {}", self.cfl));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(bad.join("; ")))
        }
    }
}

/// Interface at a time level.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceState {
    pub t: f64,
    pub eta: SpectralFunction,
}

impl InterfaceState {
    pub fn new(eta: SpectralFunction) -> Self {
        Self { t: 0.0, eta }
    }

    pub fn mean(&self) -> f64 {
        self.eta.mean()
    }

    /// Largest `|k|` carrying a coefficient above `tol` relative to the max.
    pub fn band_limit(&self, tol: f64) -> f64 {
        let c = self.eta.coeffs();
        let top = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.eta
            .grid()
            .wavenumbers()
            .iter()
            .zip(c)
            .filter(|(_, z)| z.norm() > tol * top)
            .map(|(k, _)| k.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HaltReason {
    Completed,
    GeometryBreach { min_gap: f64, required: f64 },
    RayleighTaylorLoss { min_rt: f64 },
    SolverStall { message: alloc::string::String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub l2_norm: f64,
    pub hs_norm: f64,
    /// `min_x (1 - B)` with `B` from `G(eta) eta` (one phase).
    pub min_one_minus_b: Option<f64>,
    /// `min_x RT` (two phase).
    pub min_rt: Option<f64>,
    pub min_gap: Option<f64>,
    /// `sum dt (G eta, eta)` over the steps since the previous record.
    pub dissipation_increment: f64,
    pub dissipation_total: f64,
    /// `|eta(t)|^2 + 2 kappa int (G eta, eta) - |eta(0)|^2` (one phase),
    /// `|eta(t)|^2 + 2 int (-dt eta, eta) - |eta(0)|^2` (two phase).
    pub energy_balance: f64,
    pub outer_iterations: usize,
    pub outer_residual: f64,
    pub inner_residual: f64,
    pub halt: Option<HaltReason>,
}

/// Result of one step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub eta: SpectralFunction,
    /// `dt (G eta, eta)` for one phase; `dt (-dt eta, eta)` for two phase.
    pub dissipation: f64,
    /// `dt eps | |D| eta |^2`.
    pub regularization: f64,
    pub outer: KrylovReport,
    pub inner_residual: f64,
}

fn laplacian_weight(k: f64, eps: f64) -> f64 {
    eps * k * k
}

/// `(I + dt kappa G_n + dt eps |D|^2) eta_{n+1} = eta_n` by PCG with the
/// discrete flat symbol as preconditioner.
fn implicit_one_phase(op: &DnOperator, eta: &SpectralFunction, dt: f64, cfg: &EvolutionConfig) -> Result<StepReport> {
    let grid = eta.grid().clone();
    let (kappa, eps) = (cfg.kappa, cfg.epsilon);
    let diag: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| 1.0 + dt * kappa * op.flat_response(k) + dt * laplacian_weight(k, eps))
        .collect();
    let precond = |r: &[f64], z: &mut [f64]| {
        let f = SpectralFunction::from_values_unchecked(&grid, r.to_vec());
        let c: Vec<Complex64> = f.coeffs().iter().zip(&diag).map(|(c, d)| c / d).collect();
        z.copy_from_slice(&grid.inverse_real(&c));
    };
    let mut inner: f64 = 0.0;
    let mut x = {
        let mut z = alloc::vec![0.0; grid.len()];
        precond(eta.values(), &mut z);
        z
    };
    let outer = pcg(
        "implicit step CG",
        |xv, yv| {
            let u = SpectralFunction::from_values(&grid, xv.to_vec())?;
            let (g, cert) = op.apply(&u)?;
            inner = inner.max(cert.residual);
            let lap = u.map_spectrum(|k| laplacian_weight(k, eps));
            for ((y, a), (b, c)) in yv.iter_mut().zip(xv).zip(g.values().iter().zip(lap.values())) {
                *y = a + dt * kappa * b + dt * c;
            }
            Ok(())
        },
        precond,
        eta.values(),
        &mut x,
        cfg.solver,
    )?;
    let next = SpectralFunction::from_values(&grid, x)?;
    // dt (G_n eta_{n+1}, eta_{n+1}) from the step equation itself
    let lap = next.map_spectrum(|k| laplacian_weight(k, eps));
    let regularization = dt * lap.inner(&next);
    let dissipation = ((eta - &next).inner(&next) - regularization) / kappa;
    Ok(StepReport { eta: next, dissipation, regularization, outer, inner_residual: inner })
}

fn cfl_check(dt: f64, rate: f64, eps: f64, kmax: f64, cfl: f64) -> Result<()> {
    let limit = cfl / (rate * kmax + eps * kmax * kmax);
    if dt > limit {
        Err(Error::Cfl { dt, limit })
    } else {
        Ok(())
    }
}

fn rk4(eta: &SpectralFunction, dt: f64, mut rhs: impl FnMut(&SpectralFunction) -> Result<SpectralFunction>) -> Result<(SpectralFunction, SpectralFunction)> {
    let k1 = rhs(eta)?;
    let k2 = rhs(&(eta + &k1.scale(0.5 * dt)))?;
    let k3 = rhs(&(eta + &k2.scale(0.5 * dt)))?;
    let k4 = rhs(&(eta + &k3.scale(dt)))?;
    let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(2.0);
    Ok((eta + &incr.scale(dt / 6.0), k1))
}

/// One step of the one-phase equation.
pub fn step_one_phase(eta: &SpectralFunction, geom: &DomainGeometry, cfg: &EvolutionConfig) -> Result<StepReport> {
    step_one_phase_dt(eta, geom, cfg, cfg.dt)
}

fn step_one_phase_dt(eta: &SpectralFunction, geom: &DomainGeometry, cfg: &EvolutionConfig, dt: f64) -> Result<StepReport> {
    cfg.validate()?;
    match cfg.scheme {
        Scheme::SemiImplicit => {
            let op = DnOperator::new(eta, geom, Side::Lower, &cfg.dn)?;
            implicit_one_phase(&op, eta, dt, cfg)
        }
        Scheme::ExplicitRk4 => {
            cfl_check(dt, cfg.kappa, cfg.epsilon, eta.grid().k_max(), cfg.cfl)?;
            let mut inner: f64 = 0.0;
            let (next, k1) = rk4(eta, dt, |u| {
                let op = DnOperator::new(u, geom, Side::Lower, &cfg.dn)?;
                let (g, cert) = op.apply(u)?;
                inner = inner.max(cert.residual);
                let lap = u.map_spectrum(|k| laplacian_weight(k, cfg.epsilon));
                Ok(&g.scale(-cfg.kappa) - &lap)
            })?;
            let lap = eta.map_spectrum(|k| laplacian_weight(k, cfg.epsilon));
            let regularization = dt * lap.inner(eta);
            let dissipation = (-dt * k1.inner(eta) - regularization) / cfg.kappa;
            Ok(StepReport { eta: next, dissipation, regularization, outer: KrylovReport::default(), inner_residual: inner })
        }
    }
}

/// `eta_{n+1} = eta_n - dt (1/mu-) G-(eta_n) f-[eta_{n+1}] - dt eps |D|^2 eta_{n+1}`
/// by PCG; every matvec solves the interface system once.
fn implicit_two_phase(sys: &InterfaceSystem, eta: &SpectralFunction, dt: f64, tp: &TwoPhaseConfig, cfg: &EvolutionConfig) -> Result<StepReport> {
    let grid = eta.grid().clone();
    let jump = tp.density_jump();
    let eps = cfg.epsilon;
    let band = TWO_THIRDS * grid.k_max() + 1e-9 * grid.k_min();
    let diag: Vec<f64> = sys
        .flat_step_symbol()
        .iter()
        .zip(grid.wavenumbers())
        .map(|(s, &k)| 1.0 + dt * jump * if k.abs() > band { 0.0 } else { *s } + dt * laplacian_weight(k, eps))
        .collect();
    let precond = |r: &[f64], z: &mut [f64]| {
        let f = SpectralFunction::from_values_unchecked(&grid, r.to_vec());
        let c: Vec<Complex64> = f.coeffs().iter().zip(&diag).map(|(c, d)| c / d).collect();
        z.copy_from_slice(&grid.inverse_real(&c));
    };
    let mut inner: f64 = 0.0;
    let velocity = |d: &SpectralFunction, inner: &mut f64| -> Result<SpectralFunction> {
        let (fm, rep) = sys.solve_lower_potential(d, None)?;
        *inner = inner.max(rep.residual);
        let (gm, cert) = sys.lower().apply(&fm)?;
        *inner = inner.max(cert.residual);
        Ok(gm.scale(1.0 / tp.mu_minus))
    };
    let mut x = {
        let mut z = alloc::vec![0.0; grid.len()];
        precond(eta.values(), &mut z);
        z
    };
    let outer = pcg(
        "two-phase step CG",
        |xv, yv| {
            let u = SpectralFunction::from_values(&grid, xv.to_vec())?;
            let w = velocity(&u, &mut inner)?;
            let lap = u.map_spectrum(|k| laplacian_weight(k, eps));
            for ((y, a), (b, c)) in yv.iter_mut().zip(xv).zip(w.values().iter().zip(lap.values())) {
                *y = a + dt * b + dt * c;
            }
            Ok(())
        },
        precond,
        eta.values(),
        &mut x,
        cfg.solver,
    )?;
    let next = SpectralFunction::from_values(&grid, x)?;
    let lap = next.map_spectrum(|k| laplacian_weight(k, eps));
    let regularization = dt * lap.inner(&next);
    let dissipation = (eta - &next).inner(&next) - regularization;
    Ok(StepReport { eta: next, dissipation, regularization, outer, inner_residual: inner })
}

/// One step of the two-phase equation. Fails with
/// [`Error::RayleighTaylor`] if `eta_n` is not admissible.
pub fn step_two_phase(eta: &SpectralFunction, tp: &TwoPhaseConfig, cfg: &EvolutionConfig) -> Result<StepReport> {
    cfg.validate()?;
    let sys = InterfaceSystem::new(eta, tp)?;
    let sol = solve_with_system(&sys, eta, tp)?;
    let min_rt = sol.rt_via_b.min();
    if !(min_rt > 0.0) {
        return Err(Error::RayleighTaylor { min_rt });
    }
    step_two_phase_with(&sys, eta, tp, cfg, cfg.dt)
}

fn step_two_phase_with(sys: &InterfaceSystem, eta: &SpectralFunction, tp: &TwoPhaseConfig, cfg: &EvolutionConfig, dt: f64) -> Result<StepReport> {
    match cfg.scheme {
        Scheme::SemiImplicit => implicit_two_phase(sys, eta, dt, tp, cfg),
        Scheme::ExplicitRk4 => {
            let rate = tp.density_jump() / (tp.mu_plus + tp.mu_minus);
            cfl_check(dt, rate, cfg.epsilon, eta.grid().k_max(), cfg.cfl)?;
            let mut inner: f64 = 0.0;
            let (next, k1) = rk4(eta, dt, |u| {
                let s = InterfaceSystem::new(u, tp)?;
                let (fm, rep) = s.solve_lower_potential(u, None)?;
                inner = inner.max(rep.residual);
                let (gm, _) = s.lower().apply(&fm)?;
                let lap = u.map_spectrum(|k| laplacian_weight(k, cfg.epsilon));
                Ok(&gm.scale(-1.0 / tp.mu_minus) - &lap)
            })?;
            let lap = eta.map_spectrum(|k| laplacian_weight(k, cfg.epsilon));
            let regularization = dt * lap.inner(eta);
            let dissipation = -dt * k1.inner(eta) - regularization;
            Ok(StepReport { eta: next, dissipation, regularization, outer: KrylovReport::default(), inner_residual: inner })
        }
    }
}

/// Which equation to integrate.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    OnePhase(DomainGeometry),
    TwoPhase(TwoPhaseConfig),
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub records: Vec<MonitorRecord>,
    pub final_state: InterfaceState,
    pub halt: HaltReason,
}

impl Simulation {
    /// Whether `|eta|_{L^2}` never increases by more than
    /// `slack (1 + |eta|)` between consecutive records.
    pub fn l2_monotone(&self, slack: f64) -> bool {
        self.records.windows(2).all(|w| w[1].l2_norm <= w[0].l2_norm + slack * (1.0 + w[0].l2_norm))
    }
}

/// Diagnostics of the current state that also produce what the next step
/// needs (the frozen operator or interface system).
enum Frozen {
    One(DnOperator),
    Two(InterfaceSystem),
}

struct Probe {
    frozen: Option<Frozen>,
    min_one_minus_b: Option<f64>,
    min_rt: Option<f64>,
    min_gap: Option<f64>,
    inner_residual: f64,
}

fn probe(eta: &SpectralFunction, model: &Model, cfg: &EvolutionConfig, with_diagnostics: bool) -> Result<Probe> {
    match model {
        Model::OnePhase(geom) => {
            let op = DnOperator::new(eta, geom, Side::Lower, &cfg.dn)?;
            let (mut b, mut res) = (None, 0.0);
            if with_diagnostics {
                let (g, cert) = op.apply(eta)?;
                let (bf, _) = compute_b_v(&eta.dealias(TWO_THIRDS), eta, &g);
                b = Some(1.0 - bf.max());
                res = cert.residual;
            }
            Ok(Probe { frozen: Some(Frozen::One(op)), min_one_minus_b: b, min_rt: None, min_gap: geom.min_gap(eta, Side::Lower), inner_residual: res })
        }
        Model::TwoPhase(tp) => {
            let sys = InterfaceSystem::new(eta, tp)?;
            // admissibility is checked every step, so RT is always computed
            let sol = solve_with_system(&sys, eta, tp)?;
            let gaps = [tp.geometry.min_gap(eta, Side::Lower), tp.geometry.min_gap(eta, Side::Upper)];
            let min_gap = gaps.iter().flatten().copied().reduce(f64::min);
            Ok(Probe {
                frozen: Some(Frozen::Two(sys)),
                min_one_minus_b: None,
                min_rt: Some(sol.rt_via_b.min()),
                min_gap,
                inner_residual: sol.certificate.residual,
            })
        }
    }
}

struct Ledger {
    e0: f64,
    dissipation: f64,
    regularization: f64,
    since_record: f64,
}

impl Ledger {
    fn balance(&self, eta: &SpectralFunction, model: &Model, cfg: &EvolutionConfig) -> f64 {
        let scale = match model {
            Model::OnePhase(_) => cfg.kappa,
            Model::TwoPhase(_) => 1.0,
        };
        let l2 = eta.l2_norm();
        l2 * l2 + 2.0 * scale * self.dissipation + 2.0 * self.regularization - self.e0
    }
}

fn required_gap(model: &Model) -> f64 {
    match model {
        Model::OnePhase(g) => g.h,
        Model::TwoPhase(tp) => tp.geometry.h,
    }
}

/// Advances to `t_end` or to a graceful halt. Records are emitted at step
/// 0, every `monitor_every` steps, and at the end (with the halt reason).
/// A stalled implicit solve is retried once with half the time step; the
/// halved step is kept for the rest of the run.
pub fn run_simulation(initial: InterfaceState, model: &Model, cfg: &EvolutionConfig) -> Result<Simulation> {
    run_simulation_observed(initial, model, cfg, |_, _| {})
}

/// [`run_simulation`] that also hands every recorded state to `observe`.
pub fn run_simulation_observed(
    initial: InterfaceState,
    model: &Model,
    cfg: &EvolutionConfig,
    mut observe: impl FnMut(&MonitorRecord, &SpectralFunction),
) -> Result<Simulation> {
    cfg.validate()?;
    if let Model::TwoPhase(tp) = model {
        tp.validate()?;
    }
    let mut eta = initial.eta.clone();
    let mut t = initial.t;
    let t_final = initial.t + cfg.t_end;
    let mut dt = cfg.dt;
    let mut halved = false;
    let e0 = eta.l2_norm() * eta.l2_norm();
    let mut ledger = Ledger { e0, dissipation: 0.0, regularization: 0.0, since_record: 0.0 };
    let mut records = Vec::new();
    let mut step = 0usize;
    let mut last_outer = KrylovReport::default();

    let record = |step: usize, t: f64, dt: f64, eta: &SpectralFunction, p: &Probe, ledger: &Ledger, outer: &KrylovReport, halt: Option<HaltReason>| MonitorRecord {
        step,
        t,
        dt,
        l2_norm: eta.l2_norm(),
        hs_norm: eta.sobolev_norm(cfg.sobolev_index),
        min_one_minus_b: p.min_one_minus_b,
        min_rt: p.min_rt,
        min_gap: p.min_gap,
        dissipation_increment: ledger.since_record,
        dissipation_total: ledger.dissipation,
        energy_balance: ledger.balance(eta, model, cfg),
        outer_iterations: outer.iterations,
        outer_residual: outer.residual,
        inner_residual: p.inner_residual,
        halt,
    };

    let breach = |eta: &SpectralFunction| -> Option<HaltReason> {
        let check = match model {
            Model::OnePhase(g) => g.check_separation(eta, Side::Lower),
            Model::TwoPhase(tp) => tp.geometry.check_separation(eta, Side::Lower).and(tp.geometry.check_separation(eta, Side::Upper)),
        };
        match check {
            Err(Error::Geometry { min_gap, required }) => Some(HaltReason::GeometryBreach { min_gap, required }),
            _ => None,
        }
    };

    if let Some(h) = breach(&eta) {
        let gap = match &h {
            HaltReason::GeometryBreach { min_gap, .. } => Some(*min_gap),
            _ => None,
        };
        let p = Probe { frozen: None, min_one_minus_b: None, min_rt: None, min_gap: gap, inner_residual: 0.0 };
        records.push(record(0, t, dt, &eta, &p, &ledger, &last_outer, Some(h.clone())));
        observe(records.last().unwrap(), &eta);
        return Ok(Simulation { records, final_state: InterfaceState { t, eta }, halt: h });
    }

    let mut p = probe(&eta, model, cfg, true)?;
    let halt = loop {
        if let Some(rt) = p.min_rt {
            if !(rt > 0.0) {
                break HaltReason::RayleighTaylorLoss { min_rt: rt };
            }
        }
        if t >= t_final - 1e-12 * t_final.abs().max(1.0) {
            break HaltReason::Completed;
        }
        if step % cfg.monitor_every == 0 {
            records.push(record(step, t, dt, &eta, &p, &ledger, &last_outer, None));
            observe(records.last().unwrap(), &eta);
            ledger.since_record = 0.0;
        }
        let h = dt.min(t_final - t);
        let attempt = |h: f64| -> Result<StepReport> {
            match (p.frozen.as_ref(), model) {
                (Some(Frozen::One(op)), Model::OnePhase(geom)) => match cfg.scheme {
                    Scheme::SemiImplicit => implicit_one_phase(op, &eta, h, cfg),
                    Scheme::ExplicitRk4 => step_one_phase_dt(&eta, geom, cfg, h),
                },
                (Some(Frozen::Two(sys)), Model::TwoPhase(tp)) => step_two_phase_with(sys, &eta, tp, cfg, h),
                _ => unreachable!("probe matches the model"),
            }
        };
        let (rep, taken) = match attempt(h) {
            Ok(r) => (r, h),
            Err(Error::Solver { .. }) if !halved => {
                halved = true;
                dt *= 0.5;
                match attempt(h * 0.5) {
                    Ok(r) => (r, h * 0.5),
                    Err(e @ Error::Solver { .. }) => break HaltReason::SolverStall { message: alloc::format!("{e}") },
                    Err(e) => return Err(e),
                }
            }
            Err(e @ Error::Solver { .. }) => break HaltReason::SolverStall { message: alloc::format!("{e}") },
            Err(Error::Geometry { min_gap, required }) => break HaltReason::GeometryBreach { min_gap, required },
            Err(e) => return Err(e),
        };
        t += taken;
        step += 1;
        ledger.dissipation += rep.dissipation;
        ledger.regularization += rep.regularization;
        ledger.since_record += rep.dissipation;
        last_outer = rep.outer.clone();
        eta = rep.eta;
        if let Some(b) = breach(&eta) {
            break b;
        }
        p = match probe(&eta, model, cfg, (step % cfg.monitor_every == 0) || t >= t_final - 1e-12) {
            Ok(p) => p,
            Err(Error::Geometry { min_gap, required }) => break HaltReason::GeometryBreach { min_gap, required },
            Err(Error::MapValidity { min_dz_rho, .. }) => break HaltReason::GeometryBreach { min_gap: min_dz_rho, required: required_gap(model) },
            Err(e @ Error::Solver { .. }) => break HaltReason::SolverStall { message: alloc::format!("{e}") },
            Err(e) => return Err(e),
        };
        p.inner_residual = p.inner_residual.max(rep.inner_residual);
    };
    let p_final = match &halt {
        HaltReason::GeometryBreach { min_gap, .. } => Probe {
            frozen: None,
            min_one_minus_b: None,
            min_rt: None,
            min_gap: Some(*min_gap),
            inner_residual: 0.0,
        },
        _ => p,
    };
    records.push(record(step, t, dt, &eta, &p_final, &ledger, &last_outer, Some(halt.clone())));
    observe(records.last().unwrap(), &eta);
    Ok(Simulation { records, final_state: InterfaceState { t, eta }, halt })
}
