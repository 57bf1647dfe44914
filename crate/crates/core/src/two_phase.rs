//! Interface potentials `f+-` of the two-phase problem and the two
//! Rayleigh-Taylor formulas.
//!
//! With `G-` the DN operator of the lower fluid and `G+` that of the upper
//! fluid (both with the upward normal, so `G+` is nonpositive), the
//! potentials satisfy
//!
//! ```text
//! f+ - f- = -[rho] eta,      (1/mu+) G+ f+ = (1/mu-) G- f-.
//! ```
//!
//! Eliminating `f+` gives `L f- = (1/mu+) G+([rho] eta)` with
//! `L = (1/mu+) G+ - (1/mu-) G-`. `-L` is symmetric positive semidefinite
//! with the constants as kernel; the mean of `f-` is pinned to zero.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dirichlet_neumann::{compute_b_v, DnConfig, DnOperator};
use crate::geometry::{DomainGeometry, Side};
use crate::krylov::{pcg, KrylovReport, KrylovSettings};
use crate::spectral::{SpectralFunction, TWO_THIRDS};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseConfig {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    /// `bottom` bounds the lower fluid, `top` the upper one.
    pub geometry: DomainGeometry,
    /// Inner DN solves; keep its tolerance well below `solver.tol`.
    pub dn: DnConfig,
    pub solver: KrylovSettings,
}

impl TwoPhaseConfig {
    pub fn new(mu_plus: f64, mu_minus: f64, rho_plus: f64, rho_minus: f64, geometry: DomainGeometry) -> Self {
        Self {
            mu_plus,
            mu_minus,
            rho_plus,
            rho_minus,
            geometry,
            dn: DnConfig::default().with_tol(1e-12),
            solver: KrylovSettings::new(1e-9, 200),
        }
    }

    /// `[rho] = rho- - rho+`.
    pub fn density_jump(&self) -> f64 {
        self.rho_minus - self.rho_plus
    }

    /// `[mu] = mu- - mu+`.
    pub fn viscosity_jump(&self) -> f64 {
        self.mu_minus - self.mu_plus
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.mu_plus > 0.0 && self.mu_plus.is_finite()) {
            bad.push(alloc::format!("mu_plus must be positive, got {}", self.mu_plus));
        }
        if !(self.mu_minus > 0.0 && self.mu_minus.is_finite()) {
            bad.push(alloc::format!("mu_minus must be positive, got {}", self.mu_minus));
        }
        if !(self.rho_minus > self.rho_plus) {
            bad.push(alloc::format!("need rho_minus > rho_plus, got {} <= {}", self.rho_minus, self.rho_plus));
        }
        if !bad.is_empty() {
            return Err(Error::InvalidInput(bad.join("; ")));
        }
        self.geometry.validate()
    }
}

#[derive(Debug, Clone)]
pub struct TwoPhaseSolution {
    pub f_minus: SpectralFunction,
    pub f_plus: SpectralFunction,
    /// `G-(eta) f-` and `G+(eta) f+`.
    pub g_minus: SpectralFunction,
    pub g_plus: SpectralFunction,
    pub rt_via_b: SpectralFunction,
    pub rt_via_darcy: SpectralFunction,
    pub certificate: KrylovReport,
    /// `|(1/mu+) G+ f+ - (1/mu-) G- f-| / |(1/mu+) G+([rho] eta)|` on the
    /// dealiased band, modulo constants.
    pub flux_residual: f64,
}

/// Both DN operators for a frozen interface and the interface operator `L`.
#[derive(Debug, Clone)]
pub struct InterfaceSystem {
    lower: DnOperator,
    upper: DnOperator,
    mu_plus: f64,
    mu_minus: f64,
    jump: f64,
    settings: KrylovSettings,
    /// Diagonal of the flat `-L` per FFT slot. `k = 0` and the modes removed
    /// by dealiasing hold the pinning weight.
    flat: Vec<f64>,
}

impl InterfaceSystem {
    pub fn new(eta: &SpectralFunction, cfg: &TwoPhaseConfig) -> Result<Self> {
        cfg.validate()?;
        let lower = DnOperator::new(eta, &cfg.geometry, Side::Lower, &cfg.dn)?;
        let upper = DnOperator::new(eta, &cfg.geometry, Side::Upper, &cfg.dn)?;
        let pin = 1.0 / cfg.mu_plus + 1.0 / cfg.mu_minus;
        let grid = eta.grid();
        let band = TWO_THIRDS * grid.k_max() + 1e-9 * grid.k_min();
        let flat = grid
            .wavenumbers()
            .iter()
            .map(|&k| {
                if k == 0.0 || k.abs() > band {
                    pin
                } else {
                    upper.flat_response(k) / cfg.mu_plus + lower.flat_response(k) / cfg.mu_minus
                }
            })
            .collect();
        Ok(Self { lower, upper, mu_plus: cfg.mu_plus, mu_minus: cfg.mu_minus, jump: cfg.density_jump(), settings: cfg.solver, flat })
    }

    pub fn lower(&self) -> &DnOperator {
        &self.lower
    }

    pub fn upper(&self) -> &DnOperator {
        &self.upper
    }

    /// Flat symbol of `P (P + Q)^-1 Q` per FFT slot, with
    /// `P = G- / mu-` and `Q = -G+ / mu+`: the linear decay symbol of the
    /// interface divided by `[rho]`.
    pub fn flat_step_symbol(&self) -> Vec<f64> {
        let grid = self.lower.eta().grid();
        grid.wavenumbers()
            .iter()
            .map(|&k| {
                let p = self.lower.flat_response(k) / self.mu_minus;
                let q = self.upper.flat_response(k) / self.mu_plus;
                if p + q > 0.0 {
                    p * q / (p + q)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `L f = (1/mu+) G+ f - (1/mu-) G- f`.
    pub fn apply_l(&self, f: &SpectralFunction) -> Result<SpectralFunction> {
        let (gp, _) = self.upper.apply(f)?;
        let (gm, _) = self.lower.apply(f)?;
        Ok(&gp.scale(1.0 / self.mu_plus) - &gm.scale(1.0 / self.mu_minus))
    }

    /// Flat `(-L)^-1` with the pinned mean (used as preconditioner).
    pub fn flat_inverse(&self, r: &SpectralFunction) -> SpectralFunction {
        let c: Vec<Complex64> = r.coeffs().iter().zip(&self.flat).map(|(c, d)| c / d).collect();
        SpectralFunction::from_coeffs(r.grid(), &c)
    }

    /// `f-` for jump data `d` (`f+ - f- = -[rho] d`), mean pinned to zero.
    pub fn solve_lower_potential(&self, d: &SpectralFunction, guess: Option<&SpectralFunction>) -> Result<(SpectralFunction, KrylovReport)> {
        let grid = d.grid().clone();
        let (gp, _) = self.upper.apply(&d.scale(self.jump))?;
        // -L f- = -r, r = (1/mu+) G+([rho] d); the mean of -r is removed
        let rhs = gp.scale(-1.0 / self.mu_plus).dealias(TWO_THIRDS);
        let rhs = &rhs - &SpectralFunction::constant(&grid, rhs.mean());
        let pin = 1.0 / self.mu_plus + 1.0 / self.mu_minus;
        let mut x = guess.map_or_else(|| self.flat_inverse(&rhs).into_values(), |g| g.values().to_vec());
        let report = pcg(
            "interface CG",
            |xv, yv| {
                // -L on the retained band, pin * identity on the mean and
                // on the filtered modes
                let f = SpectralFunction::from_values(&grid, xv.to_vec())?;
                let low = f.dealias(TWO_THIRDS);
                let lf = self.apply_l(&low)?.dealias(TWO_THIRDS);
                let m = pin * f.mean();
                for (((y, l), a), b) in yv.iter_mut().zip(lf.values()).zip(f.values()).zip(low.values()) {
                    *y = m - l + pin * (a - b);
                }
                Ok(())
            },
            |r, z| {
                let f = SpectralFunction::from_values_unchecked(&grid, r.to_vec());
                z.copy_from_slice(self.flat_inverse(&f).values());
            },
            rhs.values(),
            &mut x,
            self.settings,
        )?;
        let f = SpectralFunction::from_values(&grid, x)?;
        let f = &f - &SpectralFunction::constant(&grid, f.mean());
        Ok((f, report))
    }
}

/// Solves for `f+-`, then evaluates both Rayleigh-Taylor fields.
pub fn solve_interface_potentials(eta: &SpectralFunction, cfg: &TwoPhaseConfig) -> Result<TwoPhaseSolution> {
    let sys = InterfaceSystem::new(eta, cfg)?;
    solve_with_system(&sys, eta, cfg)
}

pub fn solve_with_system(sys: &InterfaceSystem, eta: &SpectralFunction, cfg: &TwoPhaseConfig) -> Result<TwoPhaseSolution> {
    let (f_minus, certificate) = sys.solve_lower_potential(eta, None)?;
    // first equation of the system, exact at the grid points
    let f_plus = &f_minus - &eta.scale(cfg.density_jump());
    let (g_minus, _) = sys.lower.apply(&f_minus)?;
    let (g_plus, _) = sys.upper.apply(&f_plus)?;
    let (r, _) = sys.upper.apply(&eta.scale(cfg.density_jump()))?;
    // continuity is imposed on the dealiased band, modulo constants (the
    // discrete traces carry an O(dz^2) mean)
    let band = |u: SpectralFunction| {
        let u = u.dealias(TWO_THIRDS);
        let m = u.mean();
        u.map_values(|v| v - m)
    };
    let flux = band(&g_plus.scale(1.0 / cfg.mu_plus) - &g_minus.scale(1.0 / cfg.mu_minus));
    let flux_residual = flux.l2_norm() / band(r.scale(1.0 / cfg.mu_plus)).l2_norm().max(f64::MIN_POSITIVE);
    let mut sol = TwoPhaseSolution {
        f_minus,
        f_plus,
        g_minus,
        g_plus,
        rt_via_b: SpectralFunction::zeros(eta.grid()),
        rt_via_darcy: SpectralFunction::zeros(eta.grid()),
        certificate,
        flux_residual: if r.l2_norm() == 0.0 { 0.0 } else { flux_residual },
    };
    let (rb, rd) = rayleigh_taylor(eta, &sol, cfg);
    sol.rt_via_b = rb;
    sol.rt_via_darcy = rd;
    Ok(sol)
}

/// `B+-` and `V+-` of both phases.
fn phase_fields(eta: &SpectralFunction, sol: &TwoPhaseSolution) -> [(SpectralFunction, SpectralFunction); 2] {
    [
        compute_b_v(&sol.f_minus.dealias(TWO_THIRDS), eta, &sol.g_minus),
        compute_b_v(&sol.f_plus.dealias(TWO_THIRDS), eta, &sol.g_plus),
    ]
}

/// `(rt_via_b, rt_via_darcy)`:
///
/// - `sqrt(1 + eta'^2) ([rho] - [B])`,
/// - `[rho] / sqrt(1 + eta'^2) + [mu] u.n` with
///   `sqrt(1 + eta'^2) u.n = -(1/mu-) G- f-`.
pub fn rayleigh_taylor(eta: &SpectralFunction, sol: &TwoPhaseSolution, cfg: &TwoPhaseConfig) -> (SpectralFunction, SpectralFunction) {
    let jump = cfg.density_jump();
    let metric = eta.derivative().map_values(|q| libm::sqrt(1.0 + q * q));
    let [(bm, _), (bp, _)] = phase_fields(eta, sol);
    let jump_b = &bm - &bp;
    let via_b = metric.zip_values(&jump_b, |m, b| m * (jump - b));
    let flux = sol.g_minus.scale(-1.0 / cfg.mu_minus);
    let mu = cfg.viscosity_jump();
    let via_darcy = metric.zip_values(&flux, |m, w| jump / m + mu * w / m);
    (via_b, via_darcy)
}

/// `([B], [V]) = (B- - B+, V- - V+)`.
pub fn reduced_coefficients(eta: &SpectralFunction, sol: &TwoPhaseSolution) -> (SpectralFunction, SpectralFunction) {
    let [(bm, vm), (bp, vp)] = phase_fields(eta, sol);
    (&bm - &bp, &vm - &vp)
}
