//! Dirichlet-Neumann operator through the straightened elliptic problem.
//!
//! The harmonic extension `v` of surface data `f` minimises the energy
//! `1/2 int grad v . A grad v dx dz` with `v(., 0) = f`. The energy is
//! discretised with Fourier collocation in `x` and one midpoint cell per
//! `z` interval (`v` averaged over the cell for the `x` derivative, divided
//! difference for the `z` derivative). The resulting matrix is symmetric
//! positive definite once the surface row is pinned; the natural boundary
//! condition at the bottom node is the conormal (Neumann) condition.
//!
//! The system is solved matrix-free by conjugate gradients preconditioned by
//! the flat operator (cell-averaged `A`, no cross term) which diagonalises in
//! `x` and is tridiagonal in `z` for every wavenumber.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::geometry::{
    build_near_surface_map, build_sigma_map, coefficients_from_map, DomainGeometry, EllipticCoefficients, Side,
    StraightenedMap, ZSpacing,
};
use crate::krylov::{pcg, KrylovReport, KrylovSettings};
use crate::spectral::{SpectralFunction, TWO_THIRDS};
use crate::{Error, Result};

/// Closed-form DN symbol of a flat interface: `|k|` in infinite depth,
/// `|k| tanh(H |k|)` over a wall at depth `H`.
pub fn flat_dn_multiplier(k: f64, depth: Option<f64>) -> f64 {
    let a = k.abs();
    match depth {
        None => a,
        Some(h) => a * libm::tanh(h * a),
    }
}

/// Which straightening map the solver uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapChoice {
    Sigma,
    /// Smoothed near-surface strip of thickness `h`. With `lower_cells > 0`
    /// the strip is continued to the wall by a sigma patch.
    NearSurface { h: f64, tau: Option<f64>, lower_cells: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnConfig {
    /// Number of `z` intervals (of the strip, for the near-surface map).
    pub cells: usize,
    pub spacing: ZSpacing,
    pub map: MapChoice,
    pub solver: KrylovSettings,
}

impl Default for DnConfig {
    fn default() -> Self {
        Self {
            cells: 64,
            spacing: ZSpacing::Auto,
            map: MapChoice::Sigma,
            solver: KrylovSettings::new(1e-10, 500),
        }
    }
}

impl DnConfig {
    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.solver.tol = tol;
        self
    }
}

/// Solver certificate of one elliptic solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Certificate {
    pub residual: f64,
    pub iterations: usize,
}

impl From<&KrylovReport> for Certificate {
    fn from(r: &KrylovReport) -> Self {
        Self { residual: r.residual, iterations: r.iterations }
    }
}

/// Harmonic extension sampled on the straightened grid (level-major).
#[derive(Debug, Clone)]
pub struct StraightenedField {
    pub n: usize,
    pub z: Vec<f64>,
    pub values: Vec<f64>,
    pub certificate: Certificate,
}

impl StraightenedField {
    pub fn level(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }
}

/// Result of [`dn_apply`].
#[derive(Debug, Clone)]
pub struct DnOutput {
    pub g: SpectralFunction,
    pub b_field: SpectralFunction,
    pub v_field: SpectralFunction,
    pub residual: f64,
    pub iterations: usize,
}

/// Flat per-wavenumber tridiagonal inverse.
#[derive(Debug, Clone)]
struct FlatPreconditioner {
    n: usize,
    m: usize,
    /// Thomas factors per FFT slot: modified super-diagonal and inverse pivots.
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
    lower: Vec<f64>,
}

impl FlatPreconditioner {
    fn new(ks: &[f64], dz: &[f64], pbar: &[f64], rbar: &[f64]) -> Self {
        let n = ks.len();
        let m = dz.len();
        let mut upper = vec![0.0; n * m];
        let mut inv_pivot = vec![0.0; n * m];
        let mut lower = vec![0.0; n * m];
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m];
        for (slot, &k) in ks.iter().enumerate() {
            let k2 = if slot == n / 2 { 0.0 } else { k * k };
            diag.iter_mut().for_each(|d| *d = 0.0);
            for c in 0..m {
                let mass = 0.25 * dz[c] * pbar[c] * k2;
                let stiff = rbar[c] / dz[c];
                diag[c] += mass + stiff;
                if c + 1 < m {
                    diag[c + 1] += mass + stiff;
                    off[c] = mass - stiff;
                }
            }
            let base = slot * m;
            let mut prev_upper = 0.0;
            for c in 0..m {
                let sub = if c > 0 { off[c - 1] } else { 0.0 };
                let piv = diag[c] - sub * prev_upper;
                let ip = 1.0 / piv;
                inv_pivot[base + c] = ip;
                lower[base + c] = sub;
                prev_upper = if c + 1 < m { off[c] * ip } else { 0.0 };
                upper[base + c] = prev_upper;
            }
        }
        Self { n, m, upper, inv_pivot, lower }
    }

    fn apply(&self, op: &DnOperator, r: &[f64], z: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        let plan = op.map.grid.plan();
        let mut hat = vec![Complex64::new(0.0, 0.0); n * m];
        for c in 0..m {
            let lvl = &mut hat[c * n..(c + 1) * n];
            for (h, &v) in lvl.iter_mut().zip(&r[c * n..(c + 1) * n]) {
                *h = Complex64::new(v, 0.0);
            }
            plan.forward(lvl);
        }
        let mut y = vec![Complex64::new(0.0, 0.0); m];
        for slot in 0..n {
            let base = slot * m;
            for c in 0..m {
                let prev = if c > 0 { y[c - 1] } else { Complex64::new(0.0, 0.0) };
                y[c] = (hat[c * n + slot] - prev * self.lower[base + c]) * self.inv_pivot[base + c];
            }
            for c in (0..m.saturating_sub(1)).rev() {
                y[c] = y[c] - y[c + 1] * self.upper[base + c];
            }
            for c in 0..m {
                hat[c * n + slot] = y[c];
            }
        }
        for c in 0..m {
            let lvl = &mut hat[c * n..(c + 1) * n];
            plan.inverse(lvl);
            for (out, h) in z[c * n..(c + 1) * n].iter_mut().zip(lvl.iter()) {
                *out = h.re;
            }
        }
    }
}

/// First-derivative weights at `x0` from samples at `x0, x1, x2`.
fn one_sided_weights(x0: f64, x1: f64, x2: f64) -> [f64; 3] {
    [
        (2.0 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2)),
        (x0 - x2) / ((x1 - x0) * (x1 - x2)),
        (x0 - x1) / ((x2 - x0) * (x2 - x1)),
    ]
}

/// DN operator of one fluid for a frozen interface. Building it assembles
/// the map, the cell coefficients and the preconditioner once; every
/// [`DnOperator::apply`] is then one preconditioned CG solve.
#[derive(Debug, Clone)]
pub struct DnOperator {
    side: Side,
    eta: SpectralFunction,
    depth: Option<f64>,
    map: StraightenedMap,
    dz: Vec<f64>,
    c11: Vec<f64>,
    c12: Vec<f64>,
    c22: Vec<f64>,
    precond: FlatPreconditioner,
    pbar: Vec<f64>,
    rbar: Vec<f64>,
    surface_weights: [f64; 3],
    settings: KrylovSettings,
}

impl DnOperator {
    pub fn new(eta: &SpectralFunction, geom: &DomainGeometry, side: Side, cfg: &DnConfig) -> Result<Self> {
        geom.validate()?;
        geom.check_separation(eta, side)?;
        let map = match cfg.map {
            MapChoice::Sigma => build_sigma_map(eta, geom, side, cfg.cells, cfg.spacing)?,
            MapChoice::NearSurface { h, tau, lower_cells } => {
                let (iface, bottom) = geom.lower_form(eta, side);
                let lower = (lower_cells > 0).then_some((&bottom, lower_cells));
                build_near_surface_map(&iface, h, tau, cfg.cells, cfg.spacing, lower)?
            }
        };
        Self::from_map(eta, side, geom.flat_depth(side), map, cfg.solver)
    }

    /// Operator for an explicit map (lower-fluid form).
    pub fn from_map(
        eta: &SpectralFunction,
        side: Side,
        depth: Option<f64>,
        map: StraightenedMap,
        settings: KrylovSettings,
    ) -> Result<Self> {
        let n = map.n();
        let m = map.cells();
        if m < 2 {
            return Err(Error::InvalidInput("at least two z cells are required".into()));
        }
        let min = map.min_drho_dz();
        if !(min > 0.0) {
            return Err(Error::MapValidity { min_dz_rho: min, threshold: 0.0 });
        }
        let dz: Vec<f64> = map.z.windows(2).map(|w| w[1] - w[0]).collect();
        let mut c11 = Vec::with_capacity(n * m);
        let mut c12 = Vec::with_capacity(n * m);
        let mut c22 = Vec::with_capacity(n * m);
        let mut pbar = Vec::with_capacity(m);
        let mut rbar = Vec::with_capacity(m);
        for c in 0..m {
            let (mut ps, mut rs) = (0.0, 0.0);
            for i in 0..n {
                let p = map.mid_drho_dz[c * n + i];
                let q = map.mid_drho_dx[c * n + i];
                let r = (1.0 + q * q) / p;
                c11.push(p);
                c12.push(-q);
                c22.push(r);
                ps += p;
                rs += r;
            }
            pbar.push(ps / n as f64);
            rbar.push(rs / n as f64);
        }
        let precond = FlatPreconditioner::new(map.grid.wavenumbers(), &dz, &pbar, &rbar);
        let surface_weights = one_sided_weights(map.z[m], map.z[m - 1], map.z[m - 2]);
        Ok(Self {
            side,
            eta: eta.clone(),
            depth,
            map,
            dz,
            c11,
            c12,
            c22,
            precond,
            pbar,
            rbar,
            surface_weights,
            settings,
        })
    }

    pub fn map(&self) -> &StraightenedMap {
        &self.map
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn eta(&self) -> &SpectralFunction {
        &self.eta
    }

    /// Flat-interface symbol of this fluid (used by outer preconditioners).
    pub fn flat_symbol(&self, k: f64) -> f64 {
        flat_dn_multiplier(k, self.depth)
    }

    /// Response of the cell-averaged operator to `cos(k x)` surface data:
    /// the discrete symbol this operator has at a flat interface, equal to
    /// the closed-form multiplier up to `O(dz^2)`. Always lower-form sign.
    pub fn flat_response(&self, k: f64) -> f64 {
        let m = self.map.cells();
        let k2 = k * k;
        let mut diag = vec![0.0; m + 1];
        let mut off = vec![0.0; m];
        for c in 0..m {
            let mass = 0.25 * self.dz[c] * self.pbar[c] * k2;
            let stiff = self.rbar[c] / self.dz[c];
            diag[c] += mass + stiff;
            diag[c + 1] += mass + stiff;
            off[c] = mass - stiff;
        }
        // interior nodes 0..m with v_m = 1
        let mut rhs = vec![0.0; m];
        rhs[m - 1] = -off[m - 1];
        let mut upper = vec![0.0; m];
        for c in 0..m {
            let sub = if c > 0 { off[c - 1] } else { 0.0 };
            let prev_u = if c > 0 { upper[c - 1] } else { 0.0 };
            let prev_r = if c > 0 { rhs[c - 1] } else { 0.0 };
            let piv = diag[c] - sub * prev_u;
            upper[c] = if c + 1 < m { off[c] / piv } else { 0.0 };
            rhs[c] = (rhs[c] - sub * prev_r) / piv;
        }
        for c in (0..m - 1).rev() {
            rhs[c] -= upper[c] * rhs[c + 1];
        }
        let w = self.surface_weights;
        let dzv = w[0] + w[1] * rhs[m - 1] + w[2] * rhs[m - 2];
        let top = self.map.node_level(&self.map.drho_dz, m);
        let p = top.iter().sum::<f64>() / top.len() as f64;
        dzv / p
    }

    pub fn coefficients(&self) -> Result<EllipticCoefficients> {
        coefficients_from_map(&self.map)
    }

    /// Gradient of the discrete energy for a full vector (all nodes).
    fn energy_gradient(&self, v: &[f64], out: &mut [f64]) {
        let n = self.map.n();
        let m = self.map.cells();
        let grid = &self.map.grid;
        let mut dv = vec![0.0; (m + 1) * n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        let mut tmp = vec![0.0; n];
        let mut j = 0;
        while j <= m {
            if j + 1 <= m {
                let (lo, hi) = dv.split_at_mut((j + 1) * n);
                grid.derivative_pair(&v[j * n..(j + 1) * n], &v[(j + 1) * n..(j + 2) * n], &mut lo[j * n..], &mut hi[..n], &mut scratch);
                j += 2;
            } else {
                grid.derivative_pair(&v[j * n..(j + 1) * n], &v[j * n..(j + 1) * n], &mut dv[j * n..(j + 1) * n], &mut tmp, &mut scratch);
                j += 1;
            }
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut flux_x = vec![0.0; (m + 1) * n];
        for c in 0..m {
            let h = self.dz[c];
            for i in 0..n {
                let k = c * n + i;
                let x = 0.5 * (dv[k] + dv[k + n]);
                let y = (v[k + n] - v[k]) / h;
                let fx = self.c11[k] * x + self.c12[k] * y;
                let fz = self.c12[k] * x + self.c22[k] * y;
                flux_x[k] += h * fx;
                flux_x[k + n] += h * fx;
                out[k] -= fz;
                out[k + n] += fz;
            }
        }
        // out += -1/2 D(flux_x), two levels per transform
        let mut da = vec![0.0; n];
        let mut db = vec![0.0; n];
        let mut j = 0;
        while j <= m {
            let a = &flux_x[j * n..(j + 1) * n];
            let b = if j + 1 <= m { &flux_x[(j + 1) * n..(j + 2) * n] } else { a };
            grid.derivative_pair(a, b, &mut da, &mut db, &mut scratch);
            for i in 0..n {
                out[j * n + i] -= 0.5 * da[i];
                if j + 1 <= m {
                    out[(j + 1) * n + i] -= 0.5 * db[i];
                }
            }
            j += 2;
        }
    }

    /// Harmonic extension of `f` (dealiased first).
    pub fn solve(&self, f: &SpectralFunction) -> Result<StraightenedField> {
        self.solve_with_guess(f, None)
    }

    pub fn solve_with_guess(&self, f: &SpectralFunction, guess: Option<&[f64]>) -> Result<StraightenedField> {
        let n = self.map.n();
        let m = self.map.cells();
        let f = f.dealias(TWO_THIRDS);
        let interior = m * n;
        let mut full = vec![0.0; (m + 1) * n];
        full[interior..].copy_from_slice(f.values());
        let mut grad = vec![0.0; (m + 1) * n];
        self.energy_gradient(&full, &mut grad);
        let b: Vec<f64> = grad[..interior].iter().map(|g| -g).collect();

        let mut x = match guess {
            Some(g) if g.len() == (m + 1) * n => g[..interior].to_vec(),
            _ => f.values().iter().copied().cycle().take(interior).collect(),
        };
        let mut work = vec![0.0; (m + 1) * n];
        let mut work_out = vec![0.0; (m + 1) * n];
        let report = pcg(
            "elliptic CG",
            |xv, yv| {
                work[..interior].copy_from_slice(xv);
                work[interior..].iter_mut().for_each(|w| *w = 0.0);
                self.energy_gradient(&work, &mut work_out);
                yv.copy_from_slice(&work_out[..interior]);
                Ok(())
            },
            |r, z| self.precond.apply(self, r, z),
            &b,
            &mut x,
            self.settings,
        )?;
        let mut values = x;
        values.extend_from_slice(f.values());
        Ok(StraightenedField { n, z: self.map.z.clone(), values, certificate: Certificate::from(&report) })
    }

    /// Lower-form DN trace of a solved field.
    pub fn trace(&self, v: &StraightenedField) -> SpectralFunction {
        evaluate_dn(v, &self.map, self.surface_weights)
    }

    /// `G(eta) f` for this fluid with its sign convention (upward normal).
    pub fn apply(&self, f: &SpectralFunction) -> Result<(SpectralFunction, Certificate)> {
        let v = self.solve(f)?;
        let g = self.trace(&v);
        let g = match self.side {
            Side::Lower => g,
            // reflected problem: G+(eta) f = -G_lower(-eta) f
            Side::Upper => -&g,
        };
        Ok((g, v.certificate))
    }
}

/// `((1 + |dx rho|^2) / dz rho) dz v - dx rho . dx v` at `z = 0`, with a
/// three-point one-sided `z` derivative.
pub fn evaluate_dn(v: &StraightenedField, map: &StraightenedMap, w: [f64; 3]) -> SpectralFunction {
    let n = map.n();
    let m = map.cells();
    let top = v.level(m);
    let dfx = SpectralFunction::from_values_unchecked(&map.grid, top.to_vec()).derivative();
    let (p, q) = (map.node_level(&map.drho_dz, m), map.node_level(&map.drho_dx, m));
    let (v1, v2) = (v.level(m - 1), v.level(m - 2));
    let values = (0..n)
        .map(|i| {
            let dzv = w[0] * top[i] + w[1] * v1[i] + w[2] * v2[i];
            (1.0 + q[i] * q[i]) / p[i] * dzv - q[i] * dfx.values()[i]
        })
        .collect();
    SpectralFunction::from_values_unchecked(&map.grid, values)
}

/// `B = (eta' f' + g) / (1 + eta'^2)` and `V = f' - B eta'` with dealiased
/// products.
pub fn compute_b_v(f: &SpectralFunction, eta: &SpectralFunction, g: &SpectralFunction) -> (SpectralFunction, SpectralFunction) {
    let deta = eta.derivative();
    let df = f.derivative();
    let num = &deta.product(&df) + g;
    let b = num.zip_values(&deta, |a, s| a / (1.0 + s * s)).dealias(TWO_THIRDS);
    let v = (&df - &b.product(&deta)).dealias(TWO_THIRDS);
    (b, v)
}

/// Full pipeline: map, coefficients, solve, trace, `B` and `V`.
pub fn dn_apply(
    eta: &SpectralFunction,
    f: &SpectralFunction,
    geom: &DomainGeometry,
    side: Side,
    cfg: &DnConfig,
) -> Result<DnOutput> {
    let op = DnOperator::new(eta, geom, side, cfg)?;
    let (g, cert) = op.apply(f)?;
    let (b_field, v_field) = compute_b_v(&f.dealias(TWO_THIRDS), eta, &g);
    Ok(DnOutput { g, b_field, v_field, residual: cert.residual, iterations: cert.iterations })
}
