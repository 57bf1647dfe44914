//! Discrete paradifferential calculus on the torus.
//!
//! A symbol `a(x, xi)` is sampled on the `x` grid and evaluated at the
//! represented wavenumbers. Its quantization is
//!
//! ```text
//! (T_a u)^(k) = sum_m chi(k - m, m) a^(k - m, m) psi(m) u^(m)
//! ```
//!
//! where `a^(theta, xi)` is the Fourier coefficient in `x` of `a(., xi)`.
//! [`Quantized`] stores this as a sparse matrix on Fourier coefficients
//! (each column has `O(eps2 |m|)` entries) so that repeated applications,
//! compositions and adjoints are cheap.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dirichlet_neumann::{compute_b_v, DnConfig, DnOperator};
use crate::geometry::{DomainGeometry, EllipticCoefficients, Side};
use crate::krylov::{gmres, KrylovReport, KrylovSettings};
use crate::spectral::{last_block, SpectralFunction, TorusGrid, TWO_THIRDS};
use crate::{Error, Result};

type Kernel = dyn Fn(usize, f64) -> Complex64 + Send + Sync;

/// `a(x_i, xi)` with its order and a regularity tag (Hoelder index in `x`).
#[derive(Clone)]
pub struct SymbolField {
    grid: Arc<TorusGrid>,
    pub order: f64,
    pub regularity: f64,
    eval: Arc<Kernel>,
}

impl fmt::Debug for SymbolField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolField")
            .field("n", &self.grid.len())
            .field("order", &self.order)
            .field("regularity", &self.regularity)
            .finish()
    }
}

impl SymbolField {
    pub fn new(
        grid: &Arc<TorusGrid>,
        order: f64,
        regularity: f64,
        eval: impl Fn(usize, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self { grid: grid.clone(), order, regularity, eval: Arc::new(eval) }
    }

    /// `x`-independent symbol `m(xi)`.
    pub fn multiplier(grid: &Arc<TorusGrid>, order: f64, m: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::new(grid, order, f64::INFINITY, move |_, xi| m(xi))
    }

    /// Order-zero symbol `a(x)`; its quantization is the paraproduct.
    pub fn function(a: &SpectralFunction, regularity: f64) -> Self {
        let values: Vec<f64> = a.values().to_vec();
        Self::new(a.grid(), 0.0, regularity, move |i, _| Complex64::new(values[i], 0.0))
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn eval(&self, i: usize, xi: f64) -> Complex64 {
        (self.eval)(i, xi)
    }

    /// Pointwise product `a b` (orders add, regularity is the minimum).
    pub fn product(&self, other: &Self) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self::new(&self.grid, self.order + other.order, self.regularity.min(other.regularity), move |i, xi| {
            a(i, xi) * b(i, xi)
        })
    }

    /// Complex conjugate symbol.
    pub fn conj(&self) -> Self {
        let a = self.eval.clone();
        Self::new(&self.grid, self.order, self.regularity, move |i, xi| a(i, xi).conj())
    }

    /// `max |a(x, xi)| / (1 + |xi|)^order` over the grid and `|xi| >= 1/2`
    /// among the supplied frequencies.
    pub fn growth_constant(&self, xis: &[f64]) -> f64 {
        let mut c: f64 = 0.0;
        for &xi in xis.iter().filter(|xi| xi.abs() >= 0.5) {
            let w = libm::pow(1.0 + xi.abs(), self.order);
            for i in 0..self.grid.len() {
                c = c.max(self.eval(i, xi).norm() / w);
            }
        }
        c
    }
}

/// `S(t)`: smooth step, 0 for `t <= 0`, 1 for `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = libm::exp(-1.0 / t);
        let b = libm::exp(-1.0 / (1.0 - t));
        a / (a + b)
    }
}

/// High-pass `psi` and frequency-localising `chi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPair {
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for CutoffPair {
    fn default() -> Self {
        Self { eps1: 0.1, eps2: 0.2 }
    }
}

impl CutoffPair {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        if !(0.0 < eps1 && eps1 < eps2 && eps2 < 1.0) {
            return Err(Error::InvalidInput(alloc::format!("cutoff needs 0 < eps1 < eps2 < 1, got {eps1}, {eps2}")));
        }
        Ok(Self { eps1, eps2 })
    }

    /// 0 for `|xi| <= 1/5`, 1 for `|xi| >= 1/4`.
    pub fn psi(&self, xi: f64) -> f64 {
        smooth_step((xi.abs() - 0.2) / 0.05)
    }

    /// 1 for `|theta| <= eps1 |xi|`, 0 for `|theta| >= eps2 |xi|`.
    pub fn chi(&self, theta: f64, xi: f64) -> f64 {
        let (t, x) = (theta.abs(), xi.abs());
        if x == 0.0 {
            return if t == 0.0 { 1.0 } else { 0.0 };
        }
        1.0 - smooth_step((t / x - self.eps1) / (self.eps2 - self.eps1))
    }
}

/// Principal DN symbol of a one-dimensional interface: `|xi|` for every
/// `eta`, since `(1 + eta'^2) xi^2 - (eta' xi)^2 = xi^2`.
pub fn symbol_lambda(eta: &SpectralFunction) -> SymbolField {
    SymbolField::multiplier(eta.grid(), 1.0, |xi| Complex64::new(xi.abs(), 0.0))
}

/// `sqrt((1 + |grad eta|^2) |xi|^2 - (grad eta . xi)^2)` for a two-dimensional
/// interface at one point.
pub fn lambda_2d(grad_eta: [f64; 2], xi: [f64; 2]) -> f64 {
    let g2 = grad_eta[0] * grad_eta[0] + grad_eta[1] * grad_eta[1];
    let x2 = xi[0] * xi[0] + xi[1] * xi[1];
    let d = grad_eta[0] * xi[0] + grad_eta[1] * xi[1];
    libm::sqrt(((1.0 + g2) * x2 - d * d).max(0.0))
}

/// Factorization symbols on one `z` level:
/// `a, A = (-i beta xi -+ sqrt(4 alpha xi^2 - (beta xi)^2)) / 2`,
/// so that `a + A = -i beta xi` and `a A = -alpha xi^2`.
pub fn factorization_symbols(coeffs: &EllipticCoefficients, grid: &Arc<TorusGrid>, z_index: usize) -> Result<(SymbolField, SymbolField)> {
    let alpha = coeffs.level(&coeffs.alpha, z_index).to_vec();
    let beta = coeffs.level(&coeffs.beta, z_index).to_vec();
    if let Some(bad) = alpha.iter().find(|&&a| !(a > 0.0)) {
        return Err(Error::Coefficient(alloc::format!("alpha must be positive, found {bad:e}")));
    }
    for (a, b) in alpha.iter().zip(&beta) {
        let disc = 4.0 * a - b * b;
        if disc < -1e-12 * (4.0 * a) {
            return Err(Error::Coefficient(alloc::format!("negative discriminant {disc:e}")));
        }
    }
    let alpha = Arc::new(alpha);
    let beta = Arc::new(beta);
    let root = |alpha: &[f64], beta: &[f64], i: usize, xi: f64| {
        let d = (4.0 * alpha[i] - beta[i] * beta[i]).max(0.0);
        (Complex64::new(0.0, -beta[i] * xi), libm::sqrt(d) * xi.abs())
    };
    let (al, be) = (alpha.clone(), beta.clone());
    let small = SymbolField::new(grid, 1.0, f64::INFINITY, move |i, xi| {
        let (drift, s) = root(&al, &be, i, xi);
        (drift - s) * 0.5
    });
    let big = SymbolField::new(grid, 1.0, f64::INFINITY, move |i, xi| {
        let (drift, s) = root(&alpha, &beta, i, xi);
        (drift + s) * 0.5
    });
    Ok((small, big))
}

/// Ellipticity constant of the factorization on one level:
/// `Re(-a) = sqrt(4 alpha - beta^2) / 2 |xi| = dz rho / (1 + |dx rho|^2) |xi|`,
/// so `min_x sqrt(4 alpha - beta^2) / 2` is the sharp `c` in
/// `Re(-a) >= c |xi|`.
pub fn factorization_ellipticity(coeffs: &EllipticCoefficients, z_index: usize) -> f64 {
    coeffs
        .level(&coeffs.alpha, z_index)
        .iter()
        .zip(coeffs.level(&coeffs.beta, z_index))
        .map(|(a, b)| 0.5 * libm::sqrt((4.0 * a - b * b).max(0.0)))
        .fold(f64::INFINITY, f64::min)
}

/// Sparse matrix of `T_a` on Fourier coefficients (FFT slot order).
#[derive(Debug, Clone)]
pub struct Quantized {
    grid: Arc<TorusGrid>,
    /// `cols[m]` lists `(k, weight)` with `(T_a u)^(k) += weight u^(m)`.
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl Quantized {
    pub fn new(a: &SymbolField, cut: &CutoffPair) -> Self {
        let grid = a.grid().clone();
        let n = grid.len();
        let ks = grid.wavenumbers();
        let dk = grid.k_min();
        let mut cols = vec![Vec::new(); n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (m, col) in cols.iter_mut().enumerate() {
            let xi = ks[m];
            let psi = cut.psi(xi);
            if psi == 0.0 {
                continue;
            }
            for (i, b) in buf.iter_mut().enumerate() {
                *b = a.eval(i, xi);
            }
            grid.plan().forward(&mut buf);
            let reach = libm::ceil(cut.eps2 * xi.abs() / dk) as i64;
            let mode_m = grid.mode(m);
            for t in -reach..=reach {
                let theta = t as f64 * dk;
                let c = cut.chi(theta, xi);
                if c == 0.0 {
                    continue;
                }
                let (Some(k), Some(slot)) = (grid.index_of(mode_m + t), grid.index_of(t)) else {
                    continue;
                };
                col.push((k, buf[slot] * (c * psi)));
            }
        }
        Self { grid, cols }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn apply_coeffs(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
        for (m, col) in self.cols.iter().enumerate() {
            let um = u[m];
            if um == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(k, w) in col {
                out[k] += w * um;
            }
        }
        out
    }

    /// Real part of `T_a u` (exact for symbols with `a(x, -xi) = conj a(x, xi)`).
    pub fn apply(&self, u: &SpectralFunction) -> SpectralFunction {
        SpectralFunction::from_coeffs(&self.grid, &self.apply_coeffs(u.coeffs()))
    }

    /// `L^2` adjoint (conjugate transpose of the coefficient matrix).
    pub fn adjoint(&self) -> Self {
        let mut cols = vec![Vec::new(); self.cols.len()];
        for (m, col) in self.cols.iter().enumerate() {
            for &(k, w) in col {
                cols[k].push((m, w.conj()));
            }
        }
        Self { grid: self.grid.clone(), cols }
    }
}

/// `T_a u`.
pub fn apply_paradiff(a: &SymbolField, u: &SpectralFunction, cut: &CutoffPair) -> SpectralFunction {
    Quantized::new(a, cut).apply(u)
}

/// Paraproduct `T_a u` for a function `a(x)`.
pub fn paraproduct(a: &SpectralFunction, u: &SpectralFunction, cut: &CutoffPair) -> SpectralFunction {
    apply_paradiff(&SymbolField::function(a, 0.0), u, cut)
}

/// `R(a, u) = a u - T_a u - T_u a` with the dealiased product.
pub fn bony_remainder(a: &SpectralFunction, u: &SpectralFunction, cut: &CutoffPair) -> SpectralFunction {
    let au = a.product(u);
    let tau = paraproduct(a, u, cut);
    let tua = paraproduct(u, a, cut);
    &(&au - &tau) - &tua
}

/// Which symbol stands for `lambda` in the main term of the
/// paralinearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrincipalSymbol {
    /// `|xi|` exactly.
    Exact,
    /// The DN symbol of the discretisation at a flat interface
    /// (`|xi| + O(dz^2)`); removes the discretisation error of the linear
    /// part from the residual.
    #[default]
    Discrete,
}

/// One Littlewood-Paley row of the residual diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRatio {
    pub j: i32,
    pub residual_norm: f64,
    pub g_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Paralinearization {
    pub g: SpectralFunction,
    pub main: SpectralFunction,
    pub residual: SpectralFunction,
    pub blocks: Vec<BlockRatio>,
    pub dn_residual: f64,
}

/// `G(eta) f = T_lambda (f - T_B eta) - T_V eta' + R`: assembles the main
/// term from `B, V` of the computed DN output and returns the remainder
/// with its dyadic profile `|P_j R| / (2^(-j/2) |P_j g|)`.
pub fn paralinearize_dn(
    eta: &SpectralFunction,
    f: &SpectralFunction,
    geom: &DomainGeometry,
    cfg: &DnConfig,
    principal: PrincipalSymbol,
    cut: &CutoffPair,
) -> Result<Paralinearization> {
    let op = DnOperator::new(eta, geom, Side::Lower, cfg)?;
    let (g, cert) = op.apply(f)?;
    let (b, v) = compute_b_v(&f.dealias(TWO_THIRDS), eta, &g);
    let grid = eta.grid();
    let lambda = match principal {
        PrincipalSymbol::Exact => symbol_lambda(eta),
        PrincipalSymbol::Discrete => {
            let flat = DnOperator::new(&SpectralFunction::zeros(grid), geom, Side::Lower, cfg)?;
            let table: Vec<f64> = grid.wavenumbers().iter().map(|&k| flat.flat_response(k)).collect();
            let dk = grid.k_min();
            let g2 = grid.clone();
            SymbolField::multiplier(grid, 1.0, move |xi| {
                let m = libm::round(xi / dk) as i64;
                Complex64::new(g2.index_of(m).map_or(xi.abs(), |s| table[s]), 0.0)
            })
        }
    };
    let good = f - &paraproduct(&b, eta, cut);
    let main = &apply_paradiff(&lambda, &good, cut) - &paraproduct(&v, &eta.derivative(), cut);
    let residual = &g - &main;
    let blocks = (-1..=last_block(grid))
        .map(|j| {
            let rn = residual.lp_project(j).l2_norm();
            let gn = g.lp_project(j).l2_norm();
            let scale = libm::pow(2.0, -0.5 * j as f64);
            BlockRatio { j, residual_norm: rn, g_norm: gn, ratio: rn / (scale * gn + f64::EPSILON) }
        })
        .collect();
    Ok(Paralinearization { g, main, residual, blocks, dn_residual: cert.residual })
}

/// Result of [`parabolic_step`].
#[derive(Debug, Clone)]
pub struct ParabolicOutput {
    pub w: SpectralFunction,
    /// `int |P_j w(z)|^2 dz` (trapezoid over the march), index `j + 1`.
    pub block_energy: Vec<f64>,
    pub reports: Vec<KrylovReport>,
}

/// Crank-Nicolson march of `dz w + T_p w = forcing(z)` over `interval`.
/// Each implicit stage is solved by GMRES with the `x`-averaged symbol as
/// a multiplier preconditioner. Requires `Re p(x, xi) >= c |xi|`, `c > 0`.
pub fn parabolic_step(
    p: &SymbolField,
    w0: &SpectralFunction,
    forcing: Option<&dyn Fn(f64) -> SpectralFunction>,
    interval: (f64, f64),
    steps: usize,
    cut: &CutoffPair,
    settings: KrylovSettings,
) -> Result<ParabolicOutput> {
    let grid = w0.grid().clone();
    let n = grid.len();
    let ks = grid.wavenumbers().to_vec();
    let ell = ks
        .iter()
        .filter(|k| k.abs() >= 1.0)
        .flat_map(|&k| (0..n).map(move |i| (i, k)))
        .map(|(i, k)| p.eval(i, k).re / k.abs())
        .fold(f64::INFINITY, f64::min);
    if !(ell > 0.0) {
        return Err(Error::Coefficient(alloc::format!("symbol is not elliptic: min Re p / |xi| = {ell:e}")));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("parabolic march needs at least one step".into()));
    }
    let tp = Quantized::new(p, cut);
    let h = (interval.1 - interval.0) / steps as f64;
    let mean_symbol: Vec<f64> = ks
        .iter()
        .map(|&k| (0..n).map(|i| p.eval(i, k).re).sum::<f64>() / n as f64 * cut.psi(k))
        .collect();
    let blocks = (last_block(&grid) + 2) as usize;
    let block_sq = |w: &SpectralFunction| -> Vec<f64> {
        (0..blocks).map(|b| {
            let x = w.lp_project(b as i32 - 1).l2_norm();
            x * x
        }).collect()
    };
    let mut w = w0.clone();
    let mut energy = vec![0.0; blocks];
    let mut prev = block_sq(&w);
    let mut reports = Vec::with_capacity(steps);
    for s in 0..steps {
        let z0 = interval.0 + s as f64 * h;
        let tw = tp.apply(&w);
        let mut rhs = &w - &tw.scale(0.5 * h);
        if let Some(f) = forcing {
            rhs = &rhs + &(&f(z0) + &f(z0 + h)).scale(0.5 * h);
        }
        let mut x = w.values().to_vec();
        let report = gmres(
            "parabolic GMRES",
            |xv, yv| {
                let u = SpectralFunction::from_values_unchecked(&grid, xv.to_vec());
                let tu = tp.apply(&u);
                for ((y, a), b) in yv.iter_mut().zip(xv).zip(tu.values()) {
                    *y = a + 0.5 * h * b;
                }
                Ok(())
            },
            |r, z| {
                let u = SpectralFunction::from_values_unchecked(&grid, r.to_vec());
                let mut c = u.coeffs().to_vec();
                for (ci, m) in c.iter_mut().zip(&mean_symbol) {
                    *ci /= 1.0 + 0.5 * h * m;
                }
                z.copy_from_slice(&grid.inverse_real(&c));
            },
            rhs.values(),
            &mut x,
            40,
            settings,
        )?;
        reports.push(report);
        w = SpectralFunction::from_values_unchecked(&grid, x);
        let next = block_sq(&w);
        for ((e, a), b) in energy.iter_mut().zip(&prev).zip(&next) {
            *e += 0.5 * h * (a + b);
        }
        prev = next;
    }
    Ok(ParabolicOutput { w, block_energy: energy, reports })
}

/// Fixed test corpus: `count` real functions with independent uniform
/// Fourier coefficients on `1 <= |k| <= band * k_max`. Function `i` is drawn
/// from its own stream (`seed + i`) in increasing `k`, so the corpus on a
/// finer grid extends the coarse one.
pub fn random_corpus(grid: &Arc<TorusGrid>, count: usize, seed: u64, band: f64) -> Vec<SpectralFunction> {
    let kmax = libm::floor(band * grid.len() as f64 / 2.0) as i64;
    let n = grid.len();
    (0..count as u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            let mut uniform = || (rng.next_u64() >> 11) as f64 * libm::ldexp(1.0, -53) * 2.0 - 1.0;
            let mut c = vec![Complex64::new(0.0, 0.0); n];
            for k in 1..=kmax {
                let z = Complex64::new(uniform(), uniform());
                if let (Some(p), Some(q)) = (grid.index_of(k), grid.index_of(-k)) {
                    c[p] = z;
                    c[q] = z.conj();
                }
            }
            SpectralFunction::from_coeffs(grid, &c)
        })
        .collect()
}

/// `max_u |op u|_{H^s_out} / |u|_{H^s_in}` over a corpus: a lower bound
/// for the operator norm between the two Sobolev spaces.
pub fn rayleigh_surrogate(
    corpus: &[SpectralFunction],
    s_in: f64,
    s_out: f64,
    mut op: impl FnMut(&[Complex64]) -> Vec<Complex64>,
) -> f64 {
    let mut best: f64 = 0.0;
    for u in corpus {
        let grid = u.grid();
        let out = op(u.coeffs());
        let num = sobolev_of_coeffs(grid, &out, s_out);
        let den = u.sobolev_norm(s_in);
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    best
}

/// Sobolev norm of a (possibly complex) coefficient vector, same
/// convention as [`SpectralFunction::sobolev_norm`].
pub fn sobolev_of_coeffs(grid: &TorusGrid, c: &[Complex64], s: f64) -> f64 {
    let sum: f64 = grid
        .wavenumbers()
        .iter()
        .zip(c)
        .map(|(k, z)| libm::pow(1.0 + k * k, s) * z.norm_sqr())
        .sum();
    libm::sqrt(grid.period() * sum)
}
