//! Fluid domains and straightening maps.
//!
//! A straightening map sends the product strip `(x, z)`, `z in [z0, 0]`, onto
//! the fluid region below a graph interface `y = eta(x)`. The mapped Laplace
//! equation reads `div_{x,z}(A grad v) = 0` with
//!
//! ```text
//!     A = [ dz rho        -dx rho              ]
//!         [ -dx rho       (1 + |dx rho|^2) / dz rho ]
//! ```
//!
//! Everything here is written for the *lower* fluid. The upper fluid is
//! handled by reflection `y -> -y` (see [`DomainGeometry::lower_form`]).

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::spectral::{last_block, SpectralFunction, TorusGrid};
use crate::{Error, Result};

/// One rigid boundary of the fluid column.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    /// No boundary (infinite depth); truncated numerically.
    Empty,
    /// Flat wall at distance `H` from `y = 0`.
    FlatDepth(f64),
    /// Wall along a sampled graph. For a bottom this is `b-(x)` (negative
    /// below the interface), for a top `b+(x)`.
    Sampled(SpectralFunction),
}

/// Which fluid a Dirichlet-Neumann problem lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Boundaries of both fluids and the required separation `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGeometry {
    pub bottom: Boundary,
    pub top: Boundary,
    pub h: f64,
    /// Depth `L` of the artificial wall used for empty boundaries. `None`
    /// selects `max(3 * period, 10 / k_min)`.
    pub truncation_depth: Option<f64>,
}

impl DomainGeometry {
    pub fn infinite(h: f64) -> Self {
        Self { bottom: Boundary::Empty, top: Boundary::Empty, h, truncation_depth: None }
    }

    pub fn flat(depth: f64, h: f64) -> Self {
        Self { bottom: Boundary::FlatDepth(depth), top: Boundary::Empty, h, truncation_depth: None }
    }

    pub fn with_top(mut self, top: Boundary) -> Self {
        self.top = top;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidInput(alloc::format!("separation h must be positive, got {}", self.h)));
        }
        for b in [&self.bottom, &self.top] {
            if let Boundary::FlatDepth(d) = b {
                if !(*d > self.h) {
                    return Err(Error::InvalidInput(alloc::format!("flat depth {d} must exceed h = {}", self.h)));
                }
            }
        }
        if let Some(l) = self.truncation_depth {
            if !(l.is_finite() && l > self.h) {
                return Err(Error::InvalidInput(alloc::format!("truncation depth {l} must exceed h")));
            }
        }
        Ok(())
    }

    pub fn truncation_depth_for(&self, grid: &TorusGrid) -> f64 {
        self.truncation_depth.unwrap_or_else(|| (3.0 * grid.period()).max(10.0 / grid.k_min()))
    }

    fn boundary(&self, side: Side) -> &Boundary {
        match side {
            Side::Lower => &self.bottom,
            Side::Upper => &self.top,
        }
    }

    /// Whether the fluid on `side` is infinitely deep.
    pub fn is_infinite(&self, side: Side) -> bool {
        matches!(self.boundary(side), Boundary::Empty)
    }

    /// Depth for flat-multiplier formulas: `None` for infinite depth.
    pub fn flat_depth(&self, side: Side) -> Option<f64> {
        match self.boundary(side) {
            Boundary::Empty => None,
            Boundary::FlatDepth(d) => Some(*d),
            Boundary::Sampled(b) => Some(match side {
                Side::Lower => -b.mean(),
                Side::Upper => b.mean(),
            }),
        }
    }

    /// The problem on `side` rewritten as a lower-fluid problem: returns the
    /// interface and the bottom level. The upper fluid is reflected through
    /// `y = 0`, so its interface becomes `-eta` and its wall `-b+`.
    pub fn lower_form(&self, eta: &SpectralFunction, side: Side) -> (SpectralFunction, SpectralFunction) {
        let grid = eta.grid();
        let l = self.truncation_depth_for(grid);
        let level = match (self.boundary(side), side) {
            (Boundary::Empty, _) => SpectralFunction::constant(grid, -l),
            (Boundary::FlatDepth(d), _) => SpectralFunction::constant(grid, -d),
            (Boundary::Sampled(b), Side::Lower) => b.clone(),
            (Boundary::Sampled(b), Side::Upper) => -b,
        };
        match side {
            Side::Lower => (eta.clone(), level),
            Side::Upper => (-eta, level),
        }
    }

    /// `min_x` vertical distance from the interface to the wall on `side`;
    /// `None` for an empty boundary.
    pub fn min_gap(&self, eta: &SpectralFunction, side: Side) -> Option<f64> {
        if self.is_infinite(side) {
            return None;
        }
        let (iface, level) = self.lower_form(eta, side);
        Some((&iface - &level).min())
    }

    pub fn check_separation(&self, eta: &SpectralFunction, side: Side) -> Result<()> {
        match self.min_gap(eta, side) {
            Some(gap) if !(gap >= self.h) => Err(Error::Geometry { min_gap: gap, required: self.h }),
            _ => Ok(()),
        }
    }
}

/// Node placement in `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZSpacing {
    Uniform,
    /// Exponential clustering toward `z = 0` with strength `c`.
    Stretched(f64),
    /// `z = cos(pi s / 2) - 1`.
    Cosine,
    /// Exponential clustering with strength chosen from the column depth.
    Auto,
}

/// Strength of [`ZSpacing::Auto`] for a column of physical depth `depth`.
pub fn auto_stretch(depth: f64) -> f64 {
    (4.0 + 0.7 * libm::log(depth.max(1e-3))).clamp(0.0, 8.0)
}

/// `cells + 1` increasing nodes from `-1` to `0`.
pub fn z_nodes(cells: usize, spacing: ZSpacing, depth: f64) -> Vec<f64> {
    let m = cells as f64;
    let spacing = match spacing {
        ZSpacing::Auto => ZSpacing::Stretched(auto_stretch(depth)),
        s => s,
    };
    let mut z: Vec<f64> = (0..=cells)
        .map(|j| {
            let s = (cells - j) as f64 / m;
            match spacing {
                ZSpacing::Uniform => -s,
                ZSpacing::Stretched(c) if c.abs() < 1e-12 => -s,
                ZSpacing::Stretched(c) => -libm::expm1(c * s) / libm::expm1(c),
                ZSpacing::Cosine => libm::cos(0.5 * PI * s) - 1.0,
                ZSpacing::Auto => unreachable!(),
            }
        })
        .collect();
    z[0] = -1.0;
    z[cells] = 0.0;
    z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// `rho = eta + z (eta - b)` over the whole column.
    Sigma,
    /// Smoothed near-surface strip `eta - h < y < eta`, optionally extended
    /// by a sigma patch down to the wall.
    NearSurface,
}

/// Samples of a straightening map on the `(x, z)` product grid, stored
/// level by level (`index = j * n + i`).
#[derive(Debug, Clone)]
pub struct StraightenedMap {
    pub kind: MapKind,
    pub grid: Arc<TorusGrid>,
    /// Increasing nodes ending at `z = 0`.
    pub z: Vec<f64>,
    pub rho: Vec<f64>,
    pub drho_dz: Vec<f64>,
    pub drho_dx: Vec<f64>,
    /// Cell-midpoint values of `dz rho` and `dx rho`.
    pub mid_drho_dz: Vec<f64>,
    pub mid_drho_dx: Vec<f64>,
    pub tau: f64,
    pub h: f64,
    /// Node index of `z = -1`, the base of the near-surface strip.
    pub strip_base: usize,
}

impl StraightenedMap {
    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn cells(&self) -> usize {
        self.z.len() - 1
    }

    pub fn node_level<'a>(&self, field: &'a [f64], j: usize) -> &'a [f64] {
        let n = self.n();
        &field[j * n..(j + 1) * n]
    }

    pub fn min_drho_dz(&self) -> f64 {
        self.drho_dz.iter().chain(&self.mid_drho_dz).copied().fold(f64::INFINITY, f64::min)
    }

    /// `(x, z, rho)` rows for plotting.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let n = self.n();
        let mut out = Vec::with_capacity(self.rho.len());
        for (j, &z) in self.z.iter().enumerate() {
            for i in 0..n {
                out.push((self.grid.x(i), z, self.rho[j * n + i]));
            }
        }
        out
    }
}

fn push_level(dst: &mut Vec<f64>, f: &SpectralFunction) {
    dst.extend_from_slice(f.values());
}

/// Sigma map for the fluid on `side` (after reflection for the upper
/// fluid), `cells` intervals in `z`.
pub fn build_sigma_map(
    eta: &SpectralFunction,
    geom: &DomainGeometry,
    side: Side,
    cells: usize,
    spacing: ZSpacing,
) -> Result<StraightenedMap> {
    geom.validate()?;
    if cells < 8 {
        return Err(Error::InvalidInput(alloc::format!("need at least 8 z cells, got {cells}")));
    }
    geom.check_separation(eta, side)?;
    let (iface, bottom) = geom.lower_form(eta, side);
    let depth = &iface - &bottom;
    let z = z_nodes(cells, spacing, depth.mean());
    let d_iface = iface.derivative();
    let d_bottom = bottom.derivative();
    let slope_gap = &d_iface - &d_bottom;

    let n = eta.grid().len();
    let mut rho = Vec::with_capacity((cells + 1) * n);
    let mut drho_dz = Vec::with_capacity((cells + 1) * n);
    let mut drho_dx = Vec::with_capacity((cells + 1) * n);
    for &zj in &z {
        for i in 0..n {
            rho.push(iface.values()[i] + zj * depth.values()[i]);
            drho_dz.push(depth.values()[i]);
            drho_dx.push(d_iface.values()[i] + zj * slope_gap.values()[i]);
        }
    }
    let mut mid_drho_dz = Vec::with_capacity(cells * n);
    let mut mid_drho_dx = Vec::with_capacity(cells * n);
    for w in z.windows(2) {
        let zm = 0.5 * (w[0] + w[1]);
        push_level(&mut mid_drho_dz, &depth);
        mid_drho_dx.extend((0..n).map(|i| d_iface.values()[i] + zm * slope_gap.values()[i]));
    }
    Ok(StraightenedMap {
        kind: MapKind::Sigma,
        grid: eta.grid().clone(),
        z,
        rho,
        drho_dz,
        drho_dx,
        mid_drho_dz,
        mid_drho_dx,
        tau: 0.0,
        h: geom.h,
        strip_base: 0,
    })
}

/// `sum_j 2^j |P_j eta|_inf`, a proxy for the `B^1_{inf,1}` norm.
pub fn besov_proxy(eta: &SpectralFunction) -> f64 {
    (-1..=last_block(eta.grid()))
        .map(|j| libm::ldexp(1.0, j) * eta.lp_project(j).sup_norm())
        .sum()
}

/// Default smoothing parameter `h / (4 (1 + proxy))`.
pub fn default_tau(eta: &SpectralFunction, h: f64) -> f64 {
    h / (4.0 * (1.0 + besov_proxy(eta)))
}

/// The fields `e^{tau z <D>} eta`, `e^{-(1+z) tau <D>} eta` and their `<D>` images.
struct SmoothedLevels {
    up: SpectralFunction,
    up_d: SpectralFunction,
    down: SpectralFunction,
    down_d: SpectralFunction,
}

fn smoothed_levels(eta: &SpectralFunction, tau: f64, z: f64) -> SmoothedLevels {
    let bracket = |k: f64| libm::sqrt(1.0 + k * k);
    let up = eta.map_spectrum(|k| libm::exp(tau * z * bracket(k)));
    let down = eta.map_spectrum(|k| libm::exp(-(1.0 + z) * tau * bracket(k)));
    SmoothedLevels { up_d: up.map_spectrum(bracket), up, down_d: down.map_spectrum(bracket), down }
}

/// Near-surface values `(rho, dz rho)` at one level `z in [-1, 0]`.
fn near_surface_level(eta: &SpectralFunction, h: f64, tau: f64, z: f64) -> (Vec<f64>, Vec<f64>) {
    let s = smoothed_levels(eta, tau, z);
    let n = eta.grid().len();
    let mut rho = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    for i in 0..n {
        let (u, ud, d, dd) = (s.up.values()[i], s.up_d.values()[i], s.down.values()[i], s.down_d.values()[i]);
        rho.push((1.0 + z) * u - z * (d - h));
        dz.push(u + (1.0 + z) * tau * ud - (d - h) + z * tau * dd);
    }
    (rho, dz)
}

fn x_derivative(grid: &Arc<TorusGrid>, v: &[f64]) -> Vec<f64> {
    SpectralFunction::from_values_unchecked(grid, v.to_vec()).derivative().into_values()
}

/// Smoothed near-surface map on `z in [-1, 0]` covering `eta - h < y < eta`.
///
/// With `lower = Some((bottom, cells))` the grid is extended to
/// `z in [-2, -1]` by a sigma patch from `eta - h` down to `bottom`, so the
/// map covers the whole column. `tau = None` selects [`default_tau`].
pub fn build_near_surface_map(
    eta: &SpectralFunction,
    h: f64,
    tau: Option<f64>,
    strip_cells: usize,
    spacing: ZSpacing,
    lower: Option<(&SpectralFunction, usize)>,
) -> Result<StraightenedMap> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(alloc::format!("h must be positive, got {h}")));
    }
    if strip_cells < 8 {
        return Err(Error::InvalidInput(alloc::format!("need at least 8 z cells, got {strip_cells}")));
    }
    let tau = tau.unwrap_or_else(|| default_tau(eta, h));
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidInput(alloc::format!("tau must be nonnegative, got {tau}")));
    }
    let grid = eta.grid().clone();
    let n = grid.len();
    let strip_z = z_nodes(strip_cells, spacing, h);

    let mut z = Vec::new();
    let mut rho = Vec::new();
    let mut drho_dz = Vec::new();
    let mut drho_dx = Vec::new();
    let mut mid_drho_dz = Vec::new();
    let mut mid_drho_dx = Vec::new();

    let mut strip_base = 0;
    if let Some((bottom, lower_cells)) = lower {
        if lower_cells < 2 {
            return Err(Error::InvalidInput("lower patch needs at least 2 cells".into()));
        }
        let top = eta.map_values(|v| v - h);
        let thick = &top - bottom;
        if !(thick.min() > 0.0) {
            return Err(Error::Geometry { min_gap: (eta - bottom).min(), required: h });
        }
        let d_top = top.derivative();
        let d_thick = thick.derivative();
        let lz = z_nodes(lower_cells, ZSpacing::Uniform, 1.0);
        // s = z + 1 in [-1, 0]
        for &s in &lz[..lower_cells] {
            z.push(s - 1.0);
            for i in 0..n {
                rho.push(top.values()[i] + s * thick.values()[i]);
                drho_dz.push(thick.values()[i]);
                drho_dx.push(d_top.values()[i] + s * d_thick.values()[i]);
            }
        }
        for w in lz.windows(2) {
            let sm = 0.5 * (w[0] + w[1]);
            push_level(&mut mid_drho_dz, &thick);
            mid_drho_dx.extend((0..n).map(|i| d_top.values()[i] + sm * d_thick.values()[i]));
        }
        strip_base = lower_cells;
    }

    for &zj in &strip_z {
        let (r, d) = near_surface_level(eta, h, tau, zj);
        z.push(zj);
        drho_dx.extend(x_derivative(&grid, &r));
        rho.extend(r);
        drho_dz.extend(d);
    }
    for w in strip_z.windows(2) {
        let (r, d) = near_surface_level(eta, h, tau, 0.5 * (w[0] + w[1]));
        mid_drho_dx.extend(x_derivative(&grid, &r));
        mid_drho_dz.extend(d);
    }

    let map = StraightenedMap {
        kind: MapKind::NearSurface,
        grid,
        z,
        rho,
        drho_dz,
        drho_dx,
        mid_drho_dz,
        mid_drho_dx,
        tau,
        h,
        strip_base,
    };
    let threshold = 1.0f64.min(0.5 * h);
    let strip_min = map.drho_dz[strip_base * n..]
        .iter()
        .chain(&map.mid_drho_dz[strip_base * n..])
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(strip_min >= threshold) {
        return Err(Error::MapValidity { min_dz_rho: strip_min, threshold });
    }
    Ok(map)
}

/// Coefficients of the mapped elliptic operator at the grid nodes.
#[derive(Debug, Clone)]
pub struct EllipticCoefficients {
    pub n: usize,
    pub z: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Entries of the symmetric matrix `A`: `a11 = dz rho`, `a12 = -dx rho`,
    /// `a22 = (1 + |dx rho|^2) / dz rho`.
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
}

impl EllipticCoefficients {
    /// `max |det A - 1|` over the nodes.
    pub fn det_defect(&self) -> f64 {
        self.a11
            .iter()
            .zip(&self.a12)
            .zip(&self.a22)
            .map(|((p, q), r)| (p * r - q * q - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn level<'a>(&self, field: &'a [f64], j: usize) -> &'a [f64] {
        &field[j * self.n..(j + 1) * self.n]
    }
}

/// Second derivative of the quadratic through three (possibly unequal) nodes.
fn second_derivative_weights(x0: f64, x1: f64, x2: f64) -> [f64; 3] {
    [2.0 / ((x0 - x1) * (x0 - x2)), 2.0 / ((x1 - x0) * (x1 - x2)), 2.0 / ((x2 - x0) * (x2 - x1))]
}

/// `alpha, beta, gamma` and `A` from the map samples. `x` derivatives are
/// spectral; `dz^2 rho` uses three-point differences on the `z` nodes.
pub fn coefficients_from_map(map: &StraightenedMap) -> Result<EllipticCoefficients> {
    let n = map.n();
    let nodes = map.z.len();
    let min = map.min_drho_dz();
    if !(min > 0.0) {
        return Err(Error::MapValidity { min_dz_rho: min, threshold: 0.0 });
    }
    let grid = &map.grid;
    let mut alpha = vec![0.0; nodes * n];
    let mut beta = vec![0.0; nodes * n];
    let mut gamma = vec![0.0; nodes * n];
    let mut a11 = vec![0.0; nodes * n];
    let mut a12 = vec![0.0; nodes * n];
    let mut a22 = vec![0.0; nodes * n];
    for j in 0..nodes {
        let rho = SpectralFunction::from_values_unchecked(grid, map.node_level(&map.rho, j).to_vec());
        let lap_rho = rho.derivative().derivative();
        let dz_level = map.node_level(&map.drho_dz, j);
        let dxdz = x_derivative(grid, dz_level);
        let (a, b, c) = match j {
            0 => (0, 1, 2),
            j if j == nodes - 1 => (j - 2, j - 1, j),
            j => (j - 1, j, j + 1),
        };
        let w = second_derivative_weights(map.z[a], map.z[b], map.z[c]);
        let (ra, rb, rc) = (map.node_level(&map.rho, a), map.node_level(&map.rho, b), map.node_level(&map.rho, c));
        let dx_level = map.node_level(&map.drho_dx, j);
        for i in 0..n {
            let p = dz_level[i];
            let q = dx_level[i];
            let g = 1.0 + q * q;
            let al = p * p / g;
            let be = -2.0 * p * q / g;
            let dzz = w[0] * ra[i] + w[1] * rb[i] + w[2] * rc[i];
            let k = j * n + i;
            alpha[k] = al;
            beta[k] = be;
            gamma[k] = (dzz + al * lap_rho.values()[i] + be * dxdz[i]) / p;
            a11[k] = p;
            a12[k] = -q;
            a22[k] = g / p;
        }
    }
    Ok(EllipticCoefficients { n, z: map.z.clone(), alpha, beta, gamma, a11, a12, a22 })
}
