//! Periodic spectral substrate.
//!
//! Functions live on the torus `[0, period)` sampled at `n` equispaced
//! points. Fourier coefficients use the convention
//! `u(x) = sum_k u_k e^{i k x}` with `u_k = (1/n) sum_j u(x_j) e^{-i k x_j}`,
//! so that `int_0^period |u|^2 dx = period * sum_k |u_k|^2`.

mod fft;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

pub use fft::Fft;

use crate::{Error, Result};

/// Default dealiasing fraction (the 2/3 rule).
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Equispaced periodic grid with its transform plan.
#[derive(Debug)]
pub struct TorusGrid {
    n: usize,
    period: f64,
    wavenumbers: Vec<f64>,
    plan: Fft,
}

impl TorusGrid {
    pub fn new(n: usize, period: f64) -> Result<Arc<Self>> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(alloc::format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidInput(alloc::format!("period must be positive, got {period}")));
        }
        let scale = 2.0 * PI / period;
        let wavenumbers = (0..n).map(|j| mode_of_index(j, n) as f64 * scale).collect();
        Ok(Arc::new(Self { n, period, wavenumbers, plan: Fft::new(n) }))
    }

    /// Grid on `[0, 2 pi)`.
    pub fn periodic(n: usize) -> Result<Arc<Self>> {
        Self::new(n, 2.0 * PI)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dx(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Scaled wavenumbers in FFT order; index `n/2` carries `-n/2`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Integer mode number of FFT slot `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        mode_of_index(idx, self.n)
    }

    /// FFT slot of integer mode `m`, if representable.
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if m < -half || m >= half {
            None
        } else if m >= 0 {
            Some(m as usize)
        } else {
            Some((m + self.n as i64) as usize)
        }
    }

    /// Largest represented `|k|` (the Nyquist wavenumber).
    pub fn k_max(&self) -> f64 {
        (self.n / 2) as f64 * 2.0 * PI / self.period
    }

    /// Smallest nonzero `|k|`.
    pub fn k_min(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn plan(&self) -> &Fft {
        &self.plan
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plan.forward(&mut buf);
        buf
    }

    /// Real part of the synthesis of `coeffs`.
    pub fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.plan.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Spectral x-derivatives of two real sample vectors with one complex
    /// transform pair. The Nyquist mode is dropped so that the discrete
    /// derivative is exactly antisymmetric.
    pub fn derivative_pair(&self, a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64], scratch: &mut [Complex64]) {
        for ((s, &x), &y) in scratch.iter_mut().zip(a).zip(b) {
            *s = Complex64::new(x, y);
        }
        self.plan.forward(scratch);
        for (j, s) in scratch.iter_mut().enumerate() {
            *s = if j == self.n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                *s * Complex64::new(0.0, self.wavenumbers[j])
            };
        }
        self.plan.inverse(scratch);
        for ((s, x), y) in scratch.iter().zip(da.iter_mut()).zip(db.iter_mut()) {
            *x = s.re;
            *y = s.im;
        }
    }
}

fn mode_of_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Real periodic function held as samples and Fourier coefficients.
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    grid: Arc<TorusGrid>,
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralFunction {
    fn eq(&self, other: &Self) -> bool {
        self.grid.n == other.grid.n && self.grid.period == other.grid.period && self.values == other.values
    }
}

impl SpectralFunction {
    pub fn from_values(grid: &Arc<TorusGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(alloc::format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(Self::from_values_unchecked(grid, values))
    }

    pub(crate) fn from_values_unchecked(grid: &Arc<TorusGrid>, values: Vec<f64>) -> Self {
        let coeffs = grid.forward(&values);
        Self { grid: grid.clone(), values, coeffs }
    }

    /// Builds the real function whose coefficients are the Hermitian part of
    /// `coeffs`.
    pub fn from_coeffs(grid: &Arc<TorusGrid>, coeffs: &[Complex64]) -> Self {
        let values = grid.inverse_real(coeffs);
        Self::from_values_unchecked(grid, values)
    }

    pub fn from_fn(grid: &Arc<TorusGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().map(f).collect();
        Self::from_values_unchecked(grid, values)
    }

    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<TorusGrid>, c: f64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        coeffs[0] = Complex64::new(c, 0.0);
        Self { grid: grid.clone(), values: vec![c; grid.len()], coeffs }
    }

    /// Sum of cosine modes `sum amp * cos(k x)` with integer `k`.
    pub fn cosine_modes(grid: &Arc<TorusGrid>, modes: &[(i64, f64)]) -> Self {
        let s = 2.0 * PI / grid.period();
        Self::from_fn(grid, |x| modes.iter().map(|&(k, a)| a * libm::cos(k as f64 * s * x)).sum())
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multiplies every coefficient by `m(k)` (scaled wavenumber).
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> Complex64) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (c, &k) in self.coeffs.iter().zip(self.grid.wavenumbers()) {
            let w = m(k);
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::InvalidInput(alloc::format!("multiplier not finite at k = {k}")));
            }
            coeffs.push(c * w);
        }
        Ok(Self::from_coeffs(&self.grid, &coeffs))
    }

    /// Real multiplier that is known to be finite.
    pub fn map_spectrum(&self, m: impl Fn(f64) -> f64) -> Self {
        let coeffs: Vec<Complex64> =
            self.coeffs.iter().zip(self.grid.wavenumbers()).map(|(c, &k)| c * m(k)).collect();
        Self::from_coeffs(&self.grid, &coeffs)
    }

    /// Spectral derivative; the Nyquist mode is dropped.
    pub fn derivative(&self) -> Self {
        let half = self.grid.len() / 2;
        let coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(self.grid.wavenumbers())
            .enumerate()
            .map(|(j, (c, &k))| if j == half { Complex64::new(0.0, 0.0) } else { c * Complex64::new(0.0, k) })
            .collect();
        Self::from_coeffs(&self.grid, &coeffs)
    }

    /// `(sum_k (1 + k^2)^s |u_k|^2 * period)^(1/2)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(self.grid.wavenumbers())
            .map(|(c, &k)| libm::pow(1.0 + k * k, s) * c.norm_sqr())
            .sum();
        libm::sqrt(sum * self.grid.period())
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// `int u v dx` over one period.
    pub fn inner(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.dx()
    }

    /// Littlewood-Paley block: `2^j <= |k| < 2^(j+1)` for `j >= 0`, `|k| < 1`
    /// for `j = -1`.
    pub fn lp_project(&self, j: i32) -> Self {
        let (lo, hi) = dyadic_band(j);
        self.map_spectrum(|k| {
            let a = k.abs();
            if a >= lo && a < hi {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Zeroes modes with `|k| > rule * k_max`.
    pub fn dealias(&self, rule: f64) -> Self {
        let cut = rule * self.grid.k_max();
        let tol = 1e-9 * self.grid.k_min();
        self.map_spectrum(|k| if k.abs() > cut + tol { 0.0 } else { 1.0 })
    }

    /// Pointwise product without any filtering.
    pub fn pointwise_product(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    /// 2/3-rule dealiased product: both factors and the result are filtered.
    pub fn product(&self, other: &Self) -> Self {
        self.dealias(TWO_THIRDS).pointwise_product(&other.dealias(TWO_THIRDS)).dealias(TWO_THIRDS)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_values(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_values(|v| s * v)
    }

    /// `(k, Re u_k, Im u_k)` rows sorted by increasing `k`.
    pub fn spectrum_rows(&self) -> Vec<(f64, f64, f64)> {
        let n = self.grid.len();
        (0..n)
            .map(|i| (i + n / 2) % n)
            .map(|j| (self.grid.wavenumbers()[j], self.coeffs[j].re, self.coeffs[j].im))
            .collect()
    }
}

/// Frequency band `[lo, hi)` of dyadic block `j`.
pub fn dyadic_band(j: i32) -> (f64, f64) {
    if j < 0 {
        (0.0, 1.0)
    } else {
        (libm::ldexp(1.0, j), libm::ldexp(1.0, j + 1))
    }
}

/// Index of the last dyadic block that intersects the grid's modes.
pub fn last_block(grid: &TorusGrid) -> i32 {
    let mut j = 0;
    while dyadic_band(j + 1).0 <= grid.k_max() {
        j += 1;
    }
    j
}

impl Add for &SpectralFunction {
    type Output = SpectralFunction;
    fn add(self, rhs: &SpectralFunction) -> SpectralFunction {
        self.zip_values(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralFunction {
    type Output = SpectralFunction;
    fn sub(self, rhs: &SpectralFunction) -> SpectralFunction {
        self.zip_values(rhs, |a, b| a - b)
    }
}

impl Neg for &SpectralFunction {
    type Output = SpectralFunction;
    fn neg(self) -> SpectralFunction {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SpectralFunction {
    type Output = SpectralFunction;
    fn mul(self, rhs: f64) -> SpectralFunction {
        self.scale(rhs)
    }
}
