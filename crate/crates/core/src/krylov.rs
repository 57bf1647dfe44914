//! Matrix-free Krylov solvers used by the elliptic, interface and time
//! stepping layers. Operators are closures `(x, y) -> y = A x` that may fail
//! (nested solves propagate their errors).

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Convergence record of one Krylov solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|`.
    pub residual: f64,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl KrylovSettings {
    pub const fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Preconditioned conjugate gradients for symmetric positive (semi)definite
/// operators. `x` holds the initial guess on entry.
pub fn pcg<A, P>(
    name: &'static str,
    mut apply: A,
    mut precond: P,
    b: &[f64],
    x: &mut [f64],
    settings: KrylovSettings,
) -> Result<KrylovReport>
where
    A: FnMut(&[f64], &mut [f64]) -> Result<()>,
    P: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovReport::default());
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut history = vec![norm(&r) / bnorm];
    if history[0] <= settings.tol {
        return Ok(KrylovReport { iterations: 0, residual: history[0], history });
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=settings.max_iter {
        apply(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= settings.tol {
            return Ok(KrylovReport { iterations: it, residual: rel, history });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver { solver: name, iterations: history.len() - 1, residual_history: history })
}

/// Restarted GMRES with right preconditioning for nonsymmetric operators.
pub fn gmres<A, P>(
    name: &'static str,
    mut apply: A,
    mut precond: P,
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    settings: KrylovSettings,
) -> Result<KrylovReport>
where
    A: FnMut(&[f64], &mut [f64]) -> Result<()>,
    P: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovReport::default());
    }
    let m = restart.max(1);
    let mut history = Vec::new();
    let mut total = 0;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut zbuf = vec![0.0; n];
    loop {
        apply(x, &mut r)?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        if history.is_empty() {
            history.push(rel);
        }
        if rel <= settings.tol {
            return Ok(KrylovReport { iterations: total, residual: rel, history });
        }
        if total >= settings.max_iter {
            return Err(Error::Solver { solver: name, iterations: total, residual_history: history });
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut k = 0;
        while k < m && total < settings.max_iter {
            precond(&basis[k], &mut zbuf);
            apply(&zbuf, &mut w)?;
            let mut h = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                h[i] = dot(&w, v);
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= h[i] * vj;
                }
            }
            h[k + 1] = norm(&w);
            for i in 0..k {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let denom = libm::hypot(h[k], h[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
            let hk1 = h[k + 1];
            h[k] = c * h[k] + s * hk1;
            h[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            let next_norm = norm(&w);
            hess.push(h);
            total += 1;
            k += 1;
            let rel = g[k].abs() / bnorm;
            history.push(rel);
            if rel <= settings.tol || next_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / next_norm).collect());
        }
        // back substitution on the k x k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (j, yj) in y.iter().enumerate().skip(i + 1) {
                s -= hess[j][i] * yj;
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (u, vj) in update.iter_mut().zip(v) {
                *u += yi * vj;
            }
        }
        precond(&update, &mut zbuf);
        for (xi, zi) in x.iter_mut().zip(&zbuf) {
            *xi += zi;
        }
    }
}
