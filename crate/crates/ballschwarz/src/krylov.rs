//! Matrix-free Krylov methods: preconditioned CG, right-preconditioned
//! GMRES without restarts, Lanczos extreme eigenvalue estimates, and
//! inverse power iteration.

use crate::error::Error;
use crate::sampling::rng_for;
use crate::sparse::{sym_tridiag_extreme_eigs, CsrMatrix};
use crate::Result;
use rand::Rng;
use rayon::prelude::*;

/// Abstract linear operator on `R^n`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y);
    }
}

/// Deterministic parallel dot product: fixed-size chunk sums reduced in
/// order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    const CHUNK: usize = 8192;
    if a.len() <= CHUNK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let sums: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum())
        .collect();
    sums.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| {
        *yi += alpha * xi;
    });
}

fn scale(alpha: f64, x: &mut [f64]) {
    x.par_iter_mut().for_each(|xi| *xi *= alpha);
}

/// Convergence report for CG.
#[derive(Debug, Clone)]
pub struct CgReport {
    pub iterations: usize,
    /// Relative residual norms, one entry per iteration plus the initial
    /// value.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Extreme eigenvalue estimates of the (preconditioned) operator from
    /// the CG coefficients; present after at least two iterations.
    pub eig_estimates: Option<(f64, f64)>,
    pub cond_estimate: Option<f64>,
}

/// Preconditioned conjugate gradients for symmetric positive definite
/// operators; `m` applies an approximate inverse. Starts from zero.
pub fn cg(
    a: &dyn LinearOperator,
    m: Option<&dyn LinearOperator>,
    b: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, CgReport)> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            CgReport {
                iterations: 0,
                residual_history: vec![0.0],
                converged: true,
                eig_estimates: None,
                cond_estimate: None,
            },
        ));
    }

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = match m {
        Some(m) => m.apply_alloc(&r),
        None => r.clone(),
    };
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut history = vec![1.0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut converged = false;

    for _ in 0..max_iters {
        a.apply(&p, &mut q);
        let p_ap = dot(&p, &q);
        if p_ap <= 0.0 || !p_ap.is_finite() {
            return Err(Error::NotPositiveDefinite {
                msg: format!("cg encountered p^T A p = {p_ap}"),
            });
        }
        let alpha = rz / p_ap;
        alphas.push(alpha);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            converged = true;
            break;
        }
        match m {
            Some(m) => m.apply(&r, &mut z),
            None => z.copy_from_slice(&r),
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        betas.push(beta);
        rz = rz_new;
        scale(beta, &mut p);
        axpy(1.0, &z, &mut p);
    }

    let eig_estimates = if alphas.len() >= 2 {
        // Lanczos tridiagonal reconstructed from the CG coefficients.
        let k = alphas.len();
        let mut diag = vec![0.0; k];
        let mut off = vec![0.0; k - 1];
        for i in 0..k {
            diag[i] = 1.0 / alphas[i]
                + if i > 0 { betas[i - 1] / alphas[i - 1] } else { 0.0 };
            if i + 1 < k {
                off[i] = betas[i].sqrt() / alphas[i];
            }
        }
        Some(sym_tridiag_extreme_eigs(&diag, &off))
    } else {
        None
    };

    let report = CgReport {
        iterations: history.len() - 1,
        residual_history: history,
        converged,
        eig_estimates,
        cond_estimate: eig_estimates.map(|(lo, hi)| hi / lo),
    };
    Ok((x, report))
}

/// Convergence report for GMRES.
#[derive(Debug, Clone)]
pub struct GmresReport {
    pub iterations: usize,
    /// Relative residual norms, one entry per iteration plus the initial
    /// value.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Set when the residual stopped decreasing for 20 iterations.
    pub stagnated: bool,
    /// Set when the Arnoldi basis became exact.
    pub happy_breakdown: bool,
}

/// Right-preconditioned GMRES with modified Gram-Schmidt and no restarts:
/// solves `A M u = b` and returns `x = M u`. With right preconditioning
/// the least-squares residual equals the true residual of `A x = b`.
/// Starts from zero.
pub fn gmres(
    a: &dyn LinearOperator,
    m_right: Option<&dyn LinearOperator>,
    b: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, GmresReport)> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            GmresReport {
                iterations: 0,
                residual_history: vec![0.0],
                converged: true,
                stagnated: false,
                happy_breakdown: false,
            },
        ));
    }

    let max_iters = max_iters.min(n);
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(max_iters + 1);
    v.push(b.iter().map(|bi| bi / bnorm).collect());
    // Upper Hessenberg columns after Givens rotations.
    let mut h_cols: Vec<Vec<f64>> = Vec::with_capacity(max_iters);
    let mut givens: Vec<(f64, f64)> = Vec::with_capacity(max_iters);
    let mut g = vec![0.0; max_iters + 1];
    g[0] = bnorm;
    let mut history = vec![1.0];
    let mut converged = false;
    let mut stagnated = false;
    let mut happy_breakdown = false;
    let mut k = 0;

    while k < max_iters {
        let vk = &v[k];
        let mut w = match m_right {
            Some(m) => a.apply_alloc(&m.apply_alloc(vk)),
            None => a.apply_alloc(vk),
        };
        let mut h = vec![0.0; k + 2];
        for (i, vi) in v.iter().enumerate() {
            let c = dot(&w, vi);
            h[i] = c;
            axpy(-c, vi, &mut w);
        }
        let wnorm = norm(&w);
        h[k + 1] = wnorm;

        for (i, &(c, s)) in givens.iter().enumerate() {
            let t = c * h[i] + s * h[i + 1];
            h[i + 1] = -s * h[i] + c * h[i + 1];
            h[i] = t;
        }
        let denom = (h[k] * h[k] + h[k + 1] * h[k + 1]).sqrt();
        let (c, s) = if denom == 0.0 {
            (1.0, 0.0)
        } else {
            (h[k] / denom, h[k + 1] / denom)
        };
        givens.push((c, s));
        h[k] = denom;
        h[k + 1] = 0.0;
        let gk = g[k];
        g[k] = c * gk;
        g[k + 1] = -s * gk;

        h_cols.push(h);
        k += 1;
        let rel = g[k].abs() / bnorm;
        history.push(rel);

        if rel <= tol {
            converged = true;
            break;
        }
        if wnorm <= 1e-14 * bnorm {
            // Exact subspace reached but tolerance not met: the
            // least-squares solution below is the best attainable.
            happy_breakdown = true;
            converged = rel <= tol;
            break;
        }
        if history.len() > 20 {
            let prev = history[history.len() - 21];
            if rel >= prev * (1.0 - 1e-14) {
                stagnated = true;
                break;
            }
        }
        let mut vnext = w;
        scale(1.0 / wnorm, &mut vnext);
        v.push(vnext);
    }

    // Back substitution for the least-squares coefficients.
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in (i + 1)..k {
            s -= h_cols[j][i] * y[j];
        }
        y[i] = s / h_cols[i][i];
    }
    let mut u = vec![0.0; n];
    for (j, yj) in y.iter().enumerate() {
        axpy(*yj, &v[j], &mut u);
    }
    let x = match m_right {
        Some(m) => m.apply_alloc(&u),
        None => u,
    };

    Ok((
        x,
        GmresReport {
            iterations: k,
            residual_history: history,
            converged,
            stagnated,
            happy_breakdown,
        },
    ))
}

/// Extreme eigenvalue estimates `(lambda_min, lambda_max)` of `A`, or of
/// `M A` when a symmetric positive definite preconditioner is supplied.
/// Runs `probes` independent Lanczos passes with full reorthogonalization
/// and keeps the smallest low and largest high Ritz values, which bracket
/// nothing spurious: Ritz values always lie inside the spectrum.
///
/// With a preconditioner the iteration runs in the `A` inner product, in
/// which `M A` is self-adjoint.
pub fn lanczos_extremes(
    a: &dyn LinearOperator,
    m: Option<&dyn LinearOperator>,
    probes: usize,
    iters: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = a.dim();
    let iters = iters.min(n);
    let mut lo_best = f64::INFINITY;
    let mut hi_best = f64::NEG_INFINITY;

    for probe in 0..probes {
        let mut rng = rng_for(seed, probe as u64);
        let start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let (diag, off) = match m {
            None => lanczos_euclidean(a, start, iters)?,
            Some(m) => lanczos_a_inner(a, m, start, iters)?,
        };
        if diag.is_empty() {
            continue;
        }
        let (lo, hi) = sym_tridiag_extreme_eigs(&diag, &off);
        lo_best = lo_best.min(lo);
        hi_best = hi_best.max(hi);
    }
    if !lo_best.is_finite() || !hi_best.is_finite() {
        return Err(Error::NonFinite {
            what: "lanczos eigenvalue estimate".into(),
        });
    }
    Ok((lo_best, hi_best))
}

/// Standard Lanczos with full reorthogonalization; returns the tridiagonal
/// coefficients.
fn lanczos_euclidean(
    a: &dyn LinearOperator,
    mut v: Vec<f64>,
    iters: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nrm = norm(&v);
    scale(1.0 / nrm, &mut v);
    let mut basis = vec![v];
    let mut diag = Vec::new();
    let mut off = Vec::new();
    for j in 0..iters {
        let mut w = a.apply_alloc(&basis[j]);
        let alpha = dot(&w, &basis[j]);
        diag.push(alpha);
        // Full reorthogonalization, twice; the first pass includes the
        // alpha and beta terms.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        let beta = norm(&w);
        if beta <= 1e-13 * diag[0].abs().max(1.0) || j + 1 == iters {
            break;
        }
        off.push(beta);
        scale(1.0 / beta, &mut w);
        basis.push(w);
    }
    off.truncate(diag.len().saturating_sub(1));
    Ok((diag, off))
}

/// Lanczos for `M A` in the `A` inner product. Caches `A q_k` alongside
/// each basis vector so reorthogonalization costs one dot product per
/// basis vector instead of an operator application.
fn lanczos_a_inner(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    v: Vec<f64>,
    iters: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = a.apply_alloc(&v);
    let nrm_sq = dot(&v, &s);
    if nrm_sq <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            msg: "operator is not positive definite in the Lanczos start".into(),
        });
    }
    let nrm = nrm_sq.sqrt();
    let mut q = v;
    let mut sq = s;
    scale(1.0 / nrm, &mut q);
    scale(1.0 / nrm, &mut sq);
    let mut basis = vec![q];
    let mut a_basis = vec![sq];
    let mut diag = Vec::new();
    let mut off = Vec::new();

    for j in 0..iters {
        // C q_j = M A q_j = M s_j.
        let mut w = m.apply_alloc(&a_basis[j]);
        let alpha = dot(&w, &a_basis[j]);
        diag.push(alpha);
        // Cached A q_k makes a double reorthogonalization pass cost one
        // dot product per basis vector, no operator applications.
        for _ in 0..2 {
            for (q, s) in basis.iter().zip(&a_basis) {
                let c = dot(&w, s);
                axpy(-c, q, &mut w);
            }
        }
        let sw = a.apply_alloc(&w);
        let beta_sq = dot(&w, &sw);
        if beta_sq <= 1e-26 * diag[0].abs().max(1.0) || j + 1 == iters {
            break;
        }
        let beta = beta_sq.sqrt();
        off.push(beta);
        let mut qn = w;
        let mut sn = sw;
        scale(1.0 / beta, &mut qn);
        scale(1.0 / beta, &mut sn);
        basis.push(qn);
        a_basis.push(sn);
    }
    off.truncate(diag.len().saturating_sub(1));
    Ok((diag, off))
}

/// Smallest eigenvalue of a symmetric positive definite operator by
/// inverse power iteration; `solve` applies an accurate approximation of
/// the inverse. Returns the Rayleigh quotient after convergence of the
/// quotient to relative `tol` or `max_iters` steps.
pub fn inverse_power_min(
    a: &dyn LinearOperator,
    solve: &dyn Fn(&[f64]) -> Vec<f64>,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<f64> {
    let n = a.dim();
    let mut rng = rng_for(seed, 0);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nrm = norm(&x);
    scale(1.0 / nrm, &mut x);
    let mut rayleigh = f64::INFINITY;
    for _ in 0..max_iters {
        let mut y = solve(&x);
        let nrm = norm(&y);
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::NonFinite {
                what: "inverse power iterate".into(),
            });
        }
        scale(1.0 / nrm, &mut y);
        let ay = a.apply_alloc(&y);
        let new_rayleigh = dot(&y, &ay);
        let done = (new_rayleigh - rayleigh).abs() <= tol * new_rayleigh.abs();
        x = y;
        rayleigh = new_rayleigh;
        if done {
            break;
        }
    }
    Ok(rayleigh)
}
