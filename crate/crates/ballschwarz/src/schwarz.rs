//! Overlapping Schwarz methods on the ball decomposition: multiplicative
//! sweeps, the additive preconditioner, and the partition-of-unity coarse
//! space.

use crate::error::Error;
use crate::geometry::BallUnion;
use crate::grid::GridDomain;
use crate::krylov::{axpy, cg, dot, gmres, norm, LinearOperator};
use crate::pou;
use crate::sampling::rng_for;
use crate::sparse::{BandCholesky, BandMatrix, CsrMatrix, DenseCholesky};
use crate::Result;
use rand::Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

/// Exact solvers for the principal submatrices A_ii over the ball
/// subdomains.
pub struct SubdomainSolverSet {
    dofs: Vec<Vec<usize>>,
    factors: Vec<BandCholesky>,
    gap_pairs: Vec<(usize, usize)>,
}

/// Seed for the factorization probe right-hand sides.
const PROBE_SEED: u64 = 0xba11;

/// Relative residual each factorization must reach on a probe solve.
const PROBE_TOL: f64 = 1e-10;

impl SubdomainSolverSet {
    /// Extracts, validates, and factorizes every subdomain matrix.
    ///
    /// Fails when a ball holds no grid node or when a probe solve misses
    /// `1e-10` relative accuracy. Overlapping pairs that share no node
    /// are recorded in `gap_pairs` rather than rejected: thin lenses
    /// (body-diagonal lattice neighbors overlap by less than half a cell
    /// at the default resolution) routinely fall between nodes, and the
    /// sweep needs only coverage, not pairwise shared nodes, to converge.
    pub fn build(grid: &GridDomain, union: &BallUnion) -> Result<SubdomainSolverSet> {
        let a = grid.matrix();
        let dofs: Vec<Vec<usize>> = (0..union.len())
            .map(|i| grid.subdomain_dofs(union, i))
            .collect();
        for (i, d) in dofs.iter().enumerate() {
            if d.is_empty() {
                return Err(Error::EmptySubdomain { index: i });
            }
        }
        let mut gap_pairs = Vec::new();
        for i in 0..union.len() {
            for &j in union.neighbors(i) {
                if j > i && !sorted_intersect(&dofs[i], &dofs[j]) {
                    gap_pairs.push((i, j));
                }
            }
        }

        let factors: Vec<BandCholesky> = dofs
            .par_iter()
            .enumerate()
            .map(|(i, d)| {
                let band = extract_band(a, d);
                let f = BandCholesky::factor(&band).map_err(|e| Error::Factorization {
                    index: i,
                    msg: e.to_string(),
                })?;
                // Probe solve against the extracted submatrix.
                let mut rng = rng_for(PROBE_SEED, i as u64);
                let b: Vec<f64> = (0..d.len()).map(|_| rng.random::<f64>() - 0.5).collect();
                let mut x = b.clone();
                f.solve_in_place(&mut x);
                let mut res = local_matvec(a, d, &x);
                axpy(-1.0, &b, &mut res);
                let rel = norm(&res) / norm(&b);
                if !(rel <= PROBE_TOL) {
                    return Err(Error::Factorization {
                        index: i,
                        msg: format!("probe solve residual {rel:.3e} exceeds {PROBE_TOL:.0e}"),
                    });
                }
                Ok(f)
            })
            .collect::<Result<_>>()?;

        Ok(SubdomainSolverSet {
            dofs,
            factors,
            gap_pairs,
        })
    }

    /// Overlapping ball pairs whose lens holds no grid node at this
    /// resolution.
    pub fn gap_pairs(&self) -> &[(usize, usize)] {
        &self.gap_pairs
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn dofs(&self, i: usize) -> &[usize] {
        &self.dofs[i]
    }

    pub fn factor_storage_bytes(&self) -> usize {
        self.factors.iter().map(|f| f.storage_bytes()).sum()
    }

    /// Solves A_ii e = r|_i for the local correction.
    pub fn solve_local(&self, i: usize, r: &[f64]) -> Vec<f64> {
        let mut e: Vec<f64> = self.dofs[i].iter().map(|&d| r[d]).collect();
        self.factors[i].solve_in_place(&mut e);
        e
    }
}

/// True when two ascending index lists share an element.
fn sorted_intersect(a: &[usize], b: &[usize]) -> bool {
    let (mut p, mut q) = (0, 0);
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Principal submatrix of `a` on the sorted dof list, as a banded matrix
/// in the induced local numbering.
fn extract_band(a: &CsrMatrix, dofs: &[usize]) -> BandMatrix {
    let local = |g: usize| dofs.binary_search(&g).ok();
    let mut bw = 0usize;
    for (p, &g) in dofs.iter().enumerate() {
        let (cols, _) = a.row(g);
        for &c in cols {
            if let Some(q) = local(c) {
                bw = bw.max(p.abs_diff(q));
            }
        }
    }
    let mut band = BandMatrix::zeros(dofs.len(), bw);
    for (p, &g) in dofs.iter().enumerate() {
        let (cols, vals) = a.row(g);
        for (&c, &v) in cols.iter().zip(vals) {
            if let Some(q) = local(c) {
                if q <= p {
                    band.set(p, q, v);
                }
            }
        }
    }
    band
}

/// y = (A restricted to dofs) x in local numbering.
fn local_matvec(a: &CsrMatrix, dofs: &[usize], x: &[f64]) -> Vec<f64> {
    dofs.iter()
        .map(|&g| {
            let (cols, vals) = a.row(g);
            let mut s = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                if let Ok(q) = dofs.binary_search(&c) {
                    s += v * x[q];
                }
            }
            s
        })
        .collect()
}

/// Coarse space spanned by the interior partition-of-unity functions,
/// with its Galerkin operator factorized.
pub struct CoarseSpace {
    /// Interior ball index per column.
    interior: Vec<usize>,
    /// Sparse columns: (dof, theta value) pairs, ascending by dof.
    cols: Vec<Vec<(usize, f64)>>,
    /// Dense Galerkin matrix, kept for sparsity inspection.
    galerkin: Vec<f64>,
    factor: DenseCholesky,
    n: usize,
}

impl CoarseSpace {
    pub fn dim(&self) -> usize {
        self.interior.len()
    }

    pub fn interior_balls(&self) -> &[usize] {
        &self.interior
    }

    pub fn column(&self, p: usize) -> &[(usize, f64)] {
        &self.cols[p]
    }

    pub fn galerkin_entry(&self, p: usize, q: usize) -> f64 {
        self.galerkin[p * self.dim() + q]
    }

    /// Weights solving the coarse Galerkin system for the restricted
    /// residual.
    fn weights(&self, r: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self
            .cols
            .iter()
            .map(|col| col.iter().map(|&(d, t)| t * r[d]).sum())
            .collect();
        self.factor.solve_in_place(&mut g);
        g
    }

    /// Adds the coarse correction for residual `r` to `u` and returns the
    /// correction as a dense vector.
    fn correction(&self, r: &[f64]) -> Vec<f64> {
        let y = self.weights(r);
        let mut z = vec![0.0; self.n];
        for (col, &w) in self.cols.iter().zip(&y) {
            for &(d, t) in col {
                z[d] += w * t;
            }
        }
        z
    }
}

/// Assembles the coarse space from the interior partition-of-unity
/// functions sampled at dof nodes.
pub fn build_coarse_space(grid: &GridDomain, union: &BallUnion) -> Result<CoarseSpace> {
    let interior = union.interior().to_vec();
    if interior.is_empty() {
        return Err(Error::EmptyCoarseSpace);
    }
    let a = grid.matrix();
    let cols: Vec<Vec<(usize, f64)>> = interior
        .par_iter()
        .map(|&i| {
            grid.subdomain_dofs(union, i)
                .into_iter()
                .map(|d| {
                    let v = pou::eval_theta_single(union, i, grid.dof_coord(d))
                        .expect("dof node lies inside the union");
                    (d, v)
                })
                .collect()
        })
        .collect();

    let k = interior.len();
    let mut galerkin = vec![0.0; k * k];
    let products: Vec<Vec<f64>> = cols
        .par_iter()
        .map(|col| {
            let mut z = vec![0.0; a.n()];
            for &(d, t) in col {
                z[d] = t;
            }
            let mut az = vec![0.0; a.n()];
            a.matvec(&z, &mut az);
            cols.iter()
                .map(|other| other.iter().map(|&(d, t)| t * az[d]).sum())
                .collect()
        })
        .collect();
    for (p, row) in products.iter().enumerate() {
        galerkin[p * k..(p + 1) * k].copy_from_slice(row);
    }
    let factor = DenseCholesky::factor(&galerkin, k).map_err(|e| Error::Factorization {
        index: usize::MAX,
        msg: format!("coarse Galerkin operator: {e}"),
    })?;

    Ok(CoarseSpace {
        interior,
        cols,
        galerkin,
        factor,
        n: a.n(),
    })
}

/// b - A u.
pub fn residual(a: &CsrMatrix, u: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; a.n()];
    a.matvec(u, &mut r);
    r.par_iter_mut().zip(b.par_iter()).for_each(|(ri, bi)| {
        *ri = bi - *ri;
    });
    r
}

fn a_norm(a: &CsrMatrix, u: &[f64]) -> f64 {
    let mut au = vec![0.0; a.n()];
    a.matvec(u, &mut au);
    dot(u, &au).max(0.0).sqrt()
}

/// One multiplicative pass: the coarse correction first when present,
/// then every ball in index order. Each substep solves its subspace
/// exactly, so the energy of the iterate never increases. The residual is
/// maintained incrementally through the sweep.
pub fn multiplicative_sweep(
    a: &CsrMatrix,
    u: &mut [f64],
    b: &[f64],
    solvers: &SubdomainSolverSet,
    coarse: Option<&CoarseSpace>,
) {
    sweep_observed(a, u, b, solvers, coarse, |_| {});
}

/// Multiplicative sweep invoking `observer` with the iterate after every
/// substep, for invariant checks.
pub fn sweep_observed<F: FnMut(&[f64])>(
    a: &CsrMatrix,
    u: &mut [f64],
    b: &[f64],
    solvers: &SubdomainSolverSet,
    coarse: Option<&CoarseSpace>,
    mut observer: F,
) {
    let mut r = residual(a, u, b);
    if let Some(c) = coarse {
        let z = c.correction(&r);
        axpy(1.0, &z, u);
        let mut az = vec![0.0; a.n()];
        a.matvec(&z, &mut az);
        axpy(-1.0, &az, &mut r);
        observer(u);
    }
    for i in 0..solvers.len() {
        let e = solvers.solve_local(i, &r);
        let dofs = solvers.dofs(i);
        for (p, &d) in dofs.iter().enumerate() {
            u[d] += e[p];
        }
        // A is symmetric, so row d doubles as column d.
        for (p, &d) in dofs.iter().enumerate() {
            let (cols, vals) = a.row(d);
            for (&c, &v) in cols.iter().zip(vals) {
                r[c] -= v * e[p];
            }
        }
        observer(u);
    }
}

/// Additive correction: the sum of all subdomain solves of the same
/// residual, plus the coarse term when present. Subdomain solves run in
/// parallel; the accumulation order is fixed, so results are
/// deterministic.
pub fn additive_apply(
    solvers: &SubdomainSolverSet,
    coarse: Option<&CoarseSpace>,
    r: &[f64],
) -> Vec<f64> {
    let parts: Vec<Vec<f64>> = (0..solvers.len())
        .into_par_iter()
        .map(|i| solvers.solve_local(i, r))
        .collect();
    let mut v = vec![0.0; r.len()];
    for (i, part) in parts.iter().enumerate() {
        for (p, &d) in solvers.dofs(i).iter().enumerate() {
            v[d] += part[p];
        }
    }
    if let Some(c) = coarse {
        let z = c.correction(r);
        axpy(1.0, &z, &mut v);
    }
    v
}

/// The additive preconditioner as an abstract operator.
pub struct AdditiveOp<'a> {
    pub solvers: &'a SubdomainSolverSet,
    pub coarse: Option<&'a CoarseSpace>,
    pub n: usize,
}

impl LinearOperator for AdditiveOp<'_> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let v = additive_apply(self.solvers, self.coarse, x);
        y.copy_from_slice(&v);
    }
}

/// One multiplicative sweep from a zero start, as a (linear)
/// preconditioner operator.
pub struct MsPrecondOp<'a> {
    pub a: &'a CsrMatrix,
    pub solvers: &'a SubdomainSolverSet,
    pub coarse: Option<&'a CoarseSpace>,
}

impl LinearOperator for MsPrecondOp<'_> {
    fn dim(&self) -> usize {
        self.a.n()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        multiplicative_sweep(self.a, y, x, self.solvers, self.coarse);
    }
}

/// Solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Stationary multiplicative sweeps.
    Ms,
    /// Multiplicative sweeps with the coarse space prepended.
    MsCoarse,
    /// Conjugate gradients with the additive preconditioner.
    PcgAs,
    /// Conjugate gradients with the additive preconditioner and coarse
    /// term.
    PcgAsCoarse,
    /// GMRES right-preconditioned by one multiplicative sweep.
    GmresMs,
    /// GMRES right-preconditioned by one multiplicative sweep with
    /// coarse correction.
    GmresMsCoarse,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ms,
        Method::MsCoarse,
        Method::PcgAs,
        Method::PcgAsCoarse,
        Method::GmresMs,
        Method::GmresMsCoarse,
    ];

    pub fn wants_coarse(self) -> bool {
        matches!(
            self,
            Method::MsCoarse | Method::PcgAsCoarse | Method::GmresMsCoarse
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Ms => "ms",
            Method::MsCoarse => "ms+coarse",
            Method::PcgAs => "pcg-as",
            Method::PcgAsCoarse => "pcg-as+coarse",
            Method::GmresMs => "gmres-ms",
            Method::GmresMsCoarse => "gmres-ms+coarse",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Method> {
        match s {
            "ms" => Ok(Method::Ms),
            "ms+coarse" => Ok(Method::MsCoarse),
            "pcg-as" => Ok(Method::PcgAs),
            "pcg-as+coarse" => Ok(Method::PcgAsCoarse),
            "gmres-ms" => Ok(Method::GmresMs),
            "gmres-ms+coarse" => Ok(Method::GmresMsCoarse),
            other => Err(Error::invalid_argument(format!(
                "unknown method \"{other}\"; expected one of ms, ms+coarse, pcg-as, pcg-as+coarse, gmres-ms, gmres-ms+coarse"
            ))),
        }
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    /// Relative residual norms; length `iterations + 1`.
    pub residual_history: Vec<f64>,
    /// For multiplicative sweeps and CG: the quadratic energy functional
    /// `u^T A u / 2 - b^T u` of the iterate per iteration (its decrease
    /// measures the squared a-norm of the error drop). For GMRES:
    /// absolute residual norms as a residual-based estimate.
    pub energy_history: Vec<f64>,
    pub converged: bool,
    /// Dimension of the coarse space actually used; 0 when the method
    /// runs without one (including the fallback when no ball is
    /// interior).
    pub coarse_dim: usize,
    pub wall_time: Duration,
}

/// Solution plus report.
pub struct SolveOutput {
    pub u: Vec<f64>,
    pub report: SolveReport,
}

/// Runs the selected method from a zero start until the relative residual
/// drops below `tol` or `max_iters` is reached. Coarse variants fall back
/// to the plain decomposition when the geometry has no interior ball; the
/// report's `coarse_dim` records what actually ran.
pub fn solve(
    grid: &GridDomain,
    union: &BallUnion,
    b: &[f64],
    method: Method,
    tol: f64,
    max_iters: usize,
) -> Result<SolveOutput> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid_argument(format!(
            "tolerance {tol} must lie in (0,1)"
        )));
    }
    let start = Instant::now();
    let a = grid.matrix();
    let solvers = SubdomainSolverSet::build(grid, union)?;
    let coarse = if method.wants_coarse() {
        match build_coarse_space(grid, union) {
            Ok(c) => Some(c),
            Err(Error::EmptyCoarseSpace) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let coarse_dim = coarse.as_ref().map_or(0, |c| c.dim());
    let coarse_ref = coarse.as_ref();

    let bnorm = norm(b);
    let out = match method {
        Method::Ms | Method::MsCoarse => {
            let mut u = vec![0.0; a.n()];
            let mut residual_history = vec![1.0];
            let mut energy_history = vec![quadratic_energy(a, &u, b)];
            let mut converged = bnorm == 0.0;
            let mut iterations = 0;
            if bnorm > 0.0 {
                for _ in 0..max_iters {
                    multiplicative_sweep(a, &mut u, b, &solvers, coarse_ref);
                    iterations += 1;
                    let rel = norm(&residual(a, &u, b)) / bnorm;
                    residual_history.push(rel);
                    energy_history.push(quadratic_energy(a, &u, b));
                    if rel <= tol {
                        converged = true;
                        break;
                    }
                }
            } else {
                residual_history = vec![0.0];
            }
            SolveOutput {
                u,
                report: SolveReport {
                    method,
                    iterations,
                    residual_history,
                    energy_history,
                    converged,
                    coarse_dim,
                    wall_time: start.elapsed(),
                },
            }
        }
        Method::PcgAs | Method::PcgAsCoarse => {
            let op = AdditiveOp {
                solvers: &solvers,
                coarse: coarse_ref,
                n: a.n(),
            };
            let (u, rep) = cg(a, Some(&op), b, tol, max_iters)?;
            let energy_history = vec![quadratic_energy(a, &u, b)];
            SolveOutput {
                u,
                report: SolveReport {
                    method,
                    iterations: rep.iterations,
                    residual_history: rep.residual_history,
                    energy_history,
                    converged: rep.converged,
                    coarse_dim,
                    wall_time: start.elapsed(),
                },
            }
        }
        Method::GmresMs | Method::GmresMsCoarse => {
            let op = MsPrecondOp {
                a,
                solvers: &solvers,
                coarse: coarse_ref,
            };
            let (u, rep) = gmres(a, Some(&op), b, tol, max_iters)?;
            let energy_history: Vec<f64> =
                rep.residual_history.iter().map(|r| r * bnorm).collect();
            SolveOutput {
                u,
                report: SolveReport {
                    method,
                    iterations: rep.iterations,
                    residual_history: rep.residual_history,
                    energy_history,
                    converged: rep.converged,
                    coarse_dim,
                    wall_time: start.elapsed(),
                },
            }
        }
    };
    Ok(out)
}

/// u^T A u / 2 - b^T u; decreases monotonically under exact subspace
/// corrections.
pub fn quadratic_energy(a: &CsrMatrix, u: &[f64], b: &[f64]) -> f64 {
    let mut au = vec![0.0; a.n()];
    a.matvec(u, &mut au);
    0.5 * dot(u, &au) - dot(b, u)
}

/// Empirical contraction factor of the error propagation operator.
#[derive(Debug, Clone)]
pub struct ContractionEstimate {
    pub rho: f64,
    pub sweeps: usize,
    /// A-norms of the error after each sweep, starting with the
    /// normalized initial error.
    pub history: Vec<f64>,
    /// The error reached exact zero before enough sweeps ran; rho is 0.
    pub underflowed: bool,
}

/// Measures the per-sweep A-norm contraction of the error by sweeping on
/// b = 0 from a random unit-A-norm start; the estimate is the geometric
/// mean of the last five per-sweep ratios.
pub fn estimate_contraction(
    a: &CsrMatrix,
    solvers: &SubdomainSolverSet,
    coarse: Option<&CoarseSpace>,
    sweeps: usize,
    seed: u64,
) -> Result<ContractionEstimate> {
    if sweeps < 10 {
        return Err(Error::invalid_argument(format!(
            "contraction estimate needs at least 10 sweeps, got {sweeps}"
        )));
    }
    let n = a.n();
    let mut rng = rng_for(seed, 0);
    let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nrm = a_norm(a, &u);
    u.iter_mut().for_each(|v| *v /= nrm);
    let b = vec![0.0; n];
    let mut history = vec![1.0];
    for k in 0..sweeps {
        multiplicative_sweep(a, &mut u, &b, solvers, coarse);
        let nrm = a_norm(a, &u);
        // Below this the error is roundoff, not signal.
        if nrm < 1e-13 {
            if k + 1 < 10 || history.len() < 6 {
                history.push(nrm);
                return Ok(ContractionEstimate {
                    rho: 0.0,
                    sweeps: k + 1,
                    history,
                    underflowed: true,
                });
            }
            break;
        }
        history.push(nrm);
    }
    let k = history.len() - 1;
    let rho = (history[k] / history[k - 5]).powf(0.2);
    Ok(ContractionEstimate {
        rho,
        sweeps: history.len() - 1,
        history,
        underflowed: false,
    })
}

/// Coarse quasi-interpolant: the coarse function whose weight on each
/// interior ball is the mean of `v` over that ball's dofs. On dofs all of
/// whose covering balls are interior, applying it to a constant
/// reproduces the constant.
pub fn coarse_quasi_interpolant(
    grid: &GridDomain,
    union: &BallUnion,
    coarse: &CoarseSpace,
    v: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (p, &i) in coarse.interior_balls().iter().enumerate() {
        let dofs = grid.subdomain_dofs(union, i);
        let mean: f64 = dofs.iter().map(|&d| v[d]).sum::<f64>() / dofs.len() as f64;
        for &(d, t) in coarse.column(p) {
            out[d] += mean * t;
        }
    }
    out
}
