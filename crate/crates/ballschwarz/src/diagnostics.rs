//! Verification harness: sampled checks of the partition-of-unity bounds,
//! the overlap inequalities behind them, the spectral floor, and iteration
//! scaling sweeps.
//!
//! Every verifier is deterministic given (geometry, seed, h). Sampled
//! inequality checks cannot prove an almost-everywhere statement; they
//! report statistical evidence with worst-case witnesses, and each check
//! carries a negative control showing the test would catch a wrong
//! constant.

use crate::geometry::{check_assumptions, intersection_circle, BallUnion, DEFAULT_CIRCLE_SAMPLES};
use crate::grid::{assemble_rhs, build_grid, GridDomain, DEFAULT_DOF_CAP};
use crate::indicators::{
    gamma_b, gamma_int, n_0, sas_field, IndicatorConfig, IndicatorReport, LevelSetField,
};
use crate::krylov::{cg, inverse_power_min};
use crate::pou::{eval_theta, eval_theta_single, PouValue};
use crate::sampling::{orthonormal_frame, rng_for, uniform_in_ball, uniform_in_box};
use crate::schwarz::{
    build_coarse_space, estimate_contraction, solve, CoarseSpace, Method, SubdomainSolverSet,
};
use crate::vec3::Vec3;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Slack factor for inequalities involving discretized distances or
/// sampled constants.
pub const INEQUALITY_SLACK: f64 = 1.05;
/// Tolerance for exact identities (partition sum, range).
pub const IDENTITY_TOL: f64 = 1e-12;
/// Relative tolerance of the analytic-versus-finite-difference gradient
/// comparison.
pub const GRADIENT_FD_TOL: f64 = 1e-4;

/// Outcome of one sampled check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Points examined; zero marks a vacuous check (reported as passed).
    pub samples: usize,
    /// Worst measured-to-bound ratio over the samples; the `detail` string
    /// states the convention (at most 1 passes for direct checks, below 1
    /// demonstrates violation for negative controls).
    pub worst_ratio: f64,
    /// Location of the worst sample.
    pub witness: Option<Vec3>,
    pub detail: String,
}

impl CheckResult {
    fn vacuous(name: &str, why: &str) -> CheckResult {
        CheckResult {
            name: name.into(),
            passed: true,
            samples: 0,
            worst_ratio: 0.0,
            witness: None,
            detail: format!("vacuous: {why}"),
        }
    }

    /// One human-readable summary line.
    pub fn line(&self) -> String {
        format!(
            "{} {} (samples {}, worst ratio {:.6}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.worst_ratio,
            self.detail
        )
    }
}

/// Collection of check outcomes from one verifier run.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks.iter().map(|c| c.line()).collect()
    }
}

/// Running maximum of a ratio together with its witness.
struct Worst {
    ratio: f64,
    witness: Option<Vec3>,
}

impl Worst {
    fn new() -> Worst {
        Worst {
            ratio: 0.0,
            witness: None,
        }
    }

    fn update(&mut self, ratio: f64, at: Vec3) {
        if ratio > self.ratio {
            self.ratio = ratio;
            self.witness = Some(at);
        }
    }

    fn into_check(self, name: &str, samples: usize, detail: String) -> CheckResult {
        CheckResult {
            name: name.into(),
            passed: self.ratio <= 1.0,
            samples,
            worst_ratio: self.ratio,
            witness: self.witness,
            detail,
        }
    }
}

/// Running minimum of a ratio, for negative controls: the control passes
/// when some sample drops below 1, demonstrating the inflated constant is
/// rejected.
struct Tightest {
    ratio: f64,
    witness: Option<Vec3>,
}

impl Tightest {
    fn new() -> Tightest {
        Tightest {
            ratio: f64::INFINITY,
            witness: None,
        }
    }

    fn update(&mut self, ratio: f64, at: Vec3) {
        if ratio < self.ratio {
            self.ratio = ratio;
            self.witness = Some(at);
        }
    }

    fn into_control(self, name: &str, samples: usize, detail: String) -> CheckResult {
        CheckResult {
            name: name.into(),
            passed: self.ratio < 1.0,
            samples,
            worst_ratio: self.ratio,
            witness: self.witness,
            detail,
        }
    }
}

/// `samples` points drawn uniformly from the union by bounding-box
/// rejection.
fn sample_in_union(union: &BallUnion, samples: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let (lo, hi) = union.bounding_box();
    let mut pts = Vec::with_capacity(samples);
    while pts.len() < samples {
        let p = uniform_in_box(rng, lo, hi);
        if union.contains(p) {
            pts.push(p);
        }
    }
    pts
}

/// Certified lower bound on the distance to the domain boundary: the larger
/// of the distance-transform sample (minus its trilinear error budget) and
/// the deepest ball membership at `x`.
fn dist_floor(union: &BallUnion, field: &LevelSetField, x: Vec3) -> f64 {
    let transform = field.sample(x) - 3.0f64.sqrt() * field.h();
    let depth = union
        .balls()
        .iter()
        .map(|b| b.depth(x))
        .fold(0.0f64, f64::max);
    transform.max(depth).max(0.0)
}

/// Sampled verification of the partition-of-unity identities and gradient
/// bounds: sum to one, range, support, analytic versus finite-difference
/// gradients away from kinks, the interior gradient bound, and the
/// boundary gradient bound weighted by the distance to the boundary.
pub fn verify_pou(union: &BallUnion, samples: usize, seed: u64) -> Result<VerifyReport> {
    let mut rng = rng_for(seed, 0xd1a6);
    let pts = sample_in_union(union, samples, &mut rng);
    let values: Vec<PouValue> = pts
        .iter()
        .map(|&p| eval_theta(union, p))
        .collect::<Result<Vec<_>>>()?;

    let mut checks = Vec::new();

    // partition sum
    let mut worst = Worst::new();
    for v in &values {
        let dev = (v.theta.iter().sum::<f64>() - 1.0).abs();
        worst.update(dev / IDENTITY_TOL, v.point);
    }
    checks.push(worst.into_check(
        "pou-sum",
        values.len(),
        format!("|sum theta - 1| <= {IDENTITY_TOL}"),
    ));

    // range
    let mut worst = Worst::new();
    for v in &values {
        for &t in &v.theta {
            let excess = (-t).max(t - 1.0).max(0.0);
            worst.update(excess / IDENTITY_TOL, v.point);
        }
    }
    checks.push(worst.into_check(
        "pou-range",
        values.len(),
        format!("theta_i within [0,1] up to {IDENTITY_TOL}"),
    ));

    // support: active indices are exactly the balls containing the point,
    // and explicitly queried inactive indices evaluate to zero
    let mut worst = Worst::new();
    for v in &values {
        let containing: Vec<usize> = (0..union.len())
            .filter(|&i| union.ball(i).contains(v.point))
            .collect();
        let mismatch = (v.active != containing) as usize as f64;
        worst.update(mismatch, v.point);
        if let Some(outside) = (0..union.len()).find(|&i| !union.ball(i).contains(v.point)) {
            let t = eval_theta_single(union, outside, v.point)?;
            worst.update(if t == 0.0 { 0.0 } else { 1.0 + t.abs() }, v.point);
        }
    }
    checks.push(worst.into_check(
        "pou-support",
        values.len(),
        "active set = containing balls; theta vanishes off support".into(),
    ));

    // finite-difference gradients away from kinks
    let r_min = union.r_min();
    let step = 1e-5 * r_min;
    let kink_margin = 1e-2 * r_min;
    let mut worst = Worst::new();
    let mut fd_samples = 0usize;
    for v in &values {
        let near_kink = union
            .balls()
            .iter()
            .any(|b| (v.point.dist(b.center) - b.radius).abs() < kink_margin);
        if near_kink {
            continue;
        }
        fd_samples += 1;
        for (slot, &i) in v.active.iter().enumerate() {
            let mut fd = [0.0f64; 3];
            for axis in 0..3 {
                let mut hi = v.point;
                let mut lo = v.point;
                match axis {
                    0 => {
                        hi.x += step;
                        lo.x -= step;
                    }
                    1 => {
                        hi.y += step;
                        lo.y -= step;
                    }
                    _ => {
                        hi.z += step;
                        lo.z -= step;
                    }
                }
                fd[axis] =
                    (eval_theta_single(union, i, hi)? - eval_theta_single(union, i, lo)?)
                        / (2.0 * step);
            }
            let g = v.grad_theta[slot];
            let diff = ((fd[0] - g.x).powi(2) + (fd[1] - g.y).powi(2) + (fd[2] - g.z).powi(2))
                .sqrt();
            let rel = diff / (1.0 + g.norm());
            worst.update(rel / GRADIENT_FD_TOL, v.point);
        }
    }
    checks.push(worst.into_check(
        "pou-grad-fd",
        fd_samples,
        format!(
            "central differences (step {step:.3e}) match analytic gradients to {GRADIENT_FD_TOL} \
             relative, {kink_margin:.3e} away from sphere kinks"
        ),
    ));

    // gradient bounds need the covering multiplicity and overlap constants
    let n0 = n_0(union, r_min / 6.0, 2) as f64;
    let g_int = gamma_int(union, 2000);
    let assumptions = check_assumptions(union, DEFAULT_CIRCLE_SAMPLES);
    let g_b = gamma_b(assumptions.beta_min, r_min, union.r_max())?;

    // interior bound
    if union.interior().is_empty() {
        checks.push(CheckResult::vacuous(
            "pou-interior-gradient-bound",
            "no interior balls",
        ));
    } else {
        let bound = n0 / g_int;
        let mut worst = Worst::new();
        let mut seen = 0usize;
        for v in &values {
            for (slot, &i) in v.active.iter().enumerate() {
                if union.is_interior(i) {
                    seen += 1;
                    worst.update(
                        v.grad_theta[slot].norm() / (INEQUALITY_SLACK * bound),
                        v.point,
                    );
                }
            }
        }
        checks.push(worst.into_check(
            "pou-interior-gradient-bound",
            seen,
            format!("|grad theta_i| <= n_0/gamma_int = {bound:.4} for interior i, 5% slack"),
        ));
    }

    // boundary bound, weighted by a certified distance floor
    let h = r_min / 6.0;
    let field = sas_field(union, 0.0, h, 32_000_000)?;
    let mut worst = Worst::new();
    let mut seen = 0usize;
    for v in &values {
        let floor = dist_floor(union, &field, v.point);
        if floor <= 0.0 {
            continue;
        }
        for (slot, &i) in v.active.iter().enumerate() {
            if union.is_interior(i) {
                continue;
            }
            seen += 1;
            let weighted = v.grad_theta[slot].norm() * g_b * floor;
            worst.update(weighted / (INEQUALITY_SLACK * n0), v.point);
        }
    }
    checks.push(worst.into_check(
        "pou-boundary-gradient-bound",
        seen,
        format!(
            "|grad theta_i| * gamma_b * dist(x, boundary) <= n_0 = {n0} for boundary i, \
             5% slack, distance floored by the grid transform"
        ),
    ));

    Ok(VerifyReport { checks })
}

/// Sampled verification of the overlap inequalities: the interior depth
/// floor, the boundary distance equivalence, and the pointwise cone bound
/// on two-ball junctions. Each inequality is paired with a negative
/// control that inflates its constant tenfold and must be rejected.
pub fn verify_overlap_inequalities(
    union: &BallUnion,
    samples: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let r_min = union.r_min();
    let h = r_min / 6.0;
    let field = sas_field(union, 0.0, h, 32_000_000)?;
    let assumptions = check_assumptions(union, DEFAULT_CIRCLE_SAMPLES);
    let g_b = gamma_b(assumptions.beta_min, r_min, union.r_max())?;
    let delta_total = |x: Vec3| -> f64 { union.balls().iter().map(|b| b.depth(x)).sum() };

    // interior depth floor
    if union.interior().is_empty() {
        checks.push(CheckResult::vacuous("overlap-interior-floor", "no interior balls"));
        checks.push(CheckResult::vacuous(
            "overlap-interior-floor-negative-control",
            "no interior balls",
        ));
    } else {
        let g_int = gamma_int(union, 2000);
        let per_ball = samples.div_ceil(union.interior().len());
        let mut worst = Worst::new();
        let mut tight = Tightest::new();
        let mut seen = 0usize;
        for &i in union.interior() {
            let ball = union.ball(i);
            let mut rng = rng_for(seed, 0x0a01_0000 + i as u64);
            for _ in 0..per_ball {
                let x = uniform_in_ball(&mut rng, ball.center, ball.radius);
                let d = delta_total(x);
                seen += 1;
                // direct: delta >= gamma_int with 5% headroom
                worst.update(g_int / (INEQUALITY_SLACK * d), x);
                // control: tenfold floor must be undercut somewhere
                tight.update(d / (10.0 * g_int / INEQUALITY_SLACK), x);
            }
        }
        checks.push(worst.into_check(
            "overlap-interior-floor",
            seen,
            format!("delta(x) >= gamma_int = {g_int:.4} on interior balls, 5% slack"),
        ));
        checks.push(tight.into_control(
            "overlap-interior-floor-negative-control",
            seen,
            "tenfold gamma_int must be violated by some sample".into(),
        ));
    }

    // boundary distance equivalence
    {
        let per_ball = samples.div_ceil(union.boundary().len().max(1));
        let mut worst = Worst::new();
        let mut tight = Tightest::new();
        let mut seen = 0usize;
        for &i in union.boundary() {
            let ball = union.ball(i);
            let mut rng = rng_for(seed, 0x0a02_0000 + i as u64);
            for _ in 0..per_ball {
                let x = uniform_in_ball(&mut rng, ball.center, ball.radius);
                let floor = dist_floor(union, &field, x);
                if floor <= 0.0 {
                    continue;
                }
                let d = delta_total(x);
                seen += 1;
                worst.update(g_b * floor / (INEQUALITY_SLACK * d), x);
                tight.update(d / (10.0 * g_b * floor / INEQUALITY_SLACK), x);
            }
        }
        checks.push(worst.into_check(
            "overlap-boundary-distance",
            seen,
            format!(
                "delta(x) >= gamma_b * dist(x, boundary) with gamma_b = {g_b:.4}, \
                 5% slack, transform-floored distance"
            ),
        ));
        checks.push(tight.into_control(
            "overlap-boundary-distance-negative-control",
            seen,
            "tenfold gamma_b must be violated by some sample".into(),
        ));
    }

    // pointwise cone bound at a two-ball junction
    if union.len() == 2 {
        if let Some(circle) = intersection_circle(union.ball(0), union.ball(1)) {
            let y = circle.sample(1)[0];
            let alpha = std::f64::consts::FRAC_PI_2 - assumptions.beta_min;
            let c_alpha = alpha.cos() / 2.0;
            let mut worst = Worst::new();
            let mut tight = Tightest::new();
            let mut seen = 0usize;
            for bi in 0..2 {
                let ball = union.ball(bi);
                let v = (ball.center - y)
                    .normalized(1e-14)
                    .expect("junction point coincides with a center");
                let (u1, u2) = orthonormal_frame(v);
                let mut rng = rng_for(seed, 0x0a03_0000 + bi as u64);
                let mut attempts = 0usize;
                let target = samples / 2;
                while seen < target * (bi + 1) && attempts < 200 * target {
                    attempts += 1;
                    // direction within the cone of half-angle alpha; the
                    // bound covers the near branch, where the maximal
                    // distance from the apex over an equal-depth circle is
                    // R cos(alpha), so the ray length stops there
                    let phi = alpha * rng.random::<f64>().sqrt();
                    let psi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                    let w = v * phi.cos() + (u1 * psi.cos() + u2 * psi.sin()) * phi.sin();
                    let t = ball.radius * alpha.cos() * rng.random::<f64>();
                    if t <= 0.0 {
                        continue;
                    }
                    let x = y + w * t;
                    let r = x.dist(ball.center);
                    if r <= ball.radius * alpha.sin() || r >= ball.radius {
                        continue;
                    }
                    let depth = ball.radius - r;
                    seen += 1;
                    worst.update(c_alpha * t / depth, x);
                    tight.update(depth / (10.0 * c_alpha * t), x);
                }
            }
            checks.push(worst.into_check(
                "cone-pointwise-bound",
                seen,
                format!(
                    "delta_i(x) >= cos(alpha)/2 * dist(x, y) = {c_alpha:.4} * dist on the \
                     junction cone shell"
                ),
            ));
            checks.push(tight.into_control(
                "cone-pointwise-bound-negative-control",
                seen,
                "tenfold cone constant must be violated by some sample".into(),
            ));
        } else {
            checks.push(CheckResult::vacuous(
                "cone-pointwise-bound",
                "balls do not intersect transversally",
            ));
            checks.push(CheckResult::vacuous(
                "cone-pointwise-bound-negative-control",
                "balls do not intersect transversally",
            ));
        }
    } else {
        checks.push(CheckResult::vacuous(
            "cone-pointwise-bound",
            "needs a two-ball junction fixture",
        ));
        checks.push(CheckResult::vacuous(
            "cone-pointwise-bound-negative-control",
            "needs a two-ball junction fixture",
        ));
    }

    Ok(VerifyReport { checks })
}

/// Verifies the spectral floor: the smallest eigenvalue of the discrete
/// Laplacian, found by inverse power iteration, must not undercut the
/// fatness-based lower bound. Reports the slack factor between them.
pub fn verify_eigen_bound(grid: &GridDomain, report: &IndicatorReport) -> Result<VerifyReport> {
    let a = grid.matrix();
    let solve = |r: &[f64]| -> Vec<f64> {
        let (x, _) = cg(a, None, r, 1e-12, 10 * grid.num_dofs().max(100))
            .expect("conjugate gradients on the SPD Laplacian");
        x
    };
    let lam_min = inverse_power_min(a, &solve, 200, 1e-10, 0x11a0)?;
    let bound = report.eig_lower_bound;
    let ratio = bound / lam_min;
    let check = CheckResult {
        name: "eigenvalue-floor".into(),
        passed: ratio <= 1.0,
        samples: 1,
        worst_ratio: ratio,
        witness: None,
        detail: format!(
            "lambda_min = {lam_min:.6e} vs lower bound {bound:.6e}; slack factor {:.3e}",
            lam_min / bound
        ),
    };
    Ok(VerifyReport {
        checks: vec![check],
    })
}

/// One row of a scaling sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub geometry: String,
    pub m: usize,
    pub method: Method,
    pub h: f64,
    pub tol: f64,
    pub iterations: usize,
    pub rho: f64,
    pub d_f: f64,
    pub n_0: usize,
    pub n_max: usize,
    pub s0_bound: f64,
    pub converged: bool,
}

impl SweepRow {
    pub fn csv_header() -> &'static str {
        "geometry,M,method,h,tol,iterations,rho,d_F,n_0,n_max,s0_bound,converged"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.geometry,
            self.m,
            self.method,
            self.h,
            self.tol,
            self.iterations,
            self.rho,
            self.d_f,
            self.n_0,
            self.n_max,
            self.s0_bound,
            self.converged
        )
    }
}

/// Rows of a sweep plus, for the cubic case, the log-log slope of
/// iterations against the ball count.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub loglog_slope: Option<f64>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SweepRow::csv_header());
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_row());
            out.push('\n');
        }
        if let Some(slope) = self.loglog_slope {
            out.push_str(&format!("# loglog_slope_iterations_vs_M={slope}\n"));
        }
        out
    }
}

/// Reduced indicator budget for sweeps: the per-row constants stay
/// deterministic but cheap.
fn sweep_indicator_config(h: f64) -> IndicatorConfig {
    IndicatorConfig {
        h: Some(h),
        mc_samples: 10_000,
        probes_per_ball: 8,
        boundary_samples: 500,
        refine_levels: 1,
        ..IndicatorConfig::default()
    }
}

/// Runs one solve-and-measure pass per lattice size.
///
/// Case 1 grows a bar `(1,1,n)`, case 2 a slab pillar `(4,4,n)`, case 3 a
/// cube `(n,n,n)`; radius is fixed at 0.9. Each row records the iteration
/// count of `method` at `tol`, the measured sweep contraction factor, and
/// the geometry indicators. For case 3 the log-log slope of iterations
/// against `M = n^3` is fitted.
pub fn scaling_sweep(
    case: u8,
    n_list: &[usize],
    method: Method,
    tol: f64,
    h: f64,
    seed: u64,
) -> Result<SweepResult> {
    if !(1..=3).contains(&case) {
        return Err(Error::invalid_argument(format!(
            "sweep case {case} not in 1..=3"
        )));
    }
    if n_list.is_empty() {
        return Err(Error::invalid_argument("sweep needs at least one size"));
    }
    let radius = 0.9;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::invalid_argument("lattice size must be positive"));
        }
        let (nx, ny, nz) = match case {
            1 => (1, 1, n),
            2 => (4, 4, n),
            _ => (n, n, n),
        };
        let union = crate::generators::lattice(nx, ny, nz, radius)?;
        let grid = build_grid(&union, h, DEFAULT_DOF_CAP)?;
        let b = assemble_rhs(&grid, |_| 1.0)?;
        let out = solve(&grid, &union, &b, method, tol, 400)?;

        let solvers = SubdomainSolverSet::build(&grid, &union)?;
        let coarse: Option<CoarseSpace> = if method.wants_coarse() {
            match build_coarse_space(&grid, &union) {
                Ok(c) => Some(c),
                Err(Error::EmptyCoarseSpace) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let contraction =
            estimate_contraction(grid.matrix(), &solvers, coarse.as_ref(), 12, seed)?;

        let report = crate::indicators::compute_report(&union, &sweep_indicator_config(h))?;
        rows.push(SweepRow {
            geometry: format!("lattice:{nx}x{ny}x{nz}:{radius}"),
            m: union.len(),
            method,
            h,
            tol,
            iterations: out.report.iterations,
            rho: contraction.rho,
            d_f: report.d_f,
            n_0: report.n_0,
            n_max: report.n_max,
            s0_bound: report.s0_bound,
            converged: out.report.converged,
        });
    }

    let loglog_slope = if case == 3 && rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| (r.m as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| (r.iterations.max(1) as f64).ln()).collect();
        Some(least_squares_slope(&xs, &ys))
    } else {
        None
    };

    Ok(SweepResult { rows, loglog_slope })
}

/// Slope of the least-squares line through `(xs, ys)`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Coefficient of determination of the least-squares line through
/// `(xs, ys)`.
pub fn least_squares_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    (sxy * sxy) / (sxx * syy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{chain, lattice};
    use crate::geometry::Ball;
    use crate::vec3::vec3;

    fn single_ball() -> BallUnion {
        BallUnion::from_balls(vec![Ball::new(vec3(0.0, 0.0, 0.0), 1.0)]).unwrap()
    }

    fn two_balls() -> BallUnion {
        BallUnion::from_balls(vec![
            Ball::new(vec3(0.0, 0.0, 0.0), 1.0),
            Ball::new(vec3(1.0, 0.0, 0.0), 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn pou_suite_passes_on_single_ball() {
        let report = verify_pou(&single_ball(), 500, 5).unwrap();
        assert!(report.all_passed(), "{:#?}", report.lines());
        // interior bound is vacuous: a lone ball has no interior member
        let vac = report
            .checks
            .iter()
            .find(|c| c.name == "pou-interior-gradient-bound")
            .unwrap();
        assert_eq!(vac.samples, 0);
    }

    #[test]
    fn pou_suite_passes_on_two_balls_and_chain() {
        for union in [two_balls(), chain(5, 1.0, 0.9).unwrap()] {
            let report = verify_pou(&union, 1000, 5).unwrap();
            assert!(report.all_passed(), "{:#?}", report.lines());
        }
    }

    #[test]
    fn pou_suite_exercises_interior_bound_on_lattice() {
        let union = lattice(3, 3, 3, 0.9).unwrap();
        let report = verify_pou(&union, 800, 5).unwrap();
        assert!(report.all_passed(), "{:#?}", report.lines());
        let int = report
            .checks
            .iter()
            .find(|c| c.name == "pou-interior-gradient-bound")
            .unwrap();
        assert!(int.samples > 0, "interior bound never sampled");
    }

    #[test]
    fn overlap_inequalities_hold_with_working_negative_controls() {
        let union = two_balls();
        let report = verify_overlap_inequalities(&union, 800, 9).unwrap();
        assert!(report.all_passed(), "{:#?}", report.lines());
        let cone = report
            .checks
            .iter()
            .find(|c| c.name == "cone-pointwise-bound")
            .unwrap();
        assert!(cone.samples > 100);
        let control = report
            .checks
            .iter()
            .find(|c| c.name == "cone-pointwise-bound-negative-control")
            .unwrap();
        assert!(control.worst_ratio < 1.0);
    }

    #[test]
    fn overlap_interior_floor_runs_on_lattice() {
        let union = lattice(3, 3, 3, 0.9).unwrap();
        let report = verify_overlap_inequalities(&union, 400, 9).unwrap();
        assert!(report.all_passed(), "{:#?}", report.lines());
        let floor = report
            .checks
            .iter()
            .find(|c| c.name == "overlap-interior-floor")
            .unwrap();
        assert!(floor.samples > 0);
    }

    #[test]
    fn single_ball_distance_equivalence_is_slack() {
        // for one ball delta(x) equals the boundary distance exactly, so
        // the check passes with a wide margin
        let union = single_ball();
        let report = verify_overlap_inequalities(&union, 400, 9).unwrap();
        let dist = report
            .checks
            .iter()
            .find(|c| c.name == "overlap-boundary-distance")
            .unwrap();
        assert!(dist.passed);
        assert!(dist.worst_ratio < 0.7, "ratio {}", dist.worst_ratio);
    }

    #[test]
    fn eigenvalue_floor_on_unit_ball() {
        let union = single_ball();
        let grid = build_grid(&union, 0.15, DEFAULT_DOF_CAP).unwrap();
        let cfg = IndicatorConfig {
            h: Some(0.15),
            mc_samples: 4_000,
            probes_per_ball: 8,
            boundary_samples: 500,
            refine_levels: 1,
            ..IndicatorConfig::default()
        };
        let indicators = crate::indicators::compute_report(&union, &cfg).unwrap();
        let report = verify_eigen_bound(&grid, &indicators).unwrap();
        assert!(report.all_passed(), "{:#?}", report.lines());
        // the Dirichlet ball eigenvalue is pi^2; the bound sits orders of
        // magnitude below it
        let check = &report.checks[0];
        assert!(check.worst_ratio < 1e-4, "ratio {}", check.worst_ratio);
    }

    #[test]
    fn sweep_rows_are_complete_and_deterministic() {
        let rows = scaling_sweep(1, &[2, 3], Method::GmresMs, 1e-8, 0.3, 42).unwrap();
        assert_eq!(rows.rows.len(), 2);
        assert!(rows.loglog_slope.is_none());
        for row in &rows.rows {
            assert!(row.converged, "row did not converge: {}", row.csv_row());
            assert!(row.iterations > 0);
            assert!(row.rho > 0.0 && row.rho < 1.0);
            assert!(row.d_f > 0.0);
        }
        assert_eq!(rows.rows[0].geometry, "lattice:1x1x2:0.9");
        let again = scaling_sweep(1, &[2, 3], Method::GmresMs, 1e-8, 0.3, 42).unwrap();
        assert_eq!(rows.to_csv(), again.to_csv());
        let header_cols = SweepRow::csv_header().split(',').count();
        assert_eq!(header_cols, 12);
        assert_eq!(rows.rows[0].csv_row().split(',').count(), 12);
    }

    #[test]
    fn cubic_sweep_reports_slope() {
        let rows = scaling_sweep(3, &[2, 3], Method::Ms, 1e-6, 0.3, 42).unwrap();
        assert!(rows.loglog_slope.is_some());
        assert!(rows.to_csv().contains("loglog_slope"));
    }

    #[test]
    fn sweep_rejects_bad_case() {
        assert!(scaling_sweep(0, &[2], Method::Ms, 1e-8, 0.3, 1).is_err());
        assert!(scaling_sweep(4, &[2], Method::Ms, 1e-8, 0.3, 1).is_err());
        assert!(scaling_sweep(1, &[], Method::Ms, 1e-8, 0.3, 1).is_err());
    }

    #[test]
    fn regression_helpers_recover_lines() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 0.5 * x).collect();
        assert!((least_squares_slope(&xs, &ys) - 0.5).abs() < 1e-12);
        assert!((least_squares_r2(&xs, &ys) - 1.0).abs() < 1e-12);
    }
}
