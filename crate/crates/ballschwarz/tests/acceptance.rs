//! Acceptance gate: one test per shipped guarantee, one verdict line per
//! criterion. Tolerances are pinned here, not read from anywhere else.

use std::time::Instant;

use ballschwarz::diagnostics::{
    least_squares_r2, least_squares_slope, verify_overlap_inequalities, verify_pou,
};
use ballschwarz::generators::{chain, lattice};
use ballschwarz::geometry::{Ball, BallUnion};
use ballschwarz::grid::{assemble_rhs, build_grid, DEFAULT_DOF_CAP};
use ballschwarz::indicators::{default_lambda_grid, eig_lower_bound, global_fatness, n_0};
use ballschwarz::krylov::{cg, inverse_power_min, lanczos_extremes};
use ballschwarz::pou::theta_energy_on_grid;
use ballschwarz::schwarz::{
    estimate_contraction, multiplicative_sweep, quadratic_energy, residual, solve, sweep_observed,
    AdditiveOp, Method, SubdomainSolverSet,
};
use ballschwarz::vec3::vec3;

const H: f64 = 0.15;
const TOL: f64 = 1e-8;
const MAX_ITERS: usize = 400;
const SEED: u64 = 20240917;
const NODE_CAP: usize = 32_000_000;

fn criterion(num: u8, name: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {num} {verdict}: {name} ({detail})");
    assert!(passed, "criterion {num} ({name}) failed: {detail}");
}

/// The geometries every "all fixtures" criterion runs over.
fn fixtures() -> Vec<(&'static str, BallUnion)> {
    vec![
        ("chain-2", chain(2, 1.0, 0.9).unwrap()),
        ("chain-4", chain(4, 1.0, 0.9).unwrap()),
        ("lattice-2", lattice(2, 2, 2, 0.9).unwrap()),
        ("lattice-3", lattice(3, 3, 3, 0.9).unwrap()),
    ]
}

fn d_f_of(union: &BallUnion) -> f64 {
    global_fatness(union, H, &default_lambda_grid(), NODE_CAP)
        .unwrap()
        .d_f
}

fn solve_iterations(union: &BallUnion, method: Method) -> (usize, bool) {
    let grid = build_grid(union, H, DEFAULT_DOF_CAP).unwrap();
    let b = assemble_rhs(&grid, |_| 1.0).unwrap();
    let out = solve(&grid, union, &b, method, TOL, MAX_ITERS).unwrap();
    (out.report.iterations, out.report.converged)
}

#[test]
fn criterion_01_chain_fatness_is_scale_free() {
    // d_F = 7.2 +- 10% for every chain length, spread max/min <= 1.1,
    // <= 120 s per geometry
    let mut values = Vec::new();
    let mut detail = String::new();
    let mut budget_ok = true;
    for m in [4usize, 8, 16] {
        let union = chain(m, 1.0, 0.9).unwrap();
        let start = Instant::now();
        let d_f = d_f_of(&union);
        let secs = start.elapsed().as_secs_f64();
        budget_ok &= secs <= 120.0;
        detail.push_str(&format!("M={m}: d_F={d_f:.4} in {secs:.1}s; "));
        values.push(d_f);
    }
    let in_band = values.iter().all(|v| (v - 7.2).abs() <= 0.72);
    let spread = values.iter().cloned().fold(f64::MIN, f64::max)
        / values.iter().cloned().fold(f64::MAX, f64::min);
    detail.push_str(&format!("spread={spread:.4}"));
    criterion(
        1,
        "chain fatness diameter is 7.2 and independent of length",
        in_band && spread <= 1.1 && budget_ok,
        &detail,
    );
}

#[test]
fn criterion_02_lattice_fatness_grows_affinely() {
    // linear fit of d_F against n over n in {3,4,5} has R^2 >= 0.95 with
    // positive slope
    let ns = [3usize, 4, 5];
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = ns
        .iter()
        .map(|&n| d_f_of(&lattice(n, n, n, 0.9).unwrap()))
        .collect();
    let slope = least_squares_slope(&xs, &ys);
    let r2 = least_squares_r2(&xs, &ys);
    criterion(
        2,
        "cube lattice fatness diameter grows affinely with edge count",
        slope > 0.0 && r2 >= 0.95,
        &format!("d_F={ys:.4?}, slope={slope:.4}, R^2={r2:.6}"),
    );
}

#[test]
fn criterion_03_bar_and_pillar_iterations_stay_bounded() {
    // gmres-ms at 1e-8: iteration spread max/min <= 1.5 within each
    // family over n in {2,4,8,16}; <= 600 s for all eight solves
    let start = Instant::now();
    let mut detail = String::new();
    let mut all_bounded = true;
    for (family, dims) in [("bar", (1usize, 1usize)), ("pillar", (4, 4))] {
        let mut iters = Vec::new();
        for n in [2usize, 4, 8, 16] {
            let union = lattice(dims.0, dims.1, n, 0.9).unwrap();
            let (it, converged) = solve_iterations(&union, Method::GmresMs);
            assert!(converged, "{family} n={n} did not converge");
            iters.push(it as f64);
        }
        let spread = iters.iter().cloned().fold(f64::MIN, f64::max)
            / iters.iter().cloned().fold(f64::MAX, f64::min);
        detail.push_str(&format!("{family}: iters={iters:.0?} spread={spread:.3}; "));
        all_bounded &= spread <= 1.5;
    }
    let secs = start.elapsed().as_secs_f64();
    detail.push_str(&format!("total {secs:.0}s"));
    criterion(
        3,
        "bar and pillar families keep iteration counts flat",
        all_bounded && secs <= 600.0,
        &detail,
    );
}

#[test]
fn criterion_04_cube_iterations_grow_like_cube_root() {
    // gmres-ms iterations over (n,n,n), n in {2,3,4,5}: nondecreasing
    // with an overall increase, and log-log slope against M = n^3 in
    // [0.18, 0.48]
    let ns = [2usize, 3, 4, 5];
    let mut iters = Vec::new();
    for &n in &ns {
        let union = lattice(n, n, n, 0.9).unwrap();
        let (it, converged) = solve_iterations(&union, Method::GmresMs);
        assert!(converged, "cube n={n} did not converge");
        iters.push(it);
    }
    let monotone = iters.windows(2).all(|w| w[1] >= w[0]) && iters[3] > iters[0];
    let xs: Vec<f64> = ns.iter().map(|&n| ((n * n * n) as f64).ln()).collect();
    let ys: Vec<f64> = iters.iter().map(|&i| (i as f64).ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    criterion(
        4,
        "cube family iteration growth matches the cube-root rate",
        monotone && (0.18..=0.48).contains(&slope),
        &format!("iters={iters:?}, slope={slope:.4}"),
    );
}

#[test]
fn criterion_05_coarse_space_flattens_cube_growth() {
    // repeating the cube family with coarse-corrected methods keeps the
    // iteration spread max/min <= 1.5
    let ns = [2usize, 3, 4, 5];
    let mut detail = String::new();
    let mut all_flat = true;
    for method in [Method::MsCoarse, Method::GmresMsCoarse] {
        let mut iters = Vec::new();
        for &n in &ns {
            let union = lattice(n, n, n, 0.9).unwrap();
            let (it, converged) = solve_iterations(&union, method);
            assert!(converged, "{method} n={n} did not converge");
            iters.push(it as f64);
        }
        let spread = iters.iter().cloned().fold(f64::MIN, f64::max)
            / iters.iter().cloned().fold(f64::MAX, f64::min);
        detail.push_str(&format!("{method}: iters={iters:.0?} spread={spread:.3}; "));
        all_flat &= spread <= 1.5;
    }
    criterion(
        5,
        "coarse correction flattens cube family iteration growth",
        all_flat,
        &detail,
    );
}

#[test]
fn criterion_06_additive_spectrum_respects_multiplicity() {
    // Lanczos lambda_max of the additive-preconditioned operator stays
    // below the covering multiplicity n_0 + 1e-6 on every fixture
    let mut detail = String::new();
    let mut all_below = true;
    for (name, union) in fixtures() {
        let grid = build_grid(&union, H, DEFAULT_DOF_CAP).unwrap();
        let solvers = SubdomainSolverSet::build(&grid, &union).unwrap();
        let op = AdditiveOp {
            solvers: &solvers,
            coarse: None,
            n: grid.num_dofs(),
        };
        let (_, hi) = lanczos_extremes(grid.matrix(), Some(&op), 2, 60, SEED).unwrap();
        let n0 = n_0(&union, union.r_min() / 6.0, 2) as f64;
        detail.push_str(&format!("{name}: lambda_max={hi:.6} n_0={n0}; "));
        all_below &= hi <= n0 + 1e-6;
    }
    criterion(
        6,
        "additive operator eigenvalues stay below the covering multiplicity",
        all_below,
        &detail,
    );
}

#[test]
fn criterion_07_laplacian_spectrum_respects_fatness_floor() {
    // inverse-power lambda_min >= 1/(c_H c_M d_F) on every fixture
    let mut detail = String::new();
    let mut all_above = true;
    for (name, union) in fixtures() {
        let grid = build_grid(&union, H, DEFAULT_DOF_CAP).unwrap();
        let a = grid.matrix();
        let solve_cg = |r: &[f64]| -> Vec<f64> {
            let (x, _) = cg(a, None, r, 1e-12, 10 * grid.num_dofs().max(100)).unwrap();
            x
        };
        let lam_min = inverse_power_min(a, &solve_cg, 200, 1e-10, SEED).unwrap();
        let bound = eig_lower_bound(d_f_of(&union));
        detail.push_str(&format!("{name}: lambda_min={lam_min:.4e} floor={bound:.4e}; "));
        all_above &= lam_min >= bound;
    }
    criterion(
        7,
        "smallest Laplacian eigenvalue clears the fatness floor",
        all_above,
        &detail,
    );
}

#[test]
fn criterion_08_partition_of_unity_suite() {
    // sum to one within 1e-12, range, support, finite-difference
    // gradients within 1e-4, interior and boundary gradient bounds with
    // 5% slack, at 10^4 points per fixture
    let mut detail = String::new();
    let mut all_passed = true;
    for (name, union) in fixtures() {
        let report = verify_pou(&union, 10_000, SEED).unwrap();
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        detail.push_str(&format!(
            "{name}: {}; ",
            if failed.is_empty() {
                "ok".to_string()
            } else {
                format!("failed {failed:?}")
            }
        ));
        all_passed &= failed.is_empty();
    }
    criterion(
        8,
        "partition-of-unity identities and gradient bounds hold",
        all_passed,
        &detail,
    );
}

#[test]
fn criterion_09_overlap_inequalities_with_negative_controls() {
    // depth floor, boundary distance bound, and the junction cone bound
    // all pass while their tenfold-constant controls are rejected
    let mut detail = String::new();
    let mut all_good = true;
    for (name, union) in [
        ("chain-2", chain(2, 1.0, 0.9).unwrap()),
        ("lattice-3", lattice(3, 3, 3, 0.9).unwrap()),
    ] {
        let report = verify_overlap_inequalities(&union, 10_000, SEED).unwrap();
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        // controls are encoded so that "passed" means the inflated
        // constant was caught; require them non-vacuous where applicable
        let live_controls = report
            .checks
            .iter()
            .filter(|c| c.name.ends_with("negative-control") && c.samples > 0)
            .count();
        detail.push_str(&format!(
            "{name}: {} with {live_controls} live controls; ",
            if failed.is_empty() {
                "ok".to_string()
            } else {
                format!("failed {failed:?}")
            }
        ));
        all_good &= failed.is_empty() && live_controls >= 2;
    }
    criterion(
        9,
        "overlap inequalities hold and inflated constants are rejected",
        all_good,
        &detail,
    );
}

#[test]
fn criterion_10_multiplicative_sweep_invariants() {
    // energy never increases along any substep (1e-12 relative slack),
    // the exact solution is a fixed point (1e-10 relative), and the
    // measured contraction factor is below one, on every fixture
    let mut detail = String::new();
    let mut all_hold = true;
    for (name, union) in fixtures() {
        let grid = build_grid(&union, H, DEFAULT_DOF_CAP).unwrap();
        let a = grid.matrix();
        let b = assemble_rhs(&grid, |p| 1.0 + 0.25 * p.x).unwrap();
        let solvers = SubdomainSolverSet::build(&grid, &union).unwrap();

        // energy monotonicity along three sweeps from zero
        let mut u = vec![0.0; grid.num_dofs()];
        let mut energies = vec![quadratic_energy(a, &u, &b)];
        for _ in 0..3 {
            sweep_observed(a, &mut u, &b, &solvers, None, |v| {
                energies.push(quadratic_energy(a, v, &b));
            });
        }
        let scale = energies[0].abs().max(energies.last().unwrap().abs());
        let monotone = energies
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-12 * scale.max(1.0));

        // fixed point: a sweep may not move the converged solution
        let (u_star, _) = cg(a, None, &b, 1e-14, 20 * grid.num_dofs()).unwrap();
        let mut moved = u_star.clone();
        multiplicative_sweep(a, &mut moved, &b, &solvers, None);
        let drift = moved
            .iter()
            .zip(&u_star)
            .map(|(m, s)| (m - s).abs())
            .fold(0.0f64, f64::max);
        let u_scale = u_star.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let fixed = drift <= 1e-10 * u_scale.max(1.0);

        // contraction below one
        let rho = estimate_contraction(a, &solvers, None, 12, SEED)
            .unwrap()
            .rho;
        let contracts = rho < 1.0;

        detail.push_str(&format!(
            "{name}: monotone={monotone} drift={drift:.2e} rho={rho:.4}; "
        ));
        all_hold &= monotone && fixed && contracts;

        // residual sanity: three sweeps must already reduce the residual
        let r = residual(a, &u, &b);
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        all_hold &= rn < bn;
    }
    criterion(
        10,
        "multiplicative sweep is energy-monotone, fixed-point-stable, contractive",
        all_hold,
        &detail,
    );
}

#[test]
fn criterion_11_rough_partition_energy_diverges() {
    // on two radius-2 balls with centers two apart, the weight-function
    // gradient energy grows strictly under every one of three grid
    // halvings: the discrete signature of an H^1-divergent weight.
    // The gradient blows up like 1/dist toward the circle where the two
    // spheres cross (x = 0, y^2 + z^2 = 3), so a cell center landing
    // nearly on that circle injects an O(h/dist^2) spike into one level
    // of the sequence and can mask the logarithmic growth. Starting from
    // h = 0.3 keeps 3/h an integer at every halving, so the grid planes
    // nearest x = 0 sit at the same fraction of h on all four levels and
    // every center stays at least ~0.29 h away from the circle.
    let union = BallUnion::from_balls(vec![
        Ball::new(vec3(-1.0, 0.0, 0.0), 2.0),
        Ball::new(vec3(1.0, 0.0, 0.0), 2.0),
    ])
    .unwrap();
    let hs = [0.3, 0.15, 0.075, 0.0375];
    let energies: Vec<f64> = hs
        .iter()
        .map(|&h| theta_energy_on_grid(&union, 0, h))
        .collect();
    let increasing = energies.windows(2).all(|w| w[1] > w[0]);
    criterion(
        11,
        "overlap weight gradient energy diverges under refinement",
        increasing,
        &format!("energies={energies:.4?} at h={hs:?}"),
    );
}
