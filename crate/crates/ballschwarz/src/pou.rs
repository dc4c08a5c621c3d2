//! Radial partition of unity on a ball union.
//!
//! Each ball carries the depth function `delta_i(x) = max(0, R_i - |x -
//! m_i|)`; the partition functions are `theta_i = delta_i / sum_j delta_j`.
//! They sum to one on the open union, vanish outside their ball, and are
//! differentiable away from sphere kinks and ball centers. The gradient of
//! `delta_i` at the center is taken to be zero.

use crate::error::Error;
use crate::geometry::BallUnion;
use crate::vec3::Vec3;
use crate::Result;
use rayon::prelude::*;

/// Evaluation of the partition of unity at one point. Only balls with
/// positive depth appear; entries are parallel arrays indexed by `active`.
#[derive(Debug, Clone)]
pub struct PouValue {
    pub point: Vec3,
    /// Indices of balls containing the point, ascending.
    pub active: Vec<usize>,
    /// Depths `delta_i` of the active balls.
    pub delta: Vec<f64>,
    /// Total depth `sum_j delta_j`.
    pub delta_total: f64,
    /// Partition values `theta_i` of the active balls.
    pub theta: Vec<f64>,
    /// Gradients of the active `theta_i`.
    pub grad_theta: Vec<Vec3>,
}

/// Depths of all balls containing `x`, with their total. Points outside
/// the union yield an empty list and total zero.
pub fn eval_delta(union: &BallUnion, x: Vec3) -> (Vec<(usize, f64)>, f64) {
    let mut active = Vec::new();
    let mut total = 0.0;
    for (i, b) in union.balls().iter().enumerate() {
        let d = b.depth(x);
        if d > 0.0 {
            active.push((i, d));
            total += d;
        }
    }
    (active, total)
}

/// Gradient of `delta_i` at `x`: the unit vector toward the center inside
/// the ball, zero outside and at the center itself.
fn grad_delta(union: &BallUnion, i: usize, x: Vec3) -> Vec3 {
    let b = union.ball(i);
    match (x - b.center).normalized(0.0) {
        Some(u) if x.dist(b.center) < b.radius => -u,
        _ => Vec3::ZERO,
    }
}

/// Evaluates all active partition functions and their gradients at `x`.
/// Points with zero total depth (outside the open union) are a domain
/// error.
pub fn eval_theta(union: &BallUnion, x: Vec3) -> Result<PouValue> {
    let (pairs, delta_total) = eval_delta(union, x);
    if delta_total <= 0.0 {
        return Err(Error::OutsideDomain { point: x.to_array() });
    }
    let active: Vec<usize> = pairs.iter().map(|&(i, _)| i).collect();
    let delta: Vec<f64> = pairs.iter().map(|&(_, d)| d).collect();

    let grad_sum = active
        .iter()
        .fold(Vec3::ZERO, |acc, &i| acc + grad_delta(union, i, x));

    let theta: Vec<f64> = delta.iter().map(|d| d / delta_total).collect();
    let grad_theta: Vec<Vec3> = active
        .iter()
        .zip(&theta)
        .map(|(&i, &t)| (grad_delta(union, i, x) - grad_sum * t) * (1.0 / delta_total))
        .collect();

    Ok(PouValue {
        point: x,
        active,
        delta,
        delta_total,
        theta,
        grad_theta,
    })
}

/// Value of a single `theta_i` at `x` (zero when the ball does not contain
/// `x`); domain error outside the union.
pub fn eval_theta_single(union: &BallUnion, i: usize, x: Vec3) -> Result<f64> {
    let v = eval_theta(union, x)?;
    Ok(v
        .active
        .iter()
        .position(|&j| j == i)
        .map(|k| v.theta[k])
        .unwrap_or(0.0))
}

/// Midpoint-rule approximation of the Dirichlet energy of `theta_i` over
/// its ball: the sum of `|grad theta_i|^2 h^3` over cells of spacing `h`
/// whose centers lie in the ball. The energy diverges logarithmically
/// under refinement whenever the sphere of ball `i` crosses another sphere
/// on the outer boundary; this quadrature makes that growth observable.
pub fn theta_energy_on_grid(union: &BallUnion, i: usize, h: f64) -> f64 {
    let b = union.ball(i);
    let lo = b.center
        - Vec3 {
            x: b.radius,
            y: b.radius,
            z: b.radius,
        };
    // Irrational lattice offset: keeps cell centers a bounded fraction of
    // h away from the symmetry planes of regular geometries, where the
    // integrand has its kinks.
    let c0 = 0.5 + 0.5 * (std::f64::consts::SQRT_2 - 1.0);
    let n = ((2.0 * b.radius) / h).ceil() as usize + 1;
    let slab_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|kz| {
            let mut s = 0.0;
            let z = lo.z + (kz as f64 + c0) * h;
            for ky in 0..n {
                let y = lo.y + (ky as f64 + c0) * h;
                for kx in 0..n {
                    let x = Vec3 {
                        x: lo.x + (kx as f64 + c0) * h,
                        y,
                        z,
                    };
                    if x.dist(b.center) >= b.radius {
                        continue;
                    }
                    if let Ok(v) = eval_theta(union, x) {
                        if let Some(k) = v.active.iter().position(|&j| j == i) {
                            s += v.grad_theta[k].norm_sq();
                        }
                    }
                }
            }
            s
        })
        .collect();
    slab_sums.iter().sum::<f64>() * h * h * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Ball;
    use crate::sampling::{rng_for, uniform_in_ball};
    use crate::vec3::vec3;
    use approx::assert_relative_eq;

    fn two_ball() -> BallUnion {
        BallUnion::from_balls(vec![
            Ball::new(vec3(-1.0, 0.0, 0.0), 2.0),
            Ball::new(vec3(1.0, 0.0, 0.0), 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn single_ball_theta_is_constant_one() {
        let u = BallUnion::from_balls(vec![Ball::new(Vec3::ZERO, 1.0)]).unwrap();
        let mut rng = rng_for(1, 0);
        for _ in 0..100 {
            let x = uniform_in_ball(&mut rng, Vec3::ZERO, 0.999);
            let v = eval_theta(&u, x).unwrap();
            assert_eq!(v.active, vec![0]);
            assert_relative_eq!(v.theta[0], 1.0, epsilon = 1e-15);
            assert!(v.grad_theta[0].norm() < 1e-15);
        }
    }

    #[test]
    fn partition_sums_to_one_inside() {
        let u = two_ball();
        let mut rng = rng_for(2, 0);
        for _ in 0..500 {
            let x = uniform_in_ball(&mut rng, vec3(-1.0, 0.0, 0.0), 2.0);
            if !u.contains(x) {
                continue;
            }
            let v = eval_theta(&u, x).unwrap();
            let sum: f64 = v.theta.iter().sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
            for &t in &v.theta {
                assert!((0.0..=1.0).contains(&t));
            }
            // Gradients of a partition of unity cancel; the roundoff in
            // each term scales like 1/delta_total.
            let gsum = v.grad_theta.iter().fold(Vec3::ZERO, |a, &g| a + g);
            assert!(gsum.norm() * v.delta_total < 1e-12);
        }
    }

    #[test]
    fn outside_point_is_a_domain_error() {
        let u = two_ball();
        assert!(matches!(
            eval_theta(&u, vec3(10.0, 0.0, 0.0)),
            Err(Error::OutsideDomain { .. })
        ));
        // A point exactly on the outer boundary has zero total depth.
        assert!(matches!(
            eval_theta(&u, vec3(3.0, 0.0, 0.0)),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let u = two_ball();
        let r_min = u.r_min();
        let step = 1e-5 * r_min;
        let safe = |x: Vec3| {
            u.balls().iter().all(|b| {
                let d = x.dist(b.center);
                (d - b.radius).abs() > 1e-2 * r_min && d > 1e-2 * r_min
            })
        };
        let mut rng = rng_for(3, 0);
        let mut checked = 0;
        while checked < 200 {
            let x = uniform_in_ball(&mut rng, vec3(-1.0, 0.0, 0.0), 2.0);
            if !u.contains(x) || !safe(x) {
                continue;
            }
            let v = eval_theta(&u, x).unwrap();
            for (k, &i) in v.active.iter().enumerate() {
                let mut fd = Vec3::ZERO;
                for (axis, e) in [
                    vec3(1.0, 0.0, 0.0),
                    vec3(0.0, 1.0, 0.0),
                    vec3(0.0, 0.0, 1.0),
                ]
                .iter()
                .enumerate()
                {
                    let p = eval_theta_single(&u, i, x + *e * step).unwrap();
                    let m = eval_theta_single(&u, i, x - *e * step).unwrap();
                    let d = (p - m) / (2.0 * step);
                    match axis {
                        0 => fd.x = d,
                        1 => fd.y = d,
                        _ => fd.z = d,
                    }
                }
                let scale = v.grad_theta[k].norm().max(1e-12);
                assert!(
                    (v.grad_theta[k] - fd).norm() / scale < 1e-4,
                    "gradient mismatch at {:?}: analytic {:?} vs fd {:?}",
                    x,
                    v.grad_theta[k],
                    fd
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn gradient_at_center_is_finite() {
        let u = two_ball();
        let v = eval_theta(&u, vec3(-1.0, 0.0, 0.0)).unwrap();
        for g in &v.grad_theta {
            assert!(g.is_finite());
        }
    }

    #[test]
    fn energy_grows_under_refinement_when_spheres_cross() {
        let u = two_ball();
        let e: Vec<f64> = [0.4, 0.2, 0.1]
            .iter()
            .map(|&h| theta_energy_on_grid(&u, 0, h))
            .collect();
        assert!(e[1] > e[0], "energies {e:?}");
        assert!(e[2] > e[1], "energies {e:?}");
    }

    #[test]
    fn energy_is_finite_for_buried_sphere() {
        // 3x3x3 lattice: the center sphere is buried, so theta_center is
        // Lipschitz on its ball and the energy stays bounded.
        let mut balls = Vec::new();
        for x in 1..=3 {
            for y in 1..=3 {
                for z in 1..=3 {
                    balls.push(Ball::new(vec3(x as f64, y as f64, z as f64), 0.9));
                }
            }
        }
        let u = BallUnion::from_balls(balls).unwrap();
        let e1 = theta_energy_on_grid(&u, 13, 0.1);
        let e2 = theta_energy_on_grid(&u, 13, 0.05);
        assert!(e1.is_finite() && e2.is_finite());
        // Refinement changes the quadrature by a bounded amount only.
        assert!((e2 - e1).abs() < 0.2 * e1.max(1.0));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn partition_is_normalized_on_random_unions(
                centers in prop::collection::vec((-2.0..2.0_f64, -2.0..2.0_f64, -2.0..2.0_f64), 2..6),
                px in -2.0..2.0_f64,
                py in -2.0..2.0_f64,
                pz in -2.0..2.0_f64,
            ) {
                let balls: Vec<Ball> = centers
                    .iter()
                    .map(|&(x, y, z)| Ball::new(vec3(x, y, z), 1.5))
                    .collect();
                let u = BallUnion::from_balls(balls).unwrap();
                let x = vec3(px, py, pz);
                if u.contains(x) {
                    let v = eval_theta(&u, x).unwrap();
                    let sum: f64 = v.theta.iter().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-12);
                    for &t in &v.theta {
                        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&t));
                    }
                }
            }
        }
    }
}
