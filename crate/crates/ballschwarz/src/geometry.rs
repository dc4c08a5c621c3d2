//! Ball unions: neighbor structure, interior/boundary classification, and
//! geometric assumption checks.
//!
//! A geometry is a finite union of open balls. Classification distinguishes
//! balls whose sphere is completely buried in the union (interior) from
//! balls that contribute to the outer boundary. The assumption checks cover
//! connectivity, pairwise containment, and the exterior cone condition,
//! the latter by sampling the exposed sphere junctions.

use crate::error::Error;
use crate::sampling::{fibonacci_sphere, orthonormal_frame};
use crate::vec3::Vec3;
use crate::Result;
use rayon::prelude::*;
use std::io::{BufRead, BufReader};
use std::path::Path;

/// Default number of Fibonacci sample points per sphere for classification.
pub const DEFAULT_SPHERE_SAMPLES: usize = 2000;

/// Default number of sample points per pairwise intersection circle.
pub const DEFAULT_CIRCLE_SAMPLES: usize = 64;

/// Relative tangency tolerance: pairs whose overlap margin is below
/// `TANGENCY_REL_TOL * r_max` are treated as non-overlapping.
pub const TANGENCY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec3, radius: f64) -> Ball {
        Ball { center, radius }
    }

    /// Strict membership in the open ball.
    pub fn contains(&self, x: Vec3) -> bool {
        x.dist(self.center) < self.radius
    }

    /// Distance to the sphere from inside, clamped to zero outside.
    pub fn depth(&self, x: Vec3) -> f64 {
        (self.radius - x.dist(self.center)).max(0.0)
    }
}

/// A union of overlapping balls with precomputed neighbor and index
/// structure.
#[derive(Debug, Clone)]
pub struct BallUnion {
    balls: Vec<Ball>,
    /// Sorted neighbor lists; `i` is always a member of its own list.
    neighbors: Vec<Vec<usize>>,
    interior_flag: Vec<bool>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// Interior neighbors of each ball (its own index included when the
    /// ball itself is interior).
    star_neighbors: Vec<Vec<usize>>,
    /// Balls all of whose neighbors are interior.
    deep_interior: Vec<usize>,
    /// Complement of `deep_interior`.
    shallow: Vec<usize>,
    r_min: f64,
    r_max: f64,
    sphere_samples: usize,
}

impl BallUnion {
    pub fn from_balls(balls: Vec<Ball>) -> Result<BallUnion> {
        BallUnion::from_balls_sampled(balls, DEFAULT_SPHERE_SAMPLES)
    }

    pub fn from_balls_sampled(balls: Vec<Ball>, sphere_samples: usize) -> Result<BallUnion> {
        if balls.is_empty() {
            return Err(Error::EmptyGeometry);
        }
        for (i, b) in balls.iter().enumerate() {
            if !b.center.is_finite() || !b.radius.is_finite() {
                return Err(Error::InvalidBall {
                    index: i,
                    msg: "non-finite center or radius".into(),
                });
            }
            if b.radius <= 0.0 {
                return Err(Error::InvalidBall {
                    index: i,
                    msg: format!("radius {} must be positive", b.radius),
                });
            }
        }
        let neighbors = compute_neighbors(&balls);
        let interior_flag = classify_indices(&balls, &neighbors, sphere_samples);

        let interior: Vec<usize> = (0..balls.len()).filter(|&i| interior_flag[i]).collect();
        let boundary: Vec<usize> = (0..balls.len()).filter(|&i| !interior_flag[i]).collect();
        let star_neighbors: Vec<Vec<usize>> = neighbors
            .iter()
            .map(|ns| ns.iter().copied().filter(|&j| interior_flag[j]).collect())
            .collect();
        let deep_interior: Vec<usize> = (0..balls.len())
            .filter(|&i| interior_flag[i] && neighbors[i].iter().all(|&j| interior_flag[j]))
            .collect();
        let shallow: Vec<usize> = (0..balls.len())
            .filter(|&i| !(interior_flag[i] && neighbors[i].iter().all(|&j| interior_flag[j])))
            .collect();

        let r_min = balls.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min);
        let r_max = balls.iter().map(|b| b.radius).fold(0.0_f64, f64::max);

        Ok(BallUnion {
            balls,
            neighbors,
            interior_flag,
            interior,
            boundary,
            star_neighbors,
            deep_interior,
            shallow,
            r_min,
            r_max,
            sphere_samples,
        })
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn ball(&self, i: usize) -> &Ball {
        &self.balls[i]
    }

    /// Sorted overlap neighbors of ball `i`, including `i` itself.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Interior members of `neighbors(i)`.
    pub fn star_neighbors(&self, i: usize) -> &[usize] {
        &self.star_neighbors[i]
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.interior_flag[i]
    }

    /// Balls whose sphere is buried in the union.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Balls contributing to the outer boundary.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Interior balls all of whose neighbors are interior as well.
    pub fn deep_interior(&self) -> &[usize] {
        &self.deep_interior
    }

    /// Complement of [`BallUnion::deep_interior`].
    pub fn shallow(&self) -> &[usize] {
        &self.shallow
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn sphere_samples(&self) -> usize {
        self.sphere_samples
    }

    /// Strict membership in the open union.
    pub fn contains(&self, x: Vec3) -> bool {
        self.balls.iter().any(|b| b.contains(x))
    }

    /// Number of balls strictly containing `x`.
    pub fn multiplicity(&self, x: Vec3) -> usize {
        self.balls.iter().filter(|b| b.contains(x)).count()
    }

    /// Axis-aligned bounding box of the union.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3 {
            x: f64::INFINITY,
            y: f64::INFINITY,
            z: f64::INFINITY,
        };
        let mut hi = -lo;
        for b in &self.balls {
            let r = Vec3 {
                x: b.radius,
                y: b.radius,
                z: b.radius,
            };
            lo = lo.min_with(b.center - r);
            hi = hi.max_with(b.center + r);
        }
        (lo, hi)
    }
}

/// Reads a geometry from a text file with one `x y z r` line per ball.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_xyzr(path: impl AsRef<Path>) -> Result<BallUnion> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let display = path.display().to_string();
    let mut balls = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: format!("expected 4 fields (x y z r), found {}", fields.len()),
            });
        }
        let mut vals = [0.0_f64; 4];
        for (k, f) in fields.iter().enumerate() {
            vals[k] = f.parse().map_err(|_| Error::Parse {
                path: display.clone(),
                line: lineno + 1,
                msg: format!("field {} ({:?}) is not a number", k + 1, f),
            })?;
        }
        balls.push(Ball::new(
            Vec3 {
                x: vals[0],
                y: vals[1],
                z: vals[2],
            },
            vals[3],
        ));
    }
    BallUnion::from_balls(balls)
}

/// Pairwise overlap neighbors. Ball `i` is always in its own list. Pairs
/// whose overlap margin `R_i + R_j - dist` falls below the tangency
/// tolerance are treated as non-overlapping.
pub fn compute_neighbors(balls: &[Ball]) -> Vec<Vec<usize>> {
    let r_max = balls.iter().map(|b| b.radius).fold(0.0_f64, f64::max);
    let tol = TANGENCY_REL_TOL * r_max;
    let mut out: Vec<Vec<usize>> = (0..balls.len()).map(|i| vec![i]).collect();
    for i in 0..balls.len() {
        for j in (i + 1)..balls.len() {
            let margin = balls[i].radius + balls[j].radius - balls[i].center.dist(balls[j].center);
            if margin >= tol {
                out[i].push(j);
                out[j].push(i);
            }
        }
    }
    for ns in &mut out {
        ns.sort_unstable();
    }
    out
}

/// Interior flags: ball `i` is interior when every Fibonacci sample on its
/// sphere lies strictly inside some other ball. Only neighbors can cover
/// sphere points, so the test is restricted to them.
pub fn classify_indices(balls: &[Ball], neighbors: &[Vec<usize>], sphere_samples: usize) -> Vec<bool> {
    let dirs = fibonacci_sphere(sphere_samples);
    (0..balls.len())
        .into_par_iter()
        .map(|i| {
            let b = &balls[i];
            dirs.iter().all(|&u| {
                let y = b.center + u * b.radius;
                neighbors[i]
                    .iter()
                    .any(|&j| j != i && balls[j].contains(y))
            })
        })
        .collect()
}

/// The circle in which two spheres intersect.
#[derive(Debug, Clone, Copy)]
pub struct Circle {
    pub center: Vec3,
    pub radius: f64,
    /// Unit normal of the circle plane.
    pub axis: Vec3,
}

impl Circle {
    /// `n` evenly spaced points on the circle.
    pub fn sample(&self, n: usize) -> Vec<Vec3> {
        let (u, v) = orthonormal_frame(self.axis);
        (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                self.center + (u * a.cos() + v * a.sin()) * self.radius
            })
            .collect()
    }
}

/// Intersection circle of two spheres, if the spheres intersect
/// transversally.
pub fn intersection_circle(a: &Ball, b: &Ball) -> Option<Circle> {
    let d = a.center.dist(b.center);
    if d <= 0.0 || d >= a.radius + b.radius || d <= (a.radius - b.radius).abs() {
        return None;
    }
    let axis = (b.center - a.center) * (1.0 / d);
    // Signed distance from center a to the circle plane along the axis.
    let t = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
    let rho_sq = a.radius * a.radius - t * t;
    if rho_sq <= 0.0 {
        return None;
    }
    Some(Circle {
        center: a.center + axis * t,
        radius: rho_sq.sqrt(),
        axis,
    })
}

/// The at most two points common to three spheres.
pub fn triple_intersection_points(a: &Ball, b: &Ball, c: &Ball) -> Vec<Vec3> {
    let ex = match (b.center - a.center).normalized(1e-14) {
        Some(e) => e,
        None => return Vec::new(),
    };
    let d = a.center.dist(b.center);
    let i = ex.dot(c.center - a.center);
    let ey = match (c.center - a.center - ex * i).normalized(1e-14) {
        Some(e) => e,
        None => return Vec::new(),
    };
    let j = ey.dot(c.center - a.center);
    let ez = ex.cross(ey);

    let x = (a.radius * a.radius - b.radius * b.radius + d * d) / (2.0 * d);
    let y = (a.radius * a.radius - c.radius * c.radius + i * i + j * j) / (2.0 * j) - (i / j) * x;
    let z_sq = a.radius * a.radius - x * x - y * y;
    if z_sq <= 0.0 {
        return Vec::new();
    }
    let z = z_sq.sqrt();
    let base = a.center + ex * x + ey * y;
    vec![base + ez * z, base - ez * z]
}

/// A sampled point of the outer boundary where two or more spheres meet,
/// with the indices of the spheres through it.
#[derive(Debug, Clone)]
pub struct JunctionPoint {
    pub point: Vec3,
    pub incident: Vec<usize>,
}

/// Samples the exposed sphere junctions: points on pairwise intersection
/// circles and triple intersection points that lie on the outer boundary.
pub fn exposed_junction_points(union: &BallUnion, per_circle: usize) -> Vec<JunctionPoint> {
    let balls = union.balls();
    let on_tol = 1e-9 * union.r_max();
    let mut candidates: Vec<Vec3> = Vec::new();
    for i in 0..balls.len() {
        for &j in union.neighbors(i) {
            if j <= i {
                continue;
            }
            if let Some(circle) = intersection_circle(&balls[i], &balls[j]) {
                candidates.extend(circle.sample(per_circle));
            }
            // Triple points with common neighbors of i and j.
            for &k in union.neighbors(i) {
                if k <= j || !union.neighbors(j).contains(&k) {
                    continue;
                }
                candidates.extend(triple_intersection_points(&balls[i], &balls[j], &balls[k]));
            }
        }
    }

    candidates
        .into_par_iter()
        .filter_map(|y| {
            let mut incident = Vec::new();
            for (k, b) in balls.iter().enumerate() {
                let d = y.dist(b.center);
                if d < b.radius - on_tol {
                    // Strictly buried: not on the outer boundary.
                    return None;
                }
                if (d - b.radius).abs() <= on_tol {
                    incident.push(k);
                }
            }
            Some(JunctionPoint { point: y, incident })
        })
        .collect()
}

/// Maximizes `min_t u . v_t` over unit vectors `u` for a nonempty set of
/// unit directions. The optimum is supported on at most three of the
/// directions, so enumerating singleton, pair, and triple support sets is
/// exact whenever the optimal value is positive.
pub fn max_min_alignment(dirs: &[Vec3]) -> (Vec3, f64) {
    assert!(!dirs.is_empty(), "alignment of an empty direction set");
    let score = |u: Vec3| dirs.iter().map(|v| u.dot(*v)).fold(f64::INFINITY, f64::min);
    let mut best_u = dirs[0];
    let mut best = score(best_u);
    let mut consider = |u: Option<Vec3>| {
        if let Some(u) = u {
            let s = score(u);
            if s > best {
                best = s;
                best_u = u;
            }
        }
    };
    for a in 0..dirs.len() {
        consider(Some(dirs[a]));
        for b in (a + 1)..dirs.len() {
            consider((dirs[a] + dirs[b]).normalized(1e-14));
            for c in (b + 1)..dirs.len() {
                let n = (dirs[a] - dirs[b]).cross(dirs[a] - dirs[c]);
                consider(n.normalized(1e-14));
                consider((-n).normalized(1e-14));
            }
        }
    }
    (best_u, best)
}

/// A sampled boundary junction with its exterior cone half-angle.
#[derive(Debug, Clone)]
pub struct ConeWitness {
    pub point: Vec3,
    pub beta: f64,
    pub incident: Vec<usize>,
}

/// Result of the geometric assumption checks.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// Overlap graph connectivity.
    pub connected: bool,
    pub components: usize,
    /// Pairs `(inner, outer)` where the closed inner ball is contained in
    /// the outer one.
    pub containment_violations: Vec<(usize, usize)>,
    /// Smallest sampled exterior cone half-angle over boundary junctions;
    /// `pi/2` when the boundary has no junctions (smooth sphere pieces
    /// only).
    pub beta_min: f64,
    /// `sin(beta_min)`: the guaranteed alignment of the cone axis with the
    /// incident sphere directions.
    pub gamma_alpha: f64,
    /// Worst sampled junctions, most acute first.
    pub witnesses: Vec<ConeWitness>,
    /// Number of boundary junction samples examined.
    pub junction_samples: usize,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.connected && self.containment_violations.is_empty() && self.beta_min > 0.0
    }
}

/// Checks connectivity, pairwise containment, and the exterior cone
/// condition. The cone condition is sampled on the exposed sphere
/// junctions; at each junction the cone axis is the direction maximizing
/// the worst alignment with the incident sphere center directions.
pub fn check_assumptions(union: &BallUnion, per_circle: usize) -> AssumptionReport {
    let balls = union.balls();
    let m = balls.len();

    // A1: breadth-first search over the overlap graph.
    let mut seen = vec![false; m];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1usize;
    while let Some(i) = queue.pop_front() {
        for &j in union.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                reached += 1;
                queue.push_back(j);
            }
        }
    }
    let mut components = 1usize;
    for i in 0..m {
        if !seen[i] {
            components += 1;
            seen[i] = true;
            let mut q = std::collections::VecDeque::from([i]);
            while let Some(a) = q.pop_front() {
                for &b in union.neighbors(a) {
                    if !seen[b] {
                        seen[b] = true;
                        q.push_back(b);
                    }
                }
            }
        }
    }
    let connected = reached == m;

    // A2: no closed ball inside another.
    let mut containment_violations = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i != j && balls[i].center.dist(balls[j].center) + balls[i].radius <= balls[j].radius
            {
                containment_violations.push((i, j));
            }
        }
    }

    // A4: sampled cone angles at exposed junctions.
    let junctions = exposed_junction_points(union, per_circle);
    let mut witnesses: Vec<ConeWitness> = junctions
        .par_iter()
        .map(|jp| {
            let dirs: Vec<Vec3> = jp
                .incident
                .iter()
                .filter_map(|&k| (balls[k].center - jp.point).normalized(1e-14))
                .collect();
            let beta = if dirs.is_empty() {
                std::f64::consts::FRAC_PI_2
            } else {
                let (_, g) = max_min_alignment(&dirs);
                std::f64::consts::FRAC_PI_2 - g.clamp(-1.0, 1.0).acos()
            };
            ConeWitness {
                point: jp.point,
                beta,
                incident: jp.incident.clone(),
            }
        })
        .collect();
    witnesses.sort_by(|a, b| a.beta.partial_cmp(&b.beta).unwrap());
    let beta_min = witnesses
        .first()
        .map(|w| w.beta)
        .unwrap_or(std::f64::consts::FRAC_PI_2);
    let junction_samples = witnesses.len();
    witnesses.truncate(5);

    AssumptionReport {
        connected,
        components,
        containment_violations,
        beta_min,
        gamma_alpha: beta_min.sin(),
        witnesses,
        junction_samples,
    }
}
