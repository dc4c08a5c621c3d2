//! Constructors for the benchmark families: cube lattices of unit
//! spacing and collinear chains.

use crate::error::Error;
use crate::geometry::{load_xyzr, Ball, BallUnion};
use crate::vec3::vec3;
use crate::Result;
use std::path::Path;

fn lattice_balls(nx: usize, ny: usize, nz: usize, r: f64) -> Result<Vec<Ball>> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::invalid_argument("lattice dimensions must be positive"));
    }
    if !(r > 0.5) {
        return Err(Error::Disconnected {
            msg: format!("lattice radius {r} <= 0.5 leaves unit-spaced balls disjoint"),
        });
    }
    let mut balls = Vec::with_capacity(nx * ny * nz);
    for x in 1..=nx {
        for y in 1..=ny {
            for z in 1..=nz {
                balls.push(Ball::new(vec3(x as f64, y as f64, z as f64), r));
            }
        }
    }
    Ok(balls)
}

fn chain_balls(m: usize, spacing: f64, r: f64) -> Result<Vec<Ball>> {
    if m == 0 {
        return Err(Error::invalid_argument("chain length must be positive"));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::invalid_argument(format!(
            "chain spacing {spacing} must be positive"
        )));
    }
    if m > 1 && spacing >= 2.0 * r {
        return Err(Error::Disconnected {
            msg: format!("chain spacing {spacing} >= 2r = {} leaves balls disjoint", 2.0 * r),
        });
    }
    let mid = (m as f64 + 1.0) / 2.0;
    Ok((1..=m)
        .map(|i| Ball::new(vec3((i as f64 - mid) * spacing, 0.0, 0.0), r))
        .collect())
}

/// Balls of radius `r` centered on the integer lattice
/// `[1,nx] x [1,ny] x [1,nz]`. The ball at `(x,y,z)` has index
/// `((x-1)*ny + (y-1))*nz + (z-1)`.
pub fn lattice(nx: usize, ny: usize, nz: usize, r: f64) -> Result<BallUnion> {
    BallUnion::from_balls(lattice_balls(nx, ny, nz, r)?)
}

/// `m` balls of radius `r` on the x-axis with the given center spacing,
/// arranged symmetrically about the origin.
pub fn chain(m: usize, spacing: f64, r: f64) -> Result<BallUnion> {
    BallUnion::from_balls(chain_balls(m, spacing, r)?)
}

/// Parses a geometry argument: `lattice:nx,ny,nz,r`, `chain:M,spacing,r`,
/// or a path to an xyzr file.
pub fn parse_geometry_spec(spec: &str, sphere_samples: usize) -> Result<BallUnion> {
    if let Some(rest) = spec.strip_prefix("lattice:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::invalid_argument(format!(
                "lattice spec needs nx,ny,nz,r, got \"{rest}\""
            )));
        }
        let dim = |s: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|_| Error::invalid_argument(format!("bad lattice dimension \"{s}\"")))
        };
        let r: f64 = parts[3]
            .trim()
            .parse()
            .map_err(|_| Error::invalid_argument(format!("bad lattice radius \"{}\"", parts[3])))?;
        let balls = lattice_balls(dim(parts[0])?, dim(parts[1])?, dim(parts[2])?, r)?;
        return BallUnion::from_balls_sampled(balls, sphere_samples);
    }
    if let Some(rest) = spec.strip_prefix("chain:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::invalid_argument(format!(
                "chain spec needs M,spacing,r, got \"{rest}\""
            )));
        }
        let m: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::invalid_argument(format!("bad chain length \"{}\"", parts[0])))?;
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::invalid_argument(format!("bad chain parameter \"{s}\"")))
        };
        let balls = chain_balls(m, num(parts[1])?, num(parts[2])?)?;
        return BallUnion::from_balls_sampled(balls, sphere_samples);
    }
    let u = load_xyzr(Path::new(spec))?;
    if u.sphere_samples() == sphere_samples {
        return Ok(u);
    }
    BallUnion::from_balls_sampled(u.balls().to_vec(), sphere_samples)
}
