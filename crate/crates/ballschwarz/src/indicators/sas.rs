//! Signed-distance fields for inflated ball unions.
//!
//! The solvent-accessible surface at probe radius `r_p` is the boundary of
//! the union of balls inflated by `r_p`. We sample its signed distance on a
//! uniform grid with an exact separable Euclidean distance transform, then
//! extract level sets (the solvent-excluded surface lives at level `r_p`) by
//! linear interpolation along grid edges.

use crate::geometry::BallUnion;
use crate::vec3::{vec3, Vec3};
use crate::{Error, Result};
use rayon::prelude::*;

/// Sentinel for "no site yet" in the distance transform. Large enough to
/// dominate any squared node distance, small enough to add without overflow.
const FAR: f64 = 1e30;

/// Fraction of `h` used to shift the grid origin off rational alignments so
/// nodes do not land exactly on sphere surfaces or ball centers.
const ORIGIN_SHIFT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Scalar field sampled at the nodes of a uniform grid.
///
/// `values[(iz * ny + iy) * nx + ix]` holds the signed distance at node
/// `origin + h * (ix, iy, iz)`: positive inside the inflated union, negative
/// outside, zero on the surface up to discretization error.
pub struct LevelSetField {
    origin: Vec3,
    h: f64,
    dims: [usize; 3],
    values: Vec<f64>,
}

impl LevelSetField {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_coord(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        vec3(
            self.origin.x + self.h * ix as f64,
            self.origin.y + self.h * iy as f64,
            self.origin.z + self.h * iz as f64,
        )
    }

    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        let [nx, ny, _] = self.dims;
        self.values[(iz * ny + iy) * nx + ix]
    }

    /// Trilinear interpolation, clamped to the grid box.
    pub fn sample(&self, p: Vec3) -> f64 {
        let [nx, ny, nz] = self.dims;
        let fx = ((p.x - self.origin.x) / self.h).clamp(0.0, (nx - 1) as f64);
        let fy = ((p.y - self.origin.y) / self.h).clamp(0.0, (ny - 1) as f64);
        let fz = ((p.z - self.origin.z) / self.h).clamp(0.0, (nz - 1) as f64);
        let ix = (fx as usize).min(nx - 2);
        let iy = (fy as usize).min(ny - 2);
        let iz = (fz as usize).min(nz - 2);
        let (tx, ty, tz) = (fx - ix as f64, fy - iy as f64, fz - iz as f64);
        let mut acc = 0.0;
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let w = (if dx == 0 { 1.0 - tx } else { tx })
                        * (if dy == 0 { 1.0 - ty } else { ty })
                        * (if dz == 0 { 1.0 - tz } else { tz });
                    acc += w * self.value(ix + dx, iy + dy, iz + dz);
                }
            }
        }
        acc
    }
}

/// Grid placement covering every ball inflated by `inflate`, padded by `pad`
/// on all sides, with an irrational origin offset.
fn grid_layout(union: &BallUnion, inflate: f64, pad: f64, h: f64) -> (Vec3, [usize; 3]) {
    let (mut lo, mut hi) = union.bounding_box();
    let grow = inflate + pad;
    lo = vec3(lo.x - grow, lo.y - grow, lo.z - grow);
    hi = vec3(hi.x + grow, hi.y + grow, hi.z + grow);
    let origin = vec3(
        lo.x - h * ORIGIN_SHIFT,
        lo.y - h * ORIGIN_SHIFT,
        lo.z - h * ORIGIN_SHIFT,
    );
    let dims = [
        ((hi.x - origin.x) / h).floor() as usize + 2,
        ((hi.y - origin.y) / h).floor() as usize + 2,
        ((hi.z - origin.z) / h).floor() as usize + 2,
    ];
    (origin, dims)
}

/// Marks nodes strictly inside the union of balls inflated by `inflate`.
fn rasterize(
    union: &BallUnion,
    origin: Vec3,
    h: f64,
    dims: [usize; 3],
    inflate: f64,
) -> Vec<bool> {
    let [nx, ny, nz] = dims;
    let mut mask = vec![false; nx * ny * nz];
    mask.par_chunks_mut(nx * ny)
        .enumerate()
        .for_each(|(iz, slab)| {
            let z = origin.z + h * iz as f64;
            for ball in union.balls() {
                let r = ball.radius + inflate;
                let dz = z - ball.center.z;
                let rz2 = r * r - dz * dz;
                if rz2 <= 0.0 {
                    continue;
                }
                let ry = rz2.sqrt();
                let iy_lo = (((ball.center.y - ry - origin.y) / h).ceil().max(0.0)) as usize;
                let iy_hi = ((ball.center.y + ry - origin.y) / h).floor().min((ny - 1) as f64);
                if iy_hi < 0.0 {
                    continue;
                }
                for iy in iy_lo..=iy_hi as usize {
                    let dy = origin.y + h * iy as f64 - ball.center.y;
                    let rx2 = rz2 - dy * dy;
                    if rx2 <= 0.0 {
                        continue;
                    }
                    let rx = rx2.sqrt();
                    let ix_lo = (((ball.center.x - rx - origin.x) / h).ceil().max(0.0)) as usize;
                    let ix_hi =
                        ((ball.center.x + rx - origin.x) / h).floor().min((nx - 1) as f64);
                    if ix_hi < 0.0 {
                        continue;
                    }
                    for ix in ix_lo..=ix_hi as usize {
                        let dx = origin.x + h * ix as f64 - ball.center.x;
                        if dx * dx + dy * dy + dz * dz < r * r {
                            slab[iy * nx + ix] = true;
                        }
                    }
                }
            }
        });
    mask
}

/// One-dimensional squared distance transform (lower envelope of parabolas).
/// `f` holds source costs, `d` receives `min_q (p - q)^2 + f[q]`.
fn dt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    debug_assert!(n > 0);
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -FAR;
    z[1] = FAR;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                // invariant: k only decreases here, loop re-tests against z[k]
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = FAR;
                break;
            }
        }
    }
    let mut k = 0usize;
    for p in 0..n {
        while z[k + 1] < p as f64 {
            k += 1;
        }
        let q = v[k];
        let dp = p as f64 - q as f64;
        d[p] = dp * dp + f[q];
    }
}

/// Exact squared Euclidean distance (in node units) from every node to the
/// nearest node where `sites` is true, via three separable 1-d passes.
fn squared_edt(sites: &[bool], dims: [usize; 3]) -> Vec<f64> {
    let [nx, ny, nz] = dims;
    let mut field: Vec<f64> = sites.iter().map(|&s| if s { 0.0 } else { FAR }).collect();

    // x pass: rows are contiguous.
    field.par_chunks_mut(nx).for_each(|row| {
        let f = row.to_vec();
        let mut v = vec![0usize; nx];
        let mut z = vec![0.0f64; nx + 1];
        dt_1d(&f, row, &mut v, &mut z);
    });

    // y pass: within each z-slab, columns stride by nx.
    field.par_chunks_mut(nx * ny).for_each(|slab| {
        let mut f = vec![0.0f64; ny];
        let mut d = vec![0.0f64; ny];
        let mut v = vec![0usize; ny];
        let mut z = vec![0.0f64; ny + 1];
        for ix in 0..nx {
            for iy in 0..ny {
                f[iy] = slab[iy * nx + ix];
            }
            dt_1d(&f, &mut d, &mut v, &mut z);
            for iy in 0..ny {
                slab[iy * nx + ix] = d[iy];
            }
        }
    });

    // z pass: lines stride by nx * ny; parallelize over y-rows.
    let plane = nx * ny;
    let ptr = SendPtr(field.as_mut_ptr());
    (0..ny).into_par_iter().for_each(|iy| {
        let base = ptr;
        let mut f = vec![0.0f64; nz];
        let mut d = vec![0.0f64; nz];
        let mut v = vec![0usize; nz];
        let mut z = vec![0.0f64; nz + 1];
        for ix in 0..nx {
            let start = iy * nx + ix;
            for iz in 0..nz {
                // safety: each (ix, iy) owns a disjoint set of indices
                f[iz] = unsafe { *base.0.add(start + iz * plane) };
            }
            dt_1d(&f, &mut d, &mut v, &mut z);
            for iz in 0..nz {
                unsafe { *base.0.add(start + iz * plane) = d[iz] };
            }
        }
    });

    field
}

#[derive(Clone, Copy)]
struct SendPtr(*mut f64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

/// Signed distance to the boundary of the union of balls inflated by `r_p`,
/// sampled on a uniform grid of spacing `h`.
///
/// Sign convention: positive inside. Node-to-node distances overestimate the
/// distance to the continuous surface by about half a cell, so `h/2` is
/// subtracted from the unsigned transform on both sides.
pub fn sas_field(union: &BallUnion, r_p: f64, h: f64, node_cap: usize) -> Result<LevelSetField> {
    if !(h > 0.0) || !r_p.is_finite() || r_p < 0.0 {
        return Err(Error::invalid_argument("sas_field needs h > 0 and r_p >= 0"));
    }
    let pad = 2.0 * r_p + 4.0 * h;
    let (origin, dims) = grid_layout(union, r_p, pad, h);
    let nodes = dims[0] * dims[1] * dims[2];
    if nodes > node_cap {
        return Err(Error::GridTooLarge {
            nodes,
            cap: node_cap,
        });
    }
    let inside = rasterize(union, origin, h, dims, r_p);
    let to_outside = {
        let outside: Vec<bool> = inside.iter().map(|&b| !b).collect();
        squared_edt(&outside, dims)
    };
    let to_inside = squared_edt(&inside, dims);
    let values: Vec<f64> = inside
        .par_iter()
        .zip(to_outside.par_iter().zip(to_inside.par_iter()))
        .map(|(&inb, (&dout, &din))| {
            if inb {
                dout.sqrt() * h - 0.5 * h
            } else {
                -(din.sqrt() * h - 0.5 * h)
            }
        })
        .collect();
    Ok(LevelSetField {
        origin,
        h,
        dims,
        values,
    })
}

/// Marks the nodes of `field`'s grid strictly inside the (uninflated) union.
pub fn rasterize_union(union: &BallUnion, field: &LevelSetField) -> Vec<bool> {
    rasterize(union, field.origin, field.h, field.dims, 0.0)
}

/// Inradius of the union: the largest distance from an interior point to the
/// boundary, accurate to O(h). Probes every grid node plus the ball centers.
pub fn d_vdw(union: &BallUnion, h: f64, node_cap: usize) -> Result<f64> {
    let field = sas_field(union, 0.0, h, node_cap)?;
    let node_max = field
        .values
        .par_iter()
        .cloned()
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let center_max = union
        .balls()
        .iter()
        .map(|b| field.sample(b.center))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(node_max.max(center_max))
}

/// Points where the field crosses `level`, one per sign-changing grid edge,
/// located by linear interpolation. Deterministic order (z-slab major).
pub fn level_set_points(field: &LevelSetField, level: f64) -> Vec<Vec3> {
    let [nx, ny, nz] = field.dims;
    let crossings_in_slab = |iz: usize| {
        let mut pts = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let v0 = field.value(ix, iy, iz) - level;
                let p0 = field.node_coord(ix, iy, iz);
                let mut try_edge = |v1: f64, p1: Vec3| {
                    if v0 * v1 < 0.0 {
                        let t = v0 / (v0 - v1);
                        pts.push(vec3(
                            p0.x + t * (p1.x - p0.x),
                            p0.y + t * (p1.y - p0.y),
                            p0.z + t * (p1.z - p0.z),
                        ));
                    }
                };
                if ix + 1 < nx {
                    try_edge(
                        field.value(ix + 1, iy, iz) - level,
                        field.node_coord(ix + 1, iy, iz),
                    );
                }
                if iy + 1 < ny {
                    try_edge(
                        field.value(ix, iy + 1, iz) - level,
                        field.node_coord(ix, iy + 1, iz),
                    );
                }
                if iz + 1 < nz {
                    try_edge(
                        field.value(ix, iy, iz + 1) - level,
                        field.node_coord(ix, iy, iz + 1),
                    );
                }
            }
        }
        pts
    };
    let slabs: Vec<Vec<Vec3>> = (0..nz).into_par_iter().map(crossings_in_slab).collect();
    slabs.concat()
}

/// Uniform spatial hash over a point cloud for nearest-point queries.
pub struct PointHash {
    cell: f64,
    origin: Vec3,
    buckets: std::collections::HashMap<[i32; 3], Vec<u32>>,
    points: Vec<Vec3>,
}

impl PointHash {
    pub fn build(points: Vec<Vec3>, cell: f64) -> Self {
        assert!(cell > 0.0);
        let origin = points.iter().fold(
            vec3(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            |a, p| a.min_with(*p),
        );
        let mut buckets: std::collections::HashMap<[i32; 3], Vec<u32>> =
            std::collections::HashMap::new();
        for (idx, p) in points.iter().enumerate() {
            let key = [
                ((p.x - origin.x) / cell).floor() as i32,
                ((p.y - origin.y) / cell).floor() as i32,
                ((p.z - origin.z) / cell).floor() as i32,
            ];
            buckets.entry(key).or_default().push(idx as u32);
        }
        PointHash {
            cell,
            origin,
            buckets,
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance to the nearest stored point, or None if the cloud is empty.
    /// Scans Chebyshev rings outward; a ring at index r contains no point
    /// closer than (r - 1) cells, which bounds the search.
    pub fn nearest(&self, p: Vec3) -> Option<f64> {
        if self.points.is_empty() {
            return None;
        }
        let key = [
            ((p.x - self.origin.x) / self.cell).floor() as i32,
            ((p.y - self.origin.y) / self.cell).floor() as i32,
            ((p.z - self.origin.z) / self.cell).floor() as i32,
        ];
        let mut best = f64::INFINITY;
        let mut r = 0i32;
        loop {
            let floor_dist = self.cell * (r - 1).max(0) as f64;
            if floor_dist * floor_dist > best {
                return Some(best.sqrt());
            }
            let mut visit = |k: [i32; 3]| {
                if let Some(ids) = self.buckets.get(&k) {
                    for &id in ids {
                        let q = self.points[id as usize];
                        let d2 = p.dist2(q);
                        if d2 < best {
                            best = d2;
                        }
                    }
                }
            };
            if r == 0 {
                visit(key);
            } else {
                for a in -r..=r {
                    for b in -r..=r {
                        visit([key[0] + a, key[1] + b, key[2] - r]);
                        visit([key[0] + a, key[1] + b, key[2] + r]);
                    }
                }
                for a in -r..=r {
                    for c in (1 - r)..r {
                        visit([key[0] + a, key[1] - r, key[2] + c]);
                        visit([key[0] + a, key[1] + r, key[2] + c]);
                    }
                }
                for b in (1 - r)..r {
                    for c in (1 - r)..r {
                        visit([key[0] - r, key[1] + b, key[2] + c]);
                        visit([key[0] + r, key[1] + b, key[2] + c]);
                    }
                }
            }
            r += 1;
            if r > 1_000_000 {
                // unreachable for any nonempty cloud; guards against NaN input
                return Some(best.sqrt());
            }
        }
    }
}
