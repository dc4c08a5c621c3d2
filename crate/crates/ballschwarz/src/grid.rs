//! Cartesian finite difference discretization of the Poisson problem on a
//! union of balls with homogeneous Dirichlet data.
//!
//! Nodes strictly inside the union become degrees of freedom; the 7-point
//! Laplacian keeps its constant diagonal and boundary neighbors are
//! eliminated, which realizes the zero boundary condition on the
//! stair-step approximation of the domain.

use crate::error::Error;
use crate::geometry::BallUnion;
use crate::sparse::CsrMatrix;
use crate::vec3::{vec3, Vec3};
use crate::Result;
use rayon::prelude::*;

/// Default cap on the number of degrees of freedom.
pub const DEFAULT_DOF_CAP: usize = 2_000_000;

/// Guard against runaway bounding boxes before classification runs.
const RAW_NODE_CAP: usize = 256_000_000;

/// Fractional grid offset from the bounding box corner. Irrational so
/// that nodes avoid the symmetry planes and sphere surfaces of the exact
/// coordinates appearing in generated geometries.
const ORIGIN_OFFSET: f64 = std::f64::consts::FRAC_1_SQRT_2;

const NO_DOF: u32 = u32::MAX;

/// Discretized domain: node lattice, interior classification, and the
/// assembled stiffness matrix.
pub struct GridDomain {
    origin: Vec3,
    h: f64,
    dims: [usize; 3],
    dof_of_node: Vec<u32>,
    node_of_dof: Vec<usize>,
    a: CsrMatrix,
}

impl GridDomain {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_nodes(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn num_dofs(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    fn node_id(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.dims[1] + iy) * self.dims[0] + ix
    }

    fn node_pos(&self, node: usize) -> [usize; 3] {
        let ix = node % self.dims[0];
        let rest = node / self.dims[0];
        [ix, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn node_coord_at(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        vec3(
            self.origin.x + ix as f64 * self.h,
            self.origin.y + iy as f64 * self.h,
            self.origin.z + iz as f64 * self.h,
        )
    }

    /// Coordinate of a degree of freedom.
    pub fn dof_coord(&self, dof: usize) -> Vec3 {
        let [ix, iy, iz] = self.node_pos(self.node_of_dof[dof]);
        self.node_coord_at(ix, iy, iz)
    }

    /// Degree of freedom at integer node coordinates, if the node is
    /// interior.
    pub fn dof_at(&self, ix: usize, iy: usize, iz: usize) -> Option<usize> {
        if ix >= self.dims[0] || iy >= self.dims[1] || iz >= self.dims[2] {
            return None;
        }
        let d = self.dof_of_node[self.node_id(ix, iy, iz)];
        (d != NO_DOF).then_some(d as usize)
    }

    /// Degree of freedom nearest to a point, with its distance.
    pub fn nearest_dof(&self, p: Vec3) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for dof in 0..self.num_dofs() {
            let d = self.dof_coord(dof).dist(p);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((dof, d));
            }
        }
        best
    }

    /// Integer node range whose coordinates can fall inside the given
    /// interval along one axis, clamped to the lattice.
    fn axis_range(&self, axis: usize, lo: f64, hi: f64) -> (usize, usize) {
        let o = match axis {
            0 => self.origin.x,
            1 => self.origin.y,
            _ => self.origin.z,
        };
        let i0 = ((lo - o) / self.h).ceil().max(0.0) as usize;
        let i1 = (((hi - o) / self.h).floor().max(0.0) as usize).min(self.dims[axis] - 1);
        (i0, i1)
    }

    /// Degrees of freedom whose node lies strictly inside ball `i`, in
    /// increasing dof order.
    pub fn subdomain_dofs(&self, union: &BallUnion, i: usize) -> Vec<usize> {
        let ball = union.ball(i);
        let c = ball.center;
        let r = ball.radius;
        let (ix0, ix1) = self.axis_range(0, c.x - r, c.x + r);
        let (iy0, iy1) = self.axis_range(1, c.y - r, c.y + r);
        let (iz0, iz1) = self.axis_range(2, c.z - r, c.z + r);

        let mut dofs = Vec::new();
        for iz in iz0..=iz1 {
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    let d = self.dof_of_node[self.node_id(ix, iy, iz)];
                    if d == NO_DOF {
                        continue;
                    }
                    if self.node_coord_at(ix, iy, iz).dist(c) < r {
                        dofs.push(d as usize);
                    }
                }
            }
        }
        dofs.sort_unstable();
        dofs
    }

    /// Number of balls strictly containing each dof node, for coverage
    /// diagnostics.
    pub fn dof_multiplicity(&self, union: &BallUnion) -> Vec<u32> {
        let mut mult = vec![0u32; self.num_dofs()];
        for i in 0..union.len() {
            for d in self.subdomain_dofs(union, i) {
                mult[d] += 1;
            }
        }
        mult
    }
}

/// Builds the grid and the stiffness matrix for mesh width `h`, refusing
/// more than `dof_cap` unknowns.
pub fn build_grid(union: &BallUnion, h: f64, dof_cap: usize) -> Result<GridDomain> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid_argument(format!(
            "mesh width {h} must be positive"
        )));
    }
    let (lo, hi) = union.bounding_box();
    let origin = lo - vec3(h, h, h) * ORIGIN_OFFSET;
    let span = hi - origin;
    let dim = |s: f64| (s / h).floor() as usize + 3;
    let dims = [dim(span.x), dim(span.y), dim(span.z)];
    let raw = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .filter(|&v| v <= RAW_NODE_CAP)
        .ok_or(Error::GridTooLarge {
            nodes: usize::MAX,
            cap: RAW_NODE_CAP,
        })?;

    let [nx, ny, nz] = dims;
    let plane = nx * ny;
    // Rasterize ball by ball within z-slabs so marking stays race-free.
    let slabs: Vec<Vec<bool>> = (0..nz)
        .into_par_iter()
        .map(|iz| {
            let z = origin.z + iz as f64 * h;
            let mut slab = vec![false; plane];
            for b in union.balls() {
                let dz = z - b.center.z;
                let rc_sq = b.radius * b.radius - dz * dz;
                if rc_sq <= 0.0 {
                    continue;
                }
                let rc = rc_sq.sqrt();
                let iy0 = (((b.center.y - rc) - origin.y) / h).ceil().max(0.0) as usize;
                let iy1 =
                    ((((b.center.y + rc) - origin.y) / h).floor().max(0.0) as usize).min(ny - 1);
                for iy in iy0..=iy1 {
                    let dy = origin.y + iy as f64 * h - b.center.y;
                    let rx_sq = rc_sq - dy * dy;
                    if rx_sq <= 0.0 {
                        continue;
                    }
                    let rx = rx_sq.sqrt();
                    let ix0 = (((b.center.x - rx) - origin.x) / h).ceil().max(0.0) as usize;
                    let ix1 = ((((b.center.x + rx) - origin.x) / h).floor().max(0.0) as usize)
                        .min(nx - 1);
                    for ix in ix0..=ix1 {
                        let dx = origin.x + ix as f64 * h - b.center.x;
                        if dx * dx < rx_sq {
                            slab[iy * nx + ix] = true;
                        }
                    }
                }
            }
            slab
        })
        .collect();

    let inside_count: usize = slabs.iter().map(|s| s.iter().filter(|&&b| b).count()).sum();
    if inside_count > dof_cap {
        return Err(Error::GridTooLarge {
            nodes: inside_count,
            cap: dof_cap,
        });
    }
    if inside_count == 0 {
        return Err(Error::invalid_argument(format!(
            "mesh width {h} leaves no interior nodes"
        )));
    }

    let mut dof_of_node = vec![NO_DOF; raw];
    let mut node_of_dof = Vec::with_capacity(inside_count);
    for (iz, slab) in slabs.iter().enumerate() {
        for (off, &is_in) in slab.iter().enumerate() {
            if is_in {
                let node = iz * plane + off;
                dof_of_node[node] = node_of_dof.len() as u32;
                node_of_dof.push(node);
            }
        }
    }
    drop(slabs);

    let diag = 6.0 / (h * h);
    let off = -1.0 / (h * h);
    let rows: Vec<Vec<(usize, f64)>> = (0..node_of_dof.len())
        .into_par_iter()
        .map(|dof| {
            let node = node_of_dof[dof];
            let ix = node % nx;
            let rest = node / nx;
            let iy = rest % ny;
            let iz = rest / ny;
            // Bounding box padding keeps interior nodes one layer away
            // from the lattice edge, so all six neighbors exist.
            debug_assert!(ix > 0 && iy > 0 && iz > 0);
            debug_assert!(ix < nx - 1 && iy < ny - 1 && iz < nz - 1);
            let neighbors = [
                node - plane,
                node - nx,
                node - 1,
                node + 1,
                node + nx,
                node + plane,
            ];
            let mut row = Vec::with_capacity(7);
            let mut pushed_diag = false;
            for nb in neighbors {
                if !pushed_diag && nb > node {
                    row.push((dof, diag));
                    pushed_diag = true;
                }
                let d = dof_of_node[nb];
                if d != NO_DOF {
                    row.push((d as usize, off));
                }
            }
            if !pushed_diag {
                row.push((dof, diag));
            }
            row
        })
        .collect();
    let a = CsrMatrix::from_rows(rows);

    Ok(GridDomain {
        origin,
        h,
        dims,
        dof_of_node,
        node_of_dof,
        a,
    })
}

/// Samples a source term at the dof nodes.
pub fn assemble_rhs<F>(grid: &GridDomain, f: F) -> Result<Vec<f64>>
where
    F: Fn(Vec3) -> f64 + Sync,
{
    let b: Vec<f64> = (0..grid.num_dofs())
        .into_par_iter()
        .map(|dof| f(grid.dof_coord(dof)))
        .collect();
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "right-hand side sample".into(),
        });
    }
    Ok(b)
}
