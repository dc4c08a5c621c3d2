//! Overlapping Schwarz domain decomposition for the Poisson problem on
//! unions of overlapping balls.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`] - ball unions, neighbor structure, index classification,
//!   and geometric assumption checks (connectivity, containment, exterior
//!   cone angles).
//! * [`pou`] - the radial partition of unity built from per-ball depth
//!   functions, with analytic gradients and grid energy sums.
//! * [`indicators`] - computable geometry indicators (overlap counts,
//!   overlap depth constants, boundary fatness, global fatness via
//!   probe-inflated surfaces) and the derived stability/contraction bounds.
//! * [`grid`] - a 7-point finite difference Laplacian on the union with
//!   Dirichlet conditions imposed by node elimination.
//! * [`krylov`] - matrix-free CG, GMRES, Lanczos, and inverse power
//!   iteration.
//! * [`schwarz`] - subdomain factorizations, multiplicative sweeps, the
//!   additive preconditioner, and the partition-of-unity coarse space.
//! * [`generators`] - lattice and chain test geometries.
//! * [`diagnostics`] - verification suites and scaling sweeps.

pub mod diagnostics;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod grid;
pub mod indicators;
pub mod krylov;
pub mod pou;
pub mod sampling;
pub mod schwarz;
pub mod sparse;
pub mod vec3;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
