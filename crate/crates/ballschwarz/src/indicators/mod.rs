//! Computable geometry indicators and the explicit stability bound they
//! assemble into.
//!
//! Everything here is measured from the ball union alone: covering
//! multiplicities, overlap depths, boundary cone fractions, the fatness
//! diameter of the domain, and the constants combining them into an upper
//! bound for the Schwarz splitting stability and a lower bound for the
//! preconditioned spectrum.

pub mod constants;
pub mod fatness;
pub mod local;
pub mod sas;

pub use constants::{bound_constants, eig_lower_bound, hardy_constants, BoundConstants};
pub use fatness::{default_lambda_grid, global_fatness, FatnessReport, FatnessSample};
pub use local::{gamma_b, gamma_f, gamma_f_star, gamma_int, n_0, n_0_star, n_max, q_max};
pub use sas::{d_vdw, level_set_points, rasterize_union, sas_field, LevelSetField, PointHash};

use crate::geometry::{check_assumptions, BallUnion, DEFAULT_CIRCLE_SAMPLES};
use crate::{Error, Result};

/// Tunable resolution and sampling budgets for indicator computation.
#[derive(Debug, Clone)]
pub struct IndicatorConfig {
    /// Grid spacing for distance fields and multiplicity probes; defaults
    /// to one sixth of the smallest radius.
    pub h: Option<f64>,
    /// Probe scales for the fatness sweep.
    pub lambda_grid: Vec<f64>,
    /// Monte Carlo draws per exterior-fraction estimate.
    pub mc_samples: usize,
    /// Probe points per ball for the exterior fractions.
    pub probes_per_ball: usize,
    /// Boundary samples per ball for the interior depth search.
    pub boundary_samples: usize,
    /// Local refinement rounds of the multiplicity search.
    pub refine_levels: usize,
    /// Hard ceiling on distance-field grid nodes.
    pub node_cap: usize,
    /// Base seed for all randomized estimates.
    pub seed: u64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            h: None,
            lambda_grid: default_lambda_grid(),
            mc_samples: 100_000,
            probes_per_ball: 32,
            boundary_samples: 2000,
            refine_levels: 2,
            node_cap: 32_000_000,
            seed: 0,
        }
    }
}

/// All measured indicators and derived constants for one geometry.
#[derive(Debug, Clone)]
pub struct IndicatorReport {
    pub n_max: usize,
    pub n_0: usize,
    pub n_0_star: usize,
    /// Interior overlap depth; infinite when no ball is interior.
    pub gamma_int: f64,
    pub gamma_b: f64,
    pub gamma_f: f64,
    pub gamma_f_star: f64,
    pub q_max: f64,
    pub d_vdw: f64,
    /// Probe scale minimizing the fatness quotient.
    pub lambda_min_probe: f64,
    /// Cone fraction at the minimizing scale.
    pub gamma_big_f: f64,
    pub d_ses_at_min: f64,
    pub d_f: f64,
    pub c_m: f64,
    pub c_h: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub s0_bound: f64,
    pub contraction_bound: f64,
    pub eig_lower_bound: f64,
}

impl IndicatorReport {
    pub fn csv_header() -> &'static str {
        "n_max,n_0,n_0_star,gamma_int,gamma_b,gamma_f,gamma_f_star,q_max,d_vdw,\
         lambda_min_probe,gamma_F,d_ses_at_min,d_F,c_M,c_H,C1,C2,C3,C4,s0_bound,\
         contraction_bound,eig_lower_bound"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n_max,
            self.n_0,
            self.n_0_star,
            self.gamma_int,
            self.gamma_b,
            self.gamma_f,
            self.gamma_f_star,
            self.q_max,
            self.d_vdw,
            self.lambda_min_probe,
            self.gamma_big_f,
            self.d_ses_at_min,
            self.d_f,
            self.c_m,
            self.c_h,
            self.c1,
            self.c2,
            self.c3,
            self.c4,
            self.s0_bound,
            self.contraction_bound,
            self.eig_lower_bound
        )
    }
}

/// Measures every indicator of `union` and assembles the derived bounds.
///
/// Fails when the geometric assumptions do not hold (disconnected overlap
/// graph, contained balls, or a degenerate junction cone), since the
/// indicators lose their meaning there.
pub fn compute_report(union: &BallUnion, config: &IndicatorConfig) -> Result<IndicatorReport> {
    let assumptions = check_assumptions(union, DEFAULT_CIRCLE_SAMPLES);
    if !assumptions.connected {
        return Err(Error::Disconnected {
            msg: format!(
                "overlap graph splits into {} components",
                assumptions.components
            ),
        });
    }
    if let Some(&(inner, outer)) = assumptions.containment_violations.first() {
        return Err(Error::Containment { inner, outer });
    }
    let h = config.h.unwrap_or(union.r_min() / 6.0);
    if !(h > 0.0) {
        return Err(Error::invalid_argument("grid spacing must be positive"));
    }

    let n_max_v = n_max(union);
    let n_0_v = n_0(union, h, config.refine_levels);
    let n_0_star_v = n_0_star(union, h, config.refine_levels);
    let gamma_int_v = gamma_int(union, config.boundary_samples);
    let gamma_b_v = gamma_b(assumptions.beta_min, union.r_min(), union.r_max())?;
    let gamma_f_v = gamma_f(union, config.probes_per_ball, config.mc_samples, config.seed);
    let gamma_f_star_v = gamma_f_star(
        union,
        config.probes_per_ball,
        config.mc_samples,
        config.seed,
    );
    let q_max_v = q_max(union);

    let fat = global_fatness(union, h, &config.lambda_grid, config.node_cap)?;
    let (c_m, c_h) = hardy_constants();
    let has_interior = !union.interior().is_empty();
    let bounds = bound_constants(
        n_max_v,
        n_0_v,
        gamma_int_v,
        gamma_b_v,
        gamma_f_v,
        fat.d_f,
        has_interior,
    )?;

    Ok(IndicatorReport {
        n_max: n_max_v,
        n_0: n_0_v,
        n_0_star: n_0_star_v,
        gamma_int: gamma_int_v,
        gamma_b: gamma_b_v,
        gamma_f: gamma_f_v,
        gamma_f_star: gamma_f_star_v,
        q_max: q_max_v,
        d_vdw: fat.d_vdw,
        lambda_min_probe: fat.lambda_min,
        gamma_big_f: fat.gamma_at_min,
        d_ses_at_min: fat.d_ses_at_min,
        d_f: fat.d_f,
        c_m,
        c_h,
        c1: bounds.c1,
        c2: bounds.c2,
        c3: bounds.c3,
        c4: bounds.c4,
        s0_bound: bounds.s0_bound,
        contraction_bound: bounds.contraction_bound,
        eig_lower_bound: eig_lower_bound(fat.d_f),
    })
}
