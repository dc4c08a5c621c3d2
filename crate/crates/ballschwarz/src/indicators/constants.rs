//! Explicit constants entering the stability and spectral bounds.

use crate::{Error, Result};

/// Dimension-dependent constants of the overlap stability estimate:
/// the Sobolev extension factor `c_M = 10 sqrt(10)` and the tracked Hardy
/// inequality constant `c_H = 2 * (2/pi) * 113 * (4/ln 2)`.
pub fn hardy_constants() -> (f64, f64) {
    let c_m = 10.0 * 10.0f64.sqrt();
    let c_h = 2.0 * (2.0 / std::f64::consts::PI) * 113.0 * (4.0 / std::f64::consts::LN_2);
    (c_m, c_h)
}

/// The derived bound constants and the stability estimate they assemble
/// into.
#[derive(Debug, Clone, Copy)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Upper bound on the splitting stability constant `s_0`.
    pub s0_bound: f64,
    /// `sqrt(s0 / (1 + s0))`: bound on the multiplicative sweep contraction
    /// factor in the energy norm.
    pub contraction_bound: f64,
}

/// Assembles the stability bound from the measured indicators.
///
/// `has_interior` selects the variant with the interior correction term
/// `c4 * d_f^2`; without interior balls `gamma_int` is infinite and the
/// term vanishes. An infinite `gamma_int` together with `has_interior` is
/// rejected as inconsistent.
pub fn bound_constants(
    n_max: usize,
    n_0: usize,
    gamma_int: f64,
    gamma_b: f64,
    gamma_f: f64,
    d_f: f64,
    has_interior: bool,
) -> Result<BoundConstants> {
    if has_interior && !gamma_int.is_finite() {
        return Err(Error::invalid_argument(
            "interior balls present but interior overlap depth is infinite",
        ));
    }
    if !(gamma_b > 0.0 && gamma_f > 0.0) {
        return Err(Error::invalid_argument(
            "cone fractions must be positive to assemble the stability bound",
        ));
    }
    if has_interior && !(d_f > 0.0 && d_f.is_finite()) {
        return Err(Error::invalid_argument(
            "interior correction needs a finite positive fatness diameter",
        ));
    }
    let (c_m, c_h) = hardy_constants();
    let n0 = n_0 as f64;
    let c1 = 2.0 * n0 * (1.0 + n0 * n0 * c_m * c_m * c_h * c_h / (gamma_b * gamma_b * gamma_f * gamma_f));
    let c2 = 2.0 * n0 * n0 / (gamma_int * gamma_int);
    let c3 = n_max as f64 * c1;
    let c4 = 64.0 * c2 * n0 * c_h * c_h * c_m * c_m;
    let s0_bound = if has_interior { c3 + c4 * d_f * d_f } else { c3 };
    let contraction_bound = (s0_bound / (1.0 + s0_bound)).sqrt();
    Ok(BoundConstants {
        c1,
        c2,
        c3,
        c4,
        s0_bound,
        contraction_bound,
    })
}

/// Guaranteed lower bound on the smallest eigenvalue of the preconditioned
/// operator: `1 / (c_H c_M d_F)`.
pub fn eig_lower_bound(d_f: f64) -> f64 {
    let (c_m, c_h) = hardy_constants();
    1.0 / (c_h * c_m * d_f)
}
