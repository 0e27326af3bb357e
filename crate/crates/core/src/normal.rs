//! Standard normal density, distribution and quantile functions.

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Φ(x)`, accurate for large positive `x`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`cdf`] on the open unit interval: a rational starting point
/// polished by one Halley step against the full-precision [`cdf`].
pub fn quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // Work in the smaller tail to keep the residual relative.
    let (resid, dens) = if x > 0.0 {
        ((1.0 - p) - sf(x), pdf(x))
    } else {
        (cdf(x) - p, pdf(x))
    };
    if dens == 0.0 || !resid.is_finite() {
        return x;
    }
    let u = resid / dens;
    x - u / (1.0 + 0.5 * x * u)
}
