//! Large-budget limit of the planning gradient.
//!
//! As `b̄ → ∞`, `b̄ ∂V/∂ρ_a → s_a² / (2ρ_a²) · E[φ((θ*_a − μ_a)/σ_a) / σ_a]`,
//! where `θ*_a` is the largest posterior draw among the other arms. The
//! expectation is the density index estimated in [`crate::policies::dts`].

use crate::belief::{check_s2, BeliefState};
use crate::error::{check_len, Error, Result};
use crate::policies::dts::dts_indices;

/// Monte Carlo estimate of the limiting gradient, divided by `b_bar`.
pub fn asymptotic_gradient(
    state: &BeliefState,
    rho: &[f64],
    b_bar: f64,
    s2: &[f64],
    m: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let k = state.num_arms();
    check_len("allocation", k, rho.len())?;
    check_len("measurement variance", k, s2.len())?;
    check_s2(s2)?;
    if rho.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::invalid("limiting gradient needs ρ > 0"));
    }
    if !(b_bar > 0.0) {
        return Err(Error::invalid("residual budget must be positive"));
    }
    let index = dts_indices(state, m, seed)?;
    Ok((0..k)
        .map(|a| s2[a] / (2.0 * rho[a] * rho[a]) * index.mean[a] / b_bar)
        .collect())
}
