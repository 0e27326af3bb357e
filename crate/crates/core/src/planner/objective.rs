//! Sample-average planning objective and its envelope subgradient.
//!
//! For a constant allocation `ρ` held over residual budget `b̄`, the terminal
//! posterior mean of arm `a` is `μ_a + c_a(ρ_a) Z_a` with
//! `c_a(ρ) = √(σ_a⁴ ρ b̄ / (s_a² + σ_a² ρ b̄))`. The objective averages
//! `top-k_a {μ_a + c_a z_{j,a}}` over fixed draws `z_j`; `k = 1` is the
//! expected maximum posterior mean.

use crate::belief::{check_s2, terminal_std_scalar, Allocation, BeliefState};
use crate::error::{check_len, Error, Result};

use super::draws::NormalDraws;

/// Objective evaluator bound to a state, budget, variances and draws.
#[derive(Debug, Clone, Copy)]
pub struct SaaObjective<'a> {
    pub state: &'a BeliefState,
    pub b_bar: f64,
    pub s2: &'a [f64],
    pub draws: &'a NormalDraws,
    pub top_k: usize,
}

impl<'a> SaaObjective<'a> {
    pub fn new(
        state: &'a BeliefState,
        b_bar: f64,
        s2: &'a [f64],
        draws: &'a NormalDraws,
    ) -> Result<Self> {
        let k = state.num_arms();
        check_len("measurement variance", k, s2.len())?;
        check_len("draw columns", k, draws.num_arms())?;
        check_s2(s2)?;
        if !(b_bar >= 0.0) || !b_bar.is_finite() {
            return Err(Error::invalid(format!(
                "residual budget must be finite and ≥ 0, got {b_bar}"
            )));
        }
        Ok(Self {
            state,
            b_bar,
            s2,
            draws,
            top_k: 1,
        })
    }

    pub fn with_top_k(mut self, k: usize) -> Result<Self> {
        if k == 0 || k > self.state.num_arms() {
            return Err(Error::invalid(format!(
                "top-k needs 1 ≤ k ≤ {}, got {k}",
                self.state.num_arms()
            )));
        }
        self.top_k = k;
        Ok(self)
    }

    fn std_devs(&self, rho: &[f64]) -> Vec<f64> {
        let sigma2 = self.state.sigma2();
        (0..rho.len())
            .map(|a| terminal_std_scalar(sigma2[a], rho[a] * self.b_bar, self.s2[a]))
            .collect()
    }

    /// `∂c_a/∂ρ_a = σ⁴ b̄ s² / (2 c (s² + σ² ρ b̄)²)`, singular at `ρ_a = 0`.
    fn std_derivs(&self, rho: &[f64], std: &[f64]) -> Vec<f64> {
        let sigma2 = self.state.sigma2();
        (0..rho.len())
            .map(|a| {
                let v = sigma2[a];
                let s = self.s2[a];
                let denom = s + v * rho[a] * self.b_bar;
                v * v * self.b_bar * s / (2.0 * std[a] * denom * denom)
            })
            .collect()
    }

    /// Objective at nonnegative weights `rho` (not required to sum to one).
    pub fn value_at(&self, rho: &[f64]) -> f64 {
        let mu = self.state.mu();
        let std = self.std_devs(rho);
        let k = mu.len();
        let mut total = 0.0;
        if self.top_k == 1 {
            for z in self.draws.rows() {
                let mut best = f64::NEG_INFINITY;
                for a in 0..k {
                    let u = mu[a] + std[a] * z[a];
                    if u > best {
                        best = u;
                    }
                }
                total += best;
            }
        } else {
            let mut order: Vec<usize> = (0..k).collect();
            let mut vals = vec![0.0; k];
            for z in self.draws.rows() {
                for a in 0..k {
                    vals[a] = mu[a] + std[a] * z[a];
                }
                top_k_indices(&vals, self.top_k, &mut order);
                total += order[..self.top_k].iter().map(|&a| vals[a]).sum::<f64>();
            }
        }
        total / self.draws.num_samples() as f64
    }

    /// Value and envelope subgradient with respect to `rho`; requires `rho > 0`.
    pub fn value_and_gradient(&self, rho: &[f64]) -> Result<(f64, Vec<f64>)> {
        if let Some(a) = rho.iter().position(|&r| !(r > 0.0)) {
            return Err(Error::invalid(format!(
                "subgradient undefined at ρ_{a} = {} (must be > 0)",
                rho[a]
            )));
        }
        let mu = self.state.mu();
        let k = mu.len();
        let std = self.std_devs(rho);
        let dstd = self.std_derivs(rho, &std);
        // Arms with b̄ = 0 have no sensitivity.
        let dstd: Vec<f64> = dstd
            .iter()
            .map(|d| if d.is_finite() { *d } else { 0.0 })
            .collect();
        let mut zsum = vec![0.0; k];
        let mut total = 0.0;
        if self.top_k == 1 {
            for z in self.draws.rows() {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for a in 0..k {
                    let u = mu[a] + std[a] * z[a];
                    if u > best {
                        best = u;
                        arg = a;
                    }
                }
                total += best;
                zsum[arg] += z[arg];
            }
        } else {
            let mut order: Vec<usize> = (0..k).collect();
            let mut vals = vec![0.0; k];
            for z in self.draws.rows() {
                for a in 0..k {
                    vals[a] = mu[a] + std[a] * z[a];
                }
                top_k_indices(&vals, self.top_k, &mut order);
                for &a in &order[..self.top_k] {
                    total += vals[a];
                    zsum[a] += z[a];
                }
            }
        }
        let n = self.draws.num_samples() as f64;
        let grad = (0..k).map(|a| dstd[a] * zsum[a] / n).collect();
        Ok((total / n, grad))
    }
}

/// Moves the indices of the `k` largest values (ties to the lower index) to the front.
fn top_k_indices(vals: &[f64], k: usize, order: &mut [usize]) {
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    let cmp = |a: &usize, b: &usize| vals[*b].total_cmp(&vals[*a]).then(a.cmp(b));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, cmp);
    }
}

/// SAA estimate of the expected maximum terminal posterior mean under allocation `rho`.
pub fn saa_value(
    state: &BeliefState,
    rho: &Allocation,
    b_bar: f64,
    s2: &[f64],
    draws: &NormalDraws,
) -> Result<f64> {
    check_len("allocation", state.num_arms(), rho.num_arms())?;
    Ok(SaaObjective::new(state, b_bar, s2, draws)?.value_at(rho.as_slice()))
}

/// Envelope subgradient of [`saa_value`] with respect to the allocation.
pub fn saa_subgradient(
    state: &BeliefState,
    rho: &Allocation,
    b_bar: f64,
    s2: &[f64],
    draws: &NormalDraws,
) -> Result<Vec<f64>> {
    check_len("allocation", state.num_arms(), rho.num_arms())?;
    let (_, g) = SaaObjective::new(state, b_bar, s2, draws)?.value_and_gradient(rho.as_slice())?;
    Ok(g)
}
