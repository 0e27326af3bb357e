//! Density Thompson sampling.
//!
//! The index of arm `a` is `E[φ((θ*_a − μ_a)/σ_a) / σ_a]` with `θ ~ N(μ, σ²)` and
//! `θ*_a = max_{a'≠a} θ_{a'}`. It equals `∂/∂μ_a P(a = argmax θ)`, and the DTS
//! allocation samples arm `a` in proportion to `s_a √index_a`.

use rand_distr::{Distribution, StandardNormal};

use crate::belief::{check_s2, Allocation, BeliefState};
use crate::error::{check_len, Error, Result};
use crate::normal;
use crate::streams;

/// Monte Carlo index estimates and their standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct DtsIndex {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

/// All `K` indices from `m` shared posterior draws.
pub fn dts_indices(state: &BeliefState, m: usize, seed: u64) -> Result<DtsIndex> {
    let k = state.num_arms();
    if k < 2 {
        return Err(Error::invalid("density index needs at least two arms"));
    }
    if m == 0 {
        return Err(Error::invalid("need at least one Monte Carlo draw"));
    }
    let mu = state.mu();
    let sigma = state.sigma();
    let mut rng = streams::seeded(seed);
    let mut theta = vec![0.0; k];
    let mut sum = vec![0.0; k];
    let mut sum_sq = vec![0.0; k];
    for _ in 0..m {
        let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut lead = 0;
        for a in 0..k {
            let z: f64 = StandardNormal.sample(&mut rng);
            let v = mu[a] + sigma[a] * z;
            theta[a] = v;
            if v > first {
                second = first;
                first = v;
                lead = a;
            } else if v > second {
                second = v;
            }
        }
        for a in 0..k {
            let rival = if a == lead { second } else { first };
            let f = normal::pdf((rival - mu[a]) / sigma[a]) / sigma[a];
            sum[a] += f;
            sum_sq[a] += f * f;
        }
    }
    let mf = m as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / mf).collect();
    let se = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, mu)| {
            if m < 2 {
                f64::INFINITY
            } else {
                ((sq / mf - mu * mu).max(0.0) * mf / (mf - 1.0) / mf).sqrt()
            }
        })
        .collect();
    Ok(DtsIndex { mean, se })
}

/// Index of a single arm.
pub fn dts_index(state: &BeliefState, a: usize, m: usize, seed: u64) -> Result<f64> {
    if a >= state.num_arms() {
        return Err(Error::invalid(format!("arm {a} out of range")));
    }
    Ok(dts_indices(state, m, seed)?.mean[a])
}

/// `π_a ∝ s_a √index_a`.
pub fn dts_allocation(state: &BeliefState, s2: &[f64], m: usize, seed: u64) -> Result<Allocation> {
    check_len("measurement variance", state.num_arms(), s2.len())?;
    check_s2(s2)?;
    let index = dts_indices(state, m, seed)?;
    let w: Vec<f64> = s2
        .iter()
        .zip(&index.mean)
        .map(|(s, i)| s.sqrt() * i.sqrt())
        .collect();
    Allocation::from_weights(&w)
}

/// Exact lower and upper bounds on the index of arm `a` for a state whose means
/// are sorted in strictly decreasing order.
///
/// With `S = σ_a² + σ_b²` and `d = μ_b − μ_a`, each rival `b` contributes at most
/// `e^{−d²/2S} / √(2πS)`. The lower bound keeps only the leading rival's term,
/// integrated over the half-line where every other factor is at least ½.
pub fn dts_index_bounds(state: &BeliefState, a: usize) -> Result<(f64, f64)> {
    let k = state.num_arms();
    if k < 2 {
        return Err(Error::invalid("density index needs at least two arms"));
    }
    if a >= k {
        return Err(Error::invalid(format!("arm {a} out of range")));
    }
    let mu = state.mu();
    let var = state.sigma2();
    if mu.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::invalid(
            "index bounds need strictly decreasing means",
        ));
    }
    let pair = |b: usize| {
        let s = var[a] + var[b];
        let d = mu[b] - mu[a];
        (
            (-d * d / (2.0 * s)).exp() * normal::FRAC_1_SQRT_2PI / s.sqrt(),
            s,
            d,
        )
    };
    let upper = (k - 1) as f64
        * (0..k)
            .filter(|&b| b != a)
            .map(|b| pair(b).0)
            .fold(0.0, f64::max);
    let halves = 0.5f64.powi(k as i32 - 2);
    let lower = if a <= 1 {
        let (term, _, _) = pair(1 - a);
        halves * term / 2.0
    } else {
        let (term, s, d) = pair(0);
        let x = var[0].sqrt() * d / (var[a].sqrt() * s.sqrt());
        halves * term * normal::sf(x)
    };
    Ok((lower, upper))
}
