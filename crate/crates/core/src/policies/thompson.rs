//! Thompson sampling and its top-two variant, for Gaussian beliefs and for the
//! Beta-Bernoulli oracle.
//!
//! Allocations are argmax frequencies over `M` joint posterior draws. Posterior
//! draws for the leader come from one stream; the top-two coin flips and
//! resamples come from a second, so `β = 1` reproduces plain TS draw for draw.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::belief::{argmax, Allocation, BeliefState};
use crate::error::{check_len, Error, Result};
use crate::streams::{self, StreamRng};

const LANE_DRAWS: u64 = 0x7473;
const LANE_TOP_TWO: u64 = 0x7474;

/// Resamples allowed before a top-two round falls back to the first draw's runner-up.
pub const RESAMPLE_CAP: usize = 100;

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("need at least one posterior draw"));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!(
            "top-two β must lie in (0, 1], got {beta}"
        )));
    }
    Ok(())
}

fn frequencies(counts: &[u64], m: usize) -> Result<Allocation> {
    let w: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
    Allocation::from_weights(&w)
}

fn runner_up(theta: &[f64], lead: usize) -> usize {
    let mut best = usize::MAX;
    for (a, &v) in theta.iter().enumerate() {
        if a != lead && (best == usize::MAX || v > theta[best]) {
            best = a;
        }
    }
    best
}

fn ts_counts<F>(k: usize, m: usize, seed: u64, mut sample: F) -> Vec<u64>
where
    F: FnMut(&mut StreamRng, &mut [f64]),
{
    let mut rng = streams::stream(seed, LANE_DRAWS, 0);
    let mut theta = vec![0.0; k];
    let mut counts = vec![0u64; k];
    for _ in 0..m {
        sample(&mut rng, &mut theta);
        counts[argmax(&theta)] += 1;
    }
    counts
}

fn top_two_counts<F>(k: usize, m: usize, beta: f64, seed: u64, mut sample: F) -> Vec<u64>
where
    F: FnMut(&mut StreamRng, &mut [f64]),
{
    let mut rng = streams::stream(seed, LANE_DRAWS, 0);
    let mut aux = streams::stream(seed, LANE_TOP_TWO, 0);
    let mut theta = vec![0.0; k];
    let mut again = vec![0.0; k];
    let mut counts = vec![0u64; k];
    for _ in 0..m {
        sample(&mut rng, &mut theta);
        let lead = argmax(&theta);
        if k == 1 || aux.random::<f64>() < beta {
            counts[lead] += 1;
            continue;
        }
        let mut challenger = None;
        for _ in 0..RESAMPLE_CAP {
            sample(&mut aux, &mut again);
            let c = argmax(&again);
            if c != lead {
                challenger = Some(c);
                break;
            }
        }
        counts[challenger.unwrap_or_else(|| runner_up(&theta, lead))] += 1;
    }
    counts
}

fn gaussian_sampler(state: &BeliefState) -> impl FnMut(&mut StreamRng, &mut [f64]) + '_ {
    let sigma = state.sigma();
    move |rng, theta| {
        for (a, t) in theta.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            *t = state.mu()[a] + sigma[a] * z;
        }
    }
}

/// `P(a = argmax θ)` for `θ ~ N(μ, σ²)`, estimated from `m` draws.
pub fn gaussian_ts_allocation(state: &BeliefState, m: usize, seed: u64) -> Result<Allocation> {
    check_m(m)?;
    frequencies(
        &ts_counts(state.num_arms(), m, seed, gaussian_sampler(state)),
        m,
    )
}

/// Top-two Thompson sampling with leader probability `beta`.
pub fn top_two_ts_allocation(
    state: &BeliefState,
    beta: f64,
    m: usize,
    seed: u64,
) -> Result<Allocation> {
    check_m(m)?;
    check_beta(beta)?;
    let counts = top_two_counts(state.num_arms(), m, beta, seed, gaussian_sampler(state));
    frequencies(&counts, m)
}

/// Posterior `Beta(α + successes, β + failures)` per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaPosterior {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BetaPosterior {
    pub fn new(
        successes: &[u64],
        failures: &[u64],
        prior_alpha: &[f64],
        prior_beta: &[f64],
    ) -> Result<Self> {
        let k = successes.len();
        check_len("failure counts", k, failures.len())?;
        check_len("prior α", k, prior_alpha.len())?;
        check_len("prior β", k, prior_beta.len())?;
        if k == 0 {
            return Err(Error::invalid("need at least one arm"));
        }
        if prior_alpha
            .iter()
            .chain(prior_beta)
            .any(|&p| !(p > 0.0) || !p.is_finite())
        {
            return Err(Error::invalid("Beta prior parameters must be positive"));
        }
        Ok(Self {
            alpha: (0..k)
                .map(|a| prior_alpha[a] + successes[a] as f64)
                .collect(),
            beta: (0..k).map(|a| prior_beta[a] + failures[a] as f64).collect(),
        })
    }

    fn sampler(&self) -> Result<impl FnMut(&mut StreamRng, &mut [f64])> {
        let dists = self
            .alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| Beta::new(a, b).map_err(|e| Error::invalid(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(move |rng: &mut StreamRng, theta: &mut [f64]| {
            for (t, d) in theta.iter_mut().zip(&dists) {
                *t = d.sample(rng);
            }
        })
    }
}

/// Beta-Bernoulli Thompson sampling with batch updates. `top_two = Some(β)`
/// applies the top-two rule.
pub fn oracle_bb_ts_step(
    posterior: &BetaPosterior,
    top_two: Option<f64>,
    m: usize,
    seed: u64,
) -> Result<Allocation> {
    check_m(m)?;
    let k = posterior.alpha.len();
    let counts = match top_two {
        None => ts_counts(k, m, seed, posterior.sampler()?),
        Some(beta) => {
            check_beta(beta)?;
            top_two_counts(k, m, beta, seed, posterior.sampler()?)
        }
    };
    frequencies(&counts, m)
}
