//! Uniform allocation and successive elimination.

use crate::belief::Allocation;
use crate::error::{check_len, Error, Result};

use super::HistorySummary;

/// Equal mass on the active arms, zero elsewhere.
pub fn uniform_allocation(active: &[bool]) -> Result<Allocation> {
    let live = active.iter().filter(|&&a| a).count();
    if live == 0 {
        return Err(Error::EmptyActiveSet);
    }
    let p = active
        .iter()
        .map(|&a| if a { 1.0 / live as f64 } else { 0.0 })
        .collect();
    Allocation::new(p)
}

/// Confidence width `c s √(ln(n² K / δ) / n)`; infinite before the first sample.
pub fn se_width(c: f64, s: f64, n: f64, k: usize, delta: f64) -> f64 {
    if !(n > 0.0) {
        return f64::INFINITY;
    }
    let log = (n * n * k as f64 / delta).ln().max(0.0);
    c * s * (log / n).sqrt()
}

/// One elimination round. Arms already eliminated in `prev_active` stay out;
/// an active arm is dropped when its upper bound falls below the best lower
/// bound among active arms. The surviving set is sampled uniformly.
pub fn successive_elimination_step(
    hist: &HistorySummary,
    c: f64,
    delta: f64,
    s: &[f64],
    prev_active: Option<&[bool]>,
) -> Result<(Vec<bool>, Allocation)> {
    let k = hist.counts.len();
    check_len("noise scale", k, s.len())?;
    check_len("empirical means", k, hist.means.len())?;
    if !(c > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "need c > 0 and δ ∈ (0, 1), got c={c}, δ={delta}"
        )));
    }
    let mut active = match prev_active {
        Some(p) => {
            check_len("active set", k, p.len())?;
            p.to_vec()
        }
        None => vec![true; k],
    };
    if !active.iter().any(|&a| a) {
        return Err(Error::EmptyActiveSet);
    }
    let width: Vec<f64> = (0..k)
        .map(|a| se_width(c, s[a], hist.counts[a], k, delta))
        .collect();
    let best_lcb = (0..k)
        .filter(|&a| active[a])
        .map(|a| hist.means[a] - width[a])
        .fold(f64::NEG_INFINITY, f64::max);
    for a in 0..k {
        if active[a] && hist.means[a] + width[a] < best_lcb {
            active[a] = false;
        }
    }
    let alloc = uniform_allocation(&active)?;
    Ok((active, alloc))
}
