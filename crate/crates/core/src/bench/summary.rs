//! Regret summaries, paired relative gains, histograms and the KS distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::harness::TrialRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub policy: String,
    pub replications: usize,
    pub mean: f64,
    /// Standard error of `mean`.
    pub se: f64,
    /// `100 · mean / baseline mean`; `None` when the baseline mean is zero.
    pub relative: Option<f64>,
    /// Delta-method SE of `relative` over replications shared with the baseline.
    pub relative_se: Option<f64>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Policies in first-appearance order with their regrets keyed by replication.
fn by_policy(records: &[TrialRecord]) -> Vec<(&str, Vec<(u64, f64)>)> {
    let mut out: Vec<(&str, Vec<(u64, f64)>)> = Vec::new();
    for r in records {
        match out.iter_mut().find(|(p, _)| *p == r.policy) {
            Some((_, v)) => v.push((r.replication, r.regret)),
            None => out.push((&r.policy, vec![(r.replication, r.regret)])),
        }
    }
    for (_, v) in &mut out {
        v.sort_by_key(|&(rep, _)| rep);
    }
    out
}

/// Mean regret per policy relative to `baseline`, in percent.
///
/// The relative SE pairs each policy's regret with the baseline's on the same
/// replication: with `R = P̄/Ū`, `se(R)² ≈ Var(P_i − R·U_i) / (m·Ū²)`.
pub fn relative_gain(records: &[TrialRecord], baseline: &str) -> Result<Vec<RegretSummary>> {
    let groups = by_policy(records);
    let base = groups
        .iter()
        .find(|(p, _)| *p == baseline)
        .map(|(_, v)| v)
        .ok_or_else(|| Error::invalid(format!("baseline policy `{baseline}` has no records")))?;

    Ok(groups
        .iter()
        .map(|(policy, v)| {
            let regrets: Vec<f64> = v.iter().map(|&(_, r)| r).collect();
            let (mean, se) = mean_se(&regrets);
            let pairs: Vec<(f64, f64)> = v
                .iter()
                .filter_map(|&(rep, p)| {
                    base.binary_search_by_key(&rep, |&(r, _)| r)
                        .ok()
                        .map(|i| (p, base[i].1))
                })
                .collect();
            let m = pairs.len() as f64;
            let (p_bar, u_bar) = pairs
                .iter()
                .fold((0.0, 0.0), |(a, b), &(p, u)| (a + p / m, b + u / m));
            let (relative, relative_se) = if pairs.is_empty() || u_bar == 0.0 {
                (None, None)
            } else {
                let ratio = p_bar / u_bar;
                let resid: Vec<f64> = pairs.iter().map(|&(p, u)| p - ratio * u).collect();
                let (_, se_resid) = mean_se(&resid);
                (Some(100.0 * ratio), Some(100.0 * se_resid / u_bar))
            };
            RegretSummary {
                policy: policy.to_string(),
                replications: regrets.len(),
                mean,
                se,
                relative,
                relative_se,
            }
        })
        .collect())
}

/// Label with the lowest mean regret among policies accepted by `filter`.
pub fn best_by_mean(records: &[TrialRecord], filter: impl Fn(&str) -> bool) -> Option<String> {
    by_policy(records)
        .into_iter()
        .filter(|(p, _)| filter(p))
        .map(|(p, v)| (p, v.iter().map(|&(_, r)| r).sum::<f64>() / v.len() as f64))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges from 0 to the largest value.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Equal-width histogram on `[0, max]`; the last bin is closed on the right.
/// With all values zero every count lands in the first bin.
pub fn regret_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let hi = values.iter().copied().fold(0.0_f64, f64::max);
    let width = if hi > 0.0 { hi / bins as f64 } else { 1.0 };
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let i = ((v.max(0.0) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { 1.0 };
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
