//! Generalised planning objective: top-k reward, entropy bonus and one linear
//! budget constraint on the allocation.
//!
//! The solver runs exponentiated-gradient (mirror) ascent on log-weights. After
//! every step the iterate is projected onto `{ρ ∈ Δ : rᵀρ ≤ r̄}` in KL divergence,
//! which for a single half-space amounts to tilting the weights by `e^{-ν r}` with
//! the scalar `ν ≥ 0` found by bisection. Fixed points of the projected iteration
//! are exactly the KKT points of the constrained problem.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::belief::{Allocation, BeliefState};
use crate::error::{check_finite, check_len, Error, Result};

use super::objective::SaaObjective;
use super::solve::{softmax, Init, Planner, PlannerConfig, Solution};

/// Reward part of the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Reward {
    /// Expected maximum terminal posterior mean.
    SimpleRegret,
    /// Expected sum of the `k` largest terminal posterior means plus
    /// `entropy_weight` times the Shannon entropy of the allocation.
    TopK { k: usize, entropy_weight: f64 },
}

/// Half-space `rᵀρ ≤ r̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub r: Vec<f64>,
    pub r_bar: f64,
}

impl LinearConstraint {
    pub fn new(r: Vec<f64>, r_bar: f64) -> Result<Self> {
        check_finite("constraint coefficients", &r)?;
        check_finite("constraint bound", &[r_bar])?;
        let c = Self { r, r_bar };
        c.check_feasible()?;
        Ok(c)
    }

    fn check_feasible(&self) -> Result<()> {
        let min = self.r.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.r.is_empty() || min > self.r_bar {
            return Err(Error::Infeasible(format!(
                "min r = {min} exceeds r̄ = {}",
                self.r_bar
            )));
        }
        Ok(())
    }

    pub fn lhs(&self, rho: &[f64]) -> f64 {
        self.r.iter().zip(rho).map(|(r, p)| r * p).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningObjective {
    pub reward: Reward,
    #[serde(default)]
    pub constraint: Option<LinearConstraint>,
}

impl Default for PlanningObjective {
    fn default() -> Self {
        Self {
            reward: Reward::SimpleRegret,
            constraint: None,
        }
    }
}

impl PlanningObjective {
    pub fn top_k(k: usize, entropy_weight: f64) -> Self {
        Self {
            reward: Reward::TopK { k, entropy_weight },
            constraint: None,
        }
    }

    pub fn with_constraint(mut self, c: LinearConstraint) -> Self {
        self.constraint = Some(c);
        self
    }

    fn k_and_lambda(&self) -> (usize, f64) {
        match self.reward {
            Reward::SimpleRegret => (1, 0.0),
            Reward::TopK { k, entropy_weight } => (k, entropy_weight),
        }
    }

    pub fn validate(&self, num_arms: usize) -> Result<()> {
        let (k, lambda) = self.k_and_lambda();
        if k == 0 || k > num_arms {
            return Err(Error::invalid(format!(
                "top-k needs 1 ≤ k ≤ {num_arms}, got {k}"
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::invalid("entropy weight must be finite"));
        }
        if let Some(c) = &self.constraint {
            check_len("constraint coefficients", num_arms, c.r.len())?;
            c.check_feasible()?;
        }
        Ok(())
    }
}

impl fmt::Display for Reward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reward::SimpleRegret => write!(f, "simple-regret"),
            Reward::TopK { k, entropy_weight } => write!(f, "top-k:{k}:{entropy_weight}"),
        }
    }
}

/// Parses `simple-regret` or `top-k:<k>[:<entropy weight>]`.
impl FromStr for Reward {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["simple-regret"] | ["simple"] => Ok(Reward::SimpleRegret),
            ["top-k", k] | ["topk", k] => Ok(Reward::TopK {
                k: parse_num(k, s)?,
                entropy_weight: 0.0,
            }),
            ["top-k", k, lambda] | ["topk", k, lambda] => Ok(Reward::TopK {
                k: parse_num(k, s)?,
                entropy_weight: parse_num(lambda, s)?,
            }),
            _ => Err(Error::Parse(format!("unrecognised objective `{s}`"))),
        }
    }
}

fn parse_num<T: FromStr>(v: &str, whole: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad number `{v}` in `{whole}`")))
}

fn log_sum_exp(w: &[f64]) -> f64 {
    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + w.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// KL projection of `softmax(w)` onto `rᵀρ ≤ r̄`, applied in place to `w`.
fn project(w: &mut [f64], c: &LinearConstraint) {
    if c.lhs(&softmax(w)) <= c.r_bar + 1e-12 {
        return;
    }
    let tilt = |nu: f64| -> Vec<f64> { w.iter().zip(&c.r).map(|(v, r)| v - nu * r).collect() };
    let lhs_at = |nu: f64| c.lhs(&softmax(&tilt(nu)));
    let mut hi = 1.0;
    while lhs_at(hi) > c.r_bar && hi < 1e300 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lhs_at(mid) > c.r_bar {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tilted = tilt(hi);
    let max = tilted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for (v, t) in w.iter_mut().zip(tilted) {
        *v = t - max;
    }
}

struct Evaluator<'a> {
    saa: SaaObjective<'a>,
    lambda: f64,
}

impl Evaluator<'_> {
    /// Objective value and gradient with respect to `ρ`. Zero weights (reachable
    /// only when the constraint pins mass to its minimisers) are floored for the
    /// derivative.
    fn eval(&self, w: &[f64], rho: &[f64]) -> Result<(f64, Vec<f64>)> {
        let floored: Vec<f64> = rho.iter().map(|p| p.max(f64::MIN_POSITIVE)).collect();
        let (mut value, mut grad) = self.saa.value_and_gradient(&floored)?;
        if self.lambda != 0.0 {
            let lse = log_sum_exp(w);
            let mut h = 0.0;
            for (a, g) in grad.iter_mut().enumerate() {
                let log_p = w[a] - lse;
                if rho[a] > 0.0 {
                    h -= rho[a] * log_p;
                }
                *g -= self.lambda * (log_p + 1.0);
            }
            value += self.lambda * h;
        }
        Ok((value, grad))
    }
}

/// Maximises `(1/N) Σ_j top-k{μ + c(ρ) z_j} + λ H(ρ)` over the simplex, subject
/// to the optional linear constraint.
pub fn solve_extended(
    state: &BeliefState,
    b_bar: f64,
    s2: &[f64],
    objective: &PlanningObjective,
    cfg: &PlannerConfig,
) -> Result<Solution> {
    let k = state.num_arms();
    objective.validate(k)?;
    let planner = Planner::new(cfg.clone(), k)?;
    if !(b_bar > 0.0) || !b_bar.is_finite() {
        return Err(Error::invalid(format!(
            "residual budget must be positive, got {b_bar}"
        )));
    }
    let (top_k, lambda) = objective.k_and_lambda();
    let eval = Evaluator {
        saa: SaaObjective::new(state, b_bar, s2, planner.draws())?.with_top_k(top_k)?,
        lambda,
    };

    let mut w = match &cfg.init {
        Init::Uniform => vec![0.0; k],
        Init::WarmStart(v) => {
            check_len("warm-start logits", k, v.len())?;
            check_finite("warm-start logits", v)?;
            v.clone()
        }
    };
    if let Some(c) = &objective.constraint {
        project(&mut w, c);
    }
    let mut rho = softmax(&w);
    let mut lr = cfg.step_size;
    let min_lr = cfg.step_size * 1e-9;
    let mut best = (f64::NEG_INFINITY, rho.clone(), w.clone());
    let mut stale = 0;
    let mut converged = k == 1;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        let (value, grad) = eval.eval(&w, &rho)?;
        if value > best.0 {
            best = (value, rho.clone(), w.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                stale = 0;
                lr *= 0.5;
                rho.clone_from(&best.1);
                w.clone_from(&best.2);
                converged = lr < min_lr;
                continue;
            }
        }
        let mean: f64 = rho.iter().zip(&grad).map(|(p, g)| p * g).sum();
        let scale = rho
            .iter()
            .zip(&grad)
            .map(|(p, g)| p * (g - mean).abs())
            .fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            converged = scale == 0.0;
            break;
        }
        let eta = lr / scale;
        for (v, g) in w.iter_mut().zip(&grad) {
            *v += eta * (g - mean);
        }
        let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in w.iter_mut() {
            *v = (*v - max).max(-700.0);
        }
        if let Some(c) = &objective.constraint {
            project(&mut w, c);
        }
        let next = softmax(&w);
        let movement = next
            .iter()
            .zip(&rho)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rho = next;
        converged = movement < cfg.tol;
    }
    let (last, _) = eval.eval(&w, &rho)?;
    if last > best.0 {
        best = (last, rho, w);
    }
    if !converged {
        log::debug!(
            "extended planner hit {} iterations without converging",
            cfg.max_iters
        );
    }
    let allocation = Allocation::from_weights(&best.1)?;
    if let Some(c) = &objective.constraint {
        let lhs = c.lhs(allocation.as_slice());
        if lhs > c.r_bar + 1e-9 {
            return Err(Error::Infeasible(format!(
                "projection left rᵀρ = {lhs} above r̄ = {}",
                c.r_bar
            )));
        }
    }
    Ok(Solution {
        allocation,
        value: best.0,
        iterations,
        converged,
    })
}
