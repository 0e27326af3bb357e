use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::belief::{Allocation, BeliefState};
use crate::error::{check_len, Error, Result};

use super::adam::Adam;
use super::draws::NormalDraws;
use super::objective::SaaObjective;

/// Starting point of the logit iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    #[default]
    Uniform,
    WarmStart(Vec<f64>),
}

/// Solver settings shared by the residual-horizon planner and its extensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// SAA sample count `N`.
    pub num_samples: usize,
    pub max_iters: usize,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub qmc: bool,
    pub init: Init,
    /// Converged once no allocation entry moves more than this in one step.
    pub tol: f64,
    /// Iterations without a new best value before the step size is halved.
    pub patience: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            num_samples: 1024,
            max_iters: 500,
            step_size: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-12,
            seed: 0,
            qmc: true,
            init: Init::Uniform,
            tol: 1e-6,
            patience: 10,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 || self.max_iters == 0 || self.patience == 0 {
            return Err(Error::invalid(
                "sample count, iteration cap and patience must be positive",
            ));
        }
        if !(self.step_size > 0.0) || !(self.tol > 0.0) || !(self.epsilon >= 0.0) {
            return Err(Error::invalid("step size and tolerance must be positive"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) || b == 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must lie in (0, 1), got {b}"
                )));
            }
        }
        Ok(())
    }
}

/// Planner output. `converged == false` flags that the iteration cap was hit
/// and `allocation` is the best iterate seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub allocation: Allocation,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

// Keeps every softmax weight representable (e^-700 > 0).
fn clamp_logits(logits: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for v in logits.iter_mut() {
        *v = v.max(max - 700.0);
    }
}

/// Residual-horizon planner with its SAA draws built once.
#[derive(Debug, Clone)]
pub struct Planner {
    cfg: PlannerConfig,
    draws: Arc<NormalDraws>,
}

impl Planner {
    pub fn new(cfg: PlannerConfig, num_arms: usize) -> Result<Self> {
        cfg.validate()?;
        let draws = NormalDraws::shared(cfg.num_samples, num_arms, cfg.seed, cfg.qmc)?;
        Ok(Self { cfg, draws })
    }

    /// Uses caller-supplied draws instead of generating them.
    pub fn with_draws(cfg: PlannerConfig, draws: Arc<NormalDraws>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, draws })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn draws(&self) -> &NormalDraws {
        &self.draws
    }

    /// Maximises the SAA objective over constant allocations for budget `b_bar`.
    pub fn solve(&self, state: &BeliefState, b_bar: f64, s2: &[f64]) -> Result<Solution> {
        let k = state.num_arms();
        check_len("planner draws", k, self.draws.num_arms())?;
        if !(b_bar > 0.0) || !b_bar.is_finite() {
            return Err(Error::invalid(format!(
                "residual budget must be positive, got {b_bar}"
            )));
        }
        let objective = SaaObjective::new(state, b_bar, s2, &self.draws)?;
        if k == 1 {
            let allocation = Allocation::uniform(1);
            let value = objective.value_at(allocation.as_slice());
            return Ok(Solution {
                allocation,
                value,
                iterations: 0,
                converged: true,
            });
        }
        let cfg = &self.cfg;
        let mut logits = match &cfg.init {
            Init::Uniform => vec![0.0; k],
            Init::WarmStart(v) => {
                check_len("warm-start logits", k, v.len())?;
                crate::error::check_finite("warm-start logits", v)?;
                v.clone()
            }
        };
        clamp_logits(&mut logits);
        let mut rho = softmax(&logits);
        let mut adam = Adam::new(k, cfg.beta1, cfg.beta2, cfg.epsilon);
        let mut lr = cfg.step_size;
        let min_lr = cfg.step_size * 1e-6;

        let mut best_value = f64::NEG_INFINITY;
        let mut best_rho = rho.clone();
        let mut best_logits = logits.clone();
        let mut stale = 0;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < cfg.max_iters {
            iterations += 1;
            let (value, grad) = objective.value_and_gradient(&rho)?;
            if value > best_value {
                best_value = value;
                best_rho.clone_from(&rho);
                best_logits.clone_from(&logits);
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    lr *= 0.5;
                    stale = 0;
                    logits.clone_from(&best_logits);
                    rho.clone_from(&best_rho);
                    if lr < min_lr {
                        converged = true;
                        break;
                    }
                    continue;
                }
            }
            // Chain rule through the softmax: ∂/∂v_b = ρ_b (g_b − ρ·g).
            let mean_grad: f64 = rho.iter().zip(&grad).map(|(p, g)| p * g).sum();
            let logit_grad: Vec<f64> = rho
                .iter()
                .zip(&grad)
                .map(|(p, g)| p * (g - mean_grad))
                .collect();
            adam.ascend(&mut logits, &logit_grad, lr);
            clamp_logits(&mut logits);
            let next = softmax(&logits);
            let movement = next
                .iter()
                .zip(&rho)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            rho = next;
            if movement < cfg.tol {
                converged = true;
                break;
            }
        }
        let last = objective.value_at(&rho);
        if last > best_value {
            best_value = last;
            best_rho = rho;
        }
        if !converged {
            log::debug!(
                "planner hit {} iterations without converging",
                cfg.max_iters
            );
        }
        Ok(Solution {
            allocation: Allocation::new(best_rho)?,
            value: best_value,
            iterations,
            converged,
        })
    }
}

/// One-shot residual-horizon solve: `argmax_ρ` of the SAA objective for budget `b_bar`.
pub fn solve_rho(
    state: &BeliefState,
    b_bar: f64,
    s2: &[f64],
    cfg: &PlannerConfig,
) -> Result<Solution> {
    Planner::new(cfg.clone(), state.num_arms())?.solve(state, b_bar, s2)
}
