//! The epoch loop: allocate, sample a batch, update the Gaussian posterior, and
//! finally select the arm with the highest posterior mean.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::belief::{
    posterior_update, sample_limit_observation, select_arm, Allocation, BeliefState,
    ObservationVector, Schedule,
};
use crate::error::{check_len, Error, Result};
use crate::planner::PlannerConfig;
use crate::policies::{instantiate, HistorySummary, PolicyContext, PolicySpec};
use crate::streams::{self, StreamRng};

use super::env::{draw_instance, matched_gaussian_prior, sample_batch, EnvironmentSpec, Instance};

/// Reward noise for one run.
pub const LANE_REWARDS: u64 = 0x7277_6473;
/// Policy-internal randomness for one run.
pub const LANE_POLICY: u64 = 0x706f_6c79;

/// What happened in one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochOutcome {
    /// Units per arm; absent in the limit experiment.
    pub counts: Option<Vec<u64>>,
    /// Observation fed to the posterior update.
    pub observation: ObservationVector,
}

/// Full record of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub allocations: Vec<Allocation>,
    /// Posterior after each epoch.
    pub beliefs: Vec<BeliefState>,
    pub outcomes: Vec<EpochOutcome>,
    pub selected_arm: usize,
    /// `max_a m_a − m_selected`, in unscaled reward units.
    pub regret: f64,
    pub seed: u64,
}

/// `max_a m_a − m_selected`.
pub fn simple_regret(inst: &Instance, selected: usize) -> Result<f64> {
    if selected >= inst.num_arms() {
        return Err(Error::invalid(format!("arm {selected} out of range")));
    }
    Ok(inst.true_means[inst.best_arm()] - inst.true_means[selected])
}

/// Random streams driving one run.
pub struct RunStreams {
    pub rewards: StreamRng,
    pub policy: StreamRng,
}

impl RunStreams {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rewards: streams::stream(seed, LANE_REWARDS, 0),
            policy: streams::stream(seed, LANE_POLICY, 0),
        }
    }
}

/// Finite-batch run on a given instance; the policy starts from the matched
/// Gaussian prior and assumes the environment's model variance.
pub fn simulate(
    spec: &EnvironmentSpec,
    inst: &Instance,
    policy: &PolicySpec,
    planner: &PlannerConfig,
    schedule: &Schedule,
    rngs: &mut RunStreams,
    seed: u64,
) -> Result<Trajectory> {
    spec.validate()?;
    check_len("instance arms", spec.num_arms, inst.num_arms())?;
    let s2 = spec.model_s2();
    let ctx = PolicyContext {
        schedule: schedule.clone(),
        s2: s2.clone(),
        planner: planner.clone(),
        beta_prior: spec.beta_prior(),
    };
    let mut pol = instantiate(policy, &ctx)?;
    let kind = spec.model.reward_kind();
    let bernoulli = spec.is_bernoulli();
    let mut hist = HistorySummary::new(matched_gaussian_prior(spec, inst.n)?, schedule.residual(0));
    let epochs = schedule.epochs();
    let mut traj = Trajectory {
        allocations: Vec::with_capacity(epochs),
        beliefs: Vec::with_capacity(epochs),
        outcomes: Vec::with_capacity(epochs),
        selected_arm: 0,
        regret: 0.0,
        seed,
    };
    for t in 0..epochs {
        hist.epoch = t;
        hist.residual_budget = schedule.residual(t);
        let b_t = schedule.batch(t);
        let epoch = |e: Error| e.at_epoch(t);
        let alloc = pol.allocate(&hist, &mut rngs.policy).map_err(epoch)?;
        let out = sample_batch(inst, &alloc, b_t, kind, &mut rngs.rewards).map_err(epoch)?;
        let counts: Vec<f64> = out.counts.iter().map(|&c| c as f64).collect();
        let realized = realized_shares(&counts).map_err(epoch)?;
        hist.belief =
            posterior_update(&hist.belief, &realized, &out.agg, b_t, &s2).map_err(epoch)?;
        hist.record(&counts, &out.reward_sums).map_err(epoch)?;
        if bernoulli {
            let wins: Vec<u64> = out.reward_sums.iter().map(|&s| s.round() as u64).collect();
            let losses: Vec<u64> = out.counts.iter().zip(&wins).map(|(c, w)| c - w).collect();
            hist.record_bernoulli(&wins, &losses).map_err(epoch)?;
        }
        traj.allocations.push(alloc);
        traj.beliefs.push(hist.belief.clone());
        traj.outcomes.push(EpochOutcome {
            counts: Some(out.counts),
            observation: out.agg,
        });
    }
    traj.selected_arm = select_arm(&hist.belief);
    traj.regret = simple_regret(inst, traj.selected_arm)?;
    Ok(traj)
}

/// Shares `c_a / Σc` of the units actually sampled. Conditioning on them makes
/// `agg_a` an unbiased `π̂_a h_a` observation; with the planned `π_a` instead,
/// multinomial count noise would be scaled by the uncentred mean reward.
fn realized_shares(counts: &[f64]) -> Result<Allocation> {
    let total: f64 = counts.iter().sum();
    Allocation::new(counts.iter().map(|c| c / total).collect())
}

/// Draws an instance and runs one finite-batch experiment with the default planner.
pub fn run_experiment(
    spec: &EnvironmentSpec,
    policy: &PolicySpec,
    schedule: &Schedule,
    n: u64,
    seed: u64,
) -> Result<Trajectory> {
    run_experiment_with(spec, policy, &PlannerConfig::default(), schedule, n, seed)
}

pub fn run_experiment_with(
    spec: &EnvironmentSpec,
    policy: &PolicySpec,
    planner: &PlannerConfig,
    schedule: &Schedule,
    n: u64,
    seed: u64,
) -> Result<Trajectory> {
    let inst = draw_instance(
        spec,
        n,
        &mut streams::stream(seed, streams::LANE_INSTANCE, 0),
    )?;
    simulate(
        spec,
        &inst,
        policy,
        planner,
        schedule,
        &mut RunStreams::from_seed(seed),
        seed,
    )
}

/// Runs the Gaussian sequential experiment on `inst.h`: each epoch observes
/// `G_a ~ N(π_a h_a, π_a s_a² / b_t)` with the instance's true variances while
/// the policy updates with `model_s2`. Regret is reported in unscaled units.
#[allow(clippy::too_many_arguments)]
pub fn run_limit_experiment(
    prior: &BeliefState,
    inst: &Instance,
    policy: &PolicySpec,
    planner: &PlannerConfig,
    schedule: &Schedule,
    model_s2: &[f64],
    rngs: &mut RunStreams,
    seed: u64,
) -> Result<Trajectory> {
    let k = inst.num_arms();
    check_len("prior arms", k, prior.num_arms())?;
    check_len("model variance", k, model_s2.len())?;
    if policy.is_oracle() {
        return Err(Error::invalid(format!("{policy} needs Bernoulli rewards")));
    }
    let ctx = PolicyContext {
        schedule: schedule.clone(),
        s2: model_s2.to_vec(),
        planner: planner.clone(),
        beta_prior: None,
    };
    let mut pol = instantiate(policy, &ctx)?;
    let mut hist = HistorySummary::new(prior.clone(), schedule.residual(0));
    let epochs = schedule.epochs();
    let mut traj = Trajectory {
        allocations: Vec::with_capacity(epochs),
        beliefs: Vec::with_capacity(epochs),
        outcomes: Vec::with_capacity(epochs),
        selected_arm: 0,
        regret: 0.0,
        seed,
    };
    let mut z = vec![0.0; k];
    for t in 0..epochs {
        hist.epoch = t;
        hist.residual_budget = schedule.residual(t);
        let b_t = schedule.batch(t);
        let epoch = |e: Error| e.at_epoch(t);
        let alloc = pol.allocate(&hist, &mut rngs.policy).map_err(epoch)?;
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rngs.rewards);
        }
        let obs =
            sample_limit_observation(&inst.h, &alloc, &z, b_t, &inst.true_s2).map_err(epoch)?;
        hist.belief = posterior_update(&hist.belief, &alloc, &obs, b_t, model_s2).map_err(epoch)?;
        let units: Vec<f64> = alloc.as_slice().iter().map(|p| b_t * p).collect();
        let sums: Vec<f64> = obs.0.iter().map(|g| b_t * g).collect();
        hist.record(&units, &sums).map_err(epoch)?;
        traj.allocations.push(alloc);
        traj.beliefs.push(hist.belief.clone());
        traj.outcomes.push(EpochOutcome {
            counts: None,
            observation: obs,
        });
    }
    traj.selected_arm = select_arm(&hist.belief);
    traj.regret = simple_regret(inst, traj.selected_arm)?;
    Ok(traj)
}
