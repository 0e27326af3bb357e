//! Replicated policy comparisons with common random numbers.
//!
//! Replication `r` draws its instance from the `(seed, LANE_INSTANCE, r)` stream,
//! so every policy (and both the finite-`n` and `n = ∞` runners) sees the same
//! arm means. Reward and policy randomness come from per-policy lanes keyed by
//! the policy label, so adding or removing a policy changes no other results.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefState, Schedule};
use crate::error::Result;
use crate::policies::PolicySpec;
use crate::sim::{
    draw_instance, matched_gaussian_prior, run_limit_experiment, simulate, Instance, RunStreams,
    Trajectory,
};
use crate::streams::{self, LANE_INSTANCE};

use super::config::ExperimentConfig;

/// One policy's outcome on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub policy: String,
    pub replication: u64,
    /// Master seed of the benchmark.
    pub seed: u64,
    pub regret: f64,
    pub selected_arm: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub policy: String,
    pub replication: u64,
    pub error: String,
}

/// Per-epoch allocation concentration, averaged over successful replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationProfile {
    pub policy: String,
    pub mean_max_share: Vec<f64>,
    pub mean_entropy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOutput {
    /// Sorted by `(policy, replication)`.
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
    pub profiles: Vec<AllocationProfile>,
    /// Label of the successive-elimination variant with the lowest mean regret.
    pub best_se: Option<String>,
}

/// Which experiment the policies are run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Finite batches of `b_t n` units with the environment's reward distribution.
    Finite,
    /// The Gaussian sequential experiment on `h = √n m`.
    Limit,
}

type Outcome = (String, u64, std::result::Result<Trajectory, String>);

/// Runs every policy on every replication of the finite-batch experiment.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkOutput> {
    run_benchmark_mode(cfg, Mode::Finite)
}

/// The instance replication `rep` shares across policies and modes.
pub fn replication_instance(cfg: &ExperimentConfig, rep: u64) -> Result<Instance> {
    let mut rng = streams::stream(cfg.seed, LANE_INSTANCE, rep);
    draw_instance(&cfg.environment, cfg.n, &mut rng)
}

struct Shared {
    schedule: Schedule,
    prior: BeliefState,
    model_s2: Vec<f64>,
}

impl Shared {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            schedule: cfg.schedule()?,
            prior: matched_gaussian_prior(&cfg.environment, cfg.n)?,
            model_s2: cfg.environment.model_s2(),
        })
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    shared: &Shared,
    inst: &Instance,
    spec: &PolicySpec,
    label: &str,
    rep: u64,
    mode: Mode,
) -> Result<Trajectory> {
    let lane = streams::lane_for(label)
        ^ match mode {
            Mode::Finite => 0,
            Mode::Limit => 1,
        };
    let mut rngs = RunStreams {
        rewards: streams::stream(cfg.seed, lane, rep),
        policy: streams::stream(cfg.seed, lane.rotate_left(17), rep),
    };
    match mode {
        Mode::Finite => simulate(
            &cfg.environment,
            inst,
            spec,
            &cfg.planner,
            &shared.schedule,
            &mut rngs,
            cfg.seed,
        ),
        Mode::Limit => run_limit_experiment(
            &shared.prior,
            inst,
            spec,
            &cfg.planner,
            &shared.schedule,
            &shared.model_s2,
            &mut rngs,
            cfg.seed,
        ),
    }
}

/// The trajectory behind one benchmark record, reproduced in isolation.
pub fn run_replication(
    cfg: &ExperimentConfig,
    policy: &PolicySpec,
    rep: u64,
    mode: Mode,
) -> Result<Trajectory> {
    cfg.validate()?;
    policy.validate()?;
    let shared = Shared::new(cfg)?;
    let inst = replication_instance(cfg, rep)?;
    run_one(cfg, &shared, &inst, policy, &policy.to_string(), rep, mode)
}

pub fn run_benchmark_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<BenchmarkOutput> {
    cfg.validate()?;
    let shared = Shared::new(cfg)?;
    let policies = cfg.expanded_policies();
    let labels: Vec<String> = policies.iter().map(PolicySpec::to_string).collect();

    let per_rep: Vec<Result<Vec<Outcome>>> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let inst = replication_instance(cfg, rep)?;
            Ok(policies
                .iter()
                .zip(&labels)
                .map(|(spec, label)| {
                    let run = run_one(cfg, &shared, &inst, spec, label, rep, mode);
                    (label.clone(), rep, run.map_err(|e| e.to_string()))
                })
                .collect())
        })
        .collect();

    let mut outcomes = Vec::with_capacity(cfg.replications * policies.len());
    for r in per_rep {
        outcomes.extend(r?);
    }
    outcomes.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

    let epochs = shared.schedule.epochs();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut profiles: Vec<AllocationProfile> = Vec::new();
    let mut tally: Vec<usize> = Vec::new();
    for (label, rep, run) in outcomes {
        match run {
            Ok(traj) => {
                if profiles.last().is_none_or(|p| p.policy != label) {
                    profiles.push(AllocationProfile {
                        policy: label.clone(),
                        mean_max_share: vec![0.0; epochs],
                        mean_entropy: vec![0.0; epochs],
                    });
                    tally.push(0);
                }
                let prof = profiles.last_mut().expect("profile pushed above");
                for (t, a) in traj.allocations.iter().enumerate() {
                    prof.mean_max_share[t] += a.max_share();
                    prof.mean_entropy[t] += a.entropy();
                }
                *tally.last_mut().expect("tally pushed above") += 1;
                records.push(TrialRecord {
                    policy: label,
                    replication: rep,
                    seed: cfg.seed,
                    regret: traj.regret,
                    selected_arm: traj.selected_arm,
                });
            }
            Err(error) => {
                log::warn!("{label} replication {rep} failed: {error}");
                failures.push(TrialFailure {
                    policy: label,
                    replication: rep,
                    error,
                });
            }
        }
    }
    for (prof, &n) in profiles.iter_mut().zip(&tally) {
        for v in prof
            .mean_max_share
            .iter_mut()
            .chain(prof.mean_entropy.iter_mut())
        {
            *v /= n as f64;
        }
    }
    let best_se = super::summary::best_by_mean(&records, |p| p.starts_with("se:"));
    Ok(BenchmarkOutput {
        records,
        failures,
        profiles,
        best_se,
    })
}
