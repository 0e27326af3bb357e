//! Finite-batch simulation and the Gaussian sequential (`n = ∞`) experiment.

pub mod env;
pub mod runner;

pub use env::{
    batch_units, draw_instance, matched_gaussian_prior, sample_batch, BatchOutcome,
    EnvironmentSpec, Instance, PriorFamily, RewardKind, RewardModel,
};
pub use runner::{
    run_experiment, run_experiment_with, run_limit_experiment, simple_regret, simulate,
    EpochOutcome, RunStreams, Trajectory, LANE_POLICY, LANE_REWARDS,
};
