//! Batched adaptive experimentation over the Gaussian sequential experiment.
//!
//! The crate is organised in five layers:
//!
//! - [`belief`]: Gaussian posterior state over scaled mean rewards and its exact
//!   conjugate updates, reparameterised transitions and terminal-variance algebra.
//! - [`planner`]: sample-average approximation of the residual-horizon planning
//!   problem with scrambled Sobol normals, solved by adaptive-moment ascent over
//!   softmax logits; plus the generalised top-k / entropy / linear-constraint variant.
//! - [`policies`]: every sampling policy behind one interface (uniform, successive
//!   elimination, Gaussian and Beta-Bernoulli Thompson sampling, top-two variants,
//!   density Thompson sampling, myopic and residual-horizon planning).
//! - [`sim`]: finite-batch environments and the epoch loop, plus the `n = ∞` runner.
//! - [`bench`]: replicated benchmarks with common random numbers, regret summaries,
//!   histograms, persistence and SVG plots.

pub mod belief;
pub mod bench;
mod error;
pub mod normal;
pub mod planner;
pub mod policies;
pub mod sim;
pub mod streams;

pub use belief::{Allocation, BeliefState, MeasurementModel, ObservationVector, Schedule};
pub use error::{Error, Result};
pub use planner::{NormalDraws, PlannerConfig, PlanningObjective, Solution};
pub use policies::{HistorySummary, PolicySpec};
pub use sim::{EnvironmentSpec, Instance, Trajectory};
