//! Residual-horizon planning by sample-average approximation.
//!
//! The planner fixes `N` scrambled-Sobol normal draws, evaluates the expected
//! maximum terminal posterior mean as a sample average, and ascends its envelope
//! subgradient over softmax logits with adaptive-moment steps.

mod adam;
mod asymptotic;
mod draws;
mod extended;
mod objective;
mod solve;

pub use adam::Adam;
pub use asymptotic::asymptotic_gradient;
pub use draws::{sobol_standard_normals, DrawSource, NormalDraws};
pub use extended::{solve_extended, LinearConstraint, PlanningObjective, Reward};
pub use objective::{saa_subgradient, saa_value, SaaObjective};
pub use solve::{solve_rho, Init, Planner, PlannerConfig, Solution};
