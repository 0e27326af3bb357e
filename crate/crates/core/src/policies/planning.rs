//! Planning-based policies: one-step lookahead and residual-horizon planning.

use crate::belief::{Allocation, BeliefState, Schedule};
use crate::error::{Error, Result};
use crate::planner::{solve_rho, PlannerConfig};

/// Plans only for the next batch (`b̄ = b_t`).
pub fn myopic_allocation(
    state: &BeliefState,
    b_t: f64,
    s2: &[f64],
    cfg: &PlannerConfig,
) -> Result<Allocation> {
    Ok(solve_rho(state, b_t, s2, cfg)?.allocation)
}

/// Plans a constant allocation over the whole remaining budget `Σ_{v≥t} b_v`.
pub fn rho_policy_step(
    state: &BeliefState,
    t: usize,
    schedule: &Schedule,
    s2: &[f64],
    cfg: &PlannerConfig,
) -> Result<Allocation> {
    if t >= schedule.epochs() {
        return Err(Error::invalid(format!(
            "epoch {t} is past the horizon of {} epochs",
            schedule.epochs()
        )));
    }
    Ok(solve_rho(state, schedule.residual(t), s2, cfg)?.allocation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> BeliefState {
        BeliefState::new(vec![0.2, 0.0, 0.1], vec![1.0, 0.5, 2.0]).unwrap()
    }

    #[test]
    fn last_epoch_is_myopic() {
        let sched = Schedule::new(vec![1.0, 2.0, 0.5]).unwrap();
        let cfg = PlannerConfig::default();
        let a = rho_policy_step(&state(), 2, &sched, &[1.0; 3], &cfg).unwrap();
        let b = myopic_allocation(&state(), 0.5, &[1.0; 3], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn first_epoch_uses_full_budget() {
        let sched = Schedule::constant(10, 1.0).unwrap();
        let cfg = PlannerConfig::default();
        let a = rho_policy_step(&state(), 0, &sched, &[1.0; 3], &cfg).unwrap();
        let b = solve_rho(&state(), 10.0, &[1.0; 3], &cfg)
            .unwrap()
            .allocation;
        assert_eq!(a, b);
    }

    #[test]
    fn past_horizon_rejected() {
        let sched = Schedule::constant(2, 1.0).unwrap();
        assert!(
            rho_policy_step(&state(), 2, &sched, &[1.0; 3], &PlannerConfig::default()).is_err()
        );
    }

    #[test]
    fn symmetric_myopic() {
        let s = BeliefState::iid(2, 0.0, 1.0).unwrap();
        let a = myopic_allocation(&s, 3.0, &[1.0, 1.0], &PlannerConfig::default()).unwrap();
        assert!((a.as_slice()[0] - 0.5).abs() <= 0.01);
        let one = BeliefState::iid(1, 0.0, 1.0).unwrap();
        let b = myopic_allocation(&one, 1.0, &[1.0], &PlannerConfig::default()).unwrap();
        assert_eq!(b.as_slice(), &[1.0]);
    }
}
