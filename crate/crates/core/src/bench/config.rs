use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::belief::Schedule;
use crate::error::{Error, Result};
use crate::planner::PlannerConfig;
use crate::policies::PolicySpec;
use crate::sim::EnvironmentSpec;

/// Candidate constants for successive elimination; every combination is run
/// and the best is reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeGrid {
    pub c: Vec<f64>,
    pub delta: Vec<f64>,
}

impl Default for SeGrid {
    fn default() -> Self {
        Self {
            c: vec![0.5, 1.0, 2.0],
            delta: vec![0.1, 0.05],
        }
    }
}

/// A replicated comparison of policies on one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSpec,
    pub policies: Vec<PolicySpec>,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Batch scaling; each epoch has `b_t n` units.
    pub n: u64,
    /// Explicit `b_t` per epoch. Defaults to `epochs` epochs of `b_t = 1`.
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub planner: PlannerConfig,
    /// Grid substituted for any `se` entry; `None` runs the listed constants only.
    #[serde(default = "default_grid")]
    pub se_grid: Option<SeGrid>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_grid() -> Option<SeGrid> {
    Some(SeGrid::default())
}

impl ExperimentConfig {
    pub fn new(
        environment: EnvironmentSpec,
        policies: Vec<PolicySpec>,
        replications: usize,
        n: u64,
        epochs: usize,
    ) -> Self {
        Self {
            environment,
            policies,
            replications,
            seed: 0,
            n,
            schedule: None,
            epochs: Some(epochs),
            planner: PlannerConfig::default(),
            se_grid: default_grid(),
            output_dir: None,
        }
    }

    pub fn schedule(&self) -> Result<Schedule> {
        match (&self.schedule, self.epochs) {
            (Some(s), None) => Ok(s.clone()),
            (Some(s), Some(t)) if s.epochs() == t => Ok(s.clone()),
            (Some(s), Some(t)) => Err(Error::invalid(format!(
                "schedule has {} epochs but epochs = {t}",
                s.epochs()
            ))),
            (None, Some(t)) => Schedule::constant(t, 1.0),
            (None, None) => Err(Error::invalid("config needs `epochs` or `schedule`")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.policies.is_empty() {
            return Err(Error::invalid("config lists no policies"));
        }
        if self.n == 0 {
            return Err(Error::invalid("batch scaling n must be positive"));
        }
        self.environment.validate()?;
        self.planner.validate()?;
        for p in &self.policies {
            p.validate()?;
        }
        let sched = self.schedule()?;
        for t in 0..sched.epochs() {
            crate::sim::batch_units(sched.batch(t), self.n)?;
        }
        Ok(())
    }

    /// Policies to run, with `se` entries expanded over the grid and duplicates removed.
    pub fn expanded_policies(&self) -> Vec<PolicySpec> {
        let mut out: Vec<PolicySpec> = Vec::new();
        let mut push = |p: PolicySpec| {
            if !out.contains(&p) {
                out.push(p);
            }
        };
        for p in &self.policies {
            match (p, &self.se_grid) {
                (PolicySpec::SuccessiveElimination { .. }, Some(grid)) => {
                    for &c in &grid.c {
                        for &delta in &grid.delta {
                            push(PolicySpec::SuccessiveElimination { c, delta });
                        }
                    }
                }
                _ => push(p.clone()),
            }
        }
        out
    }

    /// Reads TOML (`.toml`) or JSON (anything else).
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML: &str = r#"
policies = ["uniform", "rho", "ts:M=100", "se"]
replications = 4
seed = 9
n = 100
epochs = 3

[environment]
num_arms = 5
family = "top-one"

[environment.model]
type = "gamma-gumbel"
shape = 100.0
scale = 0.01
s2 = 1.0

[planner]
num_samples = 256
"#;

    #[test]
    fn parses_toml() {
        let cfg: ExperimentConfig = toml::from_str(TOML).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.schedule().unwrap().epochs(), 3);
        assert_eq!(cfg.planner.num_samples, 256);
        assert_eq!(cfg.planner.max_iters, PlannerConfig::default().max_iters);
        let expanded = cfg.expanded_policies();
        assert_eq!(expanded.len(), 3 + 6);
    }

    #[test]
    fn json_round_trip() {
        let cfg: ExperimentConfig = toml::from_str(TOML).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_fractional_batches() {
        let mut cfg: ExperimentConfig = toml::from_str(TOML).unwrap();
        cfg.schedule = Some(Schedule::new(vec![0.5, 1.0, 1.0]).unwrap());
        cfg.n = 3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_can_be_disabled() {
        let mut cfg: ExperimentConfig = toml::from_str(TOML).unwrap();
        cfg.se_grid = None;
        assert_eq!(cfg.expanded_policies().len(), 4);
    }
}
