//! Sampling policies behind a single interface.
//!
//! A [`Policy`] maps the running [`HistorySummary`] to the next epoch's
//! [`Allocation`]. Policies are built from a [`PolicySpec`], which parses from
//! short strings such as `rho`, `ts:M=10000`, `se:c=1:delta=0.1` or `ttts:beta=0.5`.

pub mod dts;
pub mod planning;
pub mod thompson;
pub mod uniform_se;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::belief::{Allocation, BeliefState, Schedule};
use crate::error::{check_len, Error, Result};
use crate::planner::{Planner, PlannerConfig};
use crate::streams::StreamRng;

pub use dts::{dts_allocation, dts_index, dts_index_bounds, dts_indices, DtsIndex};
pub use planning::{myopic_allocation, rho_policy_step};
pub use thompson::{
    gaussian_ts_allocation, oracle_bb_ts_step, top_two_ts_allocation, BetaPosterior,
};
pub use uniform_se::{se_width, successive_elimination_step, uniform_allocation};

/// Default Monte Carlo draw count for sampling-based policies.
pub const DEFAULT_DRAWS: usize = 10_000;
pub const DEFAULT_TOP_TWO_BETA: f64 = 0.5;

/// What a policy may condition on at the start of an epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistorySummary {
    /// Gaussian posterior over scaled means.
    pub belief: BeliefState,
    /// Cumulative samples per arm (fractional in the limit experiment).
    pub counts: Vec<f64>,
    /// Empirical mean reward per arm, 0 for unsampled arms.
    pub means: Vec<f64>,
    pub successes: Vec<u64>,
    pub failures: Vec<u64>,
    pub epoch: usize,
    /// `Σ_{v ≥ t} b_v`.
    pub residual_budget: f64,
}

impl HistorySummary {
    pub fn new(belief: BeliefState, residual_budget: f64) -> Self {
        let k = belief.num_arms();
        Self {
            belief,
            counts: vec![0.0; k],
            means: vec![0.0; k],
            successes: vec![0; k],
            failures: vec![0; k],
            epoch: 0,
            residual_budget,
        }
    }

    /// Folds one batch of per-arm sample counts and reward sums into the running means.
    pub fn record(&mut self, counts: &[f64], reward_sums: &[f64]) -> Result<()> {
        let k = self.counts.len();
        check_len("batch counts", k, counts.len())?;
        check_len("reward sums", k, reward_sums.len())?;
        for a in 0..k {
            if counts[a] > 0.0 {
                let total = self.counts[a] + counts[a];
                self.means[a] = (self.means[a] * self.counts[a] + reward_sums[a]) / total;
                self.counts[a] = total;
            }
        }
        Ok(())
    }

    pub fn record_bernoulli(&mut self, successes: &[u64], failures: &[u64]) -> Result<()> {
        check_len("success counts", self.successes.len(), successes.len())?;
        check_len("failure counts", self.failures.len(), failures.len())?;
        for (acc, s) in self.successes.iter_mut().zip(successes) {
            *acc += s;
        }
        for (acc, f) in self.failures.iter_mut().zip(failures) {
            *acc += f;
        }
        Ok(())
    }
}

/// Which policy to run, with its tuning constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    Uniform,
    SuccessiveElimination { c: f64, delta: f64 },
    GaussianTs { m: usize },
    TopTwoTs { beta: f64, m: usize },
    Myopic,
    Rho,
    Dts { m: usize },
    OracleTs { m: usize },
    OracleTopTwoTs { beta: f64, m: usize },
}

impl PolicySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        match *self {
            PolicySpec::SuccessiveElimination { c, delta } => {
                if !(c > 0.0) || !(delta > 0.0 && delta < 1.0) {
                    return bad(format!(
                        "elimination needs c > 0 and δ ∈ (0,1), got c={c}, δ={delta}"
                    ));
                }
            }
            PolicySpec::TopTwoTs { beta, m } | PolicySpec::OracleTopTwoTs { beta, m } => {
                if !(beta > 0.0 && beta <= 1.0) || m == 0 {
                    return bad(format!(
                        "top-two needs β ∈ (0,1] and M ≥ 1, got β={beta}, M={m}"
                    ));
                }
            }
            PolicySpec::GaussianTs { m } | PolicySpec::Dts { m } | PolicySpec::OracleTs { m } => {
                if m == 0 {
                    return bad("draw count M must be at least 1".into());
                }
            }
            PolicySpec::Uniform | PolicySpec::Myopic | PolicySpec::Rho => {}
        }
        Ok(())
    }

    /// Needs Bernoulli success/failure counts and a Beta prior.
    pub fn is_oracle(&self) -> bool {
        matches!(
            self,
            PolicySpec::OracleTs { .. } | PolicySpec::OracleTopTwoTs { .. }
        )
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Uniform => write!(f, "uniform"),
            PolicySpec::SuccessiveElimination { c, delta } => write!(f, "se:c={c}:delta={delta}"),
            PolicySpec::GaussianTs { m } => write!(f, "ts:M={m}"),
            PolicySpec::TopTwoTs { beta, m } => write!(f, "ttts:beta={beta}:M={m}"),
            PolicySpec::Myopic => write!(f, "myopic"),
            PolicySpec::Rho => write!(f, "rho"),
            PolicySpec::Dts { m } => write!(f, "dts:M={m}"),
            PolicySpec::OracleTs { m } => write!(f, "oracle-ts:M={m}"),
            PolicySpec::OracleTopTwoTs { beta, m } => write!(f, "oracle-ttts:beta={beta}:M={m}"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let mut m = DEFAULT_DRAWS;
        let mut beta = DEFAULT_TOP_TWO_BETA;
        let mut c = 1.0;
        let mut delta = 0.1;
        for kv in parts {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in `{s}`, got `{kv}`")))?;
            let num = |v: &str| -> Result<f64> {
                v.parse()
                    .map_err(|_| Error::Parse(format!("bad number `{v}` in `{s}`")))
            };
            match key {
                "M" | "m" => {
                    m = value
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad draw count `{value}` in `{s}`")))?
                }
                "beta" => beta = num(value)?,
                "c" => c = num(value)?,
                "delta" => delta = num(value)?,
                _ => return Err(Error::Parse(format!("unknown key `{key}` in `{s}`"))),
            }
        }
        let spec = match name.as_str() {
            "uniform" => PolicySpec::Uniform,
            "se" | "successive-elimination" => PolicySpec::SuccessiveElimination { c, delta },
            "ts" => PolicySpec::GaussianTs { m },
            "ttts" | "top-two-ts" => PolicySpec::TopTwoTs { beta, m },
            "myopic" => PolicySpec::Myopic,
            "rho" => PolicySpec::Rho,
            "dts" => PolicySpec::Dts { m },
            "oracle-ts" => PolicySpec::OracleTs { m },
            "oracle-ttts" => PolicySpec::OracleTopTwoTs { beta, m },
            _ => return Err(Error::Parse(format!("unknown policy `{s}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> Self {
        p.to_string()
    }
}

/// Problem-level inputs shared by every policy in a run.
#[derive(Debug, Clone)]
pub struct PolicyContext {
    pub schedule: Schedule,
    /// Per-unit reward variances assumed by the policy.
    pub s2: Vec<f64>,
    pub planner: PlannerConfig,
    /// Beta prior `(α, β)` per arm, required by the oracle policies.
    pub beta_prior: Option<(Vec<f64>, Vec<f64>)>,
}

/// A stateful sampling rule for one experiment run.
pub trait Policy: Send {
    /// Allocation for epoch `hist.epoch`; `rng` is this policy's private stream.
    fn allocate(&mut self, hist: &HistorySummary, rng: &mut StreamRng) -> Result<Allocation>;
}

struct Uniform;

impl Policy for Uniform {
    fn allocate(&mut self, hist: &HistorySummary, _: &mut StreamRng) -> Result<Allocation> {
        Ok(Allocation::uniform(hist.belief.num_arms()))
    }
}

struct Elimination {
    c: f64,
    delta: f64,
    s: Vec<f64>,
    active: Option<Vec<bool>>,
}

impl Policy for Elimination {
    fn allocate(&mut self, hist: &HistorySummary, _: &mut StreamRng) -> Result<Allocation> {
        let (active, alloc) =
            successive_elimination_step(hist, self.c, self.delta, &self.s, self.active.as_deref())?;
        self.active = Some(active);
        Ok(alloc)
    }
}

enum Sampling {
    Ts,
    TopTwo(f64),
    Dts(Vec<f64>),
}

struct PosteriorSampling {
    kind: Sampling,
    m: usize,
}

impl Policy for PosteriorSampling {
    fn allocate(&mut self, hist: &HistorySummary, rng: &mut StreamRng) -> Result<Allocation> {
        let seed = rng.next_u64();
        let state = &hist.belief;
        if state.num_arms() == 1 {
            return Ok(Allocation::uniform(1));
        }
        match &self.kind {
            Sampling::Ts => gaussian_ts_allocation(state, self.m, seed),
            Sampling::TopTwo(beta) => top_two_ts_allocation(state, *beta, self.m, seed),
            Sampling::Dts(s2) => dts_allocation(state, s2, self.m, seed),
        }
    }
}

struct Oracle {
    top_two: Option<f64>,
    m: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Policy for Oracle {
    fn allocate(&mut self, hist: &HistorySummary, rng: &mut StreamRng) -> Result<Allocation> {
        let seed = rng.next_u64();
        let post = BetaPosterior::new(&hist.successes, &hist.failures, &self.alpha, &self.beta)?;
        oracle_bb_ts_step(&post, self.top_two, self.m, seed)
    }
}

struct Planning {
    planner: Planner,
    schedule: Schedule,
    s2: Vec<f64>,
    residual: bool,
}

impl Policy for Planning {
    fn allocate(&mut self, hist: &HistorySummary, _: &mut StreamRng) -> Result<Allocation> {
        let t = hist.epoch;
        if t >= self.schedule.epochs() {
            return Err(Error::invalid(format!("epoch {t} is past the horizon")));
        }
        let b_bar = if self.residual {
            self.schedule.residual(t)
        } else {
            self.schedule.batch(t)
        };
        Ok(self
            .planner
            .solve(&hist.belief, b_bar, &self.s2)?
            .allocation)
    }
}

/// Builds a fresh policy instance for one run.
pub fn instantiate(spec: &PolicySpec, ctx: &PolicyContext) -> Result<Box<dyn Policy>> {
    spec.validate()?;
    let k = ctx.s2.len();
    Ok(match *spec {
        PolicySpec::Uniform => Box::new(Uniform),
        PolicySpec::SuccessiveElimination { c, delta } => Box::new(Elimination {
            c,
            delta,
            s: ctx.s2.iter().map(|v| v.sqrt()).collect(),
            active: None,
        }),
        PolicySpec::GaussianTs { m } => Box::new(PosteriorSampling {
            kind: Sampling::Ts,
            m,
        }),
        PolicySpec::TopTwoTs { beta, m } => Box::new(PosteriorSampling {
            kind: Sampling::TopTwo(beta),
            m,
        }),
        PolicySpec::Dts { m } => Box::new(PosteriorSampling {
            kind: Sampling::Dts(ctx.s2.clone()),
            m,
        }),
        PolicySpec::OracleTs { m } | PolicySpec::OracleTopTwoTs { m, .. } => {
            let (alpha, beta) = ctx.beta_prior.clone().ok_or_else(|| {
                Error::invalid(format!("{spec} needs a Beta-Bernoulli environment"))
            })?;
            check_len("prior α", k, alpha.len())?;
            check_len("prior β", k, beta.len())?;
            let top_two = match *spec {
                PolicySpec::OracleTopTwoTs { beta, .. } => Some(beta),
                _ => None,
            };
            Box::new(Oracle {
                top_two,
                m,
                alpha,
                beta,
            })
        }
        PolicySpec::Myopic | PolicySpec::Rho => Box::new(Planning {
            planner: Planner::new(ctx.planner.clone(), k)?,
            schedule: ctx.schedule.clone(),
            s2: ctx.s2.clone(),
            residual: matches!(spec, PolicySpec::Rho),
        }),
    })
}
