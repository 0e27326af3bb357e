//! Finite-batch environments: priors over arm means, instance draws and batch sampling.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Gumbel, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::belief::{check_s2, Allocation, BeliefState, ObservationVector};
use crate::error::{check_finite, check_len, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Reward distribution family and its prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RewardModel {
    /// Bernoulli rewards with `m_a ~ Beta(α, β)` (before the family adjustment).
    BetaBernoulli { alpha: f64, beta: f64 },
    /// Mean-`m_a` Gumbel rewards with variance `s2`, and `m_a ~ Gamma(shape, scale)`.
    GammaGumbel { shape: f64, scale: f64, s2: f64 },
    /// Gaussian rewards with variance `s2`; local parameters `h_a ~ N(μ0_a, σ0²_a)`.
    GaussianLimit {
        mu0: Vec<f64>,
        sigma0_2: Vec<f64>,
        #[serde(default = "one")]
        s2: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// How per-arm priors depart from the base prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorFamily {
    /// Identical priors.
    #[default]
    Flat,
    /// Arm 0's first shape parameter is scaled by 1.1.
    TopOne,
    /// The first `⌈K/2⌉` arms have their first shape parameter scaled by 1.1.
    TopHalf,
    /// Arm `i` (0-based) has its first shape parameter scaled by `1 − i/100`.
    Descending,
}

impl PriorFamily {
    fn multiplier(self, arm: usize, k: usize) -> f64 {
        match self {
            PriorFamily::Flat => 1.0,
            PriorFamily::TopOne => {
                if arm == 0 {
                    1.1
                } else {
                    1.0
                }
            }
            PriorFamily::TopHalf => {
                if arm < k.div_ceil(2) {
                    1.1
                } else {
                    1.0
                }
            }
            PriorFamily::Descending => 1.0 - arm as f64 / 100.0,
        }
    }
}

/// Environment description for a finite-batch experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub model: RewardModel,
    pub num_arms: usize,
    #[serde(default)]
    pub family: PriorFamily,
    /// Lognormal spread `ς` of the true measurement variance around the model's `s²`.
    #[serde(default)]
    pub perturbation: Option<f64>,
}

impl EnvironmentSpec {
    /// `Beta(bn, bn)` prior, as used for batch size `bn`.
    pub fn beta_bernoulli(num_arms: usize, batch_units: f64) -> Self {
        Self {
            model: RewardModel::BetaBernoulli {
                alpha: batch_units,
                beta: batch_units,
            },
            num_arms,
            family: PriorFamily::Flat,
            perturbation: None,
        }
    }

    /// `Gamma(shape = bn, scale = 1/bn)` prior on Gumbel means.
    pub fn gamma_gumbel(num_arms: usize, batch_units: f64, s2: f64) -> Self {
        Self {
            model: RewardModel::GammaGumbel {
                shape: batch_units,
                scale: 1.0 / batch_units,
                s2,
            },
            num_arms,
            family: PriorFamily::Flat,
            perturbation: None,
        }
    }

    pub fn with_family(mut self, family: PriorFamily) -> Self {
        self.family = family;
        self
    }

    /// Re-targets the prior to batches of `bn` units: `Beta(bn, bn)` or
    /// `Gamma(bn, 1/bn)`. Gaussian-limit priors are returned unchanged.
    pub fn with_batch_units(mut self, bn: f64) -> Self {
        match &mut self.model {
            RewardModel::BetaBernoulli { alpha, beta } => {
                *alpha = bn;
                *beta = bn;
            }
            RewardModel::GammaGumbel { shape, scale, .. } => {
                *shape = bn;
                *scale = 1.0 / bn;
            }
            RewardModel::GaussianLimit { .. } => {}
        }
        self
    }

    pub fn with_perturbation(mut self, spread: f64) -> Self {
        self.perturbation = Some(spread);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_arms;
        if k == 0 {
            return Err(Error::invalid("environment needs at least one arm"));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match &self.model {
            RewardModel::BetaBernoulli { alpha, beta } => {
                positive("Beta α", *alpha)?;
                positive("Beta β", *beta)?;
                if self.perturbation.is_some() {
                    return Err(Error::invalid(
                        "variance perturbation does not apply to Bernoulli rewards",
                    ));
                }
            }
            RewardModel::GammaGumbel { shape, scale, s2 } => {
                positive("Gamma shape", *shape)?;
                positive("Gamma scale", *scale)?;
                positive("reward variance", *s2)?;
            }
            RewardModel::GaussianLimit { mu0, sigma0_2, s2 } => {
                check_len("prior means", k, mu0.len())?;
                check_len("prior variances", k, sigma0_2.len())?;
                check_finite("prior means", mu0)?;
                BeliefState::new(mu0.clone(), sigma0_2.clone())?;
                positive("reward variance", *s2)?;
            }
        }
        if self.family == PriorFamily::Descending && k > 100 && self.has_shape_family() {
            return Err(Error::invalid("descending priors support at most 100 arms"));
        }
        if let Some(spread) = self.perturbation {
            if !(spread >= 0.0) || !spread.is_finite() {
                return Err(Error::invalid(format!(
                    "perturbation spread must be ≥ 0, got {spread}"
                )));
            }
        }
        Ok(())
    }

    fn has_shape_family(&self) -> bool {
        !matches!(self.model, RewardModel::GaussianLimit { .. })
    }

    /// Per-arm `(first, second)` prior parameters after the family adjustment.
    pub fn arm_priors(&self) -> Vec<(f64, f64)> {
        let k = self.num_arms;
        let (p, q) = match &self.model {
            RewardModel::BetaBernoulli { alpha, beta } => (*alpha, *beta),
            RewardModel::GammaGumbel { shape, scale, .. } => (*shape, *scale),
            RewardModel::GaussianLimit { mu0, sigma0_2, .. } => {
                return mu0.iter().cloned().zip(sigma0_2.iter().cloned()).collect();
            }
        };
        (0..k)
            .map(|a| (p * self.family.multiplier(a, k), q))
            .collect()
    }

    /// Beta prior `(α, β)` per arm, for the Bernoulli oracle policies.
    pub fn beta_prior(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self.model {
            RewardModel::BetaBernoulli { .. } => Some(self.arm_priors().into_iter().unzip()),
            _ => None,
        }
    }

    /// Per-unit reward variance assumed by the Gaussian policies.
    pub fn model_s2(&self) -> Vec<f64> {
        let s2 = match &self.model {
            RewardModel::BetaBernoulli { .. } => 0.25,
            RewardModel::GammaGumbel { s2, .. } | RewardModel::GaussianLimit { s2, .. } => *s2,
        };
        vec![s2; self.num_arms]
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self.model, RewardModel::BetaBernoulli { .. })
    }
}

/// Realised arm means for one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    /// Unscaled mean rewards `m`.
    pub true_means: Vec<f64>,
    /// Per-unit reward variances actually used to generate rewards.
    pub true_s2: Vec<f64>,
    /// Local parameters `h = √n m`.
    pub h: Vec<f64>,
    pub n: u64,
}

impl Instance {
    pub fn new(true_means: Vec<f64>, true_s2: Vec<f64>, n: u64) -> Result<Self> {
        check_len("true variances", true_means.len(), true_s2.len())?;
        check_finite("true means", &true_means)?;
        check_s2(&true_s2)?;
        if n == 0 {
            return Err(Error::invalid("batch scaling n must be positive"));
        }
        let root = (n as f64).sqrt();
        let h = true_means.iter().map(|m| root * m).collect();
        Ok(Self {
            true_means,
            true_s2,
            h,
            n,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.true_means.len()
    }

    pub fn best_arm(&self) -> usize {
        crate::belief::argmax(&self.true_means)
    }
}

/// Draws arm means (and perturbed variances) from the environment's prior.
pub fn draw_instance<R: Rng + ?Sized>(
    spec: &EnvironmentSpec,
    n: u64,
    rng: &mut R,
) -> Result<Instance> {
    spec.validate()?;
    let priors = spec.arm_priors();
    let root = (n.max(1) as f64).sqrt();
    let bad = |e: &dyn std::fmt::Display| Error::invalid(e.to_string());
    let means: Vec<f64> = match &spec.model {
        RewardModel::BetaBernoulli { .. } => priors
            .iter()
            .map(|&(a, b)| Ok(Beta::new(a, b).map_err(|e| bad(&e))?.sample(rng)))
            .collect::<Result<_>>()?,
        RewardModel::GammaGumbel { .. } => priors
            .iter()
            .map(|&(shape, scale)| Ok(Gamma::new(shape, scale).map_err(|e| bad(&e))?.sample(rng)))
            .collect::<Result<_>>()?,
        RewardModel::GaussianLimit { .. } => priors
            .iter()
            .map(
                |&(m0, v0)| Ok(Normal::new(m0, v0.sqrt()).map_err(|e| bad(&e))?.sample(rng) / root),
            )
            .collect::<Result<_>>()?,
    };
    let true_s2 = match &spec.model {
        RewardModel::BetaBernoulli { .. } => means
            .iter()
            .map(|m| (m * (1.0 - m)).max(f64::MIN_POSITIVE))
            .collect(),
        RewardModel::GammaGumbel { s2, .. } | RewardModel::GaussianLimit { s2, .. } => {
            match spec.perturbation {
                Some(spread) if spread > 0.0 => {
                    let ln = LogNormal::new(0.0, spread).map_err(|e| bad(&e))?;
                    (0..spec.num_arms).map(|_| s2 * ln.sample(rng)).collect()
                }
                _ => vec![*s2; spec.num_arms],
            }
        }
    };
    Instance::new(means, true_s2, n)
}

/// `(μ0, σ0²) = (√n · prior mean, n · prior variance)` per arm. Gaussian-limit
/// priors are already on the local scale and come back unchanged.
pub fn matched_gaussian_prior(spec: &EnvironmentSpec, n: u64) -> Result<BeliefState> {
    spec.validate()?;
    let nf = n as f64;
    let moments: Vec<(f64, f64)> = match &spec.model {
        RewardModel::BetaBernoulli { .. } => spec
            .arm_priors()
            .into_iter()
            .map(|(a, b)| {
                let s = a + b;
                (a / s, a * b / (s * s * (s + 1.0)))
            })
            .collect(),
        RewardModel::GammaGumbel { .. } => spec
            .arm_priors()
            .into_iter()
            .map(|(k, theta)| (k * theta, k * theta * theta))
            .collect(),
        RewardModel::GaussianLimit { mu0, sigma0_2, .. } => {
            return BeliefState::new(mu0.clone(), sigma0_2.clone());
        }
    };
    let (mu, var): (Vec<f64>, Vec<f64>) = moments
        .into_iter()
        .map(|(m, v)| (nf.sqrt() * m, nf * v))
        .unzip();
    BeliefState::new(mu, var)
}

/// One epoch of sampled units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    /// Units assigned to each arm; sums to `b_t n`.
    pub counts: Vec<u64>,
    /// `√n R̄_{t,a} = Σ_j R_{a,j} / (b_t √n)`, 0 for arms with no units.
    pub agg: ObservationVector,
    /// Raw reward totals per arm.
    pub reward_sums: Vec<f64>,
}

/// Number of units in a batch, `b_t n`, which must be a positive integer.
pub fn batch_units(b_t: f64, n: u64) -> Result<u64> {
    let units = b_t * n as f64;
    let rounded = units.round();
    if !(rounded >= 1.0) || (units - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::invalid(format!(
            "b_t n = {units} is not a positive integer"
        )));
    }
    Ok(rounded as u64)
}

fn multinomial<R: Rng + ?Sized>(total: u64, p: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; p.len()];
    let support: Vec<usize> = (0..p.len()).filter(|&a| p[a] > 0.0).collect();
    let mut left = total;
    let mut mass: f64 = support.iter().map(|&a| p[a]).sum();
    for (i, &a) in support.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == support.len() {
            counts[a] = left;
            break;
        }
        let q = (p[a] / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, q)
            .map_err(|e| Error::invalid(e.to_string()))?
            .sample(rng);
        counts[a] = c;
        left -= c;
        mass -= p[a];
    }
    Ok(counts)
}

/// Assigns `b_t n` units iid by `alloc`, then draws their rewards.
pub fn sample_batch<R: Rng + ?Sized>(
    inst: &Instance,
    alloc: &Allocation,
    b_t: f64,
    rewards: RewardKind,
    rng: &mut R,
) -> Result<BatchOutcome> {
    let k = inst.num_arms();
    check_len("allocation", k, alloc.num_arms())?;
    let units = batch_units(b_t, inst.n)?;
    let counts = multinomial(units, alloc.as_slice(), rng)?;
    let bad = |e: &dyn std::fmt::Display| Error::invalid(e.to_string());
    let mut sums = vec![0.0; k];
    for a in 0..k {
        let c = counts[a];
        if c == 0 {
            continue;
        }
        let m = inst.true_means[a];
        sums[a] = match rewards {
            RewardKind::Bernoulli => Binomial::new(c, m.clamp(0.0, 1.0))
                .map_err(|e| bad(&e))?
                .sample(rng) as f64,
            RewardKind::Gumbel => {
                let scale = (6.0 * inst.true_s2[a]).sqrt() / std::f64::consts::PI;
                let g = Gumbel::new(m - scale * EULER_GAMMA, scale).map_err(|e| bad(&e))?;
                (0..c).map(|_| g.sample(rng)).sum()
            }
            RewardKind::Gaussian => {
                let cf = c as f64;
                Normal::new(cf * m, (cf * inst.true_s2[a]).sqrt())
                    .map_err(|e| bad(&e))?
                    .sample(rng)
            }
        };
    }
    let denom = b_t * (inst.n as f64).sqrt();
    let agg = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { 0.0 } else { s / denom })
        .collect();
    Ok(BatchOutcome {
        counts,
        agg: ObservationVector(agg),
        reward_sums: sums,
    })
}

/// Per-unit reward distribution given the arm mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Bernoulli,
    /// Gumbel shifted so its mean is the arm mean.
    Gumbel,
    /// Gaussian; a batch total is drawn in one step.
    Gaussian,
}

impl RewardModel {
    pub fn reward_kind(&self) -> RewardKind {
        match self {
            RewardModel::BetaBernoulli { .. } => RewardKind::Bernoulli,
            RewardModel::GammaGumbel { .. } => RewardKind::Gumbel,
            RewardModel::GaussianLimit { .. } => RewardKind::Gaussian,
        }
    }
}
