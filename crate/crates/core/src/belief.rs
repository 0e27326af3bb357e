//! Posterior beliefs of the Gaussian sequential experiment.
//!
//! Beliefs live on the scaled scale `h = √n · mean reward`. With prior
//! `h ~ N(μ, diag σ²)` and epoch observations `G_a ~ N(π_a h_a, π_a s_a² / b)`
//! the posterior stays Gaussian and independent across arms, so a belief is a
//! pair of vectors. Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};

/// Tolerance on `Σ p = 1` for a valid allocation.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Gaussian posterior `N(mu, diag(sigma2))` over the scaled mean rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBelief")]
pub struct BeliefState {
    mu: Vec<f64>,
    sigma2: Vec<f64>,
}

#[derive(Deserialize)]
struct RawBelief {
    mu: Vec<f64>,
    sigma2: Vec<f64>,
}

impl TryFrom<RawBelief> for BeliefState {
    type Error = Error;

    fn try_from(raw: RawBelief) -> Result<Self> {
        BeliefState::new(raw.mu, raw.sigma2)
    }
}

impl BeliefState {
    pub fn new(mu: Vec<f64>, sigma2: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::invalid("belief needs at least one arm"));
        }
        check_len("belief sigma2", mu.len(), sigma2.len())?;
        check_finite("belief mu", &mu)?;
        check_finite("belief sigma2", &sigma2)?;
        if sigma2.iter().any(|&v| v <= 0.0) {
            return Err(Error::invalid(
                "posterior variances must be strictly positive",
            ));
        }
        Ok(Self { mu, sigma2 })
    }

    /// Identical prior `N(mu, sigma2)` on each of `k` arms.
    pub fn iid(k: usize, mu: f64, sigma2: f64) -> Result<Self> {
        Self::new(vec![mu; k], vec![sigma2; k])
    }

    pub fn num_arms(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.sigma2.iter().map(|v| v.sqrt()).collect()
    }
}

/// Sampling probabilities over arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Allocation(Vec<f64>);

impl TryFrom<Vec<f64>> for Allocation {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Allocation::new(p)
    }
}

impl From<Allocation> for Vec<f64> {
    fn from(a: Allocation) -> Self {
        a.0
    }
}

impl Allocation {
    /// Validates `p ≥ 0` and `|Σ p − 1| ≤ 1e-12`.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("allocation needs at least one arm"));
        }
        check_finite("allocation", &p)?;
        if p.iter().any(|&x| x < 0.0) {
            return Err(Error::invalid("allocation has a negative entry"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("allocation sums to {total}, not 1")));
        }
        Ok(Self(p))
    }

    /// Normalises nonnegative weights onto the simplex.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        check_finite("allocation weights", w)?;
        if w.iter().any(|&x| x < 0.0) {
            return Err(Error::invalid("allocation weights must be nonnegative"));
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("allocation weights sum to zero"));
        }
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        Allocation::new(p)
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    /// All mass on `arm`.
    pub fn point(k: usize, arm: usize) -> Self {
        let mut p = vec![0.0; k];
        p[arm] = 1.0;
        Self(p)
    }

    pub fn num_arms(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_share(&self) -> f64 {
        self.0.iter().cloned().fold(0.0, f64::max)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

/// Epoch lengths `b_0, …, b_{T-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Schedule(Vec<f64>);

impl TryFrom<Vec<f64>> for Schedule {
    type Error = Error;

    fn try_from(b: Vec<f64>) -> Result<Self> {
        Schedule::new(b)
    }
}

impl From<Schedule> for Vec<f64> {
    fn from(s: Schedule) -> Self {
        s.0
    }
}

impl Schedule {
    pub fn new(batch_fracs: Vec<f64>) -> Result<Self> {
        if batch_fracs.is_empty() {
            return Err(Error::invalid("schedule needs at least one epoch"));
        }
        check_finite("schedule", &batch_fracs)?;
        if batch_fracs.iter().any(|&b| b <= 0.0) {
            return Err(Error::invalid("batch fractions must be strictly positive"));
        }
        Ok(Self(batch_fracs))
    }

    pub fn constant(epochs: usize, b: f64) -> Result<Self> {
        Self::new(vec![b; epochs])
    }

    pub fn epochs(&self) -> usize {
        self.0.len()
    }

    pub fn batch(&self, t: usize) -> f64 {
        self.0[t]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Residual budget `Σ_{v=t}^{T-1} b_v`.
    pub fn residual(&self, t: usize) -> f64 {
        self.0[t..].iter().sum()
    }
}

/// Known per-unit reward variances, epoch schedule and batch scaling `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub s2: Vec<f64>,
    pub batch_fracs: Schedule,
    pub n: u64,
}

impl MeasurementModel {
    pub fn new(s2: Vec<f64>, batch_fracs: Schedule, n: u64) -> Result<Self> {
        check_s2(&s2)?;
        if n == 0 {
            return Err(Error::invalid("batch scaling n must be positive"));
        }
        Ok(Self { s2, batch_fracs, n })
    }
}

/// One epoch's per-arm (scaled, aggregated) observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationVector(pub Vec<f64>);

impl ObservationVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_s2(s2: &[f64]) -> Result<()> {
    check_finite("measurement variance", s2)?;
    if s2.is_empty() || s2.iter().any(|&v| v <= 0.0) {
        return Err(Error::invalid(
            "measurement variances must be strictly positive",
        ));
    }
    Ok(())
}

fn check_update_inputs(
    state: &BeliefState,
    alloc: &Allocation,
    b_t: f64,
    s2: &[f64],
) -> Result<()> {
    let k = state.num_arms();
    check_len("allocation", k, alloc.num_arms())?;
    check_len("measurement variance", k, s2.len())?;
    check_s2(s2)?;
    if !(b_t > 0.0) || !b_t.is_finite() {
        return Err(Error::invalid(format!(
            "batch fraction must be positive, got {b_t}"
        )));
    }
    Ok(())
}

/// Conjugate update with observation `y`:
/// `σ'⁻² = σ⁻² + b π / s²`, `μ' = σ'² (σ⁻² μ + b y / s²)`.
///
/// Arms with `π_a = 0` are copied unchanged. The same recursion serves the
/// limit experiment (`y = G`) and finite batches (`y = √n R̄`).
pub fn posterior_update(
    state: &BeliefState,
    alloc: &Allocation,
    y: &ObservationVector,
    b_t: f64,
    s2: &[f64],
) -> Result<BeliefState> {
    check_update_inputs(state, alloc, b_t, s2)?;
    check_len("observation", state.num_arms(), y.0.len())?;
    check_finite("observation", &y.0)?;
    let mut mu = state.mu.clone();
    let mut sigma2 = state.sigma2.clone();
    for a in 0..state.num_arms() {
        let p = alloc.0[a];
        if p == 0.0 {
            continue;
        }
        let prior_prec = 1.0 / state.sigma2[a];
        let post_var = 1.0 / (prior_prec + b_t * p / s2[a]);
        mu[a] = post_var * (prior_prec * state.mu[a] + b_t * y.0[a] / s2[a]);
        sigma2[a] = post_var;
    }
    Ok(BeliefState { mu, sigma2 })
}

/// Reparameterised transition driven by standard normals `z`:
/// `μ' = μ + σ √(b π σ² / (s² + b π σ²)) z`, variance as in [`posterior_update`].
pub fn sample_transition(
    state: &BeliefState,
    alloc: &Allocation,
    z: &[f64],
    b_t: f64,
    s2: &[f64],
) -> Result<BeliefState> {
    check_update_inputs(state, alloc, b_t, s2)?;
    check_len("normal draws", state.num_arms(), z.len())?;
    check_finite("normal draws", z)?;
    let mut mu = state.mu.clone();
    let mut sigma2 = state.sigma2.clone();
    for a in 0..state.num_arms() {
        let p = alloc.0[a];
        if p == 0.0 {
            continue;
        }
        let v = state.sigma2[a];
        let info = b_t * p;
        let scale = (v * (info * v / (s2[a] + info * v))).sqrt();
        mu[a] = state.mu[a] + scale * z[a];
        sigma2[a] = 1.0 / (1.0 / v + info / s2[a]);
    }
    Ok(BeliefState { mu, sigma2 })
}

/// Draws `G_a = π_a h_a + √(π_a s_a² / b) z_a`; exactly zero where `π_a = 0`.
pub fn sample_limit_observation(
    h: &[f64],
    alloc: &Allocation,
    z: &[f64],
    b_t: f64,
    s2: &[f64],
) -> Result<ObservationVector> {
    let k = h.len();
    check_len("allocation", k, alloc.num_arms())?;
    check_len("normal draws", k, z.len())?;
    check_len("measurement variance", k, s2.len())?;
    check_finite("local parameters", h)?;
    check_finite("normal draws", z)?;
    check_s2(s2)?;
    if !(b_t > 0.0) {
        return Err(Error::invalid("batch fraction must be positive"));
    }
    let y = (0..k)
        .map(|a| {
            let p = alloc.0[a];
            if p == 0.0 {
                0.0
            } else {
                p * h[a] + (p * s2[a] / b_t).sqrt() * z[a]
            }
        })
        .collect();
    Ok(ObservationVector(y))
}

/// Standard deviation of the change in posterior mean when allocation `rho`
/// is held for a residual budget `b_bar`: `√(σ⁴ ρ b̄ / (s² + σ² ρ b̄))`.
pub fn terminal_std(state: &BeliefState, rho: &[f64], b_bar: f64, s2: &[f64]) -> Vec<f64> {
    state
        .sigma2
        .iter()
        .zip(rho)
        .zip(s2)
        .map(|((&v, &r), &s)| terminal_std_scalar(v, r * b_bar, s))
        .collect()
}

#[inline]
pub(crate) fn terminal_std_scalar(sigma2: f64, info: f64, s2: f64) -> f64 {
    if info <= 0.0 {
        return 0.0;
    }
    (sigma2 * sigma2 * info / (s2 + sigma2 * info)).sqrt()
}

/// `σ_t² − σ_{t+1}²` in closed form, `σ⁴ b π / (s² + σ² b π)`.
pub fn variance_decrement(sigma2: &[f64], alloc: &Allocation, b_t: f64, s2: &[f64]) -> Vec<f64> {
    sigma2
        .iter()
        .zip(alloc.as_slice())
        .zip(s2)
        .map(|((&v, &p), &s)| {
            let info = b_t * p;
            v * v * info / (s + v * info)
        })
        .collect()
}

/// Arm with the highest posterior mean; ties go to the lowest index.
pub fn select_arm(state: &BeliefState) -> usize {
    argmax(&state.mu)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = a;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn posterior_update_single_arm() {
        let s = BeliefState::new(vec![0.0], vec![1.0]).unwrap();
        let next = posterior_update(
            &s,
            &Allocation::uniform(1),
            &ObservationVector(vec![2.0]),
            1.0,
            &[1.0],
        )
        .unwrap();
        assert!(close(next.sigma2()[0], 0.5, 1e-15));
        assert!(close(next.mu()[0], 1.0, 1e-15));
    }

    #[test]
    fn posterior_update_fractional_allocation() {
        // σ²=4, s²=2, b=2, π=0.5, μ=1, y=0
        let s = BeliefState::new(vec![1.0, 7.0], vec![4.0, 3.0]).unwrap();
        let alloc = Allocation::new(vec![0.5, 0.5]).unwrap();
        let next = posterior_update(
            &s,
            &alloc,
            &ObservationVector(vec![0.0, 0.0]),
            2.0,
            &[2.0, 2.0],
        )
        .unwrap();
        assert!(close(next.sigma2()[0], 4.0 / 3.0, 1e-15));
        assert!(close(next.mu()[0], 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn zero_allocation_is_identity() {
        let s = BeliefState::new(vec![0.3, -1.7], vec![0.7, 2.5]).unwrap();
        let alloc = Allocation::new(vec![1.0, 0.0]).unwrap();
        let next = posterior_update(
            &s,
            &alloc,
            &ObservationVector(vec![1.0, 0.0]),
            1.0,
            &[1.0, 1.0],
        )
        .unwrap();
        assert_eq!(next.mu()[1].to_bits(), s.mu()[1].to_bits());
        assert_eq!(next.sigma2()[1].to_bits(), s.sigma2()[1].to_bits());
        let moved = sample_transition(&s, &alloc, &[0.4, 3.0], 1.0, &[1.0, 1.0]).unwrap();
        assert_eq!(moved.mu()[1].to_bits(), s.mu()[1].to_bits());
        assert_eq!(moved.sigma2()[1].to_bits(), s.sigma2()[1].to_bits());
    }

    #[test]
    fn update_rejects_bad_inputs() {
        let s = BeliefState::iid(2, 0.0, 1.0).unwrap();
        let alloc = Allocation::uniform(2);
        let err = posterior_update(&s, &alloc, &ObservationVector(vec![1.0]), 1.0, &[1.0, 1.0]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let err = posterior_update(
            &s,
            &alloc,
            &ObservationVector(vec![f64::NAN, 0.0]),
            1.0,
            &[1.0, 1.0],
        );
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert!(BeliefState::new(vec![0.0], vec![0.0]).is_err());
        assert!(BeliefState::new(vec![], vec![]).is_err());
    }

    #[test]
    fn transition_examples() {
        let s = BeliefState::new(vec![0.0], vec![1.0]).unwrap();
        let alloc = Allocation::uniform(1);
        let still = sample_transition(&s, &alloc, &[0.0], 1.0, &[1.0]).unwrap();
        assert_eq!(still.mu()[0], 0.0);
        assert!(close(still.sigma2()[0], 0.5, 1e-15));
        let moved = sample_transition(&s, &alloc, &[1.0], 1.0, &[1.0]).unwrap();
        assert!(close(moved.mu()[0], 0.5f64.sqrt(), 1e-15));
    }

    #[test]
    fn limit_observation_examples() {
        let alloc = Allocation::new(vec![0.25, 0.75, 0.0]).unwrap();
        let y = sample_limit_observation(
            &[0.0, 2.0, 9.0],
            &alloc,
            &[1.0, 0.0, 5.0],
            1.0,
            &[4.0, 1.0, 1.0],
        )
        .unwrap();
        assert!(close(y.0[0], 1.0, 1e-15));
        assert!(close(y.0[1], 1.5, 1e-15));
        assert_eq!(y.0[2], 0.0);
        let y =
            sample_limit_observation(&[3.0], &Allocation::uniform(1), &[0.0], 1.0, &[1.0]).unwrap();
        assert_eq!(y.0, vec![3.0]);
    }

    #[test]
    fn terminal_std_examples() {
        let s = BeliefState::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 4.0]).unwrap();
        let sd = terminal_std(&s, &[0.0, 1.0, 1.0], 1.0, &[1.0, 1.0, 1.0]);
        assert_eq!(sd[0], 0.0);
        assert!(close(sd[1], 0.5f64.sqrt(), 1e-15));
        let sd = terminal_std(&s, &[1.0, 1.0, 1.0], 1e12, &[1.0, 1.0, 1.0]);
        assert!((sd[2] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn variance_decrement_examples() {
        let d = variance_decrement(
            &[1.0, 1.0, 4.0],
            &Allocation::new(vec![0.5, 0.0, 0.5]).unwrap(),
            2.0,
            &[1.0, 1.0, 2.0],
        );
        assert!(close(d[0], 0.5, 1e-15));
        assert_eq!(d[1], 0.0);
        assert!(close(d[2], 16.0 / 6.0, 1e-15));
    }

    #[test]
    fn select_arm_ties_to_lowest_index() {
        let s = BeliefState::new(vec![0.1, 0.5, 0.3], vec![1.0; 3]).unwrap();
        assert_eq!(select_arm(&s), 1);
        let s = BeliefState::new(vec![0.5, 0.5], vec![1.0; 2]).unwrap();
        assert_eq!(select_arm(&s), 0);
        let s = BeliefState::new(vec![-3.0], vec![1.0]).unwrap();
        assert_eq!(select_arm(&s), 0);
    }

    #[test]
    fn belief_json_shape() {
        let s = BeliefState::new(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"mu":[1.0,2.0],"sigma2":[0.5,0.25]}"#);
        let back: BeliefState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<BeliefState>(r#"{"mu":[1.0],"sigma2":[-1.0]}"#).is_err());
    }

    #[test]
    fn allocation_validation() {
        assert!(Allocation::new(vec![0.5, 0.5]).is_ok());
        assert!(Allocation::new(vec![0.5, 0.6]).is_err());
        assert!(Allocation::new(vec![1.5, -0.5]).is_err());
        let a = Allocation::from_weights(&[1.0, 3.0]).unwrap();
        assert_eq!(a.as_slice(), &[0.25, 0.75]);
        assert!(Allocation::from_weights(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn residual_budget() {
        let s = Schedule::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.residual(0), 6.0);
        assert_eq!(s.residual(2), 3.0);
        assert!(Schedule::new(vec![]).is_err());
        assert!(Schedule::new(vec![1.0, 0.0]).is_err());
    }
}
