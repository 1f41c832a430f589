//! Neighbor class-membership tests.
//!
//! Every rule here is symmetric in its two agents, so the accepted neighbor
//! sets satisfy `b ∈ C_a ⇔ a ∈ C_b` and the resulting mixing matrix is
//! doubly stochastic. Thresholds use only public per-agent constants.

use crate::bernstein::{check_theta, data_plus_noise_beta};
use crate::error::{Error, Result};
use crate::privacy::PrivacySpec;
use crate::topology::ClassStructure;

/// Power-law significance schedule `θ_t = min(cap, coefficient / t^exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSchedule {
    pub cap: f64,
    pub coefficient: f64,
    pub exponent: f64,
}

impl ThetaSchedule {
    pub fn new(cap: f64, coefficient: f64, exponent: f64) -> Result<Self> {
        if !(cap > 0.0 && cap <= 2.0) {
            return Err(Error::invalid(format!("theta cap must be in (0, 2], got {cap}")));
        }
        if !(coefficient > 0.0) || !coefficient.is_finite() {
            return Err(Error::invalid(format!("theta coefficient must be > 0, got {coefficient}")));
        }
        if !(exponent >= 0.0) || !exponent.is_finite() {
            return Err(Error::invalid(format!("theta exponent must be >= 0, got {exponent}")));
        }
        Ok(Self { cap, coefficient, exponent })
    }

    /// `min(2, 3/t^p)` with the exponent tuned for 200 agents and three classes.
    ///
    /// | r  | ε = 1 | ε = 2 | ε = 4 | ε = ∞ |
    /// |----|-------|-------|-------|-------|
    /// | 5  | 1/8   | 1/7   | 1/7   | 1/7   |
    /// | 20 | 1/7   | 1/6   | 1/5   | 1/5   |
    ///
    /// Anything else falls back to `1/7`, which is untuned.
    pub fn tuned(r: usize, epsilon: f64) -> Self {
        let exponent = match (r, epsilon) {
            (5, e) if e == 1.0 => 1.0 / 8.0,
            (20, e) if e == 1.0 => 1.0 / 7.0,
            (20, e) if e == 2.0 => 1.0 / 6.0,
            (20, e) if e == 4.0 || e.is_infinite() => 1.0 / 5.0,
            _ => 1.0 / 7.0,
        };
        Self { cap: 2.0, coefficient: 3.0, exponent }
    }

    /// `θ_t` at round `t ≥ 1`.
    pub fn theta_at(&self, t: u64) -> f64 {
        let t = t.max(1) as f64;
        self.cap.min(self.coefficient / t.powf(self.exponent))
    }
}

/// Which test decides neighbor membership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleSpec {
    /// Ground-truth class membership.
    Oracle,
    /// Two-sample Bernstein test at significance `θ_t`.
    BernsteinTest { schedule: ThetaSchedule },
    /// Optimistic distance with confidence `δ ∈ (0, 1]`, using `γ = δ/(4rM)`.
    OptimisticDistance { delta: f64, r_assumed: usize },
}

impl RuleSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RuleSpec::Oracle => Ok(()),
            RuleSpec::BernsteinTest { schedule } => {
                ThetaSchedule::new(schedule.cap, schedule.coefficient, schedule.exponent).map(|_| ())
            }
            RuleSpec::OptimisticDistance { delta, r_assumed } => {
                check_delta(delta)?;
                if r_assumed == 0 {
                    return Err(Error::invalid("optimistic distance needs an assumed degree r >= 1"));
                }
                Ok(())
            }
        }
    }

    /// Short name used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            RuleSpec::Oracle => "oracle",
            RuleSpec::BernsteinTest { .. } => "bernstein",
            RuleSpec::OptimisticDistance { .. } => "optimistic",
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta must be in (0, 1], got {delta}")));
    }
    Ok(())
}

/// An agent's published data constants: standard deviation and Bernstein parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublicStats {
    pub sigma: f64,
    pub beta: f64,
}

impl PublicStats {
    /// Uniform data of half-range `L`: `σ = L/√3`, `β = L/(2√5)`.
    pub fn uniform(half_range: f64) -> Self {
        Self { sigma: half_range / 3f64.sqrt(), beta: half_range / (2.0 * 5f64.sqrt()) }
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Per-sample Bernstein parameter of data plus DP noise.
    pub fn noisy_beta(&self, privacy: &PrivacySpec) -> f64 {
        data_plus_noise_beta(self.sigma, self.beta, privacy.sigma_dp, privacy.beta_dp)
    }
}

/// `μ_a = μ_b` according to the true classes.
pub fn oracle_decide(a: usize, b: usize, structure: &ClassStructure) -> bool {
    structure.same_class(a, b)
}

/// Bernstein threshold from precomputed pieces. `log_term` is `ln(2/θ_t)`.
#[inline]
pub(crate) fn bernstein_z(
    noisy_beta_a: f64,
    noisy_beta_b: f64,
    sigma_sq_sum: f64,
    sigma_dp_sq: f64,
    sqrt_t: f64,
    log_term: f64,
) -> f64 {
    2.0 * (noisy_beta_a + noisy_beta_b) / sqrt_t * log_term
        + (sigma_sq_sum + 2.0 * sigma_dp_sq).sqrt() / sqrt_t * (2.0 * log_term).sqrt()
}

/// `z_{θ_t} = 2(β̃_a + β̃_b)/√t · ln(2/θ_t) + √(σ_a² + σ_b² + 2σ_DP²)/√t · √(2 ln(2/θ_t))`.
pub fn bernstein_threshold(
    t: u64,
    a: &PublicStats,
    b: &PublicStats,
    privacy: &PrivacySpec,
    theta: f64,
) -> Result<f64> {
    if t < 1 {
        return Err(Error::invalid("round index must be at least 1"));
    }
    check_theta(theta)?;
    Ok(bernstein_z(
        a.noisy_beta(privacy),
        b.noisy_beta(privacy),
        a.sigma_sq() + b.sigma_sq(),
        privacy.sigma_dp_sq,
        (t as f64).sqrt(),
        (2.0 / theta).ln(),
    ))
}

/// Accept `b` when `|x̃_a − x̃_b| < z_{θ_t}` (strict).
pub fn bernstein_decide(
    xa: f64,
    xb: f64,
    t: u64,
    a: &PublicStats,
    b: &PublicStats,
    privacy: &PrivacySpec,
    theta: f64,
) -> Result<bool> {
    Ok((xa - xb).abs() < bernstein_threshold(t, a, b, privacy, theta)?)
}

/// Confidence radius `√( 2(σ_DP² + σ²)/t · (1 + 1/t) · ln(4rM√(t+1)/δ) )`.
pub fn optimistic_radius(sigma_sq: f64, privacy: &PrivacySpec, t: u64, delta: f64, r: usize, m: usize) -> f64 {
    let tf = t as f64;
    let log_term = (4.0 * r as f64 * m as f64 * (tf + 1.0).sqrt() / delta).ln();
    (2.0 * (privacy.sigma_dp_sq + sigma_sq) / tf * (1.0 + 1.0 / tf) * log_term).sqrt()
}

/// Accept `b` when `|x̃_a − x̃_b| − β̃_δ(a; t) − β̃_δ(b; t) ≤ 0` (non-strict).
#[allow(clippy::too_many_arguments)]
pub fn optimistic_decide(
    xa: f64,
    xb: f64,
    t: u64,
    a: &PublicStats,
    b: &PublicStats,
    privacy: &PrivacySpec,
    delta: f64,
    r: usize,
    m: usize,
) -> Result<bool> {
    check_delta(delta)?;
    if t < 1 {
        return Err(Error::invalid("round index must be at least 1"));
    }
    let ra = optimistic_radius(a.sigma_sq(), privacy, t, delta, r, m);
    let rb = optimistic_radius(b.sigma_sq(), privacy, t, delta, r, m);
    Ok(optimistic_accepts((xa - xb).abs(), ra, rb))
}

#[inline]
pub(crate) fn optimistic_accepts(distance: f64, radius_a: f64, radius_b: f64) -> bool {
    distance - (radius_a + radius_b) <= 0.0
}
