//! Bernstein-condition algebra, tail bounds and two-sample test thresholds.
//!
//! A random variable `X` with mean `μ` and variance `σ²` satisfies Bernstein's
//! condition with parameter `β > 0` when
//!
//! ```text
//! |E[(X − μ)^k]| ≤ ½ · k! · σ² · β^(k−2)    for k = 2, 3, …
//! ```
//!
//! which gives the sub-exponential tail `P(|X − μ| ≥ x) ≤ 2 exp(−x² / (2(σ² + βx)))`.
//! Everything here is a pure function of `f64` inputs.

use crate::error::{Error, Result};

/// Lower bound on `β/σ` implied by `E[(X − μ)⁴] ≥ σ⁴`.
pub const MIN_BETA_TO_SIGMA: f64 = 0.288_675_134_594_812_9; // 1 / (2√3)

/// Mean, variance and Bernstein parameter of a random variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinParams {
    pub mean: f64,
    pub variance: f64,
    pub beta: f64,
}

impl BernsteinParams {
    pub fn new(mean: f64, variance: f64, beta: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid(format!("mean must be finite, got {mean}")));
        }
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::invalid(format!("variance must be >= 0, got {variance}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("Bernstein parameter must be > 0, got {beta}")));
        }
        Ok(Self { mean, variance, beta })
    }

    /// Uniform distribution on `[mean − L, mean + L]`.
    pub fn uniform(mean: f64, half_range: f64) -> Result<Self> {
        let beta = uniform_beta(half_range)?;
        let p = Self::new(mean, half_range * half_range / 3.0, beta)?;
        debug_assert!(p.beta / p.sigma() >= MIN_BETA_TO_SIGMA);
        Ok(p)
    }

    /// Laplace distribution with the given scale `b`: variance `2b²`, Bernstein parameter `b`.
    pub fn laplace(mean: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::invalid(format!("Laplace scale must be > 0, got {scale}")));
        }
        let p = Self::new(mean, 2.0 * scale * scale, scale)?;
        debug_assert!(p.beta / p.sigma() >= MIN_BETA_TO_SIGMA);
        Ok(p)
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    /// The right-hand side `½ k! σ² β^(k−2)` of the k-th moment condition.
    pub fn moment_bound(&self, k: u32) -> f64 {
        moment_bound(k, self.variance, self.beta)
    }
}

/// `½ k! σ² β^(k−2)`, for `k ≥ 2`.
pub fn moment_bound(k: u32, variance: f64, beta: f64) -> f64 {
    assert!(k >= 2, "moment index must be at least 2");
    let factorial: f64 = (2..=k).map(f64::from).product();
    0.5 * factorial * variance * beta.powi(k as i32 - 2)
}

/// Bernstein parameter `L / (2√5)` of a uniform distribution with half-range `L`.
pub fn uniform_beta(half_range: f64) -> Result<f64> {
    if !(half_range > 0.0) || !half_range.is_finite() {
        return Err(Error::invalid(format!("half-range must be > 0, got {half_range}")));
    }
    Ok(half_range / (2.0 * 5f64.sqrt()))
}

/// Parameters of a signed sum `X₁ ± X₂ ± … ± Xₙ` of independent inputs.
///
/// Variances add. The Bernstein parameter is
/// `min(Σβᵢ, √n · max(σ₁, …, σₙ, β₁, …, βₙ))`. Signs affect only the mean,
/// so the caller passes each input with its mean already signed; the result's
/// mean is the plain sum.
///
/// The `√n` term makes this n-ary rule non-associative, so composing pairwise
/// generally differs from composing all inputs at once.
pub fn compose(params: &[BernsteinParams]) -> Result<BernsteinParams> {
    if params.is_empty() {
        return Err(Error::invalid("cannot compose an empty list of parameters"));
    }
    let n = params.len() as f64;
    let mean = params.iter().map(|p| p.mean).sum();
    let variance = params.iter().map(|p| p.variance).sum();
    let beta_sum: f64 = params.iter().map(|p| p.beta).sum();
    let largest = params
        .iter()
        .flat_map(|p| [p.sigma(), p.beta])
        .fold(0.0_f64, f64::max);
    BernsteinParams::new(mean, variance, beta_sum.min(n.sqrt() * largest))
}

/// Per-sample Bernstein parameter of a data sample plus independent DP noise.
///
/// ```text
/// β̃ = min( max(σ, β) + max(σ_DP, β_DP),  max(β + β_DP, √(σ² + σ_DP²)) )
/// ```
///
/// Zero noise parameters are allowed and model the no-privacy case.
pub fn data_plus_noise_beta(data_sigma: f64, data_beta: f64, dp_sigma: f64, dp_beta: f64) -> f64 {
    let additive = data_sigma.max(data_beta) + dp_sigma.max(dp_beta);
    let merged = (data_beta + dp_beta).max((data_sigma * data_sigma + dp_sigma * dp_sigma).sqrt());
    additive.min(merged)
}

/// Parameters of the mean of `t` i.i.d. copies of `base`: `(μ, σ²/t, β/√t)`.
pub fn scaled_sample_mean_params(base: BernsteinParams, t: u64) -> Result<BernsteinParams> {
    if t < 1 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let tf = t as f64;
    BernsteinParams::new(base.mean, base.variance / tf, base.beta / tf.sqrt())
}

/// `2 exp(−x² / (2(σ² + βx)))`. Not clamped to 1.
pub fn tail_bound(x: f64, p: &BernsteinParams) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("tail bound needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(2.0);
    }
    Ok(2.0 * (-x * x / (2.0 * (p.variance + p.beta * x))).exp())
}

/// Inputs to the two-sample Bernstein test on `Z = X − Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSpec {
    /// Combined variance `σ_X² + σ_Y²`.
    pub sigma_sq: f64,
    /// Combined Bernstein parameter.
    pub beta: f64,
    /// Significance level in `(0, 2]`.
    pub theta: f64,
    /// Mean gap `Δ` under the alternative, for type-II analysis.
    pub delta_gap: Option<f64>,
}

impl TestSpec {
    pub fn new(sigma_sq: f64, beta: f64, theta: f64) -> Result<Self> {
        if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
            return Err(Error::invalid(format!("sigma_sq must be > 0, got {sigma_sq}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("beta must be > 0, got {beta}")));
        }
        check_theta(theta)?;
        Ok(Self { sigma_sq, beta, theta, delta_gap: None })
    }

    pub fn with_gap(mut self, delta_gap: f64) -> Self {
        self.delta_gap = Some(delta_gap);
        self
    }

    /// Spec for `X − Y` built from the two sides' parameters via [`compose`].
    pub fn for_difference(x: &BernsteinParams, y: &BernsteinParams, theta: f64) -> Result<Self> {
        let z = compose(&[*x, BernsteinParams { mean: -y.mean, ..*y }])?;
        Self::new(z.variance, z.beta, theta)
    }

    fn log_term(&self) -> f64 {
        (2.0 / self.theta).ln()
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 2.0) {
        return Err(Error::invalid(format!("significance level must be in (0, 2], got {theta}")));
    }
    Ok(())
}

/// Smallest `z` with `tail_bound(z) ≤ θ`: the positive root of `z² = 2 ln(2/θ)(σ² + βz)`.
pub fn z_threshold_exact(spec: &TestSpec) -> Result<f64> {
    check_theta(spec.theta)?;
    let l = spec.log_term();
    let bl = spec.beta * l;
    Ok(bl + (bl * bl + 2.0 * spec.sigma_sq * l).sqrt())
}

/// The looser threshold `2β ln(2/θ) + σ √(2 ln(2/θ))`, never below the exact one.
pub fn z_threshold_simple(spec: &TestSpec) -> Result<f64> {
    check_theta(spec.theta)?;
    let l = spec.log_term();
    Ok(2.0 * spec.beta * l + (2.0 * spec.sigma_sq * l).sqrt())
}

/// Bound on the probability of accepting `H₀` at threshold `z_theta` when the true gap is `Δ`.
///
/// Returns `min(1, 2 exp(−(z − Δ)² / (2(σ² + β(Δ − z)))))`, and 1 when `Δ ≤ z`.
/// For thresholds shrinking like `1/√t` this behaves asymptotically like
/// `exp(−Δ√t / (2(β̃_a + β̃_b)))`; only the finite-`t` form is computed here.
pub fn type2_bound(z_theta: f64, spec: &TestSpec) -> Result<f64> {
    let gap = spec
        .delta_gap
        .ok_or_else(|| Error::invalid("type-II bound needs a mean gap"))?;
    if !(gap > 0.0) {
        return Err(Error::invalid(format!("mean gap must be > 0, got {gap}")));
    }
    if !(z_theta >= 0.0) {
        return Err(Error::invalid(format!("threshold must be >= 0, got {z_theta}")));
    }
    if gap <= z_theta {
        return Ok(1.0);
    }
    let margin = gap - z_theta;
    let raw = 2.0 * (-margin * margin / (2.0 * (spec.sigma_sq + spec.beta * margin))).exp();
    Ok(raw.min(1.0))
}
