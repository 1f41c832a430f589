//! Laplace mechanism calibration and per-sample noise.

use crate::bernstein::BernsteinParams;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Calibrated Laplace mechanism for data supported on an interval of half-width `L`.
///
/// `σ_DP² = 8L²/ε²` and the Laplace scale is `σ_DP/√2`, which is also the
/// noise's Bernstein parameter. `ε = ∞` gives the noiseless mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacySpec {
    pub epsilon: f64,
    pub half_range: f64,
    pub sigma_dp_sq: f64,
    pub sigma_dp: f64,
    pub beta_dp: f64,
}

impl PrivacySpec {
    pub fn calibrate(epsilon: f64, half_range: f64) -> Result<Self> {
        if !(epsilon > 0.0) || epsilon.is_nan() {
            return Err(Error::invalid(format!("epsilon must be > 0 or inf, got {epsilon}")));
        }
        if !(half_range > 0.0) || !half_range.is_finite() {
            return Err(Error::invalid(format!("half-range must be > 0, got {half_range}")));
        }
        let sigma_dp_sq = if epsilon.is_infinite() {
            0.0
        } else {
            8.0 * half_range * half_range / (epsilon * epsilon)
        };
        let sigma_dp = sigma_dp_sq.sqrt();
        Ok(Self {
            epsilon,
            half_range,
            sigma_dp_sq,
            sigma_dp,
            beta_dp: sigma_dp / std::f64::consts::SQRT_2,
        })
    }

    /// No noise at all.
    pub fn none(half_range: f64) -> Result<Self> {
        Self::calibrate(f64::INFINITY, half_range)
    }

    pub fn is_private(&self) -> bool {
        self.epsilon.is_finite()
    }

    /// Laplace scale `b = σ_DP/√2`.
    pub fn scale(&self) -> f64 {
        self.beta_dp
    }

    /// Bernstein parameters of the noise, or `None` for the noiseless mechanism.
    pub fn noise_params(&self) -> Option<BernsteinParams> {
        if self.is_private() {
            BernsteinParams::laplace(0.0, self.scale()).ok()
        } else {
            None
        }
    }

    /// One Laplace draw, by inverse CDF on a single open-interval uniform.
    ///
    /// The noiseless mechanism still consumes its uniform so that stream
    /// positions line up across privacy levels.
    pub fn sample_noise(&self, stream: &mut RandomStream) -> f64 {
        let u = stream.uniform_open();
        if !self.is_private() {
            return 0.0;
        }
        laplace_inverse_cdf(u, self.scale())
    }
}

/// Quantile function of Laplace(0, b) at `u ∈ (0, 1)`.
pub fn laplace_inverse_cdf(u: f64, scale: f64) -> f64 {
    let centered = u - 0.5;
    -scale * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}
