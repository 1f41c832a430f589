//! Closed-form benchmark curves.
//!
//! All three curves decay like `c/t`; the functions named `*_constant`
//! return `c`, the others the per-round average MSE.

use crate::privacy::PrivacySpec;
use crate::topology::{corollary_rhs, ClassStructure};

fn mean(values: impl Iterator<Item = f64>, m: usize) -> f64 {
    values.sum::<f64>() / m as f64
}

/// `(1/M) Σ_a σ_a²`: every agent keeps its own sample mean.
pub fn local_constant(sigma_sq_of: &[f64]) -> f64 {
    mean(sigma_sq_of.iter().copied(), sigma_sq_of.len())
}

/// `(1/(Mt)) Σ_a σ_a²`.
pub fn local_mse(sigma_sq_of: &[f64], t: u64) -> f64 {
    local_constant(sigma_sq_of) / t as f64
}

/// `(1/M) Σ_a σ_a²/n_a`: every agent pools all data of its component.
pub fn ideal_constant(structure: &ClassStructure, sigma_sq_of: &[f64]) -> f64 {
    let m = structure.num_agents();
    mean((0..m).map(|a| sigma_sq_of[a] / structure.component_size(a) as f64), m)
}

/// `(1/(Mt)) Σ_a σ_a²/n_a`, a lower bound for any estimator.
pub fn ideal_mse(structure: &ClassStructure, sigma_sq_of: &[f64], t: u64) -> f64 {
    ideal_constant(structure, sigma_sq_of) / t as f64
}

/// Leading `1/t` coefficient of the collaborative MSE under the oracle rule with `α_t = t/(t+1)`:
///
/// ```text
/// (1/M) ( Σ_{n_a ≤ 2} σ_a²  +  Σ_{n_a ≥ 3} 2(σ_a² + σ_DP²)/n_a )
/// ```
///
/// The `o(1/t)` remainder is not modeled.
pub fn theorem1_constant(structure: &ClassStructure, sigma_sq_of: &[f64], privacy: &PrivacySpec) -> f64 {
    let m = structure.num_agents();
    mean(
        (0..m).map(|a| {
            let n = structure.component_size(a);
            if n <= 2 {
                sigma_sq_of[a]
            } else {
                2.0 * (sigma_sq_of[a] + privacy.sigma_dp_sq) / n as f64
            }
        }),
        m,
    )
}

/// Whether `σ_DP²` is strictly below [`corollary_rhs`], i.e. collaboration
/// eventually beats the local estimate.
pub fn corollary_holds(structure: &ClassStructure, sigma_sq_of: &[f64], privacy: &PrivacySpec) -> bool {
    privacy.sigma_dp_sq < corollary_rhs(structure, sigma_sq_of)
}
