//! Correlated Bayesian t-test over per-fold differences between two methods.
//!
//! The posterior of the mean difference is Student-t with `n − 1` degrees of
//! freedom, centred on the sample mean, with scale `√((1/n + ρ/(1−ρ))·s²)`.
//! The correlation `ρ` accounts for folds sharing most of their training data.

use crate::error::{bail, Result};
use crate::math::student_t_cdf;

pub const DEFAULT_ROPE: f64 = 0.01;

/// Posterior mass left of, inside, and right of the region of practical equivalence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub p_left: f64,
    pub p_rope: f64,
    pub p_right: f64,
}

/// `differences[i]` is method A minus method B on fold `i`; `p_right` is the
/// probability that A is practically better.
pub fn correlated_bayesian_t_test(
    differences: &[f64],
    rho: f64,
    rope: f64,
) -> Result<PosteriorSummary> {
    let n = differences.len();
    if n < 2 {
        bail!(
            Contract,
            "the correlated t-test needs at least 2 differences, got {}",
            n
        );
    }
    if !(0.0..1.0).contains(&rho) {
        bail!(Contract, "correlation must lie in [0, 1), got {}", rho);
    }
    if !(rope >= 0.0) || differences.iter().any(|d| !d.is_finite()) {
        bail!(Contract, "rope must be non-negative and differences finite");
    }
    let nf = n as f64;
    let mean = differences.iter().sum::<f64>() / nf;
    let var = differences
        .iter()
        .map(|d| (d - mean) * (d - mean))
        .sum::<f64>()
        / (nf - 1.0);
    let scale = libm::sqrt((1.0 / nf + rho / (1.0 - rho)) * var);
    if !(scale > 0.0) {
        let (p_left, p_rope, p_right) = if mean < -rope {
            (1.0, 0.0, 0.0)
        } else if mean > rope {
            (0.0, 0.0, 1.0)
        } else {
            (0.0, 1.0, 0.0)
        };
        return Ok(PosteriorSummary {
            p_left,
            p_rope,
            p_right,
        });
    }
    let dof = nf - 1.0;
    let p_left = student_t_cdf((-rope - mean) / scale, dof);
    let p_right = 1.0 - student_t_cdf((rope - mean) / scale, dof);
    let p_rope = (1.0 - p_left - p_right).max(0.0);
    Ok(PosteriorSummary {
        p_left,
        p_rope,
        p_right: 1.0 - p_left - p_rope,
    })
}
