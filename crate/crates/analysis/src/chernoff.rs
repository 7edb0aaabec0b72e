//! Chernoff-style committee sizing.
//!
//! For a misbehaving rate `p` and a liveness-violation fraction `gamma`
//! (misbehaving committee share that stalls agreement), the probability that
//! a uniformly sampled committee of size `cs` seats at least `gamma * cs`
//! misbehaving members is bounded by
//!
//! * `exp(-(gamma - p)^2 * cs / (3 p))` when `gamma / p < 2`, and
//! * `exp(-(gamma - p) * cs / 3)` otherwise (the boundary uses this branch).
//!
//! Inverting the bound for a target failure probability `target` gives the
//! minimum committee size that keeps the violation probability at or below
//! the target.

use crate::model::ModelError;

/// Upper bound on the probability that a committee of `cs` members drawn
/// from a population with misbehaving rate `p` seats at least `gamma * cs`
/// misbehaving members.
pub fn liveness_violation_bound(p: f64, gamma: f64, cs: u64) -> Result<f64, ModelError> {
    check_rates(p, gamma)?;
    let cs = cs as f64;
    let exponent = if gamma / p < 2.0 {
        -(gamma - p).powi(2) * cs / (3.0 * p)
    } else {
        -(gamma - p) * cs / 3.0
    };
    Ok(exponent.exp())
}

/// Minimum committee size whose violation bound is at most `target`.
pub fn committee_size_bound(p: f64, gamma: f64, target: f64) -> Result<u64, ModelError> {
    check_rates(p, gamma)?;
    if !(target > 0.0 && target < 1.0) {
        return Err(ModelError::TargetOutOfRange(target));
    }
    let needed = if gamma / p < 2.0 {
        3.0 * p * (1.0 / target).ln() / (gamma - p).powi(2)
    } else {
        3.0 * (1.0 / target).ln() / (gamma - p)
    };
    Ok(needed.ceil() as u64)
}

fn check_rates(p: f64, gamma: f64) -> Result<(), ModelError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ModelError::RateOutOfRange(p));
    }
    if !(gamma > p && gamma <= 1.0) {
        return Err(ModelError::ThresholdBelowRate { gamma, p });
    }
    Ok(())
}
