//! Failure analysis for chained backup committees.
//!
//! Models a population of nodes from which a primary committee and a chain
//! of disjoint backup committees are drawn without replacement, and answers
//! two questions exactly:
//!
//! * how likely is it that the primary and every backup fail in the same
//!   epoch ([`pr_af_hypergeometric`], [`pr_af_generating_function`], plus an
//!   exhaustive oracle and a Monte Carlo estimator to keep both honest), and
//! * how large must a committee be so that the chance of seating a stalling
//!   fraction of misbehaving members stays below a target
//!   ([`committee_size_bound`]).
//!
//! All exact routes use big-rational arithmetic; floats only appear in
//! convenience views and the Chernoff-style bounds.

mod chernoff;
mod enumerate;
mod exact;
mod model;
mod montecarlo;

pub use chernoff::{committee_size_bound, liveness_violation_bound};
pub use enumerate::pr_af_enumerated;
pub use exact::{
    binomial, coefficient_by_differentiation, failure_split_polynomial, polynomial_derivative,
    polynomial_power, pr_af_float, pr_af_generating_function, pr_af_hypergeometric,
    rational_to_f64,
};
pub use model::{FailureModel, ModelError};
pub use montecarlo::{monte_carlo_af, MonteCarloEstimate};
