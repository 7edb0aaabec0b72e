//! Exact recovery-failure probabilities in big-rational arithmetic.
//!
//! Two independent routes compute the probability that the primary committee
//! and all backup committees fail in the same epoch:
//!
//! * [`pr_af_hypergeometric`]: a nested sum over per-committee misbehaving
//!   counts, with the population shrinking as each committee is seated.
//! * [`pr_af_generating_function`]: a single hypergeometric sum over the
//!   total misbehaving count across all seats, split across committees by a
//!   coefficient extracted from a polynomial power.
//!
//! Both return exact `BigRational` values and must agree; the equivalence is
//! exercised over a model grid in the integration tests.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::model::FailureModel;

/// Exact binomial coefficient. Out-of-range arguments yield zero, which is
/// the convention the probability sums rely on.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

/// Probability that every committee seats at least `liveness_threshold`
/// misbehaving members, computed committee by committee. Committee `i` draws
/// from the `population - i * committee_size` nodes left over after earlier
/// committees were seated, of which `misbehaving - (already seated
/// misbehaving)` still misbehave.
pub fn pr_af_hypergeometric(model: &FailureModel) -> BigRational {
    model.validate().expect("validated model");
    let cs = model.committee_size;
    let committees = model.committees();

    fn recurse(
        committee: u64,
        committees: u64,
        cs: u64,
        theta_l: u64,
        mis_left: u64,
        pop_left: u64,
    ) -> BigRational {
        if committee == committees {
            return BigRational::one();
        }
        let draw_total = binomial(pop_left, cs);
        let mut acc = BigRational::zero();
        let hi = cs.min(mis_left);
        if theta_l > hi {
            return BigRational::zero();
        }
        for x in theta_l..=hi {
            let ways = binomial(mis_left, x) * binomial(pop_left - mis_left, cs - x);
            if ways.is_zero() {
                continue;
            }
            let pmf = ratio(ways, draw_total.clone());
            let tail = recurse(
                committee + 1,
                committees,
                cs,
                theta_l,
                mis_left - x,
                pop_left - cs,
            );
            acc += pmf * tail;
        }
        acc
    }

    recurse(
        0,
        committees,
        cs,
        model.liveness_threshold,
        model.misbehaving,
        model.population,
    )
}

/// Coefficients of `(sum_{i=theta_l}^{cs} C(cs, i) y^i)^committees`,
/// indexed by the power of `y`.
pub fn failure_split_polynomial(model: &FailureModel) -> Vec<BigInt> {
    let cs = model.committee_size as usize;
    let theta_l = model.liveness_threshold as usize;
    let mut base = vec![BigInt::zero(); cs + 1];
    for i in theta_l..=cs {
        base[i] = binomial(cs as u64, i as u64);
    }
    polynomial_power(&base, model.committees() as usize)
}

/// Raise a coefficient vector to an integer power by repeated convolution.
pub fn polynomial_power(base: &[BigInt], power: usize) -> Vec<BigInt> {
    let mut acc = vec![BigInt::one()];
    for _ in 0..power {
        acc = polynomial_multiply(&acc, base);
    }
    acc
}

fn polynomial_multiply(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            if cb.is_zero() {
                continue;
            }
            out[i + j] += ca * cb;
        }
    }
    out
}

/// Formal derivative of a coefficient vector.
pub fn polynomial_derivative(coeffs: &[BigInt]) -> Vec<BigInt> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigInt::from(i))
        .collect()
}

/// Extract `[y^power]` by differentiating `power` times and evaluating at
/// zero. Slower than indexing, which is the point: it gives an independent
/// reading of the same coefficient for the identity tests.
pub fn coefficient_by_differentiation(coeffs: &[BigInt], power: usize) -> BigRational {
    let mut current = coeffs.to_vec();
    for _ in 0..power {
        current = polynomial_derivative(&current);
    }
    let at_zero = current.first().cloned().unwrap_or_else(BigInt::zero);
    let mut factorial = BigInt::one();
    for i in 1..=power {
        factorial *= BigInt::from(i);
    }
    ratio(at_zero, factorial)
}

/// Probability of simultaneous committee failure via the total misbehaving
/// count. For each total `x`, the hypergeometric weight of drawing exactly
/// `x` misbehaving nodes into the combined seats is multiplied by the share
/// of seat arrangements that put at least `liveness_threshold` of them into
/// every committee.
pub fn pr_af_generating_function(model: &FailureModel) -> BigRational {
    model.validate().expect("validated model");
    let total_seats = model.total_seats();
    let committees = model.committees();
    let psi = failure_split_polynomial(model);

    let lo = model.liveness_threshold * committees;
    let hi = total_seats.min(model.misbehaving);
    if lo > hi {
        return BigRational::zero();
    }
    let mut acc = BigRational::zero();
    let draw_total = binomial(model.population, total_seats);
    for x in lo..=hi {
        let weight_num = binomial(model.misbehaving, x)
            * binomial(model.population - model.misbehaving, total_seats - x);
        if weight_num.is_zero() {
            continue;
        }
        let split_ways = psi.get(x as usize).cloned().unwrap_or_else(BigInt::zero);
        if split_ways.is_zero() {
            continue;
        }
        let weight = ratio(weight_num, draw_total.clone());
        let split = ratio(split_ways, binomial(total_seats, x));
        acc += weight * split;
    }
    acc
}

/// Convenience float view of the exact probability.
pub fn pr_af_float(model: &FailureModel) -> f64 {
    rational_to_f64(&pr_af_hypergeometric(model))
}

/// Float view of an exact rational.
pub fn rational_to_f64(value: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    value.to_f64().unwrap_or(f64::NAN)
}
