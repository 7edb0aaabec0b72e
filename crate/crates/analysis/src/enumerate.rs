//! Exhaustive reference computation of simultaneous committee failure.
//!
//! Walks every way of seating the committees as labeled subsets of the
//! population and counts the outcomes where all committees fail. Exponential
//! in the seat count; intended as an independent oracle for tiny models,
//! not as a usable evaluator.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::exact::binomial;
use crate::model::FailureModel;

/// Exact failure probability by enumerating labeled committee assignments.
///
/// Panics if the model needs more than 64 population bits or more than a
/// handful of seats; callers are expected to keep `total_seats` small
/// (the tests stay at or below 12).
pub fn pr_af_enumerated(model: &FailureModel) -> BigRational {
    model.validate().expect("validated model");
    assert!(model.population <= 64, "enumeration oracle is for tiny models");
    assert!(
        model.total_seats() <= 16,
        "enumeration oracle is exponential in seats"
    );

    let population = model.population as usize;
    let cs = model.committee_size as usize;
    let committees = model.committees() as usize;
    let theta_l = model.liveness_threshold as usize;
    let misbehaving_mask: u64 = if model.misbehaving == 0 {
        0
    } else {
        (1u64 << model.misbehaving) - 1
    };

    // Count assignments where every committee has >= theta_l misbehaving
    // members, recursing over committees and enumerating each committee as a
    // subset of the still-unseated nodes.
    fn count(
        free: u64,
        remaining_committees: usize,
        population: usize,
        cs: usize,
        theta_l: usize,
        misbehaving_mask: u64,
    ) -> BigInt {
        if remaining_committees == 0 {
            return BigInt::one();
        }
        let mut total = BigInt::zero();
        let free_nodes: Vec<usize> = (0..population).filter(|i| free & (1 << i) != 0).collect();
        let n = free_nodes.len();
        if n < cs {
            return BigInt::zero();
        }
        // Enumerate cs-subsets of free_nodes via index combinations.
        let mut idx: Vec<usize> = (0..cs).collect();
        loop {
            let mut mask = 0u64;
            for &i in &idx {
                mask |= 1 << free_nodes[i];
            }
            if (mask & misbehaving_mask).count_ones() as usize >= theta_l {
                total += count(
                    free & !mask,
                    remaining_committees - 1,
                    population,
                    cs,
                    theta_l,
                    misbehaving_mask,
                );
            }
            // Advance the combination.
            let mut pos = cs;
            loop {
                if pos == 0 {
                    return total;
                }
                pos -= 1;
                if idx[pos] != pos + n - cs {
                    break;
                }
            }
            idx[pos] += 1;
            for later in pos + 1..cs {
                idx[later] = idx[later - 1] + 1;
            }
        }
    }

    let favorable = count(
        if population == 64 {
            u64::MAX
        } else {
            (1u64 << population) - 1
        },
        committees,
        population,
        cs,
        theta_l,
        misbehaving_mask,
    );

    let mut all = BigInt::one();
    for i in 0..committees as u64 {
        all *= binomial(model.population - i * model.committee_size, model.committee_size);
    }
    BigRational::new(favorable, all)
}
