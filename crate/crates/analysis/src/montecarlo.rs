//! Monte Carlo estimation of simultaneous committee failure.
//!
//! Each trial deals `(backups + 1) * committee_size` seats without
//! replacement from the population and checks whether every committee got at
//! least the liveness threshold of misbehaving members. Per-trial seeds are
//! derived from the master seed, so the estimate is reproducible regardless
//! of batching or trial order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::model::FailureModel;

/// Result of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub failures: u64,
}

/// SplitMix64 finalizer, used to stretch the master seed into independent
/// per-trial seeds.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Estimate the probability that all committees fail at once.
pub fn monte_carlo_af(model: &FailureModel, trials: u64, seed: u64) -> MonteCarloEstimate {
    model.validate().expect("validated model");
    assert!(trials > 0, "at least one trial");

    let population = model.population as usize;
    let seats = model.total_seats() as usize;
    let cs = model.committee_size as usize;
    let theta_l = model.liveness_threshold;
    let misbehaving = model.misbehaving as usize;

    // Node ids 0..misbehaving are the misbehaving ones; dealing from a
    // shuffled pool makes committee membership uniform without replacement.
    let mut pool: Vec<u32> = (0..population as u32).collect();
    let mut failures = 0u64;

    for trial in 0..trials {
        let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial)));
        // Partial Fisher-Yates: only the first `seats` positions are needed.
        for j in 0..seats {
            let k = rng.random_range(j..population);
            pool.swap(j, k);
        }
        let mut all_failed = true;
        for committee in pool[..seats].chunks(cs) {
            let bad = committee
                .iter()
                .filter(|&&node| (node as usize) < misbehaving)
                .count() as u64;
            if bad < theta_l {
                all_failed = false;
                break;
            }
        }
        if all_failed {
            failures += 1;
        }
    }

    let mean = failures as f64 / trials as f64;
    let std_error = (mean * (1.0 - mean) / trials as f64).sqrt();
    MonteCarloEstimate {
        mean,
        std_error,
        trials,
        failures,
    }
}
