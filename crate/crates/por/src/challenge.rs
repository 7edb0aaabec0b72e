//! Deterministic challenge derivation.
//!
//! Challenges are drawn from a public 32-byte seed, so any party can
//! recompute the query; in the chain deployment the seed is the hash of the
//! previous block, which makes the audit non-interactive.

use std::collections::BTreeSet;

use bls12_381::Scalar;
use ff::Field;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

/// A challenge: distinct 1-based block indices, each with a nonzero
/// aggregation coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeSet {
    pub entries: Vec<(u64, Scalar)>,
}

impl ChallengeSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Derive the challenge for `block_count` blocks. Queries larger than the
/// file are capped at one challenge per block.
pub fn derive_challenge(seed: &[u8; 32], block_count: u64, query_size: u64) -> ChallengeSet {
    let mut rng = ChaCha20Rng::from_seed(*seed);
    let quota = query_size.min(block_count);
    // Floyd's sampling: uniform distinct indices without materializing the
    // index range, which may span a very large file.
    let mut picked = BTreeSet::new();
    for j in block_count - quota..block_count {
        let t = uniform_below(&mut rng, j + 1);
        if !picked.insert(t + 1) {
            picked.insert(j + 1);
        }
    }
    let entries = picked
        .into_iter()
        .map(|index| {
            let mut coeff = Scalar::random(&mut rng);
            while bool::from(coeff.is_zero()) {
                coeff = Scalar::random(&mut rng);
            }
            (index, coeff)
        })
        .collect();
    ChallengeSet { entries }
}

/// Seed for the round `round` audit of a chain whose previous block hash is
/// `prev_block_hash`.
pub fn challenge_seed(prev_block_hash: &[u8; 32], round: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"por-challenge-seed-v1");
    hasher.update(prev_block_hash);
    hasher.update(round.to_le_bytes());
    hasher.finalize().into()
}

/// Unbiased uniform draw in `[0, bound)` by rejection.
fn uniform_below(rng: &mut ChaCha20Rng, bound: u64) -> u64 {
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let raw = rng.next_u64();
        if raw < zone {
            return raw % bound;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let seed = [7u8; 32];
        assert_eq!(derive_challenge(&seed, 100, 20), derive_challenge(&seed, 100, 20));
        assert_ne!(
            derive_challenge(&seed, 100, 20),
            derive_challenge(&[8u8; 32], 100, 20)
        );
    }

    #[test]
    fn indices_distinct_in_range() {
        let c = derive_challenge(&[3u8; 32], 50, 20);
        assert_eq!(c.entries.len(), 20);
        let mut seen = BTreeSet::new();
        for (i, coeff) in &c.entries {
            assert!((1..=50).contains(i));
            assert!(seen.insert(*i));
            assert!(!bool::from(coeff.is_zero()));
        }
    }

    #[test]
    fn query_capped_at_block_count() {
        let c = derive_challenge(&[3u8; 32], 5, 20);
        let indices: Vec<u64> = c.entries.iter().map(|(i, _)| *i).collect();
        assert_eq!(indices, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn seed_depends_on_round_and_hash() {
        let h = [9u8; 32];
        assert_ne!(challenge_seed(&h, 1), challenge_seed(&h, 2));
        assert_ne!(challenge_seed(&h, 1), challenge_seed(&[1u8; 32], 1));
    }
}
