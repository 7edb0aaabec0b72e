//! Compact proofs of retrievability over BLS12-381.
//!
//! A storage server holding a client's file answers randomized spot-check
//! challenges with a constant-size aggregate proof. The client (or any
//! third party holding the public key) verifies the proof with a single
//! pairing equation, without the file.
//!
//! Pipeline:
//!
//! 1. [`PorParams`] fixes the sectors-per-block count `s` and query size.
//! 2. [`preprocess`] chunks the file into 253-bit field sectors, builds one
//!    authenticator per block, and signs a public [`FileTag`].
//! 3. [`derive_challenge`] samples a deterministic challenge from a public
//!    seed (see [`challenge_seed`] for the chain-bound construction).
//! 4. [`prove`] aggregates the challenged blocks; [`verify`] checks the
//!    pairing equation against the tag.
//!
//! Storage/bandwidth tradeoff: with `s` sectors per block the server-side
//! overhead is `~1/s` of the file while the proof grows as `(1 + s)`
//! scalars plus one group point (see [`tradeoff`]).

mod challenge;
mod chunk;
mod params;
mod scheme;

pub use challenge::{challenge_seed, derive_challenge, ChallengeSet};
pub use chunk::{blocks, sector};
pub use params::{
    tradeoff, CurveSizes, PorError, PorParams, Tradeoff, DEFAULT_QUERY_SIZE, SECTOR_WIDTH_BITS,
};
pub use scheme::{
    decode_proof, encode_proof, keygen, preprocess, prove, verify, FileTag, PorProof,
    PorPublicKey, PorSecretKey, ProcessedFile,
};
