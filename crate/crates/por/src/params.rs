//! Scheme parameters and the bandwidth/storage trade-off calculator.

use thiserror::Error;

/// Width of one file sector in bits. Sectors must embed injectively into the
/// scalar field; the field modulus has 255 bits with a floor log of 254, so
/// sectors carry one bit less than that floor.
pub const SECTOR_WIDTH_BITS: usize = 253;

/// Default number of blocks challenged per proof.
pub const DEFAULT_QUERY_SIZE: u64 = 20;

/// Errors raised by parameter validation and verification.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PorError {
    #[error("sectors per block must be positive")]
    ZeroSectors,
    #[error("file is empty")]
    EmptyFile,
    #[error("challenge is empty")]
    EmptyChallenge,
    #[error("challenged block {0} outside 1..={1}")]
    UnknownBlock(u64, u64),
    #[error("file tag signature is invalid")]
    TagSignature,
    #[error("aggregate authenticator does not match the claimed sectors")]
    ProofMismatch,
    #[error("malformed encoding: {0}")]
    Encoding(&'static str),
}

/// Static parameters shared by prover and verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PorParams {
    /// Sectors folded into each block (`s`). Larger values trade bigger
    /// proofs for less authenticator storage.
    pub sectors_per_block: usize,
    /// Number of blocks challenged per proof.
    pub query_size: u64,
}

impl PorParams {
    pub fn new(sectors_per_block: usize, query_size: u64) -> Result<Self, PorError> {
        if sectors_per_block == 0 {
            return Err(PorError::ZeroSectors);
        }
        Ok(Self {
            sectors_per_block,
            query_size,
        })
    }

    /// Number of blocks an input of `file_bytes` bytes splits into:
    /// `ceil(bits / (sectors_per_block * sector_width))`.
    pub fn block_count(&self, file_bytes: u64) -> u64 {
        let bits = file_bytes * 8;
        let per_block = (self.sectors_per_block * SECTOR_WIDTH_BITS) as u64;
        bits.div_ceil(per_block).max(1)
    }
}

impl Default for PorParams {
    fn default() -> Self {
        Self {
            sectors_per_block: 2,
            query_size: DEFAULT_QUERY_SIZE,
        }
    }
}

/// Byte sizes of field and group elements for a curve class. The live
/// implementation runs on one fixed curve; this struct lets the trade-off
/// calculator describe deployments on smaller curves, like the 64-byte-point
/// class the nominal transaction sizes assume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveSizes {
    pub scalar_bytes: u64,
    pub point_bytes: u64,
}

impl CurveSizes {
    /// 256-bit-class curve with 64-byte serialized points.
    pub const NOMINAL: CurveSizes = CurveSizes {
        scalar_bytes: 32,
        point_bytes: 64,
    };

    /// The curve this crate actually runs on (compressed G1 points).
    pub const NATIVE: CurveSizes = CurveSizes {
        scalar_bytes: 32,
        point_bytes: 48,
    };
}

/// Server storage overhead and proof bandwidth for a given file size and
/// sectors-per-block choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tradeoff {
    pub file_bytes: u64,
    pub sectors_per_block: u64,
    /// Extra bytes the server stores for authenticators: `ceil(b / s)`.
    pub storage_overhead_bytes: u64,
    /// Serialized proof size: `(1 + s) * scalar + point`.
    pub proof_bytes: u64,
}

/// Evaluate the storage/bandwidth trade-off for an `s`-sector layout.
pub fn tradeoff(file_bytes: u64, sectors_per_block: u64, curve: CurveSizes) -> Tradeoff {
    assert!(sectors_per_block > 0, "sectors per block must be positive");
    Tradeoff {
        file_bytes,
        sectors_per_block,
        storage_overhead_bytes: file_bytes.div_ceil(sectors_per_block),
        proof_bytes: (1 + sectors_per_block) * curve.scalar_bytes + curve.point_bytes,
    }
}
