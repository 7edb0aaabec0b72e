//! Identities, transactions, and canonical hashing.
//!
//! Transactions carry a two-bit home-chain annotation (`00` mainchain,
//! `11` sidechain) and a fixed nominal wire size per kind. Block packing
//! and every throughput figure work off these nominal sizes, never off an
//! actual serialization, so byte-budget arithmetic is reproducible.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// 32-byte canonical digest.
pub type Hash32 = [u8; 32];

/// Stable node identity within a run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct NodeId(pub u32);

/// Node behavior class; fixed at epoch boundaries only (slowly-adaptive
/// adversary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behavior {
    Honest,
    Lazy,
    Malicious,
}

pub type ContractId = u64;

/// Which ledger a transaction belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HomeChain {
    Main,
    Side,
}

/// The market transaction kinds plus the cross-chain sync kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TxKind {
    /// Service agreement proposed by a client (creates the escrow).
    ContractPropose,
    /// Standing service offer by a server.
    Offer,
    /// Server-side commitment matching a propose.
    AgreementCommit,
    /// Proof of retrievability, one per active contract per mc-round.
    ServiceProof,
    /// Storage payment dispensed from a contract escrow.
    ServicePayment,
    /// Service dispute carrying a proof and an outcome.
    Dispute,
    /// Plain currency transfer.
    Transfer,
    /// Summary state changes of one epoch, bound for the mainchain.
    Sync,
    /// Summary state changes of several epochs (rollback / missed-sync
    /// recovery).
    MassSync,
}

/// Home-chain annotation bits: `0b11` for service-market kinds, `0b00`
/// for everything else.
pub const ANNOTATION_SIDE: u8 = 0b11;
pub const ANNOTATION_MAIN: u8 = 0b00;

impl TxKind {
    /// The static classification of each kind.
    pub fn annotation(self) -> u8 {
        match self {
            TxKind::ContractPropose
            | TxKind::Offer
            | TxKind::AgreementCommit
            | TxKind::ServiceProof
            | TxKind::ServicePayment
            | TxKind::Dispute => ANNOTATION_SIDE,
            TxKind::Transfer | TxKind::Sync | TxKind::MassSync => ANNOTATION_MAIN,
        }
    }

    pub fn is_sync(self) -> bool {
        matches!(self, TxKind::Sync | TxKind::MassSync)
    }

    /// Stable numeric tag used in canonical encodings.
    pub fn tag(self) -> u8 {
        match self {
            TxKind::ContractPropose => 0,
            TxKind::Offer => 1,
            TxKind::AgreementCommit => 2,
            TxKind::ServiceProof => 3,
            TxKind::ServicePayment => 4,
            TxKind::Dispute => 5,
            TxKind::Transfer => 6,
            TxKind::Sync => 7,
            TxKind::MassSync => 8,
        }
    }
}

/// Nominal wire size in bytes for a transaction kind. Sync-family
/// transactions scale with the number of active-contract entries they
/// carry: a 64-byte header plus 8 bytes per entry.
///
/// Offer and Dispute never appear in the reference workload; their sizes
/// are stand-ins (offer mirrors a propose, a dispute carries a proof plus
/// a 64-byte outcome record).
pub fn nominal_size_of(kind: TxKind, active_contracts: usize) -> u64 {
    match kind {
        TxKind::ContractPropose => 645,
        TxKind::Offer => 645,
        TxKind::AgreementCommit => 79,
        TxKind::ServiceProof => 515,
        TxKind::ServicePayment => 406,
        TxKind::Dispute => 579,
        TxKind::Transfer => 398,
        TxKind::Sync | TxKind::MassSync => 64 + 8 * active_contracts as u64,
    }
}

/// Outcome of a dispute record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisputeOutcome {
    Valid,
    Invalid,
}

/// Folded dispute entry: the referenced proof and the adjudicated outcome.
/// Multiple disputes on one contract keep the last write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisputeRecord {
    pub proof_ref: u64,
    pub outcome: DisputeOutcome,
}

/// Folded agreement entry: who serves whom under which terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementRecord {
    pub server: NodeId,
    pub client: NodeId,
    pub fee_per_round: u64,
    pub duration_rounds: u32,
}

/// Kind-specific transaction body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxPayload {
    None,
    Agreement(AgreementRecord),
    Dispute(DisputeRecord),
    Sync(Box<SyncPayload>),
}

/// State changes carried by a (mass-)sync transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncPayload {
    /// Epochs covered, ascending.
    pub epochs: Vec<u64>,
    /// Hashes of the source summary-blocks, aligned with `epochs`.
    pub summary_refs: Vec<Hash32>,
    /// Merged summary state of the covered epochs.
    pub state: crate::block::SummaryState,
    /// Set when the issuing committee took over from a failed one; wins
    /// conflicts under the race guard.
    pub takeover_attested: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    /// Run-unique identifier.
    pub id: u64,
    pub kind: TxKind,
    /// Two-bit home-chain tag; always `kind.annotation()`.
    pub annotation: u8,
    pub nominal_size: u64,
    pub contract: Option<ContractId>,
    /// Currency amount for payment-family kinds.
    pub amount: u64,
    pub created_at_round: u64,
    pub payload: TxPayload,
    /// Set when the transaction was returned to a queue by a rollback.
    pub rolled_back: bool,
}

impl Transaction {
    /// Build a non-sync transaction; the annotation and nominal size are
    /// derived from the kind, which keeps the classification invariant
    /// true by construction.
    pub fn new(
        id: u64,
        kind: TxKind,
        contract: Option<ContractId>,
        amount: u64,
        round: u64,
    ) -> Self {
        debug_assert!(!kind.is_sync(), "sync transactions carry a payload");
        Transaction {
            id,
            kind,
            annotation: kind.annotation(),
            nominal_size: nominal_size_of(kind, 0),
            contract,
            amount,
            created_at_round: round,
            payload: TxPayload::None,
            rolled_back: false,
        }
    }

    /// Build a (mass-)sync transaction sized by its active-contract
    /// entries.
    pub fn new_sync(id: u64, payload: SyncPayload, round: u64) -> Self {
        let kind = if payload.epochs.len() > 1 {
            TxKind::MassSync
        } else {
            TxKind::Sync
        };
        let entries = payload.state.proof_counts.len();
        Transaction {
            id,
            kind,
            annotation: kind.annotation(),
            nominal_size: nominal_size_of(kind, entries),
            contract: None,
            amount: 0,
            created_at_round: round,
            payload: TxPayload::Sync(Box::new(payload)),
            rolled_back: false,
        }
    }

    pub fn sync_payload(&self) -> Option<&SyncPayload> {
        match &self.payload {
            TxPayload::Sync(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("malformed home-chain annotation {0:#04b}")]
    MalformedAnnotation(u8),
}

/// Route a transaction to its home chain by annotation.
pub fn classify(tx: &Transaction) -> Result<HomeChain, DomainError> {
    match tx.annotation {
        ANNOTATION_SIDE => Ok(HomeChain::Side),
        ANNOTATION_MAIN => Ok(HomeChain::Main),
        other => Err(DomainError::MalformedAnnotation(other)),
    }
}

/// Canonical byte encoder: length-prefixed field concatenation in
/// declaration order; fixed-width integers little-endian.
#[derive(Default)]
pub struct CanonicalEncoder {
    buf: Vec<u8>,
}

impl CanonicalEncoder {
    pub fn new(domain: &str) -> Self {
        let mut enc = CanonicalEncoder { buf: Vec::new() };
        enc.put_bytes(domain.as_bytes());
        enc
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_bytes(&mut self, v: &[u8]) {
        self.put_u64(v.len() as u64);
        self.buf.extend_from_slice(v);
    }

    pub fn put_map(&mut self, map: &BTreeMap<u64, u64>) {
        self.put_u64(map.len() as u64);
        for (k, v) in map {
            self.put_u64(*k);
            self.put_u64(*v);
        }
    }

    pub fn finish(self) -> Hash32 {
        let digest = Sha256::digest(&self.buf);
        let mut out = [0u8; 32];
        out.copy_from_slice(&digest);
        out
    }
}

/// Hash a transaction's identifying fields.
pub fn tx_hash(tx: &Transaction) -> Hash32 {
    let mut enc = CanonicalEncoder::new("tx-v1");
    enc.put_u64(tx.id);
    enc.put_u8(tx.kind.tag());
    enc.put_u8(tx.annotation);
    enc.put_u64(tx.nominal_size);
    enc.put_u64(tx.contract.unwrap_or(u64::MAX));
    enc.put_u64(tx.amount);
    enc.put_u64(tx.created_at_round);
    enc.finish()
}
