//! Blocks for both chains and the epoch summary state.
//!
//! A sidechain epoch produces meta-blocks carrying raw transactions and
//! one final summary-block carrying only the folded `SummaryState`. The
//! summary is what crosses to the mainchain inside a sync transaction,
//! which is why its nominal size is bookkept entry-wise rather than from
//! the raw transaction list.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::consensus::{AgreementCertificate, LeaderChangeRecord, TakeoverRecord};
use crate::types::{
    AgreementRecord, CanonicalEncoder, ContractId, DisputeOutcome, DisputeRecord, Hash32, NodeId,
    Transaction, TxKind, TxPayload,
};

/// Fixed per-block header overhead in bytes (parent ref, height, proposer,
/// certificate digest).
pub const BLOCK_HEADER_BYTES: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Mainchain block.
    Main,
    /// Sidechain meta-block (raw transactions).
    Meta,
    /// Sidechain summary-block (folded epoch state).
    Summary,
}

/// Folded state changes of one epoch (or a merge of several).
///
/// Fold rules per transaction:
/// * `ServiceProof`    → `proof_counts[contract] += 1`
/// * `ServicePayment`  → `payment_totals[contract] += amount`
/// * `Dispute`         → `disputes[contract] = record` (last write wins)
/// * `AgreementCommit` → `agreements[contract] = record`
/// * everything else   → ignored (not sidechain traffic)
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SummaryState {
    pub proof_counts: BTreeMap<ContractId, u64>,
    pub payment_totals: BTreeMap<ContractId, u64>,
    pub disputes: BTreeMap<ContractId, DisputeRecord>,
    pub agreements: BTreeMap<ContractId, AgreementRecord>,
    /// Leader-change certificates condensed to records, in slot order.
    pub leader_changes: Vec<LeaderChangeRecord>,
    /// Committee-takeover attestations, in occurrence order.
    pub takeovers: Vec<TakeoverRecord>,
}

impl SummaryState {
    /// Whether two states agree on the folded market variables —
    /// proofs, payments, disputes, and agreements. The governance audit
    /// trail (leader changes, takeovers) is deliberately excluded: a
    /// recovered run carries extra certificates yet must reach the same
    /// market state as a fault-free one.
    pub fn market_eq(&self, other: &Self) -> bool {
        self.proof_counts == other.proof_counts
            && self.payment_totals == other.payment_totals
            && self.disputes == other.disputes
            && self.agreements == other.agreements
    }

    /// Fold one transaction into the state. Non-market kinds are ignored.
    pub fn fold_tx(&mut self, tx: &Transaction) {
        match tx.kind {
            TxKind::ServiceProof => {
                if let Some(c) = tx.contract {
                    *self.proof_counts.entry(c).or_insert(0) += 1;
                }
            }
            TxKind::ServicePayment => {
                if let Some(c) = tx.contract {
                    *self.payment_totals.entry(c).or_insert(0) += tx.amount;
                }
            }
            TxKind::Dispute => {
                if let (Some(c), TxPayload::Dispute(rec)) = (tx.contract, &tx.payload) {
                    self.disputes.insert(c, *rec);
                }
            }
            TxKind::AgreementCommit => {
                if let (Some(c), TxPayload::Agreement(rec)) = (tx.contract, &tx.payload) {
                    self.agreements.insert(c, *rec);
                }
            }
            _ => {}
        }
    }

    /// Merge another epoch's folded state into this one (mass-sync
    /// construction). Counters add; keyed records take the later epoch's
    /// write; event lists concatenate.
    pub fn merge(&mut self, later: &SummaryState) {
        for (c, n) in &later.proof_counts {
            *self.proof_counts.entry(*c).or_insert(0) += n;
        }
        for (c, a) in &later.payment_totals {
            *self.payment_totals.entry(*c).or_insert(0) += a;
        }
        for (c, d) in &later.disputes {
            self.disputes.insert(*c, *d);
        }
        for (c, a) in &later.agreements {
            self.agreements.insert(*c, *a);
        }
        self.leader_changes.extend(later.leader_changes.iter().copied());
        self.takeovers.extend(later.takeovers.iter().copied());
    }

    pub fn is_empty(&self) -> bool {
        self.proof_counts.is_empty()
            && self.payment_totals.is_empty()
            && self.disputes.is_empty()
            && self.agreements.is_empty()
            && self.leader_changes.is_empty()
            && self.takeovers.is_empty()
    }

    /// Nominal byte size of the folded state: 64-byte frame, 8 per proof
    /// counter, 16 per payment total, 24 per agreement, 16 per dispute,
    /// 96 per embedded certificate record.
    pub fn nominal_size(&self) -> u64 {
        64 + 8 * self.proof_counts.len() as u64
            + 16 * self.payment_totals.len() as u64
            + 24 * self.agreements.len() as u64
            + 16 * self.disputes.len() as u64
            + 96 * (self.leader_changes.len() + self.takeovers.len()) as u64
    }

    /// Canonical digest of the folded state.
    pub fn canonical_bytes(&self) -> Hash32 {
        let mut enc = CanonicalEncoder::new("summary-v1");
        enc.put_map(&self.proof_counts);
        enc.put_map(&self.payment_totals);
        enc.put_u64(self.disputes.len() as u64);
        for (c, d) in &self.disputes {
            enc.put_u64(*c);
            enc.put_u64(d.proof_ref);
            enc.put_u8(match d.outcome {
                DisputeOutcome::Valid => 1,
                DisputeOutcome::Invalid => 0,
            });
        }
        enc.put_u64(self.agreements.len() as u64);
        for (c, a) in &self.agreements {
            enc.put_u64(*c);
            enc.put_u32(a.server.0);
            enc.put_u32(a.client.0);
            enc.put_u64(a.fee_per_round);
            enc.put_u32(a.duration_rounds);
        }
        enc.put_u64(self.leader_changes.len() as u64);
        for lc in &self.leader_changes {
            enc.put_u64(lc.epoch);
            enc.put_u32(lc.slot);
            enc.put_u32(lc.old_leader.0);
            enc.put_u32(lc.new_leader.0);
        }
        enc.put_u64(self.takeovers.len() as u64);
        for t in &self.takeovers {
            enc.put_u64(t.epoch);
            enc.put_u32(t.failed_ranks);
            enc.put_u32(t.new_rank);
            enc.put_u64(t.takeover_tick);
        }
        enc.finish()
    }
}

/// Block body: raw transactions (main and meta blocks) or a folded
/// summary (summary-blocks).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockBody {
    Txs(Vec<Transaction>),
    Summary(SummaryState),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    /// Height within its own chain, genesis = 0.
    pub height: u64,
    pub epoch: u64,
    /// Mc-round for main blocks; sc-slot index (0-based) for side blocks.
    pub round_in_epoch: u32,
    pub prev_ref: Hash32,
    pub body: BlockBody,
    pub proposer: NodeId,
    /// Agreement certificate; `None` only for genesis and mainchain
    /// blocks (the mainchain is modeled as an abstract ordering service).
    pub certificate: Option<AgreementCertificate>,
    pub capacity_bytes: u64,
    /// Leader changes that occurred while producing this block.
    pub lc_records: Vec<LeaderChangeRecord>,
    /// Committee takeovers that occurred while producing this block.
    pub takeover_records: Vec<TakeoverRecord>,
    /// Set once the block's transaction payload has been pruned away.
    pub pruned: bool,
}

impl Block {
    /// Payload bytes actually consumed (nominal transaction sizes, or the
    /// folded summary size).
    pub fn used_bytes(&self) -> u64 {
        match &self.body {
            BlockBody::Txs(txs) => txs.iter().map(|t| t.nominal_size).sum(),
            BlockBody::Summary(s) => s.nominal_size(),
        }
    }

    /// Bytes this block occupies on disk right now: header plus payload,
    /// shrinking to the header alone once pruned.
    pub fn stored_bytes(&self) -> u64 {
        if self.pruned {
            BLOCK_HEADER_BYTES
        } else {
            BLOCK_HEADER_BYTES + self.used_bytes()
        }
    }

    pub fn txs(&self) -> &[Transaction] {
        match &self.body {
            BlockBody::Txs(txs) => txs,
            BlockBody::Summary(_) => &[],
        }
    }

    pub fn summary(&self) -> Option<&SummaryState> {
        match &self.body {
            BlockBody::Summary(s) => Some(s),
            _ => None,
        }
    }

    /// Canonical block digest over header fields and body content.
    pub fn hash(&self) -> Hash32 {
        let mut enc = CanonicalEncoder::new("block-v1");
        enc.put_u8(match self.kind {
            BlockKind::Main => 0,
            BlockKind::Meta => 1,
            BlockKind::Summary => 2,
        });
        enc.put_u64(self.height);
        enc.put_u64(self.epoch);
        enc.put_u32(self.round_in_epoch);
        enc.put_bytes(&self.prev_ref);
        enc.put_u32(self.proposer.0);
        match &self.body {
            BlockBody::Txs(txs) => {
                enc.put_u64(txs.len() as u64);
                for tx in txs {
                    enc.put_bytes(&crate::types::tx_hash(tx));
                }
            }
            BlockBody::Summary(s) => {
                enc.put_bytes(&s.canonical_bytes());
            }
        }
        enc.finish()
    }

    /// Drop the transaction payload, keeping the header (pruning).
    pub fn prune_payload(&mut self) {
        self.pruned = true;
        match &mut self.body {
            BlockBody::Txs(txs) => txs.clear(),
            BlockBody::Summary(_) => {}
        }
    }
}
