//! Sidechain engine: meta-block and summary-block production, the
//! epoch summary fold, sync-transaction creation/verification, and
//! payload pruning.
//!
//! Topology: meta-blocks extend the tip, while each summary-block
//! references the *previous summary-block*, forming a backbone that
//! stays verifiable after every meta-block in between is pruned. The
//! sidechain genesis is itself an (empty) summary-block, so the
//! backbone is total.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::block::{Block, BlockBody, BlockKind, SummaryState, BLOCK_HEADER_BYTES};
use crate::consensus::{LeaderChangeRecord, TakeoverRecord};
use crate::ledger::{Ledger, LedgerError};
use crate::types::{
    classify, Hash32, HomeChain, NodeId, SyncPayload, Transaction, TxKind,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SidechainError {
    #[error("market transaction {tx_id} carries no contract id (generator bug)")]
    MissingContractId { tx_id: u64 },
    #[error("no summary-block exists for epoch {0}")]
    UnknownEpochSummary(u64),
    #[error("sync transaction must cover at least one epoch")]
    EmptySyncRequest,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("summary-block prev_ref does not match the previous summary-block")]
    BrokenSummaryBackbone,
    #[error("meta-block prev_ref does not match the tip")]
    BrokenMetaLink,
}

/// What one prune pass removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PruneReport {
    pub epochs_pruned: Vec<u64>,
    pub blocks_pruned: u64,
    pub bytes_freed: u64,
}

#[derive(Debug, Clone)]
pub struct SidechainState {
    pub ledger: Ledger,
    /// Service traffic awaiting inclusion, FIFO; only annotation-11
    /// transactions may enter.
    pub pending: VecDeque<Transaction>,
    pub block_capacity: u64,
    /// Epoch → height of its summary-block.
    pub summary_index: BTreeMap<u64, u64>,
    /// Epoch → heights of its meta-blocks, in production order.
    pub epoch_meta_heights: BTreeMap<u64, Vec<u64>>,
    /// Inclusive height ranges whose payloads were pruned.
    pub pruned_ranges: Vec<(u64, u64)>,
    pruned_epochs: BTreeSet<u64>,
}

impl SidechainState {
    pub fn new(k_conf: u64, main_genesis: Hash32, block_capacity: u64) -> Self {
        SidechainState {
            ledger: Ledger::new_side(k_conf, main_genesis),
            pending: VecDeque::new(),
            block_capacity,
            summary_index: BTreeMap::new(),
            epoch_meta_heights: BTreeMap::new(),
            pruned_ranges: Vec::new(),
            pruned_epochs: BTreeSet::new(),
        }
    }

    /// Queue a service transaction; rejects anything not routed to the
    /// sidechain.
    pub fn enqueue(&mut self, tx: Transaction) {
        debug_assert_eq!(classify(&tx), Ok(HomeChain::Side));
        self.pending.push_back(tx);
    }

    /// Return transactions to the queue head in their original order
    /// (used when an invalid block is dropped).
    pub fn requeue_front(&mut self, txs: Vec<Transaction>) {
        for tx in txs.into_iter().rev() {
            self.pending.push_front(tx);
        }
    }

    /// Build a meta-block: FIFO fill from the pending queue up to
    /// capacity. The queue is drained; if the block is later dropped,
    /// the caller re-queues its transactions via [`requeue_front`].
    pub fn propose_meta_block(&mut self, epoch: u64, slot: u32, proposer: NodeId) -> Block {
        let mut txs: Vec<Transaction> = Vec::new();
        let mut used = 0u64;
        while let Some(tx) = self.pending.front() {
            if used + tx.nominal_size > self.block_capacity {
                break;
            }
            used += tx.nominal_size;
            txs.push(self.pending.pop_front().unwrap());
        }
        Block {
            kind: BlockKind::Meta,
            height: self.ledger.tip_height() + 1,
            epoch,
            round_in_epoch: slot,
            prev_ref: self.ledger.tip_hash(),
            body: BlockBody::Txs(txs),
            proposer,
            certificate: None,
            capacity_bytes: self.block_capacity,
            lc_records: Vec::new(),
            takeover_records: Vec::new(),
            pruned: false,
        }
    }

    /// Publish a committed meta-block.
    pub fn push_meta(&mut self, block: Block) -> Result<Hash32, SidechainError> {
        if block.prev_ref != self.ledger.tip_hash() {
            return Err(SidechainError::BrokenMetaLink);
        }
        let epoch = block.epoch;
        let height = block.height;
        let hash = self.ledger.push_linked(block)?;
        self.epoch_meta_heights.entry(epoch).or_default().push(height);
        Ok(hash)
    }

    /// Hash of the most recent summary-block (the genesis summary if
    /// none was produced yet).
    pub fn last_summary_hash(&self) -> Hash32 {
        let height = self
            .summary_index
            .values()
            .next_back()
            .copied()
            .unwrap_or(0);
        self.ledger.hash_at(height).expect("summary height valid")
    }

    /// Fold an epoch's meta-blocks into its summary state.
    pub fn summarize_epoch(&self, epoch: u64) -> Result<SummaryState, SidechainError> {
        let heights = self
            .epoch_meta_heights
            .get(&epoch)
            .map(|v| v.as_slice())
            .unwrap_or(&[]);
        let blocks: Vec<&Block> = heights
            .iter()
            .map(|h| self.ledger.block_at(*h).expect("meta height valid"))
            .collect();
        summarize(&blocks)
    }

    /// Build the epoch's summary-block for the last slot: the fold of
    /// its meta-blocks plus any leader-change/takeover records not yet
    /// carried by a meta-block. `prev_ref` is the previous
    /// summary-block.
    pub fn propose_summary_block(
        &mut self,
        epoch: u64,
        slot: u32,
        proposer: NodeId,
        extra_lc: Vec<LeaderChangeRecord>,
        extra_takeovers: Vec<TakeoverRecord>,
    ) -> Result<Block, SidechainError> {
        let mut state = self.summarize_epoch(epoch)?;
        state.leader_changes.extend(extra_lc.iter().copied());
        state.takeovers.extend(extra_takeovers.iter().copied());
        Ok(Block {
            kind: BlockKind::Summary,
            height: self.ledger.tip_height() + 1,
            epoch,
            round_in_epoch: slot,
            prev_ref: self.last_summary_hash(),
            body: BlockBody::Summary(state),
            proposer,
            certificate: None,
            capacity_bytes: self.block_capacity,
            lc_records: extra_lc,
            takeover_records: extra_takeovers,
            pruned: false,
        })
    }

    /// Publish a committed summary-block.
    pub fn push_summary(&mut self, block: Block) -> Result<Hash32, SidechainError> {
        if block.prev_ref != self.last_summary_hash() {
            return Err(SidechainError::BrokenSummaryBackbone);
        }
        let epoch = block.epoch;
        let height = block.height;
        let hash = self.ledger.push_linked(block)?;
        self.summary_index.insert(epoch, height);
        Ok(hash)
    }

    /// Create the sync transaction covering `epochs` (ascending): a
    /// plain sync for one epoch, a mass-sync for several (rollback or
    /// missed-sync recovery). The payload is the merge of the referenced
    /// summary states.
    pub fn create_sync_transaction(
        &self,
        epochs: &[u64],
        takeover_attested: bool,
        id: u64,
        round: u64,
    ) -> Result<Transaction, SidechainError> {
        if epochs.is_empty() {
            return Err(SidechainError::EmptySyncRequest);
        }
        let mut state = SummaryState::default();
        let mut refs = Vec::with_capacity(epochs.len());
        for e in epochs {
            let height = self
                .summary_index
                .get(e)
                .copied()
                .ok_or(SidechainError::UnknownEpochSummary(*e))?;
            let block = self.ledger.block_at(height).expect("summary height valid");
            refs.push(self.ledger.hash_at(height).expect("summary height valid"));
            state.merge(block.summary().expect("summary block has summary body"));
        }
        Ok(Transaction::new_sync(
            id,
            SyncPayload {
                epochs: epochs.to_vec(),
                summary_refs: refs,
                state,
                takeover_attested,
            },
            round,
        ))
    }

    /// Check a sync transaction against the chain: every referenced
    /// summary-block must resolve (right epoch, right hash) and the
    /// payload state must equal the merge of the referenced summaries.
    pub fn verify_sync_transaction(&self, tx: &Transaction) -> bool {
        let Some(payload) = tx.sync_payload() else {
            return false;
        };
        if payload.epochs.is_empty() || payload.epochs.len() != payload.summary_refs.len() {
            return false;
        }
        let mut expect = SummaryState::default();
        for (e, r) in payload.epochs.iter().zip(&payload.summary_refs) {
            let Some(height) = self.summary_index.get(e).copied() else {
                return false;
            };
            if self.ledger.hash_at(height) != Some(*r) {
                return false;
            }
            let block = self.ledger.block_at(height).expect("summary height valid");
            expect.merge(block.summary().expect("summary body"));
        }
        expect == payload.state
    }

    /// Drop the payload of every meta-block whose epoch's sync is
    /// buried on the mainchain (`buried_epochs`), recording the pruned
    /// height ranges. Summary-blocks are never touched.
    pub fn prune(&mut self, buried_epochs: &BTreeSet<u64>) -> PruneReport {
        let mut report = PruneReport::default();
        for epoch in buried_epochs {
            if self.pruned_epochs.contains(epoch) {
                continue;
            }
            debug_assert!(
                self.summary_index.contains_key(epoch),
                "a covered epoch always has a summary-block"
            );
            let Some(heights) = self.epoch_meta_heights.get(epoch) else {
                self.pruned_epochs.insert(*epoch);
                continue;
            };
            let mut range: Option<(u64, u64)> = None;
            for h in heights {
                let block = self.ledger.block_at_mut(*h).expect("meta height valid");
                if block.pruned {
                    continue;
                }
                let before = block.stored_bytes();
                block.prune_payload();
                report.bytes_freed += before - BLOCK_HEADER_BYTES;
                report.blocks_pruned += 1;
                range = match range {
                    None => Some((*h, *h)),
                    Some((lo, hi)) if *h == hi + 1 => Some((lo, *h)),
                    Some(r) => {
                        self.pruned_ranges.push(r);
                        Some((*h, *h))
                    }
                };
            }
            if let Some(r) = range {
                self.pruned_ranges.push(r);
            }
            self.pruned_epochs.insert(*epoch);
            report.epochs_pruned.push(*epoch);
        }
        report
    }
}

/// Fold a sequence of meta-blocks into a summary state: the fold rules
/// over their transactions plus their leader-change/takeover records
/// copied through. A market transaction without a contract id aborts
/// the run — that is a generator bug, not a protocol condition.
pub fn summarize(blocks: &[&Block]) -> Result<SummaryState, SidechainError> {
    let mut state = SummaryState::default();
    for block in blocks {
        for tx in block.txs() {
            let needs_contract = matches!(
                tx.kind,
                TxKind::ServiceProof
                    | TxKind::ServicePayment
                    | TxKind::Dispute
                    | TxKind::AgreementCommit
            );
            if needs_contract && tx.contract.is_none() {
                return Err(SidechainError::MissingContractId { tx_id: tx.id });
            }
            state.fold_tx(tx);
        }
        state.leader_changes.extend(block.lc_records.iter().copied());
        state.takeovers.extend(block.takeover_records.iter().copied());
    }
    Ok(state)
}
