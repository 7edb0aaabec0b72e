//! Mainchain state machine.
//!
//! The mainchain is modeled as an abstract ordering service: a
//! storage-weighted sortition picks each round's leader, the leader
//! fills a block from three queues — sync transactions first (always,
//! even oversized), then currency transfers up to a byte quota, then
//! everything else FIFO, with leftover capacity spilling back to
//! transfers — and applied sync transactions fold sidechain epoch
//! state into `summary_variables` and dispense storage payments from
//! contract escrows.
//!
//! Scripted rollbacks pop unburied blocks, return their transactions
//! to the queue heads flagged `rolled_back`, and revert sync coverage;
//! all other market effects happen once at transaction creation and
//! survive rollback untouched.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::{Block, BlockBody, BlockKind, SummaryState};
use crate::committees::race_guard;
use crate::ledger::Ledger;
use crate::types::{
    CanonicalEncoder, ContractId, Hash32, NodeId, Transaction, TxKind,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SortitionError {
    #[error("total mining power is zero; no leader can be drawn")]
    ZeroTotalPower,
}

/// Seed for one round's leader draw: digest of the previous block hash
/// and the round number, so the draw is a deterministic function of
/// confirmed history.
pub fn sortition_seed(prev_hash: &Hash32, round: u64) -> Hash32 {
    let mut enc = CanonicalEncoder::new("sortition-v1");
    enc.put_bytes(prev_hash);
    enc.put_u64(round);
    enc.finish()
}

/// Draw the round leader with probability proportional to mining power.
/// Deterministic given the seed; map order breaks exact ties by lowest
/// node id.
pub fn select_round_leader(
    power: &BTreeMap<NodeId, u64>,
    seed: &Hash32,
) -> Result<NodeId, SortitionError> {
    let total: u64 = power.values().sum();
    if total == 0 {
        return Err(SortitionError::ZeroTotalPower);
    }
    let mut rng = ChaCha12Rng::from_seed(*seed);
    let mut point = rng.random_range(0..total);
    for (node, w) in power {
        if point < *w {
            return Ok(*node);
        }
        point -= w;
    }
    unreachable!("point < total by construction")
}

/// Per-contract escrow account. Funded when a propose transaction is
/// created, drawn down when storage payments are dispensed; neither
/// effect is ever reverted by rollback (transactions re-publish, their
/// effects do not re-apply).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscrowAccount {
    /// Cumulative amount ever funded.
    pub funded: u64,
    pub remaining: u64,
    pub fee_per_round: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EscrowError {
    #[error("escrow for contract {contract} would go negative ({remaining} < {debit})")]
    Overdraw {
        contract: ContractId,
        remaining: u64,
        debit: u64,
    },
}

/// A sync transaction waiting for its processing delay.
#[derive(Debug, Clone)]
pub struct SyncQueueEntry {
    pub tx: Transaction,
    /// First tick at which block assembly may include it.
    pub eligible_tick: u64,
}

/// Coverage record of one applied sync, kept until burial so rollback
/// can rebuild `summary_variables` exactly.
#[derive(Debug, Clone)]
struct AppliedSyncRecord {
    epochs: Vec<u64>,
    state: SummaryState,
}

/// Outcome of applying one sync transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedSync {
    pub epochs: Vec<u64>,
    /// Storage-payment transactions dispensed from escrows (pay-per-epoch
    /// mode); already queued, confirmed in a later block.
    pub payments_dispensed: u64,
    pub proofs_covered: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyncRejection {
    #[error("sync payload failed verification against the sidechain")]
    Unverified,
    #[error("sync covers epochs already covered (duplicate or stale)")]
    AlreadyCovered,
    #[error("transaction is not a sync transaction")]
    NotASync,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RollbackError {
    #[error("rollback depth {depth} exceeds confirmation depth {k_conf}")]
    TooDeep { depth: u64, k_conf: u64 },
}

/// Result of an injected rollback: the abandoned blocks (their
/// transactions are already back at the queue heads) and the epochs
/// whose sync coverage was reverted.
#[derive(Debug, Clone)]
pub struct RollbackEvent {
    pub depth: u64,
    pub blocks: Vec<Block>,
    pub epochs_uncovered: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct MainchainState {
    pub ledger: Ledger,
    /// Sync transactions, head-of-block priority.
    pub sync_queue: VecDeque<SyncQueueEntry>,
    /// Non-sync, non-transfer mainchain traffic, FIFO.
    pub pending_other: VecDeque<Transaction>,
    /// Currency transfers, served from a reserved byte quota.
    pub pending_payments: VecDeque<Transaction>,
    /// Fraction of block bytes reserved for transfers.
    pub payment_quota: f64,
    pub mining_power: BTreeMap<NodeId, u64>,
    pub escrows: BTreeMap<ContractId, EscrowAccount>,
    /// Folded sidechain state as seen by the mainchain.
    pub summary_variables: SummaryState,
    pub covered_epochs: BTreeSet<u64>,
    /// Epoch → mainchain height of the block whose sync covered it.
    pub epoch_sync_height: BTreeMap<u64, u64>,
    /// Height → syncs applied there (rollback bookkeeping).
    applied_syncs: BTreeMap<u64, Vec<AppliedSyncRecord>>,
    /// Total storage payments ever dispensed (conservation checks).
    pub total_dispensed: u64,
    /// Total escrow ever funded.
    pub total_funded: u64,
}

impl MainchainState {
    pub fn new(k_conf: u64, payment_quota: f64, mining_power: BTreeMap<NodeId, u64>) -> Self {
        assert!((0.0..=1.0).contains(&payment_quota));
        MainchainState {
            ledger: Ledger::new_main(k_conf),
            sync_queue: VecDeque::new(),
            pending_other: VecDeque::new(),
            pending_payments: VecDeque::new(),
            payment_quota,
            mining_power,
            escrows: BTreeMap::new(),
            summary_variables: SummaryState::default(),
            covered_epochs: BTreeSet::new(),
            epoch_sync_height: BTreeMap::new(),
            applied_syncs: BTreeMap::new(),
            total_dispensed: 0,
            total_funded: 0,
        }
    }

    /// Fund (or top up) a contract's escrow: fee × duration, recorded at
    /// propose-transaction creation time.
    pub fn fund_escrow(&mut self, contract: ContractId, fee_per_round: u64, duration: u64) {
        let acct = self.escrows.entry(contract).or_default();
        acct.fee_per_round = fee_per_round;
        let amount = fee_per_round * duration;
        acct.funded += amount;
        acct.remaining += amount;
        self.total_funded += amount;
    }

    /// Draw a storage payment down from a contract's escrow.
    pub fn withdraw_escrow(
        &mut self,
        contract: ContractId,
        amount: u64,
    ) -> Result<(), EscrowError> {
        let acct = self.escrows.entry(contract).or_default();
        if acct.remaining < amount {
            return Err(EscrowError::Overdraw {
                contract,
                remaining: acct.remaining,
                debit: amount,
            });
        }
        acct.remaining -= amount;
        self.total_dispensed += amount;
        Ok(())
    }

    /// Queue a non-sync transaction into the right pool.
    pub fn enqueue(&mut self, tx: Transaction) {
        debug_assert!(!tx.kind.is_sync(), "use enqueue_sync");
        match tx.kind {
            TxKind::Transfer => self.pending_payments.push_back(tx),
            _ => self.pending_other.push_back(tx),
        }
    }

    /// Queue a sync transaction, resolving epoch-coverage races against
    /// anything already waiting: overlapping coverage keeps the
    /// takeover-attested (or first) contender only.
    pub fn enqueue_sync(&mut self, tx: Transaction, eligible_tick: u64) {
        debug_assert!(tx.kind.is_sync());
        let new_epochs: BTreeSet<u64> = tx
            .sync_payload()
            .map(|p| p.epochs.iter().copied().collect())
            .unwrap_or_default();
        for entry in &mut self.sync_queue {
            let overlap = entry
                .tx
                .sync_payload()
                .is_some_and(|p| p.epochs.iter().any(|e| new_epochs.contains(e)));
            if overlap {
                let winner_is_new = {
                    let winner = race_guard(&entry.tx, &tx);
                    std::ptr::eq(winner, &tx)
                };
                if winner_is_new {
                    entry.tx = tx;
                    entry.eligible_tick = eligible_tick;
                }
                return;
            }
        }
        self.sync_queue.push_back(SyncQueueEntry { tx, eligible_tick });
    }

    /// Assemble this round's block: eligible syncs first (each exempt
    /// from the capacity check), transfers up to the payment quota,
    /// other traffic FIFO, leftover bytes spilling back to transfers.
    /// Returns the block plus any stale rolled-back syncs discarded from
    /// the queue head.
    pub fn assemble_block(
        &mut self,
        epoch: u64,
        round_in_epoch: u32,
        proposer: NodeId,
        capacity: u64,
        now_tick: u64,
    ) -> (Block, Vec<Transaction>) {
        let mut txs: Vec<Transaction> = Vec::new();
        let mut used: u64 = 0;
        let mut stale: Vec<Transaction> = Vec::new();

        // (a) Sync transactions, in queue order. Stale rolled-back syncs
        // are discarded here (their epochs re-sync via a later
        // mass-sync); not-yet-eligible syncs wait.
        let mut kept: VecDeque<SyncQueueEntry> = VecDeque::new();
        while let Some(entry) = self.sync_queue.pop_front() {
            if entry.tx.rolled_back {
                stale.push(entry.tx);
            } else if entry.eligible_tick <= now_tick {
                used += entry.tx.nominal_size;
                txs.push(entry.tx);
            } else {
                kept.push_back(entry);
            }
        }
        self.sync_queue = kept;

        // (b) Transfers up to the reserved quota.
        let pay_budget =
            ((self.payment_quota * capacity as f64).floor() as u64).min(capacity.saturating_sub(used));
        let mut pay_used: u64 = 0;
        while let Some(tx) = self.pending_payments.front() {
            if pay_used + tx.nominal_size > pay_budget {
                break;
            }
            pay_used += tx.nominal_size;
            txs.push(self.pending_payments.pop_front().unwrap());
        }
        used += pay_used;

        // (c) Everything else FIFO to capacity.
        while let Some(tx) = self.pending_other.front() {
            if used + tx.nominal_size > capacity {
                break;
            }
            used += tx.nominal_size;
            txs.push(self.pending_other.pop_front().unwrap());
        }

        // (d) Spill remaining bytes back to transfers.
        while let Some(tx) = self.pending_payments.front() {
            if used + tx.nominal_size > capacity {
                break;
            }
            used += tx.nominal_size;
            txs.push(self.pending_payments.pop_front().unwrap());
        }

        let block = Block {
            kind: BlockKind::Main,
            height: self.ledger.tip_height() + 1,
            epoch,
            round_in_epoch,
            prev_ref: self.ledger.tip_hash(),
            body: BlockBody::Txs(txs),
            proposer,
            certificate: None,
            capacity_bytes: capacity,
            lc_records: Vec::new(),
            takeover_records: Vec::new(),
            pruned: false,
        };
        (block, stale)
    }

    /// Apply a published, verified sync transaction: fold its state into
    /// `summary_variables`, mark its epochs covered, and (in pay-per-epoch
    /// mode) dispense one storage payment per covered contract, drawn
    /// from escrow at creation and queued for the next block.
    pub fn apply_sync_transaction(
        &mut self,
        tx: &Transaction,
        verified: bool,
        height: u64,
        round: u64,
        dispense_epoch_payments: bool,
        next_tx_id: &mut u64,
    ) -> Result<AppliedSync, SyncRejection> {
        let payload = tx.sync_payload().ok_or(SyncRejection::NotASync)?;
        if !verified {
            return Err(SyncRejection::Unverified);
        }
        if payload.epochs.iter().any(|e| self.covered_epochs.contains(e)) {
            return Err(SyncRejection::AlreadyCovered);
        }

        self.summary_variables.merge(&payload.state);
        for e in &payload.epochs {
            self.covered_epochs.insert(*e);
            self.epoch_sync_height.insert(*e, height);
        }
        self.applied_syncs
            .entry(height)
            .or_default()
            .push(AppliedSyncRecord {
                epochs: payload.epochs.clone(),
                state: payload.state.clone(),
            });

        let mut payments_dispensed = 0u64;
        let proofs_covered: u64 = payload.state.proof_counts.values().sum();
        if dispense_epoch_payments {
            let dues: Vec<(ContractId, u64)> = payload
                .state
                .proof_counts
                .iter()
                .map(|(c, n)| {
                    let fee = self
                        .escrows
                        .get(c)
                        .map(|a| a.fee_per_round)
                        .unwrap_or(0);
                    (*c, n * fee)
                })
                .collect();
            for (contract, amount) in dues {
                if amount == 0 {
                    continue;
                }
                self.withdraw_escrow(contract, amount)
                    .expect("escrow funded ahead of proofs");
                let id = *next_tx_id;
                *next_tx_id += 1;
                let sp =
                    Transaction::new(id, TxKind::ServicePayment, Some(contract), amount, round);
                self.pending_other.push_back(sp);
                payments_dispensed += 1;
            }
        }

        Ok(AppliedSync {
            epochs: payload.epochs.clone(),
            payments_dispensed,
            proofs_covered,
        })
    }

    /// Pop the top `depth` unburied blocks, return their transactions to
    /// the queue heads flagged `rolled_back`, and revert the coverage of
    /// any sync they carried. Coverage state is rebuilt from the
    /// surviving applied-sync records.
    pub fn inject_rollback(&mut self, depth: u64) -> Result<RollbackEvent, RollbackError> {
        if depth > self.ledger.k_conf {
            return Err(RollbackError::TooDeep {
                depth,
                k_conf: self.ledger.k_conf,
            });
        }
        if depth == 0 {
            return Ok(RollbackEvent {
                depth: 0,
                blocks: Vec::new(),
                epochs_uncovered: Vec::new(),
            });
        }

        let popped = self.ledger.rollback(depth);

        // Revert coverage contributed by popped heights, then rebuild.
        let mut epochs_uncovered: Vec<u64> = Vec::new();
        for b in &popped {
            if let Some(records) = self.applied_syncs.remove(&b.height) {
                for r in records {
                    epochs_uncovered.extend(r.epochs.iter().copied());
                }
            }
        }
        if !epochs_uncovered.is_empty() {
            self.rebuild_coverage();
        }

        // Re-queue every popped transaction at its queue head, original
        // order preserved, flagged as rolled back. Stale syncs will be
        // discarded at the next assembly, forcing a mass-sync re-issue.
        let mut requeue: Vec<Transaction> = popped
            .iter()
            .flat_map(|b| b.txs().iter().cloned())
            .collect();
        for tx in requeue.iter_mut() {
            tx.rolled_back = true;
        }
        for tx in requeue.into_iter().rev() {
            match tx.kind {
                TxKind::Sync | TxKind::MassSync => self
                    .sync_queue
                    .push_front(SyncQueueEntry {
                        tx,
                        eligible_tick: 0,
                    }),
                TxKind::Transfer => self.pending_payments.push_front(tx),
                _ => self.pending_other.push_front(tx),
            }
        }

        Ok(RollbackEvent {
            depth,
            blocks: popped,
            epochs_uncovered,
        })
    }

    fn rebuild_coverage(&mut self) {
        self.summary_variables = SummaryState::default();
        self.covered_epochs.clear();
        self.epoch_sync_height.clear();
        for (height, records) in &self.applied_syncs {
            for r in records {
                self.summary_variables.merge(&r.state);
                for e in &r.epochs {
                    self.covered_epochs.insert(*e);
                    self.epoch_sync_height.insert(*e, *height);
                }
            }
        }
    }

    /// Height of the block carrying `epoch`'s sync, if covered.
    pub fn sync_height_of_epoch(&self, epoch: u64) -> Option<u64> {
        self.epoch_sync_height.get(&epoch).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SyncPayload;

    fn uniform_power(n: u32) -> BTreeMap<NodeId, u64> {
        (0..n).map(|i| (NodeId(i), 1)).collect()
    }

    fn mc() -> MainchainState {
        MainchainState::new(6, 0.30, uniform_power(10))
    }

    fn sync_tx(id: u64, epochs: Vec<u64>, proofs: &[(ContractId, u64)], attested: bool) -> Transaction {
        let mut state = SummaryState::default();
        for (c, n) in proofs {
            state.proof_counts.insert(*c, *n);
        }
        Transaction::new_sync(
            id,
            SyncPayload {
                summary_refs: vec![[id as u8; 32]; epochs.len()],
                epochs,
                state,
                takeover_attested: attested,
            },
            1,
        )
    }

    #[test]
    fn sortition_degenerate_and_zero_power() {
        let mut power = BTreeMap::new();
        power.insert(NodeId(7), 42u64);
        let seed = sortition_seed(&[1; 32], 3);
        assert_eq!(select_round_leader(&power, &seed), Ok(NodeId(7)));

        power.insert(NodeId(7), 0);
        assert_eq!(
            select_round_leader(&power, &seed),
            Err(SortitionError::ZeroTotalPower)
        );
    }

    #[test]
    fn sortition_is_weight_proportional_and_deterministic() {
        let mut power = BTreeMap::new();
        power.insert(NodeId(1), 5u64);
        power.insert(NodeId(2), 5u64);
        power.insert(NodeId(3), 0u64);
        let mut counts = BTreeMap::new();
        for round in 0..10_000u64 {
            let seed = sortition_seed(&[9; 32], round);
            let w = select_round_leader(&power, &seed).unwrap();
            assert_eq!(w, select_round_leader(&power, &seed).unwrap());
            *counts.entry(w).or_insert(0u64) += 1;
        }
        // Zero-weight node never wins; equal weights split 5000 ± 3σ
        // (σ = sqrt(10000·¼) = 50).
        assert_eq!(counts.get(&NodeId(3)), None);
        let n1 = *counts.get(&NodeId(1)).unwrap();
        assert!((4850..=5150).contains(&n1), "n1 = {n1}");
    }

    #[test]
    fn empty_queues_make_an_empty_block() {
        let mut m = mc();
        let (block, stale) = m.assemble_block(0, 1, NodeId(0), 1_000_000, 36);
        assert!(block.txs().is_empty());
        assert!(stale.is_empty());
        assert_eq!(block.height, 1);
    }

    #[test]
    fn byte_budget_split_at_one_megabyte() {
        let mut m = mc();
        let mut id = 0u64;
        for _ in 0..3000 {
            m.enqueue(Transaction::new(id, TxKind::ServiceProof, Some(1), 0, 1));
            id += 1;
        }
        for _ in 0..900 {
            m.enqueue(Transaction::new(id, TxKind::Transfer, None, 1, 1));
            id += 1;
        }
        let (block, _) = m.assemble_block(0, 1, NodeId(0), 1_048_576, 36);
        let transfers = block.txs().iter().filter(|t| t.kind == TxKind::Transfer).count();
        let proofs = block
            .txs()
            .iter()
            .filter(|t| t.kind == TxKind::ServiceProof)
            .count();
        // 30% quota: floor(314572 / 398) = 790 transfers; the remaining
        // 734156 bytes hold floor(·/515) = 1425 proofs.
        assert_eq!(transfers, 790);
        assert_eq!(proofs, 1425);
        assert!(block.used_bytes() <= 1_048_576);
    }

    #[test]
    fn payments_spill_into_unused_capacity() {
        let mut m = mc();
        for id in 0..5000u64 {
            m.enqueue(Transaction::new(id, TxKind::Transfer, None, 1, 1));
        }
        let (block, _) = m.assemble_block(0, 1, NodeId(0), 1_048_576, 36);
        // No other traffic: transfers fill the whole block, not just 30%.
        assert_eq!(block.txs().len(), 1_048_576 / 398);
    }

    #[test]
    fn sync_outranks_everything_and_respects_eligibility() {
        let mut m = mc();
        for id in 0..100u64 {
            m.enqueue(Transaction::new(id, TxKind::Transfer, None, 1, 1));
        }
        m.enqueue_sync(sync_tx(1000, vec![0], &[(1, 29)], false), 351);
        m.enqueue_sync(sync_tx(1001, vec![1], &[(1, 29)], false), 500);

        let (block, _) = m.assemble_block(0, 1, NodeId(0), 1_048_576, 360);
        // Eligible sync leads the block; the one still inside its delay
        // window stays queued.
        assert_eq!(block.txs()[0].id, 1000);
        assert!(block.txs().iter().all(|t| t.id != 1001));
        assert_eq!(m.sync_queue.len(), 1);
    }

    #[test]
    fn oversized_sync_is_capacity_exempt() {
        let mut m = mc();
        // 200 000 contract entries → 64 + 1.6 MB sync, over a 1 MB cap.
        let proofs: Vec<(ContractId, u64)> = (0..200_000).map(|c| (c as u64, 1)).collect();
        let big = sync_tx(1, vec![0], &proofs, false);
        assert!(big.nominal_size > 1_048_576);
        m.enqueue_sync(big, 0);
        for id in 2..50u64 {
            m.enqueue(Transaction::new(id, TxKind::ServiceProof, Some(1), 0, 1));
        }
        let (block, _) = m.assemble_block(0, 1, NodeId(0), 1_048_576, 36);
        assert_eq!(block.txs()[0].kind, TxKind::Sync);
        // The sync blew the budget, so nothing else fits.
        assert_eq!(block.txs().len(), 1);
    }

    #[test]
    fn conflicting_syncs_resolve_to_the_attested_one() {
        let mut m = mc();
        m.enqueue_sync(sync_tx(1, vec![3], &[(1, 29)], false), 0);
        m.enqueue_sync(sync_tx(2, vec![3], &[(1, 30)], true), 0);
        assert_eq!(m.sync_queue.len(), 1);
        assert_eq!(m.sync_queue[0].tx.id, 2);
        // A sync for a different epoch queues independently.
        m.enqueue_sync(sync_tx(3, vec![4], &[(1, 30)], false), 0);
        assert_eq!(m.sync_queue.len(), 2);
    }

    #[test]
    fn apply_sync_folds_state_and_dispenses_epoch_payments() {
        let mut m = mc();
        m.fund_escrow(1, 1, 40);
        assert_eq!(m.escrows[&1].remaining, 40);
        let tx = sync_tx(10, vec![0], &[(1, 30)], false);
        let mut next_id = 100;
        let applied = m
            .apply_sync_transaction(&tx, true, 5, 10, true, &mut next_id)
            .unwrap();
        assert_eq!(applied.proofs_covered, 30);
        assert_eq!(applied.payments_dispensed, 1);
        // Escrow drawn at fee 1 per proof; payment queued for later.
        assert_eq!(m.escrows[&1].remaining, 10);
        assert_eq!(m.pending_other.len(), 1);
        assert_eq!(m.pending_other[0].kind, TxKind::ServicePayment);
        assert_eq!(m.pending_other[0].amount, 30);
        assert_eq!(m.summary_variables.proof_counts[&1], 30);
        assert!(m.covered_epochs.contains(&0));
        assert_eq!(m.sync_height_of_epoch(0), Some(5));
    }

    #[test]
    fn apply_sync_rejects_unverified_and_duplicates() {
        let mut m = mc();
        let tx = sync_tx(10, vec![0], &[(1, 5)], false);
        let mut next_id = 100;
        assert_eq!(
            m.apply_sync_transaction(&tx, false, 5, 10, false, &mut next_id),
            Err(SyncRejection::Unverified)
        );
        m.apply_sync_transaction(&tx, true, 5, 10, false, &mut next_id)
            .unwrap();
        assert_eq!(
            m.apply_sync_transaction(&tx, true, 6, 11, false, &mut next_id),
            Err(SyncRejection::AlreadyCovered)
        );
        // An empty summary changes nothing but still covers its epoch.
        let empty = sync_tx(11, vec![1], &[], false);
        m.apply_sync_transaction(&empty, true, 6, 11, false, &mut next_id)
            .unwrap();
        assert_eq!(m.summary_variables.proof_counts.len(), 1);
        assert!(m.covered_epochs.contains(&1));
    }

    #[test]
    fn rollback_requeues_flagged_txs_and_reverts_coverage() {
        let mut m = mc();
        let mut next_id = 1000;

        // Block 1: two transfers. Block 2: a sync for epoch 0.
        m.enqueue(Transaction::new(1, TxKind::Transfer, None, 1, 1));
        m.enqueue(Transaction::new(2, TxKind::Transfer, None, 1, 1));
        let (b1, _) = m.assemble_block(0, 1, NodeId(0), 1_000_000, 36);
        m.ledger.push(b1).unwrap();

        m.enqueue_sync(sync_tx(3, vec![0], &[(1, 29)], false), 0);
        let (b2, _) = m.assemble_block(0, 2, NodeId(0), 1_000_000, 72);
        let sync_clone = b2.txs()[0].clone();
        let h2 = b2.height;
        m.ledger.push(b2).unwrap();
        m.apply_sync_transaction(&sync_clone, true, h2, 2, false, &mut next_id)
            .unwrap();
        assert!(m.covered_epochs.contains(&0));

        // Depth beyond k_conf refused; depth 0 is a no-op.
        assert!(m.inject_rollback(7).is_err());
        assert!(m.inject_rollback(0).unwrap().blocks.is_empty());

        let ev = m.inject_rollback(2).unwrap();
        assert_eq!(ev.blocks.len(), 2);
        assert_eq!(ev.epochs_uncovered, vec![0]);
        assert!(m.covered_epochs.is_empty());
        assert!(m.summary_variables.proof_counts.is_empty());

        // Transfers back at the head in original order, flagged.
        assert_eq!(m.pending_payments[0].id, 1);
        assert_eq!(m.pending_payments[1].id, 2);
        assert!(m.pending_payments.iter().all(|t| t.rolled_back));

        // The stale sync is flagged and gets discarded at next assembly.
        assert_eq!(m.sync_queue.len(), 1);
        let (b3, stale) = m.assemble_block(0, 3, NodeId(0), 1_000_000, 108);
        assert_eq!(stale.len(), 1);
        assert_eq!(stale[0].id, 3);
        assert!(b3.txs().iter().all(|t| !t.kind.is_sync()));
    }

    #[test]
    fn escrow_conservation_and_overdraw() {
        let mut m = mc();
        m.fund_escrow(5, 2, 10);
        assert_eq!(m.total_funded, 20);
        m.withdraw_escrow(5, 14).unwrap();
        assert_eq!(
            m.withdraw_escrow(5, 7),
            Err(EscrowError::Overdraw {
                contract: 5,
                remaining: 6,
                debit: 7
            })
        );
        assert_eq!(m.total_dispensed, 14);
        assert_eq!(m.escrows[&5].funded, 20);
        assert_eq!(
            m.escrows[&5].funded,
            m.escrows[&5].remaining + m.total_dispensed
        );
    }
}
