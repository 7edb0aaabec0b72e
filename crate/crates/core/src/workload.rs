//! Storage-market traffic generator, contract lifecycle, payment
//! modalities, and the optimistic-rollup baseline.
//!
//! Every active contract emits one proof of retrievability per
//! mainchain round. In the round of its term's final proof the contract
//! also expires: a storage payment (pay-at-contract-end mode), a new
//! propose (which funds the next term's escrow), and a commit enter the
//! mainchain queue, and the contract re-activates the round after its
//! commit confirms — so congestion on the chain carrying agreement
//! traffic delays re-activation and suppresses service. Currency
//! transfers are added so they form a configured fraction of the
//! round's transaction count.
//!
//! Runs start cold: every contract begins a full term at round 1, the
//! way a market looks right after its setup phase. First-term expiries
//! then arrive as a wave shaped by the term-length distribution.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::mainchain::MainchainState;
use crate::types::{
    ContractId, DisputeOutcome, DisputeRecord, NodeId, Transaction, TxKind, TxPayload,
};

/// When servers get paid for stored data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PaymentModality {
    /// One storage payment at term expiry, fee × proofs of the term.
    ContractEnd,
    /// Payments dispensed when each epoch's sync applies on the
    /// mainchain, fee × newly synced proofs.
    EpochEnd,
    /// One payment per contract per round (meaningful only without the
    /// sidechain; with it, this coincides with `EpochEnd`).
    EachMcRound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractStatus {
    /// Renewal in flight: waiting for its commit to confirm.
    Proposed,
    Active,
}

#[derive(Debug, Clone)]
pub struct Contract {
    pub id: ContractId,
    pub client: NodeId,
    pub server: NodeId,
    pub fee_per_round: u64,
    /// Term length of the current (or pending) term.
    pub duration_rounds: u32,
    /// Active rounds left in the current term.
    pub remaining_rounds: u32,
    pub start_round: u64,
    pub status: ContractStatus,
    /// Proofs emitted this term (the storage-payment amount basis).
    pub proofs_this_term: u32,
}

/// Traffic-mix and lifecycle parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadConfig {
    /// Number of storage contracts.
    pub contracts: u32,
    /// Transfers as a fraction of round transaction count.
    pub payment_fraction: f64,
    /// Disputes as a fraction of round proof count.
    pub dispute_fraction: f64,
    pub fee_per_round: u64,
    /// Term length distribution: Normal(mean, sd), rounded, clamped to
    /// ≥ 1.
    pub duration_mean: f64,
    pub duration_sd: f64,
    pub modality: PaymentModality,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            contracts: 16_000,
            payment_fraction: 0.02,
            dispute_fraction: 0.0,
            fee_per_round: 1,
            duration_mean: 40.0,
            duration_sd: 20.0,
            modality: PaymentModality::ContractEnd,
        }
    }
}

#[derive(Debug)]
pub struct Workload {
    pub cfg: WorkloadConfig,
    pub contracts: BTreeMap<ContractId, Contract>,
    /// Commit tx id → contract awaiting re-activation.
    pending_commits: BTreeMap<u64, ContractId>,
    rng: ChaCha12Rng,
    normal: Normal<f64>,
    /// Running counters for conservation checks.
    pub generated_txs: u64,
}

impl Workload {
    /// Build the contract table as of the end of the market's setup
    /// phase: every contract active from round 1 with a full term ahead
    /// of it, terms drawn from the duration distribution, escrows
    /// funded with the full-term liability. The setup-phase agreement
    /// paperwork itself predates the run and emits no transactions.
    pub fn init(
        cfg: WorkloadConfig,
        population: u32,
        mut rng: ChaCha12Rng,
        mc: &mut MainchainState,
    ) -> Self {
        let normal =
            Normal::new(cfg.duration_mean, cfg.duration_sd).expect("positive duration spread");
        let mut contracts = BTreeMap::new();
        for id in 0..cfg.contracts as u64 {
            let duration = sample_duration(&normal, &mut rng);
            let server = NodeId((id % population as u64) as u32);
            let client = NodeId(((id + population as u64 / 2) % population as u64) as u32);
            mc.fund_escrow(id, cfg.fee_per_round, duration as u64);
            contracts.insert(
                id,
                Contract {
                    id,
                    client,
                    server,
                    fee_per_round: cfg.fee_per_round,
                    duration_rounds: duration,
                    remaining_rounds: duration,
                    start_round: 1,
                    status: ContractStatus::Active,
                    proofs_this_term: 0,
                },
            );
        }
        Workload {
            cfg,
            contracts,
            pending_commits: BTreeMap::new(),
            rng,
            normal,
            generated_txs: 0,
        }
    }

    /// Number of currently active contracts.
    pub fn active_count(&self) -> u64 {
        self.contracts
            .values()
            .filter(|c| c.status == ContractStatus::Active)
            .count() as u64
    }

    /// Generate one round's traffic at round start, in deterministic
    /// order: per-contract events (proof, or expiry paperwork), then
    /// disputes, then transfers. Escrow funding (new proposes) and
    /// drawdowns (storage payments) are applied to `mc` immediately —
    /// market effects happen once, at transaction creation, and are
    /// never reverted by rollback.
    pub fn generate_round_traffic(
        &mut self,
        round: u64,
        next_id: &mut u64,
        mc: &mut MainchainState,
    ) -> Vec<Transaction> {
        let mut txs: Vec<Transaction> = Vec::new();
        let fresh = |k: TxKind, c: Option<ContractId>, amount: u64, id: &mut u64| {
            let tx = Transaction::new(*id, k, c, amount, round);
            *id += 1;
            tx
        };

        let ids: Vec<ContractId> = self.contracts.keys().copied().collect();
        for cid in ids {
            let (fee, proofs, expires) = {
                let c = self.contracts.get_mut(&cid).unwrap();
                if c.status != ContractStatus::Active || c.start_round > round {
                    continue;
                }
                c.remaining_rounds -= 1;
                c.proofs_this_term += 1;
                (
                    c.fee_per_round,
                    c.proofs_this_term as u64,
                    c.remaining_rounds == 0,
                )
            };

            txs.push(fresh(TxKind::ServiceProof, Some(cid), 0, next_id));
            if self.cfg.modality == PaymentModality::EachMcRound {
                mc.withdraw_escrow(cid, fee)
                    .expect("term escrow funded at proposal");
                txs.push(fresh(TxKind::ServicePayment, Some(cid), fee, next_id));
            }

            if expires {
                // The term's final proof doubles as its expiry round:
                // settle the term (pay-at-contract-end), then propose
                // and commit the next term. The contract idles from the
                // next round until its commit confirms.
                if self.cfg.modality == PaymentModality::ContractEnd {
                    let amount = fee * proofs;
                    mc.withdraw_escrow(cid, amount)
                        .expect("term escrow funded at proposal");
                    txs.push(fresh(TxKind::ServicePayment, Some(cid), amount, next_id));
                }
                let new_duration = sample_duration(&self.normal, &mut self.rng);
                mc.fund_escrow(cid, fee, new_duration as u64);
                txs.push(fresh(
                    TxKind::ContractPropose,
                    Some(cid),
                    fee * new_duration as u64,
                    next_id,
                ));
                let commit = fresh(TxKind::AgreementCommit, Some(cid), 0, next_id);
                self.pending_commits.insert(commit.id, cid);
                txs.push(commit);
                let c = self.contracts.get_mut(&cid).unwrap();
                c.duration_rounds = new_duration;
                c.status = ContractStatus::Proposed;
            }
        }

        // Disputes: a fraction of this round's proofs, always valid in
        // the reference workload.
        let proofs_emitted = txs
            .iter()
            .filter(|t| t.kind == TxKind::ServiceProof)
            .count() as f64;
        let disputes = (self.cfg.dispute_fraction * proofs_emitted).round() as u64;
        for _ in 0..disputes {
            let idx = self.rng.random_range(0..self.contracts.len() as u64);
            let mut tx = fresh(TxKind::Dispute, Some(idx), 0, next_id);
            tx.payload = TxPayload::Dispute(DisputeRecord {
                proof_ref: 0,
                outcome: DisputeOutcome::Valid,
            });
            txs.push(tx);
        }

        // Transfers: payment_fraction of the round's transaction count,
        // i.e. round(f/(1-f) × service-related count). Storage payments
        // count as service-related; only transfers are plain payments.
        let service_related = txs.len() as f64;
        let f = self.cfg.payment_fraction;
        let transfers = (f / (1.0 - f) * service_related).round() as u64;
        for _ in 0..transfers {
            txs.push(fresh(TxKind::Transfer, None, 1, next_id));
        }

        self.generated_txs += txs.len() as u64;
        txs
    }

    /// Notify the generator of transactions confirmed this round;
    /// contracts whose renewal commit confirmed re-activate starting
    /// next round. Re-applying a confirmation (a rolled-back commit
    /// re-publishing) is a no-op.
    pub fn on_confirmed(&mut self, confirmed_ids: &[u64], round: u64) {
        for id in confirmed_ids {
            if let Some(cid) = self.pending_commits.remove(id) {
                let c = self.contracts.get_mut(&cid).unwrap();
                c.status = ContractStatus::Active;
                c.start_round = round + 1;
                c.remaining_rounds = c.duration_rounds;
                c.proofs_this_term = 0;
            }
        }
    }
}

fn sample_duration(normal: &Normal<f64>, rng: &mut ChaCha12Rng) -> u32 {
    let d = normal.sample(rng).round();
    if d < 1.0 {
        1
    } else {
        d as u32
    }
}

/// Optimistic-rollup baseline: service transactions accumulate into one
/// batch per round (capacity-bounded), each batch's state change lands
/// on the mainchain after a fixed processing delay, and user-visible
/// finality waits out a contestation period on top.
#[derive(Debug, Clone)]
pub struct OpBoostState {
    pub batch_capacity: u64,
    pub batch_delay_rounds: u64,
    pub contestation_rounds: u64,
    pub pending: VecDeque<Transaction>,
}

/// One sealed rollup batch.
#[derive(Debug, Clone)]
pub struct OpBoostBatch {
    pub inclusion_round: u64,
    pub txs: Vec<Transaction>,
}

impl OpBoostBatch {
    /// Rounds until a transaction's state change is processed on the
    /// mainchain.
    pub fn processing_latency(&self, tx: &Transaction, delay: u64) -> u64 {
        (self.inclusion_round - tx.created_at_round) + delay
    }
}

impl Default for OpBoostState {
    fn default() -> Self {
        OpBoostState {
            batch_capacity: 1_572_864, // 1.5 MB
            batch_delay_rounds: 3,
            contestation_rounds: 50_400, // one week of mainchain rounds
            pending: VecDeque::new(),
        }
    }
}

impl OpBoostState {
    pub fn enqueue(&mut self, txs: impl IntoIterator<Item = Transaction>) {
        self.pending.extend(txs);
    }

    /// Seal this round's batch from the queue head.
    pub fn run_round(&mut self, round: u64) -> OpBoostBatch {
        let mut txs = Vec::new();
        let mut used = 0u64;
        while let Some(tx) = self.pending.front() {
            if used + tx.nominal_size > self.batch_capacity {
                break;
            }
            used += tx.nominal_size;
            txs.push(self.pending.pop_front().unwrap());
        }
        OpBoostBatch {
            inclusion_round: round,
            txs,
        }
    }

    /// Round at which a batch included at `inclusion_round` becomes
    /// final for users: processing delay plus contestation.
    pub fn finality_round(&self, inclusion_round: u64) -> u64 {
        inclusion_round + self.batch_delay_rounds + self.contestation_rounds
    }
}
