//! One deterministic simulated run.
//!
//! The engine drives the whole protocol on an integer tick clock:
//! market traffic generation, sidechain slot production under a fault
//! script (leader changes, committee takeovers, autorecovery failure),
//! mainchain block assembly with sync-transaction priority, epoch
//! syncing and pruning, scripted rollbacks, and the rollup baseline.
//! Identical `(config, seed)` pairs produce byte-identical reports.
//!
//! A mainchain round `r` (1-based) spans ticks `[(r-1)*T, r*T)`; its
//! block is assembled at the end tick. Sidechain slots fall due inside
//! the round; a meta-block published mid-round therefore confirms its
//! transactions in that same round. Confirmation latency is the integer
//! round difference `published - created`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::SummaryState;
use crate::clock::{TimeBase, TICKS_PER_SC_ROUND};
use crate::committees::{
    elect_committees, first_functional_rank, takeover_completion_tick, Committee, ElectionError,
    ElectionMethod, EpochCommittees, FaultKind, FaultScript, TakeoverCause, TakeoverEvent,
};
use crate::consensus::{
    leader_change, run_agreement, AgreementOutcome, Conduct, ConsensusError, LeaderChangeOutcome,
    LeaderChangeRecord, TakeoverRecord, Thresholds,
};
use crate::ledger::LedgerError;
use crate::mainchain::{
    select_round_leader, sortition_seed, MainchainState, RollbackError, SortitionError,
};
use crate::seeding::stream_rng;
use crate::sidechain::{SidechainError, SidechainState};
use crate::types::{NodeId, Transaction, TxKind, TxPayload};
use crate::workload::{OpBoostState, PaymentModality, Workload, WorkloadConfig};

// ---------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------

/// Which protocol the run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Single chain; every transaction competes for mainchain blocks.
    Base,
    /// Mainchain plus the offloading sidechain (meta/summary blocks,
    /// syncing, pruning, autorecovery).
    ChainBoost,
    /// Optimistic-rollup baseline: service traffic in one batch per
    /// round, finality after a contestation window.
    OpBoost,
}

/// A scripted fork: after the block of `mc_round` is published, the top
/// `depth` unburied mainchain blocks are replaced by an empty
/// alternative history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollbackInjection {
    pub mc_round: u64,
    pub depth: u64,
}

/// Full description of one run; everything a repeat needs. Fields
/// omitted from a serialized config fall back to the defaults, so a
/// config file only has to state what it changes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Miner / storage-node population.
    pub nodes: u32,
    pub workload: WorkloadConfig,
    pub mc_block_bytes: u64,
    pub sc_block_bytes: u64,
    pub time: TimeBase,
    /// Scripted rounds; traffic generation stops afterwards and the run
    /// continues until every queue drains.
    pub run_len_mc_rounds: u64,
    /// Committee size `cs`.
    pub committee_size: u32,
    /// Standby committees elected per epoch.
    pub kappa: u32,
    /// Agreement quorum; `None` uses the optimal `ceil((2cs+1)/3)`.
    pub theta_strong: Option<u32>,
    /// Leader-change timeout, ticks.
    pub zeta: u64,
    /// Takeover (lack-of-progress) timeout, ticks.
    pub eta: u64,
    /// Message-delay bound, ticks; per-publication delays are drawn
    /// uniformly from `0..=delta`.
    pub delta: u64,
    /// Duration of one agreement round, ticks.
    pub t_agr: u64,
    /// Burial depth for confirmation, election views, and pruning.
    pub k_conf: u64,
    /// Fraction of mainchain block bytes reserved for transfers.
    pub payment_quota: f64,
    pub election: ElectionMethod,
    pub faults: FaultScript,
    #[serde(default)]
    pub rollbacks: Vec<RollbackInjection>,
    pub seed: u64,
    pub mode: Mode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nodes: 200,
            workload: WorkloadConfig::default(),
            mc_block_bytes: 1 << 20,
            sc_block_bytes: 1 << 19,
            time: TimeBase::default(),
            run_len_mc_rounds: 61,
            committee_size: 17,
            kappa: 2,
            theta_strong: None,
            zeta: 3,
            eta: 6,
            delta: 1,
            t_agr: 2,
            k_conf: 6,
            payment_quota: 0.30,
            election: ElectionMethod::SlidingWindow { window: 10 },
            faults: FaultScript::default(),
            rollbacks: Vec::new(),
            seed: 7,
            mode: Mode::ChainBoost,
        }
    }
}

impl RunConfig {
    /// Check the configuration and derive the committee thresholds.
    pub fn validate(&self) -> Result<Thresholds, SimError> {
        let th = match self.theta_strong {
            Some(t) => Thresholds::with_strong(self.committee_size, t)?,
            None => Thresholds::new(self.committee_size)?,
        };
        if self.zeta >= self.eta {
            return Err(SimError::Config(format!(
                "leader-change timeout zeta={} must be shorter than takeover timeout eta={}",
                self.zeta, self.eta
            )));
        }
        if self.eta > TICKS_PER_SC_ROUND {
            return Err(SimError::Config(format!(
                "takeover timeout eta={} exceeds one sidechain round ({} ticks)",
                self.eta, TICKS_PER_SC_ROUND
            )));
        }
        if self.t_agr + self.delta >= TICKS_PER_SC_ROUND {
            return Err(SimError::Config(
                "agreement plus message delay must fit inside one sidechain round".into(),
            ));
        }
        let seats = (self.kappa as u64 + 1) * self.committee_size as u64;
        if seats > self.nodes as u64 {
            return Err(SimError::Config(format!(
                "{} committee seats cannot be filled disjointly from {} nodes",
                seats, self.nodes
            )));
        }
        if !(0.0..=1.0).contains(&self.payment_quota) {
            return Err(SimError::Config("payment quota must lie in [0, 1]".into()));
        }
        if self.run_len_mc_rounds == 0 {
            return Err(SimError::Config("run length must be at least 1 round".into()));
        }
        if self.k_conf == 0 {
            return Err(SimError::Config("confirmation depth must be positive".into()));
        }
        if self.time.sc_rounds_per_mc == 0 || self.time.mc_rounds_per_epoch == 0 {
            return Err(SimError::Config("time base must be positive".into()));
        }
        if self.mc_block_bytes < 512 || self.sc_block_bytes < 512 {
            return Err(SimError::Config("block capacity below minimum".into()));
        }
        for rb in &self.rollbacks {
            if rb.depth == 0 || rb.depth > self.k_conf {
                return Err(SimError::Config(format!(
                    "rollback depth {} outside 1..=k_conf={}",
                    rb.depth, self.k_conf
                )));
            }
            if rb.mc_round == 0 || rb.mc_round > self.run_len_mc_rounds {
                return Err(SimError::Config(format!(
                    "rollback round {} outside the scripted run",
                    rb.mc_round
                )));
            }
            if self.mode == Mode::OpBoost {
                return Err(SimError::Config(
                    "rollback injection is not modeled for the rollup baseline".into(),
                ));
            }
        }
        Ok(th)
    }
}

// ---------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Sidechain(#[from] SidechainError),
    #[error(transparent)]
    Sortition(#[from] SortitionError),
    #[error(transparent)]
    Rollback(#[from] RollbackError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

// ---------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------

/// Which ledger confirmed a transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConfirmClass {
    Main,
    Side,
    Rollup,
}

/// Streaming integer-latency aggregate.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct LatencySummary {
    pub count: u64,
    pub mean_mc_rounds: f64,
    pub max_mc_rounds: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct LatencyStat {
    sum: i128,
    count: u64,
    max: u64,
}

impl LatencyStat {
    fn record(&mut self, lat: u64) {
        self.sum += lat as i128;
        self.count += 1;
        self.max = self.max.max(lat);
    }

    fn unrecord(&mut self, lat: u64) {
        self.sum -= lat as i128;
        self.count -= 1;
        // `max` stays a high-water mark; rollbacks cannot lower it.
    }

    fn summary(&self) -> LatencySummary {
        LatencySummary {
            count: self.count,
            mean_mc_rounds: if self.count == 0 {
                0.0
            } else {
                self.sum as f64 / self.count as f64
            },
            max_mc_rounds: self.max,
        }
    }
}

/// Stable per-kind counter index (order matches `KIND_NAMES`).
const KIND_NAMES: [&str; 9] = [
    "ContractPropose",
    "Offer",
    "AgreementCommit",
    "ServiceProof",
    "ServicePayment",
    "Dispute",
    "Transfer",
    "Sync",
    "MassSync",
];

fn kind_index(kind: TxKind) -> usize {
    match kind {
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

#[derive(Debug, Default)]
struct Metrics {
    per_round_confirmed: BTreeMap<u64, u64>,
    confirmed_by_kind: [u64; 9],
    confirmed: Vec<bool>,
    confirmed_total: u64,
    lat_main: LatencyStat,
    lat_side: LatencyStat,
    lat_rollup: LatencyStat,
    serviced_per_round: Vec<u64>,
    af_epochs: Vec<u64>,
    takeovers: Vec<TakeoverEvent>,
    leader_changes: u64,
    slots_lost: u64,
    syncs_applied: u64,
    mass_syncs_applied: u64,
    syncs_rejected: u64,
    stale_syncs_discarded: u64,
    rollbacks_injected: u64,
    rolled_back_txs: u64,
    prune_blocks: u64,
    prune_bytes: u64,
    opboost_batches: u64,
}

impl Metrics {
    fn stat_mut(&mut self, class: ConfirmClass) -> &mut LatencyStat {
        match class {
            ConfirmClass::Main => &mut self.lat_main,
            ConfirmClass::Side => &mut self.lat_side,
            ConfirmClass::Rollup => &mut self.lat_rollup,
        }
    }

    fn confirm(&mut self, tx: &Transaction, published_round: u64, class: ConfirmClass) {
        debug_assert!(published_round >= tx.created_at_round);
        let lat = published_round - tx.created_at_round;
        *self.per_round_confirmed.entry(published_round).or_default() += 1;
        self.confirmed_by_kind[kind_index(tx.kind)] += 1;
        let idx = tx.id as usize;
        if self.confirmed.len() <= idx {
            self.confirmed.resize(idx + 1, false);
        }
        debug_assert!(!self.confirmed[idx], "transaction confirmed twice");
        self.confirmed[idx] = true;
        self.confirmed_total += 1;
        self.stat_mut(class).record(lat);
    }

    fn unconfirm(&mut self, tx: &Transaction, published_round: u64, class: ConfirmClass) {
        let lat = published_round - tx.created_at_round;
        *self.per_round_confirmed.entry(published_round).or_default() -= 1;
        self.confirmed_by_kind[kind_index(tx.kind)] -= 1;
        let idx = tx.id as usize;
        debug_assert!(self.confirmed[idx], "rolled back an unconfirmed transaction");
        self.confirmed[idx] = false;
        self.confirmed_total -= 1;
        self.stat_mut(class).unrecord(lat);
        self.rolled_back_txs += 1;
    }
}

// ---------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ChainBytes {
    pub main_blocks: u64,
    pub main_bytes: u64,
    pub side_blocks: u64,
    pub side_bytes: u64,
    /// Bytes dropped from pruned meta-block payloads.
    pub side_bytes_pruned: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct EscrowReport {
    pub funded: u64,
    pub dispensed: u64,
    pub outstanding: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct SyncReport {
    pub applied: u64,
    pub mass_syncs: u64,
    pub rejected: u64,
    pub stale_discarded: u64,
    pub covered_epochs: Vec<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct CommitteeReport {
    pub autorecovery_failures: Vec<u64>,
    pub takeovers: Vec<TakeoverEvent>,
    pub leader_changes: u64,
    pub slots_lost: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct OpBoostReport {
    pub batches: u64,
    /// Mean rounds from creation to the batch's state update landing.
    pub processing_mean_mc_rounds: f64,
    /// Processing plus the contestation window.
    pub finality_mean_mc_rounds: f64,
}

/// Everything a run produces; serialization is byte-stable for a fixed
/// `(config, seed)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub rounds_scripted: u64,
    pub rounds_total: u64,
    /// Confirmed transactions (both chains) per scripted round.
    pub throughput_per_mc_round: f64,
    pub window_confirmed_txs: u64,
    pub total_confirmed_txs: u64,
    pub total_generated_txs: u64,
    pub latency_main: LatencySummary,
    pub latency_side: LatencySummary,
    pub latency_rollup: LatencySummary,
    /// Rounds from transaction creation to user-visible finality for the
    /// mode's service path: mainchain publication (Base), meta-block
    /// publication (ChainBoost), or contested batch (OpBoost).
    pub finality_mc_rounds: f64,
    pub serviced_contracts_mean: f64,
    pub chain: ChainBytes,
    pub committees: CommitteeReport,
    pub sync: SyncReport,
    pub escrow: EscrowReport,
    pub rollbacks_injected: u64,
    pub rolled_back_txs: u64,
    pub summary_state: SummaryState,
    pub opboost: Option<OpBoostReport>,
    pub confirmed_by_kind: BTreeMap<String, u64>,
    pub per_round_confirmed: BTreeMap<u64, u64>,
}

// ---------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------

struct Simulation {
    cfg: RunConfig,
    th: Thresholds,
    time: TimeBase,
    mc: MainchainState,
    sc: Option<SidechainState>,
    op: Option<OpBoostState>,
    /// Rollup batches waiting out the processing delay, keyed by the
    /// round their state update lands.
    op_pending: BTreeMap<u64, Vec<Transaction>>,
    workload: Workload,
    metrics: Metrics,
    next_tx_id: u64,
    rollback_at: BTreeMap<u64, u64>,
    // Epoch-scoped committee state.
    current_epoch: Option<u64>,
    committees: Option<EpochCommittees>,
    active_rank: u32,
    leader_cursor: u32,
    rank_misbehaving: Vec<u32>,
    malicious: BTreeSet<NodeId>,
    epoch_failed: bool,
    epoch_had_takeover: bool,
    pending_lc_records: Vec<LeaderChangeRecord>,
    pending_takeover_records: Vec<TakeoverRecord>,
    /// Global production cursor: no sidechain action starts before it.
    cursor_tick: u64,
    delay_draws: u64,
}

/// Run one simulation to completion.
pub fn run(cfg: RunConfig) -> Result<RunReport, SimError> {
    let th = cfg.validate()?;
    let mut sim = Simulation::new(cfg, th);
    let scripted = sim.cfg.run_len_mc_rounds;
    let mut round = 1u64;
    while round <= scripted {
        sim.step_round(round, true)?;
        round += 1;
    }

    // Drain whatever the scripted phase left queued.
    let drain_cap = scripted.saturating_mul(400) + 50_000;
    while !sim.queues_empty() {
        if round > drain_cap {
            return Err(SimError::Invariant(
                "queue drain did not terminate".into(),
            ));
        }
        sim.step_round(round, false)?;
        round += 1;
    }

    if sim.cfg.mode == Mode::ChainBoost {
        // Keep going to an epoch boundary with every content-bearing
        // epoch covered (a late or rolled-back sync needs the next
        // epoch's mass-sync), then let the final sync get buried so the
        // last prune pass can run.
        let omega = sim.time.mc_rounds_per_epoch as u64;
        loop {
            let at_boundary = (round - 1) % omega == 0;
            if at_boundary && sim.uncovered_content_epochs().is_empty() && sim.queues_empty() {
                break;
            }
            if round > drain_cap + 40 * omega {
                return Err(SimError::Invariant(
                    "epoch coverage did not converge after the scripted run".into(),
                ));
            }
            sim.step_round(round, false)?;
            round += 1;
        }
        for _ in 0..sim.cfg.k_conf {
            sim.step_round(round, false)?;
            round += 1;
        }
    }

    sim.finalize(round - 1)
}

impl Simulation {
    fn new(cfg: RunConfig, th: Thresholds) -> Self {
        let power: BTreeMap<NodeId, u64> = (0..cfg.nodes).map(|n| (NodeId(n), 1)).collect();
        let mut mc = MainchainState::new(cfg.k_conf, cfg.payment_quota, power);
        let workload = Workload::init(
            cfg.workload.clone(),
            cfg.nodes,
            stream_rng(cfg.seed, "workload", 0),
            &mut mc,
        );
        let sc = (cfg.mode == Mode::ChainBoost).then(|| {
            SidechainState::new(
                cfg.k_conf,
                mc.ledger.hash_at(0).expect("genesis exists"),
                cfg.sc_block_bytes,
            )
        });
        let op = (cfg.mode == Mode::OpBoost).then(OpBoostState::default);
        let rollback_at = cfg
            .rollbacks
            .iter()
            .map(|rb| (rb.mc_round, rb.depth))
            .collect();
        let next_tx_id = workload.generated_txs;
        Simulation {
            time: cfg.time,
            th,
            mc,
            sc,
            op,
            op_pending: BTreeMap::new(),
            workload,
            metrics: Metrics::default(),
            next_tx_id,
            rollback_at,
            current_epoch: None,
            committees: None,
            active_rank: 0,
            leader_cursor: 0,
            rank_misbehaving: Vec::new(),
            malicious: BTreeSet::new(),
            epoch_failed: false,
            epoch_had_takeover: false,
            pending_lc_records: Vec::new(),
            pending_takeover_records: Vec::new(),
            cursor_tick: 0,
            delay_draws: 0,
            cfg,
        }
    }

    fn queues_empty(&self) -> bool {
        self.mc.pending_other.is_empty()
            && self.mc.pending_payments.is_empty()
            && self.mc.sync_queue.is_empty()
            && self.sc.as_ref().is_none_or(|s| s.pending.is_empty())
            && self.op.as_ref().is_none_or(|o| o.pending.is_empty())
            && self.op_pending.is_empty()
    }

    /// Epochs whose sidechain state has not reached the mainchain:
    /// anything that published a summary, or meta-blocks actually
    /// carrying traffic. Trailing epochs of empty liveness blocks hold
    /// no market state and are not waited on.
    fn uncovered_content_epochs(&self) -> Vec<u64> {
        let Some(sc) = self.sc.as_ref() else {
            return Vec::new();
        };
        let mut out: BTreeSet<u64> = BTreeSet::new();
        for (e, heights) in &sc.epoch_meta_heights {
            if self.mc.covered_epochs.contains(e) {
                continue;
            }
            let has_content = heights.iter().any(|h| {
                sc.ledger
                    .block_at(*h)
                    .map(|b| !b.txs().is_empty())
                    .unwrap_or(false)
            });
            if has_content {
                out.insert(*e);
            }
        }
        for e in sc.summary_index.keys() {
            if !self.mc.covered_epochs.contains(e) {
                out.insert(*e);
            }
        }
        out.into_iter().collect()
    }

    fn msg_delay(&mut self) -> u64 {
        if self.cfg.delta == 0 {
            return 0;
        }
        let mut rng = stream_rng(self.cfg.seed, "msg-delay", self.delay_draws);
        self.delay_draws += 1;
        rng.random_range(0..=self.cfg.delta)
    }

    // -- epoch management ------------------------------------------------

    fn begin_epoch(&mut self, epoch: u64) -> Result<(), SimError> {
        let mut rng = stream_rng(self.cfg.seed, "election", epoch);
        let committees = elect_committees(
            &self.mc.ledger,
            epoch,
            self.cfg.nodes,
            self.cfg.kappa,
            self.th,
            self.cfg.election,
            &mut rng,
        )?;

        self.malicious = match self.cfg.faults.random {
            Some(rf) => {
                let mut pool: Vec<NodeId> = (0..self.cfg.nodes).map(NodeId).collect();
                let mut mis_rng = stream_rng(self.cfg.seed, "misbehavior", epoch);
                let (chosen, _) = pool.partial_shuffle(&mut mis_rng, rf.misbehaving as usize);
                chosen.iter().copied().collect()
            }
            None => BTreeSet::new(),
        };

        let mut rank_misbehaving: Vec<u32> = committees
            .committees
            .iter()
            .map(|c| {
                c.members
                    .iter()
                    .filter(|m| self.malicious.contains(m))
                    .count() as u32
            })
            .collect();
        // Committee-wide scripted faults make the whole rank
        // non-functional for the epoch.
        for (rank, mis) in rank_misbehaving.iter_mut().enumerate() {
            for fault in self.cfg.faults.faults_for(epoch, rank as u32) {
                if matches!(
                    fault,
                    FaultKind::UnresponsiveCommittee | FaultKind::StalledLeaderChange
                ) {
                    *mis = (*mis).max(self.th.theta_weak);
                }
            }
        }

        self.committees = Some(committees);
        self.rank_misbehaving = rank_misbehaving;
        self.active_rank = 0;
        self.leader_cursor = 0;
        self.epoch_failed = false;
        self.epoch_had_takeover = false;
        self.current_epoch = Some(epoch);
        Ok(())
    }

    fn acting_committee(&self) -> Committee {
        self.committees.as_ref().expect("epoch started").committees[self.active_rank as usize]
            .clone()
    }

    fn has_fault(&self, epoch: u64, fault: FaultKind) -> bool {
        self.cfg
            .faults
            .faults_for(epoch, self.active_rank)
            .any(|f| f == fault)
    }

    /// Escalate past the failed acting committee. Returns the recovery
    /// tick, or `None` when no functional standby remains and the epoch
    /// is abandoned (autorecovery failure).
    fn ladder_takeover(
        &mut self,
        epoch: u64,
        cause: TakeoverCause,
        stall_tick: u64,
    ) -> Option<u64> {
        let from = self.active_rank;
        let above = &self.rank_misbehaving[from as usize + 1..];
        match first_functional_rank(above, self.th.theta_weak) {
            None => {
                self.epoch_failed = true;
                self.metrics.af_epochs.push(epoch);
                None
            }
            Some(i) => {
                // Ladder position counted from the failing committee:
                // the standby at position j waits j * eta of silence.
                let jump = i + 1;
                let new_rank = from + jump;
                let recovery = takeover_completion_tick(stall_tick, jump, self.cfg.eta, self.cfg.t_agr);
                self.metrics.takeovers.push(TakeoverEvent {
                    epoch,
                    failing_rank: from,
                    new_rank,
                    cause,
                    detection_tick: stall_tick,
                    recovery_tick: recovery,
                });
                self.pending_takeover_records.push(TakeoverRecord {
                    epoch,
                    failed_ranks: jump,
                    new_rank,
                    takeover_tick: recovery,
                });
                self.active_rank = new_rank;
                self.leader_cursor = 0;
                self.epoch_had_takeover = true;
                Some(recovery)
            }
        }
    }

    /// Rotate leaders until an honest candidate fronts the committee.
    /// Returns the updated attempt tick, or `None` if the committee
    /// cannot change leaders (stalled; caller escalates).
    fn rotate_to_honest_leader(
        &mut self,
        committee: &Committee,
        epoch: u64,
        slot: u32,
        mut attempt: u64,
    ) -> Option<u64> {
        let cs = committee.members.len();
        for _ in 0..cs {
            let leader = committee.leader_order[self.leader_cursor as usize % cs];
            let scripted_silent = self.leader_cursor == 0
                && self.has_fault(epoch, FaultKind::UnresponsiveLeader);
            if !scripted_silent && !self.malicious.contains(&leader) {
                return Some(attempt);
            }
            let next = committee.leader_order[(self.leader_cursor as usize + 1) % cs];
            let conducts: Vec<Conduct> = committee
                .members
                .iter()
                .map(|m| {
                    if *m == leader {
                        Conduct::Abstain
                    } else {
                        Conduct::Honest
                    }
                })
                .collect();
            match leader_change(
                &committee.members,
                &conducts,
                leader,
                next,
                epoch,
                slot,
                &self.th,
            ) {
                LeaderChangeOutcome::NewLeader { certificate } => {
                    self.pending_lc_records.push(certificate.record);
                    self.metrics.leader_changes += 1;
                    self.leader_cursor += 1;
                    attempt += self.cfg.zeta + self.cfg.t_agr;
                }
                LeaderChangeOutcome::Stalled => return None,
            }
        }
        Some(attempt)
    }

    /// Agreement by a functional committee over a valid proposal:
    /// honest members vote, scripted misbehavers abstain, quorum holds
    /// because fewer than `theta_weak` seats misbehave.
    fn commit_valid(
        &self,
        committee: &Committee,
        epoch: u64,
        slot: u32,
    ) -> Result<crate::consensus::AgreementCertificate, SimError> {
        let conducts: Vec<Conduct> = committee
            .members
            .iter()
            .map(|m| {
                if self.malicious.contains(m) {
                    Conduct::Abstain
                } else {
                    Conduct::Honest
                }
            })
            .collect();
        match run_agreement(&committee.members, &conducts, true, epoch, slot, &self.th) {
            AgreementOutcome::Committed(cert) => Ok(cert),
            other => Err(SimError::Invariant(format!(
                "functional committee failed to commit a valid proposal: {other:?}"
            ))),
        }
    }

    /// A Byzantine quorum certifying an invalid proposal — the evidence
    /// backups react to.
    fn malicious_commit(&self, committee: &Committee, epoch: u64, slot: u32) {
        let conducts: Vec<Conduct> = committee
            .members
            .iter()
            .enumerate()
            .map(|(i, _)| {
                if (i as u32) < self.th.theta_strong {
                    Conduct::VoteAny
                } else {
                    Conduct::Abstain
                }
            })
            .collect();
        let outcome = run_agreement(&committee.members, &conducts, false, epoch, slot, &self.th);
        debug_assert!(matches!(outcome, AgreementOutcome::MaliciousCommit(_)));
    }

    // -- sidechain slot machine -------------------------------------------

    fn run_slot(&mut self, epoch: u64, slot: u32) -> Result<(), SimError> {
        if self.epoch_failed {
            return Ok(());
        }
        let due = self.time.sc_slot_due_tick(epoch, slot);
        let deadline = due + TICKS_PER_SC_ROUND;
        let is_summary = self.time.is_summary_slot(slot);
        let mut attempt = due.max(self.cursor_tick);
        if !is_summary && attempt >= deadline {
            self.metrics.slots_lost += 1;
            return Ok(());
        }

        loop {
            // A committee seating theta_weak or more misbehaving members
            // cannot make progress; standbys detect the silence.
            if self.rank_misbehaving[self.active_rank as usize] >= self.th.theta_weak {
                match self.ladder_takeover(epoch, TakeoverCause::LackOfProgress, attempt) {
                    None => return Ok(()),
                    Some(recovery) => {
                        self.cursor_tick = recovery;
                        attempt = due.max(recovery);
                        if !is_summary && attempt >= deadline {
                            self.metrics.slots_lost += 1;
                            return Ok(());
                        }
                        continue;
                    }
                }
            }

            let committee = self.acting_committee();
            attempt = match self.rotate_to_honest_leader(&committee, epoch, slot, attempt) {
                Some(t) => t,
                None => {
                    // Leader change could not certify: lack of progress.
                    match self.ladder_takeover(epoch, TakeoverCause::LackOfProgress, attempt) {
                        None => return Ok(()),
                        Some(recovery) => {
                            self.cursor_tick = recovery;
                            attempt = due.max(recovery);
                            if !is_summary && attempt >= deadline {
                                self.metrics.slots_lost += 1;
                                return Ok(());
                            }
                            continue;
                        }
                    }
                }
            };
            if !is_summary && attempt >= deadline {
                self.metrics.slots_lost += 1;
                return Ok(());
            }

            if is_summary {
                return self.run_summary_slot(epoch, slot, &committee, attempt);
            }

            // Scripted invalid meta-block: the Byzantine quorum commits
            // it, standbys spot the invalid publication and take over.
            if self.has_fault(epoch, FaultKind::InvalidMetaProposal { sc_round: slot }) {
                let leader = committee.leader_order[self.leader_cursor as usize
                    % committee.members.len()];
                let sc = self.sc.as_mut().expect("sidechain mode");
                let block = sc.propose_meta_block(epoch, slot, leader);
                let drained = block.txs().to_vec();
                sc.requeue_front(drained);
                self.malicious_commit(&committee, epoch, slot);
                let publish = attempt + self.cfg.t_agr;
                match self.ladder_takeover(epoch, TakeoverCause::InvalidBlock, publish) {
                    None => return Ok(()),
                    Some(recovery) => {
                        self.cursor_tick = recovery;
                        attempt = due.max(recovery);
                        if attempt >= deadline {
                            self.metrics.slots_lost += 1;
                            return Ok(());
                        }
                        continue;
                    }
                }
            }

            // Healthy meta-block.
            let leader =
                committee.leader_order[self.leader_cursor as usize % committee.members.len()];
            let cert = self.commit_valid(&committee, epoch, slot)?;
            let publish = attempt + self.cfg.t_agr + self.msg_delay();
            let sc = self.sc.as_mut().expect("sidechain mode");
            let mut block = sc.propose_meta_block(epoch, slot, leader);
            block.certificate = Some(cert);
            let confirmed: Vec<Transaction> = block.txs().to_vec();
            sc.push_meta(block)?;
            let publish_round = self.time.mc_round_of_tick(publish);
            let ids: Vec<u64> = confirmed.iter().map(|t| t.id).collect();
            for tx in &confirmed {
                self.metrics.confirm(tx, publish_round, ConfirmClass::Side);
            }
            self.workload.on_confirmed(&ids, publish_round);
            self.cursor_tick = publish;
            return Ok(());
        }
    }

    fn run_summary_slot(
        &mut self,
        epoch: u64,
        slot: u32,
        committee: &Committee,
        attempt: u64,
    ) -> Result<(), SimError> {
        // Scripted invalid summary-block, same shape as an invalid meta.
        if self.has_fault(epoch, FaultKind::InvalidSummaryProposal) {
            self.malicious_commit(committee, epoch, slot);
            let publish = attempt + self.cfg.t_agr;
            match self.ladder_takeover(epoch, TakeoverCause::InvalidBlock, publish) {
                None => return Ok(()),
                Some(recovery) => {
                    self.cursor_tick = recovery;
                    let committee = self.acting_committee();
                    let attempt = recovery.max(self.time.sc_slot_due_tick(epoch, slot));
                    return self.run_summary_slot(epoch, slot, &committee, attempt);
                }
            }
        }

        let leader = committee.leader_order[self.leader_cursor as usize % committee.members.len()];

        // Epochs whose state still needs to reach the mainchain: the
        // current epoch plus anything uncovered (autorecovery gaps,
        // rolled-back syncs).
        let mut want: BTreeSet<u64> = self
            .sc
            .as_ref()
            .expect("sidechain mode")
            .epoch_meta_heights
            .keys()
            .filter(|e| **e <= epoch)
            .copied()
            .collect();
        want.insert(epoch);
        want.retain(|e| !self.mc.covered_epochs.contains(e));
        let want: Vec<u64> = want.into_iter().collect();

        // Produce any missing summary-blocks, oldest first; the current
        // epoch's summary carries the leader-change and takeover
        // records accumulated since the last one.
        for e in &want {
            if self.sc.as_ref().expect("sidechain mode").summary_index.contains_key(e) {
                continue;
            }
            let (extra_lc, extra_to) = if *e == epoch {
                (
                    std::mem::take(&mut self.pending_lc_records),
                    std::mem::take(&mut self.pending_takeover_records),
                )
            } else {
                (Vec::new(), Vec::new())
            };
            let cert = self.commit_valid(committee, *e, slot)?;
            let sc = self.sc.as_mut().expect("sidechain mode");
            let mut block = sc.propose_summary_block(*e, slot, leader, extra_lc, extra_to)?;
            block.certificate = Some(cert);
            sc.push_summary(block)?;
        }

        let publish = attempt + self.cfg.t_agr + self.msg_delay();
        self.cursor_tick = publish;

        if self.has_fault(epoch, FaultKind::MissedSync) {
            // The acting committee never issues its sync; standbys
            // notice the lack of progress and the takeover committee
            // issues an attested one.
            match self.ladder_takeover(epoch, TakeoverCause::LackOfProgress, publish) {
                None => return Ok(()), // covered by the next epoch's mass-sync
                Some(recovery) => {
                    let round = self.time.mc_round_of_tick(recovery);
                    let id = self.next_tx_id;
                    self.next_tx_id += 1;
                    let tx = self
                        .sc
                        .as_ref()
                        .expect("sidechain mode")
                        .create_sync_transaction(&want, true, id, round)?;
                    self.mc.enqueue_sync(tx, recovery);
                    self.cursor_tick = recovery;
                }
            }
            return Ok(());
        }

        if self.has_fault(epoch, FaultKind::InvalidSync) {
            // Tampered sync enters the queue; standbys verify it against
            // the sidechain, take over, and race in a correct attested
            // sync that displaces it.
            let id = self.next_tx_id;
            self.next_tx_id += 1;
            let round = self.time.mc_round_of_tick(publish);
            let mut tx = self
                .sc
                .as_ref()
                .expect("sidechain mode")
                .create_sync_transaction(&want, false, id, round)?;
            if let TxPayload::Sync(payload) = &mut tx.payload {
                *payload.state.proof_counts.entry(u64::MAX).or_default() += 1;
            }
            self.mc.enqueue_sync(tx, publish);
            match self.ladder_takeover(epoch, TakeoverCause::InvalidSync, publish) {
                None => return Ok(()), // rejected on apply; mass-sync later
                Some(recovery) => {
                    let round = self.time.mc_round_of_tick(recovery);
                    let id = self.next_tx_id;
                    self.next_tx_id += 1;
                    let good = self
                        .sc
                        .as_ref()
                        .expect("sidechain mode")
                        .create_sync_transaction(&want, true, id, round)?;
                    self.mc.enqueue_sync(good, recovery);
                    self.cursor_tick = recovery;
                }
            }
            return Ok(());
        }

        let id = self.next_tx_id;
        self.next_tx_id += 1;
        let round = self.time.mc_round_of_tick(publish);
        let tx = self
            .sc
            .as_ref()
            .expect("sidechain mode")
            .create_sync_transaction(&want, self.epoch_had_takeover, id, round)?;
        self.mc.enqueue_sync(tx, publish);
        Ok(())
    }

    // -- round pipeline ---------------------------------------------------

    fn route(&mut self, tx: Transaction) {
        match (self.cfg.mode, tx.kind) {
            (Mode::ChainBoost, TxKind::ServiceProof | TxKind::Dispute) => {
                self.sc.as_mut().expect("sidechain mode").enqueue(tx);
            }
            (Mode::OpBoost, TxKind::ServiceProof | TxKind::Dispute) => {
                self.op.as_mut().expect("rollup mode").enqueue([tx]);
            }
            _ => self.mc.enqueue(tx),
        }
    }

    fn step_round(&mut self, round: u64, scripted: bool) -> Result<(), SimError> {
        let epoch = self.time.epoch_of_mc_round(round);
        if self.cfg.mode == Mode::ChainBoost && self.current_epoch != Some(epoch) {
            self.begin_epoch(epoch)?;
        }

        if scripted {
            let txs =
                self.workload
                    .generate_round_traffic(round, &mut self.next_tx_id, &mut self.mc);
            self.metrics.serviced_per_round.push(self.workload.active_count());
            for tx in txs {
                self.route(tx);
            }
        }

        if self.cfg.mode == Mode::ChainBoost {
            let spm = self.time.sc_rounds_per_mc;
            let first = ((round - 1) % self.time.mc_rounds_per_epoch as u64) as u32 * spm;
            for slot in first..first + spm {
                self.run_slot(epoch, slot)?;
            }
        }

        if self.cfg.mode == Mode::OpBoost {
            let op = self.op.as_mut().expect("rollup mode");
            let batch = op.run_round(round);
            if !batch.txs.is_empty() {
                let lands = batch.inclusion_round + op.batch_delay_rounds;
                self.metrics.opboost_batches += 1;
                self.op_pending.entry(lands).or_default().extend(batch.txs);
            }
            if let Some(txs) = self.op_pending.remove(&round) {
                let ids: Vec<u64> = txs.iter().map(|t| t.id).collect();
                for tx in &txs {
                    self.metrics.confirm(tx, round, ConfirmClass::Rollup);
                }
                self.workload.on_confirmed(&ids, round);
            }
        }

        // Mainchain block at the round's end tick.
        let now = self.time.mc_round_end_tick(round);
        let seed = sortition_seed(&self.mc.ledger.tip_hash(), round);
        let proposer = select_round_leader(&self.mc.mining_power, &seed)?;
        let round_in_epoch = ((round - 1) % self.time.mc_rounds_per_epoch as u64) as u32;
        let (block, stale) =
            self.mc
                .assemble_block(epoch, round_in_epoch, proposer, self.cfg.mc_block_bytes, now);
        self.metrics.stale_syncs_discarded += stale.len() as u64;
        let height = block.height;
        let confirmed: Vec<Transaction> = block.txs().to_vec();
        self.mc.ledger.push(block)?;

        let ids: Vec<u64> = confirmed.iter().map(|t| t.id).collect();
        for tx in &confirmed {
            self.metrics.confirm(tx, round, ConfirmClass::Main);
        }
        for tx in &confirmed {
            if !tx.kind.is_sync() {
                continue;
            }
            let verified = self
                .sc
                .as_ref()
                .map(|s| s.verify_sync_transaction(tx))
                .unwrap_or(false);
            let dispense = self.cfg.workload.modality == PaymentModality::EpochEnd;
            match self.mc.apply_sync_transaction(
                tx,
                verified,
                height,
                round,
                dispense,
                &mut self.next_tx_id,
            ) {
                Ok(_) => {
                    self.metrics.syncs_applied += 1;
                    if tx.kind == TxKind::MassSync {
                        self.metrics.mass_syncs_applied += 1;
                    }
                }
                Err(_) => self.metrics.syncs_rejected += 1,
            }
        }
        self.workload.on_confirmed(&ids, round);

        if scripted {
            if let Some(depth) = self.rollback_at.get(&round).copied() {
                let event = self.mc.inject_rollback(depth)?;
                self.metrics.rollbacks_injected += 1;
                for popped in &event.blocks {
                    let popped_round = popped.epoch * self.time.mc_rounds_per_epoch as u64
                        + popped.round_in_epoch as u64
                        + 1;
                    for tx in popped.txs() {
                        self.metrics.unconfirm(tx, popped_round, ConfirmClass::Main);
                    }
                }
            }
        }

        if self.cfg.mode == Mode::ChainBoost {
            let buried: BTreeSet<u64> = self
                .mc
                .epoch_sync_height
                .iter()
                .filter(|(_, h)| self.mc.ledger.is_buried(**h))
                .map(|(e, _)| *e)
                .collect();
            if !buried.is_empty() {
                let report = self.sc.as_mut().expect("sidechain mode").prune(&buried);
                self.metrics.prune_blocks += report.blocks_pruned;
                self.metrics.prune_bytes += report.bytes_freed;
            }
        }
        Ok(())
    }

    // -- report -----------------------------------------------------------

    fn finalize(self, rounds_total: u64) -> Result<RunReport, SimError> {
        let window = self.cfg.run_len_mc_rounds.min(rounds_total);
        let window_confirmed: u64 = self
            .metrics
            .per_round_confirmed
            .range(1..=window)
            .map(|(_, n)| *n)
            .sum();
        let total_by_round: u64 = self.metrics.per_round_confirmed.values().sum();
        if total_by_round != self.metrics.confirmed_total {
            return Err(SimError::Invariant(format!(
                "per-round totals {} disagree with confirmed count {}",
                total_by_round, self.metrics.confirmed_total
            )));
        }
        let bit_count = self.metrics.confirmed.iter().filter(|b| **b).count() as u64;
        if bit_count != self.metrics.confirmed_total {
            return Err(SimError::Invariant(
                "confirmed-id set disagrees with confirmed count".into(),
            ));
        }
        let class_sum =
            self.metrics.lat_main.count + self.metrics.lat_side.count + self.metrics.lat_rollup.count;
        if class_sum != self.metrics.confirmed_total {
            return Err(SimError::Invariant(
                "latency class counts disagree with confirmed count".into(),
            ));
        }

        let outstanding: u64 = self.mc.escrows.values().map(|a| a.remaining).sum();
        if self.mc.total_funded != self.mc.total_dispensed + outstanding {
            return Err(SimError::Invariant(format!(
                "escrow books do not balance: funded {} != dispensed {} + outstanding {}",
                self.mc.total_funded, self.mc.total_dispensed, outstanding
            )));
        }

        if self.cfg.mode == Mode::ChainBoost {
            let uncovered = self.uncovered_content_epochs();
            if !uncovered.is_empty() {
                return Err(SimError::Invariant(format!(
                    "sidechain epochs never reached the mainchain: {uncovered:?}"
                )));
            }
        }

        let lat_main = self.metrics.lat_main.summary();
        let lat_side = self.metrics.lat_side.summary();
        let lat_rollup = self.metrics.lat_rollup.summary();
        let opboost = self.op.as_ref().map(|op| OpBoostReport {
            batches: self.metrics.opboost_batches,
            processing_mean_mc_rounds: lat_rollup.mean_mc_rounds,
            finality_mean_mc_rounds: lat_rollup.mean_mc_rounds + op.contestation_rounds as f64,
        });
        let finality = match self.cfg.mode {
            Mode::Base => lat_main.mean_mc_rounds,
            Mode::ChainBoost => lat_side.mean_mc_rounds,
            Mode::OpBoost => opboost.as_ref().expect("rollup mode").finality_mean_mc_rounds,
        };
        let serviced_mean = if self.metrics.serviced_per_round.is_empty() {
            0.0
        } else {
            self.metrics.serviced_per_round.iter().sum::<u64>() as f64
                / self.metrics.serviced_per_round.len() as f64
        };

        let side = self.sc.as_ref();
        Ok(RunReport {
            rounds_scripted: self.cfg.run_len_mc_rounds,
            rounds_total,
            throughput_per_mc_round: window_confirmed as f64 / window as f64,
            window_confirmed_txs: window_confirmed,
            total_confirmed_txs: self.metrics.confirmed_total,
            total_generated_txs: self.next_tx_id,
            latency_main: lat_main,
            latency_side: lat_side,
            latency_rollup: lat_rollup,
            finality_mc_rounds: finality,
            serviced_contracts_mean: serviced_mean,
            chain: ChainBytes {
                main_blocks: self.mc.ledger.tip_height(),
                main_bytes: self.mc.ledger.total_stored_bytes(),
                side_blocks: side.map(|s| s.ledger.tip_height()).unwrap_or(0),
                side_bytes: side.map(|s| s.ledger.total_stored_bytes()).unwrap_or(0),
                side_bytes_pruned: self.metrics.prune_bytes,
            },
            committees: CommitteeReport {
                autorecovery_failures: self.metrics.af_epochs,
                takeovers: self.metrics.takeovers,
                leader_changes: self.metrics.leader_changes,
                slots_lost: self.metrics.slots_lost,
            },
            sync: SyncReport {
                applied: self.metrics.syncs_applied,
                mass_syncs: self.metrics.mass_syncs_applied,
                rejected: self.metrics.syncs_rejected,
                stale_discarded: self.metrics.stale_syncs_discarded,
                covered_epochs: self.mc.covered_epochs.iter().copied().collect(),
            },
            escrow: EscrowReport {
                funded: self.mc.total_funded,
                dispensed: self.mc.total_dispensed,
                outstanding,
            },
            rollbacks_injected: self.metrics.rollbacks_injected,
            rolled_back_txs: self.metrics.rolled_back_txs,
            summary_state: self.mc.summary_variables.clone(),
            opboost,
            confirmed_by_kind: KIND_NAMES
                .iter()
                .zip(self.metrics.confirmed_by_kind)
                .filter(|(_, n)| *n > 0)
                .map(|(name, n)| (name.to_string(), n))
                .collect(),
            per_round_confirmed: self.metrics.per_round_confirmed,
            config: self.cfg,
        })
    }
}
