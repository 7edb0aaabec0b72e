//! Committee election and the autorecovery kernels.
//!
//! Each epoch elects `kappa + 1` pairwise-disjoint committees: rank 0
//! produces sidechain blocks, ranks 1.. monitor it as standby backups.
//! Election reads only the buried portion of the mainchain, which makes
//! the result immune to rollbacks of unconfirmed blocks.
//!
//! When the acting committee stalls or misbehaves, the first functional
//! backup (fewer than `theta_weak` misbehaving members) takes over after
//! `i * eta + t_agr` ticks, where `i` is its position in the remaining
//! ladder; the failed prefix is dropped and ranks shift down.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::TICKS_PER_SC_ROUND;
use crate::consensus::Thresholds;
use crate::ledger::Ledger;
use crate::types::{tx_hash, NodeId, Transaction};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ElectionError {
    #[error("population {population} cannot seat {committees} disjoint committees of {cs}")]
    PopulationTooSmall {
        population: u32,
        committees: u32,
        cs: u32,
    },
}

/// How committee seats are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElectionMethod {
    /// Primary = recent confirmed-block miners (deduplicated, newest
    /// first); each backup rank uses the next-older window of `window`
    /// blocks; missing seats are filled uniformly from the population.
    SlidingWindow { window: u32 },
    /// Every seat drawn uniformly without replacement, one sample per
    /// epoch — the stochastic model under which committee failure is
    /// exactly hypergeometric.
    UniformPerEpoch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Committee {
    /// 0 = acting producer, 1.. = standby backups.
    pub rank: u32,
    /// Seat list; order doubles as recency order.
    pub members: Vec<NodeId>,
    /// Leader-candidate order for leader changes (recency order).
    pub leader_order: Vec<NodeId>,
    pub thresholds: Thresholds,
}

impl Committee {
    pub fn leader(&self) -> NodeId {
        self.leader_order[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochCommittees {
    pub epoch: u64,
    /// `kappa + 1` committees, primary first; member sets pairwise
    /// disjoint.
    pub committees: Vec<Committee>,
    /// Buried mainchain height the election read — never above the
    /// confirmed horizon, so unconfirmed rollbacks cannot change the
    /// outcome.
    pub election_view: u64,
}

/// Elect the epoch's committees from the buried mainchain view.
pub fn elect_committees(
    main: &Ledger,
    epoch: u64,
    population: u32,
    kappa: u32,
    thresholds: Thresholds,
    method: ElectionMethod,
    rng: &mut impl Rng,
) -> Result<EpochCommittees, ElectionError> {
    let cs = thresholds.cs;
    let committees = kappa + 1;
    if (population as u64) < committees as u64 * cs as u64 {
        return Err(ElectionError::PopulationTooSmall {
            population,
            committees,
            cs,
        });
    }

    let mut used: BTreeSet<NodeId> = BTreeSet::new();
    let mut out = Vec::with_capacity(committees as usize);

    match method {
        ElectionMethod::UniformPerEpoch => {
            // One sample without replacement, partitioned in draw order.
            let mut pool: Vec<NodeId> = (0..population).map(NodeId).collect();
            let need = (committees * cs) as usize;
            let (seats, _) = pool.partial_shuffle(rng, need);
            for rank in 0..committees {
                let members: Vec<NodeId> =
                    seats[(rank * cs) as usize..((rank + 1) * cs) as usize].to_vec();
                out.push(Committee {
                    rank,
                    leader_order: members.clone(),
                    members,
                    thresholds,
                });
            }
        }
        ElectionMethod::SlidingWindow { window } => {
            let buried = main.buried_tip_height();
            for rank in 0..committees {
                let mut members: Vec<NodeId> = Vec::with_capacity(cs as usize);
                // Walk this rank's window newest-to-oldest, skipping
                // genesis; a miner of several window blocks sits once.
                let top = buried.saturating_sub(rank as u64 * window as u64);
                let bottom = top.saturating_sub(window as u64 - 1).max(1);
                if top >= 1 {
                    for h in (bottom..=top).rev() {
                        let miner = main
                            .block_at(h)
                            .expect("height within chain")
                            .proposer;
                        if !used.contains(&miner)
                            && !members.contains(&miner)
                            && members.len() < cs as usize
                        {
                            members.push(miner);
                        }
                    }
                }
                // Bootstrap fill for missing seats: uniform draw from the
                // unused population.
                if members.len() < cs as usize {
                    let mut pool: Vec<NodeId> = (0..population)
                        .map(NodeId)
                        .filter(|n| !used.contains(n) && !members.contains(n))
                        .collect();
                    let need = cs as usize - members.len();
                    let (fill, _) = pool.partial_shuffle(rng, need);
                    members.extend_from_slice(fill);
                }
                used.extend(members.iter().copied());
                out.push(Committee {
                    rank,
                    leader_order: members.clone(),
                    members,
                    thresholds,
                });
            }
        }
    }

    Ok(EpochCommittees {
        epoch,
        committees: out,
        election_view: main.buried_tip_height(),
    })
}

/// Index of the first committee in the ladder that can still commit:
/// fewer than `theta_weak` misbehaving members. `None` means every
/// committee is compromised — autorecovery failure.
pub fn first_functional_rank(misbehaving: &[u32], theta_weak: u32) -> Option<u32> {
    misbehaving
        .iter()
        .position(|m| *m < theta_weak)
        .map(|i| i as u32)
}

/// Tick at which the backup at ladder position `ladder_index` finishes
/// taking over after a failure observed at `stall_tick`: it waits
/// `ladder_index * eta` of silence, then runs one agreement round.
pub fn takeover_completion_tick(
    stall_tick: u64,
    ladder_index: u32,
    eta: u64,
    t_agr: u64,
) -> u64 {
    stall_tick + ladder_index as u64 * eta + t_agr
}

/// Resolve two sync transactions for the same epoch arriving within the
/// processing delay: a takeover-attested sync beats a plain one;
/// duplicates and ties keep the first arrival.
pub fn race_guard<'a>(first: &'a Transaction, second: &'a Transaction) -> &'a Transaction {
    if tx_hash(first) == tx_hash(second) {
        return first;
    }
    let attested = |tx: &Transaction| tx.sync_payload().is_some_and(|p| p.takeover_attested);
    if attested(second) && !attested(first) {
        second
    } else {
        first
    }
}

/// Worst-case autorecovery duration and its epoch-multiple bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryTime {
    /// `(kappa+1)(eta-eps)(k-1) + kappa*t_agr + (eta-eps)` ticks.
    pub duration_ticks: u64,
    /// `(kappa+1) * k * r_sc` ticks — one epoch per committee.
    pub bound_ticks: u64,
}

/// Worst-case time for the committee ladder to recover block production,
/// with `k` sidechain blocks per epoch and timeout `eta` (all in ticks;
/// `epsilon` is the infinitesimal head start of detection, default 0).
///
/// Whenever `eta <= r_sc` and `t_agr <= r_sc`, the duration is bounded
/// by `kappa + 1` epoch lengths.
pub fn worst_case_recovery_time(
    k: u64,
    eta: u64,
    kappa: u32,
    t_agr: u64,
    epsilon: u64,
) -> RecoveryTime {
    let eta_eff = eta - epsilon;
    let duration_ticks =
        (kappa as u64 + 1) * eta_eff * (k - 1) + kappa as u64 * t_agr + eta_eff;
    let bound_ticks = (kappa as u64 + 1) * k * TICKS_PER_SC_ROUND;
    if eta <= TICKS_PER_SC_ROUND && t_agr <= TICKS_PER_SC_ROUND {
        debug_assert!(duration_ticks <= bound_ticks);
    }
    RecoveryTime {
        duration_ticks,
        bound_ticks,
    }
}

/// Scripted fault injected into one committee for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FaultKind {
    /// Leader never proposes; the committee rotates leaders.
    UnresponsiveLeader,
    /// Leader plus `f` further members go silent: leader change cannot
    /// certify and the committee stalls outright.
    StalledLeaderChange,
    /// Every member silent.
    UnresponsiveCommittee,
    /// Leader proposes an invalid meta-block in the given slot and the
    /// Byzantine majority commits it; backups detect it on publication.
    InvalidMetaProposal { sc_round: u32 },
    /// Same, for the epoch's summary-block.
    InvalidSummaryProposal,
    /// The committee publishes a tampered sync transaction; the
    /// mainchain rejects it on verification.
    InvalidSync,
    /// The committee completes the epoch but never issues its sync.
    MissedSync,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultEntry {
    pub epoch: u64,
    /// Original election rank the fault applies to.
    pub rank: u32,
    #[serde(flatten)]
    pub fault: FaultKind,
}

/// Epoch-wise random misbehavior: exactly `misbehaving` distinct nodes
/// drawn without replacement from the population each epoch; a committee
/// seating `theta_weak` or more of them is non-functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomFaults {
    pub misbehaving: u32,
}

/// Fault plan for a run: scripted entries, plus optional per-epoch
/// random misbehavior.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultScript {
    #[serde(default)]
    pub entries: Vec<FaultEntry>,
    #[serde(default)]
    pub random: Option<RandomFaults>,
}

impl FaultScript {
    pub fn scripted(entries: Vec<FaultEntry>) -> Self {
        FaultScript {
            entries,
            random: None,
        }
    }

    pub fn faults_for(&self, epoch: u64, rank: u32) -> impl Iterator<Item = FaultKind> + '_ {
        self.entries
            .iter()
            .filter(move |e| e.epoch == epoch && e.rank == rank)
            .map(|e| e.fault)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.random.is_none()
    }
}

/// Why a takeover happened (logged per event).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TakeoverCause {
    /// No sidechain growth for the watch duration.
    LackOfProgress,
    /// A published block failed verification.
    InvalidBlock,
    /// The epoch's sync transaction failed mainchain verification.
    InvalidSync,
}

/// One committee takeover, as logged in run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TakeoverEvent {
    pub epoch: u64,
    /// Ladder position that failed (0 = acting committee at the time).
    pub failing_rank: u32,
    /// Ladder position that took over, counted before the shift.
    pub new_rank: u32,
    pub cause: TakeoverCause,
    pub detection_tick: u64,
    pub recovery_tick: u64,
}
