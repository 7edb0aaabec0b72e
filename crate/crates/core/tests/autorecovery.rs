//! Scripted-fault integration suite: every committee-misbehavior
//! scenario must end the run with the same synced market state as a
//! fault-free oracle run, with takeovers completing inside their
//! escalation deadline and leaving audit certificates behind.

use chainboost_core::committees::{
    worst_case_recovery_time, FaultEntry, FaultKind, FaultScript, TakeoverCause,
};
use chainboost_core::sim::{run, Mode, RunConfig, RunReport};
use chainboost_core::workload::WorkloadConfig;

const ETA: u64 = 6;
const T_AGR: u64 = 2;

fn cfg() -> RunConfig {
    RunConfig {
        nodes: 60,
        workload: WorkloadConfig {
            contracts: 120,
            ..WorkloadConfig::default()
        },
        committee_size: 5,
        kappa: 2,
        run_len_mc_rounds: 21,
        seed: 11,
        mode: Mode::ChainBoost,
        ..RunConfig::default()
    }
}

fn run_with(faults: Vec<FaultEntry>) -> RunReport {
    let mut c = cfg();
    c.faults = FaultScript::scripted(faults);
    run(c).expect("scripted run completes")
}

fn fault(epoch: u64, rank: u32, fault: FaultKind) -> FaultEntry {
    FaultEntry { epoch, rank, fault }
}

fn oracle() -> RunReport {
    run(cfg()).expect("fault-free run completes")
}

/// Market state must match the oracle; audit trail may differ, and so
/// may the number of sync vehicles (a recovered run can merge several
/// epochs into one mass-sync), but every market transaction must
/// confirm in both runs.
fn assert_market_matches(label: &str, faulty: &RunReport, clean: &RunReport) {
    assert!(
        faulty.summary_state.market_eq(&clean.summary_state),
        "{label}: synced market state diverged from the fault-free oracle"
    );
    assert_eq!(
        faulty.escrow.dispensed, clean.escrow.dispensed,
        "{label}: escrow drawdowns diverged"
    );
    let market_kinds = |r: &RunReport| {
        let mut kinds = r.confirmed_by_kind.clone();
        kinds.remove("Sync");
        kinds.remove("MassSync");
        kinds
    };
    assert_eq!(
        market_kinds(faulty),
        market_kinds(clean),
        "{label}: confirmed market transactions diverged"
    );
}

/// Every takeover must complete within `jump · eta + T_agr` of its
/// detection, where the jump is how far down the ladder it reached.
fn assert_takeover_deadlines(label: &str, report: &RunReport) {
    for t in &report.committees.takeovers {
        let jump = (t.new_rank - t.failing_rank) as u64;
        assert!(
            t.recovery_tick - t.detection_tick <= jump * ETA + T_AGR,
            "{label}: takeover to rank {} took {} ticks, deadline {}",
            t.new_rank,
            t.recovery_tick - t.detection_tick,
            jump * ETA + T_AGR
        );
    }
}

#[test]
fn unresponsive_leader_is_rotated_without_takeover() {
    let clean = oracle();
    let faulty = run_with(vec![fault(0, 0, FaultKind::UnresponsiveLeader)]);
    assert_market_matches("unresponsive-leader", &faulty, &clean);
    assert!(
        faulty.committees.takeovers.is_empty(),
        "a leader change must resolve inside the committee"
    );
    assert!(faulty.committees.leader_changes >= 1);
    assert!(
        !faulty.summary_state.leader_changes.is_empty(),
        "leader-change certificate must reach the synced state"
    );
}

#[test]
fn invalid_meta_proposal_triggers_standby_takeover() {
    let clean = oracle();
    let faulty = run_with(vec![fault(
        0,
        0,
        FaultKind::InvalidMetaProposal { sc_round: 4 },
    )]);
    assert_market_matches("invalid-meta", &faulty, &clean);
    assert_eq!(faulty.committees.takeovers.len(), 1);
    let t = &faulty.committees.takeovers[0];
    assert_eq!(t.cause, TakeoverCause::InvalidBlock);
    assert_eq!(t.new_rank, 1);
    assert_takeover_deadlines("invalid-meta", &faulty);
    assert_eq!(
        faulty.summary_state.takeovers.len(),
        1,
        "takeover attestation must reach the synced state"
    );
}

#[test]
fn invalid_summary_proposal_is_replaced_by_standby() {
    let clean = oracle();
    let faulty = run_with(vec![fault(0, 0, FaultKind::InvalidSummaryProposal)]);
    assert_market_matches("invalid-summary", &faulty, &clean);
    assert_eq!(faulty.committees.takeovers.len(), 1);
    assert_eq!(
        faulty.committees.takeovers[0].cause,
        TakeoverCause::InvalidBlock
    );
    assert_takeover_deadlines("invalid-summary", &faulty);
}

#[test]
fn invalid_sync_is_displaced_by_attested_sync() {
    let clean = oracle();
    let faulty = run_with(vec![fault(0, 0, FaultKind::InvalidSync)]);
    assert_market_matches("invalid-sync", &faulty, &clean);
    assert_eq!(faulty.committees.takeovers.len(), 1);
    assert_eq!(
        faulty.committees.takeovers[0].cause,
        TakeoverCause::InvalidSync
    );
    assert_takeover_deadlines("invalid-sync", &faulty);
    assert_eq!(
        faulty.sync.covered_epochs, clean.sync.covered_epochs,
        "every epoch must still be covered by a correct sync"
    );
}

#[test]
fn stalled_leader_change_escalates_to_takeover() {
    let clean = oracle();
    let faulty = run_with(vec![fault(0, 0, FaultKind::StalledLeaderChange)]);
    assert_market_matches("stalled-leader-change", &faulty, &clean);
    assert_eq!(faulty.committees.takeovers.len(), 1);
    let t = &faulty.committees.takeovers[0];
    assert_eq!(t.cause, TakeoverCause::LackOfProgress);
    assert_eq!(t.new_rank, 1);
    assert_takeover_deadlines("stalled-leader-change", &faulty);
}

#[test]
fn unresponsive_primary_committee_hands_over_to_first_standby() {
    let clean = oracle();
    let faulty = run_with(vec![fault(0, 0, FaultKind::UnresponsiveCommittee)]);
    assert_market_matches("unresponsive-primary", &faulty, &clean);
    assert_eq!(faulty.committees.takeovers.len(), 1);
    let t = &faulty.committees.takeovers[0];
    assert_eq!(t.cause, TakeoverCause::LackOfProgress);
    assert_eq!((t.failing_rank, t.new_rank), (0, 1));
    assert_eq!(
        t.recovery_tick - t.detection_tick,
        ETA + T_AGR,
        "first standby takes over after one escalation step"
    );
}

#[test]
fn missed_sync_is_covered_by_attested_backup_sync() {
    let clean = oracle();
    let faulty = run_with(vec![fault(0, 0, FaultKind::MissedSync)]);
    assert_market_matches("missed-sync", &faulty, &clean);
    assert_eq!(faulty.committees.takeovers.len(), 1);
    assert_eq!(
        faulty.committees.takeovers[0].cause,
        TakeoverCause::LackOfProgress
    );
    assert_eq!(faulty.sync.covered_epochs, clean.sync.covered_epochs);
}

#[test]
fn consecutive_failing_committees_jump_the_ladder() {
    let clean = oracle();
    // j = 1 and j = 2 (= kappa) consecutive failing committees: the
    // takeover must jump straight to the first functional rank, inside
    // the j-step escalation deadline i·eta + T_agr.
    for j in 1..=2u32 {
        let faults: Vec<FaultEntry> = (0..j)
            .map(|rank| fault(0, rank, FaultKind::UnresponsiveCommittee))
            .collect();
        let faulty = run_with(faults);
        assert_market_matches(&format!("j={j} failing"), &faulty, &clean);
        assert_eq!(faulty.committees.takeovers.len(), 1);
        let t = &faulty.committees.takeovers[0];
        assert_eq!(t.new_rank, j, "takeover must land on the first functional rank");
        assert_eq!(
            t.recovery_tick - t.detection_tick,
            j as u64 * ETA + T_AGR,
            "escalation to rank {j} must wait out the full ladder"
        );
        assert!(faulty.committees.autorecovery_failures.is_empty());
    }
}

#[test]
fn exhausted_ladder_defers_traffic_to_the_next_epoch() {
    let clean = oracle();
    // All kappa+1 committees fail outright: the epoch forms no blocks
    // at all, so there is nothing to summarize — its queued traffic
    // rides the next epoch's meta-blocks instead and no transaction is
    // lost.
    let faults: Vec<FaultEntry> = (0..3u32)
        .map(|rank| fault(0, rank, FaultKind::UnresponsiveCommittee))
        .collect();
    let faulty = run_with(faults);
    assert_eq!(faulty.committees.autorecovery_failures, vec![0]);
    assert!(
        faulty.committees.takeovers.is_empty(),
        "no functional standby exists to take over"
    );
    assert_market_matches("exhausted-ladder", &faulty, &clean);
}

#[test]
fn exhausted_ladder_with_completed_epoch_recovers_by_mass_sync() {
    let clean = oracle();
    // The primary completes the epoch's blocks but withholds the sync,
    // and every standby is down: autorecovery fails with real content
    // stranded. The next epoch's committee must cover both epochs with
    // one mass-sync.
    let mut faults = vec![fault(0, 0, FaultKind::MissedSync)];
    faults.extend((1..3u32).map(|rank| fault(0, rank, FaultKind::UnresponsiveCommittee)));
    let faulty = run_with(faults);
    assert_eq!(faulty.committees.autorecovery_failures, vec![0]);
    assert!(faulty.sync.mass_syncs >= 1, "recovery needs a mass-sync");
    assert_market_matches("stranded-epoch", &faulty, &clean);
    assert_eq!(faulty.sync.covered_epochs, clean.sync.covered_epochs);
}

#[test]
fn recovery_time_stays_inside_the_epoch_budget() {
    // The analytical worst case: every meta-block held for eta−epsilon,
    // each committee failing at the last moment. The derived duration
    // must respect the (kappa+1)-epoch budget, and so must every
    // takeover observed in the heaviest scripted scenario above.
    let c = cfg();
    let slots = c.time.sc_slots_per_epoch() as u64;
    let epoch_ticks = c.time.epoch_ticks();
    let worst = worst_case_recovery_time(slots, c.eta, c.kappa, c.t_agr, 1);
    assert!(worst.duration_ticks <= (c.kappa as u64 + 1) * epoch_ticks);

    let faults: Vec<FaultEntry> = (0..2u32)
        .map(|rank| fault(0, rank, FaultKind::UnresponsiveCommittee))
        .collect();
    let faulty = run_with(faults);
    for t in &faulty.committees.takeovers {
        assert!(
            t.recovery_tick - t.detection_tick <= (c.kappa as u64 + 1) * epoch_ticks,
            "observed takeover exceeded the recovery budget"
        );
    }
}
