//! Committee agreement and leader-change rules.
//!
//! Committees run a two-threshold vote: a proposal commits once it holds
//! `theta_strong` supporting votes, and a leader change succeeds only
//! while at least `cs - f` members are still responsive. A committee
//! whose misbehaving members reach `theta_weak` can no longer be relied
//! on to commit anything — that is the functionality cutoff used by the
//! autorecovery layer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::NodeId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConsensusError {
    #[error("committee size {0} too small (minimum 4)")]
    CommitteeTooSmall(u32),
    #[error("strong threshold {theta_s} outside [{min}, {max}] for committee size {cs}")]
    StrongThresholdOutOfRange {
        theta_s: u32,
        min: u32,
        max: u32,
        cs: u32,
    },
}

/// Vote thresholds of one committee.
///
/// * `theta_strong` — votes needed to commit a proposal.
/// * `theta_weak`   — misbehaving members at which commitment can no
///   longer be guaranteed: `cs - theta_strong + 1`.
/// * The optimal operating point sets `theta_strong` to the smallest
///   safe value `ceil((2*cs + 1) / 3)`, which maximizes `theta_weak`.
///
/// Validity requires `theta_weak <= theta_weak_opt <= theta_strong_opt
/// <= theta_strong < cs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub cs: u32,
    /// Tolerated Byzantine members: `floor((cs - 2) / 3)`.
    pub f: u32,
    pub theta_strong: u32,
    pub theta_weak: u32,
    pub theta_strong_opt: u32,
    pub theta_weak_opt: u32,
}

impl Thresholds {
    /// Thresholds at the optimal operating point for committee size `cs`.
    pub fn new(cs: u32) -> Result<Self, ConsensusError> {
        let opt = theta_strong_opt(cs);
        Self::with_strong(cs, opt)
    }

    /// Thresholds with an explicit strong threshold (must stay within
    /// `[theta_strong_opt, cs - 1]`).
    pub fn with_strong(cs: u32, theta_strong: u32) -> Result<Self, ConsensusError> {
        if cs < 4 {
            return Err(ConsensusError::CommitteeTooSmall(cs));
        }
        let opt = theta_strong_opt(cs);
        if theta_strong < opt || theta_strong >= cs {
            return Err(ConsensusError::StrongThresholdOutOfRange {
                theta_s: theta_strong,
                min: opt,
                max: cs - 1,
                cs,
            });
        }
        let th = Thresholds {
            cs,
            f: (cs - 2) / 3,
            theta_strong,
            theta_weak: cs - theta_strong + 1,
            theta_strong_opt: opt,
            theta_weak_opt: (cs + 2) / 3,
        };
        debug_assert!(
            th.theta_weak <= th.theta_weak_opt
                && th.theta_weak_opt <= th.theta_strong_opt
                && th.theta_strong_opt <= th.theta_strong
                && th.theta_strong < cs
        );
        Ok(th)
    }
}

/// Smallest safe strong threshold: `ceil((2*cs + 1) / 3)`.
pub fn theta_strong_opt(cs: u32) -> u32 {
    (2 * cs + 1).div_ceil(3)
}

/// Per-member conduct during one agreement instance.
///
/// * `Honest`  — follows the protocol: votes for valid proposals only.
/// * `VoteAny` — Byzantine: votes for anything, including invalid
///   proposals.
/// * `Abstain` — silent (crashed, lazy, or withholding).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conduct {
    Honest,
    VoteAny,
    Abstain,
}

/// Certificate of a committed proposal: the supporting voter set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementCertificate {
    pub epoch: u64,
    pub slot: u32,
    pub signers: Vec<NodeId>,
}

/// Condensed leader-change entry carried into summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderChangeRecord {
    pub epoch: u64,
    pub slot: u32,
    pub old_leader: NodeId,
    pub new_leader: NodeId,
}

/// Leader-change certificate: the record plus the responsive signer set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderChangeCertificate {
    pub record: LeaderChangeRecord,
    pub signers: Vec<NodeId>,
}

/// Condensed committee-takeover attestation carried into summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TakeoverRecord {
    pub epoch: u64,
    /// Ranks 0..failed_ranks were non-functional or misbehaving.
    pub failed_ranks: u32,
    /// Backup rank that assumed production.
    pub new_rank: u32,
    /// Absolute tick at which the takeover completed.
    pub takeover_tick: u64,
}

/// Result of one agreement instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgreementOutcome {
    /// Valid proposal gathered `theta_strong` votes.
    Committed(AgreementCertificate),
    /// Invalid proposal gathered `theta_strong` votes — only Byzantine
    /// members sign such a thing, so this certificate doubles as
    /// evidence.
    MaliciousCommit(AgreementCertificate),
    /// Fewer than `theta_strong` votes; nothing commits.
    NoQuorum,
}

/// Run one agreement instance over a proposal.
///
/// Honest members vote only when the proposal is valid; `VoteAny`
/// members vote regardless; abstainers are silent.
pub fn run_agreement(
    members: &[NodeId],
    conducts: &[Conduct],
    proposal_valid: bool,
    epoch: u64,
    slot: u32,
    th: &Thresholds,
) -> AgreementOutcome {
    assert_eq!(members.len(), conducts.len());
    let signers: Vec<NodeId> = members
        .iter()
        .zip(conducts)
        .filter(|(_, c)| match c {
            Conduct::Honest => proposal_valid,
            Conduct::VoteAny => true,
            Conduct::Abstain => false,
        })
        .map(|(m, _)| *m)
        .collect();
    if (signers.len() as u32) < th.theta_strong {
        return AgreementOutcome::NoQuorum;
    }
    let cert = AgreementCertificate {
        epoch,
        slot,
        signers,
    };
    if proposal_valid {
        AgreementOutcome::Committed(cert)
    } else {
        AgreementOutcome::MaliciousCommit(cert)
    }
}

/// Result of a leader-change attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeaderChangeOutcome {
    NewLeader { certificate: LeaderChangeCertificate },
    /// More than `f` members unresponsive: the change cannot gather a
    /// safe certificate and the committee stalls in place.
    Stalled,
}

/// Attempt a leader change after `old_leader` failed to produce.
///
/// Succeeds only while the unresponsive count stays within the fault
/// budget `f` — that guarantees at least `cs - f >= 2f + 1` responsive
/// signers on the certificate.
pub fn leader_change(
    members: &[NodeId],
    conducts: &[Conduct],
    old_leader: NodeId,
    new_leader: NodeId,
    epoch: u64,
    slot: u32,
    th: &Thresholds,
) -> LeaderChangeOutcome {
    assert_eq!(members.len(), conducts.len());
    let unresponsive = conducts.iter().filter(|c| **c == Conduct::Abstain).count() as u32;
    if unresponsive > th.f {
        return LeaderChangeOutcome::Stalled;
    }
    let signers: Vec<NodeId> = members
        .iter()
        .zip(conducts)
        .filter(|(_, c)| **c != Conduct::Abstain)
        .map(|(m, _)| *m)
        .collect();
    LeaderChangeOutcome::NewLeader {
        certificate: LeaderChangeCertificate {
            record: LeaderChangeRecord {
                epoch,
                slot,
                old_leader,
                new_leader,
            },
            signers,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: u32) -> Vec<NodeId> {
        (0..n).map(NodeId).collect()
    }

    fn conducts(honest: u32, vote_any: u32, abstain: u32) -> Vec<Conduct> {
        let mut v = vec![Conduct::Honest; honest as usize];
        v.extend(vec![Conduct::VoteAny; vote_any as usize]);
        v.extend(vec![Conduct::Abstain; abstain as usize]);
        v
    }

    #[test]
    fn thresholds_at_desk_scale() {
        let th = Thresholds::new(17).unwrap();
        assert_eq!(th.f, 5);
        assert_eq!(th.theta_strong, 12);
        assert_eq!(th.theta_weak, 6);
        assert_eq!(th.theta_strong_opt, 12);
        assert_eq!(th.theta_weak_opt, 6);
    }

    #[test]
    fn thresholds_small_committee() {
        let th = Thresholds::new(6).unwrap();
        assert_eq!(th.f, 1);
        assert_eq!(th.theta_strong, 5);
        assert_eq!(th.theta_weak, 2);
    }

    #[test]
    fn thresholds_reject_invalid() {
        assert_eq!(
            Thresholds::new(3),
            Err(ConsensusError::CommitteeTooSmall(3))
        );
        // Below the optimal point or at/above cs is rejected.
        assert!(Thresholds::with_strong(17, 11).is_err());
        assert!(Thresholds::with_strong(17, 17).is_err());
        assert!(Thresholds::with_strong(17, 16).is_ok());
    }

    #[test]
    fn agreement_commits_valid_proposals_at_quorum() {
        let th = Thresholds::new(5).unwrap(); // theta_strong = 4
        let members = ids(5);
        match run_agreement(&members, &conducts(4, 0, 1), true, 0, 0, &th) {
            AgreementOutcome::Committed(cert) => assert_eq!(cert.signers.len(), 4),
            other => panic!("expected commit, got {other:?}"),
        }
        assert_eq!(
            run_agreement(&members, &conducts(3, 0, 2), true, 0, 0, &th),
            AgreementOutcome::NoQuorum
        );
    }

    #[test]
    fn invalid_proposal_needs_byzantine_quorum() {
        let th = Thresholds::new(5).unwrap();
        let members = ids(5);
        // Honest members refuse invalid proposals, so three Byzantines
        // plus two honest members still fall short.
        assert_eq!(
            run_agreement(&members, &conducts(2, 3, 0), false, 0, 0, &th),
            AgreementOutcome::NoQuorum
        );
        match run_agreement(&members, &conducts(1, 4, 0), false, 0, 0, &th) {
            AgreementOutcome::MaliciousCommit(cert) => assert_eq!(cert.signers.len(), 4),
            other => panic!("expected malicious commit, got {other:?}"),
        }
    }

    #[test]
    fn leader_change_stalls_beyond_fault_budget() {
        let th = Thresholds::new(5).unwrap(); // f = 1
        let members = ids(5);
        // Two unresponsive members exceed f = 1: stalled.
        assert_eq!(
            leader_change(
                &members,
                &conducts(3, 0, 2),
                NodeId(0),
                NodeId(1),
                0,
                0,
                &th
            ),
            LeaderChangeOutcome::Stalled
        );
        match leader_change(
            &members,
            &conducts(4, 0, 1),
            NodeId(0),
            NodeId(1),
            0,
            0,
            &th,
        ) {
            LeaderChangeOutcome::NewLeader { certificate } => {
                assert_eq!(certificate.signers.len(), 4);
                assert_eq!(certificate.record.new_leader, NodeId(1));
            }
            LeaderChangeOutcome::Stalled => panic!("expected success"),
        }
    }

    /// Exhaustive check over every conduct composition for several
    /// committee sizes: outcomes match the threshold definitions exactly.
    #[test]
    fn outcomes_match_thresholds_exhaustively() {
        for cs in [4u32, 5, 6, 17] {
            let th = Thresholds::new(cs).unwrap();
            let members = ids(cs);
            for honest in 0..=cs {
                for vote_any in 0..=(cs - honest) {
                    let abstain = cs - honest - vote_any;
                    let cd = conducts(honest, vote_any, abstain);

                    let valid = run_agreement(&members, &cd, true, 1, 2, &th);
                    if honest + vote_any >= th.theta_strong {
                        assert!(matches!(valid, AgreementOutcome::Committed(_)));
                    } else {
                        assert_eq!(valid, AgreementOutcome::NoQuorum);
                    }

                    let invalid = run_agreement(&members, &cd, false, 1, 2, &th);
                    if vote_any >= th.theta_strong {
                        assert!(matches!(invalid, AgreementOutcome::MaliciousCommit(_)));
                    } else {
                        assert_eq!(invalid, AgreementOutcome::NoQuorum);
                    }

                    let lc = leader_change(&members, &cd, NodeId(0), NodeId(1), 1, 2, &th);
                    if abstain <= th.f {
                        assert!(matches!(lc, LeaderChangeOutcome::NewLeader { .. }));
                    } else {
                        assert_eq!(lc, LeaderChangeOutcome::Stalled);
                    }
                }
            }
        }
    }
}
