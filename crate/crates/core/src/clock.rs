//! Discrete time base.
//!
//! Everything runs on integer ticks. A sidechain round is always 12
//! ticks; a mainchain round spans a configurable whole number of
//! sidechain rounds (default 3); an epoch spans a configurable whole
//! number of mainchain rounds (default 10, i.e. 30 sidechain slots).
//!
//! Mainchain rounds are 1-based (round 0 is genesis): round `r` covers
//! ticks `[(r-1)*mc_round_ticks, r*mc_round_ticks)` and its block is
//! assembled at the end of that span. Latencies are reported in whole
//! mainchain rounds (`published_round - queued_round`), the only
//! time unit that survives a change of the round ratio.

use serde::{Deserialize, Serialize};

/// Ticks per sidechain round; timeouts (`zeta`, `eta`) are bounded by
/// this.
pub const TICKS_PER_SC_ROUND: u64 = 12;

/// Round/epoch geometry of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeBase {
    /// Sidechain rounds per mainchain round (the "round ratio").
    pub sc_rounds_per_mc: u32,
    /// Mainchain rounds per epoch.
    pub mc_rounds_per_epoch: u32,
}

impl Default for TimeBase {
    fn default() -> Self {
        TimeBase {
            sc_rounds_per_mc: 3,
            mc_rounds_per_epoch: 10,
        }
    }
}

impl TimeBase {
    pub fn mc_round_ticks(&self) -> u64 {
        TICKS_PER_SC_ROUND * self.sc_rounds_per_mc as u64
    }

    pub fn epoch_ticks(&self) -> u64 {
        self.mc_round_ticks() * self.mc_rounds_per_epoch as u64
    }

    /// Sidechain slots per epoch: all but the last carry a meta-block,
    /// the last carries the summary-block.
    pub fn sc_slots_per_epoch(&self) -> u32 {
        self.sc_rounds_per_mc * self.mc_rounds_per_epoch
    }

    /// Epoch index of a 1-based mainchain round.
    pub fn epoch_of_mc_round(&self, round: u64) -> u64 {
        assert!(round >= 1, "round 0 is genesis");
        (round - 1) / self.mc_rounds_per_epoch as u64
    }

    /// First tick of a 1-based mainchain round.
    pub fn mc_round_start_tick(&self, round: u64) -> u64 {
        assert!(round >= 1);
        (round - 1) * self.mc_round_ticks()
    }

    /// Exclusive end tick of a 1-based mainchain round; the round's
    /// block is assembled here.
    pub fn mc_round_end_tick(&self, round: u64) -> u64 {
        round * self.mc_round_ticks()
    }

    /// 1-based mainchain round containing a tick.
    pub fn mc_round_of_tick(&self, tick: u64) -> u64 {
        tick / self.mc_round_ticks() + 1
    }

    pub fn epoch_start_tick(&self, epoch: u64) -> u64 {
        epoch * self.epoch_ticks()
    }

    /// Due tick of sidechain slot `slot` (0-based) in `epoch`.
    pub fn sc_slot_due_tick(&self, epoch: u64, slot: u32) -> u64 {
        debug_assert!(slot < self.sc_slots_per_epoch());
        self.epoch_start_tick(epoch) + slot as u64 * TICKS_PER_SC_ROUND
    }

    /// Whether `slot` is the epoch's summary slot.
    pub fn is_summary_slot(&self, slot: u32) -> bool {
        slot + 1 == self.sc_slots_per_epoch()
    }

    /// Last mainchain round of `epoch` (the round whose block carries
    /// the epoch's sync transaction).
    pub fn epoch_end_mc_round(&self, epoch: u64) -> u64 {
        (epoch + 1) * self.mc_rounds_per_epoch as u64
    }
}
