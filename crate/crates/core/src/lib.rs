//! Protocol library and deterministic discrete-event simulator for a
//! blockchain resource market offloaded onto a mutually-dependent
//! sidechain.
//!
//! The sidechain absorbs the market's service traffic into per-epoch
//! meta-blocks, folds each epoch into a summary-block, and ships the
//! folded state back to the mainchain in a single sync transaction.
//! Once a sync is buried on the mainchain, the epoch's raw sidechain
//! payload is pruned. Committee-based agreement produces the blocks;
//! a ladder of standby committees auto-recovers production when the
//! primary fails.
//!
//! Module map:
//! * [`types`]      — transactions, annotations, canonical hashing
//! * [`block`]      — blocks and the folded epoch summary state
//! * [`clock`]      — integer tick / round / epoch geometry
//! * [`ledger`]     — chain container, confirmation depth, rollback
//! * [`consensus`]  — vote thresholds, agreement, leader change
//! * [`committees`] — election, fault scripting, takeover ladder
//! * [`mainchain`]  — queues, block assembly, escrows, sync variables
//! * [`sidechain`]  — meta/summary production, sync emission, pruning
//! * [`workload`]   — storage-market traffic, modalities, rollup baseline
//! * [`seeding`]    — deterministic per-purpose random streams
//! * [`sim`]        — the discrete-event engine and run reports
//! * [`campaign`]   — named experiment sweeps and CSV emission

pub mod block;
pub mod campaign;
pub mod clock;
pub mod committees;
pub mod consensus;
pub mod ledger;
pub mod mainchain;
pub mod seeding;
pub mod sidechain;
pub mod sim;
pub mod types;
pub mod workload;
