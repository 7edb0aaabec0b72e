//! Append-only chain container with confirmation depth and rollback.
//!
//! Both chains use the same container. A block is *buried* once at
//! least `k_conf` blocks sit on top of it; buried blocks are immune to
//! rollback, so anything that must survive reorganisation (committee
//! elections, pruning decisions) reads the chain at the buried
//! horizon.

use thiserror::Error;

use crate::block::{Block, BlockBody, BlockKind};
use crate::types::{Hash32, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("block height {got} does not extend tip height {tip}")]
    BadHeight { got: u64, tip: u64 },
    #[error("block prev_ref does not match tip hash at height {tip}")]
    BadLink { tip: u64 },
}

#[derive(Debug, Clone)]
pub struct Ledger {
    blocks: Vec<Block>,
    /// Hash of each block, aligned with `blocks` (computed once on push).
    hashes: Vec<Hash32>,
    /// Confirmation depth: blocks with `k_conf` successors are final.
    pub k_conf: u64,
}

impl Ledger {
    fn with_genesis(genesis: Block, k_conf: u64) -> Self {
        let hash = genesis.hash();
        Ledger {
            blocks: vec![genesis],
            hashes: vec![hash],
            k_conf,
        }
    }

    /// Mainchain with an empty genesis block.
    pub fn new_main(k_conf: u64) -> Self {
        Self::with_genesis(
            Block {
                kind: BlockKind::Main,
                height: 0,
                epoch: 0,
                round_in_epoch: 0,
                prev_ref: [0; 32],
                body: BlockBody::Txs(Vec::new()),
                proposer: NodeId(0),
                certificate: None,
                capacity_bytes: 0,
                lc_records: Vec::new(),
                takeover_records: Vec::new(),
                pruned: false,
            },
            k_conf,
        )
    }

    /// Sidechain genesis: an empty summary-block anchored to the
    /// mainchain genesis hash, binding the two chains at birth.
    pub fn new_side(k_conf: u64, main_genesis: Hash32) -> Self {
        Self::with_genesis(
            Block {
                kind: BlockKind::Summary,
                height: 0,
                epoch: 0,
                round_in_epoch: 0,
                prev_ref: main_genesis,
                body: BlockBody::Summary(Default::default()),
                proposer: NodeId(0),
                certificate: None,
                capacity_bytes: 0,
                lc_records: Vec::new(),
                takeover_records: Vec::new(),
                pruned: false,
            },
            k_conf,
        )
    }

    pub fn tip_height(&self) -> u64 {
        (self.blocks.len() - 1) as u64
    }

    pub fn tip_hash(&self) -> Hash32 {
        *self.hashes.last().expect("genesis always present")
    }

    pub fn block_at(&self, height: u64) -> Option<&Block> {
        self.blocks.get(height as usize)
    }

    pub fn block_at_mut(&mut self, height: u64) -> Option<&mut Block> {
        self.blocks.get_mut(height as usize)
    }

    pub fn hash_at(&self, height: u64) -> Option<Hash32> {
        self.hashes.get(height as usize).copied()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Append a block; it must extend the tip by exactly one height and
    /// reference the tip hash.
    pub fn push(&mut self, block: Block) -> Result<Hash32, LedgerError> {
        let tip = self.tip_height();
        if block.height != tip + 1 {
            return Err(LedgerError::BadHeight {
                got: block.height,
                tip,
            });
        }
        if block.prev_ref != self.tip_hash() {
            return Err(LedgerError::BadLink { tip });
        }
        let hash = block.hash();
        self.blocks.push(block);
        self.hashes.push(hash);
        Ok(hash)
    }

    /// Append a block validating the height only; the caller vouches
    /// for the link rule. The sidechain needs this because its
    /// summary-blocks reference the previous summary-block (a pruning-
    /// proof backbone) instead of the tip meta-block.
    pub fn push_linked(&mut self, block: Block) -> Result<Hash32, LedgerError> {
        let tip = self.tip_height();
        if block.height != tip + 1 {
            return Err(LedgerError::BadHeight {
                got: block.height,
                tip,
            });
        }
        let hash = block.hash();
        self.blocks.push(block);
        self.hashes.push(hash);
        Ok(hash)
    }

    /// Highest height that can no longer be rolled back.
    pub fn buried_tip_height(&self) -> u64 {
        self.tip_height().saturating_sub(self.k_conf)
    }

    /// Whether the block at `height` has `k_conf` successors.
    pub fn is_buried(&self, height: u64) -> bool {
        height <= self.buried_tip_height()
    }

    /// Remove the top `depth` blocks (bounded by the unburied region;
    /// genesis never moves) and return them in ascending height order.
    pub fn rollback(&mut self, depth: u64) -> Vec<Block> {
        let depth = depth.min(self.k_conf).min(self.tip_height()) as usize;
        let keep = self.blocks.len() - depth;
        self.hashes.truncate(keep);
        self.blocks.split_off(keep)
    }

    /// Bytes the chain occupies: headers plus unpruned payloads.
    pub fn total_stored_bytes(&self) -> u64 {
        self.blocks.iter().map(|b| b.stored_bytes()).sum()
    }
}
