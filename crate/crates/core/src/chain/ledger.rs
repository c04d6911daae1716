//! The append-only chain and the compare-and-append contract miners commit through.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use super::block::{Block, GENESIS_PREVIOUS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppendOutcome {
    Appended,
    /// The chain head moved since the block was built; nothing was written.
    StaleHead,
}

/// Ordered blocks plus an index from transaction id to the height holding it.
#[derive(Debug, Clone, Default)]
pub struct Chain {
    blocks: Vec<Arc<Block>>,
    tx_index: HashMap<String, usize>,
}

impl Chain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps blocks without checking linkage. Use `verify_chain` to validate.
    pub fn from_blocks(blocks: impl IntoIterator<Item = Block>) -> Self {
        let mut chain = Chain::new();
        for block in blocks {
            chain.push_unchecked(Arc::new(block));
        }
        chain
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Arc<Block>] {
        &self.blocks
    }

    pub fn head(&self) -> Option<&Arc<Block>> {
        self.blocks.last()
    }

    /// Id of the last block, or `"0"` for an empty chain.
    pub fn head_id(&self) -> &str {
        self.head().map(|b| b.id.as_str()).unwrap_or(GENESIS_PREVIOUS)
    }

    /// Block number the next block must carry.
    pub fn next_block_number(&self) -> u64 {
        self.head().map(|b| b.block_number + 1).unwrap_or(1)
    }

    pub fn contains_tx(&self, tx_id: &str) -> bool {
        self.tx_index.contains_key(tx_id)
    }

    pub fn contains_block(&self, block_id: &str) -> bool {
        self.blocks.iter().rev().any(|b| b.id == block_id)
    }

    pub fn transaction_count(&self) -> usize {
        self.blocks.iter().map(|b| b.transactions().len()).sum()
    }

    /// Atomic compare-and-append against the current head.
    pub fn append_block(&mut self, block: Arc<Block>) -> AppendOutcome {
        if block.previous_block() != self.head_id() {
            return AppendOutcome::StaleHead;
        }
        self.push_unchecked(block);
        AppendOutcome::Appended
    }

    fn push_unchecked(&mut self, block: Arc<Block>) {
        let height = self.blocks.len();
        for tx in block.transactions() {
            self.tx_index.entry(tx.id.clone()).or_insert(height);
        }
        self.blocks.push(block);
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
            .into_iter()
            .map(|b| Arc::try_unwrap(b).unwrap_or_else(|shared| (*shared).clone()))
            .collect()
    }

    /// Canonical JSON of the block list; the byte-identity used by replicas.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        super::canonical::to_canonical_bytes(self).expect("blocks hold no floats")
    }
}

impl PartialEq for Chain {
    fn eq(&self, other: &Self) -> bool {
        self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a == b)
    }
}

impl Eq for Chain {}

impl Serialize for Chain {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.blocks.iter().map(|b| b.as_ref()))
    }
}

impl<'de> Deserialize<'de> for Chain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Chain::from_blocks(Vec::<Block>::deserialize(deserializer)?))
    }
}

/// What a miner needs from the chain it commits to.
///
/// `snapshot` is the view used for picking the predecessor and for chain
/// verification; `compare_and_append` is the commit point.
pub trait Ledger {
    fn snapshot(&self) -> Chain;
    fn compare_and_append(&self, block: Arc<Block>) -> AppendOutcome;
    /// Authoritative blocks at heights `>= height`.
    fn blocks_since(&self, height: usize) -> Vec<Arc<Block>>;
}

/// A chain shared between concurrent miners.
#[derive(Debug, Default)]
pub struct SharedChain {
    inner: RwLock<Chain>,
}

impl SharedChain {
    pub fn new(chain: Chain) -> Self {
        SharedChain {
            inner: RwLock::new(chain),
        }
    }

    pub fn len(&self) -> usize {
        self.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.read().is_empty()
    }

    pub fn head_id(&self) -> String {
        self.read().head_id().to_owned()
    }

    pub fn into_inner(self) -> Chain {
        self.inner.into_inner().unwrap_or_else(|e| e.into_inner())
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Chain> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }
}

impl Ledger for SharedChain {
    fn snapshot(&self) -> Chain {
        self.read().clone()
    }

    fn compare_and_append(&self, block: Arc<Block>) -> AppendOutcome {
        self.inner
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .append_block(block)
    }

    fn blocks_since(&self, height: usize) -> Vec<Arc<Block>> {
        self.read().blocks().get(height..).unwrap_or_default().to_vec()
    }
}
