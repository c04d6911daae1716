//! Fixtures shared by the criterion benchmarks.

use mobiledger::{Chain, ChainBuilder, Difficulty};

pub fn easy() -> Difficulty {
    Difficulty::new(1).expect("valid difficulty")
}

/// A deterministic chain sealed at difficulty 1.
pub fn fixture_chain(blocks: usize, tx_per_block: usize) -> Chain {
    ChainBuilder::new(blocks as u64 * 31 + tx_per_block as u64, easy()).build(blocks, tx_per_block)
}
