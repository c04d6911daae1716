//! Transaction, block and whole-chain verification.

use std::collections::HashSet;

use super::block::{compute_tx_hash, Block, BLOCK_VERSION, GENESIS_PREVIOUS};
use super::ledger::Chain;
use super::pow::{block_id, Difficulty};
use super::transaction::Transaction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxVerdict {
    Valid,
    /// Id does not recompute or the sender's signature fails.
    Tampered,
    /// Already recorded in some block of the chain.
    Duplicate,
}

/// Tampered takes precedence over Duplicate.
pub fn verify_transaction(tx: &Transaction, chain: &Chain) -> TxVerdict {
    if !tx.is_authentic() {
        TxVerdict::Tampered
    } else if chain.contains_tx(&tx.id) {
        TxVerdict::Duplicate
    } else {
        TxVerdict::Valid
    }
}

/// Checks a block in isolation against the predecessor id it must follow.
pub fn verify_block(block: &Block, expected_previous: &str, difficulty: Difficulty) -> bool {
    if block.version != BLOCK_VERSION || block.votes.is_empty() || block.transactions().is_empty() {
        return false;
    }
    if compute_tx_hash(block.transactions()) != block.tx_hash {
        return false;
    }
    if !difficulty.is_met_by_hex(&block.id)
        || block_id(block.block_number, &block.tx_hash, expected_previous, block.nonce) != block.id
    {
        return false;
    }
    let votes_ok = block.votes.iter().all(|v| {
        v.vote.is_block_valid
            && v.vote.previous_block == expected_previous
            && v.vote.voting_for_block == block.id
            && v.verify()
    });
    if !votes_ok {
        return false;
    }
    let voters_match = block.block.voters.len() == block.votes.len()
        && block
            .votes
            .iter()
            .zip(&block.block.voters)
            .all(|(v, k)| &v.node_pubkey == k);
    voters_match && block.transactions().iter().all(Transaction::is_authentic)
}

/// Verifies every block against its actual predecessor, spreading blocks
/// over `workers` threads. The answer does not depend on `workers`.
pub fn verify_chain(chain: &Chain, workers: usize, difficulty: Difficulty) -> bool {
    let blocks = chain.blocks();
    if blocks.is_empty() {
        return true;
    }
    if !structure_ok(blocks) {
        return false;
    }
    let check = |i: usize| {
        let prev = if i == 0 {
            GENESIS_PREVIOUS
        } else {
            blocks[i - 1].id.as_str()
        };
        verify_block(&blocks[i], prev, difficulty)
    };
    let workers = workers.clamp(1, blocks.len());
    if workers == 1 {
        return (0..blocks.len()).all(check);
    }
    let chunk = blocks.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..blocks.len())
            .step_by(chunk)
            .map(|start| {
                let end = (start + chunk).min(blocks.len());
                s.spawn(move || (start..end).all(check))
            })
            .collect();
        // Join every handle before answering.
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or(false))
            .fold(true, |acc, ok| acc & ok)
    })
}

/// Consecutive numbering from 1 and no transaction id recorded twice.
fn structure_ok(blocks: &[std::sync::Arc<Block>]) -> bool {
    let mut seen = HashSet::new();
    for (k, block) in blocks.iter().enumerate() {
        if block.block_number != k as u64 + 1 {
            return false;
        }
        if !block.transactions().iter().all(|tx| seen.insert(tx.id.as_str())) {
            return false;
        }
    }
    true
}
