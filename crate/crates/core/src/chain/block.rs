use serde::{Deserialize, Serialize};

use super::account::Account;
use super::canonical::to_canonical_bytes;
use super::crypto;
use super::pow::{self, Difficulty, PowError};
use super::time::Timestamp;
use super::transaction::Transaction;

pub const BLOCK_VERSION: &str = "1";
/// Previous-block id recorded by the first block of an empty chain.
pub const GENESIS_PREVIOUS: &str = "0";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub is_block_valid: bool,
    pub previous_block: String,
    pub timestamp: Timestamp,
    pub voting_for_block: String,
}

/// A miner's signed statement that a block is valid and follows `previous_block`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub node_pubkey: String,
    pub signature: String,
    pub vote: VoteRecord,
}

impl Vote {
    pub fn signing_bytes(&self) -> Vec<u8> {
        to_canonical_bytes(&self.vote).expect("vote record holds no floats")
    }

    pub fn verify(&self) -> bool {
        crypto::verify_signature(&self.signing_bytes(), &self.signature, &self.node_pubkey)
    }
}

pub fn make_vote(
    block_id: &str,
    previous_block: &str,
    miner: &Account,
    now: Timestamp,
) -> Result<Vote, crypto::CryptoError> {
    let record = VoteRecord {
        is_block_valid: true,
        previous_block: previous_block.to_owned(),
        timestamp: now,
        voting_for_block: block_id.to_owned(),
    };
    let bytes = to_canonical_bytes(&record).expect("vote record holds no floats");
    Ok(Vote {
        node_pubkey: miner.public_key.clone(),
        signature: crypto::sign(&bytes, &miner.private_key)?,
        vote: record,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockBody {
    pub transactions: Vec<Transaction>,
    pub voters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: String,
    pub block_number: u64,
    pub votes: Vec<Vote>,
    pub version: String,
    pub tx_hash: String,
    pub block: BlockBody,
    pub nonce: u64,
}

impl Block {
    pub fn transactions(&self) -> &[Transaction] {
        &self.block.transactions
    }

    /// Predecessor id as recorded by the first vote.
    pub fn previous_block(&self) -> &str {
        self.votes
            .first()
            .map(|v| v.vote.previous_block.as_str())
            .unwrap_or(GENESIS_PREVIOUS)
    }

    pub fn contains_tx(&self, tx_id: &str) -> bool {
        self.block.transactions.iter().any(|t| t.id == tx_id)
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        to_canonical_bytes(self).expect("block holds no floats")
    }
}

/// SHA3-256 over the canonical serialization of the ordered transaction list.
pub fn compute_tx_hash(transactions: &[Transaction]) -> String {
    crypto::sha3_256(&to_canonical_bytes(transactions).expect("transactions hold no floats"))
}

#[derive(Debug, thiserror::Error)]
pub enum SealError {
    #[error(transparent)]
    Pow(#[from] PowError),
    #[error("miner key unusable: {0}")]
    Miner(#[from] crypto::CryptoError),
}

/// Builds a block over `transactions`: hashes them, runs proof-of-work and
/// attaches the miner's vote.
pub fn seal_block(
    block_number: u64,
    previous_block: &str,
    transactions: Vec<Transaction>,
    miner: &Account,
    difficulty: Difficulty,
    now: Timestamp,
    pow_cap: Option<u64>,
) -> Result<Block, SealError> {
    let tx_hash = compute_tx_hash(&transactions);
    let solution = pow::proof_of_work(block_number, &tx_hash, previous_block, difficulty, pow_cap)?;
    let vote = make_vote(&solution.id, previous_block, miner, now)?;
    Ok(Block {
        id: solution.id,
        block_number,
        votes: vec![vote],
        version: BLOCK_VERSION.to_owned(),
        tx_hash,
        block: BlockBody {
            transactions,
            voters: vec![miner.public_key.clone()],
        },
        nonce: solution.nonce,
    })
}
