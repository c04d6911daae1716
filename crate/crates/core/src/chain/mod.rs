//! Ledger domain: keys, transactions, blocks, proof-of-work and mining.

pub mod account;
pub mod backlog;
pub mod block;
pub mod builder;
pub mod canonical;
pub mod crypto;
pub mod ledger;
pub mod mining;
pub mod pow;
pub mod time;
pub mod transaction;
pub mod verify;

pub use account::Account;
pub use backlog::Backlog;
pub use block::{compute_tx_hash, make_vote, seal_block, Block, BlockBody, Vote, VoteRecord, GENESIS_PREVIOUS};
pub use builder::ChainBuilder;
pub use canonical::{canonical_serialize, to_canonical_bytes, CanonicalError};
pub use crypto::{base58_decode, base58_encode, generate_keypair, sha3_256, sign, verify_signature, CryptoError, KeyPair};
pub use ledger::{AppendOutcome, Chain, Ledger, SharedChain};
pub use mining::{commit, mine, prepare, Candidate, DroppedTransaction, MineOutcome, MineReport, MiningParams, Prepared, RejectReason};
pub use pow::{proof_of_work, Difficulty, PowError, PowSolution};
pub use time::Timestamp;
pub use transaction::{create_transaction, create_transaction_with_uuid, Transaction, TransactionBody, TransactionData, TransactionError};
pub use verify::{verify_block, verify_chain, verify_transaction, TxVerdict};
