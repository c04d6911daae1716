//! The five-step mining pipeline.
//!
//! 1. dequeue up to `tx_per_block` transactions and drop tampered/duplicate ones
//! 2. take the chain head id (`"0"` when empty)
//! 3. proof-of-work over the candidate block
//! 4. verify the existing chain
//! 5. commit with compare-and-append; a moved head means another miner won
//!
//! Steps 1-4 run in [`prepare`] against a chain snapshot and step 5 in
//! [`commit`], so callers can interleave miners between the two.

use std::collections::HashSet;
use std::sync::Arc;

use super::account::Account;
use super::backlog::Backlog;
use super::block::{seal_block, Block, SealError};
use super::ledger::{AppendOutcome, Chain, Ledger};
use super::pow::Difficulty;
use super::time::Timestamp;
use super::transaction::Transaction;
use super::verify::{verify_chain, verify_transaction, TxVerdict};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiningParams {
    pub tx_per_block: usize,
    pub difficulty: Difficulty,
    /// Threads used by the step-4 chain verification.
    pub workers: usize,
    pub pow_cap: Option<u64>,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            tx_per_block: 1,
            difficulty: Difficulty::default(),
            workers: 1,
            pow_cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Step 4 found an altered block in the existing chain.
    ChainInvalid,
    /// Every dequeued transaction was tampered or already mined.
    NoValidTransactions,
    PowCapExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MineOutcome {
    Mined(Arc<Block>),
    Rejected(RejectReason),
    /// The head moved before commit; the block was discarded.
    AlreadyMined,
    NothingToMine,
}

/// A transaction removed from the backlog during step 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedTransaction {
    pub transaction: Transaction,
    pub verdict: TxVerdict,
}

impl DroppedTransaction {
    /// Tampered transactions are reported to the network; duplicates are discarded silently.
    pub fn is_reportable(&self) -> bool {
        self.verdict == TxVerdict::Tampered
    }

    pub fn reason(&self) -> String {
        match self.verdict {
            TxVerdict::Tampered => format!("transaction {} was modified", self.transaction.id),
            TxVerdict::Duplicate => format!("transaction {} is already in the chain", self.transaction.id),
            TxVerdict::Valid => format!("transaction {} is valid", self.transaction.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MineReport {
    pub outcome: MineOutcome,
    pub dropped: Vec<DroppedTransaction>,
}

/// A sealed block waiting for step 5.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub block: Arc<Block>,
    /// Chain length observed at step 2.
    pub base_height: usize,
}

#[derive(Debug, Clone)]
pub enum Prepared {
    Ready(Candidate),
    Finished(MineOutcome),
}

/// Steps 1-4 against `view`.
pub fn prepare(
    backlog: &mut Backlog,
    view: &Chain,
    miner: &Account,
    params: &MiningParams,
    now: Timestamp,
) -> (Prepared, Vec<DroppedTransaction>) {
    assert!(params.tx_per_block >= 1, "tx_per_block must be positive");
    let taken = backlog.pop_up_to(params.tx_per_block);
    if taken.is_empty() {
        return (Prepared::Finished(MineOutcome::NothingToMine), Vec::new());
    }

    let mut valid = Vec::with_capacity(taken.len());
    let mut dropped = Vec::new();
    for tx in taken {
        match verify_transaction(&tx, view) {
            TxVerdict::Valid => valid.push(tx),
            verdict => dropped.push(DroppedTransaction {
                transaction: tx,
                verdict,
            }),
        }
    }
    if valid.is_empty() {
        return (
            Prepared::Finished(MineOutcome::Rejected(RejectReason::NoValidTransactions)),
            dropped,
        );
    }

    let base_height = view.len();
    let previous = view.head_id().to_owned();
    let block = match seal_block(
        view.next_block_number(),
        &previous,
        valid.clone(),
        miner,
        params.difficulty,
        now,
        params.pow_cap,
    ) {
        Ok(block) => block,
        Err(SealError::Pow(_)) => {
            backlog.requeue_front(valid);
            return (
                Prepared::Finished(MineOutcome::Rejected(RejectReason::PowCapExceeded)),
                dropped,
            );
        }
        Err(SealError::Miner(e)) => panic!("miner account has an unusable key: {e}"),
    };

    if !verify_chain(view, params.workers, params.difficulty) {
        backlog.requeue_front(valid);
        return (
            Prepared::Finished(MineOutcome::Rejected(RejectReason::ChainInvalid)),
            dropped,
        );
    }

    (
        Prepared::Ready(Candidate {
            block: Arc::new(block),
            base_height,
        }),
        dropped,
    )
}

/// Step 5. On a stale head, transactions not picked up by the blocks that
/// won go back to the front of the backlog.
pub fn commit<L: Ledger + ?Sized>(candidate: Candidate, backlog: &mut Backlog, ledger: &L) -> MineOutcome {
    match ledger.compare_and_append(candidate.block.clone()) {
        AppendOutcome::Appended => MineOutcome::Mined(candidate.block),
        AppendOutcome::StaleHead => {
            let landed: HashSet<String> = ledger
                .blocks_since(candidate.base_height)
                .iter()
                .flat_map(|b| b.transactions().iter().map(|t| t.id.clone()))
                .collect();
            let unmined: Vec<Transaction> = candidate
                .block
                .transactions()
                .iter()
                .filter(|t| !landed.contains(&t.id))
                .cloned()
                .collect();
            backlog.requeue_front(unmined);
            MineOutcome::AlreadyMined
        }
    }
}

/// Runs all five steps against `ledger`.
pub fn mine<L: Ledger + ?Sized>(
    backlog: &mut Backlog,
    ledger: &L,
    miner: &Account,
    params: &MiningParams,
    now: Timestamp,
) -> MineReport {
    let view = ledger.snapshot();
    let (prepared, dropped) = prepare(backlog, &view, miner, params, now);
    let outcome = match prepared {
        Prepared::Ready(candidate) => commit(candidate, backlog, ledger),
        Prepared::Finished(outcome) => outcome,
    };
    MineReport { outcome, dropped }
}
