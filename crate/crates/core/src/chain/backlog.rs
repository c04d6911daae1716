use std::collections::{HashSet, VecDeque};

use super::transaction::Transaction;

/// FIFO queue of pending transactions, deduplicated by id.
///
/// Whether a queued transaction is already in the chain is decided at mining
/// time, not here.
#[derive(Debug, Clone, Default)]
pub struct Backlog {
    pending: VecDeque<Transaction>,
    ids: HashSet<String>,
}

impl Backlog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Enqueues at the back. Returns false if the id is already pending.
    pub fn push(&mut self, tx: Transaction) -> bool {
        if !self.ids.insert(tx.id.clone()) {
            return false;
        }
        self.pending.push_back(tx);
        true
    }

    pub fn pop_up_to(&mut self, n: usize) -> Vec<Transaction> {
        let take = n.min(self.pending.len());
        let out: Vec<Transaction> = self.pending.drain(..take).collect();
        for tx in &out {
            self.ids.remove(&tx.id);
        }
        out
    }

    /// Puts transactions back at the front, keeping their relative order.
    pub fn requeue_front(&mut self, txs: Vec<Transaction>) {
        for tx in txs.into_iter().rev() {
            if self.ids.insert(tx.id.clone()) {
                self.pending.push_front(tx);
            }
        }
    }

    /// Removes pending transactions whose id satisfies `pred`; returns how many.
    pub fn remove_where(&mut self, mut pred: impl FnMut(&str) -> bool) -> usize {
        let before = self.pending.len();
        let ids = &mut self.ids;
        self.pending.retain(|tx| {
            let drop = pred(&tx.id);
            if drop {
                ids.remove(&tx.id);
            }
            !drop
        });
        before - self.pending.len()
    }

    pub fn contains(&self, tx_id: &str) -> bool {
        self.ids.contains(tx_id)
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.pending.iter()
    }

    pub fn ids(&self) -> Vec<String> {
        self.pending.iter().map(|t| t.id.clone()).collect()
    }
}
