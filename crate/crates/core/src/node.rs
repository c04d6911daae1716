//! Per-node event handlers: sending, receiving and periodic mining.
//!
//! A node keeps a local chain view, a backlog and a document store. Mining
//! runs against the local view and commits through a cluster [`Ledger`], so
//! a node holding a stale view loses the race instead of forking.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use uuid::Uuid;

use crate::chain::{
    create_transaction_with_uuid, mine, verify_block, Account, AppendOutcome, Backlog, Block, Chain, Difficulty,
    Ledger, MineOutcome, MineReport, MiningParams, Timestamp, Transaction, TransactionError, TxVerdict,
};
use crate::store::{self, Document, DocumentStore, Entity, StoreError};

#[derive(Debug, Clone)]
pub struct NodeConfig {
    pub account: Account,
    pub tx_per_block: usize,
    /// Virtual-time ticks between backlog checks, at least 1.
    pub mining_interval: u64,
    pub difficulty: Difficulty,
    pub is_miner: bool,
    /// Threads used for chain verification while mining.
    pub verify_workers: usize,
}

impl NodeConfig {
    pub fn new(account: Account) -> Self {
        NodeConfig {
            account,
            tx_per_block: 1,
            mining_interval: 1,
            difficulty: Difficulty::default(),
            is_miner: false,
            verify_workers: 1,
        }
    }

    fn mining_params(&self) -> MiningParams {
        MiningParams {
            tx_per_block: self.tx_per_block,
            difficulty: self.difficulty,
            workers: self.verify_workers,
            pow_cap: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error("node is offline; offline transactions are not supported")]
    Offline,
    #[error(transparent)]
    Transaction(#[from] TransactionError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid node configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReceiveOutcome {
    /// A new transaction entered the backlog.
    Enqueued,
    /// The given number of blocks were appended (a buffered successor may follow).
    Appended(usize),
    /// Held until its predecessor arrives.
    Buffered,
    AlreadyKnown,
    /// Block failed verification or belongs to an abandoned branch.
    Rejected,
    Ignored,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedRecord {
    pub tx_id: String,
    pub verdict: TxVerdict,
    pub reason: String,
}

/// Problem notice delivered to every node, e.g. a tampered transaction.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ProblemReport {
    pub reporter: String,
    pub tx_id: String,
    pub reason: String,
}

impl ProblemReport {
    pub fn key(&self) -> String {
        format!("{}:{}", self.reporter, self.tx_id)
    }
}

/// Where every transaction this node ever accepted ended up.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TxAccounting {
    pub in_chain: usize,
    pub dropped: usize,
    pub pending: usize,
    /// Accepted but found nowhere. Must be zero.
    pub missing: usize,
}

#[derive(Debug)]
pub struct Node {
    config: NodeConfig,
    online: bool,
    backlog: Backlog,
    chain: Chain,
    store: DocumentStore,
    /// Blocks waiting for their predecessor, keyed by predecessor id.
    orphans: HashMap<String, Block>,
    seen_tx: HashSet<String>,
    dropped: Vec<DroppedRecord>,
    reports: Vec<ProblemReport>,
}

/// Local view for steps 2 and 4, cluster ledger for the commit.
struct NodeView<'a> {
    local: &'a Chain,
    cluster: &'a dyn Ledger,
}

impl Ledger for NodeView<'_> {
    fn snapshot(&self) -> Chain {
        self.local.clone()
    }

    fn compare_and_append(&self, block: Arc<Block>) -> AppendOutcome {
        self.cluster.compare_and_append(block)
    }

    fn blocks_since(&self, height: usize) -> Vec<Arc<Block>> {
        self.cluster.blocks_since(height)
    }
}

impl Node {
    pub fn new(config: NodeConfig) -> Result<Self, NodeError> {
        if config.mining_interval == 0 {
            return Err(NodeError::Config("mining_interval must be at least 1"));
        }
        if config.tx_per_block == 0 {
            return Err(NodeError::Config("tx_per_block must be at least 1"));
        }
        let mut store = DocumentStore::new();
        store.put(store::account_document(&config.account))?;
        Ok(Node {
            config,
            online: true,
            backlog: Backlog::new(),
            chain: Chain::new(),
            store,
            orphans: HashMap::new(),
            seen_tx: HashSet::new(),
            dropped: Vec::new(),
            reports: Vec::new(),
        })
    }

    /// Rebuilds a node from its persisted store: chain from the block
    /// documents, backlog from transactions not yet in the chain.
    pub fn restore(config: NodeConfig, persisted: DocumentStore) -> Result<Self, NodeError> {
        let mut node = Node::new(config)?;
        node.store = persisted;
        for doc in node.store.query_by_type("block") {
            if let Entity::Block(block) = store::decode_document(&doc)? {
                node.chain.append_block(Arc::new(block));
            }
        }
        for doc in node.store.query_by_type("transaction") {
            if let Entity::Transaction(tx) = store::decode_document(&doc)? {
                node.seen_tx.insert(tx.id.clone());
                if !node.chain.contains_tx(&tx.id) {
                    node.backlog.push(tx);
                }
            }
        }
        Ok(node)
    }

    pub fn id(&self) -> &str {
        &self.config.account.username
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn account(&self) -> &Account {
        &self.config.account
    }

    pub fn is_online(&self) -> bool {
        self.online
    }

    pub fn set_online(&mut self, online: bool) {
        self.online = online;
    }

    pub fn backlog(&self) -> &Backlog {
        &self.backlog
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn store(&self) -> &DocumentStore {
        &self.store
    }

    pub fn dropped(&self) -> &[DroppedRecord] {
        &self.dropped
    }

    pub fn reports(&self) -> &[ProblemReport] {
        &self.reports
    }

    /// Creates a transaction, enqueues it locally and returns it for upload.
    pub fn on_send(
        &mut self,
        payload: &str,
        dest_pubkey: &str,
        now: Timestamp,
        uuid: Uuid,
    ) -> Result<Transaction, NodeError> {
        if !self.online {
            return Err(NodeError::Offline);
        }
        let tx = create_transaction_with_uuid(payload, &self.config.account, dest_pubkey, now, uuid)?;
        self.store.put(store::transaction_document(&tx))?;
        self.seen_tx.insert(tx.id.clone());
        self.backlog.push(tx.clone());
        Ok(tx)
    }

    pub fn on_receive(&mut self, doc: &Document) -> ReceiveOutcome {
        let entity = match store::decode_document(doc) {
            Ok(entity) => entity,
            Err(e) => {
                log::warn!("{}: dropping malformed document: {e}", self.id());
                return ReceiveOutcome::Malformed;
            }
        };
        match entity {
            Entity::Transaction(tx) => self.receive_transaction(tx),
            Entity::Block(block) => self.receive_block(block),
            Entity::Account(_) => ReceiveOutcome::Ignored,
        }
    }

    fn receive_transaction(&mut self, tx: Transaction) -> ReceiveOutcome {
        if self.seen_tx.contains(&tx.id) || self.chain.contains_tx(&tx.id) {
            return ReceiveOutcome::AlreadyKnown;
        }
        if let Err(e) = self.store.put(store::transaction_document(&tx)) {
            log::warn!("{}: cannot store transaction: {e}", self.id());
            return ReceiveOutcome::Malformed;
        }
        self.seen_tx.insert(tx.id.clone());
        self.backlog.push(tx);
        ReceiveOutcome::Enqueued
    }

    fn receive_block(&mut self, block: Block) -> ReceiveOutcome {
        if self.chain.contains_block(&block.id) || self.orphans.values().any(|b| b.id == block.id) {
            return ReceiveOutcome::AlreadyKnown;
        }
        if block.previous_block() != self.chain.head_id() {
            if block.block_number > self.chain.next_block_number() {
                self.orphans.insert(block.previous_block().to_owned(), block);
                return ReceiveOutcome::Buffered;
            }
            return ReceiveOutcome::Rejected;
        }
        let mut appended = 0;
        let mut next = Some(block);
        while let Some(block) = next.take() {
            if !self.adopt_block(block) {
                break;
            }
            appended += 1;
            next = self.orphans.remove(self.chain.head_id());
        }
        if appended == 0 {
            ReceiveOutcome::Rejected
        } else {
            ReceiveOutcome::Appended(appended)
        }
    }

    /// Verifies and appends a block that extends the local head.
    fn adopt_block(&mut self, block: Block) -> bool {
        if block.block_number != self.chain.next_block_number()
            || !verify_block(&block, self.chain.head_id(), self.config.difficulty)
        {
            return false;
        }
        if let Err(e) = self.store.put(store::block_document(&block)) {
            log::warn!("{}: cannot store block: {e}", self.id());
            return false;
        }
        self.record_block(Arc::new(block));
        true
    }

    fn record_block(&mut self, block: Arc<Block>) {
        let ids: HashSet<&str> = block.transactions().iter().map(|t| t.id.as_str()).collect();
        self.backlog.remove_where(|id| ids.contains(id));
        for tx in block.transactions() {
            self.seen_tx.insert(tx.id.clone());
        }
        self.chain.append_block(block);
    }

    pub fn on_report(&mut self, report: ProblemReport) -> bool {
        if self.reports.iter().any(|r| r.key() == report.key()) {
            return false;
        }
        self.reports.push(report);
        true
    }

    /// Periodic check: mines when this node is a miner, online and has work.
    pub fn on_tick(&mut self, cluster: &dyn Ledger, now: Timestamp) -> Option<MineReport> {
        if !self.config.is_miner || !self.online {
            return None;
        }
        let params = self.config.mining_params();
        let view = NodeView {
            local: &self.chain,
            cluster,
        };
        let report = mine(&mut self.backlog, &view, &self.config.account, &params, now);
        for d in &report.dropped {
            self.dropped.push(DroppedRecord {
                tx_id: d.transaction.id.clone(),
                verdict: d.verdict,
                reason: d.reason(),
            });
        }
        if let MineOutcome::Mined(block) = &report.outcome {
            if let Err(e) = self.store.put(store::block_document(block)) {
                log::warn!("{}: cannot store mined block: {e}", self.id());
            }
            self.record_block(block.clone());
        }
        Some(report)
    }

    /// Problem reports for the tampered transactions in `report`.
    pub fn reports_for(&self, report: &MineReport) -> Vec<ProblemReport> {
        report
            .dropped
            .iter()
            .filter(|d| d.is_reportable())
            .map(|d| ProblemReport {
                reporter: self.id().to_owned(),
                tx_id: d.transaction.id.clone(),
                reason: d.reason(),
            })
            .collect()
    }

    pub fn accounting(&self) -> TxAccounting {
        let dropped: HashSet<&str> = self.dropped.iter().map(|d| d.tx_id.as_str()).collect();
        let mut acc = TxAccounting::default();
        for id in &self.seen_tx {
            if self.chain.contains_tx(id) {
                acc.in_chain += 1;
            } else if dropped.contains(id.as_str()) {
                acc.dropped += 1;
            } else if self.backlog.contains(id) {
                acc.pending += 1;
            } else {
                acc.missing += 1;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainBuilder, SharedChain};
    use crate::store::{block_document, transaction_document};

    fn config(seed: u8, miner: bool) -> NodeConfig {
        let account = Account::generate(format!("n{seed}"), Some(&[seed; 32]), Timestamp::from_unix(0)).unwrap();
        NodeConfig {
            is_miner: miner,
            difficulty: Difficulty::new(1).unwrap(),
            ..NodeConfig::new(account)
        }
    }

    fn t(s: i64) -> Timestamp {
        Timestamp::from_unix(s)
    }

    #[test]
    fn send_enqueues_and_offline_send_fails() {
        let mut a = Node::new(config(1, false)).unwrap();
        let dest = config(2, false).account.public_key;
        let tx = a.on_send("hi", &dest, t(1), Uuid::from_u128(1)).unwrap();
        assert!(a.backlog().contains(&tx.id));
        assert!(a.store().contains(&format!("transaction:{}", tx.id)));

        let empty = a.on_send("", &dest, t(1), Uuid::from_u128(2)).unwrap();
        assert!(empty.is_authentic());

        a.set_online(false);
        let before = a.store().last_seq();
        assert!(matches!(a.on_send("x", &dest, t(2), Uuid::from_u128(3)), Err(NodeError::Offline)));
        assert_eq!(a.backlog().len(), 2);
        assert_eq!(a.store().last_seq(), before);
    }

    #[test]
    fn receive_is_idempotent() {
        let mut b = ChainBuilder::new(50, Difficulty::new(1).unwrap());
        let tx = b.transaction();
        let mut node = Node::new(config(3, false)).unwrap();
        let doc = transaction_document(&tx);
        assert_eq!(node.on_receive(&doc), ReceiveOutcome::Enqueued);
        assert_eq!(node.on_receive(&doc), ReceiveOutcome::AlreadyKnown);
        assert_eq!(node.backlog().len(), 1);
        assert_eq!(node.on_receive(&serde_json::json!({"type": "transaction"})), ReceiveOutcome::Malformed);
        assert_eq!(node.on_receive(&serde_json::json!([1, 2])), ReceiveOutcome::Malformed);
    }

    #[test]
    fn block_receipt_clears_backlog_and_buffers_out_of_order() {
        let mut b = ChainBuilder::new(51, Difficulty::new(1).unwrap());
        let chain = b.build(3, 1);
        let mut node = Node::new(config(4, false)).unwrap();
        for block in chain.blocks() {
            node.on_receive(&transaction_document(&block.transactions()[0]));
        }
        assert_eq!(node.backlog().len(), 3);
        let docs: Vec<_> = chain.blocks().iter().map(|b| block_document(b)).collect();
        assert_eq!(node.on_receive(&docs[2]), ReceiveOutcome::Buffered);
        assert_eq!(node.on_receive(&docs[0]), ReceiveOutcome::Appended(1));
        assert_eq!(node.on_receive(&docs[1]), ReceiveOutcome::Appended(2));
        assert_eq!(node.on_receive(&docs[1]), ReceiveOutcome::AlreadyKnown);
        assert_eq!(node.chain(), &chain);
        assert!(node.backlog().is_empty());
        // A transaction already in the chain does not re-enter the backlog.
        assert_eq!(
            node.on_receive(&transaction_document(&chain.blocks()[0].transactions()[0])),
            ReceiveOutcome::AlreadyKnown
        );
    }

    #[test]
    fn tick_mines_and_reports_tampering() {
        let mut b = ChainBuilder::new(52, Difficulty::new(1).unwrap());
        let cluster = SharedChain::default();
        let mut miner = Node::new(config(5, true)).unwrap();
        assert_eq!(miner.on_tick(&cluster, t(1)).unwrap().outcome, MineOutcome::NothingToMine);

        let mut bad = b.transaction();
        bad.transaction.data.payload = "altered".into();
        miner.on_receive(&transaction_document(&bad));
        let report = miner.on_tick(&cluster, t(2)).unwrap();
        assert!(matches!(report.outcome, MineOutcome::Rejected(_)));
        assert_eq!(miner.reports_for(&report).len(), 1);
        assert_eq!(miner.dropped()[0].verdict, TxVerdict::Tampered);
        assert!(cluster.is_empty());

        let good = b.transaction();
        miner.on_receive(&transaction_document(&good));
        let report = miner.on_tick(&cluster, t(3)).unwrap();
        assert!(matches!(report.outcome, MineOutcome::Mined(_)));
        assert_eq!(miner.chain().len(), 1);
        assert_eq!(cluster.len(), 1);
        assert_eq!(
            miner.accounting(),
            TxAccounting {
                in_chain: 1,
                dropped: 1,
                pending: 0,
                missing: 0
            }
        );
    }

    #[test]
    fn non_miner_does_not_mine() {
        let mut b = ChainBuilder::new(53, Difficulty::new(1).unwrap());
        let mut node = Node::new(config(6, false)).unwrap();
        node.on_receive(&transaction_document(&b.transaction()));
        assert!(node.on_tick(&SharedChain::default(), t(1)).is_none());
    }

    #[test]
    fn restore_from_store() {
        let mut b = ChainBuilder::new(54, Difficulty::new(1).unwrap());
        let cluster = SharedChain::default();
        let mut node = Node::new(config(7, true)).unwrap();
        let (x, y) = (b.transaction(), b.transaction());
        node.on_receive(&transaction_document(&x));
        node.on_receive(&transaction_document(&y));
        node.on_tick(&cluster, t(1));
        let restored = Node::restore(config(7, true), node.store().clone()).unwrap();
        assert_eq!(restored.chain(), node.chain());
        assert_eq!(restored.backlog().ids(), vec![y.id]);
    }

    #[test]
    fn rejects_zero_interval() {
        let mut c = config(8, true);
        c.mining_interval = 0;
        assert!(matches!(Node::new(c), Err(NodeError::Config(_))));
    }
}
