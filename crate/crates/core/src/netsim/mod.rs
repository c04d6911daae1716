//! Discrete-event simulation of mobile nodes attached to sync-gateway servers.
//!
//! Gateways store every document they see and forward it once to their peers
//! and to their attached, connected mobile nodes. Disconnected nodes receive
//! nothing; on reconnect the gateway replays its change feed from the node's
//! last synced position. Mined blocks commit through one ledger shared by the
//! gateway cluster, so concurrent miners cannot fork the chain.
//!
//! The event loop is single-threaded. Events at equal virtual time run in
//! insertion order, which makes runs with equal seeds reproducible.

mod event;
mod scenario;

pub use event::{EventKind, Payload, SimEvent, VirtualTime};
pub use scenario::{Action, GatewaySpec, NodeSpec, Scenario, ScenarioError, SimConfig, TimelineEntry};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};
use std::sync::Arc;
use uuid::Uuid;

use crate::chain::{crypto, Account, MineOutcome, SharedChain, Timestamp};
use crate::node::{Node, NodeConfig, NodeError, ProblemReport};
use crate::store::{self, Document, DocumentStore, StoreError};
use event::Queued;

const EPOCH: i64 = 1_700_000_000;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown gateway `{0}`")]
    UnknownGateway(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("gateways do not form a connected graph")]
    DisconnectedGateways,
    #[error("node `{0}` is disconnected; upload refused")]
    UploadRefused(String),
    #[error("event cap of {0} reached; possible livelock")]
    CapExceeded(u64),
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug)]
pub struct Gateway {
    pub id: String,
    pub peers: BTreeSet<String>,
    pub attached: BTreeSet<String>,
    pub store: DocumentStore,
    /// Which mobile node uploaded the change at a given sequence number.
    origin: HashMap<u64, String>,
    seen_reports: HashSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MobileNodeHandle {
    pub id: String,
    pub connected: bool,
    pub gateway: String,
    pub last_synced_seq: u64,
}

#[derive(Debug)]
pub struct MobileNode {
    pub handle: MobileNodeHandle,
    pub node: Node,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SimStats {
    pub events: u64,
    /// Documents handed to connected mobile nodes.
    pub deliveries: u64,
    pub gateway_deliveries: u64,
    /// Deliveries discarded because the target was offline when they arrived.
    pub dropped_offline: u64,
    pub mined_blocks: u64,
    pub already_mined: u64,
    pub rejected_mines: u64,
    /// Transactions dropped as tampered by a miner.
    pub rejected_transactions: u64,
    pub reports_delivered: u64,
    pub refused_sends: u64,
    pub final_time: VirtualTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeSummary {
    pub connected: bool,
    pub miner: bool,
    pub chain_length: usize,
    pub head: String,
    /// SHA3-256 of the canonical chain bytes.
    pub chain_digest: String,
    pub backlog: usize,
    pub dropped: usize,
    pub reports: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub stats: SimStats,
    pub cluster_blocks: usize,
    /// All connected nodes hold byte-identical chains.
    pub consistent: bool,
    pub nodes: BTreeMap<String, NodeSummary>,
}

pub struct Simulation {
    config: SimConfig,
    now: VirtualTime,
    order: u64,
    queue: BinaryHeap<Queued>,
    gateways: BTreeMap<String, Gateway>,
    nodes: BTreeMap<String, MobileNode>,
    cluster: SharedChain,
    rng: ChaCha8Rng,
    tick_pending: HashSet<String>,
    stats: SimStats,
}

impl Simulation {
    pub fn from_scenario(scenario: &Scenario) -> Result<Self, SimError> {
        let config = scenario.config.clone();
        let mut sim = Simulation {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            now: 0,
            order: 0,
            queue: BinaryHeap::new(),
            gateways: BTreeMap::new(),
            nodes: BTreeMap::new(),
            cluster: SharedChain::default(),
            tick_pending: HashSet::new(),
            stats: SimStats::default(),
        };
        for spec in &scenario.gateways {
            if sim.gateways.contains_key(&spec.id) {
                return Err(SimError::DuplicateId(spec.id.clone()));
            }
            sim.gateways.insert(
                spec.id.clone(),
                Gateway {
                    id: spec.id.clone(),
                    peers: BTreeSet::new(),
                    attached: BTreeSet::new(),
                    store: DocumentStore::new(),
                    origin: HashMap::new(),
                    seen_reports: HashSet::new(),
                },
            );
        }
        for spec in &scenario.gateways {
            for peer in &spec.peers {
                if peer == &spec.id {
                    continue;
                }
                sim.gateway_mut(peer)?.peers.insert(spec.id.clone());
                sim.gateway_mut(&spec.id)?.peers.insert(peer.clone());
            }
        }
        sim.check_gateway_graph()?;

        for spec in &scenario.nodes {
            if sim.nodes.contains_key(&spec.id) || sim.gateways.contains_key(&spec.id) {
                return Err(SimError::DuplicateId(spec.id.clone()));
            }
            sim.gateway_mut(&spec.gateway)?.attached.insert(spec.id.clone());
            let key: [u8; 32] = sim.rng.gen();
            let account = Account::generate(&spec.id, Some(&key), Timestamp::from_unix(EPOCH))
                .expect("32-byte seed");
            let mut node = Node::new(NodeConfig {
                tx_per_block: spec.tx_per_block.unwrap_or(sim.config.tx_per_block),
                mining_interval: spec.mining_interval.unwrap_or(sim.config.mining_interval),
                difficulty: sim.config.difficulty,
                is_miner: spec.miner,
                verify_workers: sim.config.verify_workers,
                account,
            })?;
            node.set_online(spec.connected);
            sim.nodes.insert(
                spec.id.clone(),
                MobileNode {
                    handle: MobileNodeHandle {
                        id: spec.id.clone(),
                        connected: spec.connected,
                        gateway: spec.gateway.clone(),
                        last_synced_seq: 0,
                    },
                    node,
                },
            );
        }

        for entry in &scenario.timeline {
            let (target, kind) = match &entry.action {
                Action::Send { from, to, payload } => {
                    sim.mobile(to)?;
                    (from, EventKind::Send { to: to.clone(), payload: payload.clone() })
                }
                Action::Connect { node } => (node, EventKind::Connect),
                Action::Disconnect { node } => (node, EventKind::Disconnect),
                Action::Tick { node } => (node, EventKind::Tick),
            };
            sim.mobile(target)?;
            sim.schedule(entry.at, target.clone(), kind);
        }
        Ok(sim)
    }

    fn check_gateway_graph(&self) -> Result<(), SimError> {
        let Some(start) = self.gateways.keys().next() else {
            return Ok(());
        };
        let mut seen = BTreeSet::from([start.clone()]);
        let mut frontier = VecDeque::from([start.clone()]);
        while let Some(id) = frontier.pop_front() {
            for peer in &self.gateways[&id].peers {
                if seen.insert(peer.clone()) {
                    frontier.push_back(peer.clone());
                }
            }
        }
        if seen.len() == self.gateways.len() {
            Ok(())
        } else {
            Err(SimError::DisconnectedGateways)
        }
    }

    pub fn now(&self) -> VirtualTime {
        self.now
    }

    pub fn stats(&self) -> &SimStats {
        &self.stats
    }

    pub fn cluster(&self) -> &SharedChain {
        &self.cluster
    }

    pub fn gateway(&self, id: &str) -> Result<&Gateway, SimError> {
        self.gateways.get(id).ok_or_else(|| SimError::UnknownGateway(id.into()))
    }

    fn gateway_mut(&mut self, id: &str) -> Result<&mut Gateway, SimError> {
        self.gateways.get_mut(id).ok_or_else(|| SimError::UnknownGateway(id.into()))
    }

    pub fn mobile(&self, id: &str) -> Result<&MobileNode, SimError> {
        self.nodes.get(id).ok_or_else(|| SimError::UnknownNode(id.into()))
    }

    fn mobile_mut(&mut self, id: &str) -> Result<&mut MobileNode, SimError> {
        self.nodes.get_mut(id).ok_or_else(|| SimError::UnknownNode(id.into()))
    }

    pub fn node(&self, id: &str) -> Result<&Node, SimError> {
        Ok(&self.mobile(id)?.node)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    fn timestamp(&self) -> Timestamp {
        Timestamp::from_unix(EPOCH + self.now as i64)
    }

    pub fn schedule(&mut self, at: VirtualTime, target: String, kind: EventKind) {
        self.order += 1;
        self.queue.push(Queued {
            order: self.order,
            event: SimEvent { at, target, kind },
        });
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    /// A connected node hands `doc` to its gateway, which stores and broadcasts it.
    pub fn upload(&mut self, node_id: &str, doc: Document) -> Result<(), SimError> {
        let handle = &self.mobile(node_id)?.handle;
        if !handle.connected {
            return Err(SimError::UploadRefused(node_id.into()));
        }
        let gateway = handle.gateway.clone();
        self.gateway_receive(&gateway, Arc::new(doc), Some(node_id))
    }

    /// Stores `doc` at `gateway` and forwards it, unless already seen there.
    pub fn broadcast(&mut self, gateway: &str, doc: Document) -> Result<(), SimError> {
        self.gateway_receive(gateway, Arc::new(doc), None)
    }

    fn gateway_receive(&mut self, gw_id: &str, doc: Arc<Document>, from: Option<&str>) -> Result<(), SimError> {
        let doc_id = store::document_id(&doc)?;
        let gw = self.gateway_mut(gw_id)?;
        if gw.store.contains(&doc_id) {
            return Ok(());
        }
        let seq = gw.store.put(doc.as_ref().clone())?;
        let from_mobile = from.filter(|f| gw.attached.contains(*f));
        if let Some(origin) = from_mobile {
            gw.origin.insert(seq, origin.to_owned());
        }
        let peers: Vec<String> = gw.peers.iter().filter(|p| Some(p.as_str()) != from).cloned().collect();
        let attached: Vec<String> = gw.attached.iter().filter(|n| Some(n.as_str()) != from).cloned().collect();
        let at = self.now + self.config.latency;
        for peer in peers {
            self.schedule(
                at,
                peer,
                EventKind::Deliver {
                    from: Some(gw_id.to_owned()),
                    payload: Payload::Document { doc: doc.clone(), seq: None },
                },
            );
        }
        for node in attached {
            if self.nodes[&node].handle.connected {
                self.schedule(
                    at,
                    node,
                    EventKind::Deliver {
                        from: Some(gw_id.to_owned()),
                        payload: Payload::Document { doc: doc.clone(), seq: Some(seq) },
                    },
                );
            }
        }
        Ok(())
    }

    fn gateway_report(&mut self, gw_id: &str, report: ProblemReport, from: Option<&str>) -> Result<(), SimError> {
        let gw = self.gateway_mut(gw_id)?;
        if !gw.seen_reports.insert(report.key()) {
            return Ok(());
        }
        let targets: Vec<String> = gw
            .peers
            .iter()
            .chain(gw.attached.iter())
            .filter(|t| Some(t.as_str()) != from)
            .cloned()
            .collect();
        let at = self.now + self.config.latency;
        for target in targets {
            if self.nodes.get(&target).is_some_and(|n| !n.handle.connected) {
                continue;
            }
            self.schedule(
                at,
                target,
                EventKind::Deliver {
                    from: Some(gw_id.to_owned()),
                    payload: Payload::Report(report.clone()),
                },
            );
        }
        Ok(())
    }

    pub fn disconnect(&mut self, node_id: &str) -> Result<(), SimError> {
        let m = self.mobile_mut(node_id)?;
        m.handle.connected = false;
        m.node.set_online(false);
        Ok(())
    }

    /// Marks the node connected and schedules replay of everything its
    /// gateway stored since the node's last synced sequence. Returns the
    /// number of deliveries scheduled; zero if already connected.
    pub fn reconnect(&mut self, node_id: &str) -> Result<usize, SimError> {
        let m = self.mobile_mut(node_id)?;
        if m.handle.connected {
            return Ok(0);
        }
        m.handle.connected = true;
        m.node.set_online(true);
        let (gw_id, since) = (m.handle.gateway.clone(), m.handle.last_synced_seq);
        let gw = self.gateway(&gw_id)?;
        let replay: Vec<(u64, Arc<Document>)> = gw
            .store
            .changes_since(since)
            .iter()
            .filter(|c| gw.origin.get(&c.seq).map(String::as_str) != Some(node_id))
            .map(|c| (c.seq, c.document.clone()))
            .collect();
        let at = self.now + self.config.latency;
        let count = replay.len();
        for (seq, doc) in replay {
            self.schedule(
                at,
                node_id.to_owned(),
                EventKind::Deliver {
                    from: Some(gw_id.clone()),
                    payload: Payload::Document { doc, seq: Some(seq) },
                },
            );
        }
        self.schedule_tick_if_needed(node_id);
        Ok(count)
    }

    fn schedule_tick_if_needed(&mut self, node_id: &str) {
        if !self.config.auto_tick || self.tick_pending.contains(node_id) {
            return;
        }
        let n = &self.nodes[node_id].node;
        if n.config().is_miner && n.is_online() && !n.backlog().is_empty() {
            let at = self.now + n.config().mining_interval;
            self.tick_pending.insert(node_id.to_owned());
            self.schedule(at, node_id.to_owned(), EventKind::Tick);
        }
    }

    /// Processes one event. Returns false when the queue is empty.
    pub fn step(&mut self) -> Result<bool, SimError> {
        let Some(Queued { event, .. }) = self.queue.pop() else {
            return Ok(false);
        };
        self.now = self.now.max(event.at);
        self.stats.events += 1;
        let target = event.target;
        match event.kind {
            EventKind::Deliver { from, payload } => {
                if self.gateways.contains_key(&target) {
                    self.stats.gateway_deliveries += 1;
                    match payload {
                        Payload::Document { doc, .. } => self.gateway_receive(&target, doc, from.as_deref())?,
                        Payload::Report(r) => self.gateway_report(&target, r, from.as_deref())?,
                    }
                } else {
                    self.deliver_to_mobile(&target, payload)?;
                }
            }
            EventKind::Connect => {
                self.reconnect(&target)?;
            }
            EventKind::Disconnect => self.disconnect(&target)?,
            EventKind::Tick => self.tick(&target)?,
            EventKind::Send { to, payload } => self.send(&target, &to, &payload)?,
        }
        Ok(true)
    }

    fn deliver_to_mobile(&mut self, node_id: &str, payload: Payload) -> Result<(), SimError> {
        let m = self.mobile_mut(node_id)?;
        if !m.handle.connected {
            self.stats.dropped_offline += 1;
            return Ok(());
        }
        match payload {
            Payload::Document { doc, seq } => {
                m.node.on_receive(&doc);
                if let Some(seq) = seq {
                    m.handle.last_synced_seq = m.handle.last_synced_seq.max(seq);
                }
                self.stats.deliveries += 1;
                self.schedule_tick_if_needed(node_id);
            }
            Payload::Report(report) => {
                if m.node.on_report(report) {
                    self.stats.reports_delivered += 1;
                }
            }
        }
        Ok(())
    }

    fn send(&mut self, from: &str, to: &str, payload: &str) -> Result<(), SimError> {
        let dest = self.mobile(to)?.node.account().public_key.clone();
        let uuid = Uuid::from_bytes(self.rng.gen());
        let now = self.timestamp();
        let m = self.mobile_mut(from)?;
        match m.node.on_send(payload, &dest, now, uuid) {
            Ok(tx) => {
                self.upload(from, store::transaction_document(&tx))?;
                self.schedule_tick_if_needed(from);
            }
            Err(NodeError::Offline) => self.stats.refused_sends += 1,
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }

    fn tick(&mut self, node_id: &str) -> Result<(), SimError> {
        self.tick_pending.remove(node_id);
        let now = self.timestamp();
        let m = self.nodes.get_mut(node_id).ok_or_else(|| SimError::UnknownNode(node_id.into()))?;
        let Some(report) = m.node.on_tick(&self.cluster, now) else {
            return Ok(());
        };
        let problems = m.node.reports_for(&report);
        for p in &problems {
            m.node.on_report(p.clone());
        }
        let gateway = m.handle.gateway.clone();
        self.stats.rejected_transactions += problems.len() as u64;
        match &report.outcome {
            MineOutcome::Mined(block) => {
                self.stats.mined_blocks += 1;
                self.upload(node_id, store::block_document(block))?;
            }
            MineOutcome::AlreadyMined => self.stats.already_mined += 1,
            MineOutcome::Rejected(_) => self.stats.rejected_mines += 1,
            MineOutcome::NothingToMine => {}
        }
        for p in problems {
            self.gateway_report(&gateway, p, Some(node_id))?;
        }
        self.schedule_tick_if_needed(node_id);
        Ok(())
    }

    /// Runs events until none remain or the event cap is hit.
    pub fn run_until_quiescent(&mut self) -> Result<SimStats, SimError> {
        loop {
            if self.queue.is_empty() {
                break;
            }
            if self.stats.events >= self.config.event_cap {
                return Err(SimError::CapExceeded(self.config.event_cap));
            }
            self.step()?;
        }
        self.stats.final_time = self.now;
        Ok(self.stats.clone())
    }

    /// Runs every event scheduled at or before `until`.
    pub fn run_until(&mut self, until: VirtualTime) -> Result<(), SimError> {
        while self.queue.peek().is_some_and(|q| q.event.at <= until) {
            if self.stats.events >= self.config.event_cap {
                return Err(SimError::CapExceeded(self.config.event_cap));
            }
            self.step()?;
        }
        self.now = self.now.max(until);
        Ok(())
    }

    /// True when every connected node holds the same chain bytes.
    pub fn connected_chains_identical(&self) -> bool {
        let mut chains = self
            .nodes
            .values()
            .filter(|m| m.handle.connected)
            .map(|m| m.node.chain().canonical_bytes());
        match chains.next() {
            Some(first) => chains.all(|c| c == first),
            None => true,
        }
    }

    pub fn report(&self) -> SimReport {
        let nodes = self
            .nodes
            .iter()
            .map(|(id, m)| {
                let n = &m.node;
                (
                    id.clone(),
                    NodeSummary {
                        connected: m.handle.connected,
                        miner: n.config().is_miner,
                        chain_length: n.chain().len(),
                        head: n.chain().head_id().to_owned(),
                        chain_digest: crypto::sha3_256(&n.chain().canonical_bytes()),
                        backlog: n.backlog().len(),
                        dropped: n.dropped().len(),
                        reports: n.reports().len(),
                    },
                )
            })
            .collect();
        SimReport {
            stats: self.stats.clone(),
            cluster_blocks: self.cluster.len(),
            consistent: self.connected_chains_identical(),
            nodes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainBuilder, Difficulty};

    fn quick(mut s: Scenario) -> Scenario {
        s.config.difficulty = Difficulty::new(1).unwrap();
        s
    }

    fn send(at: VirtualTime, from: &str, to: &str, payload: &str) -> TimelineEntry {
        TimelineEntry {
            at,
            action: Action::Send {
                from: from.into(),
                to: to.into(),
                payload: payload.into(),
            },
        }
    }

    #[test]
    fn empty_queue_returns_zero_counts() {
        let mut sim = Simulation::from_scenario(&quick(Scenario::five_nodes_three_gateways())).unwrap();
        let stats = sim.run_until_quiescent().unwrap();
        assert_eq!(stats, SimStats::default());
    }

    #[test]
    fn upload_requires_connection() {
        let mut sim = Simulation::from_scenario(&quick(Scenario::five_nodes_three_gateways())).unwrap();
        let tx = ChainBuilder::new(1, Difficulty::new(1).unwrap()).transaction();
        let doc = store::transaction_document(&tx);
        assert!(matches!(sim.upload("E", doc.clone()), Err(SimError::UploadRefused(_))));
        assert!(sim.gateway("H").unwrap().store.is_empty());
        sim.upload("A", doc).unwrap();
        assert!(sim.gateway("F").unwrap().store.contains(&format!("transaction:{}", tx.id)));
    }

    #[test]
    fn broadcast_reaches_connected_nodes_once() {
        let mut s = quick(Scenario::five_nodes_three_gateways());
        for n in &mut s.nodes {
            n.miner = false;
        }
        let mut sim = Simulation::from_scenario(&s).unwrap();
        let tx = ChainBuilder::new(2, Difficulty::new(1).unwrap()).transaction();
        let doc = store::transaction_document(&tx);
        sim.broadcast("G", doc.clone()).unwrap();
        sim.broadcast("G", doc.clone()).unwrap();
        sim.broadcast("H", doc).unwrap();
        let stats = sim.run_until_quiescent().unwrap();
        assert_eq!(stats.deliveries, 4);
        for id in ["A", "B", "C", "D"] {
            assert!(sim.node(id).unwrap().backlog().contains(&tx.id), "{id}");
        }
        assert!(sim.node("E").unwrap().backlog().is_empty());
        for gw in ["F", "G", "H"] {
            assert_eq!(sim.gateway(gw).unwrap().store.len(), 1);
        }
    }

    #[test]
    fn zero_latency_delivers_in_same_timestep() {
        let mut s = quick(Scenario::five_nodes_three_gateways());
        s.timeline.push(send(7, "A", "C", "hi"));
        for n in &mut s.nodes {
            n.miner = false;
        }
        let mut sim = Simulation::from_scenario(&s).unwrap();
        sim.run_until(7).unwrap();
        assert_eq!(sim.now(), 7);
        assert_eq!(sim.pending_events(), 0);
        assert_eq!(sim.node("D").unwrap().backlog().len(), 1);
    }

    #[test]
    fn latency_delays_delivery() {
        let mut s = quick(Scenario::five_nodes_three_gateways());
        s.config.latency = 3;
        s.timeline.push(send(0, "A", "C", "hi"));
        for n in &mut s.nodes {
            n.miner = false;
        }
        let mut sim = Simulation::from_scenario(&s).unwrap();
        sim.run_until(2).unwrap();
        assert!(sim.node("C").unwrap().backlog().is_empty());
        sim.run_until(3).unwrap();
        assert_eq!(sim.node("B").unwrap().backlog().len(), 1);
        assert!(sim.node("C").unwrap().backlog().is_empty());
        sim.run_until(6).unwrap();
        assert_eq!(sim.node("C").unwrap().backlog().len(), 1);
    }

    #[test]
    fn reconnect_replays_missed_documents() {
        let mut s = quick(Scenario::five_nodes_three_gateways());
        for n in &mut s.nodes {
            n.miner = false;
        }
        for i in 0..100 {
            s.timeline.push(send(i, "A", "C", &format!("m{i}")));
        }
        let mut sim = Simulation::from_scenario(&s).unwrap();
        let before = sim.run_until_quiescent().unwrap().deliveries;
        assert_eq!(sim.gateway("H").unwrap().store.changes_since(0).len(), 100);
        assert_eq!(sim.reconnect("E").unwrap(), 100);
        let after = sim.run_until_quiescent().unwrap().deliveries;
        assert_eq!(after - before, 100);
        assert_eq!(sim.node("E").unwrap().backlog().ids(), sim.node("A").unwrap().backlog().ids());
        // Already synced: nothing to replay.
        sim.disconnect("E").unwrap();
        assert_eq!(sim.reconnect("E").unwrap(), 0);
        assert_eq!(sim.reconnect("E").unwrap(), 0);
    }

    #[test]
    fn in_flight_delivery_to_disconnected_node_is_dropped() {
        let mut s = quick(Scenario::five_nodes_three_gateways());
        s.config.latency = 2;
        for n in &mut s.nodes {
            n.miner = false;
        }
        s.timeline.push(send(0, "A", "C", "hi"));
        s.timeline.push(TimelineEntry {
            at: 1,
            action: Action::Disconnect { node: "B".into() },
        });
        let mut sim = Simulation::from_scenario(&s).unwrap();
        let stats = sim.run_until_quiescent().unwrap();
        assert_eq!(stats.dropped_offline, 1);
        let b = sim.node("B").unwrap();
        assert!(b.backlog().is_empty());
        assert_eq!(b.store().last_seq(), 1, "only the account document");
    }

    #[test]
    fn problem_reports_reach_everyone_connected() {
        let mut sim = Simulation::from_scenario(&quick(Scenario::five_nodes_three_gateways())).unwrap();
        let mut tx = ChainBuilder::new(3, Difficulty::new(1).unwrap()).transaction();
        tx.transaction.data.payload = "changed".into();
        sim.upload("A", store::transaction_document(&tx)).unwrap();
        let stats = sim.run_until_quiescent().unwrap();
        assert_eq!(stats.mined_blocks, 0);
        assert_eq!(stats.rejected_transactions, 2, "both miners drop it");
        for id in ["A", "B", "C", "D"] {
            assert_eq!(sim.node(id).unwrap().reports().len(), 2, "{id}");
        }
        assert!(sim.node("E").unwrap().reports().is_empty());
        assert_eq!(sim.cluster().len(), 0);
    }

    #[test]
    fn livelock_hits_event_cap() {
        let mut s = quick(Scenario::five_nodes_three_gateways());
        s.config.event_cap = 50;
        for i in 0..100 {
            s.timeline.push(send(i, "A", "C", "x"));
        }
        let mut sim = Simulation::from_scenario(&s).unwrap();
        assert!(matches!(sim.run_until_quiescent(), Err(SimError::CapExceeded(50))));
    }

    #[test]
    fn rejects_bad_topologies() {
        let mut s = Scenario::five_nodes_three_gateways();
        s.gateways[0].peers.clear();
        s.gateways[1].peers.clear();
        assert!(matches!(Simulation::from_scenario(&s), Err(SimError::DisconnectedGateways)));

        let mut s = Scenario::five_nodes_three_gateways();
        s.nodes[0].gateway = "Z".into();
        assert!(matches!(Simulation::from_scenario(&s), Err(SimError::UnknownGateway(_))));

        let mut s = Scenario::five_nodes_three_gateways();
        s.timeline.push(send(0, "A", "Q", "x"));
        assert!(matches!(Simulation::from_scenario(&s), Err(SimError::UnknownNode(_))));
    }

    #[test]
    fn offline_send_is_refused() {
        let mut s = quick(Scenario::five_nodes_three_gateways());
        s.timeline.push(send(0, "E", "A", "x"));
        let mut sim = Simulation::from_scenario(&s).unwrap();
        let stats = sim.run_until_quiescent().unwrap();
        assert_eq!(stats.refused_sends, 1);
        assert!(sim.node("E").unwrap().backlog().is_empty());
    }

    fn fig1(first: &str, second: &str, latency: VirtualTime, gap: VirtualTime) -> Simulation {
        let mut s = quick(Scenario::five_nodes_three_gateways());
        s.config.auto_tick = false;
        s.config.latency = latency;
        s.timeline.push(send(0, "A", "C", "hello"));
        let t0 = 2 * latency + 1;
        for (at, node) in [(t0, first), (t0 + gap, second)] {
            s.timeline.push(TimelineEntry {
                at,
                action: Action::Tick { node: node.into() },
            });
        }
        Simulation::from_scenario(&s).unwrap()
    }

    #[test]
    fn both_mining_orders_yield_one_block() {
        for (first, second) in [("B", "C"), ("C", "B")] {
            for (latency, gap) in [(0, 1), (3, 0), (3, 1)] {
                let mut sim = fig1(first, second, latency, gap);
                let stats = sim.run_until_quiescent().unwrap();
                let ctx = format!("{first} first, latency {latency}, gap {gap}");
                assert_eq!(stats.mined_blocks, 1, "{ctx}");
                assert_eq!(sim.cluster().len(), 1, "{ctx}");
                let report = sim.report();
                assert!(report.consistent, "{ctx}");
                for id in ["A", "B", "C", "D"] {
                    let n = sim.node(id).unwrap();
                    assert_eq!(n.chain().len(), 1, "{ctx} {id}");
                    assert!(n.backlog().is_empty(), "{ctx} {id}");
                }
                assert!(sim.node("E").unwrap().chain().is_empty());
                sim.reconnect("E").unwrap();
                sim.run_until_quiescent().unwrap();
                assert_eq!(
                    sim.node("E").unwrap().chain().canonical_bytes(),
                    sim.node("A").unwrap().chain().canonical_bytes()
                );
                assert!(sim.report().consistent);
            }
        }
    }

    #[test]
    fn hundred_messages_two_miners_exactly_once() {
        let mut s = quick(Scenario::five_nodes_three_gateways());
        s.config.latency = 1;
        s.config.tx_per_block = 3;
        s.nodes[4].connected = true;
        let names = ["A", "B", "C", "D", "E"];
        for i in 0..100u64 {
            let from = names[(i % 5) as usize];
            let to = names[((i + 2) % 5) as usize];
            s.timeline.push(send(i / 4, from, to, &format!("msg {i}")));
        }
        let mut sim = Simulation::from_scenario(&s).unwrap();
        sim.run_until_quiescent().unwrap();
        let chain = sim.node("A").unwrap().chain();
        let mut ids: Vec<&str> = chain
            .blocks()
            .iter()
            .flat_map(|b| b.transactions().iter().map(|t| t.id.as_str()))
            .collect();
        assert_eq!(ids.len(), 100);
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 100);
        let mut sent: Vec<String> = names
            .iter()
            .flat_map(|n| {
                sim.node(n)
                    .unwrap()
                    .store()
                    .query_by_type("transaction")
                    .into_iter()
                    .map(|d| d["id"].as_str().unwrap().to_owned())
                    .collect::<Vec<_>>()
            })
            .collect();
        sent.sort_unstable();
        sent.dedup();
        assert_eq!(ids, sent.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(sim.report().consistent);
        for n in names {
            assert!(sim.node(n).unwrap().backlog().is_empty(), "{n}");
        }
    }

    #[test]
    fn equal_seeds_give_equal_reports() {
        let build = |seed| {
            let mut s = quick(Scenario::five_nodes_three_gateways());
            s.config.seed = seed;
            s.config.latency = 2;
            for i in 0..20 {
                s.timeline.push(send(i, "A", "D", "same"));
            }
            let mut sim = Simulation::from_scenario(&s).unwrap();
            sim.run_until_quiescent().unwrap();
            sim.report()
        };
        assert_eq!(build(5), build(5));
        assert_ne!(build(5).nodes["A"].chain_digest, build(6).nodes["A"].chain_digest);
    }
}
