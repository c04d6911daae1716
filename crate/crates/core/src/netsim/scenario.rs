//! JSON scenario files: topology, connectivity timeline and message schedule.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::event::VirtualTime;
use crate::chain::Difficulty;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Per-hop delivery latency in virtual ticks.
    pub latency: VirtualTime,
    pub difficulty: Difficulty,
    pub tx_per_block: usize,
    pub mining_interval: VirtualTime,
    pub seed: u64,
    /// Miners schedule their own backlog checks when they have work.
    pub auto_tick: bool,
    pub event_cap: u64,
    pub verify_workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            latency: 0,
            difficulty: Difficulty::default(),
            tx_per_block: 1,
            mining_interval: 1,
            seed: 0,
            auto_tick: true,
            event_cap: 1_000_000,
            verify_workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewaySpec {
    pub id: String,
    /// Peering is symmetric; listing a link on either side suffices.
    #[serde(default)]
    pub peers: Vec<String>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub gateway: String,
    #[serde(default)]
    pub miner: bool,
    #[serde(default = "yes")]
    pub connected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mining_interval: Option<VirtualTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_per_block: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    Send { from: String, to: String, payload: String },
    Connect { node: String },
    Disconnect { node: String },
    Tick { node: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub at: VirtualTime,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub config: SimConfig,
    pub gateways: Vec<GatewaySpec>,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub timeline: Vec<TimelineEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Five mobile nodes A-E on three fully peered gateways F, G, H.
    /// A and B use F, C and D use G, E uses H and starts disconnected.
    /// B and C mine. No messages are scheduled.
    pub fn five_nodes_three_gateways() -> Self {
        let gw = |id: &str, peers: &[&str]| GatewaySpec {
            id: id.into(),
            peers: peers.iter().map(|p| p.to_string()).collect(),
        };
        let node = |id: &str, gateway: &str, miner: bool, connected: bool| NodeSpec {
            id: id.into(),
            gateway: gateway.into(),
            miner,
            connected,
            mining_interval: None,
            tx_per_block: None,
        };
        Scenario {
            config: SimConfig::default(),
            gateways: vec![gw("F", &["G", "H"]), gw("G", &["H"]), gw("H", &[])],
            nodes: vec![
                node("A", "F", false, true),
                node("B", "F", true, true),
                node("C", "G", true, true),
                node("D", "G", false, true),
                node("E", "H", false, false),
            ],
            timeline: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_and_full_forms() {
        let s = Scenario::from_json(
            r#"{
                "config": {"latency": 2, "difficulty": 1, "seed": 9},
                "gateways": [{"id": "F", "peers": ["G"]}, {"id": "G"}],
                "nodes": [{"id": "A", "gateway": "F"}, {"id": "B", "gateway": "G", "miner": true, "connected": false}],
                "timeline": [
                    {"at": 0, "action": "send", "from": "A", "to": "B", "payload": "hi"},
                    {"at": 4, "action": "connect", "node": "B"},
                    {"at": 5, "action": "tick", "node": "B"}
                ]
            }"#,
        )
        .unwrap();
        assert_eq!(s.config.latency, 2);
        assert_eq!(s.config.difficulty, Difficulty::new(1).unwrap());
        assert_eq!(s.config.event_cap, 1_000_000);
        assert!(s.nodes[0].connected);
        assert!(!s.nodes[1].connected);
        assert_eq!(
            s.timeline[1].action,
            Action::Connect { node: "B".into() }
        );
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(Scenario::from_json(r#"{"gateways": [], "nodes": [], "bogus": 1}"#).is_err());
        assert!(Scenario::from_json(r#"{"gateways": [], "nodes": [], "timeline": [{"at": 0, "action": "fly"}]}"#).is_err());
    }

    #[test]
    fn round_trips() {
        let s = Scenario::five_nodes_three_gateways();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
    }
}
