use std::collections::{HashMap, HashSet};

use mobiledger::netsim::{Action, GatewaySpec, NodeSpec, Scenario, SimConfig, Simulation, TimelineEntry};
use mobiledger::node::{Node, NodeConfig};
use mobiledger::store::{block_document, transaction_document};
use mobiledger::{Account, ChainBuilder, Difficulty, Ledger, Timestamp};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random connected topology with a random send and connectivity schedule
/// that ends with every node connected.
fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gateways = rng.gen_range(1..=4);
    let nodes = rng.gen_range(2..=7);
    let gw_ids: Vec<String> = (0..gateways).map(|g| format!("g{g}")).collect();
    let node_ids: Vec<String> = (0..nodes).map(|n| format!("n{n}")).collect();
    let gateway_specs = gw_ids
        .iter()
        .enumerate()
        .map(|(i, id)| GatewaySpec {
            id: id.clone(),
            // A path keeps the graph connected; extra random links add duplicate routes.
            peers: (0..i)
                .filter(|&j| j + 1 == i || rng.gen_bool(0.3))
                .map(|j| gw_ids[j].clone())
                .collect(),
        })
        .collect();
    let node_specs: Vec<NodeSpec> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| NodeSpec {
            id: id.clone(),
            gateway: gw_ids[rng.gen_range(0..gateways)].clone(),
            miner: i == 0 || rng.gen_bool(0.4),
            connected: rng.gen_bool(0.8),
            mining_interval: Some(rng.gen_range(1..4)),
            tx_per_block: Some(rng.gen_range(1..4)),
        })
        .collect();
    let mut timeline = Vec::new();
    for k in 0..rng.gen_range(5..30) {
        let at = k / 2;
        let action = match rng.gen_range(0..10) {
            0 => Action::Disconnect { node: node_ids[rng.gen_range(0..nodes)].clone() },
            1 => Action::Connect { node: node_ids[rng.gen_range(0..nodes)].clone() },
            _ => Action::Send {
                from: node_ids[rng.gen_range(0..nodes)].clone(),
                to: node_ids[rng.gen_range(0..nodes)].clone(),
                payload: format!("p{k}"),
            },
        };
        timeline.push(TimelineEntry { at, action });
    }
    for id in &node_ids {
        timeline.push(TimelineEntry { at: 40, action: Action::Connect { node: id.clone() } });
    }
    Scenario {
        config: SimConfig {
            latency: rng.gen_range(0..3),
            difficulty: Difficulty::new(1).unwrap(),
            seed,
            ..SimConfig::default()
        },
        gateways: gateway_specs,
        nodes: node_specs,
        timeline,
    }
}

fn run_checked(scenario: &Scenario) -> Simulation {
    let mut sim = Simulation::from_scenario(scenario).unwrap();
    let ids: Vec<String> = sim.node_ids().map(str::to_owned).collect();
    let mut frozen: HashMap<String, u64> = HashMap::new();
    while sim.step().unwrap() {
        for id in &ids {
            let m = sim.mobile(id).unwrap();
            let seq = m.node.store().last_seq();
            if m.handle.connected {
                frozen.remove(id);
            } else {
                let before = *frozen.entry(id.clone()).or_insert(seq);
                assert_eq!(before, seq, "{id} changed while disconnected");
            }
        }
    }
    sim
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_networks_converge(seed in any::<u64>()) {
        let scenario = random_scenario(seed);
        let sim = run_checked(&scenario);
        let report = sim.report();
        prop_assert!(report.consistent);

        let cluster = sim.cluster().snapshot();
        let mut seen = HashSet::new();
        for block in cluster.blocks() {
            for tx in block.transactions() {
                prop_assert!(seen.insert(tx.id.clone()), "tx {} mined twice", tx.id);
            }
        }
        for id in sim.node_ids() {
            let node = sim.node(id).unwrap();
            prop_assert_eq!(node.chain(), &cluster);
            let acc = node.accounting();
            prop_assert_eq!(acc.missing, 0);
            // With a miner online at the end nothing stays pending.
            prop_assert_eq!(acc.pending, 0, "{}: {:?}", id, acc);
            prop_assert!(node.backlog().is_empty());
        }
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let scenario = random_scenario(seed);
        let a = run_checked(&scenario).report();
        let b = run_checked(&scenario).report();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn duplicate_delivery_is_idempotent() {
    let mut builder = ChainBuilder::new(5, Difficulty::new(1).unwrap());
    let chain = builder.build(4, 2);
    let loose: Vec<_> = (0..3).map(|_| builder.transaction()).collect();
    let mut docs: Vec<_> = chain
        .blocks()
        .iter()
        .flat_map(|b| b.transactions().iter().map(transaction_document).chain([block_document(b)]))
        .collect();
    docs.extend(loose.iter().map(transaction_document));
    // Blocks out of order exercise the orphan buffer too.
    docs.swap(2, 8);

    let node = || {
        let account = Account::generate("r", Some(&[9; 32]), Timestamp::from_unix(0)).unwrap();
        Node::new(NodeConfig { difficulty: Difficulty::new(1).unwrap(), ..NodeConfig::new(account) }).unwrap()
    };
    let state = |n: &Node| (n.backlog().ids(), n.chain().canonical_bytes(), n.store().len(), n.accounting());
    let mut once = node();
    let mut twice = node();
    for d in &docs {
        once.on_receive(d);
    }
    for d in docs.iter().chain(&docs) {
        twice.on_receive(d);
    }
    assert_eq!(once.chain().len(), 4);
    assert_eq!(once.backlog().len(), 3);
    assert_eq!(state(&once), state(&twice));
}
