use mobiledger::netsim::{Action, Scenario, Simulation, TimelineEntry};
use mobiledger::node::Node;
use mobiledger::store::DocumentStore;
use mobiledger::Difficulty;

#[test]
fn node_restores_from_saved_store() {
    let mut s = Scenario::five_nodes_three_gateways();
    s.config.difficulty = Difficulty::new(1).unwrap();
    s.config.tx_per_block = 2;
    for i in 0..9 {
        s.timeline.push(TimelineEntry {
            at: i,
            action: Action::Send { from: "A".into(), to: "D".into(), payload: format!("m{i}") },
        });
    }
    // D holds the whole history; E missed it entirely.
    let mut sim = Simulation::from_scenario(&s).unwrap();
    sim.run_until_quiescent().unwrap();
    let d = sim.node("D").unwrap();
    assert!(d.chain().len() >= 5);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    d.store().save(&path).unwrap();
    let loaded = DocumentStore::load(&path).unwrap();
    assert_eq!(&loaded, d.store());

    let restored = Node::restore(d.config().clone(), loaded).unwrap();
    assert_eq!(restored.chain(), d.chain());
    assert_eq!(restored.backlog().ids(), d.backlog().ids());
    assert_eq!(restored.accounting(), d.accounting());
}

#[test]
fn saved_store_is_bit_identical_across_round_trips() {
    let mut s = Scenario::five_nodes_three_gateways();
    s.config.difficulty = Difficulty::new(1).unwrap();
    s.timeline.push(TimelineEntry {
        at: 0,
        action: Action::Send { from: "C".into(), to: "A".into(), payload: "pi \u{3c0} and a \"quote\"".into() },
    });
    let mut sim = Simulation::from_scenario(&s).unwrap();
    sim.run_until_quiescent().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("1.jsonl"), dir.path().join("2.jsonl"));
    sim.node("B").unwrap().store().save(&p1).unwrap();
    DocumentStore::load(&p1).unwrap().save(&p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}
