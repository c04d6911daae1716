//! A proof-of-work transaction ledger for mobile nodes.
//!
//! - [`chain`]: domain types, cryptography, proof-of-work and mining
//! - [`store`]: append-only JSON document store with a change feed
//! - [`node`]: per-node event handlers (send, receive, periodic mining)
//! - [`netsim`]: discrete-event simulation of mobile nodes and sync gateways
//! - [`experiments`]: memory, proof-of-work and verification experiments

pub mod chain;
pub mod experiments;
pub mod netsim;
pub mod node;
pub mod store;

pub use chain::*;
