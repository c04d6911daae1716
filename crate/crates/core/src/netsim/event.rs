use std::cmp::Ordering;
use std::sync::Arc;

use crate::node::ProblemReport;
use crate::store::Document;

pub type VirtualTime = u64;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// `seq` is the sending gateway's change-feed position, when the
    /// receiver is a mobile node.
    Document { doc: Arc<Document>, seq: Option<u64> },
    Report(ProblemReport),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Deliver { from: Option<String>, payload: Payload },
    Connect,
    Disconnect,
    Tick,
    Send { to: String, payload: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub at: VirtualTime,
    pub target: String,
    pub kind: EventKind,
}

/// Heap entry ordered by (time, insertion order), earliest first.
#[derive(Debug)]
pub(crate) struct Queued {
    pub order: u64,
    pub event: SimEvent,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        (other.event.at, other.order).cmp(&(self.event.at, self.order))
    }
}
