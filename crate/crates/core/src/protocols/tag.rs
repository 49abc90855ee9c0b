use crate::engine::{Action, EventClock, Intent, PartnerSelector, Protocol};
use crate::error::Result;
use crate::field::{CodedMessage, Field};
use crate::graph::Topology;
use crate::rng::SimRng;

use super::{AlgebraicGossip, Placement, SpanningTreeProtocol};

/// Which half of TAG a contact belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Tree,
    Gossip,
}

#[derive(Clone, Debug)]
pub enum TagMsg<F: Field, M> {
    Tree(M),
    Coded(CodedMessage<F>),
}

/// Tree-based algebraic gossip.
///
/// A node's odd-numbered wakeups (1st, 3rd, ...) run the spanning-tree
/// protocol; even-numbered wakeups EXCHANGE coded messages with the parent,
/// or idle while the node has none. Responders answer in the initiator's
/// phase.
#[derive(Clone, Debug)]
pub struct TagProtocol<F: Field, S> {
    wakeups: Vec<u64>,
    tree: S,
    gossip: AlgebraicGossip<F>,
    tree_time: Option<u64>,
}

impl<F: Field, S: SpanningTreeProtocol> TagProtocol<F, S> {
    pub fn new(field: F, n: usize, placement: &Placement, tree: S) -> Result<Self> {
        let gossip = AlgebraicGossip::new(field, n, placement, None, PartnerSelector::fixed_parent(), Action::Exchange)?;
        Ok(Self::from_parts(gossip, tree))
    }

    /// Uses prepared phase-2 state, e.g. one carrying payloads.
    pub fn from_parts(gossip: AlgebraicGossip<F>, tree: S) -> Self {
        let n = gossip.n();
        let tree_time = tree.is_complete().then_some(0);
        TagProtocol { wakeups: vec![0; n], tree, gossip, tree_time }
    }

    pub fn tree(&self) -> &S {
        &self.tree
    }

    pub fn gossip(&self) -> &AlgebraicGossip<F> {
        &self.gossip
    }

    pub fn wakeups(&self, v: usize) -> u64 {
        self.wakeups[v]
    }

    /// Tick at which every non-root node first had a parent.
    pub fn tree_time(&self) -> Option<u64> {
        self.tree_time
    }
}

impl<F: Field, S: SpanningTreeProtocol> Protocol for TagProtocol<F, S> {
    type Message = TagMsg<F, S::Message>;
    type Channel = Phase;

    fn n(&self) -> usize {
        self.wakeups.len()
    }

    fn on_wakeup(&mut self, g: &Topology, v: usize, rng: &mut SimRng) -> Option<Intent<Phase>> {
        self.wakeups[v] += 1;
        if self.wakeups[v] % 2 == 1 {
            let partner = self.tree.choose_partner(g, v, rng)?;
            Some(Intent { partner, action: Action::Exchange, channel: Phase::Tree })
        } else {
            let partner = self.tree.parent(v)?;
            Some(Intent { partner, action: Action::Exchange, channel: Phase::Gossip })
        }
    }

    fn compose(&self, from: usize, to: usize, phase: Phase, rng: &mut SimRng) -> Option<Self::Message> {
        match phase {
            Phase::Tree => self.tree.compose(from).map(TagMsg::Tree),
            Phase::Gossip => self.gossip.encode_for(from, to, rng).map(TagMsg::Coded),
        }
    }

    fn deliver(&mut self, to: usize, from: usize, _phase: Phase, msg: Self::Message) -> bool {
        match msg {
            TagMsg::Tree(m) => self.tree.receive(to, from, m),
            TagMsg::Coded(m) => self.gossip.absorb(to, m),
        }
    }

    fn node_done(&self, v: usize) -> bool {
        Protocol::node_done(&self.gossip, v)
    }

    fn is_done(&self) -> bool {
        Protocol::is_done(&self.gossip)
    }

    fn observe(&mut self, clock: &EventClock) {
        if self.tree_time.is_none() && self.tree.is_complete() {
            self.tree_time = Some(clock.ticks());
        }
    }
}
