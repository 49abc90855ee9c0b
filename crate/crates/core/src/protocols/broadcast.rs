use crate::engine::{Action, Intent, PartnerSelector, Protocol};
use crate::error::Result;
use crate::graph::{SpanningTree, Topology};
use crate::rng::SimRng;

/// A gossip protocol whose outcome is a parent pointer at every non-root
/// node. TAG runs one of these in phase 1.
pub trait SpanningTreeProtocol {
    type Message;

    fn n(&self) -> usize;

    /// Partner for a phase-1 wakeup of `v`, or `None` to stay idle.
    fn choose_partner(&mut self, g: &Topology, v: usize, rng: &mut SimRng) -> Option<usize>;

    fn compose(&self, from: usize) -> Option<Self::Message>;

    /// Handles a message from `from`; returns true iff `to` adopted `from`
    /// as its parent.
    fn receive(&mut self, to: usize, from: usize, msg: Self::Message) -> bool;

    fn parent(&self, v: usize) -> Option<usize>;

    fn root(&self) -> usize;

    /// Every non-root node has a parent.
    fn is_complete(&self) -> bool;

    fn tree(&self, g: &Topology) -> Option<SpanningTree>;
}

/// Informed bit and broadcast origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BroadcastMsg {
    pub informed: bool,
    pub origin: usize,
}

/// Broadcast over round-robin gossip. A node's parent is the sender of the
/// first informed message it receives.
#[derive(Clone, Debug)]
pub struct RoundRobinBroadcast {
    origin: usize,
    informed: Vec<bool>,
    parent: Vec<Option<usize>>,
    informed_count: usize,
    selector: PartnerSelector,
    action: Action,
}

impl RoundRobinBroadcast {
    /// Starts from `origin` with uniformly random round-robin offsets.
    pub fn new(g: &Topology, origin: usize, rng: &mut SimRng) -> Self {
        Self::with_selector(g.n(), origin, PartnerSelector::round_robin(g, rng))
    }

    /// Starts from `origin` with explicit round-robin offsets.
    pub fn with_pointers(n: usize, origin: usize, pointers: Vec<usize>) -> Self {
        Self::with_selector(n, origin, PartnerSelector::round_robin_from(pointers))
    }

    fn with_selector(n: usize, origin: usize, selector: PartnerSelector) -> Self {
        let mut informed = vec![false; n];
        informed[origin] = true;
        RoundRobinBroadcast { origin, informed, parent: vec![None; n], informed_count: 1, selector, action: Action::Push }
    }

    /// Action used when run standalone (PUSH by default).
    pub fn with_action(mut self, action: Action) -> Self {
        self.action = action;
        self
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn is_informed(&self, v: usize) -> bool {
        self.informed[v]
    }

    pub fn informed_count(&self) -> usize {
        self.informed_count
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }
}

impl SpanningTreeProtocol for RoundRobinBroadcast {
    type Message = BroadcastMsg;

    fn n(&self) -> usize {
        self.informed.len()
    }

    fn choose_partner(&mut self, g: &Topology, v: usize, rng: &mut SimRng) -> Option<usize> {
        self.selector.next(g, v, None, rng)
    }

    fn compose(&self, from: usize) -> Option<BroadcastMsg> {
        Some(BroadcastMsg { informed: self.informed[from], origin: self.origin })
    }

    fn receive(&mut self, to: usize, from: usize, msg: BroadcastMsg) -> bool {
        if !msg.informed || self.informed[to] {
            return false;
        }
        self.informed[to] = true;
        self.parent[to] = Some(from);
        self.informed_count += 1;
        true
    }

    fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    fn root(&self) -> usize {
        self.origin
    }

    fn is_complete(&self) -> bool {
        self.informed_count == self.informed.len()
    }

    fn tree(&self, g: &Topology) -> Option<SpanningTree> {
        if !self.is_complete() {
            return None;
        }
        SpanningTree::from_parents(g, self.origin, self.parent.clone()).ok()
    }
}

impl Protocol for RoundRobinBroadcast {
    type Message = BroadcastMsg;
    type Channel = ();

    fn n(&self) -> usize {
        self.informed.len()
    }

    fn on_wakeup(&mut self, g: &Topology, v: usize, rng: &mut SimRng) -> Option<Intent<()>> {
        let partner = self.choose_partner(g, v, rng)?;
        Some(Intent { partner, action: self.action, channel: () })
    }

    /// Uninformed nodes have nothing to send.
    fn compose(&self, from: usize, _to: usize, _channel: (), _rng: &mut SimRng) -> Option<BroadcastMsg> {
        self.informed[from].then_some(BroadcastMsg { informed: true, origin: self.origin })
    }

    fn deliver(&mut self, to: usize, from: usize, _channel: (), msg: BroadcastMsg) -> bool {
        self.receive(to, from, msg)
    }

    fn node_done(&self, v: usize) -> bool {
        self.informed[v]
    }

    fn is_done(&self) -> bool {
        self.is_complete()
    }
}

/// A spanning tree known from time 0; phase-1 wakeups are idle.
#[derive(Clone, Debug)]
pub struct OracleTree {
    tree: SpanningTree,
}

impl OracleTree {
    pub fn new(tree: SpanningTree) -> Self {
        OracleTree { tree }
    }

    pub fn bfs(g: &Topology, root: usize) -> Result<Self> {
        Ok(OracleTree { tree: g.bfs_tree(root)? })
    }
}

impl SpanningTreeProtocol for OracleTree {
    type Message = ();

    fn n(&self) -> usize {
        self.tree.n()
    }

    fn choose_partner(&mut self, _g: &Topology, _v: usize, _rng: &mut SimRng) -> Option<usize> {
        None
    }

    fn compose(&self, _from: usize) -> Option<()> {
        None
    }

    fn receive(&mut self, _to: usize, _from: usize, _msg: ()) -> bool {
        false
    }

    fn parent(&self, v: usize) -> Option<usize> {
        self.tree.parent(v)
    }

    fn root(&self) -> usize {
        self.tree.root()
    }

    fn is_complete(&self) -> bool {
        true
    }

    fn tree(&self, _g: &Topology) -> Option<SpanningTree> {
        Some(self.tree.clone())
    }
}
