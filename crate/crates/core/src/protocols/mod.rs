//! Gossip protocols: uniform algebraic gossip, round-robin broadcast, and TAG.

mod algebraic;
mod broadcast;
mod tag;

pub use algebraic::AlgebraicGossip;
pub use broadcast::{BroadcastMsg, OracleTree, RoundRobinBroadcast, SpanningTreeProtocol};
pub use tag::{Phase, TagMsg, TagProtocol};

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::engine::{Action, Contact, Engine, Protocol, RunOutcome, TimeModel, DEFAULT_MAX_ROUNDS};
use crate::error::{param, Error, Result};
use crate::field::{FieldElement, FieldOrder, Gf2, Gf2m};
use crate::graph::{SpanningTree, Topology};
use crate::rng::{split_seed, SimRng};

/// Runs `$body` with `$f` bound to the concrete field for `$q`.
macro_rules! with_field {
    ($q:expr, $f:ident => $body:expr) => {
        match $q {
            FieldOrder::Q2 => {
                let $f = Gf2;
                $body
            }
            other => {
                let $f = Gf2m::new(other);
                $body
            }
        }
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    /// Uniform algebraic gossip.
    UniformAg,
    /// TAG with round-robin broadcast as the spanning-tree protocol.
    TagBrr,
    /// TAG with a BFS tree available from time 0.
    TagOracle,
    /// Round-robin broadcast alone.
    Brr,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::UniformAg => "uniform_ag",
            ProtocolKind::TagBrr => "tag_brr",
            ProtocolKind::TagOracle => "tag_oracle",
            ProtocolKind::Brr => "brr",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform_ag" | "uniform" | "ag" => ProtocolKind::UniformAg,
            "tag_brr" | "tag" => ProtocolKind::TagBrr,
            "tag_oracle" => ProtocolKind::TagOracle,
            "brr" | "broadcast" => ProtocolKind::Brr,
            other => return Err(param(format!("unknown protocol {other:?}"))),
        })
    }
}

/// Which node initially holds which message. A message may sit at several
/// nodes and a node may hold several messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    k: usize,
    holders: Vec<(usize, usize)>,
}

impl Placement {
    /// Explicit `(message, node)` pairs. Every message in `0..k` must have a holder.
    pub fn new(n: usize, k: usize, holders: Vec<(usize, usize)>) -> Result<Self> {
        if k == 0 {
            return Err(param("k must be at least 1"));
        }
        let mut covered = vec![false; k];
        for &(m, v) in &holders {
            if m >= k || v >= n {
                return Err(param(format!("placement ({m}, {v}) out of range for k={k}, n={n}")));
            }
            covered[m] = true;
        }
        if let Some(m) = covered.iter().position(|c| !c) {
            return Err(param(format!("message {m} has no holder")));
        }
        Ok(Placement { k, holders })
    }

    /// Message i at node i.
    pub fn one_per_node(n: usize) -> Self {
        Placement { k: n, holders: (0..n).map(|i| (i, i)).collect() }
    }

    /// k distinct nodes drawn uniformly without replacement, one message each.
    pub fn uniform(n: usize, k: usize, rng: &mut SimRng) -> Result<Self> {
        if k == 0 || k > n {
            return Err(param(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        let nodes = sample(rng, n, k);
        Ok(Placement { k, holders: nodes.iter().enumerate().collect() })
    }

    pub fn all_at(node: usize, k: usize) -> Self {
        Placement { k, holders: (0..k).map(|m| (m, node)).collect() }
    }

    /// Every node starts with every message.
    pub fn everywhere(n: usize, k: usize) -> Self {
        Placement { k, holders: (0..n).flat_map(|v| (0..k).map(move |m| (m, v))).collect() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn holders(&self) -> &[(usize, usize)] {
        &self.holders
    }

    /// Number of messages held per node.
    pub fn counts(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for &(_, v) in &self.holders {
            c[v] += 1;
        }
        c
    }
}

/// Parameters shared by every protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub time_model: TimeModel,
    pub action: Action,
    pub q: FieldOrder,
    pub seed: u64,
    pub max_rounds: u64,
    /// Keep every contact in [`StoppingReport::events`].
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            time_model: TimeModel::Synchronous,
            action: Action::Exchange,
            q: FieldOrder::Q2,
            seed: 0,
            max_rounds: DEFAULT_MAX_ROUNDS,
            trace: false,
        }
    }
}

impl RunConfig {
    pub fn new(time_model: TimeModel, seed: u64) -> Self {
        RunConfig { time_model, seed, ..Default::default() }
    }

    pub fn with_action(mut self, action: Action) -> Self {
        self.action = action;
        self
    }

    pub fn with_q(mut self, q: FieldOrder) -> Self {
        self.q = q;
        self
    }

    pub fn with_max_rounds(mut self, max_rounds: u64) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    /// Engine stream; protocol-internal draws use a separate substream.
    fn engine_rng(&self) -> SimRng {
        crate::rng::trial_rng(self.seed, 0)
    }

    fn setup_rng(&self) -> SimRng {
        crate::rng::trial_rng(split_seed(self.seed, 1), 0)
    }
}

/// One CSV row of results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub family: String,
    pub n: usize,
    pub k: usize,
    pub q: u16,
    pub protocol: String,
    pub time_model: String,
    pub action: String,
    pub seed: u64,
    pub rounds: u64,
    pub timeslots: Option<u64>,
    pub tree_time: Option<u64>,
    pub tree_diameter: Option<usize>,
    /// Graph diameter, filled in by the experiment harness.
    pub diameter: Option<usize>,
    pub max_degree: Option<usize>,
    pub capped: bool,
}

impl TrialRecord {
    /// Stopping time in rounds; fractional under asynchronous time.
    pub fn stopping_rounds(&self) -> f64 {
        match self.timeslots {
            Some(t) if self.time_model == "async" => t as f64 / self.n as f64,
            _ => self.rounds as f64,
        }
    }

    pub const HEADER: &'static str =
        "family,n,k,q,protocol,time_model,action,seed,rounds,timeslots,tree_time,tree_diameter,diameter,max_degree,capped";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.family,
            self.n,
            self.k,
            self.q,
            self.protocol,
            self.time_model,
            self.action,
            self.seed,
            self.rounds,
            opt(self.timeslots),
            opt(self.tree_time),
            opt(self.tree_diameter.map(|d| d as u64)),
            opt(self.diameter.map(|d| d as u64)),
            opt(self.max_degree.map(|d| d as u64)),
            self.capped
        )
    }
}

/// Outcome of one protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingReport {
    pub record: TrialRecord,
    /// Per-node finish times in rounds (fractional under asynchronous time).
    pub finish_rounds: Vec<f64>,
    /// Contacts in order; empty unless the run was traced.
    pub events: Vec<Contact>,
}

impl StoppingReport {
    pub fn rounds(&self) -> u64 {
        self.record.rounds
    }

    pub fn capped(&self) -> bool {
        self.record.capped
    }

    fn build(
        g: &Topology,
        k: usize,
        protocol: ProtocolKind,
        cfg: &RunConfig,
        out: RunOutcome,
        tree: Option<(u64, usize)>,
        events: Vec<Contact>,
    ) -> Self {
        let n = g.n() as f64;
        let to_rounds = |t: u64| match cfg.time_model {
            TimeModel::Synchronous => t as f64,
            TimeModel::Asynchronous => t as f64 / n,
        };
        let record = TrialRecord {
            family: g.family().map(|f| f.to_string()).unwrap_or_else(|| g.name().to_string()),
            n: g.n(),
            k,
            q: cfg.q.size(),
            protocol: protocol.to_string(),
            time_model: cfg.time_model.to_string(),
            action: cfg.action.to_string(),
            seed: cfg.seed,
            rounds: out.rounds,
            timeslots: out.timeslots,
            tree_time: tree.map(|t| t.0),
            tree_diameter: tree.map(|t| t.1),
            diameter: None,
            max_degree: None,
            capped: out.capped,
        };
        StoppingReport { record, finish_rounds: out.finish.iter().map(|&t| to_rounds(t)).collect(), events }
    }
}

/// Diameter of a spanning tree (two BFS sweeps over tree edges).
pub fn tree_diameter(tree: &SpanningTree) -> usize {
    let n = tree.n();
    let mut adj = vec![Vec::new(); n];
    for v in 0..n {
        if let Some(p) = tree.parent(v) {
            adj[v].push(p);
            adj[p].push(v);
        }
    }
    let far = |s: usize| {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        let mut last = s;
        while let Some(u) = queue.pop_front() {
            last = u;
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        (last, dist[last])
    };
    far(far(tree.root()).0).1
}

fn drive<P: Protocol>(g: &Topology, proto: P, cfg: &RunConfig, events: &mut Vec<Contact>) -> (RunOutcome, P) {
    let mut engine = Engine::new(g, proto, cfg.time_model, cfg.engine_rng()).with_max_rounds(cfg.max_rounds);
    if cfg.trace {
        engine = engine.with_observer(|c| events.push(*c));
    }
    let out = engine.run();
    (out, engine.into_protocol())
}

/// Uniform algebraic gossip until every node reaches rank k.
pub fn run_uniform_ag(g: &Topology, placement: &Placement, cfg: &RunConfig) -> Result<StoppingReport> {
    let k = placement.k();
    let mut events = Vec::new();
    let out = with_field!(cfg.q, f => {
        let proto = AlgebraicGossip::uniform(f, g.n(), placement, None)?;
        drive(g, proto, cfg, &mut events).0
    });
    Ok(StoppingReport::build(g, k, ProtocolKind::UniformAg, cfg, out, None, events))
}

/// Round-robin broadcast from `origin`, with the induced parent tree unless
/// the run hit the round cap.
pub fn run_brr_broadcast(
    g: &Topology,
    origin: usize,
    cfg: &RunConfig,
) -> Result<(Option<SpanningTree>, StoppingReport)> {
    if origin >= g.n() {
        return Err(param(format!("origin {origin} not in graph")));
    }
    let proto = RoundRobinBroadcast::new(g, origin, &mut cfg.setup_rng()).with_action(cfg.action);
    let mut events = Vec::new();
    let (out, proto) = drive(g, proto, cfg, &mut events);
    let tree = proto.tree(g);
    let stats = tree.as_ref().map(|t| (out.rounds, tree_diameter(t)));
    let report = StoppingReport::build(g, 1, ProtocolKind::Brr, cfg, out, stats, events);
    Ok((tree, report))
}

/// Which spanning-tree protocol TAG runs in phase 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeChoice {
    /// Round-robin broadcast from a uniformly random origin.
    RoundRobin,
    /// Round-robin broadcast from a fixed origin.
    RoundRobinFrom(usize),
    /// BFS tree from `root`, present from time 0.
    Oracle(usize),
}

/// TAG: phase 1 builds a spanning tree, phase 2 runs EXCHANGE algebraic
/// gossip with the parent, alternating by wakeup parity.
pub fn run_tag(g: &Topology, placement: &Placement, tree: TreeChoice, cfg: &RunConfig) -> Result<StoppingReport> {
    let k = placement.k();
    let mut setup = cfg.setup_rng();
    let mut events = Vec::new();
    let (kind, out, tree_stats) = match tree {
        TreeChoice::RoundRobin | TreeChoice::RoundRobinFrom(_) => {
            let origin = match tree {
                TreeChoice::RoundRobinFrom(o) => o,
                _ => rand::Rng::random_range(&mut setup, 0..g.n()),
            };
            if origin >= g.n() {
                return Err(param(format!("origin {origin} not in graph")));
            }
            let brr = RoundRobinBroadcast::new(g, origin, &mut setup);
            let (out, stats) = with_field!(cfg.q, f => run_tag_engine(g, TagProtocol::new(f, g.n(), placement, brr)?, cfg, &mut events));
            (ProtocolKind::TagBrr, out, stats)
        }
        TreeChoice::Oracle(root) => {
            let oracle = OracleTree::bfs(g, root)?;
            let (out, stats) = with_field!(cfg.q, f => run_tag_engine(g, TagProtocol::new(f, g.n(), placement, oracle)?, cfg, &mut events));
            (ProtocolKind::TagOracle, out, stats)
        }
    };
    Ok(StoppingReport::build(g, k, kind, cfg, out, tree_stats, events))
}

fn run_tag_engine<F: crate::field::Field, S: SpanningTreeProtocol>(
    g: &Topology,
    proto: TagProtocol<F, S>,
    cfg: &RunConfig,
    events: &mut Vec<Contact>,
) -> (RunOutcome, Option<(u64, usize)>) {
    let (out, proto) = drive(g, proto, cfg, events);
    let n = g.n() as u64;
    let stats = proto.tree_time().and_then(|t| {
        let rounds = match cfg.time_model {
            TimeModel::Synchronous => t,
            TimeModel::Asynchronous => t.div_ceil(n),
        };
        proto.tree().tree(g).map(|tree| (rounds, tree_diameter(&tree)))
    });
    (out, stats)
}

/// Random payloads of `len` symbols for each of `k` messages.
pub fn random_payloads(q: FieldOrder, k: usize, len: usize, rng: &mut SimRng) -> Vec<Vec<FieldElement>> {
    use rand::Rng;
    (0..k).map(|_| (0..len).map(|_| rng.random_range(0..q.size()) as FieldElement).collect()).collect()
}

#[cfg(test)]
mod tests;
