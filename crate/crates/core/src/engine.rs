//! Discrete-event core: time models, partner selection and PUSH / PULL /
//! EXCHANGE delivery.
//!
//! Asynchronous time advances one timeslot per step, and exactly one node,
//! drawn uniformly, acts in that slot; n consecutive timeslots make a round.
//! Synchronous time advances one round per step and every node acts once.
//! All messages in a synchronous round are composed from the round-start
//! state and delivered only after every node has sent.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graph::Topology;
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum TimeModel {
    #[serde(alias = "sync")]
    Synchronous,
    #[serde(alias = "async")]
    Asynchronous,
}

impl TimeModel {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeModel::Synchronous => "sync",
            TimeModel::Asynchronous => "async",
        }
    }
}

impl fmt::Display for TimeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TimeModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sync" | "synchronous" => Ok(TimeModel::Synchronous),
            "async" | "asynchronous" => Ok(TimeModel::Asynchronous),
            other => Err(param(format!("unknown time model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Push,
    Pull,
    Exchange,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Push => "PUSH",
            Action::Pull => "PULL",
            Action::Exchange => "EXCHANGE",
        }
    }

    fn pushes(self) -> bool {
        matches!(self, Action::Push | Action::Exchange)
    }

    fn pulls(self) -> bool {
        matches!(self, Action::Pull | Action::Exchange)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "push" => Ok(Action::Push),
            "pull" => Ok(Action::Pull),
            "exchange" => Ok(Action::Exchange),
            other => Err(param(format!("unknown action {other:?}"))),
        }
    }
}

/// Simulation time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventClock {
    pub model: TimeModel,
    n: u64,
    /// Timeslots elapsed; always 0 in the synchronous model.
    pub timeslot: u64,
    /// Completed rounds. Asynchronous: `timeslot / n`.
    pub round: u64,
}

impl EventClock {
    pub fn new(model: TimeModel, n: usize) -> Self {
        EventClock { model, n: n as u64, timeslot: 0, round: 0 }
    }

    fn tick(&mut self) {
        match self.model {
            TimeModel::Asynchronous => {
                self.timeslot += 1;
                self.round = self.timeslot / self.n;
            }
            TimeModel::Synchronous => self.round += 1,
        }
    }

    /// Finest-grained time: timeslots (async) or rounds (sync).
    pub fn ticks(&self) -> u64 {
        match self.model {
            TimeModel::Asynchronous => self.timeslot,
            TimeModel::Synchronous => self.round,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectorKind {
    Uniform,
    RoundRobin,
    FixedParent,
}

/// How an initiator picks its communication partner.
#[derive(Clone, Debug)]
pub struct PartnerSelector {
    kind: SelectorKind,
    rr_pointer: Vec<usize>,
}

impl PartnerSelector {
    pub fn uniform() -> Self {
        PartnerSelector { kind: SelectorKind::Uniform, rr_pointer: Vec::new() }
    }

    /// Round-robin over each node's sorted neighbor list, starting from an
    /// independent uniform offset per node.
    pub fn round_robin(g: &Topology, rng: &mut SimRng) -> Self {
        let rr_pointer = (0..g.n()).map(|v| rng.random_range(0..g.degree(v))).collect();
        PartnerSelector { kind: SelectorKind::RoundRobin, rr_pointer }
    }

    pub fn round_robin_from(pointers: Vec<usize>) -> Self {
        PartnerSelector { kind: SelectorKind::RoundRobin, rr_pointer: pointers }
    }

    pub fn fixed_parent() -> Self {
        PartnerSelector { kind: SelectorKind::FixedParent, rr_pointer: Vec::new() }
    }

    pub fn kind(&self) -> SelectorKind {
        self.kind
    }

    pub fn pointer(&self, v: usize) -> Option<usize> {
        self.rr_pointer.get(v).copied()
    }

    /// Partner for `v`'s current wakeup. `parent` is read only by the
    /// fixed-parent selector, which yields `None` for parentless nodes.
    pub fn next(&mut self, g: &Topology, v: usize, parent: Option<usize>, rng: &mut SimRng) -> Option<usize> {
        let nbrs = g.neighbors(v);
        match self.kind {
            SelectorKind::Uniform => Some(nbrs[rng.random_range(0..nbrs.len())]),
            SelectorKind::RoundRobin => {
                let p = &mut self.rr_pointer[v];
                let u = nbrs[*p % nbrs.len()];
                *p = (*p + 1) % nbrs.len();
                Some(u)
            }
            SelectorKind::FixedParent => parent,
        }
    }
}

/// What a waking node wants to do.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Intent<C> {
    pub partner: usize,
    pub action: Action,
    pub channel: C,
}

/// One realized communication.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contact {
    /// Timeslot (async) or round (sync) in which the contact happened, 1-based.
    pub time: u64,
    pub initiator: usize,
    pub partner: usize,
    pub action: Action,
    /// Number of delivered messages that were helpful (0, 1 or 2).
    pub helpful: u8,
}

impl Contact {
    pub fn trace_line(&self) -> String {
        format!(
            "t={} init={} part={} act={} helpful={}",
            self.time, self.initiator, self.partner, self.action, self.helpful
        )
    }

    pub fn parse_trace_line(line: &str) -> Result<Contact> {
        let bad = || Error::Format { line: 0, msg: format!("bad trace line {line:?}") };
        let mut fields = [""; 5];
        let keys = ["t", "init", "part", "act", "helpful"];
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(bad());
        }
        for (slot, (part, key)) in fields.iter_mut().zip(parts.iter().zip(keys)) {
            *slot = part.strip_prefix(key).and_then(|r| r.strip_prefix('=')).ok_or_else(bad)?;
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
        Ok(Contact {
            time: num(fields[0])?,
            initiator: num(fields[1])? as usize,
            partner: num(fields[2])? as usize,
            action: fields[3].parse().map_err(|_| bad())?,
            helpful: num(fields[4])? as u8,
        })
    }
}

/// A gossip protocol as seen by the engine.
///
/// `compose` must read state only; all mutation happens in `on_wakeup` and
/// `deliver`.
pub trait Protocol {
    type Message;
    type Channel: Copy;

    fn n(&self) -> usize;

    fn on_wakeup(&mut self, g: &Topology, v: usize, rng: &mut SimRng) -> Option<Intent<Self::Channel>>;

    /// Message `from` sends to `to` on `channel`; `None` when it has nothing.
    fn compose(&self, from: usize, to: usize, channel: Self::Channel, rng: &mut SimRng) -> Option<Self::Message>;

    /// Applies a received message, returning whether it was helpful.
    fn deliver(&mut self, to: usize, from: usize, channel: Self::Channel, msg: Self::Message) -> bool;

    fn node_done(&self, v: usize) -> bool;

    fn is_done(&self) -> bool;

    /// Called after every step with the advanced clock.
    fn observe(&mut self, _clock: &EventClock) {}
}

/// Result of one engine run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub rounds: u64,
    pub timeslots: Option<u64>,
    /// Per-node finish time in ticks (timeslots or rounds).
    pub finish: Vec<u64>,
    pub capped: bool,
}

pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;

type Observer<'a> = Box<dyn FnMut(&Contact) + 'a>;

pub struct Engine<'a, P: Protocol> {
    g: &'a Topology,
    protocol: P,
    clock: EventClock,
    rng: SimRng,
    max_rounds: u64,
    finish: Vec<Option<u64>>,
    observer: Option<Observer<'a>>,
}

impl<'a, P: Protocol> Engine<'a, P> {
    pub fn new(g: &'a Topology, protocol: P, model: TimeModel, rng: SimRng) -> Self {
        assert_eq!(g.n(), protocol.n(), "protocol sized for a different graph");
        let finish = (0..g.n()).map(|v| protocol.node_done(v).then_some(0)).collect();
        Engine {
            g,
            protocol,
            clock: EventClock::new(model, g.n()),
            rng,
            max_rounds: DEFAULT_MAX_ROUNDS,
            finish,
            observer: None,
        }
    }

    pub fn with_max_rounds(mut self, max_rounds: u64) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    /// Registers a callback that sees every contact after delivery.
    pub fn with_observer(mut self, f: impl FnMut(&Contact) + 'a) -> Self {
        self.observer = Some(Box::new(f));
        self
    }

    pub fn protocol(&self) -> &P {
        &self.protocol
    }

    pub fn into_protocol(self) -> P {
        self.protocol
    }

    pub fn clock(&self) -> &EventClock {
        &self.clock
    }

    fn record(&mut self, to: usize, helpful: bool) {
        if helpful && self.finish[to].is_none() && self.protocol.node_done(to) {
            // The current step has not ticked yet.
            self.finish[to] = Some(self.clock.ticks() + 1);
        }
    }

    fn emit(&mut self, c: &Contact) {
        if let Some(obs) = self.observer.as_mut() {
            obs(c);
        }
    }

    /// One asynchronous timeslot. Returns `None` when the woken node idles.
    ///
    /// Both directions of an EXCHANGE are composed before either is
    /// delivered; initiator→partner is delivered first.
    pub fn step_async(&mut self) -> Option<Contact> {
        let n = self.g.n();
        let v = self.rng.random_range(0..n);
        let intent = self.protocol.on_wakeup(self.g, v, &mut self.rng);
        let contact = intent.map(|it| {
            let out = it
                .action
                .pushes()
                .then(|| self.protocol.compose(v, it.partner, it.channel, &mut self.rng))
                .flatten();
            let back = it
                .action
                .pulls()
                .then(|| self.protocol.compose(it.partner, v, it.channel, &mut self.rng))
                .flatten();
            let mut helpful = 0u8;
            if let Some(m) = out {
                let h = self.protocol.deliver(it.partner, v, it.channel, m);
                self.record(it.partner, h);
                helpful += h as u8;
            }
            if let Some(m) = back {
                let h = self.protocol.deliver(v, it.partner, it.channel, m);
                self.record(v, h);
                helpful += h as u8;
            }
            Contact { time: self.clock.timeslot + 1, initiator: v, partner: it.partner, action: it.action, helpful }
        });
        self.clock.tick();
        self.protocol.observe(&self.clock);
        if let Some(c) = &contact {
            self.emit(c);
        }
        contact
    }

    /// One synchronous round.
    ///
    /// Nodes wake in ascending id order and every message is composed from
    /// the round-start state. Deliveries are applied in ascending
    /// (receiver, sender) order; a second message between the same ordered
    /// pair in one round is discarded.
    pub fn step_sync(&mut self) -> Vec<Contact> {
        let n = self.g.n();
        let time = self.clock.round + 1;
        let mut contacts = Vec::with_capacity(n);
        let mut outbox = Vec::new();
        for v in 0..n {
            let Some(it) = self.protocol.on_wakeup(self.g, v, &mut self.rng) else {
                continue;
            };
            let idx = contacts.len();
            contacts.push(Contact { time, initiator: v, partner: it.partner, action: it.action, helpful: 0 });
            if it.action.pushes() {
                if let Some(m) = self.protocol.compose(v, it.partner, it.channel, &mut self.rng) {
                    outbox.push((it.partner, v, idx, it.channel, m));
                }
            }
            if it.action.pulls() {
                if let Some(m) = self.protocol.compose(it.partner, v, it.channel, &mut self.rng) {
                    outbox.push((v, it.partner, idx, it.channel, m));
                }
            }
        }
        outbox.sort_by_key(|(to, from, ..)| (*to, *from));
        let mut last = None;
        for (to, from, idx, channel, msg) in outbox {
            if last == Some((to, from)) {
                continue;
            }
            last = Some((to, from));
            let h = self.protocol.deliver(to, from, channel, msg);
            self.record(to, h);
            contacts[idx].helpful += h as u8;
        }
        self.clock.tick();
        self.protocol.observe(&self.clock);
        for c in &contacts {
            self.emit(c);
        }
        contacts
    }

    /// Runs until the protocol reports completion or the round cap is hit.
    pub fn run(&mut self) -> RunOutcome {
        let n = self.g.n() as u64;
        let mut capped = false;
        match self.clock.model {
            TimeModel::Synchronous => {
                while !self.protocol.is_done() {
                    if self.clock.round >= self.max_rounds {
                        capped = true;
                        break;
                    }
                    self.step_sync();
                }
            }
            TimeModel::Asynchronous => {
                let cap = self.max_rounds.saturating_mul(n);
                while !self.protocol.is_done() {
                    if self.clock.timeslot >= cap {
                        capped = true;
                        break;
                    }
                    self.step_async();
                }
            }
        }
        let (rounds, timeslots) = match self.clock.model {
            TimeModel::Synchronous => (self.clock.round, None),
            TimeModel::Asynchronous => (self.clock.timeslot.div_ceil(n), Some(self.clock.timeslot)),
        };
        let now = self.clock.ticks();
        RunOutcome { rounds, timeslots, finish: self.finish.iter().map(|f| f.unwrap_or(now)).collect(), capped }
    }
}
