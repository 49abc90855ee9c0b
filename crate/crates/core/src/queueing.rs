//! Feedforward networks of single-server FCFS queues.
//!
//! A network is a rooted tree of queues; every customer is routed toward the
//! root and leaves the system after being served there. The stopping time
//! t(Q) is the moment the last customer leaves. Queues are labelled so that a
//! parent always has a smaller index than its children, and the root is 0.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graph::SpanningTree;
use crate::rng::{split_seed, trial_rng, SimRng};
use crate::stats::{self, dkw_epsilon, Ecdf, LineFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Tree,
    Line,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduling {
    /// Every queue has its own server.
    #[default]
    WorkConserving,
    /// One server per level, which always takes the customer that reached
    /// the level first.
    OnePerLevel,
}

impl FromStr for Scheduling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "work_conserving" => Ok(Scheduling::WorkConserving),
            "one_per_level" => Ok(Scheduling::OnePerLevel),
            _ => Err(param(format!("unknown scheduling `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceLaw {
    /// Exponential(μ) service times in continuous time.
    #[default]
    Exponential,
    /// Geometric(μ) whole timeslots, at least one.
    Geometric,
}

impl FromStr for ServiceLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(ServiceLaw::Exponential),
            "geometric" => Ok(ServiceLaw::Geometric),
            _ => Err(param(format!("unknown service law `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    /// Merge every level into one queue.
    CollapseLevels,
    /// Move the last customer of line queue `level` to the head of queue `level + 1`.
    MoveCustomerBack { level: usize },
    /// Put every customer into the farthest queue.
    AllCustomersBack,
}

/// A customer injected from outside at a fixed time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExternalArrival {
    pub time: f64,
    pub queue: usize,
    pub customer: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueueNetwork {
    parent: Vec<Option<usize>>,
    level: Vec<usize>,
    mu: f64,
    residents: Vec<Vec<usize>>,
    external: Vec<ExternalArrival>,
    real: usize,
    scheduling: Scheduling,
    service: ServiceLaw,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu > 0.0 {
        Ok(())
    } else {
        Err(param(format!("service rate must be positive, got {mu}")))
    }
}

fn ids_from_counts(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut next = 0;
    counts
        .iter()
        .map(|&c| {
            let ids = (next..next + c).collect();
            next += c;
            ids
        })
        .collect()
}

impl QueueNetwork {
    /// A tandem line; `counts[0]` is the queue next to the exit.
    pub fn line(counts: &[usize], mu: f64) -> Result<Self> {
        let parent = (0..counts.len()).map(|i| i.checked_sub(1)).collect();
        Self::with_residents(parent, ids_from_counts(counts), mu)
    }

    /// A tree given by parent pointers with `parent[0] == None` and
    /// `parent[i] < i` for every other queue.
    pub fn tree(parent: Vec<Option<usize>>, counts: &[usize], mu: f64) -> Result<Self> {
        if parent.len() != counts.len() {
            return Err(param("placement does not match the number of queues"));
        }
        Self::with_residents(parent, ids_from_counts(counts), mu)
    }

    /// Builds a network from explicit resident lists (head of queue first).
    /// Customer ids must be exactly `0..k`.
    pub fn with_residents(parent: Vec<Option<usize>>, residents: Vec<Vec<usize>>, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        let n = parent.len();
        if n == 0 || residents.len() != n {
            return Err(param("network needs one resident list per queue"));
        }
        if parent[0].is_some() {
            return Err(param("queue 0 must be the root"));
        }
        let mut level = vec![0; n];
        for i in 1..n {
            match parent[i] {
                Some(p) if p < i => level[i] = level[p] + 1,
                _ => return Err(param(format!("queue {i} must route to a lower-indexed queue"))),
            }
        }
        let mut seen: Vec<usize> = residents.iter().flatten().copied().collect();
        let k = seen.len();
        if k == 0 {
            return Err(param("network needs at least one customer"));
        }
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(i, &c)| i != c) {
            return Err(param("customer ids must be 0..k without repeats"));
        }
        Ok(QueueNetwork {
            parent,
            level,
            mu,
            residents,
            external: Vec::new(),
            real: k,
            scheduling: Scheduling::WorkConserving,
            service: ServiceLaw::Exponential,
        })
    }

    pub fn with_scheduling(mut self, scheduling: Scheduling) -> Self {
        self.scheduling = scheduling;
        self
    }

    pub fn with_service(mut self, service: ServiceLaw) -> Self {
        self.service = service;
        self
    }

    pub fn shape(&self) -> Shape {
        if self.parent.iter().enumerate().skip(1).all(|(i, p)| *p == Some(i - 1)) {
            Shape::Line
        } else {
            Shape::Tree
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn scheduling(&self) -> Scheduling {
        self.scheduling
    }

    pub fn service(&self) -> ServiceLaw {
        self.service
    }

    pub fn parent(&self, q: usize) -> Option<usize> {
        self.parent[q]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    /// Hops from queue `q` to the root.
    pub fn level(&self, q: usize) -> usize {
        self.level[q]
    }

    pub fn l_max(&self) -> usize {
        self.level.iter().copied().max().unwrap_or(0)
    }

    /// Customers whose exit defines the stopping time.
    pub fn k(&self) -> usize {
        self.real
    }

    /// Every customer, including any filler customers of an oracle network.
    pub fn total_customers(&self) -> usize {
        self.residents.iter().map(Vec::len).sum::<usize>() + self.external.len()
    }

    pub fn residents(&self, q: usize) -> &[usize] {
        &self.residents[q]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.residents.iter().map(Vec::len).collect()
    }

    pub fn external(&self) -> &[ExternalArrival] {
        &self.external
    }

    pub fn transform(&self, which: Transform) -> Result<QueueNetwork> {
        if !self.external.is_empty() {
            return Err(param("transforms apply only to closed networks"));
        }
        let mut out = match which {
            Transform::CollapseLevels => {
                let levels = self.l_max() + 1;
                let mut residents = vec![Vec::new(); levels];
                for (q, ids) in self.residents.iter().enumerate() {
                    residents[self.level[q]].extend_from_slice(ids);
                }
                for ids in &mut residents {
                    ids.sort_unstable();
                }
                let parent = (0..levels).map(|i| i.checked_sub(1)).collect();
                QueueNetwork::with_residents(parent, residents, self.mu)?
            }
            Transform::MoveCustomerBack { level } => {
                self.require_line("move_customer_back")?;
                if level + 1 >= self.len() {
                    return Err(param(format!("queue {level} has no queue behind it")));
                }
                let mut out = self.clone();
                let c = out.residents[level]
                    .pop()
                    .ok_or_else(|| param(format!("queue {level} is empty")))?;
                out.residents[level + 1].insert(0, c);
                out
            }
            Transform::AllCustomersBack => {
                self.require_line("all_customers_back")?;
                let mut out = self.clone();
                let mut all: Vec<usize> = out.residents.iter_mut().flat_map(std::mem::take).collect();
                all.sort_unstable();
                let last = out.len() - 1;
                out.residents[last] = all;
                out
            }
        };
        out.scheduling = Scheduling::WorkConserving;
        out.service = self.service;
        Ok(out)
    }

    fn require_line(&self, what: &str) -> Result<()> {
        if self.shape() == Shape::Line {
            Ok(())
        } else {
            Err(param(format!("{what} needs a line network")))
        }
    }
}

/// Service rate of the reduction for uniform asynchronous gossip.
pub fn mu_uniform_async(n: usize, max_degree: usize) -> f64 {
    1.0 / (2.0 * n as f64 * max_degree as f64)
}

/// Service rate of the reduction when every node contacts a fixed partner.
pub fn mu_fixed_partner(n: usize) -> f64 {
    1.0 / (2.0 * n as f64)
}

/// One queue per tree node, routed toward the root. Queues are numbered in
/// BFS order, so `node_of_queue[q]` gives the node behind queue `q`.
pub fn build_tree_from_graph(tree: &SpanningTree, counts: &[usize], mu: f64) -> Result<(QueueNetwork, Vec<usize>)> {
    if counts.len() != tree.n() {
        return Err(param(format!("placement covers {} nodes, tree has {}", counts.len(), tree.n())));
    }
    let order = tree.bfs_order();
    let mut queue_of = vec![0; tree.n()];
    for (q, &v) in order.iter().enumerate() {
        queue_of[v] = q;
    }
    let parent = order.iter().map(|&v| tree.parent(v).map(|p| queue_of[p])).collect();
    let c: Vec<usize> = order.iter().map(|&v| counts[v]).collect();
    Ok((QueueNetwork::tree(parent, &c, mu)?, order))
}

/// A line of `levels` queues started in equilibrium for external arrival rate
/// μ/2: each queue holds a Geometric number of filler customers, and the `k`
/// tracked customers arrive at the back queue as the first `k` points of a
/// Poisson(μ/2) stream. Stochastically slower than the same line with all
/// `k` customers waiting at the back at time 0.
pub fn jackson_line(levels: usize, k: usize, mu: f64, rng: &mut SimRng) -> Result<QueueNetwork> {
    check_mu(mu)?;
    if levels == 0 || k == 0 {
        return Err(param("jackson line needs at least one queue and one customer"));
    }
    let lambda = mu / 2.0;
    let fill = Geometric::new(1.0 - lambda / mu).expect("valid probability");
    let mut residents = Vec::with_capacity(levels);
    let mut next = k;
    for _ in 0..levels {
        let m = fill.sample(rng) as usize;
        residents.push((next..next + m).collect::<Vec<_>>());
        next += m;
    }
    let gap = Exp::new(lambda).expect("positive rate");
    let mut t = 0.0;
    let external = (0..k)
        .map(|customer| {
            t += gap.sample(rng);
            ExternalArrival { time: t, queue: levels - 1, customer }
        })
        .collect();
    Ok(QueueNetwork {
        parent: (0..levels).map(|i| i.checked_sub(1)).collect(),
        level: (0..levels).collect(),
        mu,
        residents,
        external,
        real: k,
        scheduling: Scheduling::WorkConserving,
        service: ServiceLaw::Exponential,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ServiceRecord {
    pub customer: usize,
    pub arrival: f64,
    pub start: f64,
    pub departure: f64,
}

impl ServiceRecord {
    pub fn service_time(&self) -> f64 {
        self.departure - self.start
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepartureTrace {
    /// Per queue, in departure order.
    pub queues: Vec<Vec<ServiceRecord>>,
    /// Customers leaving the root, in order.
    pub exits: Vec<(usize, f64)>,
    pub stopping_time: f64,
}

impl DepartureTrace {
    pub fn departures(&self, q: usize) -> Vec<f64> {
        self.queues[q].iter().map(|r| r.departure).collect()
    }

    /// Largest deviation from d_i = max(a_i, d_{i-1}) + X_i over all queues.
    pub fn recurrence_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for recs in &self.queues {
            let mut prev = f64::NEG_INFINITY;
            for r in recs {
                let expect = r.arrival.max(prev) + r.service_time();
                worst = worst.max((expect - r.departure).abs());
                prev = r.departure;
            }
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, trial: usize) -> std::io::Result<()> {
        for (q, recs) in self.queues.iter().enumerate() {
            for (i, r) in recs.iter().enumerate() {
                writeln!(w, "{trial},{q},{i},{}", r.departure)?;
            }
        }
        Ok(())
    }
}

pub const TRACE_HEADER: &str = "trial,queue,departure_index,time";

#[derive(Clone, Copy, Debug)]
struct Waiting {
    customer: usize,
    arrival: f64,
    order: usize,
}

#[derive(Clone, Copy, Debug)]
enum EventKind {
    Done(usize),
    Inject(usize),
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

enum Sampler {
    Exp(Exp<f64>),
    Geo(Geometric),
}

impl Sampler {
    fn new(law: ServiceLaw, mu: f64) -> Self {
        match law {
            ServiceLaw::Exponential => Sampler::Exp(Exp::new(mu).expect("positive rate")),
            ServiceLaw::Geometric => Sampler::Geo(Geometric::new(mu.min(1.0)).expect("valid probability")),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exp(d) => d.sample(rng),
            Sampler::Geo(d) => (d.sample(rng) + 1) as f64,
        }
    }
}

struct Sim<'a> {
    net: &'a QueueNetwork,
    sampler: Sampler,
    waiting: Vec<VecDeque<Waiting>>,
    serving: Vec<Option<(Waiting, f64)>>,
    level_busy: Vec<bool>,
    by_level: Vec<Vec<usize>>,
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
    next_order: usize,
    record: Option<Vec<Vec<ServiceRecord>>>,
    exits: Vec<(usize, f64)>,
    last_real_exit: f64,
}

impl<'a> Sim<'a> {
    fn new(net: &'a QueueNetwork, record: bool) -> Self {
        let n = net.len();
        let mut by_level = vec![Vec::new(); net.l_max() + 1];
        for q in 0..n {
            by_level[net.level[q]].push(q);
        }
        let waiting = net
            .residents
            .iter()
            .map(|ids| ids.iter().map(|&c| Waiting { customer: c, arrival: 0.0, order: c }).collect())
            .collect();
        let total = net.total_customers();
        Sim {
            net,
            sampler: Sampler::new(net.service, net.mu),
            waiting,
            serving: vec![None; n],
            level_busy: vec![false; by_level.len()],
            by_level,
            heap: BinaryHeap::new(),
            seq: 0,
            next_order: total,
            record: record.then(|| vec![Vec::new(); n]),
            exits: Vec::with_capacity(if record { total } else { 0 }),
            last_real_exit: 0.0,
        }
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.heap.push(Reverse(Event { time, seq: self.seq, kind }));
        self.seq += 1;
    }

    fn begin(&mut self, q: usize, t: f64, rng: &mut SimRng) {
        let w = self.waiting[q].pop_front().expect("queue has a customer");
        self.serving[q] = Some((w, t));
        let x = self.sampler.draw(rng);
        self.push(t + x, EventKind::Done(q));
    }

    fn try_start(&mut self, q: usize, t: f64, rng: &mut SimRng) {
        match self.net.scheduling {
            Scheduling::WorkConserving => {
                if self.serving[q].is_none() && !self.waiting[q].is_empty() {
                    self.begin(q, t, rng);
                }
            }
            Scheduling::OnePerLevel => {
                let l = self.net.level[q];
                if self.level_busy[l] {
                    return;
                }
                let pick = self.by_level[l]
                    .iter()
                    .filter_map(|&j| self.waiting[j].front().map(|w| (w.arrival, w.order, j)))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                if let Some((_, _, j)) = pick {
                    self.level_busy[l] = true;
                    self.begin(j, t, rng);
                }
            }
        }
    }

    fn arrive(&mut self, q: usize, customer: usize, t: f64, rng: &mut SimRng) {
        let order = self.next_order;
        self.next_order += 1;
        self.waiting[q].push_back(Waiting { customer, arrival: t, order });
        self.try_start(q, t, rng);
    }

    fn run(mut self, rng: &mut SimRng) -> DepartureTrace {
        for (i, a) in self.net.external.iter().enumerate() {
            self.push(a.time, EventKind::Inject(i));
        }
        for q in 0..self.net.len() {
            self.try_start(q, 0.0, rng);
        }
        while let Some(Reverse(ev)) = self.heap.pop() {
            let t = ev.time;
            match ev.kind {
                EventKind::Inject(i) => {
                    let a = self.net.external[i];
                    self.arrive(a.queue, a.customer, t, rng);
                }
                EventKind::Done(q) => {
                    let (w, start) = self.serving[q].take().expect("server was busy");
                    if let Some(rec) = &mut self.record {
                        rec[q].push(ServiceRecord { customer: w.customer, arrival: w.arrival, start, departure: t });
                    }
                    if self.net.scheduling == Scheduling::OnePerLevel {
                        self.level_busy[self.net.level[q]] = false;
                    }
                    match self.net.parent[q] {
                        Some(p) => self.arrive(p, w.customer, t, rng),
                        None => {
                            if self.record.is_some() {
                                self.exits.push((w.customer, t));
                            }
                            if w.customer < self.net.real {
                                self.last_real_exit = self.last_real_exit.max(t);
                            }
                        }
                    }
                    self.try_start(q, t, rng);
                }
            }
        }
        DepartureTrace {
            queues: self.record.unwrap_or_default(),
            exits: self.exits,
            stopping_time: self.last_real_exit,
        }
    }
}

/// Runs the network until it empties and returns the full trace.
pub fn simulate(net: &QueueNetwork, rng: &mut SimRng) -> DepartureTrace {
    Sim::new(net, true).run(rng)
}

pub fn simulate_seeded(net: &QueueNetwork, seed: u64) -> DepartureTrace {
    simulate(net, &mut crate::rng::rng_from_seed(seed))
}

/// Stopping time only, without keeping the trace.
pub fn stopping_time(net: &QueueNetwork, rng: &mut SimRng) -> f64 {
    Sim::new(net, false).run(rng).stopping_time
}

/// Stopping times of `trials` independent runs; trial `i` uses stream `i` of `seed`.
pub fn stopping_times(net: &QueueNetwork, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials)
        .into_par_iter()
        .map(|i| stopping_time(net, &mut trial_rng(seed, i as u64)))
        .collect()
}

/// Outcome of an empirical CDF comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominanceVerdict {
    pub consistent: bool,
    /// Largest observed violation of the claimed ordering.
    pub max_violation: f64,
    /// Allowed slack from the DKW bands of both samples.
    pub band: f64,
    pub trials_a: usize,
    pub trials_b: usize,
}

impl fmt::Display for DominanceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (max violation {:.4}, band {:.4})",
            if self.consistent { "consistent" } else { "violated" },
            self.max_violation,
            self.band
        )
    }
}

fn band(na: usize, nb: usize, alpha: f64) -> f64 {
    dkw_epsilon(na, alpha / 2.0) + dkw_epsilon(nb, alpha / 2.0)
}

/// Checks A ⪯ B: the CDF of A never drops below the CDF of B by more than
/// the joint DKW band at level `alpha`.
pub fn dominance_from_samples(a: Vec<f64>, b: Vec<f64>, alpha: f64) -> DominanceVerdict {
    let (na, nb) = (a.len(), b.len());
    let (ea, eb) = (Ecdf::new(a), Ecdf::new(b));
    let max_violation = ea.max_shortfall(&eb);
    let band = band(na, nb, alpha);
    DominanceVerdict { consistent: max_violation <= band, max_violation, band, trials_a: na, trials_b: nb }
}

/// Two-sided version: the CDFs agree up to the band.
pub fn equivalence_from_samples(a: Vec<f64>, b: Vec<f64>, alpha: f64) -> DominanceVerdict {
    let (na, nb) = (a.len(), b.len());
    let (ea, eb) = (Ecdf::new(a), Ecdf::new(b));
    let max_violation = ea.max_shortfall(&eb).max(eb.max_shortfall(&ea));
    let band = band(na, nb, alpha);
    DominanceVerdict { consistent: max_violation <= band, max_violation, band, trials_a: na, trials_b: nb }
}

/// Simulates both networks independently and tests t(A) ⪯ t(B).
pub fn dominance_test(a: &QueueNetwork, b: &QueueNetwork, trials: usize, alpha: f64, seed: u64) -> DominanceVerdict {
    dominance_from_samples(
        stopping_times(a, trials, split_seed(seed, 0)),
        stopping_times(b, trials, split_seed(seed, 1)),
        alpha,
    )
}

pub fn equivalence_test(a: &QueueNetwork, b: &QueueNetwork, trials: usize, alpha: f64, seed: u64) -> DominanceVerdict {
    equivalence_from_samples(
        stopping_times(a, trials, split_seed(seed, 0)),
        stopping_times(b, trials, split_seed(seed, 1)),
        alpha,
    )
}

/// A tree with `n` queues and depth exactly `l_max`: a spine of `l_max + 1`
/// queues with the remaining queues hung off spine queues above the bottom.
pub fn spine_tree(n: usize, l_max: usize) -> Result<Vec<Option<usize>>> {
    if n < l_max + 1 {
        return Err(param(format!("{n} queues cannot reach depth {l_max}")));
    }
    if l_max == 0 && n > 1 {
        return Err(param("depth 0 allows a single queue only"));
    }
    let mut parent: Vec<Option<usize>> = (0..=l_max).map(|i| i.checked_sub(1)).collect();
    for i in 0..n - l_max - 1 {
        parent.push(Some(i % l_max));
    }
    Ok(parent)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem2Point {
    pub k: usize,
    pub l_max: usize,
    pub n: usize,
    pub mu: f64,
    pub trials: usize,
    pub mean: f64,
    pub median: f64,
    pub p99: f64,
    /// p99 · μ / (k + l_max + ln n)
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem2Report {
    pub points: Vec<Theorem2Point>,
    /// Fit of mean stopping time against k, one per depth with ≥ 2 k values.
    pub k_fits: Vec<(usize, LineFit)>,
    /// Fit of mean stopping time against l_max, one per k with ≥ 2 depths.
    pub depth_fits: Vec<(usize, LineFit)>,
}

impl Theorem2Report {
    pub const HEADER: &'static str = "k,l_max,n,mu,trials,mean,median,p99,ratio";

    pub fn max_ratio(&self) -> f64 {
        self.points.iter().map(|p| p.ratio).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ratio(&self) -> f64 {
        self.points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min)
    }

    /// max ratio / min ratio over the grid.
    pub fn spread(&self) -> f64 {
        self.max_ratio() / self.min_ratio()
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| {
                format!(
                    "{},{},{},{},{},{},{},{},{}",
                    p.k, p.l_max, p.n, p.mu, p.trials, p.mean, p.median, p.p99, p.ratio
                )
            })
            .collect()
    }
}

/// Grid check of t(Q) = O((k + l_max + ln n)/μ). For each (k, l_max) a tree
/// of `n` queues and depth `l_max` gets one customer at its deepest queue and
/// the other `k - 1` at uniformly random queues; `trials(k, l_max)` picks the
/// number of runs for the point. Points with equal `k` share placement draws
/// and random streams, so differences along a row come from the depth alone.
pub fn theorem2_check(
    k_values: &[usize],
    depth_values: &[usize],
    n: usize,
    mu: f64,
    trials: impl Fn(usize, usize) -> usize,
    seed: u64,
) -> Result<Theorem2Report> {
    check_mu(mu)?;
    if k_values.is_empty() || depth_values.is_empty() {
        return Err(param("empty grid"));
    }
    let mut points = Vec::new();
    for &l in depth_values {
        let nodes = if l == 0 { 1 } else { n };
        let parent = spine_tree(nodes, l)?;
        for (ki, &k) in k_values.iter().enumerate() {
            if k == 0 {
                return Err(param("k must be at least 1"));
            }
            let point_seed = split_seed(seed, ki as u64);
            let mut setup = trial_rng(point_seed, u64::MAX);
            let mut counts = vec![0; nodes];
            counts[l] += 1;
            for _ in 1..k {
                counts[setup.random_range(0..nodes)] += 1;
            }
            let net = QueueNetwork::tree(parent.clone(), &counts, mu)?;
            let t = trials(k, l).max(1);
            let mut sample = stopping_times(&net, t, point_seed);
            sample.sort_by(f64::total_cmp);
            let p99 = stats::percentile_sorted(&sample, 0.99);
            points.push(Theorem2Point {
                k,
                l_max: l,
                n,
                mu,
                trials: t,
                mean: stats::mean(&sample),
                median: stats::percentile_sorted(&sample, 0.5),
                p99,
                ratio: p99 * mu / (k as f64 + l as f64 + (n as f64).ln()),
            });
        }
    }
    let fit_over = |key: &dyn Fn(&Theorem2Point) -> usize, x: &dyn Fn(&Theorem2Point) -> usize| {
        let mut keys: Vec<usize> = points.iter().map(key).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .filter_map(|kv| {
                let sel: Vec<&Theorem2Point> = points.iter().filter(|p| key(p) == kv).collect();
                let xs: Vec<f64> = sel.iter().map(|p| x(p) as f64).collect();
                let ys: Vec<f64> = sel.iter().map(|p| p.mean).collect();
                stats::linear_fit(&xs, &ys).ok().map(|f| (kv, f))
            })
            .collect::<Vec<_>>()
    };
    let k_fits = fit_over(&|p| p.l_max, &|p| p.k);
    let depth_fits = fit_over(&|p| p.k, &|p| p.l_max);
    Ok(Theorem2Report { points, k_fits, depth_fits })
}
