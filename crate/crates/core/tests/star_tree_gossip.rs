//! Gossip on a fixed star tree: every leaf exchanges only with the hub.
//! Whenever the hub lacks a message some leaf is helpful to it, so each
//! timeslot raises the hub's rank with probability at least 1/(2n) (a helpful
//! leaf wakes, and its combination is helpful w.p. >= 1/2). The hub's finish
//! time is therefore dominated by a sum of k Geometric(1/(2n)) timeslots, or
//! of k Geometric(1/2) rounds under synchronous time.

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use gossipnet::engine::{Action, Engine, Intent, Protocol, TimeModel};
use gossipnet::field::{CodedMessage, Gf2};
use gossipnet::graph::{generate, Family, FamilyParams, Topology};
use gossipnet::protocols::{AlgebraicGossip, Placement};
use gossipnet::queueing::dominance_from_samples;
use gossipnet::rng::{trial_rng, SimRng};

struct ToHub {
    gossip: AlgebraicGossip<Gf2>,
    hub: usize,
}

impl Protocol for ToHub {
    type Message = CodedMessage<Gf2>;
    type Channel = ();

    fn n(&self) -> usize {
        self.gossip.bases().len()
    }

    fn on_wakeup(&mut self, _g: &Topology, v: usize, _rng: &mut SimRng) -> Option<Intent<()>> {
        (v != self.hub).then_some(Intent { partner: self.hub, action: Action::Exchange, channel: () })
    }

    fn compose(&self, from: usize, to: usize, _: (), rng: &mut SimRng) -> Option<CodedMessage<Gf2>> {
        self.gossip.encode_for(from, to, rng)
    }

    fn deliver(&mut self, to: usize, _from: usize, _: (), msg: CodedMessage<Gf2>) -> bool {
        self.gossip.absorb(to, msg)
    }

    fn node_done(&self, v: usize) -> bool {
        self.gossip.basis(v).is_full()
    }

    fn is_done(&self) -> bool {
        self.gossip.finished_count() == self.n()
    }
}

fn hub_finish_times(n: usize, k: usize, model: TimeModel, trials: u64) -> Vec<f64> {
    let g = generate(Family::Star, n, &FamilyParams::default()).unwrap();
    let hub = (0..n).max_by_key(|&v| g.degree(v)).unwrap();
    (0..trials)
        .map(|t| {
            let mut setup = trial_rng(t, 1);
            let mut leaves: Vec<usize> = (0..n).filter(|&v| v != hub).collect();
            for i in (1..leaves.len()).rev() {
                leaves.swap(i, setup.random_range(0..=i));
            }
            let holders = (0..k).map(|m| (m, leaves[m])).collect();
            let placement = Placement::new(n, k, holders).unwrap();
            let gossip = AlgebraicGossip::uniform(Gf2, n, &placement, None).unwrap();
            let mut engine = Engine::new(&g, ToHub { gossip, hub }, model, trial_rng(t, 0));
            let out = engine.run();
            assert!(!out.capped && out.finish.len() == n);
            out.finish[hub] as f64
        })
        .collect()
}

fn geometric_sums(k: usize, p: f64, trials: u64) -> Vec<f64> {
    let d = Geometric::new(p).unwrap();
    let mut rng = trial_rng(99, 0);
    (0..trials).map(|_| (0..k).map(|_| d.sample(&mut rng) as f64 + 1.0).sum()).collect()
}

#[test]
fn hub_finish_dominated_by_geometric_sum() {
    let trials = 5000;
    for (n, k) in [(4, 2), (6, 3), (8, 7)] {
        let hub = hub_finish_times(n, k, TimeModel::Asynchronous, trials);
        let bound = geometric_sums(k, 1.0 / (2.0 * n as f64), trials);
        let v = dominance_from_samples(hub, bound, 0.01);
        assert!(v.consistent, "async n={n} k={k}: {v}");

        let hub = hub_finish_times(n, k, TimeModel::Synchronous, trials);
        let bound = geometric_sums(k, 0.5, trials);
        let v = dominance_from_samples(hub, bound, 0.01);
        assert!(v.consistent, "sync n={n} k={k}: {v}");
    }
}
