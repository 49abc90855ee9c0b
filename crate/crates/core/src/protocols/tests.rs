use super::*;
use crate::engine::{Contact, Engine, Protocol};
use crate::field::{Field, Gf2};
use crate::graph::{generate, Family, FamilyParams};
use crate::rng::{rng_from_seed, trial_rng};

fn topo(f: Family, n: usize) -> Topology {
    generate(f, n, &FamilyParams::default()).unwrap()
}

#[test]
fn everyone_already_full_stops_at_zero() {
    let g = topo(Family::Line, 6);
    for model in [TimeModel::Synchronous, TimeModel::Asynchronous] {
        let r = run_uniform_ag(&g, &Placement::everywhere(6, 3), &RunConfig::new(model, 1)).unwrap();
        assert_eq!(r.rounds(), 0);
        assert!(r.finish_rounds.iter().all(|&t| t == 0.0));
    }
}

#[test]
fn two_node_async_exchange_matches_geometric_mean() {
    // Every timeslot produces one EXCHANGE between the two nodes, so A's
    // combination reaches B every slot and is helpful with prob 1 - 1/q.
    let p = 1.0 - 1.0 / 2.0;
    let expected = 1.0 / p;
    let g = topo(Family::Line, 2);
    let placement = Placement::all_at(0, 1);
    let trials = 10_000;
    let total: u64 = (0..trials)
        .map(|s| {
            let r = run_uniform_ag(&g, &placement, &RunConfig::new(TimeModel::Asynchronous, s)).unwrap();
            r.record.timeslots.unwrap()
        })
        .sum();
    let mean = total as f64 / trials as f64;
    assert!((mean - expected).abs() < 0.05 * expected, "mean {mean}");
}

#[test]
fn sync_snapshot_two_nodes() {
    // Round 1: B composes from its empty round-start state, so A learns
    // nothing from B even though B may receive from A in the same round.
    let g = topo(Family::Line, 2);
    let placement = Placement::all_at(0, 1);
    let proto = AlgebraicGossip::uniform(Gf2, 2, &placement, None).unwrap();
    let mut e = Engine::new(&g, proto, TimeModel::Synchronous, rng_from_seed(3));
    assert_eq!(e.protocol().rank(1), 0);
    let contacts = e.step_sync();
    assert_eq!(contacts.len(), 2);
    assert_eq!(e.protocol().rank(0), 1);
    assert!(e.protocol().rank(1) <= 1);
}

#[test]
fn push_from_empty_node_is_noop() {
    let g = topo(Family::Line, 3);
    let placement = Placement::all_at(0, 1);
    let proto = AlgebraicGossip::uniform(Gf2, 3, &placement, None).unwrap().with_action(Action::Push);
    let mut e = Engine::new(&g, proto, TimeModel::Asynchronous, rng_from_seed(4));
    for _ in 0..200 {
        let c = e.step_async().unwrap();
        if c.initiator == 2 && e.protocol().rank(2) == 0 {
            assert_eq!(c.helpful, 0);
        }
    }
}

#[test]
fn exchange_with_full_node_helps_empty_node() {
    let g = topo(Family::Line, 2);
    let placement = Placement::new(2, 3, vec![(0, 0), (1, 0), (2, 0)]).unwrap();
    let trials = 20_000;
    let mut helped = 0;
    for s in 0..trials {
        let proto = AlgebraicGossip::uniform(Gf2, 2, &placement, None).unwrap();
        let mut e = Engine::new(&g, proto, TimeModel::Asynchronous, trial_rng(5, s));
        e.step_async();
        helped += (e.protocol().rank(1) >= 1) as usize;
    }
    let p = helped as f64 / trials as f64;
    // Nonzero combination of 3 independent rows: 1 - 1/8 >= 1 - 1/q.
    assert!(p >= 0.5 - 0.01, "p = {p}");
    assert!((p - 0.875).abs() < 0.01);
}

#[test]
fn brr_sync_on_complete_graph_within_n() {
    for n in [4, 9, 16, 33] {
        let g = topo(Family::Complete, n);
        for seed in 0..20 {
            let (tree, r) = run_brr_broadcast(&g, seed as usize % n, &RunConfig::new(TimeModel::Synchronous, seed)).unwrap();
            let tree = tree.unwrap();
            assert!(r.rounds() <= n as u64, "n={n} rounds={}", r.rounds());
            assert_eq!(tree.n(), n);
        }
    }
}

#[test]
fn brr_path_of_three_every_pointer() {
    let g = topo(Family::Line, 3);
    for mid in 0..2 {
        let proto = RoundRobinBroadcast::with_pointers(3, 0, vec![0, mid, 0]);
        let mut e = Engine::new(&g, proto, TimeModel::Synchronous, rng_from_seed(0));
        let out = e.run();
        assert!(out.rounds <= 3, "pointer {mid}: {} rounds", out.rounds);
        let expect = if mid == 0 { 2 } else { 3 };
        assert_eq!(out.rounds, expect);
        assert_eq!(e.protocol().parents(), &[None, Some(0), Some(1)]);
    }
}

#[test]
fn brr_informed_set_monotone_and_parents_write_once() {
    let g = topo(Family::Grid, 25);
    let proto = RoundRobinBroadcast::new(&g, 12, &mut rng_from_seed(1));
    let mut e = Engine::new(&g, proto, TimeModel::Asynchronous, rng_from_seed(2));
    let mut prev_parents = e.protocol().parents().to_vec();
    let mut prev_count = 1;
    while !Protocol::is_done(e.protocol()) {
        e.step_async();
        let p = e.protocol();
        assert!(p.informed_count() >= prev_count);
        for (old, new) in prev_parents.iter().zip(p.parents()) {
            if old.is_some() {
                assert_eq!(old, new);
            }
        }
        prev_parents = p.parents().to_vec();
        prev_count = p.informed_count();
    }
    let tree = e.protocol().tree(&g).unwrap();
    assert_eq!(tree.root(), 12);
}

#[test]
fn tag_with_prebuilt_tree_on_two_nodes() {
    let g = topo(Family::Line, 2);
    for model in [TimeModel::Synchronous, TimeModel::Asynchronous] {
        let r = run_tag(&g, &Placement::all_at(1, 1), TreeChoice::Oracle(0), &RunConfig::new(model, 9)).unwrap();
        assert!(!r.capped());
        assert_eq!(r.record.tree_time, Some(0));
        assert_eq!(r.record.protocol, "tag_oracle");
    }
}

#[test]
fn tag_wakeup_parity() {
    let g = topo(Family::Line, 3);
    let placement = Placement::all_at(2, 1);
    // No parent yet: phase-2 wakeups idle.
    let brr = RoundRobinBroadcast::with_pointers(3, 0, vec![0, 0, 0]);
    let mut tag = TagProtocol::new(Gf2, 3, &placement, brr).unwrap();
    let mut rng = rng_from_seed(1);
    let first = tag.on_wakeup(&g, 2, &mut rng).unwrap();
    assert_eq!(first.channel, Phase::Tree);
    assert_eq!(tag.on_wakeup(&g, 2, &mut rng), None);
    assert_eq!(tag.wakeups(2), 2);

    // With a parent: even wakeup is an EXCHANGE with the parent.
    let oracle = OracleTree::bfs(&g, 0).unwrap();
    let mut tag = TagProtocol::new(Gf2, 3, &placement, oracle).unwrap();
    assert_eq!(tag.on_wakeup(&g, 2, &mut rng), None);
    let second = tag.on_wakeup(&g, 2, &mut rng).unwrap();
    assert_eq!((second.partner, second.action, second.channel), (1, Action::Exchange, Phase::Gossip));
    // The root never initiates.
    tag.on_wakeup(&g, 0, &mut rng);
    assert_eq!(tag.on_wakeup(&g, 0, &mut rng), None);
}

#[test]
fn tag_root_still_reaches_full_rank() {
    let g = topo(Family::Line, 3);
    let placement = Placement::new(3, 2, vec![(0, 1), (1, 2)]).unwrap();
    let mut initiated_by_root = 0;
    {
        let oracle = OracleTree::bfs(&g, 0).unwrap();
        let tag = TagProtocol::new(Gf2, 3, &placement, oracle).unwrap();
        let mut e = Engine::new(&g, tag, TimeModel::Asynchronous, rng_from_seed(2))
            .with_observer(|c: &Contact| initiated_by_root += (c.initiator == 0) as usize);
        let out = e.run();
        assert!(!out.capped);
        assert_eq!(e.protocol().gossip().rank(0), 2);
    }
    assert_eq!(initiated_by_root, 0);
}

#[test]
fn tag_sync_gossip_contacts_target_parent() {
    let g = topo(Family::Barbell, 12);
    let placement = Placement::one_per_node(12);
    let brr = RoundRobinBroadcast::new(&g, 5, &mut rng_from_seed(3));
    let tag = TagProtocol::new(Gf2, 12, &placement, brr).unwrap();
    let mut contacts = Vec::new();
    let parents = {
        let mut e = Engine::new(&g, tag, TimeModel::Synchronous, rng_from_seed(4)).with_observer(|c: &Contact| contacts.push(*c));
        assert!(!e.run().capped);
        e.protocol().tree().parents().to_vec()
    };
    let mut gossip = 0;
    for c in contacts {
        assert!(g.has_edge(c.initiator, c.partner));
        if c.time % 2 == 0 {
            assert_eq!(Some(c.partner), parents[c.initiator], "round {}", c.time);
            gossip += 1;
        }
    }
    assert!(gossip > 0);
}

#[test]
fn rank_never_exceeds_k_and_is_monotone() {
    let g = topo(Family::Ring, 10);
    let placement = Placement::uniform(10, 4, &mut rng_from_seed(5)).unwrap();
    let proto = AlgebraicGossip::uniform(Gf2, 10, &placement, None).unwrap();
    let mut e = Engine::new(&g, proto, TimeModel::Asynchronous, rng_from_seed(6));
    let mut prev: Vec<usize> = (0..10).map(|v| e.protocol().rank(v)).collect();
    while !Protocol::is_done(e.protocol()) {
        e.step_async();
        for (v, p) in prev.iter_mut().enumerate() {
            let r = e.protocol().rank(v);
            assert!(r <= 4 && r >= *p);
            *p = r;
        }
    }
    // Union of spans still holds every initial unit equation.
    for m in 0..4 {
        let unit = Gf2.unit_row(4, m);
        assert!(e.protocol().bases().iter().any(|b| b.contains(&unit).unwrap()));
    }
}

#[test]
fn reports_are_reproducible() {
    let g = topo(Family::Grid, 16);
    let placement = Placement::one_per_node(16);
    for model in [TimeModel::Synchronous, TimeModel::Asynchronous] {
        let cfg = RunConfig::new(model, 77);
        assert_eq!(run_uniform_ag(&g, &placement, &cfg).unwrap(), run_uniform_ag(&g, &placement, &cfg).unwrap());
        assert_eq!(
            run_tag(&g, &placement, TreeChoice::RoundRobin, &cfg).unwrap(),
            run_tag(&g, &placement, TreeChoice::RoundRobin, &cfg).unwrap()
        );
    }
}

#[test]
fn cap_is_reported() {
    let g = topo(Family::Line, 20);
    let cfg = RunConfig::new(TimeModel::Synchronous, 1).with_max_rounds(3);
    let r = run_uniform_ag(&g, &Placement::one_per_node(20), &cfg).unwrap();
    assert!(r.capped());
    assert_eq!(r.rounds(), 3);
    let (tree, r) = run_brr_broadcast(&g, 0, &cfg).unwrap();
    assert!(tree.is_none() && r.capped());
    assert_eq!(r.record.tree_time, None);
}

#[test]
fn placement_validation() {
    assert!(Placement::new(3, 0, vec![]).is_err());
    assert!(Placement::new(3, 2, vec![(0, 0)]).is_err());
    assert!(Placement::new(3, 1, vec![(0, 3)]).is_err());
    assert!(Placement::uniform(3, 4, &mut rng_from_seed(0)).is_err());
    let p = Placement::uniform(10, 10, &mut rng_from_seed(0)).unwrap();
    assert!(p.counts(10).iter().all(|&c| c == 1));
}

#[test]
fn csv_row_layout() {
    let g = topo(Family::Line, 4);
    let r = run_uniform_ag(&g, &Placement::one_per_node(4), &RunConfig::new(TimeModel::Asynchronous, 3)).unwrap();
    let row = r.record.csv_row();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), TrialRecord::HEADER.split(',').count());
    assert_eq!(&fields[..8], &["line", "4", "4", "2", "uniform_ag", "async", "EXCHANGE", "3"]);
    assert_eq!(fields[10], "");
    assert_eq!(fields[14], "false");
    assert!((r.record.stopping_rounds() - r.record.timeslots.unwrap() as f64 / 4.0).abs() < 1e-12);
}

#[test]
fn tree_diameter_of_paths_and_stars() {
    let line = topo(Family::Line, 7);
    assert_eq!(tree_diameter(&line.bfs_tree(3).unwrap()), 6);
    let star = topo(Family::Star, 7);
    assert_eq!(tree_diameter(&star.bfs_tree(0).unwrap()), 2);
}
