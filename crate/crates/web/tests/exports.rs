use gossipnet_web::{gossip_comparison, graph_summary, queue_comparison};

#[test]
fn barbell_summary() {
    let s = graph_summary("barbell", 8, 0).unwrap();
    assert_eq!(s.edges.len(), 13);
    assert_eq!((s.diameter, s.max_degree), (3, 4));
    assert!(s.degree_sum <= 24);
    assert!(graph_summary("grid", 10, 0).is_err());
    assert!(graph_summary("moebius", 10, 0).is_err());
}

#[test]
fn curves_end_at_one() {
    let c = gossip_comparison("barbell", 24, 24, false, 3).unwrap();
    assert_eq!(c.curves.len(), 2);
    for curve in &c.curves {
        assert_eq!(curve.points.len(), 24);
        assert_eq!(curve.points.last().unwrap(), &(curve.rounds, 1.0));
        assert!(curve.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
    }
    assert!(c.curves[1].rounds < c.curves[0].rounds);
    assert!(gossip_comparison("line", 4, 5, true, 0).is_err());
}

#[test]
fn all_back_is_slower() {
    let q = queue_comparison(4, 6, 1.0, 4000, 2).unwrap();
    assert_eq!(q.counts.iter().sum::<usize>(), 6);
    assert_eq!(q.quantiles_back.len(), 101);
    assert!(q.mean_back >= q.mean_placed);
    assert!(q.dominance.starts_with("consistent"));
    assert!(queue_comparison(0, 3, 1.0, 10, 0).is_err());
}
