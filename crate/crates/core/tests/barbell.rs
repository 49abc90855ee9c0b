use gossipnet::engine::TimeModel;
use gossipnet::experiments::{run_experiment, ExperimentSpec, KRule};
use gossipnet::graph::Family;
use gossipnet::protocols::ProtocolKind;

fn median_slope(protocol: ProtocolKind, sizes: &[usize], trials: usize) -> f64 {
    let mut spec = ExperimentSpec::new(protocol, Family::Barbell, sizes.to_vec(), KRule::EqualN, TimeModel::Synchronous)
        .with_trials(trials)
        .with_seed(31);
    spec.percentile = 0.5;
    let res = run_experiment(&spec).unwrap();
    assert_eq!(res.capped(), 0);
    res.report.slope().unwrap().slope
}

// Uniform gossip is quadratic on the barbell, TAG is linear.
#[test]
fn barbell_sync_slopes_diverge() {
    let sizes = [16, 32, 64, 128];
    let uniform = median_slope(ProtocolKind::UniformAg, &sizes, 12);
    let tag = median_slope(ProtocolKind::TagBrr, &sizes, 12);
    assert!((uniform - 2.0).abs() <= 0.3, "uniform slope {uniform}");
    assert!((tag - 1.0).abs() <= 0.2, "TAG slope {tag}");
}
