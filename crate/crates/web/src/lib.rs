//! Browser bindings. Every export returns a JSON string; the plain Rust
//! functions behind them are usable and testable off the web as well.

use rand::Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use gossipnet::engine::TimeModel;
use gossipnet::graph::{generate, Family, FamilyParams, Topology};
use gossipnet::protocols::{run_tag, run_uniform_ag, Placement, RunConfig, StoppingReport, TreeChoice};
use gossipnet::queueing::{dominance_from_samples, stopping_times, QueueNetwork, Transform};
use gossipnet::rng::{split_seed, trial_rng};
use gossipnet::stats;

#[derive(Debug, Serialize)]
pub struct GraphSummary {
    pub family: String,
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub diameter: usize,
    pub max_degree: usize,
    pub degree_sum: usize,
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub protocol: String,
    /// Round at which the last node finished.
    pub rounds: f64,
    /// (round, fraction of nodes holding all k messages)
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct GossipComparison {
    pub n: usize,
    pub k: usize,
    pub curves: Vec<Curve>,
}

#[derive(Debug, Serialize)]
pub struct QueueComparison {
    pub counts: Vec<usize>,
    pub mean_placed: f64,
    pub mean_back: f64,
    /// Empirical quantiles at 0%, 1%, ..., 100%.
    pub quantiles_placed: Vec<f64>,
    pub quantiles_back: Vec<f64>,
    pub dominance: String,
}

fn graph(name: &str, n: usize, seed: u64) -> Result<Topology, String> {
    let family: Family = name.parse().map_err(|e: gossipnet::Error| e.to_string())?;
    generate(family, n, &FamilyParams { seed, ..Default::default() }).map_err(|e| e.to_string())
}

pub fn graph_summary(name: &str, n: usize, seed: u64) -> Result<GraphSummary, String> {
    let g = graph(name, n, seed)?;
    let m = g.metrics();
    Ok(GraphSummary {
        family: name.to_string(),
        n,
        edges: g.edges().collect(),
        diameter: m.diameter,
        max_degree: m.max_degree,
        degree_sum: g.max_shortest_path_degree_sum(),
    })
}

fn curve(protocol: &str, r: &StoppingReport) -> Curve {
    let mut finish = r.finish_rounds.clone();
    finish.sort_by(f64::total_cmp);
    let n = finish.len() as f64;
    let points = finish.iter().enumerate().map(|(i, &t)| (t, (i + 1) as f64 / n)).collect();
    Curve { protocol: protocol.to_string(), rounds: finish.last().copied().unwrap_or(0.0), points }
}

/// Uniform algebraic gossip and TAG on the same graph and placement.
pub fn gossip_comparison(name: &str, n: usize, k: usize, asynchronous: bool, seed: u64) -> Result<GossipComparison, String> {
    let g = graph(name, n, seed)?;
    let placement = Placement::uniform(n, k, &mut trial_rng(seed, 1)).map_err(|e| e.to_string())?;
    let model = if asynchronous { TimeModel::Asynchronous } else { TimeModel::Synchronous };
    let cfg = RunConfig::new(model, split_seed(seed, 2));
    let uniform = run_uniform_ag(&g, &placement, &cfg).map_err(|e| e.to_string())?;
    let tag = run_tag(&g, &placement, TreeChoice::RoundRobin, &cfg).map_err(|e| e.to_string())?;
    Ok(GossipComparison { n, k, curves: vec![curve("uniform", &uniform), curve("TAG", &tag)] })
}

fn quantiles(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    (0..=100).map(|i| stats::percentile_sorted(&xs, i as f64 / 100.0)).collect()
}

/// A line of `levels` queues with `k` customers at random levels, against
/// the same line with every customer at the back.
pub fn queue_comparison(levels: usize, k: usize, mu: f64, trials: usize, seed: u64) -> Result<QueueComparison, String> {
    if levels == 0 || k == 0 || trials == 0 {
        return Err("levels, k and trials must be positive".into());
    }
    let mut rng = trial_rng(seed, 0);
    let mut counts = vec![0; levels];
    for _ in 0..k {
        counts[rng.random_range(0..levels)] += 1;
    }
    let placed = QueueNetwork::line(&counts, mu).map_err(|e| e.to_string())?;
    let back = placed.transform(Transform::AllCustomersBack).map_err(|e| e.to_string())?;
    let a = stopping_times(&placed, trials, split_seed(seed, 1));
    let b = stopping_times(&back, trials, split_seed(seed, 2));
    let verdict = dominance_from_samples(a.clone(), b.clone(), 0.01);
    Ok(QueueComparison {
        counts,
        mean_placed: stats::mean(&a),
        mean_back: stats::mean(&b),
        quantiles_placed: quantiles(a),
        quantiles_back: quantiles(b),
        dominance: verdict.to_string(),
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = graphSummary)]
pub fn graph_summary_js(family: &str, n: usize, seed: u64) -> Result<String, JsError> {
    to_json(graph_summary(family, n, seed))
}

#[wasm_bindgen(js_name = gossipComparison)]
pub fn gossip_comparison_js(family: &str, n: usize, k: usize, asynchronous: bool, seed: u64) -> Result<String, JsError> {
    to_json(gossip_comparison(family, n, k, asynchronous, seed))
}

#[wasm_bindgen(js_name = queueComparison)]
pub fn queue_comparison_js(levels: usize, k: usize, mu: f64, trials: usize, seed: u64) -> Result<String, JsError> {
    to_json(queue_comparison(levels, k, mu, trials, seed))
}
