//! Acceptance suite. Each criterion prints one line; the process exits
//! non-zero if any criterion fails or overruns its time budget.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

use std::time::{Duration, Instant};

use rand::Rng;

use gossipnet::engine::{Engine, TimeModel};
use gossipnet::experiments::{run_experiment, write_records_to, ExperimentSpec, FitReport, KRule};
use gossipnet::field::{CodedMessage, EquationBasis, Field, FieldOrder, Gf2, Gf2m};
use gossipnet::graph::{generate, Family, FamilyParams, Topology};
use gossipnet::protocols::{random_payloads, run_brr_broadcast, AlgebraicGossip, Placement, ProtocolKind, RunConfig};
use gossipnet::queueing::{
    dominance_from_samples, dominance_test, stopping_times, theorem2_check, QueueNetwork, Transform,
};
use gossipnet::rng::{split_seed, trial_rng, SimRng};
use gossipnet::stats::log_log_fit;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

const ALL_FAMILIES: [Family; 8] = [
    Family::Line,
    Family::Ring,
    Family::Grid,
    Family::BinaryTree,
    Family::Complete,
    Family::Barbell,
    Family::Gnp,
    Family::Star,
];

fn graph(f: Family, n: usize, seed: u64) -> Topology {
    generate(f, n, &FamilyParams { seed, ..Default::default() }).expect("valid family size")
}

fn sweep(p: ProtocolKind, f: Family, sizes: &[usize], k: KRule, t: TimeModel, trials: usize, pct: f64) -> FitReport {
    let mut spec = ExperimentSpec::new(p, f, sizes.to_vec(), k, t).with_trials(trials).with_seed(2024);
    spec.percentile = pct;
    let res = run_experiment(&spec).expect("valid spec");
    assert_eq!(res.capped(), 0, "{p} on {f} hit the round cap");
    res.report
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2}")).collect();
    format!("[{}]", parts.join(" "))
}

// 1. P(helpful) >= 1 - 1/q - 0.01 from a helpful sender.

fn random_row<F: Field>(f: &F, k: usize, rng: &mut SimRng) -> F::Row {
    let syms: Vec<u8> = (0..k).map(|_| f.random_element(rng)).collect();
    f.row_from_symbols(&syms)
}

fn helpful_rate<F: Field>(f: F, rng: &mut SimRng) -> (f64, f64) {
    let (k, pairs, draws) = (8, 100, 1000);
    let mut hits = 0usize;
    let mut gap_hits = 0usize;
    for pair in 0..pairs {
        let mut recv = EquationBasis::new(f, k);
        let r = rng.random_range(0..k);
        while recv.rank() < r {
            recv.try_insert(CodedMessage::new(random_row(&f, k, rng), None)).unwrap();
        }
        let mut send = EquationBasis::new(f, k);
        if pair % 2 == 0 {
            // rank gap exactly one: the worst case
            for row in recv.rows() {
                send.try_insert(row.clone()).unwrap();
            }
            loop {
                let v = random_row(&f, k, rng);
                if !recv.contains(&v).unwrap() {
                    send.try_insert(CodedMessage::new(v, None)).unwrap();
                    break;
                }
            }
        } else {
            let s = rng.random_range(1..=k);
            loop {
                while send.rank() < s {
                    send.try_insert(CodedMessage::new(random_row(&f, k, rng), None)).unwrap();
                }
                if send.rows().iter().any(|row| !recv.contains(&row.coeffs).unwrap()) {
                    break;
                }
                send = EquationBasis::new(f, k);
            }
        }
        for _ in 0..draws {
            let m = send.random_combination(rng).unwrap();
            let h = !recv.contains(&m.coeffs).unwrap() as usize;
            hits += h;
            if pair % 2 == 0 {
                gap_hits += h;
            }
        }
    }
    let total = (pairs * draws) as f64;
    (hits as f64 / total, gap_hits as f64 / (total / 2.0))
}

fn c1() -> Verdict {
    let mut rng = trial_rng(1, 0);
    let r2 = helpful_rate(Gf2, &mut rng);
    let r16 = helpful_rate(Gf2m::new(FieldOrder::Q16), &mut rng);
    let pass = r2.0.min(r2.1) >= 0.5 - 0.01 && r16.0.min(r16.1) >= 1.0 - 1.0 / 16.0 - 0.01;
    verdict(
        pass,
        format!(
            "q=2: {:.4}, rank gap 1 {:.4} (need >= 0.4900); q=16: {:.4}, rank gap 1 {:.4} (need >= 0.9275); 1e5 draws each",
            r2.0, r2.1, r16.0, r16.1
        ),
    )
}

// 2. Decode round trip.

fn gossip_and_decode<F: Field>(f: F, g: &Topology, k: usize, t: TimeModel, rng: &mut SimRng) -> bool {
    let q = FieldOrder::try_from(f.order() as u32).unwrap();
    let placement = Placement::uniform(g.n(), k, rng).unwrap();
    let payloads = random_payloads(q, k, 8, rng);
    let proto = AlgebraicGossip::uniform(f, g.n(), &placement, Some(&payloads)).unwrap();
    let mut engine = Engine::new(g, proto, t, trial_rng(rng.random(), 0));
    let out = engine.run();
    !out.capped && engine.protocol().bases().iter().all(|b| b.decode().as_deref() == Ok(&payloads[..]))
}

fn c2() -> Verdict {
    let mut rng = trial_rng(2, 0);
    let mut ok = 0;
    let runs = 1000;
    for i in 0..runs {
        let k = rng.random_range(1..=16);
        let f = ALL_FAMILIES[i % ALL_FAMILIES.len()];
        let ns: Vec<usize> = (k.max(4)..=40).filter(|&n| f.accepts(n)).collect();
        let n = ns[rng.random_range(0..ns.len().min(6))];
        let g = graph(f, n, i as u64);
        let t = if i % 3 == 0 { TimeModel::Asynchronous } else { TimeModel::Synchronous };
        let good = if i % 2 == 0 {
            gossip_and_decode(Gf2, &g, k, t, &mut rng)
        } else {
            gossip_and_decode(Gf2m::new(FieldOrder::Q256), &g, k, t, &mut rng)
        };
        ok += good as usize;
    }
    verdict(ok == runs, format!("{ok}/{runs} runs decoded every payload at every node"))
}

// 3. B_RR completes within 3n synchronous rounds.

fn sizes_for(f: Family, wanted: &[usize]) -> Vec<usize> {
    wanted
        .iter()
        .map(|&n| match f {
            Family::Grid => {
                let s = (n as f64).sqrt().round() as usize;
                (s * s).max(4)
            }
            _ => n,
        })
        .filter(|&n| f.accepts(n))
        .collect()
}

fn c3() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut runs = 0;
    for f in ALL_FAMILIES {
        for n in sizes_for(f, &[8, 16, 32, 64, 128, 256, 512]) {
            let fixed = (f != Family::Gnp).then(|| graph(f, n, 0));
            for s in 0..50u64 {
                let seed = split_seed(3, (n as u64) << 8 | s);
                let g = fixed.clone().unwrap_or_else(|| graph(f, n, seed));
                let origin = trial_rng(seed, 1).random_range(0..n);
                runs += 1;
                match run_brr_broadcast(&g, origin, &RunConfig::new(TimeModel::Synchronous, seed)) {
                    Ok((_, r)) if !r.capped() && r.rounds() <= 3 * n as u64 => {
                        worst = worst.max(r.rounds() as f64 / n as f64)
                    }
                    _ => failures += 1,
                }
            }
        }
    }
    verdict(failures == 0, format!("{runs} broadcasts, {failures} over 3n; worst rounds/n = {worst:.3}"))
}

// 4. Degree sum along shortest paths is at most 3n.

fn c4() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut graphs = 0;
    for f in ALL_FAMILIES {
        for n in 2..=256 {
            if !f.accepts(n) {
                continue;
            }
            let seeds = if f == Family::Gnp { 3 } else { 1 };
            for seed in 0..seeds {
                let g = graph(f, n, seed);
                let canon = g.max_shortest_path_degree_sum();
                let any = g.max_any_shortest_path_degree_sum();
                graphs += 1;
                if canon > 3 * n || any > 3 * n || canon > any {
                    failures += 1;
                }
                worst = worst.max(any as f64 / n as f64);
            }
        }
    }
    verdict(failures == 0, format!("{graphs} graphs, {failures} violations; worst sum/n over all shortest paths = {worst:.3}"))
}

// 5. Theorem 1 ratio stays within a factor 4 across each sweep.

fn c5() -> Verdict {
    let families: [(Family, &[usize]); 4] = [
        (Family::Line, &[16, 32, 64, 128]),
        (Family::Grid, &[16, 36, 64, 144]),
        (Family::BinaryTree, &[15, 31, 63, 127]),
        (Family::Complete, &[32, 40, 48, 64]),
    ];
    let mut worst = (0.0, String::new());
    let mut bad = Vec::new();
    for t in [TimeModel::Synchronous, TimeModel::Asynchronous] {
        for (f, sizes) in families {
            for k in [KRule::LogN, KRule::SqrtN, KRule::EqualN] {
                let r = sweep(ProtocolKind::UniformAg, f, sizes, k, t, 40, 0.99);
                let spread = FitReport::spread(&r.ratios());
                let name = format!("{t}/{f}/{k}");
                if spread >= 4.0 {
                    bad.push(format!("{name}={spread:.2}"));
                }
                if spread > worst.0 {
                    worst = (spread, name);
                }
            }
        }
    }
    verdict(
        bad.is_empty(),
        format!("24 sweeps; worst max/min ratio {:.2} ({}), need < 4 {}", worst.0, worst.1, bad.join(" ")),
    )
}

// 6. Synchronous k = n on bounded-degree families scales linearly.

fn c6() -> Verdict {
    let families: [(Family, &[usize]); 4] = [
        (Family::Line, &[32, 64, 128, 256]),
        (Family::Ring, &[32, 64, 128, 256]),
        (Family::Grid, &[64, 144, 256, 400]),
        (Family::BinaryTree, &[31, 63, 127, 255]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (f, sizes) in families {
        let r = sweep(ProtocolKind::UniformAg, f, sizes, KRule::EqualN, TimeModel::Synchronous, 30, 0.99);
        let slope = r.slope().unwrap().slope;
        let per: Vec<f64> = r.sizes.iter().map(|s| s.stat / (s.k + s.diameter) as f64).collect();
        let spread = FitReport::spread(&per);
        pass &= (slope - 1.0).abs() <= 0.15 && spread < 2.0;
        parts.push(format!("{f} slope {slope:.3} p99/(k+D) {}", fmt_list(&per)));
    }
    verdict(pass, parts.join("; "))
}

// 7. Barbell: quadratic uniform gossip, linear TAG.

fn c7() -> Verdict {
    let sizes = [16, 32, 48, 64, 80, 96];
    let uni = sweep(ProtocolKind::UniformAg, Family::Barbell, &sizes, KRule::EqualN, TimeModel::Asynchronous, 30, 0.5);
    let tag_sizes = [16, 32, 48, 64, 80, 96, 128];
    let tag_async =
        sweep(ProtocolKind::TagBrr, Family::Barbell, &tag_sizes, KRule::EqualN, TimeModel::Asynchronous, 30, 0.5);
    let tag_sync =
        sweep(ProtocolKind::TagBrr, Family::Barbell, &tag_sizes, KRule::EqualN, TimeModel::Synchronous, 30, 0.5);
    let su = uni.slope().unwrap().slope;
    let sa = tag_async.slope().unwrap().slope;
    let ss = tag_sync.slope().unwrap().slope;
    let xs: Vec<f64> = uni.sizes.iter().map(|s| s.n as f64).collect();
    let p99: Vec<f64> = uni.sizes.iter().map(|s| s.p99).collect();
    let su99 = log_log_fit(&xs, &p99).unwrap().slope;
    let ratio: Vec<f64> = uni.sizes.iter().zip(&tag_async.sizes).map(|(u, t)| t.stat / u.stat).collect();
    let monotone = ratio.windows(2).all(|w| w[1] < w[0]);
    let pass = su >= 1.7 && sa <= 1.2 && ss <= 1.2 && monotone;
    verdict(
        pass,
        format!(
            "median slopes: uniform async {su:.3} (p99 {su99:.3}), TAG async {sa:.3}, TAG sync {ss:.3}; TAG/uniform {}",
            fmt_list(&ratio)
        ),
    )
}

// 8. TAG within C n rounds on every family.

fn c8() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, c) in [(TimeModel::Synchronous, 9.0), (TimeModel::Asynchronous, 8.0)] {
        let mut worst = (0.0, Family::Line, 0);
        for f in ALL_FAMILIES {
            let sizes = sizes_for(f, &[32, 64, 128, 256]);
            let sizes: Vec<usize> = if f == Family::BinaryTree { vec![31, 63, 127, 255] } else { sizes };
            let r = sweep(ProtocolKind::TagBrr, f, &sizes, KRule::EqualN, t, 12, 0.99);
            for s in &r.sizes {
                let per = s.stat / s.n as f64;
                if per > worst.0 {
                    worst = (per, f, s.n);
                }
            }
        }
        pass &= worst.0 <= c;
        parts.push(format!("{t}: max p99/n {:.2} ({} n={}) vs C={c}", worst.0, worst.1, worst.2));
    }
    verdict(pass, parts.join("; "))
}

// 9. Theorem 2 grid.

fn c9() -> Verdict {
    let ks = [32, 64, 128, 256, 512];
    let ls = [4, 8, 16, 32, 64];
    let r = theorem2_check(&ks, &ls, 128, 1.0, |k, l| if k * l <= 2048 { 10_000 } else { 2_000 }, 9).unwrap();
    let spread = r.spread();
    let fits = r.k_fits.iter().map(|(l, f)| (format!("l_max={l}"), f.r_squared));
    let fits = fits.chain(r.depth_fits.iter().map(|(k, f)| (format!("k={k}"), f.r_squared)));
    let (slice, r2) = fits.min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    verdict(
        spread < 3.0,
        format!(
            "25 points, ratio range [{:.3}, {:.3}], max/min {spread:.3} (need < 3); informational: lowest affine R^2 {r2:.4} at {slice}",
            r.min_ratio(),
            r.max_ratio()
        ),
    )
}

// 10. Dominance chain.

fn random_tree_net(rng: &mut SimRng) -> QueueNetwork {
    let n = rng.random_range(3..=9);
    let mut parent = vec![None];
    let mut depth = vec![0usize];
    for i in 1..n {
        let choices: Vec<usize> = (0..i).filter(|&p| depth[p] < 3).collect();
        let p = choices[rng.random_range(0..choices.len())];
        parent.push(Some(p));
        depth.push(depth[p] + 1);
    }
    let k = rng.random_range(2..=8);
    let mut counts = vec![0; n];
    for _ in 0..k {
        counts[rng.random_range(0..n)] += 1;
    }
    QueueNetwork::tree(parent, &counts, 1.0).unwrap()
}

fn c10() -> Verdict {
    let (trials, alpha) = (10_000, 0.01);
    let mut rng = trial_rng(10, 0);
    let mut tests = 0;
    let mut failed = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..8u64 {
        let tree = random_tree_net(&mut rng);
        let hat_line =
            tree.transform(Transform::CollapseLevels).unwrap().transform(Transform::AllCustomersBack).unwrap();
        let v = dominance_test(&tree, &hat_line, trials, alpha, split_seed(10, i));
        tests += 1;
        worst = worst.max(v.max_violation - v.band);
        if !v.consistent {
            failed.push(format!("tree#{i}"));
        }
    }
    let mut seed = 100;
    for levels in 2..=4 {
        for k in [1, 3, 5, 8] {
            for _ in 0..2 {
                let mut counts = vec![0; levels];
                for _ in 0..k {
                    counts[rng.random_range(0..levels)] += 1;
                }
                let line = QueueNetwork::line(&counts, 1.0).unwrap();
                seed += 1;
                let base = stopping_times(&line, trials, split_seed(10, seed));
                for level in 0..levels - 1 {
                    let Ok(moved) = line.transform(Transform::MoveCustomerBack { level }) else { continue };
                    seed += 1;
                    let v = dominance_from_samples(base.clone(), stopping_times(&moved, trials, split_seed(10, seed)), alpha);
                    tests += 1;
                    worst = worst.max(v.max_violation - v.band);
                    if !v.consistent {
                        failed.push(format!("{counts:?}@{level}"));
                    }
                }
            }
        }
    }
    verdict(
        failed.is_empty(),
        format!(
            "{tests} one-sided DKW tests (alpha {alpha}, {trials} trials), {} violations; max(violation - band) {worst:.4} {}",
            failed.len(),
            failed.join(" ")
        ),
    )
}

// 11. Determinism across reruns and worker counts.

fn c11() -> Verdict {
    let specs = [
        ExperimentSpec::new(ProtocolKind::UniformAg, Family::Ring, vec![8, 12, 16], KRule::EqualN, TimeModel::Asynchronous),
        ExperimentSpec::new(ProtocolKind::TagBrr, Family::Gnp, vec![10, 20], KRule::SqrtN, TimeModel::Synchronous),
        ExperimentSpec::new(ProtocolKind::Brr, Family::Grid, vec![16, 25], KRule::Fixed(1), TimeModel::Asynchronous),
    ];
    let mut same = true;
    let mut rows = 0;
    for spec in specs {
        let mut outs = Vec::new();
        for workers in [1, 4, 1] {
            let mut s = spec.clone().with_trials(10).with_seed(11);
            s.workers = Some(workers);
            let res = run_experiment(&s).unwrap();
            let mut buf = Vec::new();
            write_records_to(&mut buf, &res.records).unwrap();
            rows += res.records.len();
            outs.push(buf);
        }
        same &= outs.windows(2).all(|w| w[0] == w[1]);
    }
    verdict(same, format!("3 specs x (1, 4, 1 workers), {rows} rows, byte-identical: {same}"))
}

fn main() {
    let picks: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, &str, fn() -> Verdict, u64); 11] = [
        (1, "RLNC helpfulness", c1, 10),
        (2, "decode round trip", c2, 30),
        (3, "B_RR 3n bound", c3, 60),
        (4, "degree-sum lemma", c4, 60),
        (5, "Theorem 1 ratio", c5, 600),
        (6, "Theorem 3 slope", c6, 300),
        (7, "barbell separation", c7, 600),
        (8, "TAG universality", c8, 600),
        (9, "Theorem 2 queue fit", c9, 300),
        (10, "dominance chain", c10, 120),
        (11, "determinism", c11, 10),
    ];
    let mut failures = 0;
    for (id, name, run, budget) in criteria {
        if !picks.is_empty() && !picks.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed();
        let in_time = secs <= Duration::from_secs(budget);
        let pass = v.pass && in_time;
        failures += !pass as usize;
        println!(
            "criterion {id:>2} {:<20} {} | {} | {:.1}s of {budget}s{}",
            name,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            secs.as_secs_f64(),
            if in_time { "" } else { " (over budget)" }
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
