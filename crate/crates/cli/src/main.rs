use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use gossipnet::experiments::{
    emit_plots, fit_records, read_records, run_experiment, tail_bound, write_records_to, write_reports,
    ExperimentSpec, FitReport, TailKind, MIN_FIT_SIZES,
};
use gossipnet::graph::{generate, Family, FamilyParams};
use gossipnet::queueing::{
    build_tree_from_graph, dominance_test, equivalence_test, simulate, stopping_times, theorem2_check,
    QueueNetwork, Scheduling, ServiceLaw, Shape, Transform, TRACE_HEADER,
};
use gossipnet::rng::trial_rng;
use gossipnet::stats;

#[derive(Parser)]
#[command(name = "gossipnet", version, about = "Algebraic gossip and queueing-network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep of trials and write one CSV row per trial.
    Run(RunArgs),
    /// Aggregate result CSVs into per-size statistics and log-log fits.
    Fit(FitArgs),
    /// Draw stopping-time and bound-ratio plots from result CSVs.
    Plot(PlotArgs),
    /// Analytic tail bound for sums of geometric or exponential variables.
    Tail(TailArgs),
    /// Feedforward queueing networks.
    #[command(subcommand)]
    Queue(QueueCommand),
}

/// Every flag mirrors a key of the JSON config; flags win over the file.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// uniform_ag, tag_brr, tag_oracle or brr
    #[arg(long)]
    protocol: Option<String>,
    /// line, ring, grid, binary_tree, complete, barbell, gnp or star
    #[arg(long)]
    family: Option<String>,
    /// Graph sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',')]
    sizes: Vec<usize>,
    /// equal_n, sqrt_n, log_n, polylog:P or a fixed number
    #[arg(long)]
    k: Option<String>,
    /// sync or async
    #[arg(long)]
    time_model: Option<String>,
    /// push, pull or exchange
    #[arg(long)]
    action: Option<String>,
    /// Field order: 2, 4, 16 or 256
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quantile used as stopping statistic.
    #[arg(long)]
    percentile: Option<f64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    #[arg(long)]
    edge_prob: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Results CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-node finish times and contact logs next to --out.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Report CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.99)]
    percentile: f64,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TailArgs {
    /// geometric or exponential
    #[arg(long)]
    kind: String,
    /// Number of summands.
    #[arg(long)]
    m: usize,
    /// Success probability p or rate μ.
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    alpha: f64,
}

#[derive(Subcommand)]
enum QueueCommand {
    /// Sample stopping times of one network.
    Simulate {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write every departure of every trial to this CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print the network after its transforms.
    Show {
        #[command(flatten)]
        net: NetArgs,
    },
    /// Test the dominance chain tree ⪯ one-per-level tree ≈ collapsed line ⪯ moved lines ⪯ all-back line.
    Dominance {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Stopping-time grid over k and depth on trees of n queues.
    Theorem2 {
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        depth: Vec<usize>,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A network from a line, explicit parent pointers, or the BFS tree of a
/// generated graph; customers from --counts or --k random placements.
#[derive(Args)]
struct NetArgs {
    /// Customers per line queue, starting next to the exit.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["parents", "family"])]
    line: Vec<usize>,
    /// Parent of each queue, `-` for the root; parents precede children.
    #[arg(long, value_delimiter = ',', conflicts_with = "family", allow_hyphen_values = true)]
    parents: Vec<String>,
    /// Use the BFS tree of a generated graph.
    #[arg(long, requires = "n")]
    family: Option<Family>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    root: usize,
    /// Customers per queue (per graph node with --family).
    #[arg(long, value_delimiter = ',', conflicts_with = "k")]
    counts: Vec<usize>,
    /// Place k customers uniformly at random instead of --counts.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// work_conserving or one_per_level
    #[arg(long, default_value = "work_conserving")]
    scheduling: Scheduling,
    /// exponential or geometric
    #[arg(long, default_value = "exponential")]
    service: ServiceLaw,
    /// collapse, all-back or move:LEVEL, applied in order.
    #[arg(long = "transform", value_parser = parse_transform)]
    transforms: Vec<Transform>,
    /// Seed for --k placements.
    #[arg(long, default_value_t = 0)]
    place_seed: u64,
}

fn parse_transform(s: &str) -> Result<Transform, String> {
    match s {
        "collapse" => Ok(Transform::CollapseLevels),
        "all-back" => Ok(Transform::AllCustomersBack),
        _ => s
            .strip_prefix("move:")
            .and_then(|l| l.parse().ok())
            .map(|level| Transform::MoveCustomerBack { level })
            .ok_or_else(|| format!("unknown transform `{s}`; use collapse, all-back or move:LEVEL")),
    }
}

enum Failure {
    Invalid(String),
    Check(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Check(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Check(m) | Failure::Other(m) => m,
        }
    }
}

impl From<gossipnet::Error> for Failure {
    fn from(e: gossipnet::Error) -> Self {
        use gossipnet::Error as E;
        match e {
            E::Parameter(_) | E::Format { .. } | E::UnsupportedField(_) | E::Disconnected(_) => {
                Failure::Invalid(e.to_string())
            }
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Fit(a) => fit(a),
        Command::Plot(a) => plot(a),
        Command::Tail(a) => tail(a),
        Command::Queue(q) => queue(q),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn merged_spec(a: &RunArgs) -> CliResult<ExperimentSpec> {
    let mut cfg = match &a.config {
        Some(path) => match serde_json::from_str::<Value>(&fs::read_to_string(path)?) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(Failure::Invalid(format!("{}: config must be a JSON object", path.display()))),
            Err(e) => return Err(Failure::Invalid(format!("{}: {e}", path.display()))),
        },
        None => Map::new(),
    };
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            cfg.insert(key.to_string(), v);
        }
    };
    set("protocol", a.protocol.clone().map(Value::from));
    set("family", a.family.clone().map(Value::from));
    set("sizes", (!a.sizes.is_empty()).then(|| json!(a.sizes)));
    set("k", a.k.clone().map(Value::from));
    set("time_model", a.time_model.clone().map(Value::from));
    set("action", a.action.clone().map(Value::from));
    set("q", a.q.map(Value::from));
    set("trials", a.trials.map(Value::from));
    set("seed", a.seed.map(Value::from));
    set("percentile", a.percentile.map(Value::from));
    set("max_rounds", a.max_rounds.map(Value::from));
    set("edge_prob", a.edge_prob.map(Value::from));
    set("workers", a.workers.map(Value::from));
    set("out", a.out.as_ref().map(|p| json!(p)));
    set("trace", a.trace.then_some(Value::Bool(true)));
    for key in ["protocol", "family", "sizes", "k", "time_model"] {
        if !cfg.contains_key(key) {
            return Err(Failure::Invalid(format!("missing `{key}`: pass --{} or set it in --config", flag_of(key))));
        }
    }
    let spec = ExperimentSpec::from_json(&Value::Object(cfg).to_string())?;
    if spec.trace && spec.out.is_none() {
        return Err(Failure::Invalid("--trace needs --out".into()));
    }
    Ok(spec)
}

fn flag_of(key: &str) -> String {
    match key {
        "sizes" => "n".into(),
        _ => key.replace('_', "-"),
    }
}

fn print_report(r: &FitReport) {
    eprintln!("{}", r.label());
    eprintln!("{:>6} {:>6} {:>7} {:>7} {:>10} {:>10} {:>10} {:>11}", "n", "k", "trials", "capped", "median", "p95", "p99", "bound_ratio");
    for s in &r.sizes {
        eprintln!(
            "{:>6} {:>6} {:>7} {:>7} {:>10.2} {:>10.2} {:>10.2} {:>11.4}",
            s.n, s.k, s.trials, s.capped, s.median, s.p95, s.p99, s.bound_ratio
        );
    }
    match r.slope() {
        Ok(f) => {
            let (lo, hi) = f.slope_ci(0.95);
            eprintln!("log-log slope of p{:.0}: {:.3} (95% CI {lo:.3}..{hi:.3}, R^2 {:.3})", r.percentile * 100.0, f.slope, f.r_squared);
        }
        Err(e) => eprintln!("no slope: {e}"),
    }
}

fn run(a: RunArgs) -> CliResult {
    let spec = merged_spec(&a)?;
    let res = run_experiment(&spec)?;
    if spec.out.is_none() {
        let mut out = io::stdout().lock();
        write_records_to(&mut out, &res.records)?;
        out.flush()?;
    }
    print_report(&res.report);
    match res.capped() {
        0 => Ok(()),
        c => Err(Failure::Check(format!("{c} trials hit the round cap of {}", spec.max_rounds))),
    }
}

fn fit(a: FitArgs) -> CliResult {
    let mut records = Vec::new();
    for p in &a.inputs {
        records.extend(read_records(p)?);
    }
    if records.is_empty() {
        return Err(Failure::Invalid("no trial records in the input".into()));
    }
    let reports = fit_records(&records, a.percentile)?;
    match &a.out {
        Some(path) => write_reports(path, &reports)?,
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "{}", FitReport::HEADER)?;
            for r in &reports {
                for row in r.csv_rows() {
                    writeln!(out, "{row}")?;
                }
            }
        }
    }
    for r in &reports {
        print_report(r);
    }
    let short: Vec<String> = reports.iter().filter(|r| r.sizes.len() < MIN_FIT_SIZES).map(|r| r.label()).collect();
    if short.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("fewer than {MIN_FIT_SIZES} sizes, no slope for: {}", short.join("; "))))
    }
}

fn plot(a: PlotArgs) -> CliResult {
    for p in emit_plots(&a.inputs, &a.out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn tail(a: TailArgs) -> CliResult {
    let kind: TailKind = a.kind.parse()?;
    let b = tail_bound(kind, a.m, a.rate, a.alpha)?;
    println!("threshold {}", b.threshold);
    println!("P(sum >= threshold) <= {}", b.failure);
    println!("P(sum < threshold) >= {}", b.success());
    Ok(())
}

fn build_net(a: &NetArgs) -> CliResult<QueueNetwork> {
    let shape_len = |len: usize| -> CliResult<Vec<usize>> {
        match (a.counts.is_empty(), a.k) {
            (false, _) if a.counts.len() != len => {
                Err(Failure::Invalid(format!("--counts has {} entries, expected {len}", a.counts.len())))
            }
            (false, _) => Ok(a.counts.clone()),
            (true, Some(k)) => {
                let mut rng = trial_rng(a.place_seed, 0);
                let mut c = vec![0; len];
                for _ in 0..k {
                    c[rand::Rng::random_range(&mut rng, 0..len)] += 1;
                }
                Ok(c)
            }
            (true, None) => Err(Failure::Invalid("give --counts or --k".into())),
        }
    };
    let net = if !a.line.is_empty() {
        QueueNetwork::line(&a.line, a.mu)?
    } else if !a.parents.is_empty() {
        let parent = a
            .parents
            .iter()
            .map(|p| match p.as_str() {
                "-" => Ok(None),
                s => s.parse().map(Some).map_err(|_| Failure::Invalid(format!("bad parent `{s}`"))),
            })
            .collect::<CliResult<Vec<_>>>()?;
        let counts = shape_len(parent.len())?;
        QueueNetwork::tree(parent, &counts, a.mu)?
    } else if let (Some(f), Some(n)) = (a.family, a.n) {
        let g = generate(f, n, &FamilyParams::default())?;
        if a.root >= n {
            return Err(Failure::Invalid(format!("root {} not in graph", a.root)));
        }
        let counts = shape_len(n)?;
        build_tree_from_graph(&g.bfs_tree(a.root)?, &counts, a.mu)?.0
    } else {
        return Err(Failure::Invalid("give --line, --parents, or --family with --n".into()));
    };
    let mut net = net.with_scheduling(a.scheduling).with_service(a.service);
    for &t in &a.transforms {
        net = net.transform(t)?.with_service(a.service);
    }
    Ok(net)
}

fn describe(net: &QueueNetwork) -> String {
    let parents: Vec<String> =
        net.parents().iter().map(|p| p.map_or_else(|| "-".to_string(), |p| p.to_string())).collect();
    format!(
        "{:?} of {} queues, depth {}, k {}, mu {}, {:?}, {:?}\nparents {}\ncounts  {}",
        net.shape(),
        net.len(),
        net.l_max(),
        net.k(),
        net.mu(),
        net.scheduling(),
        net.service(),
        parents.join(","),
        net.counts().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    )
}

fn queue(cmd: QueueCommand) -> CliResult {
    match cmd {
        QueueCommand::Show { net } => {
            println!("{}", describe(&build_net(&net)?));
            Ok(())
        }
        QueueCommand::Simulate { net, trials, seed, trace } => {
            let net = build_net(&net)?;
            if trials == 0 {
                return Err(Failure::Invalid("trials must be at least 1".into()));
            }
            let mut t = stopping_times(&net, trials, seed);
            t.sort_by(f64::total_cmp);
            println!("{}", describe(&net));
            println!("trials {trials}");
            println!("mean   {:.4}", stats::mean(&t));
            println!("sd     {:.4}", stats::variance(&t).sqrt());
            for (name, p) in [("median", 0.5), ("p95", 0.95), ("p99", 0.99)] {
                println!("{name:<6} {:.4}", stats::percentile_sorted(&t, p));
            }
            if let Some(path) = trace {
                let mut w = io::BufWriter::new(fs::File::create(&path)?);
                writeln!(w, "{TRACE_HEADER}")?;
                for i in 0..trials {
                    simulate(&net, &mut trial_rng(seed, i as u64)).write_csv(&mut w, i)?;
                }
                w.flush()?;
            }
            Ok(())
        }
        QueueCommand::Dominance { net, trials, alpha, seed } => dominance(&build_net(&net)?, trials, alpha, seed),
        QueueCommand::Theorem2 { k, depth, n, mu, trials, seed, out } => {
            let r = theorem2_check(&k, &depth, n, mu, |_, _| trials, seed)?;
            let mut w: Box<dyn Write> = match &out {
                Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
                None => Box::new(io::stdout().lock()),
            };
            writeln!(w, "{}", gossipnet::queueing::Theorem2Report::HEADER)?;
            for row in r.csv_rows() {
                writeln!(w, "{row}")?;
            }
            w.flush()?;
            eprintln!("ratio p99*mu/(k+l_max+ln n) in [{:.3}, {:.3}], max/min {:.3}", r.min_ratio(), r.max_ratio(), r.spread());
            for (l, f) in &r.k_fits {
                eprintln!("l_max {l:>3}: mean = {:.3} + {:.3} k (R^2 {:.4})", f.intercept, f.slope, f.r_squared);
            }
            for (k, f) in &r.depth_fits {
                eprintln!("k {k:>5}: mean = {:.3} + {:.3} l_max (R^2 {:.4})", f.intercept, f.slope, f.r_squared);
            }
            Ok(())
        }
    }
}

fn dominance(net: &QueueNetwork, trials: usize, alpha: f64, seed: u64) -> CliResult {
    if trials == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Failure::Invalid("need trials >= 1 and 0 < alpha < 1".into()));
    }
    if !net.external().is_empty() {
        return Err(Failure::Invalid("dominance chain needs a closed network".into()));
    }
    let mut checks: Vec<(String, gossipnet::queueing::DominanceVerdict)> = Vec::new();
    let mut step = 0u64;
    let mut next_seed = || {
        step += 1;
        gossipnet::rng::split_seed(seed, step)
    };
    let line = if net.shape() == Shape::Tree {
        let per_level = net.clone().with_scheduling(Scheduling::OnePerLevel);
        let collapsed = net.transform(Transform::CollapseLevels)?.with_service(net.service());
        checks.push(("tree <= one-per-level tree".into(), dominance_test(net, &per_level, trials, alpha, next_seed())));
        checks.push((
            "one-per-level tree ~ collapsed line".into(),
            equivalence_test(&per_level, &collapsed, trials, alpha, next_seed()),
        ));
        collapsed
    } else {
        net.clone()
    };
    for level in 0..line.len().saturating_sub(1) {
        if line.residents(level).is_empty() {
            continue;
        }
        let moved = line.transform(Transform::MoveCustomerBack { level })?.with_service(net.service());
        checks.push((format!("line <= moved at level {level}"), dominance_test(&line, &moved, trials, alpha, next_seed())));
    }
    let back = line.transform(Transform::AllCustomersBack)?.with_service(net.service());
    checks.push(("line <= all-back line".into(), dominance_test(&line, &back, trials, alpha, next_seed())));
    let mut failed = 0;
    for (name, v) in &checks {
        println!("{name:<40} {v}");
        failed += !v.consistent as usize;
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Check(format!("{failed} of {} comparisons violated at alpha {alpha}", checks.len())))
    }
}
