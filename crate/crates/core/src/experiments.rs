//! Experiment harness: parameter sweeps, trial dispatch, CSV output,
//! stopping-time statistics, scaling fits and plots.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Action, Contact, TimeModel, DEFAULT_MAX_ROUNDS};
use crate::error::{param, Error, Result};
use crate::field::FieldOrder;
use crate::graph::{generate, Family, FamilyParams, Topology};
use crate::protocols::{
    run_brr_broadcast, run_tag, run_uniform_ag, Placement, ProtocolKind, RunConfig, StoppingReport, TreeChoice,
    TrialRecord,
};
use crate::rng::{split_seed, trial_rng};
use crate::stats::{self, LineFit};

/// How the number of messages k follows from n. Serialized as its display
/// form (`"sqrt_n"`, `"polylog:2"`, `"7"`); a bare JSON number means `Fixed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KRuleRepr", into = "String")]
pub enum KRule {
    Fixed(usize),
    EqualN,
    SqrtN,
    LogN,
    /// round(log2(n)^p)
    Polylog(u32),
}

impl KRule {
    pub fn resolve(self, n: usize) -> usize {
        let lg = (n as f64).log2();
        match self {
            KRule::Fixed(k) => k,
            KRule::EqualN => n,
            KRule::SqrtN => (n as f64).sqrt().round() as usize,
            KRule::LogN => lg.round() as usize,
            KRule::Polylog(p) => lg.powi(p as i32).round() as usize,
        }
    }
}

impl FromStr for KRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "n" | "equal_n" => KRule::EqualN,
            "sqrt_n" | "sqrt" => KRule::SqrtN,
            "log_n" | "log" => KRule::LogN,
            _ => {
                if let Some(p) = s.strip_prefix("polylog:") {
                    KRule::Polylog(p.parse().map_err(|_| param(format!("bad polylog power in {s:?}")))?)
                } else {
                    KRule::Fixed(s.parse().map_err(|_| param(format!("unknown k rule {s:?}")))?)
                }
            }
        })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum KRuleRepr {
    Fixed(usize),
    Text(String),
}

impl TryFrom<KRuleRepr> for KRule {
    type Error = Error;
    fn try_from(r: KRuleRepr) -> Result<Self> {
        match r {
            KRuleRepr::Fixed(k) => Ok(KRule::Fixed(k)),
            KRuleRepr::Text(s) => s.parse(),
        }
    }
}

impl From<KRule> for String {
    fn from(k: KRule) -> String {
        k.to_string()
    }
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Fixed(k) => write!(f, "{k}"),
            KRule::EqualN => f.write_str("equal_n"),
            KRule::SqrtN => f.write_str("sqrt_n"),
            KRule::LogN => f.write_str("log_n"),
            KRule::Polylog(p) => write!(f, "polylog:{p}"),
        }
    }
}

/// Trials per size when the experiment leaves it open.
pub fn default_trials(n: usize) -> usize {
    if n <= 128 {
        200
    } else {
        50
    }
}

fn default_percentile() -> f64 {
    0.99
}

fn default_max_rounds() -> u64 {
    DEFAULT_MAX_ROUNDS
}

fn default_q() -> FieldOrder {
    FieldOrder::Q2
}

fn default_action() -> Action {
    Action::Exchange
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub protocol: ProtocolKind,
    pub family: Family,
    pub sizes: Vec<usize>,
    pub k: KRule,
    pub time_model: TimeModel,
    #[serde(default = "default_action")]
    pub action: Action,
    #[serde(default = "default_q")]
    pub q: FieldOrder,
    /// Trials per size; `None` picks [`default_trials`].
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Quantile used as the stopping statistic.
    #[serde(default = "default_percentile")]
    pub percentile: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u64,
    /// Edge probability for `gnp`.
    #[serde(default)]
    pub edge_prob: Option<f64>,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Also write per-node finish times and contact logs next to `out`.
    #[serde(default)]
    pub trace: bool,
}

impl ExperimentSpec {
    pub fn new(protocol: ProtocolKind, family: Family, sizes: Vec<usize>, k: KRule, time_model: TimeModel) -> Self {
        ExperimentSpec {
            protocol,
            family,
            sizes,
            k,
            time_model,
            action: default_action(),
            q: default_q(),
            trials: None,
            seed: 0,
            percentile: default_percentile(),
            max_rounds: default_max_rounds(),
            edge_prob: None,
            workers: None,
            out: None,
            trace: false,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = Some(trials);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| Error::Format {
            line: e.line(),
            msg: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn trials_for(&self, n: usize) -> usize {
        self.trials.unwrap_or_else(|| default_trials(n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(param("no sizes given"));
        }
        if self.trials == Some(0) {
            return Err(param("trials must be at least 1"));
        }
        if !(self.percentile > 0.0 && self.percentile <= 1.0) {
            return Err(param("percentile must lie in (0, 1]"));
        }
        if self.max_rounds == 0 {
            return Err(param("max_rounds must be positive"));
        }
        for &n in &self.sizes {
            if !self.family.accepts(n) {
                return Err(param(format!("{} does not admit n = {n}", self.family)));
            }
            let k = self.k.resolve(n);
            if k == 0 || k > n {
                return Err(param(format!("k rule {} gives k = {k} for n = {n}; need 1 <= k <= n", self.k)));
            }
        }
        Ok(())
    }

    fn family_params(&self) -> FamilyParams {
        FamilyParams { edge_prob: self.edge_prob, seed: split_seed(self.seed, 0x6e), ..Default::default() }
    }

    fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig::new(self.time_model, seed)
            .with_action(self.action)
            .with_q(self.q)
            .with_max_rounds(self.max_rounds)
    }
}

/// Seed of trial `trial` at size `n`.
pub fn trial_seed(master: u64, n: usize, trial: usize) -> u64 {
    split_seed(split_seed(master, n as u64), trial as u64)
}

/// One trial of `spec` on `g`.
pub fn run_trial(spec: &ExperimentSpec, g: &Topology, seed: u64) -> Result<StoppingReport> {
    run_trial_traced(spec, g, seed, false)
}

/// Like [`run_trial`], optionally recording every contact.
pub fn run_trial_traced(spec: &ExperimentSpec, g: &Topology, seed: u64, trace: bool) -> Result<StoppingReport> {
    let n = g.n();
    let k = spec.k.resolve(n);
    let cfg = spec.run_config(seed).with_trace(trace);
    let mut setup = trial_rng(split_seed(seed, 2), 0);
    let placement = Placement::uniform(n, k, &mut setup)?;
    match spec.protocol {
        ProtocolKind::UniformAg => run_uniform_ag(g, &placement, &cfg),
        ProtocolKind::TagBrr => run_tag(g, &placement, TreeChoice::RoundRobin, &cfg),
        ProtocolKind::TagOracle => {
            let root = rand::Rng::random_range(&mut setup, 0..n);
            run_tag(g, &placement, TreeChoice::Oracle(root), &cfg)
        }
        ProtocolKind::Brr => {
            let origin = rand::Rng::random_range(&mut setup, 0..n);
            run_brr_broadcast(g, origin, &cfg).map(|(_, r)| r)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    /// Ordered by size, then trial.
    pub records: Vec<TrialRecord>,
    /// Per-node finish rounds, aligned with `records`.
    pub finish_rounds: Vec<Vec<f64>>,
    /// Contact logs of the first trial at each size, when tracing.
    pub event_traces: Vec<EventTrace>,
    pub report: FitReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventTrace {
    pub n: usize,
    pub seed: u64,
    pub contacts: Vec<Contact>,
}

impl ExperimentResult {
    pub fn capped(&self) -> usize {
        self.records.iter().filter(|r| r.capped).count()
    }
}

/// Runs every trial of `spec`. Output order and content depend only on the
/// experiment settings, never on the number of workers.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    match spec.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| param(format!("worker pool: {e}")))?
            .install(|| run_inner(spec)),
        None => run_inner(spec),
    }
}

fn run_inner(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let params = spec.family_params();
    let mut records = Vec::new();
    let mut finish_rounds = Vec::new();
    let mut event_traces = Vec::new();
    for &n in &spec.sizes {
        let g = generate(spec.family, n, &params)?;
        let metrics = g.metrics();
        let trials = spec.trials_for(n);
        let reports: Vec<StoppingReport> = (0..trials)
            .into_par_iter()
            .map(|t| run_trial_traced(spec, &g, trial_seed(spec.seed, n, t), spec.trace && t == 0))
            .collect::<Result<_>>()?;
        for r in reports {
            if !r.events.is_empty() {
                event_traces.push(EventTrace { n, seed: r.record.seed, contacts: r.events });
            }
            let mut rec = r.record;
            rec.diameter = Some(metrics.diameter);
            rec.max_degree = Some(metrics.max_degree);
            if rec.capped {
                log::warn!("trial with seed {} on n = {n} hit the round cap", rec.seed);
            }
            records.push(rec);
            finish_rounds.push(r.finish_rounds);
        }
        log::info!("{} n={n}: {trials} trials done", spec.family);
    }
    let report = fit_records(&records, spec.percentile)?
        .into_iter()
        .next()
        .ok_or_else(|| param("experiment produced no records"))?;
    let result = ExperimentResult { records, finish_rounds, event_traces, report };
    if let Some(out) = &spec.out {
        write_records(out, &result.records)?;
        if spec.trace {
            write_finish_trace(&trace_path(out), &result)?;
            write_event_traces(&events_path(out), &result.event_traces)?;
        }
    }
    Ok(result)
}

/// `results.csv` -> `results.trace.csv`
pub fn trace_path(out: &Path) -> PathBuf {
    out.with_extension("trace.csv")
}

/// `results.csv` -> `results.events.txt`
pub fn events_path(out: &Path) -> PathBuf {
    out.with_extension("events.txt")
}

fn write_event_traces(path: &Path, traces: &[EventTrace]) -> Result<()> {
    let mut w = create(path)?;
    for t in traces {
        writeln!(w, "# n={} seed={}", t.n, t.seed)?;
        for c in &t.contacts {
            writeln!(w, "{}", c.trace_line())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(fs::File::create(path)?))
}

pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut w = create(path)?;
    write_records_to(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn write_records_to<W: Write>(w: &mut W, records: &[TrialRecord]) -> Result<()> {
    writeln!(w, "{}", TrialRecord::HEADER)?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

fn write_finish_trace(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "family,n,seed,node,finish_round")?;
    for (rec, fin) in result.records.iter().zip(&result.finish_rounds) {
        for (v, t) in fin.iter().enumerate() {
            writeln!(w, "{},{},{},{v},{t}", rec.family, rec.n, rec.seed)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a results CSV. A file with no rows yields no records.
pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    parse_records(&fs::read_to_string(path)?)
}

pub fn parse_records(text: &str) -> Result<Vec<TrialRecord>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Format { line: 1, msg: e.to_string() })?.clone();
    let missing: Vec<&str> = TrialRecord::HEADER
        .split(',')
        .filter(|c| !matches!(*c, "diameter" | "max_degree"))
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Format { line: 1, msg: format!("missing columns: {}", missing.join(", ")) });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Format { line: i + 2, msg: e.to_string() }))
        .collect()
}

/// stat / ((k + ln n + D) Δ)
pub fn bound_ratio(stat: f64, n: usize, k: usize, diameter: usize, max_degree: usize) -> f64 {
    stat / ((k as f64 + (n as f64).ln() + diameter as f64) * max_degree as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeStats {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub capped: usize,
    pub diameter: usize,
    pub max_degree: usize,
    pub median: f64,
    pub p95: f64,
    pub p99: f64,
    /// The quantile chosen as stopping statistic.
    pub stat: f64,
    pub bound_ratio: f64,
}

/// Statistics of one (family, protocol, time model, action, q) series.
#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub family: String,
    pub protocol: String,
    pub time_model: String,
    pub action: String,
    pub q: u16,
    pub percentile: f64,
    pub sizes: Vec<SizeStats>,
    /// Log-log fit of the statistic against n, when there are ≥ 4 sizes.
    pub fit: Option<LineFit>,
}

pub const MIN_FIT_SIZES: usize = 4;

impl FitReport {
    pub const HEADER: &'static str = "family,protocol,time_model,action,q,n,k,trials,capped,diameter,max_degree,\
median,p95,p99,stat,bound_ratio,slope,slope_lo,slope_hi,r_squared";

    /// The log-log slope, refused for fewer than four sizes.
    pub fn slope(&self) -> Result<LineFit> {
        self.fit
            .ok_or_else(|| param(format!("slope needs at least {MIN_FIT_SIZES} sizes, have {}", self.sizes.len())))
    }

    pub fn label(&self) -> String {
        format!("{} {} {}", self.protocol, self.family, self.time_model)
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.sizes.iter().map(|s| s.bound_ratio).collect()
    }

    /// max / min of `values`.
    pub fn spread(values: &[f64]) -> f64 {
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let (slope, lo, hi, r2) = match self.fit {
            Some(f) => {
                let (lo, hi) = f.slope_ci(0.95);
                (f.slope.to_string(), lo.to_string(), hi.to_string(), f.r_squared.to_string())
            }
            None => Default::default(),
        };
        self.sizes
            .iter()
            .map(|s| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    self.family,
                    self.protocol,
                    self.time_model,
                    self.action,
                    self.q,
                    s.n,
                    s.k,
                    s.trials,
                    s.capped,
                    s.diameter,
                    s.max_degree,
                    s.median,
                    s.p95,
                    s.p99,
                    s.stat,
                    s.bound_ratio,
                    slope,
                    lo,
                    hi,
                    r2
                )
            })
            .collect()
    }
}

pub fn write_reports(path: &Path, reports: &[FitReport]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", FitReport::HEADER)?;
    for r in reports {
        for row in r.csv_rows() {
            writeln!(w, "{row}")?;
        }
    }
    w.flush()?;
    Ok(())
}

type SeriesKey = (String, String, String, String, u16);

fn graph_metrics(family: &str, n: usize) -> Result<(usize, usize)> {
    let f: Family = family.parse()?;
    let m = generate(f, n, &FamilyParams::default())?.metrics();
    Ok((m.diameter, m.max_degree))
}

/// Groups records into series and computes per-size statistics and fits.
/// The result does not depend on record order.
pub fn fit_records(records: &[TrialRecord], percentile: f64) -> Result<Vec<FitReport>> {
    let mut series: BTreeMap<SeriesKey, BTreeMap<usize, Vec<&TrialRecord>>> = BTreeMap::new();
    for r in records {
        let key = (r.family.clone(), r.protocol.clone(), r.time_model.clone(), r.action.clone(), r.q);
        series.entry(key).or_default().entry(r.n).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((family, protocol, time_model, action, q), by_n) in series {
        let mut sizes = Vec::new();
        for (n, recs) in by_n {
            let mut sample: Vec<f64> = recs.iter().map(|r| r.stopping_rounds()).collect();
            sample.sort_by(f64::total_cmp);
            let k = recs[0].k;
            if recs.iter().any(|r| r.k != k) {
                return Err(param(format!("mixed k values at n = {n}")));
            }
            let (diameter, max_degree) = match (recs[0].diameter, recs[0].max_degree) {
                (Some(d), Some(m)) => (d, m),
                _ => graph_metrics(&family, n)?,
            };
            let stat = stats::percentile_sorted(&sample, percentile);
            sizes.push(SizeStats {
                n,
                k,
                trials: sample.len(),
                capped: recs.iter().filter(|r| r.capped).count(),
                diameter,
                max_degree,
                median: stats::percentile_sorted(&sample, 0.5),
                p95: stats::percentile_sorted(&sample, 0.95),
                p99: stats::percentile_sorted(&sample, 0.99),
                stat,
                bound_ratio: bound_ratio(stat, n, k, diameter, max_degree),
            });
        }
        let fit = if sizes.len() >= MIN_FIT_SIZES && sizes.iter().all(|s| s.stat > 0.0) {
            let xs: Vec<f64> = sizes.iter().map(|s| s.n as f64).collect();
            let ys: Vec<f64> = sizes.iter().map(|s| s.stat).collect();
            Some(stats::log_log_fit(&xs, &ys)?)
        } else {
            None
        };
        out.push(FitReport { family, protocol, time_model, action, q, percentile, sizes, fit });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailKind {
    Geometric,
    Exponential,
}

impl FromStr for TailKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(TailKind::Geometric),
            "exponential" => Ok(TailKind::Exponential),
            _ => Err(param(format!("unknown tail kind {s:?}"))),
        }
    }
}

/// Tail of a sum S of `m` i.i.d. geometric(p) or exponential(μ) variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound {
    /// α·E[S] = α·m/p
    pub threshold: f64,
    /// Upper bound on P(S ≥ threshold).
    pub failure: f64,
}

impl TailBound {
    pub fn success(&self) -> f64 {
        1.0 - self.failure
    }
}

/// Geometric: (α e^{1-α})^m. Exponential: (2 e^{-α/2})^m, capped at 1.
pub fn tail_bound(kind: TailKind, m: usize, rate: f64, alpha: f64) -> Result<TailBound> {
    if alpha.is_nan() || alpha <= 1.0 {
        return Err(param(format!("alpha must exceed 1, got {alpha}")));
    }
    if m == 0 {
        return Err(param("m must be at least 1"));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(param("rate must be positive"));
    }
    let base = match kind {
        TailKind::Geometric => {
            if rate > 1.0 {
                return Err(param("geometric success probability exceeds 1"));
            }
            (alpha.ln() + 1.0 - alpha).exp()
        }
        TailKind::Exponential => (std::f64::consts::LN_2 - alpha / 2.0).exp(),
    };
    Ok(TailBound { threshold: alpha * m as f64 / rate, failure: base.powf(m as f64).min(1.0) })
}

/// Writes one log-log stopping-time figure and one bound-ratio figure per
/// (family, time model), overlaying every protocol. Returns the files written.
pub fn emit_plots(csv_paths: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut records = Vec::new();
    for p in csv_paths {
        records.extend(read_records(p)?);
    }
    if records.is_empty() {
        log::warn!("no result rows to plot");
        return Ok(Vec::new());
    }
    let reports = fit_records(&records, default_percentile())?;
    fs::create_dir_all(out_dir)?;
    let mut groups: BTreeMap<(String, String), Vec<&FitReport>> = BTreeMap::new();
    for r in &reports {
        groups.entry((r.family.clone(), r.time_model.clone())).or_default().push(r);
    }
    let mut written = Vec::new();
    for ((family, time_model), reps) in groups {
        let stop = out_dir.join(format!("stopping_{family}_{time_model}.svg"));
        plot::loglog(&stop, &format!("{family}, {time_model}: p99 stopping rounds"), &reps, |s| s.stat, true)?;
        written.push(stop);
        let ratio = out_dir.join(format!("ratio_{family}_{time_model}.svg"));
        plot::loglog(&ratio, &format!("{family}, {time_model}: p99 / ((k + ln n + D) Δ)"), &reps, |s| s.bound_ratio, false)?;
        written.push(ratio);
    }
    Ok(written)
}

mod plot {
    use super::*;
    use plotters::prelude::*;

    const COLORS: [RGBColor; 6] = [
        RGBColor(31, 119, 180),
        RGBColor(214, 39, 40),
        RGBColor(44, 160, 44),
        RGBColor(148, 103, 189),
        RGBColor(255, 127, 14),
        RGBColor(23, 190, 207),
    ];

    fn draw_err<E: std::error::Error + Send + Sync>(e: DrawingAreaErrorKind<E>) -> Error {
        Error::Io(crate::error::IoError(format!("plot: {e}")))
    }

    pub(super) fn loglog(
        path: &Path,
        title: &str,
        reports: &[&FitReport],
        y: impl Fn(&SizeStats) -> f64,
        annotate_slope: bool,
    ) -> Result<()> {
        let pts: Vec<(f64, f64)> =
            reports.iter().flat_map(|r| r.sizes.iter().map(|s| (s.n as f64, y(s)))).filter(|p| p.1 > 0.0).collect();
        if pts.is_empty() {
            return Err(param("nothing positive to plot"));
        }
        let (xlo, xhi) = pts.iter().fold((f64::INFINITY, 0.0f64), |a, p| (a.0.min(p.0), a.1.max(p.0)));
        let (ylo, yhi) = pts.iter().fold((f64::INFINITY, 0.0f64), |a, p| (a.0.min(p.1), a.1.max(p.1)));
        let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 22))
            .margin(16)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d((xlo * 0.8..xhi * 1.25).log_scale(), (ylo * 0.7..yhi * 1.4).log_scale())
            .map_err(draw_err)?;
        chart.configure_mesh().x_desc("n").draw().map_err(draw_err)?;
        for (i, r) in reports.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let series: Vec<(f64, f64)> =
                r.sizes.iter().map(|s| (s.n as f64, y(s))).filter(|p| p.1 > 0.0).collect();
            let label = match (annotate_slope, r.fit) {
                (true, Some(f)) => format!("{} {} (slope {:.2})", r.protocol, r.action, f.slope),
                _ => format!("{} {}", r.protocol, r.action),
            };
            chart
                .draw_series(LineSeries::new(series.clone(), color.stroke_width(2)))
                .map_err(draw_err)?
                .label(label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
            chart
                .draw_series(series.into_iter().map(|p| Circle::new(p, 4, color.filled())))
                .map_err(draw_err)?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw_err)?;
        root.present().map_err(draw_err)?;
        Ok(())
    }
}
