//! Seeded benchmark matrix: job descriptions, one-run execution, CSV records
//! and per-configuration summaries.
//!
//! Jobs are independent and run data-parallel on a rayon pool when the
//! `parallel` feature is on, or one after another otherwise. Either way the
//! returned records follow job order.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::encoder::{encode, Cardinality, EncodeConfig, EncodeError, Mode, PairProfile};
use crate::eulerparker::EpError;
use crate::hybrid::{run_hybrid, run_pure, HybridConfig, HybridError, HybridStatus, PureStatus};
use crate::latin::{symbol_classes, trp_from_decomposition, Cell, LatinSquare, Transversal};
use crate::satengine::Limits;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad record: {0}")]
    Record(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Pure,
    Hybrid,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pure => "pure",
            Method::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pure" => Ok(Method::Pure),
            "hybrid" => Ok(Method::Hybrid),
            _ => Err(format!("unknown method `{s}` (pure, hybrid)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Sat,
    Unsat,
    Timeout,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Sat => "sat",
            RunStatus::Unsat => "unsat",
            RunStatus::Timeout => "timeout",
        }
    }

    pub fn completed(self) -> bool {
        self != RunStatus::Timeout
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sat" => Ok(RunStatus::Sat),
            "unsat" => Ok(RunStatus::Unsat),
            "timeout" => Ok(RunStatus::Timeout),
            _ => Err(format!("unknown status `{s}`")),
        }
    }
}

/// One cell of the matrix: an instance, a method and a seed.
#[derive(Clone, Debug)]
pub struct Job {
    pub order: usize,
    pub method: Method,
    pub seed: u64,
    pub cardinality: Cardinality,
    pub throttle: u64,
    pub profile: Option<(String, PairProfile)>,
    pub timeout: Option<Duration>,
}

impl Job {
    pub fn new(order: usize, method: Method, seed: u64) -> Self {
        Job { order, method, seed, cardinality: Cardinality::Pairwise, throttle: 1, profile: None, timeout: None }
    }

    pub fn with_timeout(mut self, t: Duration) -> Self {
        self.timeout = Some(t);
        self
    }

    /// Label shared by the seeds of one configuration. Non-default
    /// throttles get a `-t<k>` suffix so sweeps summarise separately.
    pub fn instance(&self) -> String {
        let base = match &self.profile {
            Some((name, _)) => format!("myrvold-{name}"),
            None => format!("mols2-{}", self.order),
        };
        if self.method == Method::Hybrid && self.throttle != 1 {
            format!("{base}-t{}", self.throttle)
        } else {
            base
        }
    }

    fn encode_config(&self) -> EncodeConfig {
        let mode = match (&self.profile, self.method) {
            (Some(_), _) => Mode::Myrvold,
            (None, Method::Pure) => Mode::Pair,
            (None, Method::Hybrid) => Mode::Single,
        };
        let mut cfg = EncodeConfig::new(self.order, mode).with_cardinality(self.cardinality);
        if let Some((_, p)) = &self.profile {
            cfg = cfg.with_profile(p.clone());
        }
        cfg
    }
}

/// The cross product `orders x methods x seeds`, seeds innermost.
pub fn matrix(orders: &[usize], methods: &[Method], seeds: &[u64], template: &Job) -> Vec<Job> {
    let mut out = Vec::with_capacity(orders.len() * methods.len() * seeds.len());
    for &order in orders {
        for &method in methods {
            for &seed in seeds {
                out.push(Job { order, method, seed, ..template.clone() });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub instance: String,
    pub seed: u64,
    pub method: Method,
    pub status: RunStatus,
    pub total_s: f64,
    pub sat_s: f64,
    pub ep1_s: f64,
    pub ep2_s: f64,
    pub ep_calls: u64,
    pub conflicts: u64,
    pub restarts: u64,
}

impl BenchRecord {
    pub const HEADER: [&'static str; 11] =
        ["instance", "seed", "method", "status", "total_s", "sat_s", "ep1_s", "ep2_s", "ep_calls", "conflicts", "restarts"];

    pub fn fields(&self) -> [String; 11] {
        [
            self.instance.clone(),
            self.seed.to_string(),
            self.method.to_string(),
            self.status.to_string(),
            format!("{:.6}", self.total_s),
            format!("{:.6}", self.sat_s),
            format!("{:.6}", self.ep1_s),
            format!("{:.6}", self.ep2_s),
            self.ep_calls.to_string(),
            self.conflicts.to_string(),
            self.restarts.to_string(),
        ]
    }

    pub fn from_fields(rec: &csv::StringRecord) -> Result<Self, BatchError> {
        if rec.len() != Self::HEADER.len() {
            return Err(BatchError::Record(format!("expected {} fields, got {}", Self::HEADER.len(), rec.len())));
        }
        fn num<T: FromStr>(s: &str) -> Result<T, BatchError> {
            s.parse().map_err(|_| BatchError::Record(format!("bad number `{s}`")))
        }
        let out = BenchRecord {
            instance: rec[0].to_string(),
            seed: num(&rec[1])?,
            method: rec[2].parse().map_err(BatchError::Record)?,
            status: rec[3].parse().map_err(BatchError::Record)?,
            total_s: num(&rec[4])?,
            sat_s: num(&rec[5])?,
            ep1_s: num(&rec[6])?,
            ep2_s: num(&rec[7])?,
            ep_calls: num(&rec[8])?,
            conflicts: num(&rec[9])?,
            restarts: num(&rec[10])?,
        };
        if [out.total_s, out.sat_s, out.ep1_s, out.ep2_s].iter().any(|&t| !(t >= 0.0)) {
            return Err(BatchError::Record("negative time".into()));
        }
        Ok(out)
    }
}

/// Squares produced by a successful run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub square: LatinSquare,
    pub mate: LatinSquare,
    pub transversals: Vec<Transversal>,
    /// The representation square whose rows index `transversals`.
    pub trp: LatinSquare,
    pub dark: Option<Vec<Cell>>,
}

pub fn run_job(job: &Job) -> Result<BenchRecord, BatchError> {
    run_job_with_solution(job).map(|(r, _)| r)
}

pub fn run_job_with_solution(job: &Job) -> Result<(BenchRecord, Option<Solution>), BatchError> {
    let enc = encode(&job.encode_config())?;
    let limits = match job.timeout {
        Some(t) => Limits::none().with_deadline(Instant::now() + t),
        None => Limits::none(),
    };
    let base = BenchRecord {
        instance: job.instance(),
        seed: job.seed,
        method: job.method,
        status: RunStatus::Timeout,
        total_s: 0.0,
        sat_s: 0.0,
        ep1_s: 0.0,
        ep2_s: 0.0,
        ep_calls: 0,
        conflicts: 0,
        restarts: 0,
    };
    Ok(match job.method {
        Method::Pure => {
            let r = run_pure(&enc, job.seed, &[], &limits)?;
            let t = r.total_time.as_secs_f64();
            let rec = BenchRecord {
                status: match r.status {
                    PureStatus::Found { .. } => RunStatus::Sat,
                    PureStatus::Unsat => RunStatus::Unsat,
                    PureStatus::Timeout => RunStatus::Timeout,
                },
                total_s: t,
                sat_s: t,
                conflicts: r.stats.conflicts,
                restarts: r.stats.restarts,
                ..base
            };
            let sol = match r.status {
                PureStatus::Found { p, r, q, dark } => {
                    Some(Solution { transversals: symbol_classes(&r), square: p, mate: r, trp: q, dark })
                }
                _ => None,
            };
            (rec, sol)
        }
        Method::Hybrid => {
            let mut cfg = match &job.profile {
                Some((_, p)) => HybridConfig::myrvold(p.clone()),
                None => HybridConfig::default(),
            };
            cfg = cfg.with_seed(job.seed).with_throttle(job.throttle);
            let r = run_hybrid(&enc, &cfg, &limits)?;
            let s = &r.stats;
            let rec = BenchRecord {
                status: match r.status {
                    HybridStatus::Found(_) => RunStatus::Sat,
                    HybridStatus::Unsat => RunStatus::Unsat,
                    HybridStatus::Timeout => RunStatus::Timeout,
                },
                total_s: s.total_time.as_secs_f64(),
                sat_s: s.sat_time.as_secs_f64(),
                ep1_s: s.ep_stage1_time.as_secs_f64(),
                ep2_s: s.ep_stage2_time.as_secs_f64(),
                ep_calls: s.ep_calls,
                conflicts: s.solver.conflicts,
                restarts: s.solver.restarts,
                ..base
            };
            let sol = match r.status {
                HybridStatus::Found(f) => {
                    let trp = trp_from_decomposition(&f.square, &f.transversals).map_err(EpError::from).map_err(HybridError::from)?;
                    Some(Solution { square: f.square, mate: f.mate, transversals: f.transversals, trp, dark: f.dark })
                }
                _ => None,
            };
            (rec, sol)
        }
    })
}

/// Order-preserving map over `items`, on up to `jobs` rayon threads.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>, BatchError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], _jobs: usize, f: F) -> Result<Vec<R>, BatchError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    Ok(items.iter().map(f).collect())
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Runs every job and calls `on_record` as each finishes, in completion
/// order. The returned records follow job order.
pub fn run_matrix<F>(jobs: &[Job], threads: usize, mut on_record: F) -> Result<Vec<BenchRecord>, BatchError>
where
    F: FnMut(&BenchRecord) -> Result<(), BatchError> + Send,
{
    let (tx, rx) = mpsc::channel::<BenchRecord>();
    let (results, sink) = std::thread::scope(|scope| {
        let sink = scope.spawn(move || -> Result<(), BatchError> {
            for rec in rx {
                on_record(&rec)?;
            }
            Ok(())
        });
        let results = par_map(jobs, threads, |job| {
            let r = run_job(job);
            if let Ok(rec) = &r {
                let _ = tx.send(rec.clone());
            }
            r
        });
        drop(tx);
        (results, sink.join().expect("record sink panicked"))
    });
    sink?;
    results?.into_iter().collect()
}

pub fn write_csv<W: Write>(records: &[BenchRecord], sink: W) -> Result<(), BatchError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(BenchRecord::HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(source: R) -> Result<Vec<BenchRecord>, BatchError> {
    let mut rd = csv::Reader::from_reader(source);
    let header = rd.headers()?.clone();
    if header.iter().ne(BenchRecord::HEADER) {
        return Err(BatchError::Record("unexpected header".into()));
    }
    rd.records().map(|r| BenchRecord::from_fields(&r?)).collect()
}

/// Lower median: element `(len - 1) / 2` after sorting.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Per instance-and-method statistics over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub instance: String,
    pub method: Method,
    pub runs: usize,
    pub completed: usize,
    /// `None` when fewer than half the runs completed.
    pub median_s: Option<f64>,
    pub min_s: Option<f64>,
    pub max_s: Option<f64>,
    pub median_ep_calls: Option<u64>,
}

impl Summary {
    fn cell(v: Option<f64>) -> String {
        v.map_or_else(|| "timeout".to_string(), |x| format!("{x:.2}"))
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<16} {:<7} {:>2}/{:<2} median={} min={} max={} ep_calls={}",
            self.instance,
            self.method,
            self.completed,
            self.runs,
            Self::cell(self.median_s),
            Self::cell(self.min_s),
            Self::cell(self.max_s),
            self.median_ep_calls.map_or("-".to_string(), |c| c.to_string()),
        )
    }
}

/// Groups by (instance, method) in first-appearance order. Timed-out runs
/// sort after every completed one, so the lower median stays finite while
/// at least half the runs complete.
pub fn summarize(records: &[BenchRecord]) -> Vec<Summary> {
    let mut keys: Vec<(String, Method)> = Vec::new();
    for r in records {
        let k = (r.instance.clone(), r.method);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(instance, method)| {
            let group: Vec<&BenchRecord> =
                records.iter().filter(|r| r.instance == instance && r.method == method).collect();
            let done: Vec<f64> = group.iter().filter(|r| r.status.completed()).map(|r| r.total_s).collect();
            let times: Vec<f64> =
                group.iter().map(|r| if r.status.completed() { r.total_s } else { f64::INFINITY }).collect();
            let median_s = if 2 * done.len() >= group.len() { lower_median(&times) } else { None };
            let calls: Vec<f64> = group.iter().filter(|r| r.status.completed()).map(|r| r.ep_calls as f64).collect();
            Summary {
                runs: group.len(),
                completed: done.len(),
                median_s: median_s.filter(|m| m.is_finite()),
                min_s: done.iter().copied().reduce(f64::min),
                max_s: done.iter().copied().reduce(f64::max),
                median_ep_calls: (method == Method::Hybrid).then(|| lower_median(&calls)).flatten().map(|c| c as u64),
                instance,
                method,
            }
        })
        .collect()
}

/// One line describing the machine the matrix ran on.
pub fn host_info() -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "host os={} arch={} threads={} parallel={}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        threads,
        is_parallel()
    )
}
