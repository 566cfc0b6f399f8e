use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use olsat::batch::{self, BenchRecord, Job, Method, RunStatus, Solution};
use olsat::encoder::{encode, emit_dimacs, Cardinality, EncodeConfig, Mode, PairProfile};
use olsat::eulerparker::{enumerate_transversals, verify_typed_decomposition};
use olsat::latin::{
    are_orthogonal, colour, parse_dark_cells, symbol_classes, verify_trp, write_dark_cells, LatinSquare,
    MyrvoldProfile, Transversal,
};

#[derive(Parser)]
#[command(name = "olsat", version, about = "Orthogonal Latin squares by CDCL search and Euler-Parker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a DIMACS instance and its variable map.
    Encode(EncodeArgs),
    /// Solve one instance with the pure or hybrid method.
    Solve(SolveArgs),
    /// Check squares, a mate, a representation pair or a colouring.
    Verify(VerifyArgs),
    /// List the transversals of a square.
    Transversals(TransversalArgs),
    /// Run a seeded matrix and write one CSV row per run.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Shipped pair type: XX, R or RR.
    #[arg(long)]
    pair_type: Option<String>,
    /// File with `p1 p2 p3 p4` counts, used for both squares.
    #[arg(long, conflicts_with = "pair_type")]
    profile: Option<PathBuf>,
}

impl ProfileArgs {
    fn resolve(&self) -> Result<Option<(String, PairProfile)>, CliError> {
        if let Some(name) = &self.pair_type {
            let p = PairProfile::preset(name)
                .ok_or_else(|| CliError::Usage(format!("unknown pair type `{name}` (XX, R, RR)")))?;
            return Ok(Some((name.to_ascii_uppercase(), p)));
        }
        if let Some(path) = &self.profile {
            let p = MyrvoldProfile::parse(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let name = path.file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned());
            return Ok(Some((name, PairProfile::same(p))));
        }
        Ok(None)
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    order: usize,
    /// single, pair or myrvold.
    #[arg(long, default_value = "pair")]
    mode: Mode,
    /// pairwise or totalizer.
    #[arg(long, default_value = "pairwise")]
    card: Cardinality,
    /// Fix the first row of P to the identity.
    #[arg(long)]
    fix_first_row: bool,
    #[command(flatten)]
    profile: ProfileArgs,
    /// DIMACS output path; the variable map goes next to it with `.map` appended.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    order: usize,
    /// pure or hybrid.
    #[arg(long, default_value = "hybrid")]
    mode: Method,
    #[arg(long, default_value = "pairwise")]
    card: Cardinality,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Native conflicts required between Euler-Parker calls.
    #[arg(long, default_value_t = 1)]
    ep_throttle: u64,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Directory for the solution files and the stats record.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    square: PathBuf,
    #[arg(long)]
    mate: Option<PathBuf>,
    /// Second square of a transversal representation pair.
    #[arg(long)]
    trp: Option<PathBuf>,
    /// Dark cells of `square`; checks the colouring quotas.
    #[arg(long)]
    dark: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
}

#[derive(Args)]
struct TransversalArgs {
    square: PathBuf,
    /// Print only the count.
    #[arg(long)]
    count: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated orders.
    #[arg(long, value_delimiter = ',', default_value = "8,9,10")]
    order: Vec<usize>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "pure,hybrid")]
    mode: Vec<Method>,
    #[arg(long, default_value = "pairwise")]
    card: Cardinality,
    /// Seed list such as `1..15` or `1,4,9`.
    #[arg(long, default_value = "1..15")]
    seeds: String,
    /// Per-run wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Comma-separated throttle values to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    ep_throttle: Vec<u64>,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Verify(String),
    Run(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify(_) | CliError::Run(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Run(m) => write!(f, "{m}"),
        }
    }
}

impl From<batch::BatchError> for CliError {
    fn from(e: batch::BatchError) -> Self {
        match e {
            batch::BatchError::Io(e) => CliError::Io(e.to_string()),
            batch::BatchError::Encode(e) => CliError::Usage(e.to_string()),
            batch::BatchError::Hybrid(olsat::hybrid::HybridError::Verification(m)) => CliError::Verify(m),
            other => CliError::Run(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn load_square(path: &Path) -> Result<LatinSquare, CliError> {
    LatinSquare::parse(&read(path)?).map_err(|e| CliError::Verify(format!("{}: {e}", path.display())))
}

fn timeout(secs: Option<f64>) -> Result<Option<Duration>, CliError> {
    match secs {
        Some(s) if !(s > 0.0 && s.is_finite()) => Err(CliError::Usage("--timeout must be positive".into())),
        Some(s) => Ok(Some(Duration::from_secs_f64(s))),
        None => Ok(None),
    }
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("bad seed list `{spec}`"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.parse().map_err(|_| bad())?;
                let b: u64 = b.trim_start_matches('=').parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn transversal_line(t: &Transversal) -> String {
    t.cols().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_encode(a: EncodeArgs) -> Result<(), CliError> {
    let profile = a.profile.resolve()?;
    let mode = if profile.is_some() && a.mode != Mode::Myrvold {
        return Err(CliError::Usage("--pair-type/--profile need --mode myrvold".into()));
    } else {
        a.mode
    };
    let mut cfg = EncodeConfig::new(a.order, mode).with_cardinality(a.card);
    if a.fix_first_row {
        cfg = cfg.with_identity_first_row();
    }
    if let Some((_, p)) = profile {
        cfg = cfg.with_profile(p);
    }
    let enc = encode(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let file = fs::File::create(&a.out).map_err(|e| io_err(&a.out, e))?;
    emit_dimacs(&enc.cnf, io::BufWriter::new(file)).map_err(|e| io_err(&a.out, e))?;
    let mut map_path = a.out.clone().into_os_string();
    map_path.push(".map");
    write(Path::new(&map_path), &enc.map.to_sidecar())?;
    println!("vars={} clauses={}", enc.cnf.num_vars(), enc.cnf.num_clauses());
    Ok(())
}

fn write_solution(dir: &Path, sol: &Solution) -> Result<(), CliError> {
    write(&dir.join("square.txt"), &sol.square.to_text())?;
    write(&dir.join("mate.txt"), &sol.mate.to_text())?;
    write(&dir.join("trp.txt"), &sol.trp.to_text())?;
    let ts: String = sol.transversals.iter().map(|t| transversal_line(t) + "\n").collect();
    write(&dir.join("transversals.txt"), &ts)?;
    if let Some(d) = &sol.dark {
        write(&dir.join("dark.txt"), &write_dark_cells(d))?;
    }
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<(), CliError> {
    let job = Job {
        order: a.order,
        method: a.mode,
        seed: a.seed,
        cardinality: a.card,
        throttle: a.ep_throttle,
        profile: a.profile.resolve()?,
        timeout: timeout(a.timeout)?,
    };
    let (rec, sol) = batch::run_job_with_solution(&job)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        if let Some(s) = &sol {
            write_solution(dir, s)?;
        }
        let path = dir.join("stats.csv");
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        batch::write_csv(std::slice::from_ref(&rec), file)?;
    }
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "status={} total_s={:.3} ep_calls={} conflicts={}", rec.status, rec.total_s, rec.ep_calls, rec.conflicts);
    if let Some(s) = &sol {
        let _ = writeln!(out, "square\n{}mate\n{}", s.square.to_text(), s.mate.to_text());
    }
    Ok(())
}

fn check(ok: bool, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Verify(what.into()))
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let sq = load_square(&a.square)?;
    println!("square: ok (order {})", sq.order());
    let mate = a.mate.as_deref().map(load_square).transpose()?;
    if let Some(m) = &mate {
        check(are_orthogonal(&sq, m).unwrap_or(false), "orthogonality")?;
        println!("orthogonality: ok");
    }
    if let Some(path) = &a.trp {
        let q = load_square(path)?;
        check(verify_trp(&sq, &q).unwrap_or(false), "transversal representation pair")?;
        println!("trp: ok");
    }
    if let Some(path) = &a.dark {
        let dark = parse_dark_cells(&read(path)?).map_err(|e| CliError::Verify(format!("dark cells: {e}")))?;
        let colouring = colour(&sq, &dark).map_err(|e| CliError::Verify(format!("colouring: {e}")))?;
        println!("colouring: ok");
        if let Some((name, profile)) = a.profile.resolve()? {
            let m = mate.as_ref().ok_or_else(|| CliError::Usage("profile check needs --mate".into()))?;
            let ts = symbol_classes(m);
            check(verify_typed_decomposition(&sq, &colouring, &profile.p, &ts), "profile quotas")?;
            println!("profile {name}: ok");
        }
    } else if a.profile.resolve()?.is_some() {
        return Err(CliError::Usage("profile check needs --dark".into()));
    }
    Ok(())
}

fn cmd_transversals(a: TransversalArgs) -> Result<(), CliError> {
    let sq = load_square(&a.square)?;
    let (ts, _) = enumerate_transversals(&sq, None).map_err(|e| CliError::Run(e.to_string()))?;
    let mut out = io::stdout().lock();
    if !a.count {
        for t in ts.items() {
            let _ = writeln!(out, "{}", transversal_line(t));
        }
    }
    let _ = writeln!(out, "count={}", ts.len());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let seeds = parse_seeds(&a.seeds)?;
    let mut template = Job::new(0, Method::Hybrid, 0);
    template.cardinality = a.card;
    template.profile = a.profile.resolve()?;
    template.timeout = timeout(a.timeout)?;
    let mut jobs = Vec::new();
    for &t in &a.ep_throttle {
        template.throttle = t;
        jobs.extend(batch::matrix(&a.order, &a.mode, &seeds, &template));
    }
    jobs.dedup_by(|x, y| x.instance() == y.instance() && x.method == y.method && x.seed == y.seed);

    // Rows are appended as runs finish so an interrupted matrix keeps its
    // partial CSV; the finished file is rewritten in matrix order.
    let file = fs::File::create(&a.out).map_err(|e| io_err(&a.out, e))?;
    let mut w = io::LineWriter::new(file);
    writeln!(w, "{}", BenchRecord::HEADER.join(",")).map_err(|e| io_err(&a.out, e))?;
    let records = batch::run_matrix(&jobs, a.jobs, |r| {
        writeln!(w, "{}", r.fields().join(",")).map_err(batch::BatchError::Io)
    })?;
    drop(w);
    let file = fs::File::create(&a.out).map_err(|e| io_err(&a.out, e))?;
    batch::write_csv(&records, io::BufWriter::new(file))?;

    println!("{}", batch::host_info());
    for s in batch::summarize(&records) {
        println!("{s}");
    }
    let bad = records.iter().filter(|r| r.status == RunStatus::Timeout).count();
    println!("runs={} timeouts={bad}", records.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Transversals(a) => cmd_transversals(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("olsat: {e}");
            ExitCode::from(e.code())
        }
    }
}
