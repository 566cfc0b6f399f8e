//! A CDCL solver: two-watched-literal propagation, first-UIP learning with
//! recursive minimisation, VSIDS with phase saving, Luby restarts and
//! LBD-based clause database reduction.
//!
//! User code can steer the search through [`ExternalPropagator`]. It sees
//! assignments to the variables it observes, may inject clauses whenever
//! propagation reaches a fixpoint, and gets a veto over every full model.
//! Injected clauses are treated as sound lemmas, so an `Unsat` answer is
//! relative to them.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoder::{Clause, Cnf, Lit};

const TRUE: u8 = 1;
const FALSE: u8 = 0;
const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;

/// Internal literal code: `2 * (var - 1) + negated`.
type Code = u32;

#[inline]
fn code(l: Lit) -> Code {
    ((l.var() - 1) << 1) | u32::from(!l.is_pos())
}

#[inline]
fn lit_of(c: Code) -> Lit {
    Lit::with_sign((c >> 1) + 1, c & 1 == 0)
}

#[inline]
fn var_of(c: Code) -> usize {
    (c >> 1) as usize
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("literal {lit} is outside the {vars} declared variables")]
    BadLiteral { lit: i32, vars: u32 },
    #[error("propagator clause literal {lit} is outside the {vars} declared variables")]
    PropagatorClauseOutOfRange { lit: i32, vars: u32 },
    #[error("unknown option `{0}`")]
    UnknownOption(String),
    #[error("bad value `{value}` for option `{name}`")]
    BadOptionValue { name: String, value: String },
    #[error("model failed verification against clause {0}")]
    ModelVerification(usize),
}

/// A total assignment; `value(v)` for `v` in `1..=num_vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model(Vec<bool>);

impl Model {
    pub fn from_values(values: Vec<bool>) -> Self {
        Model(values)
    }

    pub fn value(&self, var: u32) -> bool {
        self.0[var as usize - 1]
    }

    pub fn lit_value(&self, lit: Lit) -> bool {
        self.value(lit.var()) == lit.is_pos()
    }

    pub fn num_vars(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn satisfies(&self, clause: &[Lit]) -> bool {
        clause.iter().any(|&l| self.lit_value(l))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Sat(Model),
    Unsat,
    Timeout,
    Budget,
    Interrupted,
}

impl SolveStatus {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveStatus::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveStatus::Unsat)
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Sat(_) => "sat",
            SolveStatus::Unsat => "unsat",
            SolveStatus::Timeout => "timeout",
            SolveStatus::Budget => "budget",
            SolveStatus::Interrupted => "interrupted",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    /// All conflicts, native and programmatic.
    pub conflicts: u64,
    /// Conflicts found by propagation over the clause database.
    pub native_conflicts: u64,
    /// Conflicts caused by installing an external clause.
    pub external_conflicts: u64,
    pub decisions: u64,
    pub restarts: u64,
    pub propagations: u64,
    pub external_clauses_added: u64,
    pub reductions: u64,
    pub deleted_clauses: u64,
    pub peak_learned: u64,
}

impl fmt::Display for SolverStats {
    /// One `key=value` line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "conflicts={} native_conflicts={} external_conflicts={} decisions={} restarts={} propagations={} \
             external_clauses={} reductions={} deleted={} peak_learned={}",
            self.conflicts,
            self.native_conflicts,
            self.external_conflicts,
            self.decisions,
            self.restarts,
            self.propagations,
            self.external_clauses_added,
            self.reductions,
            self.deleted_clauses,
            self.peak_learned
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub stats: SolverStats,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Limits {
    pub conflicts: Option<u64>,
    pub deadline: Option<Instant>,
}

impl Limits {
    pub fn none() -> Self {
        Limits::default()
    }

    pub fn with_deadline(mut self, at: Instant) -> Self {
        self.deadline = Some(at);
        self
    }

    pub fn with_conflicts(mut self, n: u64) -> Self {
        self.conflicts = Some(n);
        self
    }
}

pub enum SolutionCheck {
    Accept,
    Reject(Clause),
}

/// Callbacks fired by the solver during search. None of them may call back
/// into the solver.
pub trait ExternalPropagator {
    /// Variables whose assignments are reported through `on_assign`.
    fn observed_vars(&self) -> Vec<u32>;

    /// New assignments, all made at decision level `level`.
    fn on_assign(&mut self, _lits: &[Lit], _level: usize) {}

    /// Every assignment above `new_level` has been undone.
    fn on_backtrack(&mut self, _new_level: usize) {}

    /// Polled at every propagation fixpoint.
    fn has_external_clause(&mut self, _stats: &SolverStats) -> bool {
        false
    }

    /// Called after `has_external_clause` returned true.
    fn fetch_external_clause(&mut self) -> Option<Clause> {
        None
    }

    /// Every full assignment is offered here before `solve` returns it.
    fn on_solution_check(&mut self, _model: &Model, _stats: &SolverStats) -> SolutionCheck {
        SolutionCheck::Accept
    }

    /// Polled at fixpoints; returning true ends the solve as `Interrupted`.
    fn should_terminate(&mut self, _stats: &SolverStats) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Retention {
    Forget,
    Keep,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub shuffle_seed: u64,
    pub var_decay: f64,
    pub clause_decay: f64,
    pub luby_restarts: bool,
    pub restart_base: u64,
    pub reduce_base: u64,
    pub reduce_inc: u64,
    pub external_retention: Retention,
    pub paranoid: bool,
    pub decision_log: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            shuffle_seed: 0,
            var_decay: 0.95,
            clause_decay: 0.999,
            luby_restarts: true,
            restart_base: 64,
            reduce_base: 2000,
            reduce_inc: 300,
            external_retention: Retention::Forget,
            paranoid: false,
            decision_log: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Problem,
    Learnt,
    External { forgettable: bool },
}

#[derive(Clone, Debug)]
struct ClauseData {
    lits: Vec<Code>,
    kind: Kind,
    lbd: u32,
    activity: f32,
    deleted: bool,
}

impl ClauseData {
    fn reducible(&self) -> bool {
        !self.deleted && matches!(self.kind, Kind::Learnt | Kind::External { forgettable: true })
    }
}

#[derive(Clone, Copy, Debug)]
struct Watcher {
    cref: u32,
    blocker: Code,
}

/// Max-heap of variables keyed by activity.
#[derive(Clone, Debug, Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<i32>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, -1);
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] >= 0
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v] = self.heap.len() as i32;
        self.heap.push(v as u32);
        self.up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top as usize)
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v] as usize, act);
        }
    }

    fn rebuild(&mut self, vars: impl Iterator<Item = usize>, act: &[f64]) {
        for &v in &self.heap {
            self.pos[v as usize] = -1;
        }
        self.heap.clear();
        for v in vars {
            self.insert(v, act);
        }
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.pos[pv as usize] = i as i32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let len = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= len {
                break;
            }
            let r = l + 1;
            let child = if r < len && act[self.heap[r] as usize] > act[self.heap[l] as usize] { r } else { l };
            let cv = self.heap[child];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.pos[cv as usize] = i as i32;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }
}

/// Luby sequence scaled by `base`: 1, 1, 2, 1, 1, 2, 4, ...
pub fn luby(base: u64, index: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < index + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = index;
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    base << seq
}

enum Install {
    Done,
    Conflict(u32),
    RootConflict,
}

pub struct Solver {
    num_vars: u32,
    clauses: Vec<ClauseData>,
    original: Vec<Vec<Lit>>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Code>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f32,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<u8>,
    level_stamp: Vec<u64>,
    stamp: u64,
    ok: bool,
    opts: Options,
    shuffled: bool,
    stats: SolverStats,
    live_reducible: u64,
    next_reduce: u64,
    observed: Vec<bool>,
    notified: usize,
    pending_backtrack: Option<usize>,
    decisions_logged: Vec<Lit>,
}

impl Solver {
    pub fn new(num_vars: u32) -> Self {
        let mut s = Solver {
            num_vars: 0,
            clauses: Vec::new(),
            original: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            level_stamp: Vec::new(),
            stamp: 0,
            ok: true,
            opts: Options::default(),
            shuffled: false,
            stats: SolverStats::default(),
            live_reducible: 0,
            next_reduce: 0,
            observed: Vec::new(),
            notified: 0,
            pending_backtrack: None,
            decisions_logged: Vec::new(),
        };
        s.next_reduce = s.opts.reduce_base;
        s.reserve_vars(num_vars);
        s
    }

    pub fn from_cnf(cnf: &Cnf) -> Self {
        let mut s = Solver::new(cnf.num_vars());
        for c in cnf.clauses() {
            s.add_clause(c).expect("Cnf literals are within range");
        }
        s
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn options(&self) -> &Options {
        &self.opts
    }

    /// First decisions of the most recent solves, up to the `decision_log`
    /// option.
    pub fn decision_log(&self) -> &[Lit] {
        &self.decisions_logged
    }

    pub fn reserve_vars(&mut self, n: u32) {
        if n <= self.num_vars {
            return;
        }
        let nv = n as usize;
        self.watches.resize_with(2 * nv, Vec::new);
        self.assigns.resize(nv, UNDEF);
        self.level.resize(nv, 0);
        self.reason.resize(nv, NO_REASON);
        self.activity.resize(nv, 0.0);
        self.phase.resize(nv, false);
        self.seen.resize(nv, 0);
        self.level_stamp.resize(nv + 1, 0);
        self.observed.resize(nv, false);
        self.heap.grow(nv);
        for v in self.num_vars as usize..nv {
            self.heap.insert(v, &self.activity);
        }
        self.num_vars = n;
    }

    pub fn set_option(&mut self, name: &str, value: &str) -> Result<(), SolverError> {
        fn parse<T: std::str::FromStr>(name: &str, value: &str) -> Result<T, SolverError> {
            value.parse().map_err(|_| SolverError::BadOptionValue { name: name.into(), value: value.into() })
        }
        let bad = || SolverError::BadOptionValue { name: name.into(), value: value.into() };
        match name {
            "shuffle_seed" => {
                self.opts.shuffle_seed = parse(name, value)?;
                self.shuffled = false;
            }
            "var_decay" => {
                let d: f64 = parse(name, value)?;
                if !(0.0 < d && d < 1.0) {
                    return Err(bad());
                }
                self.opts.var_decay = d;
            }
            "restart_policy" => {
                self.opts.luby_restarts = match value {
                    "luby" => true,
                    "none" => false,
                    _ => return Err(bad()),
                }
            }
            "restart_base" => self.opts.restart_base = parse::<u64>(name, value)?.max(1),
            "reduce_base" => {
                self.opts.reduce_base = parse(name, value)?;
                self.next_reduce = self.stats.native_conflicts + self.opts.reduce_base;
            }
            "reduce_inc" => self.opts.reduce_inc = parse(name, value)?,
            "external_retention" => {
                self.opts.external_retention = match value {
                    "forget" => Retention::Forget,
                    "keep" => Retention::Keep,
                    _ => return Err(bad()),
                }
            }
            "paranoid" => self.opts.paranoid = parse(name, value)?,
            "decision_log" => self.opts.decision_log = parse(name, value)?,
            _ => return Err(SolverError::UnknownOption(name.to_string())),
        }
        Ok(())
    }

    #[inline]
    fn value(&self, c: Code) -> u8 {
        let a = self.assigns[var_of(c)];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ (c & 1) as u8
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn check_range(&self, lits: &[Lit]) -> Result<(), Lit> {
        match lits.iter().find(|l| l.var() > self.num_vars) {
            Some(&l) => Err(l),
            None => Ok(()),
        }
    }

    /// Adds a problem clause. Allowed between solves only.
    pub fn add_clause(&mut self, lits: &[Lit]) -> Result<(), SolverError> {
        self.check_range(lits)
            .map_err(|l| SolverError::BadLiteral { lit: l.to_dimacs(), vars: self.num_vars })?;
        self.original.push(lits.to_vec());
        if !self.ok {
            return Ok(());
        }
        self.backtrack(0);
        let mut codes: Vec<Code> = lits.iter().map(|&l| code(l)).collect();
        codes.sort_unstable();
        codes.dedup();
        if codes.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return Ok(());
        }
        if codes.iter().any(|&c| self.value(c) == TRUE) {
            return Ok(());
        }
        codes.retain(|&c| self.value(c) != FALSE);
        match codes.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(codes[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(codes, Kind::Problem, 0);
            }
        }
        Ok(())
    }

    fn attach(&mut self, lits: Vec<Code>, kind: Kind, lbd: u32) -> u32 {
        let cref = self.clauses.len() as u32;
        debug_assert!(lits.len() >= 2);
        self.watches[(lits[0] ^ 1) as usize].push(Watcher { cref, blocker: lits[1] });
        self.watches[(lits[1] ^ 1) as usize].push(Watcher { cref, blocker: lits[0] });
        let c = ClauseData { lits, kind, lbd, activity: 0.0, deleted: false };
        if c.reducible() {
            self.live_reducible += 1;
            self.stats.peak_learned = self.stats.peak_learned.max(self.live_reducible);
        }
        self.clauses.push(c);
        cref
    }

    fn enqueue(&mut self, c: Code, reason: u32) {
        let v = var_of(c);
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = u8::from(c & 1 == 0);
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(c);
    }

    fn new_level(&mut self) {
        self.trail_lim.push(self.trail.len());
    }

    fn backtrack(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let start = self.trail_lim[lvl];
        for i in (start..self.trail.len()).rev() {
            let c = self.trail[i];
            let v = var_of(c);
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.phase[v] = c & 1 == 0;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(lvl);
        self.qhead = self.qhead.min(start);
        if self.notified > start {
            self.notified = start;
        }
        self.pending_backtrack = Some(self.pending_backtrack.map_or(lvl, |p| p.min(lvl)));
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[p as usize]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                let first = {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                    lits[0]
                };
                let nw = Watcher { cref: w.cref, blocker: first };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != FALSE {
                        let lits = &mut self.clauses[cref].lits;
                        lits.swap(1, k);
                        self.watches[(l ^ 1) as usize].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[p as usize] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        if c.kind == Kind::Problem {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in &mut self.clauses {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn compute_lbd(&mut self, lits: &[Code]) -> u32 {
        self.stamp += 1;
        let mut n = 0;
        for &l in lits {
            let lv = self.level[var_of(l)] as usize;
            if self.level_stamp[lv] != self.stamp {
                self.level_stamp[lv] = self.stamp;
                n += 1;
            }
        }
        n
    }

    /// First-UIP analysis of a conflict at the current level. Returns the
    /// learnt clause (asserting literal first, then a literal of the
    /// backtrack level) and the backtrack level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Code>, usize) {
        let cur = self.decision_level() as u32;
        let mut out: Vec<Code> = vec![0];
        let mut path = 0;
        let mut p: Option<Code> = None;
        let mut index = self.trail.len();
        loop {
            self.bump_clause(confl);
            let lits = std::mem::take(&mut self.clauses[confl as usize].lits);
            for &q in &lits {
                let v = var_of(q);
                if Some(v) == p.map(var_of) || self.seen[v] != 0 || self.level[v] == 0 {
                    continue;
                }
                self.seen[v] = 1;
                self.bump_var(v);
                if self.level[v] >= cur {
                    path += 1;
                } else {
                    out.push(q);
                }
            }
            self.clauses[confl as usize].lits = lits;
            loop {
                index -= 1;
                if self.seen[var_of(self.trail[index])] != 0 {
                    break;
                }
            }
            let q = self.trail[index];
            self.seen[var_of(q)] = 0;
            p = Some(q);
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[var_of(q)];
            debug_assert_ne!(confl, NO_REASON);
        }
        out[0] = p.unwrap() ^ 1;

        let mut to_clear: Vec<Code> = out.clone();
        let abstract_levels = out[1..].iter().fold(0u32, |a, &l| a | 1 << (self.level[var_of(l)] & 31));
        let mut keep = 1;
        for i in 1..out.len() {
            let l = out[i];
            if self.reason[var_of(l)] == NO_REASON || !self.redundant(l, abstract_levels, &mut to_clear) {
                out[keep] = l;
                keep += 1;
            }
        }
        out.truncate(keep);
        for &l in &to_clear {
            self.seen[var_of(l)] = 0;
        }

        let bt = if out.len() == 1 {
            0
        } else {
            let mut best = 1;
            for i in 2..out.len() {
                if self.level[var_of(out[i])] > self.level[var_of(out[best])] {
                    best = i;
                }
            }
            out.swap(1, best);
            self.level[var_of(out[1])] as usize
        };
        (out, bt)
    }

    fn redundant(&mut self, p: Code, abstract_levels: u32, to_clear: &mut Vec<Code>) -> bool {
        let mut stack = vec![p];
        let top = to_clear.len();
        while let Some(q) = stack.pop() {
            let r = self.reason[var_of(q)];
            let len = self.clauses[r as usize].lits.len();
            for k in 0..len {
                let l = self.clauses[r as usize].lits[k];
                let v = var_of(l);
                if v == var_of(q) || self.seen[v] != 0 || self.level[v] == 0 {
                    continue;
                }
                if self.reason[v] != NO_REASON && abstract_levels >> (self.level[v] & 31) & 1 == 1 {
                    self.seen[v] = 1;
                    stack.push(l);
                    to_clear.push(l);
                } else {
                    for &c in &to_clear[top..] {
                        self.seen[var_of(c)] = 0;
                    }
                    to_clear.truncate(top);
                    return false;
                }
            }
        }
        true
    }

    /// Learns from a conflict at the current level; false when the conflict
    /// is at the root.
    fn resolve_conflict(&mut self, confl: u32) -> bool {
        self.stats.conflicts += 1;
        if self.decision_level() == 0 {
            return false;
        }
        let (learnt, bt) = self.analyze(confl);
        self.backtrack(bt);
        if learnt.len() == 1 {
            self.enqueue(learnt[0], NO_REASON);
        } else {
            let lbd = self.compute_lbd(&learnt);
            let asserting = learnt[0];
            let cref = self.attach(learnt, Kind::Learnt, lbd);
            self.bump_clause(cref);
            self.enqueue(asserting, cref);
        }
        self.var_inc /= self.opts.var_decay;
        self.cla_inc /= self.opts.clause_decay as f32;
        true
    }

    /// Installs a clause mid-search, repairing the trail so the watch
    /// invariant holds afterwards.
    fn install_external(&mut self, clause: &[Lit]) -> Install {
        self.stats.external_clauses_added += 1;
        let mut codes: Vec<Code> = clause.iter().map(|&l| code(l)).collect();
        codes.sort_unstable();
        codes.dedup();
        if codes.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return Install::Done;
        }
        if codes.is_empty() {
            self.ok = false;
            return Install::RootConflict;
        }
        let key = |s: &Solver, c: Code| -> (u8, i64) {
            match s.value(c) {
                TRUE => (0, s.level[var_of(c)] as i64),
                UNDEF => (1, 0),
                _ => (2, -(s.level[var_of(c)] as i64)),
            }
        };
        codes.sort_by_key(|&c| key(self, c));
        let non_false = codes.iter().take_while(|&&c| self.value(c) != FALSE).count();
        let forgettable = self.opts.external_retention == Retention::Forget;
        let kind = Kind::External { forgettable };
        let lvl = |s: &Solver, c: Code| s.level[var_of(c)] as usize;

        if codes.len() == 1 {
            let c = codes[0];
            if !(self.value(c) == TRUE && lvl(self, c) == 0) {
                if self.value(c) == FALSE && lvl(self, c) == 0 {
                    self.ok = false;
                    return Install::RootConflict;
                }
                self.backtrack(0);
                self.enqueue(c, NO_REASON);
            }
            return Install::Done;
        }
        if non_false >= 2 {
            let lbd = self.compute_lbd(&codes);
            self.attach(codes, kind, lbd);
            return Install::Done;
        }
        if non_false == 1 {
            let (c0, lf) = (codes[0], lvl(self, codes[1]));
            let satisfied_low = self.value(c0) == TRUE && lvl(self, c0) <= lf;
            if !satisfied_low {
                self.backtrack(lf);
            }
            let lbd = self.compute_lbd(&codes);
            let cref = self.attach(codes, kind, lbd);
            if !satisfied_low {
                self.enqueue(c0, cref);
            }
            return Install::Done;
        }
        self.stats.external_conflicts += 1;
        let top = lvl(self, codes[0]);
        if top == 0 {
            self.ok = false;
            return Install::RootConflict;
        }
        let second = lvl(self, codes[1]);
        let lbd = self.compute_lbd(&codes);
        if second < top {
            self.backtrack(second);
            let c0 = codes[0];
            let cref = self.attach(codes, kind, lbd);
            self.enqueue(c0, cref);
            Install::Done
        } else {
            self.backtrack(top);
            Install::Conflict(self.attach(codes, kind, lbd))
        }
    }

    fn locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let l0 = c.lits[0];
        self.value(l0) == TRUE && self.reason[var_of(l0)] == cref
    }

    fn reduce_db(&mut self) {
        self.stats.reductions += 1;
        let mut cands: Vec<u32> = (0..self.clauses.len() as u32)
            .filter(|&i| {
                let c = &self.clauses[i as usize];
                c.reducible() && c.lbd > 2 && c.lits.len() > 2
            })
            .filter(|&i| !self.locked(i))
            .collect();
        cands.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd.cmp(&ca.lbd).then(ca.activity.total_cmp(&cb.activity))
        });
        let remove = cands.len() / 2;
        for &i in &cands[..remove] {
            let c = &mut self.clauses[i as usize];
            c.deleted = true;
            c.lits = Vec::new();
        }
        self.live_reducible -= remove as u64;
        self.stats.deleted_clauses += remove as u64;
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
        self.next_reduce = self.stats.native_conflicts + self.opts.reduce_base + self.opts.reduce_inc * self.stats.reductions;
    }

    fn apply_shuffle(&mut self) {
        if self.shuffled {
            return;
        }
        self.shuffled = true;
        if self.opts.shuffle_seed == 0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.shuffle_seed);
        for a in &mut self.activity {
            *a += rng.gen::<f64>() * 1e-3;
        }
        let unassigned: Vec<usize> = (0..self.num_vars as usize).filter(|&v| self.assigns[v] == UNDEF).collect();
        self.heap.rebuild(unassigned.into_iter(), &self.activity);
    }

    fn pick_branch(&mut self) -> Option<Code> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(((v as u32) << 1) | u32::from(!self.phase[v]));
            }
        }
        None
    }

    fn model(&self) -> Model {
        Model((0..self.num_vars as usize).map(|v| self.assigns[v] == TRUE).collect())
    }

    fn notify(&mut self, prop: &mut dyn ExternalPropagator) {
        if let Some(l) = self.pending_backtrack.take() {
            prop.on_backtrack(l);
        }
        let mut batch: Vec<Lit> = Vec::new();
        let mut batch_level = usize::MAX;
        for i in self.notified..self.trail.len() {
            let c = self.trail[i];
            let v = var_of(c);
            if !self.observed[v] {
                continue;
            }
            let lv = self.level[v] as usize;
            if lv != batch_level && !batch.is_empty() {
                prop.on_assign(&batch, batch_level);
                batch.clear();
            }
            batch_level = lv;
            batch.push(lit_of(c));
        }
        if !batch.is_empty() {
            prop.on_assign(&batch, batch_level);
        }
        self.notified = self.trail.len();
    }

    /// Checks that every clause either has two non-false watches or is
    /// satisfied, and that each watch is registered.
    pub fn check_watch_invariant(&self) -> Result<(), String> {
        for (i, c) in self.clauses.iter().enumerate() {
            if c.deleted {
                continue;
            }
            for w in 0..2 {
                let list = &self.watches[(c.lits[w] ^ 1) as usize];
                if !list.iter().any(|x| x.cref == i as u32) {
                    return Err(format!("clause {i} missing watcher for position {w}"));
                }
            }
            let watch_false = self.value(c.lits[0]) == FALSE || self.value(c.lits[1]) == FALSE;
            if watch_false && !c.lits.iter().any(|&l| self.value(l) == TRUE) {
                return Err(format!("clause {i} has a false watch and no true literal"));
            }
        }
        Ok(())
    }

    fn verify(&self, model: &Model) -> Result<(), SolverError> {
        for (i, c) in self.original.iter().enumerate() {
            if !model.satisfies(c) {
                return Err(SolverError::ModelVerification(i));
            }
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if !c.deleted && matches!(c.kind, Kind::External { .. }) && !c.lits.iter().any(|&l| self.value(l) == TRUE) {
                return Err(SolverError::ModelVerification(self.original.len() + i));
            }
        }
        Ok(())
    }

    pub fn solve(&mut self, assumptions: &[Lit], limits: &Limits) -> Result<SolveResult, SolverError> {
        self.solve_inner(assumptions, limits, None)
    }

    pub fn solve_with(
        &mut self,
        assumptions: &[Lit],
        limits: &Limits,
        prop: &mut dyn ExternalPropagator,
    ) -> Result<SolveResult, SolverError> {
        self.solve_inner(assumptions, limits, Some(prop))
    }

    fn solve_inner(
        &mut self,
        assumptions: &[Lit],
        limits: &Limits,
        mut prop: Option<&mut dyn ExternalPropagator>,
    ) -> Result<SolveResult, SolverError> {
        self.check_range(assumptions)
            .map_err(|l| SolverError::BadLiteral { lit: l.to_dimacs(), vars: self.num_vars })?;
        self.decisions_logged.clear();
        self.backtrack(0);
        self.notified = 0;
        self.pending_backtrack = None;
        self.observed.iter_mut().for_each(|o| *o = false);
        if let Some(p) = prop.as_deref() {
            for v in p.observed_vars() {
                if v == 0 || v > self.num_vars {
                    return Err(SolverError::PropagatorClauseOutOfRange { lit: v as i32, vars: self.num_vars });
                }
                self.observed[v as usize - 1] = true;
            }
        }
        self.apply_shuffle();
        let status = self.search(assumptions, limits, &mut prop)?;
        self.backtrack(0);
        if let Some(p) = prop {
            self.notify(p);
        }
        Ok(SolveResult { status, stats: self.stats })
    }

    fn search(
        &mut self,
        assumptions: &[Lit],
        limits: &Limits,
        prop: &mut Option<&mut dyn ExternalPropagator>,
    ) -> Result<SolveStatus, SolverError> {
        if !self.ok {
            return Ok(SolveStatus::Unsat);
        }
        let start_conflicts = self.stats.conflicts;
        let mut restart_index = 0u64;
        let mut conflicts_at_restart = self.stats.conflicts;
        let mut restart_limit = luby(self.opts.restart_base, restart_index);
        let mut ticks = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.native_conflicts += 1;
                if !self.resolve_conflict(confl) {
                    self.ok = false;
                    return Ok(SolveStatus::Unsat);
                }
                if limits.conflicts.is_some_and(|c| self.stats.conflicts - start_conflicts >= c) {
                    return Ok(SolveStatus::Budget);
                }
                if self.stats.conflicts % 32 == 0 && limits.deadline.is_some_and(|d| Instant::now() >= d) {
                    return Ok(SolveStatus::Timeout);
                }
                continue;
            }
            if self.opts.paranoid {
                if let Err(e) = self.check_watch_invariant() {
                    panic!("watch invariant violated: {e}");
                }
            }
            if let Some(p) = prop.as_deref_mut() {
                self.notify(p);
                if p.should_terminate(&self.stats) {
                    return Ok(SolveStatus::Interrupted);
                }
                if p.has_external_clause(&self.stats) {
                    if let Some(clause) = p.fetch_external_clause() {
                        self.check_range(&clause).map_err(|l| SolverError::PropagatorClauseOutOfRange {
                            lit: l.to_dimacs(),
                            vars: self.num_vars,
                        })?;
                        if !self.install_and_resolve(&clause) {
                            return Ok(SolveStatus::Unsat);
                        }
                        continue;
                    }
                }
            }
            if self.opts.luby_restarts && self.stats.conflicts - conflicts_at_restart >= restart_limit {
                self.stats.restarts += 1;
                restart_index += 1;
                restart_limit = luby(self.opts.restart_base, restart_index);
                conflicts_at_restart = self.stats.conflicts;
                self.backtrack(0);
                continue;
            }
            if self.stats.native_conflicts >= self.next_reduce {
                self.reduce_db();
            }
            ticks += 1;
            if ticks % 1024 == 0 && limits.deadline.is_some_and(|d| Instant::now() >= d) {
                return Ok(SolveStatus::Timeout);
            }

            let mut next = None;
            while self.decision_level() < assumptions.len() {
                let a = code(assumptions[self.decision_level()]);
                match self.value(a) {
                    TRUE => self.new_level(),
                    FALSE => return Ok(SolveStatus::Unsat),
                    _ => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let decision = match next {
                Some(a) => a,
                None => match self.pick_branch() {
                    Some(d) => d,
                    None => {
                        let model = self.model();
                        if let Some(p) = prop.as_deref_mut() {
                            if let SolutionCheck::Reject(clause) = p.on_solution_check(&model, &self.stats) {
                                self.check_range(&clause).map_err(|l| SolverError::PropagatorClauseOutOfRange {
                                    lit: l.to_dimacs(),
                                    vars: self.num_vars,
                                })?;
                                if !self.install_and_resolve(&clause) {
                                    return Ok(SolveStatus::Unsat);
                                }
                                continue;
                            }
                        }
                        self.verify(&model)?;
                        return Ok(SolveStatus::Sat(model));
                    }
                },
            };
            self.stats.decisions += 1;
            if self.decisions_logged.len() < self.opts.decision_log {
                self.decisions_logged.push(lit_of(decision));
            }
            self.new_level();
            self.enqueue(decision, NO_REASON);
        }
    }

    fn install_and_resolve(&mut self, clause: &[Lit]) -> bool {
        match self.install_external(clause) {
            Install::Done => true,
            Install::RootConflict => {
                self.ok = false;
                false
            }
            Install::Conflict(cref) => {
                if self.resolve_conflict(cref) {
                    true
                } else {
                    self.ok = false;
                    false
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(v: &[i32]) -> Vec<Lit> {
        v.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect()
    }

    fn solver(nv: u32, clauses: &[&[i32]]) -> Solver {
        let mut s = Solver::new(nv);
        for c in clauses {
            s.add_clause(&lits(c)).unwrap();
        }
        s
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<u64> = (0..15).map(|i| luby(1, i)).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
        assert_eq!(luby(64, 2), 128);
    }

    #[test]
    fn trivial_verdicts() {
        let mut s = solver(1, &[&[1], &[-1]]);
        assert!(s.solve(&[], &Limits::none()).unwrap().status.is_unsat());
        let mut s = solver(2, &[&[1, 2], &[-1]]);
        match s.solve(&[], &Limits::none()).unwrap().status {
            SolveStatus::Sat(m) => assert!(!m.value(1) && m.value(2)),
            other => panic!("{other:?}"),
        }
        let mut s = Solver::new(0);
        assert!(s.solve(&[], &Limits::none()).unwrap().status.is_sat());
    }

    #[test]
    fn bad_literals() {
        let mut s = Solver::new(2);
        assert_eq!(s.add_clause(&lits(&[3])), Err(SolverError::BadLiteral { lit: 3, vars: 2 }));
        assert_eq!(s.set_option("frobnicate", "1"), Err(SolverError::UnknownOption("frobnicate".into())));
        assert!(matches!(s.set_option("var_decay", "2"), Err(SolverError::BadOptionValue { .. })));
        assert!(s.set_option("shuffle_seed", "7").is_ok());
    }

    #[test]
    fn assumptions() {
        let mut s = solver(2, &[&[1, 2]]);
        assert!(s.solve(&lits(&[-1, -2]), &Limits::none()).unwrap().status.is_unsat());
        assert!(s.solve(&lits(&[-1]), &Limits::none()).unwrap().status.is_sat());
    }

    #[test]
    fn stats_line_has_keys() {
        let line = SolverStats::default().to_string();
        for key in ["conflicts=", "decisions=", "restarts=", "propagations=", "reductions=", "peak_learned="] {
            assert!(line.contains(key), "{line}");
        }
    }
}
