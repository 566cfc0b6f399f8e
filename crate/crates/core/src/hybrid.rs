//! The CDCL / Euler-Parker driver.
//!
//! The solver searches for a Latin square; whenever a watched square becomes
//! complete the driver runs Euler-Parker on it. A square without a mate is
//! excluded by a clause over its upper-left `(n-1) x (n-1)` block, and the
//! first square with a mate ends the run.
//!
//! Euler-Parker calls are throttled: a new call needs at least
//! `ep_conflict_throttle` native conflicts since the previous one. A full
//! model that shows up while the throttle is closed is blocked provisionally
//! and queued; queued squares are checked at later fixpoints, and any left
//! when the solver reports UNSAT are checked before the run concludes.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::encoder::{decode_dark_cells, decode_square, Clause, DecodeError, Encoding, Lit, PairProfile, SquareId, VariableMap};
use crate::eulerparker::{
    euler_parker, find_mates_myrvold, verify_typed_decomposition, EpBudget, EpError, EpStatus, Mate, OmegaPartition,
    Stage2Constraints, Stage2Mode,
};
use crate::latin::{
    are_orthogonal, colour, symbol_classes, verify_trp, Cell, LatinSquare, MyrvoldColouring, MyrvoldProfile, Transversal,
    DARK_COLUMNS,
};
use crate::satengine::{ExternalPropagator, Limits, Model, SolutionCheck, SolveStatus, Solver, SolverError, SolverStats};

#[derive(Debug, Error)]
pub enum HybridError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Ep(#[from] EpError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("result failed verification: {0}")]
    Verification(String),
    #[error("Euler-Parker reported no mate without an exhaustive stage 2")]
    NonExhaustiveBlock,
    #[error("solver returned a model no watched square accounts for")]
    UnexpectedModel,
}

/// Per-cell view of one square's symbol variables under the current trail.
#[derive(Clone, Debug)]
pub struct SquareWatch {
    id: SquareId,
    order: usize,
    vars: std::ops::Range<u32>,
    cells: Vec<u8>,
    assigned_true: usize,
}

impl SquareWatch {
    pub fn new(map: &VariableMap, id: SquareId) -> Option<Self> {
        let n = map.order();
        Some(SquareWatch { id, order: n, vars: map.square_range(id)?, cells: vec![u8::MAX; n * n], assigned_true: 0 })
    }

    pub fn id(&self) -> SquareId {
        self.id
    }

    pub fn covers(&self, var: u32) -> bool {
        self.vars.contains(&var)
    }

    fn locate(&self, var: u32) -> (usize, u8) {
        let x = (var - self.vars.start) as usize;
        let n = self.order;
        (x / n, (x % n) as u8)
    }

    /// Records a true symbol literal. Negative literals carry no information
    /// for completion.
    pub fn assign(&mut self, lit: Lit) {
        if !lit.is_pos() || !self.covers(lit.var()) {
            return;
        }
        let (cell, k) = self.locate(lit.var());
        if self.cells[cell] == u8::MAX {
            self.assigned_true += 1;
        }
        self.cells[cell] = k;
    }

    pub fn unassign(&mut self, lit: Lit) {
        if !lit.is_pos() || !self.covers(lit.var()) {
            return;
        }
        let (cell, k) = self.locate(lit.var());
        if self.cells[cell] == k {
            self.cells[cell] = u8::MAX;
            self.assigned_true -= 1;
        }
    }

    pub fn assigned_true(&self) -> usize {
        self.assigned_true
    }

    pub fn is_complete(&self) -> bool {
        self.assigned_true == self.order * self.order
    }

    pub fn extract(&self) -> Result<LatinSquare, DecodeError> {
        let n = self.order;
        if let Some(p) = self.cells.iter().position(|&c| c == u8::MAX) {
            return Err(DecodeError::DecodeInconsistency { square: self.id, row: p / n, col: p % n, count: 0 });
        }
        Ok(LatinSquare::from_flat(n, self.cells.clone())?)
    }
}

/// Negated symbol literals of the cells `(i, j)` with `i, j < n - 1`.
pub fn blocking_clause(square: &LatinSquare, map: &VariableMap, id: SquareId) -> Clause {
    let n = square.order();
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for i in 0..n.saturating_sub(1) {
        for j in 0..n - 1 {
            out.push(!map.lit(id, i, j, square.get(i, j) as usize));
        }
    }
    out
}

/// As [`blocking_clause`], extended with the negated dark indicators so that
/// only this colouring of the square is excluded.
pub fn blocking_clause_coloured(square: &LatinSquare, dark: &[Cell], map: &VariableMap, id: SquareId) -> Clause {
    let mut out = blocking_clause(square, map, id);
    for c in dark {
        out.push(Lit::neg(map.dark(id, c.row, c.col).expect("square has dark indicators")));
    }
    out
}

/// Bounded least-recently-used set of square fingerprints.
#[derive(Clone, Debug)]
pub struct BlockedMemo {
    cap: usize,
    tick: u64,
    stamps: HashMap<u64, u64>,
    order: VecDeque<(u64, u64)>,
}

impl BlockedMemo {
    pub fn new(cap: usize) -> Self {
        BlockedMemo { cap, tick: 0, stamps: HashMap::new(), order: VecDeque::new() }
    }

    /// Inserts or refreshes `key`; true when it was already present.
    pub fn touch(&mut self, key: u64) -> bool {
        if self.cap == 0 {
            return false;
        }
        self.tick += 1;
        let seen = self.stamps.insert(key, self.tick).is_some();
        self.order.push_back((key, self.tick));
        while self.stamps.len() > self.cap {
            let (k, t) = self.order.pop_front().unwrap();
            if self.stamps.get(&k) == Some(&t) {
                self.stamps.remove(&k);
            }
        }
        if self.order.len() > 4 * self.cap.max(16) {
            let stamps = &self.stamps;
            self.order.retain(|(k, t)| stamps.get(k) == Some(t));
        }
        seen
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct HybridConfig {
    /// Minimum native conflicts between consecutive Euler-Parker calls.
    pub ep_conflict_throttle: u64,
    pub watched: Vec<SquareId>,
    pub profile: Option<PairProfile>,
    pub omega: Option<OmegaPartition>,
    pub ep_budget: EpBudget,
    pub memo_size: usize,
    pub seed: u64,
    pub solver_options: Vec<(String, String)>,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            ep_conflict_throttle: 1,
            watched: vec![SquareId::P],
            profile: None,
            omega: None,
            ep_budget: EpBudget::default(),
            memo_size: 1 << 20,
            seed: 0,
            solver_options: Vec::new(),
        }
    }
}

impl HybridConfig {
    /// Watches P and Q with the given pair profile.
    pub fn myrvold(profile: PairProfile) -> Self {
        HybridConfig { watched: vec![SquareId::P, SquareId::Q], profile: Some(profile), ..Default::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_throttle(mut self, t: u64) -> Self {
        self.ep_conflict_throttle = t;
        self
    }

    fn validate(&self, map: &VariableMap) -> Result<(), HybridError> {
        if self.watched.is_empty() {
            return Err(HybridError::Config("no watched square".into()));
        }
        for &id in &self.watched {
            if !map.has_square(id) {
                return Err(HybridError::Config(format!("square {id} is not in the encoding")));
            }
            if self.profile.is_some() && !map.has_colouring(id) {
                return Err(HybridError::Config(format!("square {id} has no colouring variables")));
            }
        }
        if self.profile.is_some() && !map.has_square(SquareId::R) {
            return Err(HybridError::Config("a profile needs the channeled encoding".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Found {
    /// Which watched square the mate was built for.
    pub trigger: SquareId,
    pub square: LatinSquare,
    pub mate: LatinSquare,
    pub transversals: Vec<Transversal>,
    /// Dark cells of `square` in coloured runs.
    pub dark: Option<Vec<Cell>>,
    /// The model already was a typed decomposition, no Euler-Parker call
    /// produced it.
    pub from_model: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HybridStatus {
    Found(Box<Found>),
    Unsat,
    Timeout,
}

impl HybridStatus {
    pub fn label(&self) -> &'static str {
        match self {
            HybridStatus::Found(_) => "sat",
            HybridStatus::Unsat => "unsat",
            HybridStatus::Timeout => "timeout",
        }
    }
}

/// One emitted blocking clause, as seen at emission time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockAudit {
    pub literals: usize,
    pub symbol_literals: usize,
    pub falsified: bool,
    pub provisional: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HybridStats {
    pub ep_calls: u64,
    pub ep_stage1_time: Duration,
    pub ep_stage2_time: Duration,
    pub sat_time: Duration,
    pub total_time: Duration,
    pub blocked_squares: u64,
    pub reblocked_squares: u64,
    pub deferred_squares: u64,
    pub transversals_seen: u64,
    /// Native conflict count at each throttled Euler-Parker call.
    pub ep_call_conflicts: Vec<u64>,
    /// Calls made after the solver finished, for squares still queued.
    pub flush_calls: u64,
    pub solver: SolverStats,
}

impl HybridStats {
    /// Smallest native-conflict gap between consecutive throttled calls.
    pub fn min_conflict_gap(&self) -> Option<u64> {
        self.ep_call_conflicts.windows(2).map(|w| w[1] - w[0]).min()
    }
}

impl fmt::Display for HybridStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "total_s={:.6} sat_s={:.6} ep1_s={:.6} ep2_s={:.6} ep_calls={} blocked={} reblocked={} deferred={} {}",
            self.total_time.as_secs_f64(),
            self.sat_time.as_secs_f64(),
            self.ep_stage1_time.as_secs_f64(),
            self.ep_stage2_time.as_secs_f64(),
            self.ep_calls,
            self.blocked_squares,
            self.reblocked_squares,
            self.deferred_squares,
            self.solver
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HybridResult {
    pub status: HybridStatus,
    pub stats: HybridStats,
    pub blocks: Vec<BlockAudit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct SquareKey {
    id: SquareId,
    square: LatinSquare,
    dark: Vec<Cell>,
}

impl SquareKey {
    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

struct Driver<'a> {
    map: &'a VariableMap,
    cfg: &'a HybridConfig,
    watches: Vec<SquareWatch>,
    observed: Vec<u32>,
    dark_ranges: Vec<std::ops::Range<u32>>,
    values: Vec<i8>,
    stack: Vec<(Lit, usize)>,
    dark_assigned: Vec<usize>,
    pending: VecDeque<Clause>,
    deferred: VecDeque<SquareKey>,
    deferred_set: HashSet<SquareKey>,
    memo: BlockedMemo,
    last_ep: Option<u64>,
    found: Option<Found>,
    error: Option<HybridError>,
    stats: HybridStats,
    blocks: Vec<BlockAudit>,
}

impl<'a> Driver<'a> {
    fn new(map: &'a VariableMap, cfg: &'a HybridConfig) -> Self {
        let watches: Vec<SquareWatch> = cfg.watched.iter().map(|&id| SquareWatch::new(map, id).unwrap()).collect();
        let mut observed = Vec::new();
        let mut dark_ranges = Vec::new();
        for w in &watches {
            observed.extend(w.vars.clone());
            let dark = map.dark_vars(w.id);
            let range = match (cfg.profile.is_some(), dark.first(), dark.last()) {
                (true, Some(&a), Some(&b)) => a..b + 1,
                _ => 0..0,
            };
            observed.extend(range.clone());
            dark_ranges.push(range);
        }
        let max = observed.iter().copied().max().unwrap_or(0) as usize;
        Driver {
            map,
            cfg,
            dark_assigned: vec![0; watches.len()],
            watches,
            observed,
            dark_ranges,
            values: vec![0; max + 1],
            stack: Vec::new(),
            pending: VecDeque::new(),
            deferred: VecDeque::new(),
            deferred_set: HashSet::new(),
            memo: BlockedMemo::new(cfg.memo_size),
            last_ep: None,
            found: None,
            error: None,
            stats: HybridStats::default(),
            blocks: Vec::new(),
        }
    }

    fn profile_for(&self, id: SquareId) -> Option<&MyrvoldProfile> {
        self.cfg.profile.as_ref().map(|p| if id == SquareId::Q { &p.q } else { &p.p })
    }


    fn apply(&mut self, lit: Lit) {
        let v = lit.var();
        self.values[v as usize] = if lit.is_pos() { 1 } else { -1 };
        for w in 0..self.watches.len() {
            if self.watches[w].covers(v) {
                self.watches[w].assign(lit);
            } else if self.dark_ranges[w].contains(&v) {
                self.dark_assigned[w] += 1;
            }
        }
    }

    fn retract(&mut self, lit: Lit) {
        let v = lit.var();
        self.values[v as usize] = 0;
        for w in 0..self.watches.len() {
            if self.watches[w].covers(v) {
                self.watches[w].unassign(lit);
            } else if self.dark_ranges[w].contains(&v) {
                self.dark_assigned[w] -= 1;
            }
        }
    }

    fn complete(&self, w: usize) -> bool {
        self.watches[w].is_complete()
            && (self.cfg.profile.is_none() || self.dark_assigned[w] == self.map.order() * DARK_COLUMNS)
    }

    fn current_key(&self, w: usize) -> Result<SquareKey, HybridError> {
        let id = self.watches[w].id;
        let square = self.watches[w].extract()?;
        let dark = if self.cfg.profile.is_some() {
            decode_dark_cells(self.map, id, |v| self.values[v as usize] > 0)
        } else {
            Vec::new()
        };
        Ok(SquareKey { id, square, dark })
    }

    fn throttle_open(&self, native: u64) -> bool {
        self.last_ep.is_none_or(|last| native - last >= self.cfg.ep_conflict_throttle)
    }

    fn colouring(&self, key: &SquareKey) -> Result<MyrvoldColouring, HybridError> {
        Ok(colour(&key.square, &key.dark).map_err(EpError::from)?)
    }

    /// Runs Euler-Parker on `key`; `native` is `None` for post-search flushes.
    fn run_ep(&mut self, key: &SquareKey, native: Option<u64>) -> Result<Option<Mate>, HybridError> {
        self.stats.ep_calls += 1;
        match native {
            Some(c) => {
                self.last_ep = Some(c);
                self.stats.ep_call_conflicts.push(c);
            }
            None => self.stats.flush_calls += 1,
        }
        let outcome = match self.profile_for(key.id) {
            None => euler_parker(&key.square, &Stage2Constraints::default(), Stage2Mode::First, self.cfg.ep_budget)?,
            Some(profile) => {
                let colouring = self.colouring(key)?;
                find_mates_myrvold(
                    &key.square,
                    &colouring,
                    profile,
                    self.cfg.omega.clone(),
                    Stage2Mode::First,
                    self.cfg.ep_budget,
                )?
            }
        };
        self.stats.ep_stage1_time += outcome.stats.stage1_time;
        self.stats.ep_stage2_time += outcome.stats.stage2_time;
        self.stats.transversals_seen += outcome.stats.transversal_count as u64;
        match outcome.status {
            EpStatus::Mate(m) => Ok(Some(m)),
            _ if !outcome.stats.stage2_exhaustive => Err(HybridError::NonExhaustiveBlock),
            _ => Ok(None),
        }
    }

    fn record_found(&mut self, key: SquareKey, mate: Mate, from_model: bool) {
        let dark = self.cfg.profile.is_some().then_some(key.dark);
        self.found = Some(Found {
            trigger: key.id,
            square: key.square,
            mate: mate.mate,
            transversals: mate.transversals,
            dark,
            from_model,
        });
    }

    fn clause_for(&self, key: &SquareKey) -> Clause {
        if self.cfg.profile.is_some() {
            blocking_clause_coloured(&key.square, &key.dark, self.map, key.id)
        } else {
            blocking_clause(&key.square, self.map, key.id)
        }
    }

    fn audit(&mut self, clause: &Clause, provisional: bool) {
        let n = self.map.order();
        let falsified = clause.iter().all(|l| {
            let v = self.values.get(l.var() as usize).copied().unwrap_or(0);
            v != 0 && (v > 0) != l.is_pos()
        });
        let symbol_literals = clause.iter().filter(|l| self.map.decode_var(l.var()).is_some()).count();
        debug_assert_eq!(symbol_literals, (n - 1) * (n - 1));
        self.blocks.push(BlockAudit { literals: clause.len(), symbol_literals, falsified, provisional });
    }

    fn block(&mut self, key: &SquareKey, provisional: bool) -> Clause {
        let clause = self.clause_for(key);
        self.audit(&clause, provisional);
        if self.memo.touch(key.fingerprint()) {
            self.stats.reblocked_squares += 1;
        }
        if provisional {
            self.stats.deferred_squares += 1;
            if self.deferred_set.insert(key.clone()) {
                self.deferred.push_back(key.clone());
            }
        } else {
            self.stats.blocked_squares += 1;
        }
        clause
    }

    fn take_deferred(&mut self) -> Option<SquareKey> {
        let key = self.deferred.pop_front()?;
        self.deferred_set.remove(&key);
        Some(key)
    }

    /// Handles the first complete watched square. Returns a clause to
    /// inject, if any.
    fn on_complete(&mut self, native: u64, at_model: bool) -> Result<Option<Clause>, HybridError> {
        let Some(w) = (0..self.watches.len()).find(|&w| self.complete(w)) else {
            return Ok(None);
        };
        let key = self.current_key(w)?;
        if !self.throttle_open(native) {
            return Ok(at_model.then(|| self.block(&key, true)));
        }
        if self.deferred_set.remove(&key) {
            self.deferred.retain(|k| k != &key);
        }
        match self.run_ep(&key, Some(native))? {
            Some(mate) => {
                self.record_found(key, mate, false);
                Ok(None)
            }
            None => Ok(Some(self.block(&key, false))),
        }
    }

    /// A model of the channeled coloured encoding already carries a typed
    /// decomposition of P when R's symbol classes satisfy the profile.
    fn model_solution(&self, model: &Model) -> Result<Option<(SquareKey, Mate)>, HybridError> {
        let Some(profile) = self.profile_for(SquareId::P) else {
            return Ok(None);
        };
        let p = decode_square(self.map, SquareId::P, |v| model.value(v))?;
        let r = decode_square(self.map, SquareId::R, |v| model.value(v))?;
        let dark = decode_dark_cells(self.map, SquareId::P, |v| model.value(v));
        let Ok(colouring) = colour(&p, &dark) else {
            return Ok(None);
        };
        let ts = symbol_classes(&r);
        if !verify_typed_decomposition(&p, &colouring, profile, &ts) {
            return Ok(None);
        }
        let key = SquareKey { id: SquareId::P, square: p, dark };
        Ok(Some((key, Mate { mate: r, transversals: ts })))
    }
}

impl ExternalPropagator for Driver<'_> {
    fn observed_vars(&self) -> Vec<u32> {
        self.observed.clone()
    }

    fn on_assign(&mut self, lits: &[Lit], level: usize) {
        for &l in lits {
            self.apply(l);
            self.stack.push((l, level));
        }
    }

    fn on_backtrack(&mut self, new_level: usize) {
        while let Some(&(l, lv)) = self.stack.last() {
            if lv <= new_level {
                break;
            }
            self.stack.pop();
            self.retract(l);
        }
    }

    fn has_external_clause(&mut self, stats: &SolverStats) -> bool {
        if !self.pending.is_empty() {
            return true;
        }
        if self.found.is_some() || self.error.is_some() {
            return false;
        }
        let native = stats.native_conflicts;
        let step = if !self.deferred.is_empty() && self.throttle_open(native) {
            let key = self.take_deferred().unwrap();
            self.run_ep(&key, Some(native)).map(|m| {
                if let Some(mate) = m {
                    self.record_found(key, mate, false);
                }
                None
            })
        } else {
            self.on_complete(native, false)
        };
        match step {
            Ok(Some(c)) => self.pending.push_back(c),
            Ok(None) => {}
            Err(e) => self.error = Some(e),
        }
        !self.pending.is_empty()
    }

    fn fetch_external_clause(&mut self) -> Option<Clause> {
        self.pending.pop_front()
    }

    fn on_solution_check(&mut self, model: &Model, stats: &SolverStats) -> SolutionCheck {
        if self.found.is_some() || self.error.is_some() {
            return SolutionCheck::Accept;
        }
        match self.model_solution(model) {
            Ok(Some((key, mate))) => {
                self.record_found(key, mate, true);
                return SolutionCheck::Accept;
            }
            Ok(None) => {}
            Err(e) => {
                self.error = Some(e);
                return SolutionCheck::Accept;
            }
        }
        match self.on_complete(stats.native_conflicts, true) {
            Ok(Some(c)) => SolutionCheck::Reject(c),
            Ok(None) => SolutionCheck::Accept,
            Err(e) => {
                self.error = Some(e);
                SolutionCheck::Accept
            }
        }
    }

    fn should_terminate(&mut self, _: &SolverStats) -> bool {
        self.found.is_some() || self.error.is_some()
    }
}

fn configure(solver: &mut Solver, seed: u64, options: &[(String, String)]) -> Result<(), SolverError> {
    solver.set_option("shuffle_seed", &seed.to_string())?;
    for (k, v) in options {
        solver.set_option(k, v)?;
    }
    Ok(())
}

/// Checks a found mate end to end.
pub fn verify_found(found: &Found, profile: Option<&PairProfile>) -> Result<(), HybridError> {
    let orth = are_orthogonal(&found.square, &found.mate).map_err(|e| HybridError::Verification(e.to_string()))?;
    if !orth {
        return Err(HybridError::Verification("mate is not orthogonal".into()));
    }
    if let Some(pp) = profile {
        let prof = if found.trigger == SquareId::Q { &pp.q } else { &pp.p };
        let dark = found.dark.as_deref().unwrap_or_default();
        let colouring = colour(&found.square, dark).map_err(|e| HybridError::Verification(e.to_string()))?;
        if !verify_typed_decomposition(&found.square, &colouring, prof, &found.transversals) {
            return Err(HybridError::Verification("decomposition does not match the profile".into()));
        }
    }
    Ok(())
}

pub fn run_hybrid(enc: &Encoding, cfg: &HybridConfig, limits: &Limits) -> Result<HybridResult, HybridError> {
    cfg.validate(&enc.map)?;
    let start = Instant::now();
    let mut solver = Solver::from_cnf(&enc.cnf);
    configure(&mut solver, cfg.seed, &cfg.solver_options)?;
    let mut driver = Driver::new(&enc.map, cfg);
    let result = solver.solve_with(&[], limits, &mut driver)?;
    if let Some(e) = driver.error.take() {
        return Err(e);
    }
    driver.stats.solver = result.stats;
    let mut status = match (&result.status, driver.found.take()) {
        (_, Some(f)) => HybridStatus::Found(Box::new(f)),
        (SolveStatus::Unsat, None) => HybridStatus::Unsat,
        (SolveStatus::Timeout | SolveStatus::Budget | SolveStatus::Interrupted, None) => HybridStatus::Timeout,
        (SolveStatus::Sat(_), None) => return Err(HybridError::UnexpectedModel),
    };
    if status == HybridStatus::Unsat {
        while let Some(key) = driver.take_deferred() {
            if limits.deadline.is_some_and(|d| Instant::now() >= d) {
                status = HybridStatus::Timeout;
                break;
            }
            if let Some(mate) = driver.run_ep(&key, None)? {
                driver.record_found(key, mate, false);
                status = HybridStatus::Found(Box::new(driver.found.take().unwrap()));
                break;
            }
        }
    }
    if let HybridStatus::Found(f) = &status {
        verify_found(f, cfg.profile.as_ref())?;
    }
    let mut stats = driver.stats;
    stats.total_time = start.elapsed();
    stats.sat_time = stats.total_time.saturating_sub(stats.ep_stage1_time + stats.ep_stage2_time);
    Ok(HybridResult { status, stats, blocks: driver.blocks })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PureStatus {
    /// `p` and `r` are orthogonal; `q` is the representation square.
    Found { p: LatinSquare, r: LatinSquare, q: LatinSquare, dark: Option<Vec<Cell>> },
    Unsat,
    Timeout,
}

impl PureStatus {
    pub fn label(&self) -> &'static str {
        match self {
            PureStatus::Found { .. } => "sat",
            PureStatus::Unsat => "unsat",
            PureStatus::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PureResult {
    pub status: PureStatus,
    pub stats: SolverStats,
    pub total_time: Duration,
}

/// Solves a channeled pair encoding with the CDCL engine alone.
pub fn run_pure(enc: &Encoding, seed: u64, options: &[(String, String)], limits: &Limits) -> Result<PureResult, HybridError> {
    for id in [SquareId::P, SquareId::R, SquareId::Q] {
        if !enc.map.has_square(id) {
            return Err(HybridError::Config("pure runs need the channeled pair encoding".into()));
        }
    }
    let start = Instant::now();
    let mut solver = Solver::from_cnf(&enc.cnf);
    configure(&mut solver, seed, options)?;
    let r = solver.solve(&[], limits)?;
    let status = match r.status {
        SolveStatus::Sat(m) => {
            let val = |v: u32| m.value(v);
            let p = decode_square(&enc.map, SquareId::P, val)?;
            let r = decode_square(&enc.map, SquareId::R, val)?;
            let q = decode_square(&enc.map, SquareId::Q, val)?;
            let ok = are_orthogonal(&p, &r).unwrap_or(false) && verify_trp(&p, &q).unwrap_or(false);
            if !ok {
                return Err(HybridError::Verification("pure model is not an orthogonal pair".into()));
            }
            let dark = enc.map.has_colouring(SquareId::P).then(|| decode_dark_cells(&enc.map, SquareId::P, val));
            PureStatus::Found { p, r, q, dark }
        }
        SolveStatus::Unsat => PureStatus::Unsat,
        _ => PureStatus::Timeout,
    };
    Ok(PureResult { status, stats: r.stats, total_time: start.elapsed() })
}
