//! The two-stage Euler-Parker procedure.
//!
//! Stage 1 finds every transversal of a square by solving the system with one
//! 0-1 variable per cell and one equation per row, column and symbol. Stage 2
//! looks for `n` pairwise disjoint transversals by solving the system with one
//! variable per transversal and one equation per cell. Any such family labels
//! an orthogonal mate.
//!
//! Stage 2 accepts extra cardinality equations over the transversal set, which
//! is how the typed (Myrvold) decompositions are expressed, and may be run
//! separately on several classes of transversals.

use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::exactcover::{solve_all, SolveControl, SolveStats, SystemBuilder, Termination};
use crate::latin::{
    classify_transversal, mate_from_transversals, Colour, LatinError, LatinSquare, MyrvoldColouring,
    MyrvoldProfile, Transversal, TransversalType, DARK_COLUMNS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpError {
    #[error("node budget exhausted in stage {0}")]
    BudgetExhausted(u8),
    #[error(transparent)]
    Latin(#[from] LatinError),
    #[error("equation references transversal {0}, set has {1}")]
    BadEquation(usize, usize),
}

/// Deduplicated transversals of one host square, in stage-1 emission order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransversalSet {
    order: usize,
    items: Vec<Transversal>,
}

impl TransversalSet {
    pub fn new(order: usize, items: Vec<Transversal>) -> Self {
        let mut seen = std::collections::HashSet::new();
        let items = items.into_iter().filter(|t| seen.insert(t.clone())).collect();
        Self { order, items }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Transversal] {
        &self.items
    }

    pub fn get(&self, idx: usize) -> &Transversal {
        &self.items[idx]
    }
}

/// `sum of x_t over members == count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardinalityEquation {
    pub members: Vec<usize>,
    pub count: u32,
}

/// Assigns each transversal a bitmask of the classes it is compatible with.
/// Stage 2 runs once per class on the transversals carrying that class's bit.
#[derive(Clone)]
pub struct OmegaPartition {
    pub classes: usize,
    pub labels: Arc<dyn Fn(&Transversal) -> u64 + Send + Sync>,
}

impl fmt::Debug for OmegaPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OmegaPartition").field("classes", &self.classes).finish_non_exhaustive()
    }
}

impl OmegaPartition {
    pub fn new<F>(classes: usize, labels: F) -> Self
    where
        F: Fn(&Transversal) -> u64 + Send + Sync + 'static,
    {
        assert!((1..=64).contains(&classes));
        Self { classes, labels: Arc::new(labels) }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stage2Constraints {
    pub equations: Vec<CardinalityEquation>,
    pub omega: Option<OmegaPartition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stage2Mode {
    /// Stop at the first disjoint family.
    #[default]
    First,
    /// Enumerate every disjoint family.
    All,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mate {
    pub mate: LatinSquare,
    pub transversals: Vec<Transversal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpStatus {
    NoMateFewTransversals,
    NoMateNoDisjointFamily,
    Mate(Mate),
}

impl EpStatus {
    pub fn has_mate(&self) -> bool {
        matches!(self, EpStatus::Mate(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EpStats {
    pub stage1_time: Duration,
    pub stage2_time: Duration,
    pub transversal_count: usize,
    pub stage1_nodes: u64,
    pub stage2_nodes: u64,
    /// Whether every stage-2 search that ran was explored completely, or was
    /// never needed. A negative verdict is only trustworthy when this holds.
    pub stage2_exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpOutcome {
    pub status: EpStatus,
    pub stats: EpStats,
    /// Every family found; only filled in [`Stage2Mode::All`].
    pub all_mates: Vec<Mate>,
}

/// Budgets for one Euler-Parker call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpBudget {
    pub stage1_nodes: Option<u64>,
    pub stage2_nodes: Option<u64>,
}

/// All transversals of `square`.
pub fn enumerate_transversals(square: &LatinSquare, budget: Option<u64>) -> Result<(TransversalSet, SolveStats), EpError> {
    let n = square.order();
    let mut b = SystemBuilder::new(3 * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let col = i * n + j;
            let k = square.get(i, j) as usize;
            b.add_entry(i, col).and_then(|b| b.add_entry(n + j, col)).and_then(|b| b.add_entry(2 * n + k, col))
                .expect("stage-1 system indices are in range and distinct");
        }
    }
    let sys = b.build();
    let mut items = Vec::new();
    let control = SolveControl::unlimited().with_node_budget(budget);
    let stats = solve_all(&sys, control, |x| {
        let mut cols = vec![0u8; n];
        for (idx, &v) in x.iter().enumerate() {
            if v == 1 {
                cols[idx / n] = (idx % n) as u8;
            }
        }
        items.push(Transversal::from_cols(cols).expect("row and column equations make a permutation"));
        ControlFlow::Continue(())
    });
    if stats.termination == Termination::BudgetExhausted {
        return Err(EpError::BudgetExhausted(1));
    }
    Ok((TransversalSet { order: n, items }, stats))
}

/// Searches for `n` disjoint transversals among `ts` subject to `extra`.
pub fn find_disjoint_family(
    square: &LatinSquare,
    ts: &TransversalSet,
    extra: &Stage2Constraints,
    mode: Stage2Mode,
    budget: Option<u64>,
) -> Result<EpOutcome, EpError> {
    let n = square.order();
    let mut stats = EpStats { transversal_count: ts.len(), stage2_exhaustive: true, ..EpStats::default() };
    if ts.len() < n {
        return Ok(EpOutcome { status: EpStatus::NoMateFewTransversals, stats, all_mates: Vec::new() });
    }
    for eq in &extra.equations {
        if let Some(&bad) = eq.members.iter().find(|&&m| m >= ts.len()) {
            return Err(EpError::BadEquation(bad, ts.len()));
        }
    }
    let start = Instant::now();
    let class_members: Vec<Vec<usize>> = match &extra.omega {
        None => vec![(0..ts.len()).collect()],
        Some(omega) => {
            let masks: Vec<u64> = ts.items().iter().map(|t| (omega.labels)(t)).collect();
            (0..omega.classes)
                .map(|c| (0..ts.len()).filter(|&i| masks[i] >> c & 1 == 1).collect())
                .collect()
        }
    };
    let mut all_mates = Vec::new();
    let mut first = None;
    let mut remaining = budget;
    for members in class_members {
        let run = stage2_on(square, ts, &members, &extra.equations, mode, remaining)?;
        stats.stage2_nodes += run.nodes;
        if let Some(r) = remaining.as_mut() {
            *r = r.saturating_sub(run.nodes);
        }
        if run.budget_hit {
            return Err(EpError::BudgetExhausted(2));
        }
        stats.stage2_exhaustive &= run.exhaustive;
        if first.is_none() {
            first = run.mates.first().cloned();
        }
        all_mates.extend(run.mates);
        if mode == Stage2Mode::First && first.is_some() {
            break;
        }
    }
    stats.stage2_time = start.elapsed();
    let status = match first {
        Some(m) => EpStatus::Mate(m),
        None => EpStatus::NoMateNoDisjointFamily,
    };
    Ok(EpOutcome { status, stats, all_mates })
}

struct Stage2Run {
    mates: Vec<Mate>,
    nodes: u64,
    exhaustive: bool,
    budget_hit: bool,
}

fn stage2_on(
    square: &LatinSquare,
    ts: &TransversalSet,
    members: &[usize],
    equations: &[CardinalityEquation],
    mode: Stage2Mode,
    budget: Option<u64>,
) -> Result<Stage2Run, EpError> {
    let n = square.order();
    let empty = Stage2Run { mates: Vec::new(), nodes: 0, exhaustive: true, budget_hit: false };
    // Zero-count equations exclude their members outright.
    let mut allowed = vec![false; ts.len()];
    for &m in members {
        allowed[m] = true;
    }
    for eq in equations.iter().filter(|e| e.count == 0) {
        for &m in &eq.members {
            allowed[m] = false;
        }
    }
    let cols: Vec<usize> = (0..ts.len()).filter(|&i| allowed[i]).collect();
    let mut local = vec![usize::MAX; ts.len()];
    for (c, &t) in cols.iter().enumerate() {
        local[t] = c;
    }
    let positive: Vec<&CardinalityEquation> = equations.iter().filter(|e| e.count > 0).collect();
    for eq in &positive {
        if eq.members.iter().filter(|&&m| allowed[m]).count() < eq.count as usize {
            return Ok(empty);
        }
    }
    if cols.len() < n {
        return Ok(empty);
    }
    let mut b = SystemBuilder::new(n * n + positive.len(), cols.len());
    for (c, &t) in cols.iter().enumerate() {
        for cell in ts.get(t).cells() {
            b.add_entry(cell.row * n + cell.col, c).expect("cell rows are distinct");
        }
    }
    for (e, eq) in positive.iter().enumerate() {
        let row = n * n + e;
        b.set_rhs(row, eq.count).expect("row in range");
        let mut seen = vec![false; cols.len()];
        for &m in &eq.members {
            if allowed[m] && !std::mem::replace(&mut seen[local[m]], true) {
                b.add_entry(row, local[m]).expect("deduplicated");
            }
        }
    }
    let sys = b.build();
    let control = SolveControl {
        max_solutions: (mode == Stage2Mode::First).then_some(1),
        node_budget: budget,
    };
    let mut mates = Vec::new();
    let mut err = None;
    let stats = solve_all(&sys, control, |x| {
        let chosen: Vec<Transversal> =
            x.iter().enumerate().filter(|(_, &v)| v > 0).map(|(c, _)| ts.get(cols[c]).clone()).collect();
        match mate_from_transversals(square, &chosen) {
            Ok(mate) => {
                mates.push(Mate { mate, transversals: chosen });
                ControlFlow::Continue(())
            }
            Err(e) => {
                err = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok(Stage2Run {
        mates,
        nodes: stats.nodes,
        exhaustive: stats.is_exhaustive(),
        budget_hit: stats.termination == Termination::BudgetExhausted,
    })
}

/// Stage 1 followed by stage 2.
pub fn euler_parker(
    square: &LatinSquare,
    extra: &Stage2Constraints,
    mode: Stage2Mode,
    budget: EpBudget,
) -> Result<EpOutcome, EpError> {
    let start = Instant::now();
    let (ts, s1) = enumerate_transversals(square, budget.stage1_nodes)?;
    let stage1_time = start.elapsed();
    let mut out = find_disjoint_family(square, &ts, extra, mode, budget.stage2_nodes)?;
    out.stats.stage1_time = stage1_time;
    out.stats.stage1_nodes = s1.nodes;
    Ok(out)
}

/// Whether `square` has an orthogonal mate.
pub fn has_mate(square: &LatinSquare) -> bool {
    euler_parker(square, &Stage2Constraints::default(), Stage2Mode::First, EpBudget::default())
        .expect("unbudgeted search cannot fail")
        .status
        .has_mate()
}

/// Builds the typed stage-2 equations for a coloured order-10 square.
///
/// Transversals whose dark count disagrees with their white count cannot be
/// part of a typed decomposition and are dropped, as are transversals of a
/// type the profile does not use. The returned vector gives, per kept
/// transversal, its type.
pub fn myrvold_equations(
    ts: &TransversalSet,
    colouring: &MyrvoldColouring,
    profile: &MyrvoldProfile,
) -> (Vec<CardinalityEquation>, Vec<Option<TransversalType>>) {
    let types: Vec<Option<TransversalType>> = ts
        .items()
        .iter()
        .map(|t| classify_transversal(t, colouring).ok().filter(|ty| profile.count(*ty) > 0))
        .collect();
    let mut equations = Vec::new();
    let excluded: Vec<usize> = (0..ts.len()).filter(|&i| types[i].is_none()).collect();
    if !excluded.is_empty() {
        equations.push(CardinalityEquation { members: excluded, count: 0 });
    }
    for ty in TransversalType::ALL {
        let count = profile.count(ty);
        if count > 0 {
            let members = (0..ts.len()).filter(|&i| types[i] == Some(ty)).collect();
            equations.push(CardinalityEquation { members, count: count as u32 });
        }
    }
    for col in 0..DARK_COLUMNS {
        let members = (0..ts.len())
            .filter(|&i| types[i].is_some())
            .filter(|&i| {
                let t = ts.get(i);
                colouring.get(crate::latin::Cell::new(t.cells().find(|c| c.col == col).unwrap().row, col)) == Colour::Dark
            })
            .collect();
        equations.push(CardinalityEquation { members, count: profile.dark_quota()[col] as u32 });
    }
    (equations, types)
}

/// Euler-Parker specialised to typed decompositions of a coloured order-10
/// square. Each Omega class (one all-pass class by default) gets its own
/// stage-2 run and the first mate wins.
pub fn find_mates_myrvold(
    square: &LatinSquare,
    colouring: &MyrvoldColouring,
    profile: &MyrvoldProfile,
    omega: Option<OmegaPartition>,
    mode: Stage2Mode,
    budget: EpBudget,
) -> Result<EpOutcome, EpError> {
    let start = Instant::now();
    let (ts, s1) = enumerate_transversals(square, budget.stage1_nodes)?;
    let stage1_time = start.elapsed();
    let (equations, _) = myrvold_equations(&ts, colouring, profile);
    let extra = Stage2Constraints { equations, omega };
    let mut out = find_disjoint_family(square, &ts, &extra, mode, budget.stage2_nodes)?;
    out.stats.stage1_time = stage1_time;
    out.stats.stage1_nodes = s1.nodes;
    Ok(out)
}

/// Re-checks a typed decomposition without the solver: every transversal is
/// consistently typed, the type counts match the profile and each of the first
/// six columns holds exactly the quota of dark cells among selected cells.
pub fn verify_typed_decomposition(
    square: &LatinSquare,
    colouring: &MyrvoldColouring,
    profile: &MyrvoldProfile,
    ts: &[Transversal],
) -> bool {
    if mate_from_transversals(square, ts).is_err() {
        return false;
    }
    let mut counts = [0usize; 4];
    let mut dark = [0usize; DARK_COLUMNS];
    for t in ts {
        match classify_transversal(t, colouring) {
            Ok(ty) => counts[ty as usize] += 1,
            Err(_) => return false,
        }
        for cell in t.cells().filter(|c| c.col < DARK_COLUMNS) {
            if colouring.get(cell) == Colour::Dark {
                dark[cell.col] += 1;
            }
        }
    }
    counts == profile.type_counts() && dark == *profile.dark_quota()
}
