//! Exhaustive solver for 0-1 linear Diophantine systems
//! `A x = b, 0 <= x <= u` with `a_ij` in `{0, 1}`.
//!
//! Rows of `A` are constraints and columns are choices. The search keeps, for
//! every unsatisfied row, a doubly linked list of the columns that may still be
//! incremented ("admissible" columns) and undoes all list surgery through a
//! trail, in the dancing-links style. At each node it branches on the row with
//! the fewest admissible columns (lowest index on ties) and tries those columns
//! in ascending order; once a column's subtree is exhausted the column is
//! frozen for its later siblings, which makes every solution vector appear
//! exactly once even when `b` and `u` exceed one.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::ControlFlow;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("entry ({row},{col}) added twice")]
    DuplicateEntry { row: usize, col: usize },
    #[error("index ({row},{col}) out of range for a {rows}x{cols} system")]
    IndexOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("right-hand sides and bounds must be positive")]
    NonPositive,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A frozen system with sparse column supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiophantineSystem {
    rows: usize,
    support: Vec<Vec<u32>>,
    rhs: Vec<u32>,
    bounds: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct SystemBuilder {
    rows: usize,
    cols: usize,
    support: Vec<Vec<u32>>,
    seen: HashSet<(u32, u32)>,
    rhs: Vec<u32>,
    bounds: Vec<u32>,
}

impl SystemBuilder {
    /// A `rows x cols` system with `b = 1`, `u = 1` and no entries.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            support: vec![Vec::new(); cols],
            seen: HashSet::new(),
            rhs: vec![1; rows],
            bounds: vec![1; cols],
        }
    }

    fn range_check(&self, row: usize, col: usize) -> Result<(), SystemError> {
        if row >= self.rows || col >= self.cols {
            return Err(SystemError::IndexOutOfRange { row, col, rows: self.rows, cols: self.cols });
        }
        Ok(())
    }

    pub fn add_entry(&mut self, row: usize, col: usize) -> Result<&mut Self, SystemError> {
        self.range_check(row, col)?;
        if !self.seen.insert((row as u32, col as u32)) {
            return Err(SystemError::DuplicateEntry { row, col });
        }
        self.support[col].push(row as u32);
        Ok(self)
    }

    pub fn set_rhs(&mut self, row: usize, value: u32) -> Result<&mut Self, SystemError> {
        if row >= self.rows {
            return Err(SystemError::IndexOutOfRange { row, col: 0, rows: self.rows, cols: self.cols });
        }
        if value == 0 {
            return Err(SystemError::NonPositive);
        }
        self.rhs[row] = value;
        Ok(self)
    }

    pub fn set_bound(&mut self, col: usize, value: u32) -> Result<&mut Self, SystemError> {
        if col >= self.cols {
            return Err(SystemError::IndexOutOfRange { row: 0, col, rows: self.rows, cols: self.cols });
        }
        if value == 0 {
            return Err(SystemError::NonPositive);
        }
        self.bounds[col] = value;
        Ok(self)
    }

    pub fn build(mut self) -> DiophantineSystem {
        for s in &mut self.support {
            s.sort_unstable();
        }
        DiophantineSystem { rows: self.rows, support: self.support, rhs: self.rhs, bounds: self.bounds }
    }
}

impl DiophantineSystem {
    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self, col: usize) -> &[u32] {
        &self.support[col]
    }

    pub fn rhs(&self) -> &[u32] {
        &self.rhs
    }

    pub fn bounds(&self) -> &[u32] {
        &self.bounds
    }

    /// Checks `A x = b` and `0 <= x <= u`.
    pub fn is_solution(&self, x: &[u32]) -> bool {
        if x.len() != self.num_cols() {
            return false;
        }
        let mut lhs = vec![0u64; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj > self.bounds[j] {
                return false;
            }
            for &r in &self.support[j] {
                lhs[r as usize] += xj as u64;
            }
        }
        lhs.iter().zip(&self.rhs).all(|(&l, &b)| l == b as u64)
    }

    /// Text form: `M N`, then `r c` entry lines, then `rhs ...` and `bounds ...`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.num_cols());
        for (c, rows) in self.support.iter().enumerate() {
            for r in rows {
                let _ = writeln!(out, "{r} {c}");
            }
        }
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "rhs {}", join(&self.rhs));
        let _ = writeln!(out, "bounds {}", join(&self.bounds));
        out
    }

    pub fn parse(text: &str) -> Result<Self, SystemError> {
        let err = |line: usize, msg: &str| SystemError::Parse { line: line + 1, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or_else(|| err(0, "empty input"))?;
        let dims: Vec<usize> = header.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        if dims.len() != 2 {
            return Err(err(hl, "expected `M N`"));
        }
        let mut b = SystemBuilder::new(dims[0], dims[1]);
        let (mut have_rhs, mut have_bounds) = (false, false);
        for (idx, line) in lines {
            let mut toks = line.split_whitespace();
            let first = toks.next().unwrap_or_default();
            let nums = |toks: std::str::SplitWhitespace<'_>| -> Result<Vec<u32>, SystemError> {
                toks.map(|t| t.parse::<u32>().map_err(|e| err(idx, &e.to_string()))).collect()
            };
            match first {
                "rhs" => {
                    let v = nums(toks)?;
                    if v.len() != dims[0] {
                        return Err(err(idx, "rhs length"));
                    }
                    for (r, &val) in v.iter().enumerate() {
                        b.set_rhs(r, val)?;
                    }
                    have_rhs = true;
                }
                "bounds" => {
                    let v = nums(toks)?;
                    if v.len() != dims[1] {
                        return Err(err(idx, "bounds length"));
                    }
                    for (c, &val) in v.iter().enumerate() {
                        b.set_bound(c, val)?;
                    }
                    have_bounds = true;
                }
                _ => {
                    if have_rhs || have_bounds {
                        return Err(err(idx, "entry after rhs/bounds"));
                    }
                    let r: usize = first.parse().map_err(|_| err(idx, "bad row"))?;
                    let c: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err(idx, "bad col"))?;
                    b.add_entry(r, c)?;
                }
            }
        }
        Ok(b.build())
    }
}

/// Caps on a solve. `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveControl {
    pub max_solutions: Option<u64>,
    pub node_budget: Option<u64>,
}

impl SolveControl {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn first() -> Self {
        Self { max_solutions: Some(1), node_budget: None }
    }

    pub fn with_node_budget(mut self, budget: Option<u64>) -> Self {
        self.node_budget = budget;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The whole search space was explored.
    Exhausted,
    /// `max_solutions` was reached.
    SolutionCap,
    /// `node_budget` ran out before the search finished.
    BudgetExhausted,
    /// The callback asked to stop.
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveStats {
    pub solutions: u64,
    pub nodes: u64,
    pub termination: Termination,
}

impl SolveStats {
    /// True iff the search space was explored completely.
    pub fn is_exhaustive(&self) -> bool {
        self.termination == Termination::Exhausted
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Solution {
    pub x: Vec<u32>,
}

impl Solution {
    /// Indices of the columns with `x_j > 0`.
    pub fn selected(&self) -> Vec<usize> {
        self.x.iter().enumerate().filter(|(_, &v)| v > 0).map(|(j, _)| j).collect()
    }
}

/// Streams every solution to `emit`. The callback may break to stop early.
pub fn solve_all<F>(system: &DiophantineSystem, control: SolveControl, emit: F) -> SolveStats
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    let mut search = Search::new(system, control, emit);
    search.run();
    SolveStats {
        solutions: search.solutions,
        nodes: search.nodes,
        termination: search.termination.unwrap_or(Termination::Exhausted),
    }
}

/// The first solution in search order, if any.
pub fn solve_first(system: &DiophantineSystem, control: SolveControl) -> (Option<Solution>, SolveStats) {
    let mut found = None;
    let control = SolveControl { max_solutions: Some(1), ..control };
    let stats = solve_all(system, control, |x| {
        found = Some(Solution { x: x.to_vec() });
        ControlFlow::Continue(())
    });
    (found, stats)
}

/// Collects all solutions. Convenient for small systems.
pub fn solve_collect(system: &DiophantineSystem, control: SolveControl) -> (Vec<Solution>, SolveStats) {
    let mut out = Vec::new();
    let stats = solve_all(system, control, |x| {
        out.push(Solution { x: x.to_vec() });
        ControlFlow::Continue(())
    });
    (out, stats)
}

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
enum Op {
    Inc(u32),
    Hide(u32),
    Saturate(u32),
}

struct Search<'a, F> {
    sys: &'a DiophantineSystem,
    control: SolveControl,
    emit: F,
    // Row lists: nodes 0..rows are headers, then one node per entry.
    up: Vec<u32>,
    down: Vec<u32>,
    node_col: Vec<u32>,
    node_row: Vec<u32>,
    col_first: Vec<u32>,
    len: Vec<u32>,
    // Active (unsatisfied) rows, circular list with header `rows`.
    prev_row: Vec<u32>,
    next_row: Vec<u32>,
    residual: Vec<u32>,
    x: Vec<u32>,
    alive: Vec<bool>,
    empty_cols: Vec<usize>,
    trail: Vec<Op>,
    nodes: u64,
    solutions: u64,
    termination: Option<Termination>,
}

impl<'a, F> Search<'a, F>
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    fn new(sys: &'a DiophantineSystem, control: SolveControl, emit: F) -> Self {
        let rows = sys.rows;
        let ncols = sys.num_cols();
        let entries: usize = sys.support.iter().map(Vec::len).sum();
        let total = rows + entries;
        let mut up = vec![NIL; total];
        let mut down = vec![NIL; total];
        let mut node_col = vec![NIL; total];
        let mut node_row = vec![NIL; total];
        let mut col_first = Vec::with_capacity(ncols + 1);
        let mut len = vec![0u32; rows];
        for r in 0..rows {
            up[r] = r as u32;
            down[r] = r as u32;
            node_row[r] = r as u32;
        }
        let mut next = rows as u32;
        for (c, support) in sys.support.iter().enumerate() {
            col_first.push(next);
            for &r in support {
                let node = next as usize;
                let head = r as usize;
                // append at the bottom so each row list stays in ascending column order
                let last = up[head];
                up[node] = last;
                down[node] = head as u32;
                down[last as usize] = node as u32;
                up[head] = node as u32;
                node_col[node] = c as u32;
                node_row[node] = r;
                len[head] += 1;
                next += 1;
            }
        }
        col_first.push(next);

        let mut prev_row = vec![0u32; rows + 1];
        let mut next_row = vec![0u32; rows + 1];
        for r in 0..=rows {
            prev_row[r] = if r == 0 { rows as u32 } else { r as u32 - 1 };
            next_row[r] = if r == rows { 0 } else { r as u32 + 1 };
        }
        if rows == 0 {
            prev_row[0] = 0;
            next_row[0] = 0;
        }
        let empty_cols = (0..ncols).filter(|&c| sys.support[c].is_empty()).collect();
        Self {
            sys,
            control,
            emit,
            up,
            down,
            node_col,
            node_row,
            col_first,
            len,
            prev_row,
            next_row,
            residual: sys.rhs.clone(),
            x: vec![0; ncols],
            alive: vec![true; ncols],
            empty_cols,
            trail: Vec::new(),
            nodes: 0,
            solutions: 0,
            termination: None,
        }
    }

    fn run(&mut self) {
        self.search();
    }

    fn col_nodes(&self, c: usize) -> std::ops::Range<usize> {
        self.col_first[c] as usize..self.col_first[c + 1] as usize
    }

    fn hide_col(&mut self, c: usize) {
        debug_assert!(self.alive[c]);
        self.alive[c] = false;
        for node in self.col_nodes(c) {
            let (u, d) = (self.up[node] as usize, self.down[node] as usize);
            self.down[u] = d as u32;
            self.up[d] = u as u32;
            self.len[self.node_row[node] as usize] -= 1;
        }
        self.trail.push(Op::Hide(c as u32));
    }

    fn unhide_col(&mut self, c: usize) {
        for node in self.col_nodes(c).rev() {
            let (u, d) = (self.up[node] as usize, self.down[node] as usize);
            self.down[u] = node as u32;
            self.up[d] = node as u32;
            self.len[self.node_row[node] as usize] += 1;
        }
        self.alive[c] = true;
    }

    fn saturate_row(&mut self, r: usize) {
        let (p, n) = (self.prev_row[r] as usize, self.next_row[r] as usize);
        self.next_row[p] = n as u32;
        self.prev_row[n] = p as u32;
        self.trail.push(Op::Saturate(r as u32));
        let mut node = self.down[r] as usize;
        while node != r {
            let c = self.node_col[node] as usize;
            // hiding leaves this node's own links intact
            self.hide_col(c);
            node = self.down[node] as usize;
        }
    }

    fn increment(&mut self, c: usize) {
        self.trail.push(Op::Inc(c as u32));
        self.x[c] += 1;
        let sys = self.sys;
        for &r in &sys.support[c] {
            self.residual[r as usize] -= 1;
        }
        for &r in &sys.support[c] {
            if self.residual[r as usize] == 0 {
                self.saturate_row(r as usize);
            }
        }
        if self.alive[c] && self.x[c] == sys.bounds[c] {
            self.hide_col(c);
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Op::Inc(c) => {
                    let c = c as usize;
                    self.x[c] -= 1;
                    for &r in &self.sys.support[c] {
                        self.residual[r as usize] += 1;
                    }
                }
                Op::Hide(c) => self.unhide_col(c as usize),
                Op::Saturate(r) => {
                    let r = r as usize;
                    let (p, n) = (self.prev_row[r] as usize, self.next_row[r] as usize);
                    self.next_row[p] = r as u32;
                    self.prev_row[n] = r as u32;
                }
            }
        }
    }

    /// Row with the fewest admissible columns, or `Err(())` on a dead end.
    fn choose_row(&self) -> Result<Option<usize>, ()> {
        let head = self.sys.rows;
        let mut best: Option<(u32, usize)> = None;
        let mut r = self.next_row[head] as usize;
        while r != head {
            let len = self.len[r];
            if len == 0 {
                return Err(());
            }
            let need = self.residual[r];
            if need > 1 {
                let mut cap = 0u64;
                let mut node = self.down[r] as usize;
                while node != r {
                    let c = self.node_col[node] as usize;
                    cap += (self.sys.bounds[c] - self.x[c]) as u64;
                    node = self.down[node] as usize;
                }
                if cap < need as u64 {
                    return Err(());
                }
            }
            if best.is_none_or(|(l, _)| len < l) {
                best = Some((len, r));
            }
            r = self.next_row[r] as usize;
        }
        Ok(best.map(|(_, r)| r))
    }

    fn stopped(&self) -> bool {
        self.termination.is_some()
    }

    fn emit_solution(&mut self) {
        if self.empty_cols.is_empty() {
            self.emit_one();
            return;
        }
        // Columns that touch no row are free in 0..=u; enumerate them.
        let empties = self.empty_cols.clone();
        loop {
            self.emit_one();
            if self.stopped() {
                break;
            }
            let mut k = 0;
            while k < empties.len() {
                let c = empties[k];
                if self.x[c] < self.sys.bounds[c] {
                    self.x[c] += 1;
                    break;
                }
                self.x[c] = 0;
                k += 1;
            }
            if k == empties.len() {
                break;
            }
        }
        for &c in &empties {
            self.x[c] = 0;
        }
    }

    fn emit_one(&mut self) {
        debug_assert!(self.sys.is_solution(&self.x));
        self.solutions += 1;
        if (self.emit)(&self.x).is_break() {
            self.termination = Some(Termination::Stopped);
        } else if self.control.max_solutions.is_some_and(|m| self.solutions >= m) {
            self.termination = Some(Termination::SolutionCap);
        }
    }

    fn search(&mut self) {
        if self.control.node_budget.is_some_and(|b| self.nodes >= b) {
            self.termination = Some(Termination::BudgetExhausted);
            return;
        }
        self.nodes += 1;
        let r = match self.choose_row() {
            Err(()) => return,
            Ok(None) => {
                self.emit_solution();
                return;
            }
            Ok(Some(r)) => r,
        };
        let mark = self.trail.len();
        let mut node = self.down[r] as usize;
        while node != r {
            let c = self.node_col[node] as usize;
            let inner = self.trail.len();
            self.increment(c);
            self.search();
            self.undo_to(inner);
            if self.stopped() {
                break;
            }
            // later siblings must not increment `c` again
            self.hide_col(c);
            node = self.down[node] as usize;
        }
        self.undo_to(mark);
    }
}
