//! CNF encodings: Latin squares, exactly-k constraints, orthogonality
//! channeling through a representation square, and the Myrvold colouring
//! layer for order ten.
//!
//! Symbol variables are numbered block by block. For a declared square with
//! block offset `b`, the variable for "cell `(i, j)` holds `k`" is
//! `b + i*n^2 + j*n + k + 1`. Blocks are laid out P, R, Q in that order, and
//! every auxiliary variable sits above the last square block.

use std::fmt;
use std::io::{self, Write};
use std::ops::{Not, Range};
use std::str::FromStr;

use thiserror::Error;

use crate::latin::{
    Cell, LatinError, LatinSquare, MyrvoldProfile, TransversalType, COLOURED_ORDER, DARK_COLUMNS, DARK_PER_COLUMN,
    MAX_ORDER, TYPE_COLUMNS, WHITE_SYMBOLS,
};

/// A DIMACS literal: a nonzero signed variable index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn from_dimacs(value: i32) -> Option<Lit> {
        (value != 0 && value != i32::MIN).then_some(Lit(value))
    }

    pub fn pos(var: u32) -> Lit {
        assert!(var > 0 && var <= i32::MAX as u32, "variable {var} out of range");
        Lit(var as i32)
    }

    pub fn neg(var: u32) -> Lit {
        !Lit::pos(var)
    }

    pub fn with_sign(var: u32, positive: bool) -> Lit {
        if positive {
            Lit::pos(var)
        } else {
            Lit::neg(var)
        }
    }

    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_pos(self) -> bool {
        self.0 > 0
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type Clause = Vec<Lit>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("empty clause")]
    EmptyClause,
    #[error("literal {lit} exceeds variable count {vars}")]
    LiteralOutOfRange { lit: i32, vars: u32 },
}

/// A clause list over variables `1..=num_vars`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    num_vars: u32,
    clauses: Vec<Clause>,
    pub metadata: Vec<String>,
}

impl Cnf {
    pub fn new(num_vars: u32) -> Self {
        Cnf { num_vars, clauses: Vec::new(), metadata: Vec::new() }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn fresh_var(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars
    }

    pub fn fresh_lits(&mut self, count: usize) -> Vec<Lit> {
        (0..count).map(|_| Lit::pos(self.fresh_var())).collect()
    }

    /// Adds a clause, dropping repeated literals but keeping the given order.
    pub fn try_add_clause<I: IntoIterator<Item = Lit>>(&mut self, lits: I) -> Result<(), CnfError> {
        let mut clause: Clause = Vec::new();
        for lit in lits {
            if lit.var() > self.num_vars {
                return Err(CnfError::LiteralOutOfRange { lit: lit.to_dimacs(), vars: self.num_vars });
            }
            if !clause.contains(&lit) {
                clause.push(lit);
            }
        }
        if clause.is_empty() {
            return Err(CnfError::EmptyClause);
        }
        self.clauses.push(clause);
        Ok(())
    }

    /// Panicking variant for encoders that only build well-formed clauses.
    pub fn add_clause<I: IntoIterator<Item = Lit>>(&mut self, lits: I) {
        self.try_add_clause(lits).expect("encoder produced a malformed clause");
    }

    /// Forces unsatisfiability without an empty clause.
    fn add_contradiction(&mut self) {
        let v = self.fresh_var();
        self.add_clause([Lit::pos(v)]);
        self.add_clause([Lit::neg(v)]);
    }

    pub fn is_satisfied_by(&self, value: impl Fn(u32) -> bool) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| value(l.var()) == l.is_pos()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Cardinality {
    #[default]
    Pairwise,
    Totalizer,
}

impl FromStr for Cardinality {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pairwise" => Ok(Cardinality::Pairwise),
            "totalizer" => Ok(Cardinality::Totalizer),
            _ => Err(format!("unknown cardinality encoding `{s}`")),
        }
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cardinality::Pairwise => "pairwise",
            Cardinality::Totalizer => "totalizer",
        })
    }
}

/// Unary counter over a literal set. `outputs[t]` is true iff at least
/// `t + 1` inputs are true, for `t` below the cap.
#[derive(Clone, Debug)]
pub struct Totalizer {
    outputs: Vec<Lit>,
    inputs: usize,
}

impl Totalizer {
    pub fn build(cnf: &mut Cnf, lits: &[Lit], cap: usize) -> Totalizer {
        assert!(!lits.is_empty() && cap >= 1);
        if lits.len() == 1 {
            return Totalizer { outputs: vec![lits[0]], inputs: 1 };
        }
        let mid = lits.len() / 2;
        let a = Totalizer::build(cnf, &lits[..mid], cap);
        let b = Totalizer::build(cnf, &lits[mid..], cap);
        let inputs = a.inputs + b.inputs;
        let m = inputs.min(cap);
        let r = cnf.fresh_lits(m);
        let (la, lb) = (a.outputs.len(), b.outputs.len());
        for i in 0..=la {
            for j in 0..=lb {
                if i + j >= 1 {
                    let s = (i + j).min(m);
                    let mut c = Vec::with_capacity(3);
                    if i > 0 {
                        c.push(!a.outputs[i - 1]);
                    }
                    if j > 0 {
                        c.push(!b.outputs[j - 1]);
                    }
                    c.push(r[s - 1]);
                    cnf.add_clause(c);
                }
                let s = i + j + 1;
                if s > m || (i == la && a.capped()) || (j == lb && b.capped()) {
                    continue;
                }
                let mut c = Vec::with_capacity(3);
                if i < la {
                    c.push(a.outputs[i]);
                }
                if j < lb {
                    c.push(b.outputs[j]);
                }
                c.push(!r[s - 1]);
                cnf.add_clause(c);
            }
        }
        Totalizer { outputs: r, inputs }
    }

    fn capped(&self) -> bool {
        self.outputs.len() < self.inputs
    }

    /// Literal meaning "at least `k` inputs are true", for `1 <= k <= cap`.
    pub fn at_least(&self, k: usize) -> Option<Lit> {
        (k >= 1).then(|| self.outputs.get(k - 1).copied()).flatten()
    }

    pub fn outputs(&self) -> &[Lit] {
        &self.outputs
    }

    /// Clauses for `guard -> (count == k)`; requires cap above `k` unless `k`
    /// equals the input count.
    pub fn implies_exactly(&self, cnf: &mut Cnf, guard: Lit, k: usize) {
        if k > self.inputs {
            cnf.add_clause([!guard]);
            return;
        }
        if let Some(ge) = self.at_least(k) {
            cnf.add_clause([!guard, ge]);
        }
        if k < self.inputs {
            let gt = self.at_least(k + 1).expect("totalizer cap too small");
            cnf.add_clause([!guard, !gt]);
        }
    }
}

pub fn encode_exactly_one(cnf: &mut Cnf, lits: &[Lit], method: Cardinality) {
    encode_exactly_k(cnf, lits, 1, method);
}

/// Exactly `k` of `lits`. Pairwise is only defined for `k = 1`; other
/// counts always use a totalizer.
pub fn encode_exactly_k(cnf: &mut Cnf, lits: &[Lit], k: usize, method: Cardinality) {
    if k > lits.len() {
        cnf.add_contradiction();
        return;
    }
    if k == 0 {
        for &l in lits {
            cnf.add_clause([!l]);
        }
        return;
    }
    if k == 1 && method == Cardinality::Pairwise {
        cnf.add_clause(lits.iter().copied());
        for (a, &x) in lits.iter().enumerate() {
            for &y in &lits[a + 1..] {
                cnf.add_clause([!x, !y]);
            }
        }
        return;
    }
    let tot = Totalizer::build(cnf, lits, (k + 1).min(lits.len()));
    cnf.add_clause([tot.at_least(k).unwrap()]);
    if let Some(over) = tot.at_least(k + 1) {
        cnf.add_clause([!over]);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SquareId {
    P,
    R,
    Q,
}

impl SquareId {
    pub const ALL: [SquareId; 3] = [SquareId::P, SquareId::R, SquareId::Q];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SquareId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SquareId::P => "P",
            SquareId::R => "R",
            SquareId::Q => "Q",
        })
    }
}

impl FromStr for SquareId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "P" => Ok(SquareId::P),
            "R" => Ok(SquareId::R),
            "Q" => Ok(SquareId::Q),
            _ => Err(format!("unknown square `{s}`")),
        }
    }
}

/// Variable layout of an encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableMap {
    order: usize,
    blocks: [Option<u32>; 3],
    white: [Option<u32>; 3],
    dark: [Option<u32>; 3],
    aux_start: u32,
}

impl VariableMap {
    /// Declares the given squares, always in P, R, Q order.
    pub fn new(order: usize, squares: &[SquareId]) -> Self {
        let n3 = (order * order * order) as u32;
        let mut blocks = [None; 3];
        let mut next = 0;
        for id in SquareId::ALL {
            if squares.contains(&id) {
                blocks[id.index()] = Some(next);
                next += n3;
            }
        }
        VariableMap { order, blocks, white: [None; 3], dark: [None; 3], aux_start: next + 1 }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn declared(&self) -> Vec<SquareId> {
        SquareId::ALL.into_iter().filter(|id| self.blocks[id.index()].is_some()).collect()
    }

    pub fn has_square(&self, id: SquareId) -> bool {
        self.blocks[id.index()].is_some()
    }

    /// First variable not belonging to a square block.
    pub fn aux_start(&self) -> u32 {
        self.aux_start
    }

    pub fn square_range(&self, id: SquareId) -> Option<Range<u32>> {
        let n3 = (self.order.pow(3)) as u32;
        self.blocks[id.index()].map(|b| b + 1..b + 1 + n3)
    }

    pub fn var(&self, id: SquareId, i: usize, j: usize, k: usize) -> u32 {
        let n = self.order;
        debug_assert!(i < n && j < n && k < n);
        let base = self.blocks[id.index()].unwrap_or_else(|| panic!("square {id} not declared"));
        base + (i * n * n + j * n + k) as u32 + 1
    }

    pub fn lit(&self, id: SquareId, i: usize, j: usize, k: usize) -> Lit {
        Lit::pos(self.var(id, i, j, k))
    }

    /// Inverse of [`VariableMap::var`] on the square region.
    pub fn decode_var(&self, var: u32) -> Option<(SquareId, usize, usize, usize)> {
        let n = self.order;
        for id in SquareId::ALL {
            if let Some(r) = self.square_range(id) {
                if r.contains(&var) {
                    let x = (var - r.start) as usize;
                    return Some((id, x / (n * n), (x / n) % n, x % n));
                }
            }
        }
        None
    }

    pub fn white(&self, id: SquareId, i: usize, j: usize) -> Option<u32> {
        self.white[id.index()].map(|b| b + (i * self.order + j) as u32)
    }

    pub fn dark(&self, id: SquareId, i: usize, j: usize) -> Option<u32> {
        debug_assert!(j < DARK_COLUMNS);
        self.dark[id.index()].map(|b| b + (i * DARK_COLUMNS + j) as u32)
    }

    pub fn has_colouring(&self, id: SquareId) -> bool {
        self.dark[id.index()].is_some()
    }

    /// The dark-indicator variables of a square, row-major over the first
    /// six columns.
    pub fn dark_vars(&self, id: SquareId) -> Vec<u32> {
        let n = self.order;
        match self.dark[id.index()] {
            Some(b) => (0..(n * DARK_COLUMNS) as u32).map(|x| b + x).collect(),
            None => Vec::new(),
        }
    }

    fn alloc_indicators(&mut self, cnf: &mut Cnf, id: SquareId) {
        let n = self.order;
        let w = cnf.num_vars() + 1;
        cnf.fresh_lits(n * n);
        let d = cnf.num_vars() + 1;
        cnf.fresh_lits(n * DARK_COLUMNS);
        self.white[id.index()] = Some(w);
        self.dark[id.index()] = Some(d);
    }

    /// Sidecar text: `P i j k v` for symbol variables, then `W P i j v` and
    /// `D P i j v` for colouring indicators.
    pub fn to_sidecar(&self) -> String {
        let n = self.order;
        let mut out = format!("order {n}\n");
        for id in self.declared() {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out.push_str(&format!("{id} {i} {j} {k} {}\n", self.var(id, i, j, k)));
                    }
                }
            }
        }
        for id in self.declared() {
            if self.white[id.index()].is_none() {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    out.push_str(&format!("W {id} {i} {j} {}\n", self.white(id, i, j).unwrap()));
                }
            }
            for i in 0..n {
                for j in 0..DARK_COLUMNS {
                    out.push_str(&format!("D {id} {i} {j} {}\n", self.dark(id, i, j).unwrap()));
                }
            }
        }
        out
    }

    /// Rebuilds a map from its sidecar, checking every line against the
    /// block layout.
    pub fn parse_sidecar(text: &str) -> Result<VariableMap, String> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or("empty sidecar")?;
        let order: usize = head
            .strip_prefix("order ")
            .and_then(|s| s.trim().parse().ok())
            .filter(|&n| (1..=MAX_ORDER).contains(&n))
            .ok_or("missing `order n` header")?;
        let mut squares: Vec<SquareId> = Vec::new();
        let mut entries: Vec<(usize, String, SquareId, Vec<usize>, u32)> = Vec::new();
        let mut white = [None; 3];
        let mut dark = [None; 3];
        for (no, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || format!("line {}: malformed `{line}`", no + 1);
            let (tag, rest) = match f.first() {
                Some(&"W") | Some(&"D") => (f[0].to_string(), &f[1..]),
                _ => (String::new(), &f[..]),
            };
            let id: SquareId = rest.first().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let nums: Vec<usize> = rest[1..].iter().map(|s| s.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
            let (v, idx) = nums.split_last().ok_or_else(bad)?;
            let want = if tag.is_empty() { 3 } else { 2 };
            if idx.len() != want || idx.iter().any(|&x| x >= order) {
                return Err(bad());
            }
            if tag.is_empty() && !squares.contains(&id) {
                squares.push(id);
            }
            let slot = match tag.as_str() {
                "W" => Some((&mut white, idx[0] * order + idx[1])),
                "D" if idx[1] < DARK_COLUMNS => Some((&mut dark, idx[0] * DARK_COLUMNS + idx[1])),
                "D" => return Err(bad()),
                _ => None,
            };
            if let Some((arr, off)) = slot {
                let base = (*v as u32).checked_sub(off as u32).ok_or_else(bad)?;
                arr[id.index()].get_or_insert(base);
            }
            entries.push((no, tag, id, idx.to_vec(), *v as u32));
        }
        let mut map = VariableMap::new(order, &squares);
        map.white = white;
        map.dark = dark;
        for (no, tag, id, idx, v) in entries {
            let expect = match tag.as_str() {
                "W" => map.white(id, idx[0], idx[1]),
                "D" => map.dark(id, idx[0], idx[1]),
                _ => Some(map.var(id, idx[0], idx[1], idx[2])),
            };
            if expect != Some(v) {
                return Err(format!("line {}: variable {v} does not fit the block layout", no + 1));
            }
        }
        Ok(map)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("cell ({row},{col}) of {square} has {count} true symbols")]
    DecodeInconsistency { square: SquareId, row: usize, col: usize, count: usize },
    #[error(transparent)]
    Latin(#[from] LatinError),
}

/// Reads a square off an assignment given as a variable valuation.
pub fn decode_square(map: &VariableMap, id: SquareId, value: impl Fn(u32) -> bool) -> Result<LatinSquare, DecodeError> {
    let n = map.order();
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let ks: Vec<usize> = (0..n).filter(|&k| value(map.var(id, i, j, k))).collect();
            if ks.len() != 1 {
                return Err(DecodeError::DecodeInconsistency { square: id, row: i, col: j, count: ks.len() });
            }
            cells.push(ks[0] as u8);
        }
    }
    Ok(LatinSquare::from_flat(n, cells)?)
}

/// Dark cells of a coloured square under an assignment.
pub fn decode_dark_cells(map: &VariableMap, id: SquareId, value: impl Fn(u32) -> bool) -> Vec<Cell> {
    let mut out = Vec::new();
    if !map.has_colouring(id) {
        return out;
    }
    for i in 0..map.order() {
        for j in 0..DARK_COLUMNS {
            if value(map.dark(id, i, j).unwrap()) {
                out.push(Cell::new(i, j));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    Single,
    Pair,
    Myrvold,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single" => Ok(Mode::Single),
            "pair" => Ok(Mode::Pair),
            "myrvold" => Ok(Mode::Myrvold),
            _ => Err(format!("unknown encoding mode `{s}`")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Pair => "pair",
            Mode::Myrvold => "myrvold",
        })
    }
}

/// Decomposition profiles of both squares of a pair. `p` constrains the
/// transversals of P (rows of Q) and `q` those of Q (rows of P).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairProfile {
    pub p: MyrvoldProfile,
    pub q: MyrvoldProfile,
}

impl PairProfile {
    pub fn same(profile: MyrvoldProfile) -> Self {
        PairProfile { p: profile.clone(), q: profile }
    }

    /// `XX`, `R` (shorthand for `RR`) or `RR`.
    pub fn preset(name: &str) -> Option<Self> {
        let name = match name {
            "RR" => "R",
            "XX" => "XX",
            "R" => "R",
            _ => return None,
        };
        MyrvoldProfile::preset(name).map(PairProfile::same)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("order {0} outside 1..={MAX_ORDER}")]
    BadOrder(usize),
    #[error("first row is not a permutation of 0..{0}")]
    BadFirstRow(usize),
    #[error("a pair-type profile requires myrvold mode")]
    ProfileWithoutMyrvold,
    #[error("myrvold mode requires a pair-type profile")]
    UnsupportedProfile,
    #[error("myrvold mode is defined for order {COLOURED_ORDER}, got {0}")]
    MyrvoldOrder(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodeConfig {
    pub order: usize,
    pub mode: Mode,
    pub cardinality: Cardinality,
    pub first_row: Option<Vec<u8>>,
    pub profile: Option<PairProfile>,
}

impl EncodeConfig {
    pub fn new(order: usize, mode: Mode) -> Self {
        EncodeConfig { order, mode, cardinality: Cardinality::Pairwise, first_row: None, profile: None }
    }

    pub fn with_cardinality(mut self, c: Cardinality) -> Self {
        self.cardinality = c;
        self
    }

    pub fn with_first_row(mut self, row: Vec<u8>) -> Self {
        self.first_row = Some(row);
        self
    }

    /// Fixes the first row of P to `0, 1, ..., n-1`.
    pub fn with_identity_first_row(self) -> Self {
        let n = self.order as u8;
        self.with_first_row((0..n).collect())
    }

    pub fn with_profile(mut self, p: PairProfile) -> Self {
        self.profile = Some(p);
        self
    }

    pub fn validate(&self) -> Result<(), EncodeError> {
        let n = self.order;
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(EncodeError::BadOrder(n));
        }
        if let Some(row) = &self.first_row {
            let mut seen = 0u64;
            for &s in row {
                if s as usize >= n || seen >> s & 1 == 1 {
                    return Err(EncodeError::BadFirstRow(n));
                }
                seen |= 1 << s;
            }
            if row.len() != n {
                return Err(EncodeError::BadFirstRow(n));
            }
        }
        match (self.mode, &self.profile) {
            (Mode::Myrvold, None) => Err(EncodeError::UnsupportedProfile),
            (Mode::Myrvold, Some(_)) if n != COLOURED_ORDER => Err(EncodeError::MyrvoldOrder(n)),
            (Mode::Single | Mode::Pair, Some(_)) => Err(EncodeError::ProfileWithoutMyrvold),
            _ => Ok(()),
        }
    }

    pub fn squares(&self) -> Vec<SquareId> {
        match self.mode {
            Mode::Single => vec![SquareId::P],
            Mode::Pair | Mode::Myrvold => SquareId::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Encoding {
    pub cnf: Cnf,
    pub map: VariableMap,
}

pub fn encode(cfg: &EncodeConfig) -> Result<Encoding, EncodeError> {
    cfg.validate()?;
    let map = VariableMap::new(cfg.order, &cfg.squares());
    let mut cnf = Cnf::new(map.aux_start() - 1);
    cnf.metadata.push(format!("order {} mode {} card {}", cfg.order, cfg.mode, cfg.cardinality));
    for id in map.declared() {
        let first = if id == SquareId::P { cfg.first_row.as_deref() } else { None };
        encode_latin_square(&mut cnf, &map, id, first, cfg.cardinality);
    }
    let mut enc = Encoding { cnf, map };
    if cfg.mode != Mode::Single {
        encode_orthogonality_channeling(&mut enc.cnf, &enc.map);
    }
    if cfg.mode == Mode::Myrvold {
        encode_myrvold(&mut enc, cfg.profile.as_ref().unwrap(), cfg.cardinality);
    }
    Ok(enc)
}

/// The single-square encoding of P.
pub fn encode_latin(cfg: &EncodeConfig) -> Result<Encoding, EncodeError> {
    encode(&EncodeConfig { mode: Mode::Single, profile: None, ..cfg.clone() })
}

pub fn encode_latin_square(cnf: &mut Cnf, map: &VariableMap, id: SquareId, first_row: Option<&[u8]>, card: Cardinality) {
    let n = map.order();
    let mut group = Vec::with_capacity(n);
    for a in 0..n {
        for b in 0..n {
            group.clear();
            group.extend((0..n).map(|k| map.lit(id, a, b, k)));
            encode_exactly_one(cnf, &group, card);
        }
    }
    for a in 0..n {
        for k in 0..n {
            group.clear();
            group.extend((0..n).map(|j| map.lit(id, a, j, k)));
            encode_exactly_one(cnf, &group, card);
        }
    }
    for b in 0..n {
        for k in 0..n {
            group.clear();
            group.extend((0..n).map(|i| map.lit(id, i, b, k)));
            encode_exactly_one(cnf, &group, card);
        }
    }
    if let Some(row) = first_row {
        for (j, &k) in row.iter().enumerate() {
            cnf.add_clause([map.lit(id, 0, j, k as usize)]);
        }
    }
}

/// `R[i][j] = k` and `P[i][j] = l` imply `Q[k][j] = l`.
pub fn encode_orthogonality_channeling(cnf: &mut Cnf, map: &VariableMap) {
    let n = map.order();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    cnf.add_clause([
                        !map.lit(SquareId::R, i, j, k),
                        !map.lit(SquareId::P, i, j, l),
                        map.lit(SquareId::Q, k, j, l),
                    ]);
                }
            }
        }
    }
}

/// Colouring indicators and type selectors for P and Q.
pub fn encode_myrvold(enc: &mut Encoding, profile: &PairProfile, card: Cardinality) {
    let Encoding { cnf, map } = enc;
    let n = map.order();
    let counts = |p: &MyrvoldProfile| p.type_counts().map(|c| c.to_string()).join(" ");
    cnf.metadata.push(format!("profile p {} q {}", counts(&profile.p), counts(&profile.q)));
    for id in [SquareId::P, SquareId::Q] {
        map.alloc_indicators(cnf, id);
    }
    for id in [SquareId::P, SquareId::Q] {
        for i in 0..n {
            for j in 0..n {
                let w = Lit::pos(map.white(id, i, j).unwrap());
                let whites: Vec<Lit> = (0..WHITE_SYMBOLS as usize).map(|k| map.lit(id, i, j, k)).collect();
                for &x in &whites {
                    cnf.add_clause([!x, w]);
                }
                cnf.add_clause(std::iter::once(!w).chain(whites));
            }
        }
        for j in 0..DARK_COLUMNS {
            let col: Vec<Lit> = (0..n).map(|i| Lit::pos(map.dark(id, i, j).unwrap())).collect();
            for (i, &d) in col.iter().enumerate() {
                cnf.add_clause([!d, !Lit::pos(map.white(id, i, j).unwrap())]);
            }
            encode_exactly_k(cnf, &col, DARK_PER_COLUMN, card);
        }
        // rows of Q represent transversals of P, and vice versa
        let prof = if id == SquareId::Q { &profile.p } else { &profile.q };
        encode_type_selectors(cnf, map, id, prof, card);
    }
}

fn encode_type_selectors(cnf: &mut Cnf, map: &VariableMap, id: SquareId, profile: &MyrvoldProfile, card: Cardinality) {
    let n = map.order();
    let types: Vec<TransversalType> = TransversalType::ALL.into_iter().filter(|&t| profile.count(t) > 0).collect();
    let sel: Vec<Vec<Lit>> = (0..n).map(|_| cnf.fresh_lits(types.len())).collect();
    for r in 0..n {
        encode_exactly_one(cnf, &sel[r], card);
        let row_whites: Vec<Lit> = TYPE_COLUMNS.map(|j| Lit::pos(map.white(id, r, j).unwrap())).collect();
        let tot = Totalizer::build(cnf, &row_whites, row_whites.len());
        for (t, ty) in types.iter().enumerate() {
            tot.implies_exactly(cnf, sel[r][t], ty.white_count());
        }
    }
    for (t, ty) in types.iter().enumerate() {
        let column: Vec<Lit> = sel.iter().map(|s| s[t]).collect();
        encode_exactly_k(cnf, &column, profile.count(*ty), card);
    }
}

/// Writes `p cnf V C` followed by one zero-terminated clause per line.
/// Metadata lines are emitted as leading `c` comments.
pub fn emit_dimacs<W: Write>(cnf: &Cnf, mut sink: W) -> io::Result<()> {
    for m in &cnf.metadata {
        writeln!(sink, "c {m}")?;
    }
    writeln!(sink, "p cnf {} {}", cnf.num_vars(), cnf.num_clauses())?;
    let mut line = String::new();
    for c in cnf.clauses() {
        line.clear();
        for l in c {
            line.push_str(&l.to_dimacs().to_string());
            line.push(' ');
        }
        line.push('0');
        writeln!(sink, "{line}")?;
    }
    Ok(())
}

pub fn to_dimacs_string(cnf: &Cnf) -> String {
    let mut buf = Vec::new();
    emit_dimacs(cnf, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("DIMACS output is ASCII")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("header declares {declared} clauses, body has {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error(transparent)]
    Cnf(#[from] CnfError),
}

/// Parses DIMACS CNF. Clauses may span lines; `c` lines are kept as metadata.
pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
    let mut cnf: Option<Cnf> = None;
    let mut declared = 0usize;
    let mut metadata = Vec::new();
    let mut pending: Vec<Lit> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let syntax = |msg: &str| DimacsError::Syntax { line: no + 1, msg: msg.to_string() };
        if line.is_empty() || line == "%" {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if rest.is_empty() || rest.starts_with(' ') {
                metadata.push(rest.trim_start().to_string());
                continue;
            }
        }
        if line.starts_with('p') {
            let f: Vec<&str> = line.split_whitespace().collect();
            if cnf.is_some() || f.len() != 4 || f[1] != "cnf" {
                return Err(syntax("bad header"));
            }
            let vars: u32 = f[2].parse().map_err(|_| syntax("bad variable count"))?;
            declared = f[3].parse().map_err(|_| syntax("bad clause count"))?;
            cnf = Some(Cnf::new(vars));
            continue;
        }
        let cnf = cnf.as_mut().ok_or(DimacsError::MissingHeader)?;
        for tok in line.split_whitespace() {
            let v: i32 = tok.parse().map_err(|_| syntax("bad literal"))?;
            match Lit::from_dimacs(v) {
                None if v == 0 => cnf.try_add_clause(pending.drain(..))?,
                None => return Err(syntax("bad literal")),
                Some(l) => pending.push(l),
            }
        }
    }
    let mut cnf = cnf.ok_or(DimacsError::MissingHeader)?;
    if !pending.is_empty() {
        cnf.try_add_clause(pending)?;
    }
    if cnf.num_clauses() != declared {
        return Err(DimacsError::ClauseCount { declared, found: cnf.num_clauses() });
    }
    cnf.metadata = metadata;
    Ok(cnf)
}

/// Unit clauses pinning square `id` to `square`.
pub fn square_units(map: &VariableMap, id: SquareId, square: &LatinSquare) -> Vec<Clause> {
    let n = square.order();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(vec![map.lit(id, i, j, square.get(i, j) as usize)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Projects the models of `cnf` onto variables `1..=k` by enumerating
    /// every assignment of all variables.
    fn projected_models(cnf: &Cnf, k: u32) -> Vec<u32> {
        let v = cnf.num_vars();
        assert!(v <= 22);
        let mut out: Vec<u32> = (0u64..1 << v)
            .filter(|&m| cnf.is_satisfied_by(|x| m >> (x - 1) & 1 == 1))
            .map(|m| (m & ((1 << k) - 1)) as u32)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn inputs(k: u32) -> (Cnf, Vec<Lit>) {
        (Cnf::new(k), (1..=k).map(Lit::pos).collect())
    }

    #[test]
    fn pairwise_clause_counts() {
        let (mut cnf, xs) = inputs(3);
        encode_exactly_one(&mut cnf, &xs, Cardinality::Pairwise);
        assert_eq!(to_dimacs_string(&cnf), "p cnf 3 4\n1 2 3 0\n-1 -2 0\n-1 -3 0\n-2 -3 0\n");
        let (mut cnf, xs) = inputs(10);
        encode_exactly_one(&mut cnf, &xs, Cardinality::Pairwise);
        assert_eq!(cnf.num_clauses(), 46);
    }

    #[test]
    fn exactly_one_encodings_agree() {
        for k in 1..=8u32 {
            let want: Vec<u32> = (0..k).map(|b| 1 << b).collect();
            for method in [Cardinality::Pairwise, Cardinality::Totalizer] {
                let (mut cnf, xs) = inputs(k);
                encode_exactly_one(&mut cnf, &xs, method);
                assert_eq!(projected_models(&cnf, k), want, "k={k} {method}");
            }
        }
    }

    #[test]
    fn exactly_k_matches_popcount() {
        for k in 1..=6u32 {
            for target in 0..=k + 1 {
                let (mut cnf, xs) = inputs(k);
                encode_exactly_k(&mut cnf, &xs, target as usize, Cardinality::Totalizer);
                let want: Vec<u32> = (0..1u32 << k).filter(|m| m.count_ones() == target).collect();
                assert_eq!(projected_models(&cnf, k), want, "k={k} target={target}");
            }
        }
    }

    #[test]
    fn guarded_counts() {
        // guard is variable 5, inputs 1..=4
        for target in 0..=4usize {
            let mut cnf = Cnf::new(5);
            let xs: Vec<Lit> = (1..=4).map(Lit::pos).collect();
            let tot = Totalizer::build(&mut cnf, &xs, 4);
            tot.implies_exactly(&mut cnf, Lit::pos(5), target);
            let models = projected_models(&cnf, 5);
            let want: Vec<u32> = (0..32u32)
                .filter(|m| m >> 4 & 1 == 0 || (m & 15).count_ones() as usize == target)
                .collect();
            assert_eq!(models, want);
        }
    }

    #[test]
    fn dimacs_format() {
        assert_eq!(to_dimacs_string(&Cnf::new(3)), "p cnf 3 0\n");
        let mut cnf = Cnf::new(2);
        cnf.add_clause([Lit::neg(2)]);
        assert_eq!(to_dimacs_string(&cnf), "p cnf 2 1\n-2 0\n");
        cnf.add_clause([Lit::pos(1), Lit::pos(1), Lit::neg(2)]);
        assert_eq!(cnf.clauses()[1], vec![Lit::pos(1), Lit::neg(2)]);
        assert_eq!(cnf.try_add_clause([]), Err(CnfError::EmptyClause));
        assert_eq!(cnf.try_add_clause([Lit::pos(3)]), Err(CnfError::LiteralOutOfRange { lit: 3, vars: 2 }));
    }

    #[test]
    fn dimacs_round_trip() {
        let enc = encode(&EncodeConfig::new(2, Mode::Single)).unwrap();
        let text = to_dimacs_string(&enc.cnf);
        let back = parse_dimacs(&text).unwrap();
        assert_eq!(back, enc.cnf);
        let split = parse_dimacs("c hi\np cnf 3 2\n1 -2\n 3 0 -1 0\n").unwrap();
        assert_eq!(split.clauses(), &[vec![Lit::pos(1), Lit::neg(2), Lit::pos(3)], vec![Lit::neg(1)]]);
        assert_eq!(parse_dimacs("1 0\n"), Err(DimacsError::MissingHeader));
        assert_eq!(parse_dimacs("p cnf 1 2\n1 0\n"), Err(DimacsError::ClauseCount { declared: 2, found: 1 }));
        assert!(matches!(parse_dimacs("p cnf 1 1\nx 0\n"), Err(DimacsError::Syntax { line: 2, .. })));
    }

    #[test]
    fn variable_layout() {
        let map = VariableMap::new(3, &SquareId::ALL);
        assert_eq!(map.var(SquareId::P, 0, 0, 0), 1);
        assert_eq!(map.var(SquareId::P, 1, 2, 0), 1 + 9 + 6);
        assert_eq!(map.var(SquareId::R, 0, 0, 0), 28);
        assert_eq!(map.var(SquareId::Q, 2, 2, 2), 81);
        assert_eq!(map.aux_start(), 82);
        for v in 1..82 {
            let (id, i, j, k) = map.decode_var(v).unwrap();
            assert_eq!(map.var(id, i, j, k), v);
        }
        assert_eq!(map.decode_var(82), None);
        let single = VariableMap::new(4, &[SquareId::P]);
        assert_eq!(single.declared(), vec![SquareId::P]);
        assert_eq!(single.aux_start(), 65);
    }

    #[test]
    fn sidecar_round_trip() {
        let enc = encode(&EncodeConfig::new(3, Mode::Pair)).unwrap();
        let text = enc.map.to_sidecar();
        assert!(text.lines().any(|l| l == "P 1 2 0 16"));
        assert_eq!(VariableMap::parse_sidecar(&text).unwrap(), enc.map);
        let cfg = EncodeConfig::new(10, Mode::Myrvold).with_profile(PairProfile::preset("XX").unwrap());
        let enc = encode(&cfg).unwrap();
        assert_eq!(VariableMap::parse_sidecar(&enc.map.to_sidecar()).unwrap(), enc.map);
        assert!(VariableMap::parse_sidecar("order 2\nP 0 0 0 5\n").is_err());
        assert!(VariableMap::parse_sidecar("P 0 0 0 1\n").is_err());
    }

    #[test]
    fn config_validation() {
        let ok = EncodeConfig::new(4, Mode::Pair).with_first_row(vec![1, 0, 3, 2]);
        assert!(ok.validate().is_ok());
        let bad = EncodeConfig::new(4, Mode::Pair).with_first_row(vec![1, 1, 3, 2]);
        assert_eq!(bad.validate(), Err(EncodeError::BadFirstRow(4)));
        let short = EncodeConfig::new(4, Mode::Pair).with_first_row(vec![0, 1]);
        assert_eq!(short.validate(), Err(EncodeError::BadFirstRow(4)));
        assert_eq!(EncodeConfig::new(0, Mode::Single).validate(), Err(EncodeError::BadOrder(0)));
        assert_eq!(EncodeConfig::new(10, Mode::Myrvold).validate(), Err(EncodeError::UnsupportedProfile));
        let xx = PairProfile::preset("XX").unwrap();
        assert_eq!(
            EncodeConfig::new(10, Mode::Pair).with_profile(xx.clone()).validate(),
            Err(EncodeError::ProfileWithoutMyrvold)
        );
        assert_eq!(EncodeConfig::new(9, Mode::Myrvold).with_profile(xx).validate(), Err(EncodeError::MyrvoldOrder(9)));
    }

    #[test]
    fn channeling_clause_count() {
        for n in 1..=5 {
            let map = VariableMap::new(n, &SquareId::ALL);
            let mut cnf = Cnf::new(map.aux_start() - 1);
            encode_orthogonality_channeling(&mut cnf, &map);
            assert_eq!(cnf.num_clauses(), n.pow(4));
        }
    }

    #[test]
    fn latin_structure() {
        for n in 1..=6 {
            let enc = encode(&EncodeConfig::new(n, Mode::Single)).unwrap();
            assert_eq!(enc.cnf.num_vars() as usize, n.pow(3));
            assert_eq!(enc.cnf.num_clauses(), 3 * n * n * (1 + n * (n - 1) / 2));
            let sq = LatinSquare::cyclic(n);
            let val = |v: u32| {
                let (_, i, j, k) = enc.map.decode_var(v).unwrap();
                sq.get(i, j) as usize == k
            };
            assert!(enc.cnf.is_satisfied_by(val));
            assert_eq!(decode_square(&enc.map, SquareId::P, val).unwrap(), sq);
        }
    }

    #[test]
    fn decode_reports_inconsistency() {
        let map = VariableMap::new(2, &[SquareId::P]);
        let err = decode_square(&map, SquareId::P, |_| false).unwrap_err();
        assert_eq!(err, DecodeError::DecodeInconsistency { square: SquareId::P, row: 0, col: 0, count: 0 });
        let err = decode_square(&map, SquareId::P, |v| v <= 2).unwrap_err();
        assert!(matches!(err, DecodeError::DecodeInconsistency { count: 2, .. }));
    }

    #[test]
    fn myrvold_layer_shape() {
        let cfg = EncodeConfig::new(10, Mode::Myrvold).with_profile(PairProfile::preset("XX").unwrap());
        let enc = encode(&cfg).unwrap();
        assert!(enc.map.has_colouring(SquareId::P) && enc.map.has_colouring(SquareId::Q));
        assert!(!enc.map.has_colouring(SquareId::R));
        assert_eq!(enc.map.dark_vars(SquareId::P).len(), 60);
        assert!(enc.map.white(SquareId::P, 0, 0).unwrap() >= enc.map.aux_start());
        let totalizer = encode(&cfg.clone().with_cardinality(Cardinality::Totalizer)).unwrap();
        assert!(totalizer.cnf.num_vars() > enc.cnf.num_vars());
    }
}
