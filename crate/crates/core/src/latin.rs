//! Latin squares, transversals, orthogonality and transversal representation
//! pairs, plus the white/light/dark colouring used to type transversals of
//! order-10 squares.
//!
//! Everything here is immutable after construction and is used throughout the
//! crate (and its tests) as the ground truth for verifying search results.

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

/// Largest supported order.
pub const MAX_ORDER: usize = 32;

/// Order of the squares that carry a white/light/dark colouring.
pub const COLOURED_ORDER: usize = 10;
/// Symbols `0..WHITE_SYMBOLS` are white.
pub const WHITE_SYMBOLS: u8 = 4;
/// Dark cells live in columns `0..DARK_COLUMNS`.
pub const DARK_COLUMNS: usize = 6;
/// Dark cells required per column among the first [`DARK_COLUMNS`] columns.
pub const DARK_PER_COLUMN: usize = 2;
/// Transversal types are decided by the white cells in these columns.
pub const TYPE_COLUMNS: std::ops::Range<usize> = 6..10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatinError {
    #[error("grid must be non-empty and square with order at most {MAX_ORDER}")]
    BadShape,
    #[error("symbol {symbol} at ({row},{col}) is out of range")]
    BadSymbol { row: usize, col: usize, symbol: usize },
    #[error("symbol {symbol} repeats in row {row}")]
    DuplicateInRow { row: usize, symbol: u8 },
    #[error("symbol {symbol} repeats in column {col}")]
    DuplicateInCol { col: usize, symbol: u8 },
    #[error("orders differ: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("cell set is not a transversal")]
    NotTransversal,
    #[error("transversals overlap at ({row},{col})")]
    NotDisjoint { row: usize, col: usize },
    #[error("transversals do not cover every cell")]
    NotCovering,
    #[error("colouring requires order {COLOURED_ORDER}, got {0}")]
    WrongOrder(usize),
    #[error("dark cell ({row},{col}) holds a white symbol")]
    DarkOnWhiteCell { row: usize, col: usize },
    #[error("column {col} has {count} dark cells")]
    WrongDarkQuota { col: usize, count: usize },
    #[error("dark cell ({row},{col}) listed twice")]
    DuplicateDarkCell { row: usize, col: usize },
    #[error("transversal has {white} white cells in its last four columns but {dark} dark cells")]
    InconsistentType { white: usize, dark: usize },
    #[error("profile counts sum to {0}, expected {COLOURED_ORDER}")]
    BadProfile(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A cell position `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A Latin square of order `n` with symbols `0..n`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatinSquare {
    n: usize,
    cells: Vec<u8>,
}

impl LatinSquare {
    /// Validates a grid given as rows.
    ///
    /// Rows are checked before columns, so the error names the first violated
    /// row if any row is bad.
    pub fn new<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, LatinError> {
        let n = rows.len();
        if n == 0 || n > MAX_ORDER || rows.iter().any(|r| r.as_ref().len() != n) {
            return Err(LatinError::BadShape);
        }
        let cells: Vec<u8> = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_flat(n, cells)
    }

    /// Validates a row-major grid.
    pub fn from_flat(n: usize, cells: Vec<u8>) -> Result<Self, LatinError> {
        if n == 0 || n > MAX_ORDER || cells.len() != n * n {
            return Err(LatinError::BadShape);
        }
        for (idx, &s) in cells.iter().enumerate() {
            if s as usize >= n {
                return Err(LatinError::BadSymbol { row: idx / n, col: idx % n, symbol: s as usize });
            }
        }
        for row in 0..n {
            let mut seen = 0u64;
            for col in 0..n {
                let s = cells[row * n + col];
                if seen & (1 << s) != 0 {
                    return Err(LatinError::DuplicateInRow { row, symbol: s });
                }
                seen |= 1 << s;
            }
        }
        for col in 0..n {
            let mut seen = 0u64;
            for row in 0..n {
                let s = cells[row * n + col];
                if seen & (1 << s) != 0 {
                    return Err(LatinError::DuplicateInCol { col, symbol: s });
                }
                seen |= 1 << s;
            }
        }
        Ok(Self { n, cells })
    }

    /// Builds a square without checking the Latin property. Intended for tests
    /// that need malformed inputs.
    pub fn from_flat_unchecked(n: usize, cells: Vec<u8>) -> Self {
        assert_eq!(cells.len(), n * n);
        Self { n, cells }
    }

    /// `L[i][j] = (i + j) mod n`.
    pub fn cyclic(n: usize) -> Self {
        assert!((1..=MAX_ORDER).contains(&n));
        let cells = (0..n).flat_map(|i| (0..n).map(move |j| ((i + j) % n) as u8)).collect();
        Self { n, cells }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.n + col]
    }

    #[inline]
    pub fn at(&self, cell: Cell) -> u8 {
        self.get(cell.row, cell.col)
    }

    /// Row-major cell symbols.
    pub fn as_flat(&self) -> &[u8] {
        &self.cells
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.cells[row * self.n..(row + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.cells.chunks(self.n)
    }

    /// `pos[col][symbol]` is the row holding `symbol` in `col`.
    pub fn column_positions(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        let mut pos = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                pos[j][self.get(i, j) as usize] = i;
            }
        }
        pos
    }

    /// Writes the square text format: `order n` followed by one line per row.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "order {}", self.n)?;
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|s| s.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }

    /// Parses the square text format. Blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, LatinError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(LatinError::Parse { line: 1, msg: "empty input".into() })?;
        let n = parse_order_header(header).ok_or_else(|| LatinError::Parse {
            line: hline + 1,
            msg: format!("expected `order n`, found `{}`", header.trim()),
        })?;
        let mut rows = Vec::with_capacity(n);
        for (idx, line) in lines.by_ref().take(n) {
            let row: Result<Vec<u8>, _> = line.split_whitespace().map(str::parse::<u8>).collect();
            let row = row.map_err(|e| LatinError::Parse { line: idx + 1, msg: e.to_string() })?;
            if row.len() != n {
                return Err(LatinError::Parse { line: idx + 1, msg: format!("expected {n} symbols") });
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(LatinError::Parse { line: hline + 1, msg: format!("expected {n} rows, found {}", rows.len()) });
        }
        if let Some((idx, _)) = lines.next() {
            return Err(LatinError::Parse { line: idx + 1, msg: "trailing content".into() });
        }
        Self::new(&rows)
    }

    pub fn read_from<R: BufRead>(mut r: R) -> io::Result<Result<Self, LatinError>> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        Ok(Self::parse(&text))
    }
}

fn parse_order_header(line: &str) -> Option<usize> {
    let mut it = line.split_whitespace();
    if it.next()? != "order" {
        return None;
    }
    let n = it.next()?.parse().ok()?;
    it.next().is_none().then_some(n)
}

impl fmt::Display for LatinSquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|s| s.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// A transversal stored canonically by row: `cols[i]` is the column of the
/// cell in row `i`. Two transversals are equal iff their cell sets are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transversal {
    cols: Vec<u8>,
}

impl Transversal {
    /// Builds a transversal from a column-per-row vector, which must be a
    /// permutation of `0..n`.
    pub fn from_cols(cols: Vec<u8>) -> Result<Self, LatinError> {
        let n = cols.len();
        if n == 0 || n > MAX_ORDER {
            return Err(LatinError::NotTransversal);
        }
        let mut seen = 0u64;
        for &c in &cols {
            if c as usize >= n || seen & (1 << c) != 0 {
                return Err(LatinError::NotTransversal);
            }
            seen |= 1 << c;
        }
        Ok(Self { cols })
    }

    /// Builds a transversal from `n` cells with distinct rows and columns.
    pub fn from_cells(n: usize, cells: &[Cell]) -> Result<Self, LatinError> {
        if cells.len() != n {
            return Err(LatinError::NotTransversal);
        }
        let mut cols = vec![u8::MAX; n];
        for c in cells {
            if c.row >= n || c.col >= n || cols[c.row] != u8::MAX {
                return Err(LatinError::NotTransversal);
            }
            cols[c.row] = c.col as u8;
        }
        Self::from_cols(cols)
    }

    pub fn order(&self) -> usize {
        self.cols.len()
    }

    pub fn cols(&self) -> &[u8] {
        &self.cols
    }

    pub fn col_of_row(&self, row: usize) -> usize {
        self.cols[row] as usize
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cols.iter().enumerate().map(|(r, &c)| Cell::new(r, c as usize))
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cols.get(cell.row).is_some_and(|&c| c as usize == cell.col)
    }

    /// Whether the symbols of `square` on this transversal are all distinct.
    pub fn is_transversal_of(&self, square: &LatinSquare) -> bool {
        if square.order() != self.order() {
            return false;
        }
        let mut seen = 0u64;
        for cell in self.cells() {
            let s = square.at(cell);
            if seen & (1 << s) != 0 {
                return false;
            }
            seen |= 1 << s;
        }
        true
    }
}

/// True iff `cells` hits every row, column and symbol of `square` exactly once.
pub fn is_transversal(square: &LatinSquare, cells: &[Cell]) -> bool {
    let n = square.order();
    if cells.len() != n {
        return false;
    }
    let (mut rows, mut cols, mut syms) = (0u64, 0u64, 0u64);
    for c in cells {
        if c.row >= n || c.col >= n {
            return false;
        }
        let s = square.at(*c);
        if rows & (1 << c.row) != 0 || cols & (1 << c.col) != 0 || syms & (1 << s) != 0 {
            return false;
        }
        rows |= 1 << c.row;
        cols |= 1 << c.col;
        syms |= 1 << s;
    }
    true
}

fn check_orders(a: &LatinSquare, b: &LatinSquare) -> Result<(), LatinError> {
    if a.order() != b.order() {
        return Err(LatinError::OrderMismatch { left: a.order(), right: b.order() });
    }
    Ok(())
}

/// True iff the overlay pairs `(a[i][j], b[i][j])` are pairwise distinct.
pub fn are_orthogonal(a: &LatinSquare, b: &LatinSquare) -> Result<bool, LatinError> {
    check_orders(a, b)?;
    let n = a.order();
    let mut seen = vec![false; n * n];
    for (&x, &y) in a.as_flat().iter().zip(b.as_flat()) {
        let idx = x as usize * n + y as usize;
        if seen[idx] {
            return Ok(false);
        }
        seen[idx] = true;
    }
    Ok(true)
}

/// Labels the cells of transversal `k` with symbol `k`, producing an orthogonal
/// mate of `square`.
pub fn mate_from_transversals(square: &LatinSquare, ts: &[Transversal]) -> Result<LatinSquare, LatinError> {
    let n = square.order();
    if ts.len() != n {
        return Err(LatinError::NotCovering);
    }
    let mut cells = vec![u8::MAX; n * n];
    for (k, t) in ts.iter().enumerate() {
        if !t.is_transversal_of(square) {
            return Err(LatinError::NotTransversal);
        }
        for cell in t.cells() {
            let slot = &mut cells[cell.row * n + cell.col];
            if *slot != u8::MAX {
                return Err(LatinError::NotDisjoint { row: cell.row, col: cell.col });
            }
            *slot = k as u8;
        }
    }
    // n disjoint sets of n cells always cover n^2 cells.
    debug_assert!(cells.iter().all(|&s| s != u8::MAX));
    LatinSquare::from_flat(n, cells)
}

/// Splits a square into the transversals of `partner` given by its symbol
/// classes: transversal `k` is the set of cells where `labels` holds `k`.
pub fn symbol_classes(labels: &LatinSquare) -> Vec<Transversal> {
    let n = labels.order();
    let mut cols = vec![vec![0u8; n]; n];
    for i in 0..n {
        for j in 0..n {
            cols[labels.get(i, j) as usize][i] = j as u8;
        }
    }
    cols.into_iter().map(|c| Transversal { cols: c }).collect()
}

/// For each column `j`, the cell `(i, j)` of `p` holding the symbol `q[r][j]`.
pub fn trp_row_cells(p: &LatinSquare, q: &LatinSquare, r: usize) -> Result<Vec<Cell>, LatinError> {
    check_orders(p, q)?;
    let pos = p.column_positions();
    Ok(row_cells_with(&pos, q, r))
}

fn row_cells_with(pos: &[Vec<usize>], q: &LatinSquare, r: usize) -> Vec<Cell> {
    (0..q.order()).map(|j| Cell::new(pos[j][q.get(r, j) as usize], j)).collect()
}

/// True iff every row of `q` represents a transversal of `p` and together the
/// rows partition the cells of `p`.
pub fn verify_trp(p: &LatinSquare, q: &LatinSquare) -> Result<bool, LatinError> {
    check_orders(p, q)?;
    let n = p.order();
    let pos = p.column_positions();
    let mut covered = vec![false; n * n];
    for r in 0..n {
        let cells = row_cells_with(&pos, q, r);
        if !is_transversal(p, &cells) {
            return Ok(false);
        }
        for c in cells {
            let slot = &mut covered[c.row * n + c.col];
            assert!(!*slot, "rows of a Latin square cannot select the same cell twice");
            *slot = true;
        }
    }
    assert!(covered.iter().all(|&c| c));
    Ok(true)
}

/// Builds the square `q` whose row `k` lists, column by column, the symbols of
/// `p` on transversal `k`. `(p, q)` is then a transversal representation pair.
pub fn trp_from_decomposition(p: &LatinSquare, ts: &[Transversal]) -> Result<LatinSquare, LatinError> {
    let n = p.order();
    mate_from_transversals(p, ts)?;
    let mut cells = vec![0u8; n * n];
    for (k, t) in ts.iter().enumerate() {
        for cell in t.cells() {
            cells[k * n + cell.col] = p.at(cell);
        }
    }
    LatinSquare::from_flat(n, cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Colour {
    White,
    Light,
    Dark,
}

/// White/light/dark colouring of an order-10 square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MyrvoldColouring {
    colours: Vec<Colour>,
}

impl MyrvoldColouring {
    #[inline]
    pub fn get(&self, cell: Cell) -> Colour {
        self.colours[cell.row * COLOURED_ORDER + cell.col]
    }

    pub fn dark_cells(&self) -> Vec<Cell> {
        (0..COLOURED_ORDER * COLOURED_ORDER)
            .filter(|&i| self.colours[i] == Colour::Dark)
            .map(|i| Cell::new(i / COLOURED_ORDER, i % COLOURED_ORDER))
            .collect()
    }
}

/// Colours `square`: symbols below [`WHITE_SYMBOLS`] are white, the listed
/// cells are dark and every other cell is light.
pub fn colour(square: &LatinSquare, dark: &[Cell]) -> Result<MyrvoldColouring, LatinError> {
    let n = square.order();
    if n != COLOURED_ORDER {
        return Err(LatinError::WrongOrder(n));
    }
    let mut colours: Vec<Colour> = square
        .as_flat()
        .iter()
        .map(|&s| if s < WHITE_SYMBOLS { Colour::White } else { Colour::Light })
        .collect();
    let mut per_col = [0usize; COLOURED_ORDER];
    for &c in dark {
        if c.row >= n || c.col >= n {
            return Err(LatinError::WrongDarkQuota { col: c.col, count: 1 });
        }
        let slot = &mut colours[c.row * n + c.col];
        match *slot {
            Colour::White => return Err(LatinError::DarkOnWhiteCell { row: c.row, col: c.col }),
            Colour::Dark => return Err(LatinError::DuplicateDarkCell { row: c.row, col: c.col }),
            Colour::Light => *slot = Colour::Dark,
        }
        per_col[c.col] += 1;
    }
    for (col, &count) in per_col.iter().enumerate() {
        let want = if col < DARK_COLUMNS { DARK_PER_COLUMN } else { 0 };
        if count != want {
            return Err(LatinError::WrongDarkQuota { col, count });
        }
    }
    Ok(MyrvoldColouring { colours })
}

/// Parses the colouring sidecar: one `row col` pair per dark cell.
pub fn parse_dark_cells(text: &str) -> Result<Vec<Cell>, LatinError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let nums: Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
        match nums {
            Ok(v) if v.len() == 2 => out.push(Cell::new(v[0], v[1])),
            _ => return Err(LatinError::Parse { line: idx + 1, msg: "expected `row col`".into() }),
        }
    }
    Ok(out)
}

pub fn write_dark_cells(cells: &[Cell]) -> String {
    cells.iter().map(|c| format!("{} {}\n", c.row, c.col)).collect()
}

/// Transversal type `p_i`: `i` white cells in the last four columns and
/// `2i - 2` dark cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransversalType {
    P1,
    P2,
    P3,
    P4,
}

impl TransversalType {
    pub const ALL: [TransversalType; 4] = [Self::P1, Self::P2, Self::P3, Self::P4];

    /// The `i` of `p_i`.
    pub fn white_count(self) -> usize {
        self as usize + 1
    }

    pub fn dark_count(self) -> usize {
        2 * self.white_count() - 2
    }

    pub fn from_white_count(white: usize) -> Option<Self> {
        Self::ALL.get(white.checked_sub(1)?).copied()
    }
}

impl fmt::Display for TransversalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.white_count())
    }
}

/// White cells among the type columns and dark cells overall.
pub fn colour_counts(t: &Transversal, colouring: &MyrvoldColouring) -> (usize, usize) {
    let mut white = 0;
    let mut dark = 0;
    for cell in t.cells() {
        match colouring.get(cell) {
            Colour::White if TYPE_COLUMNS.contains(&cell.col) => white += 1,
            Colour::Dark => dark += 1,
            _ => {}
        }
    }
    (white, dark)
}

pub fn classify_transversal(t: &Transversal, colouring: &MyrvoldColouring) -> Result<TransversalType, LatinError> {
    if t.order() != COLOURED_ORDER {
        return Err(LatinError::WrongOrder(t.order()));
    }
    let (white, dark) = colour_counts(t, colouring);
    match TransversalType::from_white_count(white) {
        Some(ty) if ty.dark_count() == dark => Ok(ty),
        _ => Err(LatinError::InconsistentType { white, dark }),
    }
}

/// Required number of transversals of each type in a decomposition, plus the
/// per-column dark quota.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MyrvoldProfile {
    type_counts: [usize; 4],
    dark_quota: [usize; DARK_COLUMNS],
}

impl MyrvoldProfile {
    pub fn new(type_counts: [usize; 4]) -> Result<Self, LatinError> {
        let sum: usize = type_counts.iter().sum();
        if sum != COLOURED_ORDER {
            return Err(LatinError::BadProfile(sum));
        }
        Ok(Self { type_counts, dark_quota: [DARK_PER_COLUMN; DARK_COLUMNS] })
    }

    /// Eight `p1` and two `p4` transversals.
    pub fn type_r() -> Self {
        Self::new([8, 0, 0, 2]).unwrap()
    }

    /// Four `p1` and six `p2` transversals.
    pub fn type_xx() -> Self {
        Self::new([4, 6, 0, 0]).unwrap()
    }

    /// Looks up a shipped preset by name (`R` or `XX`).
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "R" => Some(Self::type_r()),
            "XX" => Some(Self::type_xx()),
            _ => None,
        }
    }

    pub fn count(&self, ty: TransversalType) -> usize {
        self.type_counts[ty as usize]
    }

    pub fn type_counts(&self) -> [usize; 4] {
        self.type_counts
    }

    pub fn dark_quota(&self) -> &[usize; DARK_COLUMNS] {
        &self.dark_quota
    }

    /// Parses `p1 p2 p3 p4` counts from the first non-comment line.
    pub fn parse(text: &str) -> Result<Self, LatinError> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
            return match nums {
                Ok(v) if v.len() == 4 => Self::new([v[0], v[1], v[2], v[3]]),
                _ => Err(LatinError::Parse { line: idx + 1, msg: "expected four counts `p1 p2 p3 p4`".into() }),
            };
        }
        Err(LatinError::Parse { line: 1, msg: "empty profile".into() })
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn five_square() -> LatinSquare {
        LatinSquare::cyclic(5)
    }

    pub fn five_mate() -> LatinSquare {
        LatinSquare::new(&[
            [0, 1, 4, 2, 3],
            [2, 3, 0, 1, 4],
            [1, 4, 2, 3, 0],
            [3, 0, 1, 4, 2],
            [4, 2, 3, 0, 1],
        ])
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn validate_examples() {
        assert!(LatinSquare::new(&[[0u8]]).is_ok());
        assert_eq!(
            LatinSquare::new(&[[0u8, 0], [1, 1]]),
            Err(LatinError::DuplicateInRow { row: 0, symbol: 0 })
        );
        assert_eq!(
            LatinSquare::new(&[[0u8, 1], [0, 1]]),
            Err(LatinError::DuplicateInCol { col: 0, symbol: 0 })
        );
        assert!(matches!(LatinSquare::new(&[[0u8, 2], [1, 0]]), Err(LatinError::BadSymbol { .. })));
        assert_eq!(LatinSquare::new(&[vec![0u8, 1], vec![1]]), Err(LatinError::BadShape));
        assert!(LatinSquare::new(&five_square().rows().collect::<Vec<_>>()).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let sq = five_mate();
        let text = sq.to_text();
        assert_eq!(text, "order 5\n0 1 4 2 3\n2 3 0 1 4\n1 4 2 3 0\n3 0 1 4 2\n4 2 3 0 1\n");
        let back = LatinSquare::parse(&text).unwrap();
        assert_eq!(back, sq);
        assert_eq!(back.to_text(), text);
        assert!(LatinSquare::parse("order 2\n0 1\n").is_err());
        assert!(LatinSquare::parse("ord 1\n0\n").is_err());
    }

    #[test]
    fn transversal_examples() {
        let red = [Cell::new(0, 0), Cell::new(1, 2), Cell::new(2, 4), Cell::new(3, 1), Cell::new(4, 3)];
        assert!(is_transversal(&five_square(), &red));
        let c2 = LatinSquare::cyclic(2);
        assert!(!is_transversal(&c2, &[Cell::new(0, 0), Cell::new(1, 1)]));
        let c3 = LatinSquare::cyclic(3);
        assert!(is_transversal(&c3, &[Cell::new(0, 0), Cell::new(1, 1), Cell::new(2, 2)]));
        assert!(!is_transversal(&c3, &[Cell::new(0, 0), Cell::new(1, 2), Cell::new(2, 1)]));
        assert!(!is_transversal(&c3, &[Cell::new(0, 0), Cell::new(0, 1), Cell::new(2, 2)]));
        assert!(!is_transversal(&c3, &[Cell::new(0, 0), Cell::new(1, 2)]));
    }

    #[test]
    fn orthogonality_examples() {
        assert!(are_orthogonal(&five_square(), &five_mate()).unwrap());
        for n in 2..6 {
            let c = LatinSquare::cyclic(n);
            assert!(!are_orthogonal(&c, &c).unwrap());
        }
        let l = LatinSquare::cyclic(3);
        let m = LatinSquare::new(&[[0u8, 2, 1], [1, 0, 2], [2, 1, 0]]).unwrap();
        assert!(are_orthogonal(&l, &m).unwrap());
        assert_eq!(
            are_orthogonal(&l, &LatinSquare::cyclic(4)),
            Err(LatinError::OrderMismatch { left: 3, right: 4 })
        );
    }

    #[test]
    fn mate_from_five_colour_classes() {
        let ts = symbol_classes(&five_mate());
        let mate = mate_from_transversals(&five_square(), &ts).unwrap();
        assert_eq!(mate, five_mate());
        let one = LatinSquare::cyclic(1);
        let t = Transversal::from_cols(vec![0]).unwrap();
        assert_eq!(mate_from_transversals(&one, &[t]).unwrap(), one);
    }

    #[test]
    fn mate_errors() {
        let sq = five_square();
        let mut ts = symbol_classes(&five_mate());
        ts.pop();
        assert_eq!(mate_from_transversals(&sq, &ts), Err(LatinError::NotCovering));
        let dup = ts[0].clone();
        ts.push(dup);
        assert!(matches!(mate_from_transversals(&sq, &ts), Err(LatinError::NotDisjoint { .. })));
        let mut ts = symbol_classes(&five_mate());
        ts[0] = Transversal::from_cols(vec![1, 0, 2, 3, 4]).unwrap();
        assert_eq!(mate_from_transversals(&sq, &ts), Err(LatinError::NotTransversal));
    }

    #[test]
    fn trp_row_cells_examples() {
        let p = LatinSquare::cyclic(4);
        for r in 0..4 {
            let cells = trp_row_cells(&p, &p, r).unwrap();
            assert!(cells.iter().all(|c| c.row == r));
        }
        let p3 = LatinSquare::cyclic(3);
        let q3 = LatinSquare::new(&[[0u8, 1, 2], [2, 0, 1], [1, 2, 0]]).unwrap();
        let cells = trp_row_cells(&p3, &q3, 0).unwrap();
        assert_eq!(cells, vec![Cell::new(0, 0), Cell::new(0, 1), Cell::new(0, 2)]);
        assert!(!verify_trp(&p3, &p3).unwrap());
    }

    #[test]
    fn trp_from_known_decomposition() {
        let p = LatinSquare::cyclic(3);
        let ts = vec![
            Transversal::from_cols(vec![0, 1, 2]).unwrap(),
            Transversal::from_cols(vec![1, 2, 0]).unwrap(),
            Transversal::from_cols(vec![2, 0, 1]).unwrap(),
        ];
        let q = trp_from_decomposition(&p, &ts).unwrap();
        assert!(verify_trp(&p, &q).unwrap());
        for (r, t) in ts.iter().enumerate() {
            let mut cells = trp_row_cells(&p, &q, r).unwrap();
            cells.sort();
            assert_eq!(cells, t.cells().collect::<Vec<_>>());
        }
    }

    #[test]
    fn colour_errors() {
        let sq = LatinSquare::cyclic(10);
        // symbol (i + j) mod 10 >= 4 is nonwhite
        let mut dark = Vec::new();
        for col in 0..6 {
            dark.push(Cell::new((14 - col) % 10, col));
            dark.push(Cell::new((15 - col) % 10, col));
        }
        let col = colour(&sq, &dark).unwrap();
        assert_eq!(col.dark_cells().len(), 12);
        let mut bad = dark.clone();
        bad[0] = Cell::new(2, 0);
        assert_eq!(colour(&sq, &bad), Err(LatinError::DarkOnWhiteCell { row: 2, col: 0 }));
        let mut three = dark.clone();
        three.push(Cell::new(9, 0));
        assert_eq!(colour(&sq, &three), Err(LatinError::WrongDarkQuota { col: 0, count: 3 }));
        assert_eq!(colour(&LatinSquare::cyclic(5), &[]), Err(LatinError::WrongOrder(5)));
    }

    #[test]
    fn classify_examples() {
        // A synthetic colouring where the counts can be placed freely.
        let mut colours = vec![Colour::Light; 100];
        let t = Transversal::from_cols((0..10).collect()).unwrap();
        for i in 6..10 {
            colours[i * 10 + i] = Colour::White;
        }
        for i in 0..6 {
            colours[i * 10 + i] = Colour::Dark;
        }
        let c = MyrvoldColouring { colours: colours.clone() };
        assert_eq!(classify_transversal(&t, &c), Ok(TransversalType::P4));

        let mut c1 = colours.clone();
        for i in 0..6 {
            c1[i * 10 + i] = Colour::Light;
        }
        for i in 7..10 {
            c1[i * 10 + i] = Colour::Light;
        }
        let c1 = MyrvoldColouring { colours: c1 };
        assert_eq!(classify_transversal(&t, &c1), Ok(TransversalType::P1));

        let mut c2 = colours;
        c2[9 * 10 + 9] = Colour::Light;
        c2[8 * 10 + 8] = Colour::Light;
        c2[0] = Colour::Light;
        let c2 = MyrvoldColouring { colours: c2 };
        assert_eq!(classify_transversal(&t, &c2), Err(LatinError::InconsistentType { white: 2, dark: 5 }));
    }

    #[test]
    fn profiles() {
        assert_eq!(MyrvoldProfile::type_xx().type_counts(), [4, 6, 0, 0]);
        assert_eq!(MyrvoldProfile::preset("r").unwrap().count(TransversalType::P4), 2);
        assert!(MyrvoldProfile::preset("UW").is_none());
        assert_eq!(MyrvoldProfile::new([1, 1, 1, 1]), Err(LatinError::BadProfile(4)));
        assert_eq!(MyrvoldProfile::parse("# UU guess\n3 5 2 0\n").unwrap().type_counts(), [3, 5, 2, 0]);
    }
}
