//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the exact-cover solver or the CDCL engine.
#![allow(dead_code)]

use std::path::PathBuf;

use olsat::encoder::Lit;
use olsat::exactcover::{DiophantineSystem, SystemBuilder};
use olsat::latin::{Cell, LatinSquare};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn load_square(name: &str) -> LatinSquare {
    let text = std::fs::read_to_string(data_path(name)).unwrap();
    LatinSquare::parse(&text).unwrap()
}

pub fn load_dark(name: &str) -> Vec<Cell> {
    let text = std::fs::read_to_string(data_path(name)).unwrap();
    olsat::latin::parse_dark_cells(&text).unwrap()
}

/// Every Latin square of order `n`, filled row by row.
pub fn all_latin_squares(n: usize) -> Vec<LatinSquare> {
    fn fill(n: usize, pos: usize, grid: &mut Vec<u8>, out: &mut Vec<LatinSquare>) {
        if pos == n * n {
            out.push(LatinSquare::from_flat(n, grid.clone()).unwrap());
            return;
        }
        let (i, j) = (pos / n, pos % n);
        for s in 0..n as u8 {
            let row_ok = (0..j).all(|c| grid[i * n + c] != s);
            let col_ok = (0..i).all(|r| grid[r * n + j] != s);
            if row_ok && col_ok {
                grid[pos] = s;
                fill(n, pos + 1, grid, out);
            }
        }
    }
    let mut out = Vec::new();
    fill(n, 0, &mut vec![0; n * n], &mut out);
    out
}

/// Column permutations that select a transversal, found by walking the
/// permutation tree row by row.
pub fn brute_transversals(sq: &LatinSquare) -> Vec<Vec<u8>> {
    fn rec(sq: &LatinSquare, row: usize, cols: &mut Vec<u8>, used: u64, syms: u64, out: &mut Vec<Vec<u8>>) {
        let n = sq.order();
        if row == n {
            out.push(cols.clone());
            return;
        }
        for c in 0..n {
            if used >> c & 1 == 1 {
                continue;
            }
            let s = sq.get(row, c);
            if syms >> s & 1 == 1 {
                continue;
            }
            cols.push(c as u8);
            rec(sq, row + 1, cols, used | 1 << c, syms | 1 << s, out);
            cols.pop();
        }
    }
    let mut out = Vec::new();
    rec(sq, 0, &mut Vec::new(), 0, 0, &mut out);
    out
}

/// Looks for an orthogonal mate by filling its cells one at a time.
pub fn brute_mate(sq: &LatinSquare) -> Option<LatinSquare> {
    let n = sq.order();
    let mut grid = vec![0u8; n * n];
    let mut row_used = vec![0u64; n];
    let mut col_used = vec![0u64; n];
    let mut pair_used = vec![0u64; n];
    fn rec(
        sq: &LatinSquare,
        pos: usize,
        grid: &mut [u8],
        row_used: &mut [u64],
        col_used: &mut [u64],
        pair_used: &mut [u64],
    ) -> bool {
        let n = sq.order();
        if pos == n * n {
            return true;
        }
        let (i, j) = (pos / n, pos % n);
        let a = sq.get(i, j) as usize;
        for s in 0..n {
            let bit = 1u64 << s;
            if row_used[i] & bit != 0 || col_used[j] & bit != 0 || pair_used[a] & bit != 0 {
                continue;
            }
            row_used[i] |= bit;
            col_used[j] |= bit;
            pair_used[a] |= bit;
            grid[pos] = s as u8;
            if rec(sq, pos + 1, grid, row_used, col_used, pair_used) {
                return true;
            }
            row_used[i] &= !bit;
            col_used[j] &= !bit;
            pair_used[a] &= !bit;
        }
        false
    }
    rec(sq, 0, &mut grid, &mut row_used, &mut col_used, &mut pair_used)
        .then(|| LatinSquare::from_flat(n, grid).unwrap())
}

/// A Latin square built from a cyclic one by shuffling rows, columns and
/// symbols, then applying random intercalate swaps.
pub fn random_square<R: Rng>(n: usize, rng: &mut R) -> LatinSquare {
    let base = LatinSquare::cyclic(n);
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut syms: Vec<u8> = (0..n as u8).collect();
    rows.shuffle(rng);
    cols.shuffle(rng);
    syms.shuffle(rng);
    let mut grid: Vec<u8> = (0..n * n).map(|p| syms[base.get(rows[p / n], cols[p % n]) as usize]).collect();
    for _ in 0..4 * n {
        let (i1, i2, j1, j2) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        if i1 == i2 || j1 == j2 {
            continue;
        }
        let (a, b) = (grid[i1 * n + j1], grid[i1 * n + j2]);
        if grid[i2 * n + j1] == b && grid[i2 * n + j2] == a {
            grid[i1 * n + j1] = b;
            grid[i1 * n + j2] = a;
            grid[i2 * n + j1] = a;
            grid[i2 * n + j2] = b;
        }
    }
    LatinSquare::from_flat(n, grid).unwrap()
}

/// Plain DPLL with unit propagation. Returns a model when satisfiable.
pub fn dpll(num_vars: u32, clauses: &[Vec<Lit>]) -> Option<Vec<bool>> {
    fn rec(clauses: &[Vec<Lit>], assign: &mut Vec<Option<bool>>) -> bool {
        let mut trail = Vec::new();
        loop {
            let mut unit = None;
            for c in clauses {
                let mut open = None;
                let mut open_count = 0;
                let mut sat = false;
                for &l in c {
                    match assign[l.var() as usize] {
                        Some(v) if v == l.is_pos() => {
                            sat = true;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            open_count += 1;
                            open = Some(l);
                        }
                    }
                }
                if sat {
                    continue;
                }
                if open_count == 0 {
                    for v in trail {
                        assign[v] = None;
                    }
                    return false;
                }
                if open_count == 1 {
                    unit = open;
                    break;
                }
            }
            match unit {
                Some(l) => {
                    assign[l.var() as usize] = Some(l.is_pos());
                    trail.push(l.var() as usize);
                }
                None => break,
            }
        }
        let Some(v) = (1..assign.len()).find(|&v| assign[v].is_none()) else {
            return true;
        };
        for val in [false, true] {
            assign[v] = Some(val);
            if rec(clauses, assign) {
                return true;
            }
        }
        assign[v] = None;
        for v in trail {
            assign[v] = None;
        }
        false
    }
    let mut assign = vec![None; num_vars as usize + 1];
    rec(clauses, &mut assign).then(|| assign[1..].iter().map(|v| v.unwrap_or(false)).collect())
}

/// Random CNF with clause widths drawn from `1..=max_width`.
pub fn random_cnf<R: Rng>(rng: &mut R, num_vars: u32, num_clauses: usize, max_width: usize) -> Vec<Vec<Lit>> {
    (0..num_clauses)
        .map(|_| {
            let width = rng.gen_range(1..=max_width);
            (0..width).map(|_| Lit::with_sign(rng.gen_range(1..=num_vars), rng.gen())).collect()
        })
        .collect()
}

/// Pigeonhole principle: `holes + 1` pigeons, `holes` holes.
pub fn pigeonhole(holes: u32) -> (u32, Vec<Vec<Lit>>) {
    let pigeons = holes + 1;
    let var = |p: u32, h: u32| p * holes + h + 1;
    let mut clauses: Vec<Vec<Lit>> = (0..pigeons).map(|p| (0..holes).map(|h| Lit::pos(var(p, h))).collect()).collect();
    for h in 0..holes {
        for p in 0..pigeons {
            for q in p + 1..pigeons {
                clauses.push(vec![Lit::neg(var(p, h)), Lit::neg(var(q, h))]);
            }
        }
    }
    (pigeons * holes, clauses)
}

pub fn satisfies(model: &[bool], clauses: &[Vec<Lit>]) -> bool {
    clauses.iter().all(|c| c.iter().any(|l| model[l.var() as usize - 1] == l.is_pos()))
}

/// Random system with `cols <= max_cols` columns. With `general`, right-hand
/// sides range over `1..=4` and bounds over `1..=3`, kept small enough that
/// the odometer oracle below stays cheap.
pub fn random_system<R: Rng>(rng: &mut R, max_cols: usize, general: bool) -> DiophantineSystem {
    let cols = rng.gen_range(1..=max_cols);
    let rows = rng.gen_range(1..=6);
    let density = rng.gen_range(0.2..0.7);
    let mut b = SystemBuilder::new(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(density) {
                b.add_entry(r, c).unwrap();
            }
        }
    }
    if general {
        let mut space: u64 = 1;
        for c in 0..cols {
            let u = rng.gen_range(1..=3u32);
            if (space * (u as u64 + 1)) << (cols - c - 1) <= 1 << 18 {
                b.set_bound(c, u).unwrap();
                space *= u as u64 + 1;
            } else {
                space *= 2;
            }
        }
        for r in 0..rows {
            b.set_rhs(r, rng.gen_range(1..=4)).unwrap();
        }
    }
    b.build()
}

/// Every `x` with `0 <= x <= u` and `A x = b`, by counting through the box.
pub fn brute_diophantine(sys: &DiophantineSystem) -> Vec<Vec<u32>> {
    let cols = sys.num_cols();
    let mut x = vec![0u32; cols];
    let mut out = Vec::new();
    loop {
        let mut sums = vec![0u32; sys.num_rows()];
        for (c, &v) in x.iter().enumerate() {
            for &r in sys.support(c) {
                sums[r as usize] += v;
            }
        }
        if sums == sys.rhs() {
            out.push(x.clone());
        }
        let mut c = 0;
        loop {
            if c == cols {
                out.sort();
                return out;
            }
            if x[c] < sys.bounds()[c] {
                x[c] += 1;
                break;
            }
            x[c] = 0;
            c += 1;
        }
    }
}
