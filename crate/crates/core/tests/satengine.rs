mod common;

use common::{dpll, pigeonhole, random_cnf, satisfies};
use olsat::encoder::{decode_square, encode_latin, Clause, EncodeConfig, Lit, Mode, SquareId};
use olsat::satengine::{ExternalPropagator, Limits, Model, SolutionCheck, SolveStatus, Solver, SolverStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solver_for(nv: u32, clauses: &[Vec<Lit>]) -> Solver {
    let mut s = Solver::new(nv);
    for c in clauses {
        s.add_clause(c).unwrap();
    }
    s
}

#[test]
fn pigeonhole_4_3_is_unsat() {
    let (nv, clauses) = pigeonhole(3);
    assert_eq!(nv, 12);
    let none = (0u32..1 << 12).all(|m| {
        let model: Vec<bool> = (0..12).map(|b| m >> b & 1 == 1).collect();
        !satisfies(&model, &clauses)
    });
    assert!(none);
    let mut s = solver_for(nv, &clauses);
    let r = s.solve(&[], &Limits::none()).unwrap();
    assert!(r.status.is_unsat());
    assert!(r.stats.conflicts > 0);
}

#[test]
fn agrees_with_dpll_on_random_cnf() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut sat, mut unsat) = (0, 0);
    for _ in 0..1500 {
        let nv = rng.gen_range(3..=20);
        let nc = rng.gen_range(nv as usize..=5 * nv as usize);
        let clauses = random_cnf(&mut rng, nv, nc, 4);
        let expect = dpll(nv, &clauses).is_some();
        let mut s = solver_for(nv, &clauses);
        s.set_option("paranoid", "true").unwrap();
        match s.solve(&[], &Limits::none()).unwrap().status {
            SolveStatus::Sat(m) => {
                assert!(expect);
                assert!(satisfies(m.values(), &clauses));
                sat += 1;
            }
            SolveStatus::Unsat => {
                assert!(!expect);
                unsat += 1;
            }
            other => panic!("{other:?}"),
        }
    }
    assert!(sat > 100 && unsat > 100, "sat={sat} unsat={unsat}");
}

struct Silent;

impl ExternalPropagator for Silent {
    fn observed_vars(&self) -> Vec<u32> {
        Vec::new()
    }
}

#[test]
fn silent_propagator_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let nv = 30;
        let clauses: Vec<Vec<Lit>> = (0..128)
            .map(|_| (0..3).map(|_| Lit::with_sign(rng.gen_range(1..=nv), rng.gen())).collect())
            .collect();
        let plain = solver_for(nv, &clauses).solve(&[], &Limits::none()).unwrap();
        let hooked = solver_for(nv, &clauses).solve_with(&[], &Limits::none(), &mut Silent).unwrap();
        assert_eq!(plain.status.is_sat(), hooked.status.is_sat());
        assert_eq!(plain, hooked);
    }
}

/// Rejects every full model with the clause blocking it.
struct Enumerator {
    vars: u32,
    seen: Vec<Vec<bool>>,
}

impl ExternalPropagator for Enumerator {
    fn observed_vars(&self) -> Vec<u32> {
        (1..=self.vars).collect()
    }

    fn on_solution_check(&mut self, model: &Model, _: &SolverStats) -> SolutionCheck {
        self.seen.push(model.values().to_vec());
        SolutionCheck::Reject((1..=self.vars).map(|v| Lit::with_sign(v, !model.value(v))).collect())
    }
}

#[test]
fn rejecting_every_model_enumerates_then_unsat() {
    let mut s = Solver::new(2);
    let mut e = Enumerator { vars: 2, seen: Vec::new() };
    let r = s.solve_with(&[], &Limits::none(), &mut e).unwrap();
    assert!(r.status.is_unsat());
    assert_eq!(e.seen.len(), 4);
    e.seen.sort();
    e.seen.dedup();
    assert_eq!(e.seen.len(), 4);

    // model count of a small formula matches brute force
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let nv = 8;
        let clauses = random_cnf(&mut rng, nv, 10, 3);
        let want = (0u32..1 << nv)
            .filter(|m| satisfies(&(0..nv).map(|b| m >> b & 1 == 1).collect::<Vec<_>>(), &clauses))
            .count();
        let mut s = solver_for(nv, &clauses);
        s.set_option("paranoid", "true").unwrap();
        let mut e = Enumerator { vars: nv, seen: Vec::new() };
        assert!(s.solve_with(&[], &Limits::none(), &mut e).unwrap().status.is_unsat());
        assert_eq!(e.seen.len(), want);
    }
}

/// Tracks assignments through the callbacks and checks them against a full
/// model at solution time.
struct Mirror {
    vars: u32,
    assigned: Vec<(Lit, usize)>,
    injected: Vec<Clause>,
    pending: Vec<Clause>,
    rng: ChaCha8Rng,
    mismatches: usize,
}

impl ExternalPropagator for Mirror {
    fn observed_vars(&self) -> Vec<u32> {
        (1..=self.vars).step_by(2).collect()
    }

    fn on_assign(&mut self, lits: &[Lit], level: usize) {
        for &l in lits {
            assert!(self.assigned.iter().all(|(x, _)| x.var() != l.var()), "double assignment of {l}");
            self.assigned.push((l, level));
        }
    }

    fn on_backtrack(&mut self, new_level: usize) {
        self.assigned.retain(|&(_, lv)| lv <= new_level);
    }

    fn has_external_clause(&mut self, _: &SolverStats) -> bool {
        if self.rng.gen_ratio(1, 8) && self.assigned.len() >= 2 {
            // a random clause over currently false literals: may conflict,
            // may propagate
            let c: Clause = self.assigned.iter().rev().take(3).map(|&(l, _)| !l).collect();
            self.pending.push(c);
        }
        !self.pending.is_empty()
    }

    fn fetch_external_clause(&mut self) -> Option<Clause> {
        let c = self.pending.pop()?;
        self.injected.push(c.clone());
        Some(c)
    }

    fn on_solution_check(&mut self, model: &Model, _: &SolverStats) -> SolutionCheck {
        for &(l, _) in &self.assigned {
            if !model.lit_value(l) {
                self.mismatches += 1;
            }
        }
        let observed = (1..=self.vars).step_by(2).count();
        if self.assigned.len() != observed {
            self.mismatches += 1;
        }
        SolutionCheck::Accept
    }
}

#[test]
fn injected_clauses_keep_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for round in 0..300 {
        let nv = rng.gen_range(6..=16);
        let clauses = random_cnf(&mut rng, nv, 3 * nv as usize, 3);
        let mut s = solver_for(nv, &clauses);
        s.set_option("paranoid", "true").unwrap();
        let mut m = Mirror {
            vars: nv,
            assigned: Vec::new(),
            injected: Vec::new(),
            pending: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(round),
            mismatches: 0,
        };
        let r = s.solve_with(&[], &Limits::none(), &mut m).unwrap();
        assert_eq!(m.mismatches, 0);
        let mut all = clauses.clone();
        all.extend(m.injected.iter().cloned());
        match r.status {
            SolveStatus::Sat(model) => assert!(satisfies(model.values(), &all)),
            SolveStatus::Unsat => assert!(dpll(nv, &all).is_none()),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn latin_order_four_is_sat() {
    let enc = encode_latin(&EncodeConfig::new(4, Mode::Single)).unwrap();
    let mut s = Solver::from_cnf(&enc.cnf);
    match s.solve(&[], &Limits::none()).unwrap().status {
        SolveStatus::Sat(m) => {
            decode_square(&enc.map, SquareId::P, |v| m.value(v)).unwrap();
        }
        other => panic!("{other:?}"),
    }
}

fn latin6_run(seed: u64) -> (Vec<Lit>, SolverStats) {
    let enc = encode_latin(&EncodeConfig::new(6, Mode::Single)).unwrap();
    let mut s = Solver::from_cnf(&enc.cnf);
    s.set_option("shuffle_seed", &seed.to_string()).unwrap();
    s.set_option("decision_log", "32").unwrap();
    let r = s.solve(&[], &Limits::none()).unwrap();
    assert!(r.status.is_sat());
    (s.decision_log().to_vec(), r.stats)
}

#[test]
fn shuffle_seed_changes_decisions() {
    let (log0, _) = latin6_run(0);
    let (log1, _) = latin6_run(1);
    assert!(!log0.is_empty());
    assert_ne!(log0, log1);
}

#[test]
fn runs_are_deterministic() {
    for seed in [0, 1, 9] {
        assert_eq!(latin6_run(seed), latin6_run(seed));
    }
}

#[test]
fn reduction_bounds_learned_clauses() {
    let (nv, clauses) = pigeonhole(7);
    let mut s = solver_for(nv, &clauses);
    s.set_option("reduce_base", "200").unwrap();
    s.set_option("reduce_inc", "50").unwrap();
    let r = s.solve(&[], &Limits::none()).unwrap();
    assert!(r.status.is_unsat());
    assert!(r.stats.reductions >= 2, "{}", r.stats);
    assert!(r.stats.deleted_clauses > 0);
    assert!(r.stats.peak_learned < r.stats.conflicts, "{}", r.stats);
}

#[test]
fn conflict_budget_and_deadline() {
    let (nv, clauses) = pigeonhole(9);
    let mut s = solver_for(nv, &clauses);
    let r = s.solve(&[], &Limits::none().with_conflicts(100)).unwrap();
    assert_eq!(r.status, SolveStatus::Budget);
    let past = std::time::Instant::now();
    let r = s.solve(&[], &Limits::none().with_deadline(past)).unwrap();
    assert_eq!(r.status, SolveStatus::Timeout);
}

struct OutOfRange;

impl ExternalPropagator for OutOfRange {
    fn observed_vars(&self) -> Vec<u32> {
        vec![1]
    }
    fn has_external_clause(&mut self, _: &SolverStats) -> bool {
        true
    }
    fn fetch_external_clause(&mut self) -> Option<Clause> {
        Some(vec![Lit::pos(99)])
    }
}

#[test]
fn propagator_clause_range_is_checked() {
    let mut s = Solver::new(2);
    let err = s.solve_with(&[], &Limits::none(), &mut OutOfRange).unwrap_err();
    assert!(matches!(err, olsat::satengine::SolverError::PropagatorClauseOutOfRange { lit: 99, .. }));
}
