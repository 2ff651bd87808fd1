//! Brute-force reference evaluators used to check the tank.
//!
//! `naive_run` executes the tick semantics literally over a flat list of
//! stored axioms, pairing each queue head with every stored axiom. It shares
//! only the term, language and static-engine modules with the tank.
//! `naive_query` answers a dynamic goal by scanning every stored axiom.

pub mod gen;

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use crate::lang::{Atom, Axiom, DGoal, Declarations, Goal, Kind};
use crate::static_engine::{solve_all, SolveError, StaticDb};
use crate::term::{unify, Substitution, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("not quiescent after {ticks} ticks")]
    NotQuiescent { ticks: u64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("unindexed query on {name}/{arity}")]
    UnindexedQuery { name: String, arity: usize },
}

/// Quiescent state computed by `naive_run`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NaiveRun {
    pub counts: BTreeMap<Axiom, i64>,
    /// Entries dropped because a guard failed, in tick order.
    pub dead_letters: Vec<(Axiom, i64)>,
    pub ticks: u64,
}

/// Runs the ops `(delta, axiom)` in order to quiescence.
pub fn naive_run(
    ops: &[(i64, Axiom)],
    db: &StaticDb,
    budget: u64,
    max_ticks: u64,
) -> Result<NaiveRun, OracleError> {
    let mut queue: VecDeque<(Axiom, i64)> = ops.iter().map(|(d, a)| (a.normalize(), *d)).collect();
    let mut store: Vec<(Axiom, i64)> = Vec::new();
    let mut run = NaiveRun::default();
    while let Some((alpha, n)) = queue.pop_front() {
        if run.ticks == max_ticks {
            return Err(OracleError::NotQuiescent { ticks: run.ticks });
        }
        run.ticks += 1;
        let mut derived = Vec::new();
        let mut failed = false;
        for (beta, m) in &store {
            match pair(&alpha, beta, db, budget) {
                Ok(gs) => derived.extend(gs.into_iter().map(|g| (g, n * m))),
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            run.dead_letters.push((alpha, n));
            continue;
        }
        queue.extend(derived);
        match store.iter().position(|(a, _)| *a == alpha) {
            Some(i) => {
                store[i].1 += n;
                if store[i].1 == 0 {
                    store.remove(i);
                }
            }
            None => store.push((alpha, n)),
        }
    }
    run.counts = store.into_iter().collect();
    Ok(run)
}

fn pair(alpha: &Axiom, beta: &Axiom, db: &StaticDb, budget: u64) -> Result<Vec<Axiom>, SolveError> {
    match (alpha, beta) {
        (Axiom::Fact(f), Axiom::Rule { .. }) => modus_ponens(f, beta, db, budget),
        (Axiom::Rule { .. }, Axiom::Fact(f)) => modus_ponens(f, alpha, db, budget),
        _ => Ok(Vec::new()),
    }
}

fn scoped(scope: u32) -> impl FnMut(&Var) -> Term {
    move |v| Term::Var(Var::scoped(v.name.clone(), scope))
}

fn modus_ponens(
    fact: &Atom,
    rule: &Axiom,
    db: &StaticDb,
    budget: u64,
) -> Result<Vec<Axiom>, SolveError> {
    let Axiom::Rule {
        trigger,
        guard,
        consequence,
    } = rule.map_vars(&mut scoped(2))
    else {
        return Ok(Vec::new());
    };
    let fact = fact.map_vars(&mut scoped(1));
    if trigger.pred != fact.pred || trigger.args.len() != fact.args.len() {
        return Ok(Vec::new());
    }
    let mut s = Substitution::new();
    for (t, f) in trigger.args.iter().zip(&fact.args) {
        match unify(t, f, &s) {
            Some(next) => s = next,
            None => return Ok(Vec::new()),
        }
    }
    let guard = guard.map_vars(&mut |v| s.apply(&Term::Var(v.clone())));
    let consequence = consequence.map_vars(&mut |v| s.apply(&Term::Var(v.clone())));
    Ok(solve_all(db, &guard, budget)?
        .iter()
        .map(|sol| {
            consequence
                .map_vars(&mut |v| sol.apply(&Term::Var(v.clone())))
                .normalize()
        })
        .collect())
}

/// One query answer: named variables of the query and their values.
pub type Row = Vec<(String, Term)>;

/// Answers `goal` by scanning every stored axiom with positive
/// multiplicity. Answer order is unspecified; compare with `canonical_rows`.
pub fn naive_query(
    goal: &DGoal,
    counts: &BTreeMap<Axiom, i64>,
    db: &StaticDb,
    decls: &Declarations,
    budget: u64,
) -> Result<Vec<Row>, OracleError> {
    let mut names: Vec<Var> = Vec::new();
    for v in goal.vars() {
        if !v.name.starts_with('_') && !names.contains(&v) {
            names.push(v);
        }
    }
    let mut q = Naive {
        counts,
        db,
        decls,
        budget,
        next_scope: 1 << 20,
    };
    let sols = q.eval(goal, Substitution::new())?;
    Ok(sols
        .iter()
        .map(|s| {
            names
                .iter()
                .map(|v| (v.name.to_string(), s.apply(&Term::Var(v.clone()))))
                .collect()
        })
        .collect())
}

struct Naive<'q> {
    counts: &'q BTreeMap<Axiom, i64>,
    db: &'q StaticDb,
    decls: &'q Declarations,
    budget: u64,
    next_scope: u32,
}

impl Naive<'_> {
    fn eval(&mut self, g: &DGoal, s: Substitution) -> Result<Vec<Substitution>, OracleError> {
        match g {
            DGoal::Static(g) => self.eval_static(g, s),
            DGoal::And(l, r) => {
                let mut out = Vec::new();
                for s1 in self.eval(l, s)? {
                    out.extend(self.eval(r, s1)?);
                }
                Ok(out)
            }
            DGoal::Not(inner) => Ok(if self.eval(inner, s.clone())?.is_empty() {
                vec![s]
            } else {
                Vec::new()
            }),
            DGoal::Atom(a) => self.eval_atom(a, s),
        }
    }

    fn eval_static(&mut self, g: &Goal, s: Substitution) -> Result<Vec<Substitution>, OracleError> {
        let g = g.map_vars(&mut |v| s.apply(&Term::Var(v.clone())));
        let mut out = Vec::new();
        for sol in solve_all(self.db, &g, self.budget)? {
            let mut s1 = s.clone();
            for (v, t) in sol.iter() {
                s1 = unify(&Term::Var(v.clone()), t, &s1).expect("fresh binding");
            }
            out.push(s1);
        }
        Ok(out)
    }

    fn eval_atom(
        &mut self,
        atom: &Atom,
        s: Substitution,
    ) -> Result<Vec<Substitution>, OracleError> {
        let want_facts = self.decls.kind_of(&atom.pred) == Some(Kind::Fact);
        let same_name = |a: &Axiom| {
            a.key_atom().pred == atom.pred && a.key_atom().args.len() == atom.args.len()
        };
        if let Some(first) = atom.args.first() {
            let concrete_exists = self
                .counts
                .iter()
                .any(|(a, m)| *m != 0 && same_name(a) && a.key_atom().args[0].is_ground());
            if !s.apply(first).is_ground() && concrete_exists {
                return Err(OracleError::UnindexedQuery {
                    name: atom.pred.to_string(),
                    arity: atom.args.len(),
                });
            }
        }
        let candidates: Vec<Axiom> = self
            .counts
            .iter()
            .filter(|(a, m)| **m > 0 && same_name(a) && a.is_fact() == want_facts)
            .map(|(a, _)| a.clone())
            .collect();
        let mut out = Vec::new();
        for axiom in candidates {
            self.next_scope += 1;
            let axiom = axiom.map_vars(&mut scoped(self.next_scope));
            let mut s1 = Some(s.clone());
            for (x, y) in atom.args.iter().zip(&axiom.key_atom().args) {
                s1 = s1.and_then(|s1| unify(x, y, &s1));
            }
            let Some(s1) = s1 else { continue };
            match &axiom {
                Axiom::Clause { body, .. } => out.extend(self.eval(body, s1)?),
                _ => out.push(s1),
            }
        }
        Ok(out)
    }
}

/// Rows with unbound variables renamed by first occurrence and sorted, so
/// answer multisets from different evaluators can be compared.
pub fn canonical_rows(rows: impl IntoIterator<Item = Row>) -> Vec<String> {
    let mut out: Vec<String> = rows
        .into_iter()
        .map(|row| {
            let mut names: HashMap<Var, usize> = HashMap::new();
            row.iter()
                .map(|(k, t)| {
                    let t = t.map_vars(&mut |v| {
                        let n = names.len();
                        let i = *names.entry(v.clone()).or_insert(n);
                        Term::var(&format!("_V{i}"))
                    });
                    format!("{k}={t}")
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_program_with, parse_query, Item};
    use crate::static_engine::DEFAULT_BUDGET;

    fn setup(src: &str) -> (Declarations, StaticDb, Vec<(i64, Axiom)>) {
        let mut d = Declarations::standard();
        let items = parse_program_with(src, &mut d).unwrap();
        let mut db = StaticDb::with_prelude();
        db.extend_items(&items);
        let ops = items
            .into_iter()
            .filter_map(|i| match i {
                Item::Axiom(a) => Some((1, a)),
                _ => None,
            })
            .collect();
        (d, db, ops)
    }

    fn shown(run: &NaiveRun) -> Vec<(String, i64)> {
        run.counts
            .iter()
            .map(|(a, m)| (a.to_string(), *m))
            .collect()
    }

    #[test]
    fn fact_then_rule() {
        let (_, db, ops) = setup(":- fact f/1, g/1. f(1). f(X) ~> g(X).");
        let run = naive_run(&ops, &db, DEFAULT_BUDGET, 100).unwrap();
        assert_eq!(
            shown(&run),
            [
                ("f(1)".into(), 1),
                ("g(1)".into(), 1),
                ("f(X) ~> g(X)".into(), 1)
            ]
        );
        let mut all = ops.clone();
        all.extend(ops.iter().map(|(_, a)| (-1, a.clone())));
        assert!(naive_run(&all, &db, DEFAULT_BUDGET, 100)
            .unwrap()
            .counts
            .is_empty());
    }

    #[test]
    fn multiplicities_multiply() {
        let (_, db, ops) = setup(":- fact f/1, g/1. f(1). f(1). f(X) ~> g(X).");
        let run = naive_run(&ops, &db, DEFAULT_BUDGET, 100).unwrap();
        assert_eq!(
            run.counts
                .iter()
                .find(|(a, _)| a.to_string() == "g(1)")
                .unwrap()
                .1,
            &2
        );
    }

    #[test]
    fn non_termination_is_reported() {
        let (_, db, ops) = setup(":- fact n/1. n(z). n(X) ~> n(s(X)).");
        assert_eq!(
            naive_run(&ops, &db, DEFAULT_BUDGET, 30),
            Err(OracleError::NotQuiescent { ticks: 30 })
        );
    }

    #[test]
    fn queries_scan_everything() {
        let (d, db, ops) = setup(
            ":- dynamic g/1, h/1. :- fact f/1.
             g(1) :- true. g(2) :- true. h(X) :- g(X), \\+ g(3). f(5).",
        );
        let run = naive_run(&ops, &db, DEFAULT_BUDGET, 100).unwrap();
        let q = |s: &str| {
            canonical_rows(
                naive_query(
                    &parse_query(s, &d).unwrap(),
                    &run.counts,
                    &db,
                    &d,
                    DEFAULT_BUDGET,
                )
                .unwrap(),
            )
        };
        assert_eq!(q("h(1)"), [""]);
        assert_eq!(q("f(5)"), [""]);
        assert_eq!(q("member(X, [a])"), ["X=a"]);
        assert!(naive_query(
            &parse_query("g(X)", &d).unwrap(),
            &run.counts,
            &db,
            &d,
            DEFAULT_BUDGET
        )
        .is_err());
        let empty = BTreeMap::new();
        assert!(naive_query(
            &parse_query("h(1)", &d).unwrap(),
            &empty,
            &db,
            &d,
            DEFAULT_BUDGET
        )
        .unwrap()
        .is_empty());
    }
}
