//! Read-time evaluation of dynamic goals.
//!
//! A dynamic atom is answered from the stored axioms of its predicate that
//! have positive multiplicity: the partition named by its first argument,
//! then the generic section. Clause bodies are evaluated recursively, static
//! goals are delegated to the static engine, and `\+` is negation as
//! failure. A fact-name in a top-level query matches stored facts.
//!
//! Queries run against the current store without waiting for quiescence.

use std::cell::RefCell;

use indexmap::IndexMap;
use thiserror::Error;

use crate::lang::{parse_query, Atom, Axiom, DGoal, Kind, LangError, NameKey};
use crate::static_engine::{Cont, Flow, Machine, SolveError, Stop};
use crate::tank::Tank;
use crate::term::{canonical_encode, Term, Var};

const RED_ZONE: usize = 128 * 1024;
const STACK_CHUNK: usize = 4 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("query on {name}/{arity} needs a ground first argument: concrete clauses exist")]
    UnindexedQuery { name: String, arity: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("limit must be at least 1")]
    BadLimit,
}

/// One answer: the query's named variables and their values, in order of
/// first occurrence. Variables starting with `_` are not reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub bindings: IndexMap<String, Term>,
}

impl QueryResult {
    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }
}

struct Eval<'t> {
    tank: &'t Tank,
    decls: crate::lang::Declarations,
    error: RefCell<Option<QueryError>>,
}

impl<'t> Eval<'t> {
    fn fail(&self, e: QueryError) -> Flow {
        *self.error.borrow_mut() = Some(e);
        Err(Stop::Halt)
    }

    fn solve<'a>(&self, m: &mut Machine<'a>, g: &DGoal, k: Cont<'_, 'a>) -> Flow {
        stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || match g {
            DGoal::Static(g) => m.solve(g, k),
            DGoal::And(l, r) => self.solve(m, l, &mut |m: &mut Machine<'a>| self.solve(m, r, k)),
            DGoal::Not(g) => {
                let mark = m.mark();
                let r = self.solve(m, g, &mut |_| Err(Stop::Halt));
                m.undo(mark);
                match r {
                    Ok(()) => k(m),
                    Err(Stop::Halt) if self.error.borrow().is_none() => Ok(()),
                    Err(e) => Err(e),
                }
            }
            DGoal::Atom(a) => self.solve_atom(m, a, k),
        })
    }

    fn solve_atom<'a>(&self, m: &mut Machine<'a>, atom: &Atom, k: Cont<'_, 'a>) -> Flow {
        m.step()?;
        let key: NameKey = (atom.pred.clone(), atom.arity());
        let want_facts = self.decls.kind_of(&atom.pred) == Some(Kind::Fact);
        let usable = |a: &Axiom, mult: i64| mult > 0 && a.is_fact() == want_facts;
        let mut candidates: Vec<Axiom> = Vec::new();
        let store = self.tank.store();
        if let Some(first) = atom.args.first() {
            match canonical_encode(&m.resolve(first)) {
                Ok(subject) => store.read_partition(&subject, |p| {
                    candidates.extend(
                        p.group(&key)
                            .filter(|(a, mult)| usable(a, *mult))
                            .map(|(a, _)| a.clone()),
                    )
                }),
                Err(_) if store.has_concrete(&key) => {
                    return self.fail(QueryError::UnindexedQuery {
                        name: atom.pred.to_string(),
                        arity: atom.arity(),
                    })
                }
                Err(_) => {}
            }
        }
        store.read_generic(|g| {
            candidates.extend(
                g.group(&key)
                    .filter(|(a, mult)| usable(a, *mult))
                    .map(|(a, _)| a.clone()),
            )
        });
        for axiom in candidates {
            let axiom = axiom.rename_apart(m.fresh_scope());
            let mark = m.mark();
            let head = axiom.key_atom();
            let matched = atom.args.iter().zip(&head.args).all(|(a, b)| m.unify(a, b));
            let r = match (&axiom, matched) {
                (_, false) => Ok(()),
                (Axiom::Clause { body, .. }, true) => self.solve(m, body, k),
                (_, true) => k(m),
            };
            m.undo(mark);
            r?;
        }
        Ok(())
    }
}

fn reported_vars(goal: &DGoal) -> Vec<Var> {
    let mut out: Vec<Var> = Vec::new();
    for v in goal.vars() {
        if !v.name.starts_with('_') && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

impl Tank {
    /// Evaluates `goal`, returning at most `limit` answers in evaluation
    /// order.
    pub fn query(&self, goal: &DGoal, limit: usize) -> Result<Vec<QueryResult>, QueryError> {
        if limit == 0 {
            return Err(QueryError::BadLimit);
        }
        let vars = reported_vars(goal);
        let db = self.static_db();
        let eval = Eval {
            tank: self,
            decls: self.declarations(),
            error: RefCell::new(None),
        };
        let min_scope = goal.vars().iter().map(|v| v.scope).max().unwrap_or(0) + 1;
        let mut machine = Machine::new(&db, self.config().solve_budget, min_scope);
        let mut results = Vec::new();
        let r = eval.solve(&mut machine, goal, &mut |m| {
            let bindings = vars
                .iter()
                .map(|v| (v.name.to_string(), m.resolve(&Term::Var(v.clone()))))
                .collect();
            results.push(QueryResult { bindings });
            if results.len() >= limit {
                Err(Stop::Halt)
            } else {
                Ok(())
            }
        });
        if let Some(e) = eval.error.into_inner() {
            return Err(e);
        }
        match r {
            Ok(()) | Err(Stop::Halt) => Ok(results),
            Err(Stop::Err(e)) => Err(e.into()),
        }
    }

    /// Parses and evaluates a query given in source form.
    pub fn query_text(&self, text: &str, limit: usize) -> Result<Vec<QueryResult>, QueryError> {
        let goal = parse_query(text, &self.declarations())?;
        self.query(&goal, limit)
    }

    /// Number of answers, up to `limit`.
    pub fn query_count(&self, goal: &DGoal, limit: usize) -> Result<usize, QueryError> {
        Ok(self.query(goal, limit)?.len())
    }
}
