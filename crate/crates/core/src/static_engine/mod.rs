//! Backtracking solver for static goals.
//!
//! Static predicates are ordinary Horn clauses with negation as failure,
//! evaluated depth-first in clause order. Three builtins are available:
//! `=/2`, `charCodes/2` and `parse/3`, the latter interpreting grammar
//! productions stored as `prod(Symbol, Body)` clauses.

mod builtins;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::lang::{self, Atom, Declarations, Goal, Item, NameKey, StaticClause};
use crate::term::{Substitution, Term, Var};

/// Library predicates loaded into every static database.
pub const PRELUDE: &str = include_str!("../../assets/prelude.clg");

/// Default number of resolution steps a single solve may take.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("static evaluation exceeded its budget of {budget} steps")]
    BudgetExhausted { budget: u64 },
    #[error("type error in {builtin}: {message}")]
    BuiltinTypeError {
        builtin: &'static str,
        message: String,
    },
}

/// Static clauses indexed by predicate, in load order.
#[derive(Debug, Clone, Default)]
pub struct StaticDb {
    clauses: HashMap<NameKey, Vec<Arc<StaticClause>>>,
    len: usize,
}

impl StaticDb {
    pub fn new() -> Self {
        StaticDb::default()
    }

    /// A database holding the prelude.
    pub fn with_prelude() -> Self {
        let mut db = StaticDb::new();
        let items = lang::parse_program_with(PRELUDE, &mut Declarations::with_builtins())
            .expect("prelude parses");
        db.extend_items(&items);
        db
    }

    pub fn add(&mut self, clause: StaticClause) {
        let key = (clause.head.pred.clone(), clause.head.arity());
        self.clauses.entry(key).or_default().push(Arc::new(clause));
        self.len += 1;
    }

    /// Removes the first clause equal to `clause`; false if there is none.
    pub fn remove(&mut self, clause: &StaticClause) -> bool {
        let key = (clause.head.pred.clone(), clause.head.arity());
        let Some(list) = self.clauses.get_mut(&key) else {
            return false;
        };
        let Some(i) = list.iter().position(|c| **c == *clause) else {
            return false;
        };
        list.remove(i);
        if list.is_empty() {
            self.clauses.remove(&key);
        }
        self.len -= 1;
        true
    }

    /// Adds every static clause among `items`.
    pub fn extend_items(&mut self, items: &[Item]) {
        for item in items {
            if let Item::Static(c) = item {
                self.add(c.clone());
            }
        }
    }

    pub fn clauses_for(&self, name: &str, arity: usize) -> &[Arc<StaticClause>] {
        self.clauses
            .get(&(Arc::<str>::from(name), arity))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Why a search stopped early.
#[derive(Debug)]
pub(crate) enum Stop {
    /// A continuation asked to stop; not an error.
    Halt,
    Err(SolveError),
}

impl From<SolveError> for Stop {
    fn from(e: SolveError) -> Self {
        Stop::Err(e)
    }
}

pub(crate) type Flow = Result<(), Stop>;

/// Success continuation. Called once per solution with the bindings in place.
pub(crate) type Cont<'c, 'a> = &'c mut dyn FnMut(&mut Machine<'a>) -> Flow;

const RED_ZONE: usize = 128 * 1024;
const STACK_CHUNK: usize = 4 * 1024 * 1024;

/// Solver state: a trailed substitution, a step budget and a supply of
/// fresh variable scopes for renaming clauses apart.
pub struct Machine<'a> {
    pub(crate) db: &'a StaticDb,
    pub(crate) subst: Substitution,
    trail: Vec<Var>,
    steps: u64,
    budget: u64,
    next_scope: u32,
}

impl<'a> Machine<'a> {
    /// `min_scope` must exceed the scope of every variable the caller will
    /// pass in, so renamed clauses never capture them.
    pub fn new(db: &'a StaticDb, budget: u64, min_scope: u32) -> Self {
        Machine {
            db,
            subst: Substitution::new(),
            trail: Vec::new(),
            steps: 0,
            budget,
            next_scope: min_scope.max(1),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn substitution(&self) -> &Substitution {
        &self.subst
    }

    pub fn resolve(&self, t: &Term) -> Term {
        self.subst.apply(t)
    }

    pub(crate) fn fresh_scope(&mut self) -> u32 {
        let s = self.next_scope;
        self.next_scope += 1;
        s
    }

    pub(crate) fn fresh_var(&mut self, name: &str) -> Term {
        Term::Var(Var::scoped(name, self.fresh_scope()))
    }

    pub(crate) fn mark(&self) -> usize {
        self.trail.len()
    }

    pub(crate) fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("trail entry");
            self.subst.unbind(&v);
        }
    }

    /// Unifies under the current bindings. On failure nothing is bound.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let mark = self.mark();
        if self.subst.unify_into(a, b, &mut self.trail) {
            true
        } else {
            self.undo(mark);
            false
        }
    }

    /// Counts one resolution step against the budget.
    pub(crate) fn step(&mut self) -> Result<(), SolveError> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(SolveError::BudgetExhausted {
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Enumerates the solutions of `goal`, calling `k` for each. Bindings made
    /// by the search are undone before returning.
    pub(crate) fn solve(&mut self, goal: &Goal, k: Cont<'_, 'a>) -> Flow {
        stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || match goal {
            Goal::True => k(self),
            Goal::And(l, r) => self.solve(l, &mut |m: &mut Machine<'a>| m.solve(r, k)),
            Goal::Not(g) => {
                if self.provable(g)? {
                    Ok(())
                } else {
                    k(self)
                }
            }
            Goal::Atom(atom) => self.solve_atom(atom, k),
        })
    }

    /// Whether `goal` has at least one solution. Leaves no bindings.
    pub(crate) fn provable(&mut self, goal: &Goal) -> Result<bool, Stop> {
        let mark = self.mark();
        let r = self.solve(goal, &mut |_| Err(Stop::Halt));
        self.undo(mark);
        match r {
            Ok(()) => Ok(false),
            Err(Stop::Halt) => Ok(true),
            Err(e) => Err(e),
        }
    }

    pub(crate) fn solve_atom(&mut self, atom: &Atom, k: Cont<'_, 'a>) -> Flow {
        self.step()?;
        match (&*atom.pred, atom.args.as_slice()) {
            ("=", [a, b]) => {
                let mark = self.mark();
                if self.unify(a, b) {
                    let r = k(self);
                    self.undo(mark);
                    r
                } else {
                    Ok(())
                }
            }
            ("charCodes", [s, cs]) => builtins::char_codes(self, s, cs, k),
            ("parse", [body, input, rest]) => builtins::parse(self, body, input, rest, k),
            _ => {
                let db = self.db;
                for clause in db.clauses_for(&atom.pred, atom.arity()) {
                    let clause = clause.rename_apart(self.fresh_scope());
                    let mark = self.mark();
                    let head_matches = atom
                        .args
                        .iter()
                        .zip(&clause.head.args)
                        .all(|(a, b)| self.unify(a, b));
                    let r = if head_matches {
                        self.solve(&clause.body, k)
                    } else {
                        Ok(())
                    };
                    self.undo(mark);
                    r?;
                }
                Ok(())
            }
        }
    }

    /// Runs `goal` to completion, calling `on_solution` for every answer.
    /// Returning `false` from `on_solution` stops the search.
    pub fn run(
        &mut self,
        goal: &Goal,
        on_solution: &mut dyn FnMut(&Machine<'a>) -> bool,
    ) -> Result<(), SolveError> {
        let r = self.solve(goal, &mut |m| {
            if on_solution(m) {
                Ok(())
            } else {
                Err(Stop::Halt)
            }
        });
        match r {
            Ok(()) | Err(Stop::Halt) => Ok(()),
            Err(Stop::Err(e)) => Err(e),
        }
    }
}

/// All answers to `goal`, each restricted to the goal's variables.
pub fn solve_all(db: &StaticDb, goal: &Goal, budget: u64) -> Result<Vec<Substitution>, SolveError> {
    let mut vars = Vec::new();
    goal.collect_vars(&mut vars);
    vars.sort();
    vars.dedup();
    let mut machine = Machine::new(db, budget, goal.max_scope() + 1);
    let mut out = Vec::new();
    machine.run(goal, &mut |m| {
        out.push(m.subst.restrict(&vars));
        true
    })?;
    Ok(out)
}

/// Whether `goal` has at least one answer.
pub fn holds(db: &StaticDb, goal: &Goal, budget: u64) -> Result<bool, SolveError> {
    let mut machine = Machine::new(db, budget, goal.max_scope() + 1);
    let mut found = false;
    machine.run(goal, &mut |_| {
        found = true;
        false
    })?;
    Ok(found)
}
