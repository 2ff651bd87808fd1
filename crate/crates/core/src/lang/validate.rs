//! Load-time checks for axioms built outside the parser.

use super::ast::{is_builtin, Atom, Axiom, DGoal, Declarations, Goal, Kind};
use super::parser::classify;
use super::{LangError, LangErrorKind};
use crate::term::Var;

/// Checks an axiom against `decls` the same way the parser does.
pub fn validate_axiom(decls: &Declarations, axiom: &Axiom) -> Result<(), LangError> {
    check_axiom(decls, axiom).map_err(|k| LangError::new(k, 0, 0))?;
    check_consequence_bindings(axiom).map_err(|k| LangError::new(k, 0, 0))
}

fn check_axiom(decls: &Declarations, axiom: &Axiom) -> Result<(), LangErrorKind> {
    match axiom {
        Axiom::Fact(a) => expect(decls, a, Kind::Fact),
        Axiom::Rule {
            trigger,
            guard,
            consequence,
        } => {
            expect(decls, trigger, Kind::Fact)?;
            check_static_goal(decls, guard)?;
            check_axiom(decls, consequence)
        }
        Axiom::Clause { head, body } => {
            expect(decls, head, Kind::Dynamic)?;
            check_dgoal(decls, body)
        }
    }
}

fn expect(decls: &Declarations, atom: &Atom, want: Kind) -> Result<(), LangErrorKind> {
    let kind = classify(decls, atom)?;
    if kind != want {
        return Err(LangErrorKind::NamespaceClash(format!(
            "`{}` must be declared {}, but is declared {}",
            atom.pred,
            want.keyword(),
            kind.keyword()
        )));
    }
    Ok(())
}

pub(crate) fn check_static_goal(decls: &Declarations, goal: &Goal) -> Result<(), LangErrorKind> {
    for atom in goal.atoms() {
        match classify(decls, atom)? {
            Kind::Static => {}
            kind => {
                return Err(LangErrorKind::NonStaticGuard {
                    name: atom.pred.to_string(),
                    arity: atom.arity(),
                    kind,
                })
            }
        }
    }
    Ok(())
}

fn check_dgoal(decls: &Declarations, goal: &DGoal) -> Result<(), LangErrorKind> {
    for atom in goal.datoms() {
        expect(decls, atom, Kind::Dynamic)?;
    }
    for atom in goal.static_atoms() {
        expect(decls, atom, Kind::Static)?;
    }
    Ok(())
}

/// Static clauses must only call static predicates and must not define builtins.
pub fn validate_static_clause(
    decls: &Declarations,
    clause: &super::ast::StaticClause,
) -> Result<(), LangError> {
    let at = |k| LangError::new(k, 0, 0);
    expect(decls, &clause.head, Kind::Static).map_err(at)?;
    if is_builtin(&clause.head.pred, clause.head.arity()) {
        return Err(at(LangErrorKind::NamespaceClash(format!(
            "cannot add clauses to builtin `{}/{}`",
            clause.head.pred,
            clause.head.arity()
        ))));
    }
    check_static_goal(decls, &clause.body).map_err(at)
}

/// Every variable of a fact emitted by a rule must be bound by the trigger
/// or the guard of that rule (or of an enclosing rule). Emitted clauses may
/// keep free variables: they are evaluated at query time.
pub(crate) fn check_consequence_bindings(axiom: &Axiom) -> Result<(), LangErrorKind> {
    fn walk(axiom: &Axiom, bound: &mut Vec<Var>) -> Result<(), LangErrorKind> {
        match axiom {
            Axiom::Fact(_) | Axiom::Clause { .. } => Ok(()),
            Axiom::Rule {
                trigger,
                guard,
                consequence,
            } => {
                let mark = bound.len();
                for a in &trigger.args {
                    a.collect_vars(bound);
                }
                guard.binding_vars(bound);
                let result = match consequence.as_ref() {
                    Axiom::Fact(f) => {
                        let mut vars = Vec::new();
                        for a in &f.args {
                            a.collect_vars(&mut vars);
                        }
                        match vars.into_iter().find(|v| !bound.contains(v)) {
                            Some(v) => Err(LangErrorKind::UnboundConsequenceVariable {
                                var: v.to_string(),
                            }),
                            None => Ok(()),
                        }
                    }
                    inner => walk(inner, bound),
                };
                bound.truncate(mark);
                result
            }
        }
    }
    walk(axiom, &mut Vec::new())
}
