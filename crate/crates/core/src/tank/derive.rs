use crate::lang::{Atom, Axiom};
use crate::static_engine::{Machine, SolveError, StaticDb};
use crate::term::{Term, Var};

const FACT_SCOPE: u32 = 1;
const RULE_SCOPE: u32 = 2;
const FIRST_FREE_SCOPE: u32 = 3;

/// Axioms derivable from one pair by Modus Ponens: when one of the pair is a
/// fact and the other a rule whose trigger unifies with it, one instance of
/// the consequence per solution of the guard, in solution order.
pub fn derive(
    alpha: &Axiom,
    beta: &Axiom,
    db: &StaticDb,
    budget: u64,
) -> Result<Vec<Axiom>, SolveError> {
    match (alpha, beta) {
        (Axiom::Fact(f), rule @ Axiom::Rule { .. })
        | (rule @ Axiom::Rule { .. }, Axiom::Fact(f)) => apply_rule(f, rule, db, budget),
        _ => Ok(Vec::new()),
    }
}

fn apply_rule(
    fact: &Atom,
    rule: &Axiom,
    db: &StaticDb,
    budget: u64,
) -> Result<Vec<Axiom>, SolveError> {
    let Axiom::Rule {
        trigger,
        guard,
        consequence,
    } = rule.rename_apart(RULE_SCOPE)
    else {
        unreachable!("apply_rule takes a rule")
    };
    if trigger.pred != fact.pred || trigger.arity() != fact.arity() {
        return Ok(Vec::new());
    }
    let fact = fact.map_vars(&mut |v| Term::Var(Var::scoped(v.name.clone(), FACT_SCOPE)));
    let mut machine = Machine::new(db, budget, FIRST_FREE_SCOPE);
    let unified = trigger
        .args
        .iter()
        .zip(&fact.args)
        .all(|(t, f)| machine.unify(t, f));
    if !unified {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    machine.run(&guard, &mut |m| {
        let derived = consequence.map_vars(&mut |v| m.resolve(&Term::Var(v.clone())));
        out.push(derived.normalize());
        true
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_item, parse_program_with, Declarations, Item};
    use crate::static_engine::DEFAULT_BUDGET;

    fn setup() -> (Declarations, StaticDb) {
        let mut d = Declarations::standard();
        let items = parse_program_with(
            ":- fact f/1, g/1, h/2, k/1. :- dynamic t/1. :- static p/1. p(1). p(2).",
            &mut d,
        )
        .unwrap();
        let mut db = StaticDb::with_prelude();
        db.extend_items(&items);
        (d, db)
    }

    fn ax(d: &Declarations, s: &str) -> Axiom {
        match parse_item(s, &mut d.clone()).unwrap().remove(0) {
            Item::Axiom(a) => a,
            other => panic!("{other}"),
        }
    }

    fn derived(d: &Declarations, db: &StaticDb, a: &str, b: &str) -> Vec<String> {
        derive(&ax(d, a), &ax(d, b), db, DEFAULT_BUDGET)
            .unwrap()
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    #[test]
    fn modus_ponens_instantiation() {
        let (d, db) = setup();
        assert_eq!(derived(&d, &db, "f(1)", "f(X) ~> g(X)"), ["g(1)"]);
        assert_eq!(derived(&d, &db, "f(X) ~> g(X)", "f(1)"), ["g(1)"]);
    }

    #[test]
    fn one_result_per_guard_solution() {
        let (d, db) = setup();
        assert_eq!(
            derived(&d, &db, "f(7)", "f(X) { member(Y, [1, 2]) } ~> h(X, Y)"),
            ["h(7, 1)", "h(7, 2)"]
        );
        assert_eq!(
            derived(&d, &db, "f(7)", "f(X) { p(_) } ~> k(X)"),
            ["k(7)", "k(7)"]
        );
        assert!(derived(&d, &db, "f(7)", "f(X) { p(X) } ~> k(X)").is_empty());
    }

    #[test]
    fn non_matching_pairs_derive_nothing() {
        let (d, db) = setup();
        assert!(derived(&d, &db, "f(1)", "g(X) ~> k(X)").is_empty());
        assert!(derived(&d, &db, "f(1)", "f(2) ~> k(1)").is_empty());
        assert!(derived(&d, &db, "f(1)", "g(1)").is_empty());
        assert!(derived(&d, &db, "f(X) ~> g(X)", "f(Y) ~> g(Y)").is_empty());
        assert!(derived(&d, &db, "f(1)", "t(X) :- true").is_empty());
    }

    #[test]
    fn emitted_rules_and_clauses_keep_their_own_variables() {
        let (d, db) = setup();
        assert_eq!(
            derived(&d, &db, "f(1)", "f(X) ~> (g(Y) ~> h(X, Y))"),
            ["g(Y) ~> h(1, Y)"]
        );
        assert_eq!(
            derived(&d, &db, "f(1)", "f(X) ~> (t(Z) :- { member(Z, [X]) })"),
            ["t(Z) :- member(Z, [1])"]
        );
    }

    #[test]
    fn fact_variables_are_kept_apart_from_rule_variables() {
        let (d, db) = setup();
        assert_eq!(
            derived(&d, &db, "h(X, 1)", "h(Y, X) ~> (g(Y) ~> k(X))"),
            ["g(X) ~> k(1)"]
        );
    }

    #[test]
    fn guard_budget_is_an_error() {
        let (d, mut db) = setup();
        let mut d2 = d.clone();
        let items = parse_program_with(":- static spin/0. spin :- spin.", &mut d2).unwrap();
        db.extend_items(&items);
        let rule = ax(&d2, "f(X) { spin } ~> g(X)");
        assert!(matches!(
            derive(&ax(&d2, "f(1)"), &rule, &db, 1000),
            Err(SolveError::BudgetExhausted { .. })
        ));
    }
}
