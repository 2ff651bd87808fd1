//! `charCodes/2` and the `parse/3` grammar interpreter.
//!
//! Grammar bodies are terms:
//!
//! | body          | consumes                                        |
//! |---------------|-------------------------------------------------|
//! | `eps`         | nothing                                         |
//! | `seq(A, B)`   | `A` then `B`                                    |
//! | `t(Code)`     | one code unifying with `Code`                   |
//! | `cond(V, G)`  | one code `V` for which the static goal `G` holds |
//! | `nt(Sym)`     | a body `B` of some clause `prod(Sym, B)`        |
//! | `goal(G)`     | nothing; runs the static goal `G`               |
//!
//! Goal terms use `true`, `not(G)` and `','(A, B)` for the connectives.

use super::{Cont, Flow, Machine, SolveError};
use crate::lang::{Atom, Goal};
use crate::term::Term;

fn type_error(builtin: &'static str, message: impl Into<String>) -> SolveError {
    SolveError::BuiltinTypeError {
        builtin,
        message: message.into(),
    }
}

/// Unifies and, on success, continues; bindings are undone afterwards.
fn unify_then<'a>(m: &mut Machine<'a>, a: &Term, b: &Term, k: Cont<'_, 'a>) -> Flow {
    let mark = m.mark();
    if m.unify(a, b) {
        let r = k(m);
        m.undo(mark);
        r
    } else {
        Ok(())
    }
}

/// `charCodes(S, Cs)`: `S` is a string and `Cs` its list of Unicode code points.
pub(super) fn char_codes<'a>(m: &mut Machine<'a>, s: &Term, cs: &Term, k: Cont<'_, 'a>) -> Flow {
    let s_val = m.resolve(s);
    match &s_val {
        Term::Str(text) => unify_then(m, &Term::code_list(text), cs, k),
        Term::Var(_) => {
            let codes = m.resolve(cs);
            let Some(items) = codes.list_items() else {
                return Err(type_error(
                    "charCodes/2",
                    format!("expected a code list, got `{codes}`"),
                )
                .into());
            };
            let mut text = String::new();
            for item in items {
                let ch = match item {
                    Term::Int(i) => u32::try_from(*i).ok().and_then(char::from_u32),
                    Term::Var(_) => {
                        return Err(type_error("charCodes/2", "code list is not ground").into())
                    }
                    _ => None,
                };
                match ch {
                    Some(c) => text.push(c),
                    None => {
                        return Err(type_error(
                            "charCodes/2",
                            format!("`{item}` is not a character code"),
                        )
                        .into())
                    }
                }
            }
            unify_then(m, &s_val, &Term::Str(text), k)
        }
        other => Err(type_error("charCodes/2", format!("expected a string, got `{other}`")).into()),
    }
}

/// `parse(Body, In, Rest)`: `In` starts with a phrase of `Body`, followed by `Rest`.
pub(super) fn parse<'a>(
    m: &mut Machine<'a>,
    body: &Term,
    input: &Term,
    rest: &Term,
    k: Cont<'_, 'a>,
) -> Flow {
    stacker::maybe_grow(super::RED_ZONE, super::STACK_CHUNK, || {
        m.step()?;
        let body = m.resolve(body);
        match (body.name(), body.args()) {
            (Some("eps"), []) => unify_then(m, input, rest, k),
            (Some("seq"), [a, b]) => {
                let mid = m.fresh_var("Mid");
                parse(m, a, input, &mid, &mut |m: &mut Machine<'a>| {
                    parse(m, b, &mid, rest, k)
                })
            }
            (Some("t"), [code]) => unify_then(m, input, &Term::cons(code.clone(), rest.clone()), k),
            (Some("cond"), [v, g]) => {
                let goal = term_to_goal(&m.resolve(g))?;
                unify_then(
                    m,
                    input,
                    &Term::cons(v.clone(), rest.clone()),
                    &mut |m: &mut Machine<'a>| m.solve(&goal, k),
                )
            }
            (Some("nt"), [sym]) => {
                let b = m.fresh_var("Body");
                let lookup = Atom::new("prod", vec![sym.clone(), b.clone()]);
                m.solve_atom(&lookup, &mut |m: &mut Machine<'a>| {
                    parse(m, &b, input, rest, k)
                })
            }
            (Some("goal"), [g]) => {
                let goal = term_to_goal(&m.resolve(g))?;
                unify_then(m, input, rest, &mut |m: &mut Machine<'a>| m.solve(&goal, k))
            }
            _ => Err(type_error("parse/3", format!("`{body}` is not a grammar body")).into()),
        }
    })
}

/// Reads a goal written as a term.
pub(crate) fn term_to_goal(t: &Term) -> Result<Goal, SolveError> {
    match t {
        Term::Compound(n, args) if &**n == "true" && args.is_empty() => Ok(Goal::True),
        Term::Compound(n, args) if &**n == "not" && args.len() == 1 => {
            Ok(Goal::not(term_to_goal(&args[0])?))
        }
        Term::Compound(n, args) if &**n == "," && args.len() == 2 => {
            Ok(Goal::and(term_to_goal(&args[0])?, term_to_goal(&args[1])?))
        }
        Term::Compound(n, args) => Ok(Goal::Atom(Atom {
            pred: n.clone(),
            args: args.to_vec(),
        })),
        other => Err(type_error("parse/3", format!("`{other}` is not a goal"))),
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::lang::{parse_goal, parse_program_with, Declarations};

    fn setup(src: &str) -> (StaticDb, Declarations) {
        let mut decls = Declarations::standard();
        let items = parse_program_with(src, &mut decls).unwrap();
        let mut db = StaticDb::with_prelude();
        db.extend_items(&items);
        (db, decls)
    }

    fn first(db: &StaticDb, d: &Declarations, goal: &str, var: &str) -> Option<Term> {
        let g = parse_goal(goal, d).unwrap();
        solve_all(db, &g, DEFAULT_BUDGET)
            .unwrap()
            .first()
            .map(|s| s.get(&Var::new(var)).cloned().unwrap_or(Term::var(var)))
    }

    #[test]
    fn char_codes_both_directions() {
        let (db, d) = setup("");
        assert_eq!(
            first(&db, &d, r#"charCodes("hé", X)"#, "X"),
            Some(Term::list([Term::Int(104), Term::Int(233)]))
        );
        assert_eq!(
            first(&db, &d, "charCodes(X, [104, 105])", "X"),
            Some(Term::string("hi"))
        );
        assert_eq!(first(&db, &d, r#"charCodes("a", [98])"#, "X"), None);
        let g = parse_goal("charCodes(X, Y)", &d).unwrap();
        assert!(matches!(
            solve_all(&db, &g, DEFAULT_BUDGET),
            Err(SolveError::BuiltinTypeError { .. })
        ));
        let g = parse_goal("charCodes(f, Y)", &d).unwrap();
        assert!(solve_all(&db, &g, DEFAULT_BUDGET).is_err());
    }

    const AB_GRAMMAR: &str = r#"
        :- static prod/2, isdigit/1.
        isdigit(C) :- member(C, [48, 49, 50]).
        prod(s, seq(t(97), nt(s))).
        prod(s, eps).
        prod(num(N), seq(cond(C, isdigit(C)), seq(nt(digits(Cs)), goal(charCodes(N, [C | Cs]))))).
        prod(digits([C | Cs]), seq(cond(C, isdigit(C)), nt(digits(Cs)))).
        prod(digits([]), eps).
    "#;

    #[test]
    fn parse_recognizes_and_enumerates_splits() {
        let (db, d) = setup(AB_GRAMMAR);
        let g = parse_goal("charCodes(\"aaa\", In), parse(nt(s), In, [])", &d).unwrap();
        assert_eq!(solve_all(&db, &g, DEFAULT_BUDGET).unwrap().len(), 1);
        let g = parse_goal("charCodes(\"aab\", In), parse(nt(s), In, R)", &d).unwrap();
        let rests: Vec<String> = solve_all(&db, &g, DEFAULT_BUDGET)
            .unwrap()
            .iter()
            .map(|s| s.get(&Var::new("R")).unwrap().to_string())
            .collect();
        assert_eq!(rests, ["[98]", "[97, 98]", "[97, 97, 98]"]);
    }

    #[test]
    fn parse_with_conditions_and_goals() {
        let (db, d) = setup(AB_GRAMMAR);
        assert_eq!(
            first(
                &db,
                &d,
                "charCodes(\"120\", In), parse(nt(num(N)), In, [])",
                "N"
            ),
            Some(Term::string("120"))
        );
        assert_eq!(
            first(
                &db,
                &d,
                "charCodes(\"13\", In), parse(nt(num(N)), In, [])",
                "N"
            ),
            None
        );
    }

    #[test]
    fn parse_rejects_malformed_bodies() {
        let (db, d) = setup(AB_GRAMMAR);
        let g = parse_goal("parse(bogus, [], [])", &d).unwrap();
        assert!(matches!(
            solve_all(&db, &g, DEFAULT_BUDGET),
            Err(SolveError::BuiltinTypeError {
                builtin: "parse/3",
                ..
            })
        ));
    }

    #[test]
    fn goal_terms() {
        let g =
            super::term_to_goal(&crate::lang::parse_term("','(not(p(X)), true)").unwrap()).unwrap();
        assert_eq!(
            g,
            Goal::and(Goal::not(Goal::atom("p", vec![Term::var("X")])), Goal::True)
        );
    }
}
