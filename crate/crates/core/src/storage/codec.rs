//! Binary form of axioms for journal payloads.
//!
//! An axiom is reified into a term over reserved `$`-prefixed names and
//! serialized with the canonical term encoding (variables included).

use crate::lang::{Atom, Axiom, DGoal, Goal};
use crate::term::{decode_with_vars, encode_with_vars, DecodeError, Term};

fn wrap(name: &str, args: Vec<Term>) -> Term {
    Term::compound(name, args)
}

fn goal_term(g: &Goal) -> Term {
    match g {
        Goal::True => Term::atom("$true"),
        Goal::Atom(a) => wrap("$atom", vec![a.to_term()]),
        Goal::And(l, r) => wrap("$and", vec![goal_term(l), goal_term(r)]),
        Goal::Not(g) => wrap("$not", vec![goal_term(g)]),
    }
}

fn dgoal_term(g: &DGoal) -> Term {
    match g {
        DGoal::Atom(a) => wrap("$datom", vec![a.to_term()]),
        DGoal::And(l, r) => wrap("$dand", vec![dgoal_term(l), dgoal_term(r)]),
        DGoal::Not(g) => wrap("$dnot", vec![dgoal_term(g)]),
        DGoal::Static(g) => wrap("$s", vec![goal_term(g)]),
    }
}

pub fn axiom_to_term(a: &Axiom) -> Term {
    match a {
        Axiom::Fact(f) => wrap("$fact", vec![f.to_term()]),
        Axiom::Rule {
            trigger,
            guard,
            consequence,
        } => wrap(
            "$rule",
            vec![
                trigger.to_term(),
                goal_term(guard),
                axiom_to_term(consequence),
            ],
        ),
        Axiom::Clause { head, body } => wrap("$dclause", vec![head.to_term(), dgoal_term(body)]),
    }
}

fn bad(reason: &'static str) -> DecodeError {
    DecodeError { offset: 0, reason }
}

fn atom_of(t: &Term) -> Result<Atom, DecodeError> {
    Atom::from_term(t).ok_or_else(|| bad("expected an atom"))
}

fn shape(t: &Term) -> (&str, &[Term]) {
    (t.name().unwrap_or(""), t.args())
}

fn term_goal(t: &Term) -> Result<Goal, DecodeError> {
    match shape(t) {
        ("$true", []) => Ok(Goal::True),
        ("$atom", [a]) => Ok(Goal::Atom(atom_of(a)?)),
        ("$and", [l, r]) => Ok(Goal::and(term_goal(l)?, term_goal(r)?)),
        ("$not", [g]) => Ok(Goal::not(term_goal(g)?)),
        _ => Err(bad("malformed goal")),
    }
}

fn term_dgoal(t: &Term) -> Result<DGoal, DecodeError> {
    match shape(t) {
        ("$datom", [a]) => Ok(DGoal::Atom(atom_of(a)?)),
        ("$dand", [l, r]) => Ok(DGoal::and(term_dgoal(l)?, term_dgoal(r)?)),
        ("$dnot", [g]) => Ok(DGoal::not(term_dgoal(g)?)),
        ("$s", [g]) => Ok(DGoal::Static(term_goal(g)?)),
        _ => Err(bad("malformed dynamic goal")),
    }
}

pub fn term_to_axiom(t: &Term) -> Result<Axiom, DecodeError> {
    match shape(t) {
        ("$fact", [f]) => Ok(Axiom::Fact(atom_of(f)?)),
        ("$rule", [trigger, guard, consequence]) => Ok(Axiom::Rule {
            trigger: atom_of(trigger)?,
            guard: term_goal(guard)?,
            consequence: Box::new(term_to_axiom(consequence)?),
        }),
        ("$dclause", [head, body]) => Ok(Axiom::Clause {
            head: atom_of(head)?,
            body: term_dgoal(body)?,
        }),
        _ => Err(bad("malformed axiom")),
    }
}

pub fn encode_axiom(a: &Axiom, out: &mut Vec<u8>) {
    encode_with_vars(&axiom_to_term(a), out);
}

pub fn decode_axiom(bytes: &[u8], pos: &mut usize) -> Result<Axiom, DecodeError> {
    let at = *pos;
    let t = decode_with_vars(bytes, pos)?;
    term_to_axiom(&t).map_err(|e| DecodeError {
        offset: at,
        reason: e.reason,
    })
}

/// Axiom followed by an 8-byte big-endian delta.
pub fn encode_entry(a: &Axiom, delta: i64) -> Vec<u8> {
    let mut out = Vec::new();
    encode_axiom(a, &mut out);
    out.extend_from_slice(&delta.to_be_bytes());
    out
}

pub fn decode_entry(bytes: &[u8]) -> Result<(Axiom, i64), DecodeError> {
    let mut pos = 0;
    let a = decode_axiom(bytes, &mut pos)?;
    let rest = &bytes[pos..];
    let delta: [u8; 8] = rest.try_into().map_err(|_| DecodeError {
        offset: pos,
        reason: "bad delta",
    })?;
    Ok((a, i64::from_be_bytes(delta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_item, Declarations, Item};

    #[test]
    fn round_trips_nested_axioms() {
        let mut d = Declarations::standard();
        crate::lang::parse_program_with(
            ":- fact f/1, g/2. :- dynamic h/1, k/2. :- static p/1.",
            &mut d,
        )
        .unwrap();
        for src in [
            "f(1)",
            "f(X) { p(X), \\+ p(2) } ~> g(X, \"s\")",
            "f(X) ~> (g(X, Y) ~> (k(X, Y) :- h(Y), \\+ k(Y, _), { p(Y), true }))",
            "h(X) :- true",
        ] {
            let Item::Axiom(a) = parse_item(src, &mut d).unwrap().remove(0) else {
                panic!("{src}")
            };
            let bytes = encode_entry(&a, -3);
            assert_eq!(decode_entry(&bytes).unwrap(), (a, -3));
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_entry(&[0x01, 0, 0]).is_err());
        let mut bytes = Vec::new();
        encode_with_vars(&Term::atom("nope"), &mut bytes);
        bytes.extend_from_slice(&1i64.to_be_bytes());
        assert!(decode_entry(&bytes).is_err());
    }
}
