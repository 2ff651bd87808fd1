//! Surface-syntax printing. Output re-parses to a structurally equal item.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::{Atom, Axiom, DGoal, Declaration, Goal, StaticClause};
use crate::term::{Term, CONS, NIL};

fn is_plain_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_escaped(f: &mut Formatter<'_>, s: &str, quote: char) -> fmt::Result {
    f.write_char(quote)?;
    for c in s.chars() {
        match c {
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c if c == quote => {
                f.write_char('\\')?;
                f.write_char(c)?;
            }
            c => f.write_char(c)?,
        }
    }
    f.write_char(quote)
}

fn write_name(f: &mut Formatter<'_>, name: &str) -> fmt::Result {
    if is_plain_name(name) {
        f.write_str(name)
    } else {
        write_escaped(f, name, '\'')
    }
}

fn write_args(f: &mut Formatter<'_>, args: &[Term]) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    f.write_char('(')?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_char(')')
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Str(s) => write_escaped(f, s, '"'),
            Term::Compound(name, args) if &**name == NIL && args.is_empty() => f.write_str("[]"),
            Term::Compound(name, args) if &**name == CONS && args.len() == 2 => {
                f.write_char('[')?;
                write!(f, "{}", args[0])?;
                let mut tail = &args[1];
                loop {
                    match tail {
                        Term::Compound(n, a) if &**n == CONS && a.len() == 2 => {
                            write!(f, ", {}", a[0])?;
                            tail = &a[1];
                        }
                        t if t.is_nil() => break,
                        t => {
                            write!(f, " | {t}")?;
                            break;
                        }
                    }
                }
                f.write_char(']')
            }
            Term::Compound(name, args) => {
                write_name(f, name)?;
                write_args(f, args)
            }
        }
    }
}

impl Display for Atom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if &*self.pred == "=" && self.args.len() == 2 {
            return write!(f, "{} = {}", self.args[0], self.args[1]);
        }
        write_name(f, &self.pred)?;
        write_args(f, &self.args)
    }
}

impl Display for Goal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Atom(a) => write!(f, "{a}"),
            Goal::True => f.write_str("true"),
            Goal::And(l, r) => {
                if matches!(**l, Goal::And(..)) {
                    write!(f, "({l}), {r}")
                } else {
                    write!(f, "{l}, {r}")
                }
            }
            Goal::Not(g) => {
                if matches!(**g, Goal::And(..)) {
                    write!(f, "\\+ ({g})")
                } else {
                    write!(f, "\\+ {g}")
                }
            }
        }
    }
}

impl Display for DGoal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            DGoal::Atom(a) => write!(f, "{a}"),
            DGoal::Static(g @ (Goal::Atom(_) | Goal::True)) => write!(f, "{g}"),
            DGoal::Static(g) => write!(f, "{{ {g} }}"),
            DGoal::And(l, r) => {
                if matches!(**l, DGoal::And(..)) {
                    write!(f, "({l}), {r}")
                } else {
                    write!(f, "{l}, {r}")
                }
            }
            DGoal::Not(g) => {
                if matches!(**g, DGoal::And(..)) {
                    write!(f, "\\+ ({g})")
                } else {
                    write!(f, "\\+ {g}")
                }
            }
        }
    }
}

impl Display for Axiom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Fact(a) => write!(f, "{a}"),
            Axiom::Rule {
                trigger,
                guard,
                consequence,
            } => {
                write!(f, "{trigger}")?;
                if *guard != Goal::True {
                    write!(f, " {{ {guard} }}")?;
                }
                match consequence.as_ref() {
                    c @ Axiom::Fact(_) => write!(f, " ~> {c}"),
                    c => write!(f, " ~> ({c})"),
                }
            }
            Axiom::Clause { head, body } => write!(f, "{head} :- {body}"),
        }
    }
}

impl Display for StaticClause {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.body {
            Goal::True => write!(f, "{}", self.head),
            body => write!(f, "{} :- {body}", self.head),
        }
    }
}

impl Display for Declaration {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, ":- {} ", self.kind.keyword())?;
        write_name(f, &self.name)?;
        write!(f, "/{}", self.arity)
    }
}
