//! Textual syntax for programs: declarations, facts, guarded rules, dynamic
//! clauses, static clauses and goals.
//!
//! ```text
//! :- fact f/1, g/1.          % declarations precede use
//! :- dynamic h/1.
//! :- static p/1.
//! p(1).                      % static clause (head declared static)
//! f(X) { p(X) } ~> g(X).     % rule: trigger { guard } ~> consequence
//! g(X) ~> (h(X) :- true).    % rule emitting a dynamic clause
//! ```
//!
//! Variables start with an uppercase letter or `_`; `_` alone is anonymous.
//! Strings are double-quoted with `\"`, `\\`, `\n` and `\t` escapes. Lists use
//! `[a, b | T]`. Goals combine with `,` and `\+`; `true` is the trivial goal.
//! Inside a dynamic body, `{ ... }` embeds a compound static goal.

mod ast;
mod lexer;
mod parser;
mod print;
mod validate;

use thiserror::Error;

pub use ast::{
    is_builtin, Atom, Axiom, DGoal, Declaration, Declarations, Goal, Item, Kind, NameKey,
    StaticClause, BUILTINS,
};
pub use validate::{validate_axiom, validate_static_clause};

use crate::term::Term;
use parser::Parser;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("undeclared symbol `{name}/{arity}`")]
    UndeclaredSymbol { name: String, arity: usize },
    #[error("arity mismatch: `{name}` is declared with arity {declared:?} but used with {found}")]
    ArityMismatch {
        name: String,
        declared: Vec<usize>,
        found: usize,
    },
    #[error("guards and static bodies may only call static predicates; `{name}/{arity}` is declared {}", kind.keyword())]
    NonStaticGuard {
        name: String,
        arity: usize,
        kind: Kind,
    },
    #[error("variable `{var}` of the consequence is not bound by the trigger or guard")]
    UnboundConsequenceVariable { var: String },
    #[error("namespace clash: {0}")]
    NamespaceClash(String),
}

impl LangErrorKind {
    /// Stable short name used in API error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            LangErrorKind::Syntax(_) => "SyntaxError",
            LangErrorKind::UndeclaredSymbol { .. } => "UndeclaredSymbol",
            LangErrorKind::ArityMismatch { .. } => "ArityMismatch",
            LangErrorKind::NonStaticGuard { .. } => "NonStaticGuard",
            LangErrorKind::UnboundConsequenceVariable { .. } => "UnboundConsequenceVariable",
            LangErrorKind::NamespaceClash(_) => "NamespaceClash",
        }
    }
}

/// A load-time error with its source position (1-based; 0:0 when the item
/// did not come from text).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct LangError {
    pub kind: LangErrorKind,
    pub line: usize,
    pub column: usize,
}

impl LangError {
    pub fn new(kind: LangErrorKind, line: usize, column: usize) -> Self {
        LangError { kind, line, column }
    }
}

impl Declarations {
    /// Builtins plus the library predicates of the prelude.
    pub fn standard() -> Self {
        let mut decls = Declarations::with_builtins();
        parse_program_with(crate::static_engine::PRELUDE, &mut decls).expect("prelude parses");
        decls
    }
}

/// Parses a whole program against the standard declarations.
pub fn parse_program(text: &str) -> Result<Vec<Item>, LangError> {
    parse_program_with(text, &mut Declarations::standard())
}

/// Parses a program, registering its declarations into `decls`. On error
/// `decls` may hold declarations from statements before the failing one.
pub fn parse_program_with(text: &str, decls: &mut Declarations) -> Result<Vec<Item>, LangError> {
    Parser::new(text, decls)?.program()
}

/// Parses exactly one statement; the trailing `.` is optional.
pub fn parse_item(text: &str, decls: &mut Declarations) -> Result<Vec<Item>, LangError> {
    let mut with_dot = text.trim_end().to_string();
    if !with_dot.ends_with('.') {
        with_dot.push('.');
    }
    let mut p = Parser::new(&with_dot, decls)?;
    let items = p.statement()?;
    p.finish()?;
    Ok(items)
}

pub fn parse_term(text: &str) -> Result<Term, LangError> {
    let mut scratch = Declarations::default();
    let mut p = Parser::new(text, &mut scratch)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_goal(text: &str, decls: &Declarations) -> Result<Goal, LangError> {
    let mut decls = decls.clone();
    let mut p = Parser::new(text, &mut decls)?;
    let g = p.goal()?;
    p.finish()?;
    Ok(g)
}

pub fn parse_dgoal(text: &str, decls: &Declarations) -> Result<DGoal, LangError> {
    let mut decls = decls.clone();
    let mut p = Parser::new(text, &mut decls)?;
    let g = p.dgoal()?;
    p.finish()?;
    Ok(g)
}

/// Parses a top-level query. Unlike clause bodies, a query may also ask
/// for stored facts by naming a fact-name.
pub fn parse_query(text: &str, decls: &Declarations) -> Result<DGoal, LangError> {
    let mut decls = decls.clone();
    let mut p = Parser::new(text, &mut decls)?;
    p.allow_facts = true;
    let g = p.dgoal()?;
    p.finish()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Var;

    fn decls(src: &str) -> Declarations {
        let mut d = Declarations::standard();
        parse_program_with(src, &mut d).unwrap();
        d
    }

    #[test]
    fn rule_without_guard() {
        let items = parse_program(":- fact f/1.  :- fact g/1.  f(X) ~> g(X).").unwrap();
        assert_eq!(items.len(), 3);
        assert!(matches!(items[0], Item::Decl(_)));
        assert_eq!(
            items[2],
            Item::Axiom(Axiom::rule(
                Atom::new("f", vec![Term::var("X")]),
                Goal::True,
                Axiom::fact("g", vec![Term::var("X")])
            ))
        );
    }

    #[test]
    fn dynamic_clause_with_trivial_body() {
        let items = parse_program(":- dynamic timeline/3. timeline(U,T,E) :- true.").unwrap();
        assert_eq!(
            items[1],
            Item::Axiom(Axiom::clause(
                Atom::new(
                    "timeline",
                    vec![Term::var("U"), Term::var("T"), Term::var("E")]
                ),
                DGoal::truth()
            ))
        );
    }

    #[test]
    fn undeclared_guard_predicate() {
        let err = parse_program(":- fact f/1, g/1.\nf(X) { p(Y) } ~> g(X).").unwrap_err();
        assert!(
            matches!(err.kind, LangErrorKind::UndeclaredSymbol { ref name, arity: 1 } if name == "p")
        );
        assert_eq!((err.line, err.column), (2, 8));
    }

    #[test]
    fn parse_term_examples() {
        let t = parse_term(r#"tweeted(user("bob"), 7, text(plain("hi")))"#).unwrap();
        assert_eq!(
            t,
            Term::compound(
                "tweeted",
                vec![
                    Term::compound("user", vec![Term::string("bob")]),
                    Term::Int(7),
                    Term::compound(
                        "text",
                        vec![Term::compound("plain", vec![Term::string("hi")])]
                    ),
                ]
            )
        );
        assert_eq!(parse_term("X").unwrap(), Term::Var(Var::new("X")));
        assert_eq!(parse_term("-5").unwrap(), Term::Int(-5));
        assert_eq!(
            parse_term("[1, 2 | T]").unwrap(),
            Term::list_with_tail([Term::Int(1), Term::Int(2)], Term::var("T"))
        );
        assert!(parse_term("f(").is_err());
        assert!(parse_term("f()").is_err());
    }

    #[test]
    fn print_examples() {
        let t = parse_term(r#"f(g(X,1),"a")"#).unwrap();
        assert_eq!(parse_term(&t.to_string()).unwrap(), t);

        let d = decls(":- fact f/1, g/1. :- dynamic h/1. :- static p/1.");
        let guarded = parse_item("f(X) { true } ~> g(X)", &mut d.clone()).unwrap();
        assert_eq!(guarded[0].to_string(), "f(X) ~> g(X).");
        let guarded = parse_item("f(X) { p(X), \\+ p(2) } ~> g(X)", &mut d.clone()).unwrap();
        assert_eq!(guarded[0].to_string(), "f(X) { p(X), \\+ p(2) } ~> g(X).");

        let nested = parse_item("f(X) ~> g(X) ~> h(X) :- true", &mut d.clone()).unwrap();
        assert_eq!(nested[0].to_string(), "f(X) ~> (g(X) ~> (h(X) :- true)).");
    }

    #[test]
    fn rejects_invariant_violations() {
        let src = ":- fact f/1, g/2. :- dynamic h/1. :- static p/1.\n";
        let kind = |s: &str| parse_program(&format!("{src}{s}")).unwrap_err().kind;
        assert!(
            matches!(kind("f(X) ~> g(X, Y)."), LangErrorKind::UnboundConsequenceVariable { ref var } if var == "Y")
        );
        assert!(matches!(
            kind("f(X) { h(X) } ~> g(X, X)."),
            LangErrorKind::NonStaticGuard { .. }
        ));
        assert!(matches!(
            kind("f(X, Y)."),
            LangErrorKind::ArityMismatch { .. }
        ));
        assert!(matches!(
            kind(":- dynamic f/1."),
            LangErrorKind::NamespaceClash(_)
        ));
        assert!(matches!(
            kind("f(X) :- true."),
            LangErrorKind::NamespaceClash(_)
        ));
        assert!(matches!(
            kind("charCodes(a, b)."),
            LangErrorKind::NamespaceClash(_)
        ));
        assert!(matches!(
            kind("f(X) ~> p(X)."),
            LangErrorKind::NamespaceClash(_)
        ));
        assert!(matches!(kind("f(1) g"), LangErrorKind::Syntax(_)));
        // guard-bound variables are fine, negated ones are not
        assert!(parse_program(&format!("{src}f(X) {{ p(Y) }} ~> g(X, Y).")).is_ok());
        assert!(matches!(
            kind("f(X) { \\+ p(Y) } ~> g(X, Y)."),
            LangErrorKind::UnboundConsequenceVariable { .. }
        ));
        // inner rule triggers bind their own variables
        assert!(parse_program(&format!("{src}f(X) ~> (f(Y) ~> g(X, Y)).")).is_ok());
    }

    #[test]
    fn dynamic_bodies_embed_static_goals() {
        let d = decls(":- dynamic h/1, k/1. :- static p/1.");
        let g = parse_dgoal("h(X), p(X), { p(X), \\+ p(1) }, \\+ k(X)", &d).unwrap();
        let printed = g.to_string();
        assert_eq!(printed, "h(X), p(X), { p(X), \\+ p(1) }, \\+ k(X)");
        assert_eq!(parse_dgoal(&printed, &d).unwrap(), g);
        assert!(matches!(
            parse_dgoal("f(1)", &decls(":- fact f/1."))
                .unwrap_err()
                .kind,
            LangErrorKind::NamespaceClash(_)
        ));
    }

    #[test]
    fn validate_programmatic_axiom() {
        let d = decls(":- fact f/1, g/1. :- dynamic h/1.");
        let bad = Axiom::rule(
            Atom::new("f", vec![Term::var("X")]),
            Goal::atom("h", vec![Term::var("X")]),
            Axiom::fact("g", vec![Term::var("X")]),
        );
        assert!(matches!(
            validate_axiom(&d, &bad).unwrap_err().kind,
            LangErrorKind::NonStaticGuard { .. }
        ));
        let good = Axiom::rule(
            Atom::new("f", vec![Term::var("X")]),
            Goal::atom("member", vec![Term::var("X"), Term::list([Term::Int(1)])]),
            Axiom::fact("g", vec![Term::var("X")]),
        );
        validate_axiom(&d, &good).unwrap();
    }

    #[test]
    fn anonymous_variables_are_distinct_and_stable() {
        let d = decls(":- fact f/2.");
        let a = parse_item("f(_, _)", &mut d.clone()).unwrap();
        let b = parse_item("f(_, _)", &mut d.clone()).unwrap();
        assert_eq!(a, b);
        let Item::Axiom(Axiom::Fact(atom)) = &a[0] else {
            panic!()
        };
        assert_ne!(atom.args[0], atom.args[1]);
    }

    #[test]
    fn quoted_names_round_trip() {
        let t = Term::compound("hello world", vec![Term::compound(".", vec![Term::Int(1)])]);
        let printed = t.to_string();
        assert_eq!(printed, "'hello world'('.'(1))");
        assert_eq!(parse_term(&printed).unwrap(), t);
    }
}
