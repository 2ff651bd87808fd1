use super::ast::{
    is_builtin, Atom, Axiom, DGoal, Declaration, Declarations, Goal, Item, Kind, StaticClause,
};
use super::lexer::{tokenize, Spanned, Tok};
use super::validate::check_consequence_bindings;
use super::{LangError, LangErrorKind};
use crate::term::Term;

pub(crate) struct Parser<'d> {
    toks: Vec<Spanned>,
    pos: usize,
    decls: &'d mut Declarations,
    anon: usize,
    /// Whether fact-names may appear as dynamic goals (top-level queries).
    pub(crate) allow_facts: bool,
}

type PResult<T> = Result<T, LangError>;

impl<'d> Parser<'d> {
    pub(crate) fn new(text: &str, decls: &'d mut Declarations) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
            decls,
            anon: 0,
            allow_facts: false,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, at: (usize, usize), kind: LangErrorKind) -> LangError {
        LangError::new(kind, at.0, at.1)
    }

    fn syntax(&self, msg: impl Into<String>) -> LangError {
        self.err_at(self.here(), LangErrorKind::Syntax(msg.into()))
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax(format!("expected {what}, found {}", self.peek().describe())))
        }
    }

    /// Optional trailing `.` followed by end of input.
    pub(crate) fn finish(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Dot {
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return Err(self.syntax(format!(
                "unexpected {} after end of item",
                self.peek().describe()
            )));
        }
        Ok(())
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub(crate) fn program(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        while !self.at_eof() {
            items.extend(self.statement()?);
        }
        Ok(items)
    }

    /// One `.`-terminated statement. Declarations may list several signatures.
    pub(crate) fn statement(&mut self) -> PResult<Vec<Item>> {
        self.anon = 0;
        if *self.peek() == Tok::Neck {
            self.bump();
            let decls = self.declaration()?;
            self.expect(Tok::Dot, "`.` after declaration")?;
            return Ok(decls.into_iter().map(Item::Decl).collect());
        }
        let start = self.here();
        let item = self.axiom_like(true)?;
        if let Item::Axiom(ax) = &item {
            check_consequence_bindings(ax).map_err(|kind| self.err_at(start, kind))?;
        }
        self.expect(Tok::Dot, "`.` at end of statement")?;
        Ok(vec![item])
    }

    fn declaration(&mut self) -> PResult<Vec<Declaration>> {
        let at = self.here();
        let kind = match self.bump() {
            Tok::Name(k, false) if k == "fact" => Kind::Fact,
            Tok::Name(k, false) if k == "static" => Kind::Static,
            Tok::Name(k, false) if k == "dynamic" => Kind::Dynamic,
            other => {
                return Err(self.err_at(
                    at,
                    LangErrorKind::Syntax(format!(
                        "expected `fact`, `static` or `dynamic`, found {}",
                        other.describe()
                    )),
                ))
            }
        };
        let mut out = Vec::new();
        loop {
            let at = self.here();
            let name = match self.bump() {
                Tok::Name(n, _) => n,
                Tok::Eq => "=".to_string(),
                other => {
                    return Err(self.err_at(
                        at,
                        LangErrorKind::Syntax(format!(
                            "expected a name, found {}",
                            other.describe()
                        )),
                    ))
                }
            };
            self.expect(Tok::Slash, "`/` in signature")?;
            let arity_at = self.here();
            let arity = match self.bump() {
                Tok::Int(i) if i >= 0 => i as usize,
                other => {
                    return Err(self.err_at(
                        arity_at,
                        LangErrorKind::Syntax(format!(
                            "expected a non-negative arity, found {}",
                            other.describe()
                        )),
                    ))
                }
            };
            if name == "true" {
                return Err(self.err_at(
                    at,
                    LangErrorKind::NamespaceClash("`true` is reserved".into()),
                ));
            }
            let decl = Declaration {
                kind,
                name: name.as_str().into(),
                arity,
            };
            self.decls.declare(&decl).map_err(|existing| {
                self.err_at(
                    at,
                    LangErrorKind::NamespaceClash(format!(
                        "`{name}` is already declared {}, cannot declare it {}",
                        existing.keyword(),
                        kind.keyword()
                    )),
                )
            })?;
            out.push(decl);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    /// Parses an axiom or, at top level, a static clause.
    pub(crate) fn axiom_like(&mut self, top: bool) -> PResult<Item> {
        let at = self.here();
        let head = self.atom()?;
        match self.peek() {
            Tok::LBrace | Tok::Arrow => {
                self.require_kind(&head, at, Kind::Fact, "rule trigger")?;
                let guard = if *self.peek() == Tok::LBrace {
                    self.bump();
                    let g = self.goal()?;
                    self.expect(Tok::RBrace, "`}` after guard")?;
                    g
                } else {
                    Goal::True
                };
                self.expect(Tok::Arrow, "`~>` after guard")?;
                let consequence = self.consequence()?;
                Ok(Item::Axiom(Axiom::rule(head, guard, consequence)))
            }
            Tok::Neck => {
                self.bump();
                match self.classify(&head, at)? {
                    Kind::Dynamic => {
                        let body = self.dgoal()?;
                        Ok(Item::Axiom(Axiom::clause(head, body)))
                    }
                    Kind::Static if top => {
                        self.check_not_builtin(&head, at)?;
                        let body = self.goal()?;
                        Ok(Item::Static(StaticClause { head, body }))
                    }
                    Kind::Static => Err(self.err_at(
                        at,
                        LangErrorKind::NamespaceClash(format!(
                            "static clause for `{}` cannot be a rule consequence",
                            head.pred
                        )),
                    )),
                    Kind::Fact => Err(self.err_at(
                        at,
                        LangErrorKind::NamespaceClash(format!(
                            "`{}` is a fact-name; facts cannot have a body",
                            head.pred
                        )),
                    )),
                }
            }
            _ => match self.classify(&head, at)? {
                Kind::Fact => Ok(Item::Axiom(Axiom::Fact(head))),
                Kind::Dynamic => Ok(Item::Axiom(Axiom::clause(head, DGoal::truth()))),
                Kind::Static if top => {
                    self.check_not_builtin(&head, at)?;
                    Ok(Item::Static(StaticClause::fact(head)))
                }
                Kind::Static => Err(self.err_at(
                    at,
                    LangErrorKind::NamespaceClash(format!(
                        "static predicate `{}` cannot be a rule consequence",
                        head.pred
                    )),
                )),
            },
        }
    }

    fn consequence(&mut self) -> PResult<Axiom> {
        let item = if *self.peek() == Tok::LParen {
            self.bump();
            let item = self.axiom_like(false)?;
            self.expect(Tok::RParen, "`)` after consequence")?;
            item
        } else {
            self.axiom_like(false)?
        };
        match item {
            Item::Axiom(a) => Ok(a),
            _ => unreachable!("non-top axiom_like yields axioms"),
        }
    }

    fn check_not_builtin(&self, head: &Atom, at: (usize, usize)) -> PResult<()> {
        if is_builtin(&head.pred, head.arity()) {
            return Err(self.err_at(
                at,
                LangErrorKind::NamespaceClash(format!(
                    "cannot add clauses to builtin `{}/{}`",
                    head.pred,
                    head.arity()
                )),
            ));
        }
        Ok(())
    }

    /// Looks up the kind of `atom`, checking declaration and arity.
    fn classify(&self, atom: &Atom, at: (usize, usize)) -> PResult<Kind> {
        classify(self.decls, atom).map_err(|k| self.err_at(at, k))
    }

    fn require_kind(&self, atom: &Atom, at: (usize, usize), want: Kind, role: &str) -> PResult<()> {
        let kind = self.classify(atom, at)?;
        if kind != want {
            return Err(self.err_at(
                at,
                LangErrorKind::NamespaceClash(format!(
                    "{role} `{}` must be declared {}, but is declared {}",
                    atom.pred,
                    want.keyword(),
                    kind.keyword()
                )),
            ));
        }
        Ok(())
    }

    fn atom(&mut self) -> PResult<Atom> {
        let at = self.here();
        let t = self.term()?;
        match t {
            Term::Compound(pred, args) => Ok(Atom {
                pred,
                args: args.to_vec(),
            }),
            other => Err(self.err_at(
                at,
                LangErrorKind::Syntax(format!("expected an atom, found `{other}`")),
            )),
        }
    }

    pub(crate) fn goal(&mut self) -> PResult<Goal> {
        let mut parts = vec![self.literal()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            parts.push(self.literal()?);
        }
        Ok(Goal::conj(parts))
    }

    fn literal(&mut self) -> PResult<Goal> {
        let at = self.here();
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Goal::not(self.literal()?))
            }
            Tok::LParen => {
                self.bump();
                let g = self.goal()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(g)
            }
            Tok::Name(n, false) if n == "true" && *self.peek_at(1) != Tok::Eq => {
                self.bump();
                Ok(Goal::True)
            }
            _ => {
                let atom = self.atom_or_equation()?;
                match self.classify(&atom, at)? {
                    Kind::Static => Ok(Goal::Atom(atom)),
                    kind => Err(self.err_at(
                        at,
                        LangErrorKind::NonStaticGuard {
                            name: atom.pred.to_string(),
                            arity: atom.arity(),
                            kind,
                        },
                    )),
                }
            }
        }
    }

    fn atom_or_equation(&mut self) -> PResult<Atom> {
        let at = self.here();
        let left = self.term()?;
        if *self.peek() == Tok::Eq {
            self.bump();
            let right = self.term()?;
            return Ok(Atom::new("=", vec![left, right]));
        }
        match left {
            Term::Compound(pred, args) => Ok(Atom {
                pred,
                args: args.to_vec(),
            }),
            other => Err(self.err_at(
                at,
                LangErrorKind::Syntax(format!("expected a goal, found `{other}`")),
            )),
        }
    }

    pub(crate) fn dgoal(&mut self) -> PResult<DGoal> {
        let mut parts = vec![self.dliteral()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            parts.push(self.dliteral()?);
        }
        let mut acc = parts.pop().unwrap();
        while let Some(g) = parts.pop() {
            acc = DGoal::and(g, acc);
        }
        Ok(acc)
    }

    fn dliteral(&mut self) -> PResult<DGoal> {
        let at = self.here();
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(DGoal::not(self.dliteral()?))
            }
            Tok::LParen => {
                self.bump();
                let g = self.dgoal()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(g)
            }
            Tok::LBrace => {
                self.bump();
                let g = self.goal()?;
                self.expect(Tok::RBrace, "`}` after static goal")?;
                Ok(DGoal::Static(g))
            }
            Tok::Name(n, false) if n == "true" && *self.peek_at(1) != Tok::Eq => {
                self.bump();
                Ok(DGoal::truth())
            }
            _ => {
                let atom = self.atom_or_equation()?;
                match self.classify(&atom, at)? {
                    Kind::Dynamic => Ok(DGoal::Atom(atom)),
                    Kind::Static => Ok(DGoal::Static(Goal::Atom(atom))),
                    Kind::Fact if self.allow_facts => Ok(DGoal::Atom(atom)),
                    Kind::Fact => Err(self.err_at(
                        at,
                        LangErrorKind::NamespaceClash(format!(
                            "`{}` is a fact-name; only dynamic and static predicates can be queried",
                            atom.pred
                        )),
                    )),
                }
            }
        }
    }

    pub(crate) fn term(&mut self) -> PResult<Term> {
        let at = self.here();
        match self.bump() {
            Tok::Var(v) => {
                if v == "_" {
                    self.anon += 1;
                    Ok(Term::var(&format!("_{}", self.anon)))
                } else {
                    Ok(Term::var(&v))
                }
            }
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Str(s) => Ok(Term::Str(s)),
            Tok::LBracket => self.list_rest(),
            Tok::Name(name, _) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.term()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen, "`)` or `,` in argument list")?;
                    Ok(Term::Compound(name.into(), args.into()))
                } else {
                    Ok(Term::Compound(name.into(), Vec::new().into()))
                }
            }
            other => Err(self.err_at(
                at,
                LangErrorKind::Syntax(format!("expected a term, found {}", other.describe())),
            )),
        }
    }

    fn list_rest(&mut self) -> PResult<Term> {
        if *self.peek() == Tok::RBracket {
            self.bump();
            return Ok(Term::nil());
        }
        let mut items = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            items.push(self.term()?);
        }
        let tail = if *self.peek() == Tok::Bar {
            self.bump();
            self.term()?
        } else {
            Term::nil()
        };
        self.expect(Tok::RBracket, "`]` to close list")?;
        Ok(Term::list_with_tail(items, tail))
    }
}

/// Kind of a declared atom, or the error describing why it is not usable.
pub(crate) fn classify(decls: &Declarations, atom: &Atom) -> Result<Kind, LangErrorKind> {
    let Some(kind) = decls.kind_of(&atom.pred) else {
        return Err(LangErrorKind::UndeclaredSymbol {
            name: atom.pred.to_string(),
            arity: atom.arity(),
        });
    };
    let arities = decls.arities(&atom.pred);
    if !arities.contains(&atom.arity()) {
        return Err(LangErrorKind::ArityMismatch {
            name: atom.pred.to_string(),
            declared: arities.to_vec(),
            found: atom.arity(),
        });
    }
    Ok(kind)
}
