use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::term::{canonical_encode, SubjectKey, Term, Var};

/// The three predicate namespaces of a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Fact,
    Static,
    Dynamic,
}

impl Kind {
    pub fn keyword(self) -> &'static str {
        match self {
            Kind::Fact => "fact",
            Kind::Static => "static",
            Kind::Dynamic => "dynamic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Declaration {
    pub kind: Kind,
    pub name: Arc<str>,
    pub arity: usize,
}

/// Predicates implemented by the engine itself. They are implicitly
/// declared static and may not be given clauses.
pub const BUILTINS: &[(&str, usize)] = &[("charCodes", 2), ("parse", 3), ("=", 2)];

pub fn is_builtin(name: &str, arity: usize) -> bool {
    BUILTINS.iter().any(|&(n, a)| n == name && a == arity)
}

/// The declaration environment a program is checked against.
///
/// A name belongs to exactly one namespace; within it, several arities
/// may be declared.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Declarations {
    names: BTreeMap<Arc<str>, (Kind, Vec<usize>)>,
}

impl Declarations {
    /// An environment holding only the builtins.
    pub fn with_builtins() -> Self {
        let mut d = Declarations::default();
        for &(name, arity) in BUILTINS {
            d.names
                .entry(name.into())
                .or_insert((Kind::Static, Vec::new()))
                .1
                .push(arity);
        }
        d
    }

    /// Adds a declaration. Redeclaring the same signature is a no-op; using a
    /// name from another namespace is an error (returns the existing kind).
    pub fn declare(&mut self, decl: &Declaration) -> Result<(), Kind> {
        match self.names.get_mut(&decl.name) {
            Some((kind, _)) if *kind != decl.kind => Err(*kind),
            Some((_, arities)) => {
                if !arities.contains(&decl.arity) {
                    arities.push(decl.arity);
                }
                Ok(())
            }
            None => {
                self.names
                    .insert(decl.name.clone(), (decl.kind, vec![decl.arity]));
                Ok(())
            }
        }
    }

    pub fn kind_of(&self, name: &str) -> Option<Kind> {
        self.names.get(name).map(|(k, _)| *k)
    }

    pub fn arities(&self, name: &str) -> &[usize] {
        self.names
            .get(name)
            .map(|(_, a)| a.as_slice())
            .unwrap_or(&[])
    }

    pub fn is_declared(&self, kind: Kind, name: &str, arity: usize) -> bool {
        matches!(self.names.get(name), Some((k, a)) if *k == kind && a.contains(&arity))
    }

    pub fn iter(&self) -> impl Iterator<Item = Declaration> + '_ {
        self.names.iter().flat_map(|(name, (kind, arities))| {
            arities.iter().map(move |&arity| Declaration {
                kind: *kind,
                name: name.clone(),
                arity,
            })
        })
    }
}

/// A predicate or fact-name applied to arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Arc<str>,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Atom {
            pred: pred.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn to_term(&self) -> Term {
        Term::Compound(self.pred.clone(), self.args.as_slice().into())
    }

    pub fn from_term(t: &Term) -> Option<Atom> {
        match t {
            Term::Compound(n, a) => Some(Atom {
                pred: n.clone(),
                args: a.to_vec(),
            }),
            _ => None,
        }
    }

    /// Canonical key of the first argument, if there is one and it is ground.
    pub fn subject(&self) -> Option<SubjectKey> {
        self.args.first().and_then(|t| canonical_encode(t).ok())
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Atom {
        Atom {
            pred: self.pred.clone(),
            args: self.args.iter().map(|a| a.map_vars(f)).collect(),
        }
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }
}

/// Static goal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Goal {
    Atom(Atom),
    And(Box<Goal>, Box<Goal>),
    Not(Box<Goal>),
    True,
}

impl Goal {
    pub fn and(a: Goal, b: Goal) -> Goal {
        Goal::And(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: Goal) -> Goal {
        Goal::Not(Box::new(g))
    }

    pub fn atom(pred: &str, args: Vec<Term>) -> Goal {
        Goal::Atom(Atom::new(pred, args))
    }

    /// Right-nested conjunction of `goals`; `True` when empty.
    pub fn conj(goals: impl IntoIterator<Item = Goal>) -> Goal {
        let mut goals: Vec<Goal> = goals.into_iter().collect();
        let Some(mut acc) = goals.pop() else {
            return Goal::True;
        };
        while let Some(g) = goals.pop() {
            acc = Goal::and(g, acc);
        }
        acc
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Goal {
        match self {
            Goal::Atom(a) => Goal::Atom(a.map_vars(f)),
            Goal::And(a, b) => Goal::And(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Goal::Not(g) => Goal::Not(Box::new(g.map_vars(f))),
            Goal::True => Goal::True,
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Goal::Atom(a) => a.collect_vars(out),
            Goal::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Goal::Not(g) => g.collect_vars(out),
            Goal::True => {}
        }
    }

    /// Variables that a solution can bind: those outside any negation.
    pub fn binding_vars(&self, out: &mut Vec<Var>) {
        match self {
            Goal::Atom(a) => a.collect_vars(out),
            Goal::And(a, b) => {
                a.binding_vars(out);
                b.binding_vars(out);
            }
            Goal::Not(_) | Goal::True => {}
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn walk<'a>(g: &'a Goal, out: &mut Vec<&'a Atom>) {
            match g {
                Goal::Atom(a) => out.push(a),
                Goal::And(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Goal::Not(g) => walk(g, out),
                Goal::True => {}
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn max_scope(&self) -> u32 {
        let mut vars = Vec::new();
        self.collect_vars(&mut vars);
        vars.iter().map(|v| v.scope).max().unwrap_or(0)
    }
}

/// Dynamic goal, evaluated against the tank at query time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DGoal {
    Atom(Atom),
    And(Box<DGoal>, Box<DGoal>),
    Not(Box<DGoal>),
    Static(Goal),
}

impl DGoal {
    pub fn and(a: DGoal, b: DGoal) -> DGoal {
        DGoal::And(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: DGoal) -> DGoal {
        DGoal::Not(Box::new(g))
    }

    pub fn atom(pred: &str, args: Vec<Term>) -> DGoal {
        DGoal::Atom(Atom::new(pred, args))
    }

    pub fn truth() -> DGoal {
        DGoal::Static(Goal::True)
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, DGoal::Static(Goal::True))
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> DGoal {
        match self {
            DGoal::Atom(a) => DGoal::Atom(a.map_vars(f)),
            DGoal::And(a, b) => DGoal::And(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            DGoal::Not(g) => DGoal::Not(Box::new(g.map_vars(f))),
            DGoal::Static(g) => DGoal::Static(g.map_vars(f)),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            DGoal::Atom(a) => a.collect_vars(out),
            DGoal::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            DGoal::Not(g) => g.collect_vars(out),
            DGoal::Static(g) => g.collect_vars(out),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    /// Every dynamic atom in the goal, in evaluation order.
    pub fn datoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn walk<'a>(g: &'a DGoal, out: &mut Vec<&'a Atom>) {
            match g {
                DGoal::Atom(a) => out.push(a),
                DGoal::And(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                DGoal::Not(g) => walk(g, out),
                DGoal::Static(_) => {}
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn static_atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn walk<'a>(g: &'a DGoal, out: &mut Vec<&'a Atom>) {
            match g {
                DGoal::Atom(_) => {}
                DGoal::And(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                DGoal::Not(g) => walk(g, out),
                DGoal::Static(g) => out.extend(g.atoms()),
            }
        }
        walk(self, &mut out);
        out
    }
}

/// The unit stored in the tank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    Fact(Atom),
    Rule {
        trigger: Atom,
        guard: Goal,
        consequence: Box<Axiom>,
    },
    Clause {
        head: Atom,
        body: DGoal,
    },
}

/// What a partition groups axioms by: the fact-name of facts and rule
/// triggers, or the predicate of clause heads.
pub type NameKey = (Arc<str>, usize);

impl Axiom {
    pub fn fact(name: &str, args: Vec<Term>) -> Axiom {
        Axiom::Fact(Atom::new(name, args))
    }

    pub fn rule(trigger: Atom, guard: Goal, consequence: Axiom) -> Axiom {
        Axiom::Rule {
            trigger,
            guard,
            consequence: Box::new(consequence),
        }
    }

    pub fn clause(head: Atom, body: DGoal) -> Axiom {
        Axiom::Clause { head, body }
    }

    pub fn is_fact(&self) -> bool {
        matches!(self, Axiom::Fact(_))
    }

    pub fn is_rule(&self) -> bool {
        matches!(self, Axiom::Rule { .. })
    }

    pub fn is_clause(&self) -> bool {
        matches!(self, Axiom::Clause { .. })
    }

    /// The atom that determines subject and grouping.
    pub fn key_atom(&self) -> &Atom {
        match self {
            Axiom::Fact(a) => a,
            Axiom::Rule { trigger, .. } => trigger,
            Axiom::Clause { head, .. } => head,
        }
    }

    pub fn name_key(&self) -> NameKey {
        let a = self.key_atom();
        (a.pred.clone(), a.arity())
    }

    /// Subject of a concrete axiom; `None` for generic axioms.
    pub fn subject(&self) -> Option<SubjectKey> {
        self.key_atom().subject()
    }

    pub fn is_concrete(&self) -> bool {
        self.subject().is_some()
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Axiom {
        match self {
            Axiom::Fact(a) => Axiom::Fact(a.map_vars(f)),
            Axiom::Rule {
                trigger,
                guard,
                consequence,
            } => Axiom::Rule {
                trigger: trigger.map_vars(f),
                guard: guard.map_vars(f),
                consequence: Box::new(consequence.map_vars(f)),
            },
            Axiom::Clause { head, body } => Axiom::Clause {
                head: head.map_vars(f),
                body: body.map_vars(f),
            },
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Axiom::Fact(a) => a.collect_vars(out),
            Axiom::Rule {
                trigger,
                guard,
                consequence,
            } => {
                trigger.collect_vars(out);
                guard.collect_vars(out);
                consequence.collect_vars(out);
            }
            Axiom::Clause { head, body } => {
                head.collect_vars(out);
                body.collect_vars(out);
            }
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    /// Moves every variable into `scope`. The axiom must be normalized
    /// (all variables in one scope with distinct names).
    pub fn rename_apart(&self, scope: u32) -> Axiom {
        self.map_vars(&mut |v| Term::Var(Var::scoped(v.name.clone(), scope)))
    }

    /// Canonical variable naming: every variable moves to scope 0, keeping
    /// its name unless another variable of the axiom already uses it, in
    /// which case it gets the first free `Name_k`.
    ///
    /// The result depends only on the axiom's structure and names, so two
    /// derivations of the same axiom through differently-scoped copies of a
    /// rule normalize identically.
    pub fn normalize(&self) -> Axiom {
        let vars = self.vars();
        if vars.iter().all(|v| v.scope == 0) {
            return self.clone();
        }
        let mut taken: HashSet<Arc<str>> = HashSet::new();
        let mut first_by_name: HashSet<Arc<str>> = HashSet::new();
        let mut renamed: Vec<(Var, Var)> = Vec::with_capacity(vars.len());
        let all_names: HashSet<Arc<str>> = vars.iter().map(|v| v.name.clone()).collect();
        for v in &vars {
            let name = if first_by_name.insert(v.name.clone()) {
                v.name.clone()
            } else {
                let mut k = 1;
                loop {
                    let candidate: Arc<str> = format!("{}_{}", v.name, k).into();
                    if !all_names.contains(&candidate) && !taken.contains(&candidate) {
                        break candidate;
                    }
                    k += 1;
                }
            };
            taken.insert(name.clone());
            renamed.push((v.clone(), Var::new(name)));
        }
        self.map_vars(&mut |v| {
            let to = renamed
                .iter()
                .find(|(from, _)| from == v)
                .map(|(_, to)| to.clone())
                .unwrap_or_else(|| v.clone());
            Term::Var(to)
        })
    }

    pub fn max_scope(&self) -> u32 {
        self.vars().iter().map(|v| v.scope).max().unwrap_or(0)
    }
}

/// `head :- body` over static predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StaticClause {
    pub head: Atom,
    pub body: Goal,
}

impl StaticClause {
    pub fn fact(head: Atom) -> Self {
        StaticClause {
            head,
            body: Goal::True,
        }
    }

    pub fn rename_apart(&self, scope: u32) -> StaticClause {
        let mut f = |v: &Var| Term::Var(Var::scoped(v.name.clone(), scope));
        StaticClause {
            head: self.head.map_vars(&mut f),
            body: self.body.map_vars(&mut f),
        }
    }
}

/// One top-level statement of a `.clg` program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Item {
    Decl(Declaration),
    Axiom(Axiom),
    Static(StaticClause),
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Decl(d) => write!(f, "{d}."),
            Item::Axiom(a) => write!(f, "{a}."),
            Item::Static(c) => write!(f, "{c}."),
        }
    }
}
