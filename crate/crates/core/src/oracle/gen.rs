//! Random programs, op logs, queries and items for property tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lang::{
    parse_program_with, validate_axiom, Atom, Axiom, DGoal, Declaration, Declarations, Goal, Item,
    Kind, StaticClause,
};
use crate::static_engine::StaticDb;
use crate::term::Term;

/// Size limits for generated instances.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub fact_names: usize,
    pub constants: usize,
    pub rules: usize,
    pub ops: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            fact_names: 8,
            constants: 4,
            rules: 6,
            ops: 40,
        }
    }
}

/// A program (declarations and static clauses) with an op log over it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub program: String,
    pub decls: Declarations,
    pub db: StaticDb,
    pub ops: Vec<(i64, Axiom)>,
    pub constants: Vec<String>,
    pub fact_names: Vec<(String, usize)>,
}

const CONSTANTS: [&str; 4] = ["a", "b", "ab", "ba"];
const DYNAMIC: [(&str, usize); 2] = [("d0", 1), ("d1", 2)];

struct Builder<'r, R: Rng> {
    rng: &'r mut R,
    consts: Vec<String>,
    names: Vec<(String, usize)>,
    fresh: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn var(&mut self) -> Term {
        self.fresh += 1;
        Term::var(&format!("V{}", self.fresh))
    }

    fn constant(&mut self) -> Term {
        Term::string(self.consts.choose(self.rng).unwrap().clone())
    }

    fn const_list(&mut self) -> Term {
        let n = self.rng.gen_range(1..=self.consts.len());
        let picked: Vec<Term> = self
            .consts
            .choose_multiple(self.rng, n)
            .map(|c| Term::string(c.clone()))
            .collect();
        Term::list(picked)
    }

    fn from(&mut self, bound: &[Term]) -> Term {
        if !bound.is_empty() && self.rng.gen_bool(0.8) {
            bound.choose(self.rng).unwrap().clone()
        } else {
            self.constant()
        }
    }

    fn fact(&mut self, idx: usize) -> Axiom {
        let (name, arity) = self.names[idx].clone();
        let args = (0..arity)
            .map(|i| {
                if i > 0 && self.rng.gen_bool(0.1) {
                    self.var()
                } else {
                    self.constant()
                }
            })
            .collect();
        Axiom::fact(&name, args)
    }

    /// Trigger on fact-name `idx`; returns it with the variables it binds.
    fn trigger(&mut self, idx: usize) -> (Atom, Vec<Term>) {
        let (name, arity) = self.names[idx].clone();
        let mut bound = Vec::new();
        let args = (0..arity)
            .map(|_| {
                if self.rng.gen_bool(0.25) {
                    self.constant()
                } else {
                    let v = self.var();
                    bound.push(v.clone());
                    v
                }
            })
            .collect();
        (Atom::new(&name, args), bound)
    }

    /// A guard over member/charCodes; extends `bound` with what it binds.
    fn guard(&mut self, bound: &mut Vec<Term>) -> Goal {
        let member = |x: Term, l: Term| Goal::atom("member", vec![x, l]);
        match self.rng.gen_range(0..6) {
            0 => Goal::True,
            1 => {
                let y = self.var();
                bound.push(y.clone());
                member(y, self.const_list())
            }
            2 if !bound.is_empty() => {
                let x = bound.choose(self.rng).unwrap().clone();
                member(x, self.const_list())
            }
            3 => {
                let (y, cs, z) = (self.var(), self.var(), self.var());
                let g = Goal::conj([
                    member(y.clone(), self.const_list()),
                    Goal::atom("charCodes", vec![y.clone(), cs.clone()]),
                    member(z.clone(), cs),
                ]);
                bound.extend([y, z]);
                g
            }
            4 => {
                let y = self.var();
                let c = self.consts.choose(self.rng).unwrap().clone();
                bound.push(y.clone());
                Goal::atom("charCodes", vec![y, Term::code_list(&c)])
            }
            _ if !bound.is_empty() => {
                let x = bound.choose(self.rng).unwrap().clone();
                Goal::not(member(x, self.const_list()))
            }
            _ => Goal::True,
        }
    }

    fn consequence(&mut self, above: usize, bound: &[Term], depth: usize) -> Axiom {
        let last = self.names.len() - 1;
        let roll = self.rng.gen_range(0..10);
        if roll < 2 {
            let (name, arity) = *DYNAMIC.choose(self.rng).unwrap();
            let args: Vec<Term> = (0..arity).map(|_| self.from(bound)).collect();
            let body = match self.rng.gen_range(0..3) {
                0 => DGoal::truth(),
                1 => DGoal::atom("d0", vec![args[0].clone()]),
                _ => DGoal::Static(Goal::atom(
                    "member",
                    vec![args[0].clone(), self.const_list()],
                )),
            };
            let body = if name == "d0" && matches!(body, DGoal::Atom(_)) {
                DGoal::truth()
            } else {
                body
            };
            return Axiom::clause(Atom::new(name, args), body);
        }
        let target = self.rng.gen_range(above + 1..=last);
        if roll < 4 && depth == 0 && target < last {
            let (inner, mut inner_bound) = self.trigger(target);
            inner_bound.extend(bound.iter().cloned());
            let guard = self.guard(&mut inner_bound);
            let cons = self.consequence(target, &inner_bound, depth + 1);
            return Axiom::rule(inner, guard, cons);
        }
        let (name, arity) = self.names[target].clone();
        let args = (0..arity).map(|_| self.from(bound)).collect();
        Axiom::fact(&name, args)
    }

    fn rule(&mut self) -> Axiom {
        let idx = self.rng.gen_range(0..self.names.len() - 1);
        let (trigger, mut bound) = self.trigger(idx);
        let guard = self.guard(&mut bound);
        let cons = self.consequence(idx, &bound, 0);
        Axiom::rule(trigger, guard, cons)
    }

    fn clause(&mut self) -> Axiom {
        let c = self.constant();
        if self.rng.gen_bool(0.5) {
            Axiom::clause(Atom::new("d0", vec![c]), DGoal::truth())
        } else {
            let y = self.var();
            Axiom::clause(
                Atom::new("d1", vec![c, y.clone()]),
                DGoal::Static(Goal::atom("member", vec![y, self.const_list()])),
            )
        }
    }
}

/// A random instance within `limits`. Fact-names are stratified (a rule on
/// `fi` only derives into later names), so every instance terminates, and
/// guards never raise type errors, so outcomes do not depend on op order.
pub fn instance(rng: &mut impl Rng, limits: Limits) -> Instance {
    let k = rng.gen_range(2..=limits.fact_names.max(2));
    let names: Vec<(String, usize)> = (0..k)
        .map(|i| (format!("f{i}"), rng.gen_range(1..=2)))
        .collect();
    let nconst = rng.gen_range(1..=limits.constants.clamp(1, CONSTANTS.len()));
    let consts: Vec<String> = CONSTANTS[..nconst].iter().map(|s| s.to_string()).collect();
    let mut program = String::from(":- fact ");
    program += &names
        .iter()
        .map(|(n, a)| format!("{n}/{a}"))
        .collect::<Vec<_>>()
        .join(", ");
    program += ".\n:- dynamic d0/1, d1/2.\n";
    let mut decls = Declarations::standard();
    let items = parse_program_with(&program, &mut decls).expect("generated program parses");
    let mut db = StaticDb::with_prelude();
    db.extend_items(&items);

    let mut b = Builder {
        rng,
        consts: consts.clone(),
        names: names.clone(),
        fresh: 0,
    };
    let mut pool: Vec<Axiom> = Vec::new();
    let nrules = b.rng.gen_range(0..=limits.rules);
    while pool.len() < nrules {
        let r = b.rule();
        if validate_axiom(&decls, &r).is_ok() {
            pool.push(r);
        }
    }
    for _ in 0..b.rng.gen_range(2..=8) {
        let idx = b.rng.gen_range(0..names.len());
        pool.push(b.fact(idx));
    }
    for _ in 0..b.rng.gen_range(0..=2) {
        pool.push(b.clause());
    }
    let nops = b.rng.gen_range(1..=limits.ops.max(1));
    let mut ops = Vec::with_capacity(nops);
    for _ in 0..nops {
        let a = pool.choose(b.rng).unwrap().clone();
        let delta = if b.rng.gen_bool(0.2) { -1 } else { 1 };
        ops.push((delta, a));
    }
    Instance {
        program,
        decls,
        db,
        ops,
        constants: consts,
        fact_names: names,
    }
}

/// A random query over the instance's names, mostly with ground first
/// arguments.
pub fn query(rng: &mut impl Rng, inst: &Instance) -> DGoal {
    let c = |rng: &mut dyn rand::RngCore| Term::string(inst.constants.choose(rng).unwrap().clone());
    let first = |rng: &mut dyn rand::RngCore| {
        if rng.gen_bool(0.85) {
            c(rng)
        } else {
            Term::var("X")
        }
    };
    let atom = |rng: &mut dyn rand::RngCore, vars: &[&str]| -> DGoal {
        let v = Term::var(vars.choose(rng).unwrap());
        match rng.gen_range(0..3) {
            0 => DGoal::atom("d0", vec![first(rng)]),
            1 => DGoal::atom("d1", vec![first(rng), v]),
            _ => {
                let (name, arity) = inst.fact_names.choose(rng).unwrap();
                let mut args = vec![first(rng)];
                if *arity == 2 {
                    args.push(v);
                }
                DGoal::atom(name, args)
            }
        }
    };
    let a = atom(rng, &["Y", "Z"]);
    match rng.gen_range(0..4) {
        0 => DGoal::and(a, atom(rng, &["Y", "W"])),
        1 => DGoal::and(a, DGoal::not(atom(rng, &["_U"]))),
        _ => a,
    }
}

/// Declarations that `item` draws its names from.
pub fn item_decls() -> Declarations {
    let mut d = Declarations::standard();
    parse_program_with(
        ":- fact f/1, f/2, g/2, 'odd name'/1.
         :- dynamic t/1, u/2.
         :- static p/1, q/2.",
        &mut d,
    )
    .expect("fixed declarations parse");
    d
}

const FUNCTORS: [&str; 8] = [
    "a",
    "foo",
    "user",
    "x_1",
    "hello world",
    "It's",
    "Caps",
    "[]",
];
const STRING_CHARS: [char; 10] = ['a', 'z', ' ', '"', '\\', '\n', '\t', 'é', '#', '\''];
const VAR_NAMES: [&str; 5] = ["X", "Y", "Tail", "_G", "A1"];

/// A random term of depth at most `depth`.
pub fn term(rng: &mut impl Rng, depth: usize) -> Term {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => Term::Int(rng.gen_range(-1000..1000)),
            1 => {
                let n = rng.gen_range(0..6);
                Term::string(
                    (0..n)
                        .map(|_| *STRING_CHARS.choose(rng).unwrap())
                        .collect::<String>(),
                )
            }
            2 => Term::var(VAR_NAMES.choose(rng).unwrap()),
            _ => Term::atom(FUNCTORS.choose(rng).unwrap()),
        };
    }
    match rng.gen_range(0..3) {
        0 => {
            let n = rng.gen_range(0..4);
            Term::list((0..n).map(|_| term(rng, depth - 1)).collect::<Vec<_>>())
        }
        1 => {
            let n = rng.gen_range(1..3);
            let items: Vec<Term> = (0..n).map(|_| term(rng, depth - 1)).collect();
            Term::list_with_tail(items, Term::var("Tail"))
        }
        _ => {
            let n = rng.gen_range(1..4);
            let name = FUNCTORS[..FUNCTORS.len() - 1].choose(rng).unwrap();
            Term::compound(name, (0..n).map(|_| term(rng, depth - 1)).collect())
        }
    }
}

fn atom_of(rng: &mut impl Rng, name: &str, arity: usize) -> Atom {
    Atom::new(name, (0..arity).map(|_| term(rng, 2)).collect())
}

fn static_goal(rng: &mut impl Rng, depth: usize) -> Goal {
    match rng.gen_range(0..if depth == 0 { 3 } else { 6 }) {
        0 => Goal::True,
        1 => Goal::Atom(atom_of(rng, "p", 1)),
        2 => Goal::Atom(Atom::new("=", vec![term(rng, 1), term(rng, 1)])),
        3 => Goal::not(static_goal(rng, depth - 1)),
        _ => Goal::and(static_goal(rng, depth - 1), static_goal(rng, depth - 1)),
    }
}

fn dynamic_goal(rng: &mut impl Rng, depth: usize) -> DGoal {
    match rng.gen_range(0..if depth == 0 { 2 } else { 5 }) {
        0 => DGoal::Atom(atom_of(rng, "u", 2)),
        1 => DGoal::Static(static_goal(rng, 1)),
        2 => DGoal::not(dynamic_goal(rng, depth - 1)),
        _ => DGoal::and(dynamic_goal(rng, depth - 1), dynamic_goal(rng, depth - 1)),
    }
}

fn axiom(rng: &mut impl Rng, depth: usize) -> Axiom {
    match rng.gen_range(0..if depth == 0 { 2 } else { 3 }) {
        0 => {
            let name = ["f", "g"][rng.gen_range(0..2)];
            Axiom::Fact(atom_of(rng, name, 2))
        }
        1 => Axiom::clause(atom_of(rng, "t", 1), dynamic_goal(rng, 2)),
        _ => Axiom::rule(
            atom_of(rng, "g", 2),
            static_goal(rng, 2),
            axiom(rng, depth - 1),
        ),
    }
}

/// A random well-formed item over `item_decls()`.
pub fn item(rng: &mut impl Rng) -> Item {
    let decls = item_decls();
    loop {
        let it = match rng.gen_range(0..6) {
            0 => Item::Decl(Declaration {
                kind: [Kind::Fact, Kind::Dynamic, Kind::Static][rng.gen_range(0..3)],
                name: format!("n{}", rng.gen_range(0..100)).into(),
                arity: rng.gen_range(0..4),
            }),
            1 => Item::Static(StaticClause {
                head: atom_of(rng, "q", 2),
                body: static_goal(rng, 2),
            }),
            _ => Item::Axiom(axiom(rng, 2)),
        };
        if let Item::Axiom(a) = &it {
            if validate_axiom(&decls, a).is_err() {
                continue;
            }
        }
        return it;
    }
}
