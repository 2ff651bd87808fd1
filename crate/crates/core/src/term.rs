//! Logic terms, substitutions and unification.
//!
//! A [`Term`] is a finite tree: compound terms carry a name and ordered
//! arguments, leaves are 64-bit integers, strings or variables. Variables are
//! identified by `(name, scope)`; renaming a clause apart only rewrites the
//! scope, so printed names stay readable.
//!
//! Ground terms have a canonical byte encoding ([`SubjectKey`]) used as the
//! partition key of the axiom store and inside the journal.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Name of the list constructor cell `[H|T]`.
pub const CONS: &str = ".";
/// Name of the empty list `[]`.
pub const NIL: &str = "[]";

const TAG_COMPOUND: u8 = 0x01;
const TAG_INT: u8 = 0x02;
const TAG_STR: u8 = 0x03;
const TAG_VAR: u8 = 0x04;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Arc<str>,
    pub scope: u32,
}

impl Var {
    pub fn new(name: impl Into<Arc<str>>) -> Self {
        Var {
            name: name.into(),
            scope: 0,
        }
    }

    pub fn scoped(name: impl Into<Arc<str>>, scope: u32) -> Self {
        Var {
            name: name.into(),
            scope,
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scope == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}_{}", self.name, self.scope)
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Compound(Arc<str>, Arc<[Term]>),
    Int(i64),
    Str(String),
    Var(Var),
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Compound(name.into(), Arc::from([]))
    }

    pub fn compound(name: &str, args: Vec<Term>) -> Term {
        Term::Compound(name.into(), args.into())
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn string(s: impl Into<String>) -> Term {
        Term::Str(s.into())
    }

    pub fn nil() -> Term {
        Term::atom(NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Compound(CONS.into(), Arc::from([head, tail]))
    }

    /// Builds a proper list from `items`.
    pub fn list(items: impl IntoIterator<Item = Term>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn list_with_tail(items: impl IntoIterator<Item = Term>, tail: Term) -> Term {
        let items: Vec<Term> = items.into_iter().collect();
        items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| Term::cons(item, acc))
    }

    /// A list of the Unicode code points of `s`.
    pub fn code_list(s: &str) -> Term {
        Term::list(s.chars().map(|c| Term::Int(c as i64)))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Compound(n, a) if &**n == NIL && a.is_empty())
    }

    pub fn as_cons(&self) -> Option<(&Term, &Term)> {
        match self {
            Term::Compound(n, a) if &**n == CONS && a.len() == 2 => Some((&a[0], &a[1])),
            _ => None,
        }
    }

    /// Elements of a proper list, or `None` if `self` is not one.
    pub fn list_items(&self) -> Option<Vec<&Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            if cur.is_nil() {
                return Some(out);
            }
            let (h, t) = cur.as_cons()?;
            out.push(h);
            cur = t;
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Term::Compound(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, a) => a,
            _ => &[],
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            Term::Int(_) | Term::Str(_) => true,
        }
    }

    pub fn occurs(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Compound(_, args) => args.iter().any(|a| a.occurs(v)),
            _ => false,
        }
    }

    /// Pushes the distinct variables of `self` onto `out` in first-occurrence order.
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn max_scope(&self) -> u32 {
        match self {
            Term::Var(v) => v.scope,
            Term::Compound(_, args) => args.iter().map(Term::max_scope).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Rewrites every variable through `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Compound(n, args) => {
                Term::Compound(n.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
            other => other.clone(),
        }
    }

    /// Moves every variable into `scope`. Callers pass single-scope terms.
    pub fn rename_apart(&self, scope: u32) -> Term {
        self.map_vars(&mut |v| Term::Var(Var::scoped(v.name.clone(), scope)))
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Self {
        Term::Int(v)
    }
}

impl From<&str> for Term {
    fn from(s: &str) -> Self {
        Term::Str(s.to_string())
    }
}

/// A mapping from variables to terms, kept in triangular form: bound values
/// may mention other bound variables, [`Substitution::apply`] resolves them.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: HashMap<Var, Term>,
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut entries: Vec<_> = self.map.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        f.debug_map().entries(entries).finish()
    }
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    /// Binds `v` without any check. Used by the solver, which has already
    /// dereferenced `v` and performed the occurs-check.
    #[cfg(test)]
    pub(crate) fn bind_unchecked(&mut self, v: Var, t: Term) {
        self.map.insert(v, t);
    }

    pub(crate) fn unbind(&mut self, v: &Var) {
        self.map.remove(v);
    }

    /// Follows variable bindings until reaching a non-variable or an unbound variable.
    pub fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.map.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    pub fn apply(&self, t: &Term) -> Term {
        self.apply_changed(t).unwrap_or_else(|| t.clone())
    }

    /// `None` when applying leaves `t` unchanged, so unchanged subterms
    /// keep sharing their argument arrays.
    fn apply_changed(&self, t: &Term) -> Option<Term> {
        match t {
            Term::Var(v) => self.map.get(v).map(|next| self.apply(next)),
            Term::Compound(n, args) => stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
                let mut out: Option<Vec<Term>> = None;
                for (i, a) in args.iter().enumerate() {
                    if let Some(new) = self.apply_changed(a) {
                        out.get_or_insert_with(|| args[..i].to_vec()).push(new);
                    } else if let Some(out) = out.as_mut() {
                        out.push(a.clone());
                    }
                }
                out.map(|args| Term::Compound(n.clone(), args.into()))
            }),
            _ => None,
        }
    }

    /// Occurs-check against the current bindings.
    pub fn occurs(&self, v: &Var, t: &Term) -> bool {
        let mut stack = vec![t];
        while let Some(t) = stack.pop() {
            match self.walk(t) {
                Term::Var(w) if w == v => return true,
                Term::Compound(_, args) => stack.extend(args.iter()),
                _ => {}
            }
        }
        false
    }

    /// Unifies in place, recording each new binding in `trail`. On failure
    /// some bindings may already have been made; the caller undoes them.
    pub(crate) fn unify_into(&mut self, a: &Term, b: &Term, trail: &mut Vec<Var>) -> bool {
        let mut stack = vec![(a.clone(), b.clone())];
        while let Some((x, y)) = stack.pop() {
            let x = self.walk(&x).clone();
            let y = self.walk(&y).clone();
            match (x, y) {
                (Term::Var(v), Term::Var(w)) if v == w => {}
                (Term::Var(v), t) | (t, Term::Var(v)) => {
                    if self.occurs(&v, &t) {
                        return false;
                    }
                    trail.push(v.clone());
                    self.map.insert(v, t);
                }
                (Term::Int(i), Term::Int(j)) => {
                    if i != j {
                        return false;
                    }
                }
                (Term::Str(s), Term::Str(r)) => {
                    if s != r {
                        return false;
                    }
                }
                (Term::Compound(n, xs), Term::Compound(m, ys)) => {
                    if n != m || xs.len() != ys.len() {
                        return false;
                    }
                    stack.extend(xs.iter().cloned().zip(ys.iter().cloned()).rev());
                }
                _ => return false,
            }
        }
        true
    }

    /// Restricts the substitution to `vars`, fully resolving each value.
    pub fn restrict(&self, vars: &[Var]) -> Substitution {
        let mut out = Substitution::new();
        for v in vars {
            let value = self.apply(&Term::Var(v.clone()));
            if value != Term::Var(v.clone()) {
                out.map.insert(v.clone(), value);
            }
        }
        out
    }
}

/// Most general unifier of `a` and `b` extending `s`, or `None`.
pub fn unify(a: &Term, b: &Term, s: &Substitution) -> Option<Substitution> {
    let mut out = s.clone();
    let mut trail = Vec::new();
    out.unify_into(a, b, &mut trail).then_some(out)
}

pub fn apply(s: &Substitution, t: &Term) -> Term {
    s.apply(t)
}

pub fn is_ground(t: &Term) -> bool {
    t.is_ground()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("subject term is not ground: variable {0} occurs in it")]
    NonGroundSubject(Var),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed term encoding at byte {offset}: {reason}")]
pub struct DecodeError {
    pub offset: usize,
    pub reason: &'static str,
}

/// Canonical encoding of a ground term; the partition key of concrete axioms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubjectKey(Vec<u8>);

impl SubjectKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        SubjectKey(bytes)
    }

    /// Decodes the key back into the term it was built from.
    pub fn to_term(&self) -> Result<Term, DecodeError> {
        let mut pos = 0;
        let t = decode_term(&self.0, &mut pos, false)?;
        if pos != self.0.len() {
            return Err(DecodeError {
                offset: pos,
                reason: "trailing bytes",
            });
        }
        Ok(t)
    }
}

impl fmt::Debug for SubjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_term() {
            Ok(t) => write!(f, "SubjectKey({t})"),
            Err(_) => write!(f, "SubjectKey({:02x?})", self.0),
        }
    }
}

pub fn canonical_encode(t: &Term) -> Result<SubjectKey, EncodeError> {
    let mut out = Vec::new();
    encode_ground(t, &mut out)?;
    Ok(SubjectKey(out))
}

fn encode_ground(t: &Term, out: &mut Vec<u8>) -> Result<(), EncodeError> {
    match t {
        Term::Var(v) => return Err(EncodeError::NonGroundSubject(v.clone())),
        Term::Compound(name, args) => {
            out.push(TAG_COMPOUND);
            put_str(out, name);
            out.extend_from_slice(&(args.len() as u32).to_be_bytes());
            for a in args.iter() {
                encode_ground(a, out)?;
            }
        }
        Term::Int(i) => {
            out.push(TAG_INT);
            out.extend_from_slice(&i.to_be_bytes());
        }
        Term::Str(s) => {
            out.push(TAG_STR);
            put_str(out, s);
        }
    }
    Ok(())
}

/// Encodes any term, including variables (tag 0x04, name, scope). Used for
/// journal payloads, where axioms may be non-ground.
pub fn encode_with_vars(t: &Term, out: &mut Vec<u8>) {
    match t {
        Term::Var(v) => {
            out.push(TAG_VAR);
            put_str(out, &v.name);
            out.extend_from_slice(&v.scope.to_be_bytes());
        }
        Term::Compound(name, args) => {
            out.push(TAG_COMPOUND);
            put_str(out, name);
            out.extend_from_slice(&(args.len() as u32).to_be_bytes());
            for a in args.iter() {
                encode_with_vars(a, out);
            }
        }
        Term::Int(i) => {
            out.push(TAG_INT);
            out.extend_from_slice(&i.to_be_bytes());
        }
        Term::Str(s) => {
            out.push(TAG_STR);
            put_str(out, s);
        }
    }
}

pub fn decode_with_vars(bytes: &[u8], pos: &mut usize) -> Result<Term, DecodeError> {
    decode_term(bytes, pos, true)
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8], DecodeError> {
    let end = pos
        .checked_add(n)
        .filter(|&e| e <= bytes.len())
        .ok_or(DecodeError {
            offset: *pos,
            reason: "unexpected end of input",
        })?;
    let slice = &bytes[*pos..end];
    *pos = end;
    Ok(slice)
}

fn take_u32(bytes: &[u8], pos: &mut usize) -> Result<u32, DecodeError> {
    let b = take(bytes, pos, 4)?;
    Ok(u32::from_be_bytes(b.try_into().unwrap()))
}

fn take_str(bytes: &[u8], pos: &mut usize) -> Result<String, DecodeError> {
    let len = take_u32(bytes, pos)? as usize;
    let at = *pos;
    let b = take(bytes, pos, len)?;
    String::from_utf8(b.to_vec()).map_err(|_| DecodeError {
        offset: at,
        reason: "invalid UTF-8",
    })
}

fn decode_term(bytes: &[u8], pos: &mut usize, allow_vars: bool) -> Result<Term, DecodeError> {
    let at = *pos;
    let tag = take(bytes, pos, 1)?[0];
    match tag {
        TAG_COMPOUND => {
            let name = take_str(bytes, pos)?;
            let arity = take_u32(bytes, pos)? as usize;
            // Each argument needs at least one byte; reject absurd arities early.
            if arity > bytes.len() - *pos {
                return Err(DecodeError {
                    offset: *pos,
                    reason: "arity exceeds input",
                });
            }
            let mut args = Vec::with_capacity(arity);
            for _ in 0..arity {
                args.push(decode_term(bytes, pos, allow_vars)?);
            }
            Ok(Term::Compound(name.into(), args.into()))
        }
        TAG_INT => {
            let b = take(bytes, pos, 8)?;
            Ok(Term::Int(i64::from_be_bytes(b.try_into().unwrap())))
        }
        TAG_STR => Ok(Term::Str(take_str(bytes, pos)?)),
        TAG_VAR if allow_vars => {
            let name = take_str(bytes, pos)?;
            let scope = take_u32(bytes, pos)?;
            Ok(Term::Var(Var::scoped(name, scope)))
        }
        _ => Err(DecodeError {
            offset: at,
            reason: "unknown tag",
        }),
    }
}
