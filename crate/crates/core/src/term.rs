//! The term algebra: atoms, logic variables, cons pairs, the empty list and
//! expression terms.
//!
//! Every deep traversal in this module (equality, hashing, groundness, drop)
//! runs on an explicit work stack, so terms nested hundreds of thousands of
//! levels deep can be compared, hashed and freed without exhausting the
//! native stack.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::mem;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;

use crate::expr::ExprTerm;

/// A constant.
///
/// Integers and decimals are distinct kinds: `Int(2)` never equals
/// `Decimal(2.0)`.
#[derive(Clone)]
pub enum Atom {
    Symbol(Arc<str>),
    Int(BigInt),
    Decimal(f64),
    Str(Arc<str>),
    Bool(bool),
}

impl Atom {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Atom::Symbol(_) => "symbol",
            Atom::Int(_) => "integer",
            Atom::Decimal(_) => "decimal",
            Atom::Str(_) => "string",
            Atom::Bool(_) => "boolean",
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Atom::Symbol(s) => Some(s),
            _ => None,
        }
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Atom::Symbol(a), Atom::Symbol(b)) => a == b,
            (Atom::Int(a), Atom::Int(b)) => a == b,
            // Bitwise, so that equality stays reflexive for NaN and agrees with `Hash`.
            (Atom::Decimal(a), Atom::Decimal(b)) => a.to_bits() == b.to_bits(),
            (Atom::Str(a), Atom::Str(b)) => a == b,
            (Atom::Bool(a), Atom::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Atom {}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        mem::discriminant(self).hash(state);
        match self {
            Atom::Symbol(s) | Atom::Str(s) => s.hash(state),
            Atom::Int(i) => i.hash(state),
            Atom::Decimal(d) => d.to_bits().hash(state),
            Atom::Bool(b) => b.hash(state),
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&Term::Atom(self.clone()), f)
    }
}

static NEXT_VAR_ID: AtomicU64 = AtomicU64::new(0);

/// Ids at or above this value are reserved for the display variables
/// produced by reification; fresh variables never reach it.
const DISPLAY_BASE: u64 = 1 << 62;

/// A logic variable. Identity is the id alone; the hint is cosmetic.
#[derive(Clone)]
pub struct LVar {
    id: u64,
    hint: Option<Arc<str>>,
}

impl LVar {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn hint(&self) -> Option<&str> {
        self.hint.as_deref()
    }

    /// The `index`-th canonical display variable (`_0`, `_1`, ...).
    pub fn display(index: u64) -> LVar {
        LVar {
            id: DISPLAY_BASE + index,
            hint: None,
        }
    }

    /// For display variables, the index they were issued with.
    pub fn display_index(&self) -> Option<u64> {
        self.id.checked_sub(DISPLAY_BASE)
    }
}

impl PartialEq for LVar {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for LVar {}

impl Hash for LVar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl PartialOrd for LVar {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LVar {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl fmt::Debug for LVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.display_index(), &self.hint) {
            (Some(k), _) => write!(f, "?_{k}"),
            (None, Some(h)) => write!(f, "?{h}.{}", self.id),
            (None, None) => write!(f, "?v.{}", self.id),
        }
    }
}

/// Issues a logic variable whose id has never been handed out before.
pub fn fresh_var(hint: Option<&str>) -> LVar {
    let id = NEXT_VAR_ID.fetch_add(1, Ordering::Relaxed);
    assert!(id < DISPLAY_BASE, "logic variable ids exhausted");
    LVar {
        id,
        hint: hint.map(Arc::from),
    }
}

/// Shorthand for a fresh variable wrapped as a term.
pub fn var() -> Term {
    Term::Var(fresh_var(None))
}

/// Shorthand for a fresh, hinted variable wrapped as a term.
pub fn named_var(hint: &str) -> Term {
    Term::Var(fresh_var(Some(hint)))
}

/// A pair. `cdr` may be any term, so improper lists are representable.
pub struct ConsCell {
    car: Term,
    cdr: Term,
}

impl ConsCell {
    pub fn car(&self) -> &Term {
        &self.car
    }

    pub fn cdr(&self) -> &Term {
        &self.cdr
    }
}

impl Drop for ConsCell {
    fn drop(&mut self) {
        if !self.car.is_compound() && !self.cdr.is_compound() {
            return;
        }
        let pending = vec![mem::take(&mut self.car), mem::take(&mut self.cdr)];
        drop_iteratively(pending);
    }
}

/// Frees nested cells one at a time instead of recursing through `Drop`.
pub(crate) fn drop_iteratively(mut pending: Vec<Term>) {
    while let Some(t) = pending.pop() {
        match t {
            Term::Cons(cell) => {
                if let Some(mut cell) = Arc::into_inner(cell) {
                    for part in [mem::take(&mut cell.car), mem::take(&mut cell.cdr)] {
                        if part.is_compound() {
                            pending.push(part);
                        }
                    }
                }
            }
            Term::Expr(e) => e.release_into(&mut pending),
            _ => {}
        }
    }
}

/// The universal value that goals unify and rules rewrite.
#[derive(Clone, Default)]
pub enum Term {
    Atom(Atom),
    Var(LVar),
    Cons(Arc<ConsCell>),
    #[default]
    Nil,
    Expr(ExprTerm),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("cannot decompose {0} into car/cdr")]
    NotAPair(&'static str),
    #[error("expected a proper list, found {0}")]
    NotAProperList(String),
}

impl Term {
    pub fn sym(name: &str) -> Term {
        Term::Atom(Atom::Symbol(Arc::from(name)))
    }

    pub fn int(value: impl Into<BigInt>) -> Term {
        Term::Atom(Atom::Int(value.into()))
    }

    /// All NaN payloads collapse to a single canonical NaN.
    pub fn decimal(value: f64) -> Term {
        let value = if value.is_nan() { f64::NAN } else { value };
        Term::Atom(Atom::Decimal(value))
    }

    pub fn string(value: &str) -> Term {
        Term::Atom(Atom::Str(Arc::from(value)))
    }

    pub fn boolean(value: bool) -> Term {
        Term::Atom(Atom::Bool(value))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&LVar> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match self {
            Term::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        self.as_atom().and_then(Atom::as_symbol)
    }

    pub fn as_expr(&self) -> Option<&ExprTerm> {
        match self {
            Term::Expr(e) => Some(e),
            _ => None,
        }
    }

    /// True for cons cells and expression terms, i.e. anything `car`/`cdr`
    /// can descend into.
    pub fn is_compound(&self) -> bool {
        matches!(self, Term::Cons(_) | Term::Expr(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Term::Atom(a) => a.kind_name(),
            Term::Var(_) => "logic variable",
            Term::Cons(_) => "cons pair",
            Term::Nil => "empty list",
            Term::Expr(_) => "expression",
        }
    }

    /// True when no logic variable occurs anywhere inside the term.
    pub fn is_ground(&self) -> bool {
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Var(_) => return false,
                Term::Cons(c) => {
                    stack.push(&c.cdr);
                    stack.push(&c.car);
                }
                Term::Expr(e) => stack.extend(e.items().iter().rev()),
                Term::Atom(_) | Term::Nil => {}
            }
        }
        true
    }

    /// Shallow identity: the same atom, variable or shared allocation.
    /// Used to detect that a rebuild left a node untouched.
    pub(crate) fn same_node(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Cons(a), Term::Cons(b)) => Arc::ptr_eq(a, b),
            (Term::Expr(a), Term::Expr(b)) => a.ptr_eq(b),
            (Term::Atom(a), Term::Atom(b)) => a == b,
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::Nil, Term::Nil) => true,
            _ => false,
        }
    }
}

/// Builds the pair `(car . cdr)`.
pub fn cons(car: Term, cdr: Term) -> Term {
    Term::Cons(Arc::new(ConsCell { car, cdr }))
}

/// Head of a pair. Expression terms project their operator position.
pub fn car(t: &Term) -> Result<Term, TermError> {
    match t {
        Term::Cons(c) => Ok(c.car.clone()),
        Term::Expr(e) => Ok(e.operator().clone()),
        other => Err(TermError::NotAPair(other.kind_name())),
    }
}

/// Tail of a pair. Expression terms project their operands as a proper list.
pub fn cdr(t: &Term) -> Result<Term, TermError> {
    match t {
        Term::Cons(c) => Ok(c.cdr.clone()),
        Term::Expr(e) => Ok(term_from_list(e.operands().iter().cloned())),
        other => Err(TermError::NotAPair(other.kind_name())),
    }
}

/// Builds a proper, `Nil`-terminated list.
pub fn term_from_list<I>(items: I) -> Term
where
    I: IntoIterator<Item = Term>,
    I::IntoIter: DoubleEndedIterator,
{
    items
        .into_iter()
        .rev()
        .fold(Term::Nil, |tail, item| cons(item, tail))
}

/// Collects the elements of a proper list. Expression terms count as the
/// list of their items.
pub fn list_from_term(t: &Term) -> Result<Vec<Term>, TermError> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Nil => return Ok(out),
            Term::Cons(c) => {
                out.push(c.car.clone());
                cur = &c.cdr;
            }
            Term::Expr(e) => {
                out.extend(e.items().iter().cloned());
                return Ok(out);
            }
            other => return Err(TermError::NotAProperList(other.to_string())),
        }
    }
}

/// A borrowed position inside a term. `Tail` stands for the proper list made
/// of the remaining items of an expression term, without allocating it.
#[derive(Clone, Copy)]
pub(crate) enum View<'a> {
    Term(&'a Term),
    Tail(&'a [Term]),
}

pub(crate) enum Shape<'a> {
    Atom(&'a Atom),
    Var(&'a LVar),
    Nil,
    Pair(View<'a>, View<'a>),
}

impl<'a> View<'a> {
    pub(crate) fn shape(self) -> Shape<'a> {
        match self {
            View::Term(Term::Atom(a)) => Shape::Atom(a),
            View::Term(Term::Var(v)) => Shape::Var(v),
            View::Term(Term::Nil) => Shape::Nil,
            View::Term(Term::Cons(c)) => Shape::Pair(View::Term(&c.car), View::Term(&c.cdr)),
            View::Term(Term::Expr(e)) => {
                let items = e.items();
                Shape::Pair(View::Term(&items[0]), View::Tail(&items[1..]))
            }
            View::Tail([]) => Shape::Nil,
            View::Tail([head, rest @ ..]) => Shape::Pair(View::Term(head), View::Tail(rest)),
        }
    }
}

/// Hooks for [`rebuild`], a bottom-up reconstruction of a term.
pub(crate) trait Rebuilder {
    /// Called on every node before its children are visited; the returned
    /// term is the one that gets traversed.
    fn enter(&mut self, t: Term) -> Term {
        t
    }

    /// Replacement for an atom, variable or `Nil` left after `enter`.
    fn leaf(&mut self, t: Term) -> Term {
        t
    }

    /// Post-processing for a pair whose children were rebuilt.
    fn built_pair(&mut self, node: Term) -> Term {
        node
    }
}

/// Rebuilds `t` children-first, visiting cars before cdrs. Nodes whose
/// children come back unchanged are reused rather than reallocated.
pub(crate) fn rebuild<R: Rebuilder>(t: &Term, r: &mut R) -> Term {
    enum Task {
        Visit(Term),
        Pair(Arc<ConsCell>),
        Expr(ExprTerm),
    }

    let mut tasks = vec![Task::Visit(t.clone())];
    let mut out: Vec<Term> = Vec::new();
    while let Some(task) = tasks.pop() {
        match task {
            Task::Visit(t) => match r.enter(t) {
                Term::Cons(c) => {
                    tasks.push(Task::Pair(c.clone()));
                    tasks.push(Task::Visit(c.cdr.clone()));
                    tasks.push(Task::Visit(c.car.clone()));
                }
                Term::Expr(e) => {
                    tasks.extend(std::iter::once(Task::Expr(e.clone())).chain(
                        e.items().iter().rev().map(|item| Task::Visit(item.clone())),
                    ));
                }
                leaf => {
                    let replaced = r.leaf(leaf);
                    out.push(replaced);
                }
            },
            Task::Pair(c) => {
                let new_cdr = out.pop().expect("rebuilt cdr");
                let new_car = out.pop().expect("rebuilt car");
                let node = if new_car.same_node(&c.car) && new_cdr.same_node(&c.cdr) {
                    Term::Cons(c)
                } else {
                    cons(new_car, new_cdr)
                };
                let node = r.built_pair(node);
                out.push(node);
            }
            Task::Expr(e) => {
                let items = out.split_off(out.len() - e.len());
                out.push(Term::Expr(e.rebuild(items)));
            }
        }
    }
    out.pop().expect("rebuild yields one term")
}

/// An owned position inside a term, the counterpart of [`View`] for
/// algorithms that must hold positions across substitution changes.
#[derive(Clone)]
pub(crate) enum Cursor {
    Term(Term),
    Tail(ExprTerm, usize),
}

pub(crate) enum OwnedShape {
    Atom(Atom),
    Var(LVar),
    Nil,
    Pair(Cursor, Cursor),
}

impl Cursor {
    pub(crate) fn shape(&self) -> OwnedShape {
        match self {
            Cursor::Term(Term::Atom(a)) => OwnedShape::Atom(a.clone()),
            Cursor::Term(Term::Var(v)) => OwnedShape::Var(v.clone()),
            Cursor::Term(Term::Nil) => OwnedShape::Nil,
            Cursor::Term(Term::Cons(c)) => {
                OwnedShape::Pair(Cursor::Term(c.car.clone()), Cursor::Term(c.cdr.clone()))
            }
            Cursor::Term(Term::Expr(e)) => {
                OwnedShape::Pair(Cursor::Term(e.operator().clone()), Cursor::Tail(e.clone(), 1))
            }
            Cursor::Tail(e, i) => match e.get(*i) {
                None => OwnedShape::Nil,
                Some(item) => OwnedShape::Pair(Cursor::Term(item.clone()), Cursor::Tail(e.clone(), i + 1)),
            },
        }
    }

    /// The term this position denotes, allocating the list for a `Tail`.
    pub(crate) fn into_term(self) -> Term {
        match self {
            Cursor::Term(t) => t,
            Cursor::Tail(e, i) => term_from_list(e.items()[i..].to_vec()),
        }
    }
}

/// Structural equality. An expression term equals the cons spine it
/// projects to, matching how unification treats the two.
impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        let mut stack = vec![(View::Term(self), View::Term(other))];
        while let Some((a, b)) = stack.pop() {
            match (a, b) {
                (View::Term(Term::Expr(x)), View::Term(Term::Expr(y))) => {
                    if x.ptr_eq(y) {
                        continue;
                    }
                    if x.len() != y.len() {
                        return false;
                    }
                    stack.extend(
                        x.items()
                            .iter()
                            .zip(y.items())
                            .map(|(p, q)| (View::Term(p), View::Term(q))),
                    );
                    continue;
                }
                (View::Term(Term::Cons(x)), View::Term(Term::Cons(y))) if Arc::ptr_eq(x, y) => {
                    continue
                }
                _ => {}
            }
            match (a.shape(), b.shape()) {
                (Shape::Atom(x), Shape::Atom(y)) if x == y => {}
                (Shape::Var(x), Shape::Var(y)) if x == y => {}
                (Shape::Nil, Shape::Nil) => {}
                (Shape::Pair(ah, at), Shape::Pair(bh, bt)) => {
                    stack.push((at, bt));
                    stack.push((ah, bh));
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let mut stack = vec![View::Term(self)];
        while let Some(v) = stack.pop() {
            match v.shape() {
                Shape::Atom(a) => {
                    0u8.hash(state);
                    a.hash(state);
                }
                Shape::Var(x) => {
                    1u8.hash(state);
                    x.hash(state);
                }
                Shape::Nil => 2u8.hash(state),
                Shape::Pair(h, t) => {
                    3u8.hash(state);
                    stack.push(t);
                    stack.push(h);
                }
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::sexpr::render(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Atom> for Term {
    fn from(a: Atom) -> Self {
        Term::Atom(a)
    }
}

impl From<LVar> for Term {
    fn from(v: LVar) -> Self {
        Term::Var(v)
    }
}

impl From<ExprTerm> for Term {
    fn from(e: ExprTerm) -> Self {
        Term::Expr(e)
    }
}

impl From<i64> for Term {
    fn from(i: i64) -> Self {
        Term::int(i)
    }
}

impl From<i32> for Term {
    fn from(i: i32) -> Self {
        Term::int(i)
    }
}

impl From<f64> for Term {
    fn from(d: f64) -> Self {
        Term::decimal(d)
    }
}

impl From<&str> for Term {
    /// Bare strings become symbols; use [`Term::string`] for string atoms.
    fn from(s: &str) -> Self {
        Term::sym(s)
    }
}

impl From<bool> for Term {
    fn from(b: bool) -> Self {
        Term::boolean(b)
    }
}

/// Builds a proper list from anything convertible to terms.
#[macro_export]
macro_rules! list {
    () => { $crate::term::Term::Nil };
    ($($item:expr),+ $(,)?) => {
        $crate::term::term_from_list(vec![$($crate::term::Term::from($item)),+])
    };
}
