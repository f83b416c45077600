//! Evaluable operator applications.
//!
//! An [`ExprTerm`] is an immutable, nonempty sequence whose first item is the
//! operator position. It unifies with the cons spine `(op . operands)` and
//! can evaluate itself against an [`OperatorRegistry`], memoizing the result.

use std::collections::HashMap;
use std::fmt;
use std::mem;
use std::ops::Range;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::term::{drop_iteratively, list_from_term, Atom, Term};

struct ExprInner {
    items: Vec<Term>,
    cache: OnceLock<Term>,
}

impl Drop for ExprInner {
    fn drop(&mut self) {
        let mut pending: Vec<Term> = self.items.drain(..).filter(Term::is_compound).collect();
        if let Some(cached) = self.cache.take() {
            if cached.is_compound() {
                pending.push(cached);
            }
        }
        if !pending.is_empty() {
            drop_iteratively(pending);
        }
    }
}

/// An operator application such as `(add 1 2)`.
#[derive(Clone)]
pub struct ExprTerm(Arc<ExprInner>);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("an expression needs at least an operator position")]
    Empty,
    #[error("slice {start}..{end} is out of bounds for an expression of length {len}")]
    SliceOutOfBounds { start: usize, end: usize, len: usize },
}

impl ExprTerm {
    pub fn new(items: Vec<Term>) -> Result<ExprTerm, ExprError> {
        if items.is_empty() {
            return Err(ExprError::Empty);
        }
        Ok(ExprTerm(Arc::new(ExprInner {
            items,
            cache: OnceLock::new(),
        })))
    }

    pub fn items(&self) -> &[Term] {
        &self.0.items
    }

    pub fn operator(&self) -> &Term {
        &self.0.items[0]
    }

    pub fn operands(&self) -> &[Term] {
        &self.0.items[1..]
    }

    pub fn len(&self) -> usize {
        self.0.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, index: usize) -> Option<&Term> {
        self.0.items.get(index)
    }

    /// A new expression over `items[range]`, with its own empty cache.
    pub fn slice(&self, range: Range<usize>) -> Result<ExprTerm, ExprError> {
        let len = self.len();
        if range.start > range.end || range.end > len {
            return Err(ExprError::SliceOutOfBounds {
                start: range.start,
                end: range.end,
                len,
            });
        }
        ExprTerm::new(self.0.items[range].to_vec())
    }

    /// Reconstructs the expression from `items`. When every item is the very
    /// node already stored, the existing value (and its cache) is returned.
    pub fn rebuild(&self, items: Vec<Term>) -> ExprTerm {
        let unchanged = items.len() == self.len()
            && items.iter().zip(self.items()).all(|(a, b)| a.same_node(b));
        if unchanged {
            self.clone()
        } else {
            // Callers pass the item count of an existing expression, never zero.
            ExprTerm::new(items).expect("rebuild with no items")
        }
    }

    /// The memoized evaluation result, if this expression was evaluated.
    pub fn cached(&self) -> Option<&Term> {
        self.0.cache.get()
    }

    pub(crate) fn ptr_eq(&self, other: &ExprTerm) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Moves owned children into `pending` so the caller can free them
    /// without recursion.
    pub(crate) fn release_into(self, pending: &mut Vec<Term>) {
        if let Some(mut inner) = Arc::into_inner(self.0) {
            pending.extend(mem::take(&mut inner.items).into_iter().filter(Term::is_compound));
            if let Some(cached) = inner.cache.take() {
                if cached.is_compound() {
                    pending.push(cached);
                }
            }
        }
    }
}

impl fmt::Debug for ExprTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", Term::Expr(self.clone()))
    }
}

/// Builds an expression term from its items.
pub fn make_expr<I>(items: I) -> Result<ExprTerm, ExprError>
where
    I: IntoIterator<Item = Term>,
{
    ExprTerm::new(items.into_iter().collect())
}

/// `(op args...)` as a term, with `op` a symbol.
pub fn app<I>(op: &str, args: I) -> Term
where
    I: IntoIterator<Item = Term>,
{
    let mut items = vec![Term::sym(op)];
    items.extend(args);
    Term::Expr(ExprTerm::new(items).expect("operator position is always present"))
}

/// The expression `rator` applied to `rands`.
pub fn expr_of_application(rator: Term, rands: Vec<Term>) -> ExprTerm {
    let mut items = Vec::with_capacity(rands.len() + 1);
    items.push(rator);
    items.extend(rands);
    ExprTerm::new(items).expect("operator position is always present")
}

/// Splits an expression into its operator and operands.
pub fn application_of_expr(e: &ExprTerm) -> (Term, Vec<Term>) {
    (e.operator().clone(), e.operands().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Fixed(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Fixed(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Fixed(k) => write!(f, "{k}"),
            Arity::AtLeast(k) => write!(f, "at least {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("cannot evaluate a term containing logic variables: {0}")]
    NonGround(String),
    #[error("operator position must be a symbol, found {0}")]
    NotAnOperator(String),
    #[error("unknown operator `{0}`")]
    UnboundOperator(String),
    #[error("operator `{op}` expects {expected} operands, got {got}")]
    Arity {
        op: String,
        expected: Arity,
        got: usize,
    },
    #[error("domain error in `{op}`: {reason}")]
    Domain { op: String, reason: String },
}

pub type EvalFn = Arc<dyn Fn(&[Term]) -> Result<Term, EvalError> + Send + Sync>;

/// A registered operator: its arity, evaluator and algebraic attributes.
#[derive(Clone)]
pub struct OperatorDef {
    name: Arc<str>,
    arity: Arity,
    eval_fn: EvalFn,
    commutative: bool,
    associative: bool,
}

impl OperatorDef {
    pub fn new<F>(name: &str, arity: Arity, eval_fn: F) -> Self
    where
        F: Fn(&[Term]) -> Result<Term, EvalError> + Send + Sync + 'static,
    {
        OperatorDef {
            name: Arc::from(name),
            arity,
            eval_fn: Arc::new(eval_fn),
            commutative: false,
            associative: false,
        }
    }

    pub fn commutative(mut self) -> Self {
        self.commutative = true;
        self
    }

    pub fn associative(mut self) -> Self {
        self.associative = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn is_commutative(&self) -> bool {
        self.commutative
    }

    pub fn is_associative(&self) -> bool {
        self.associative
    }

    pub fn call(&self, args: &[Term]) -> Result<Term, EvalError> {
        if !self.arity.accepts(args.len()) {
            return Err(EvalError::Arity {
                op: self.name.to_string(),
                expected: self.arity,
                got: args.len(),
            });
        }
        (self.eval_fn)(args)
    }
}

impl fmt::Debug for OperatorDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorDef")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("commutative", &self.commutative)
            .field("associative", &self.associative)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("operator `{0}` is already registered")]
pub struct DuplicateOperator(pub String);

/// Symbol-keyed operator table consulted at evaluation time.
#[derive(Debug, Clone, Default)]
pub struct OperatorRegistry {
    ops: HashMap<Arc<str>, OperatorDef>,
}

impl OperatorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, def: OperatorDef) -> Result<(), DuplicateOperator> {
        if self.ops.contains_key(def.name()) {
            return Err(DuplicateOperator(def.name().to_string()));
        }
        self.ops.insert(def.name.clone(), def);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&OperatorDef> {
        self.ops.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.ops.contains_key(name)
    }

    pub fn is_commutative(&self, name: &str) -> bool {
        self.get(name).is_some_and(OperatorDef::is_commutative)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.ops.keys().map(|k| &**k)
    }

    /// `add`, `sub`, `mul`, `div`, `log`, `exp` and the list reduction `sum`.
    pub fn arithmetic() -> Self {
        let mut reg = Self::new();
        let defs = [
            OperatorDef::new("add", Arity::AtLeast(1), |args| fold_numbers("add", args, Num::add))
                .commutative(),
            OperatorDef::new("mul", Arity::AtLeast(1), |args| fold_numbers("mul", args, Num::mul))
                .commutative(),
            OperatorDef::new("sub", Arity::Fixed(2), |args| fold_numbers("sub", args, Num::sub)),
            OperatorDef::new("div", Arity::Fixed(2), |args| {
                let a = Num::from_term("div", &args[0])?;
                let b = Num::from_term("div", &args[1])?;
                a.div(b).map(Num::into_term)
            }),
            OperatorDef::new("log", Arity::Fixed(1), |args| {
                let x = Num::from_term("log", &args[0])?.to_f64();
                if x <= 0.0 {
                    return Err(EvalError::Domain {
                        op: "log".into(),
                        reason: format!("log of non-positive value {x}"),
                    });
                }
                Ok(Term::decimal(x.ln()))
            }),
            OperatorDef::new("exp", Arity::Fixed(1), |args| {
                Ok(Term::decimal(Num::from_term("exp", &args[0])?.to_f64().exp()))
            }),
            OperatorDef::new("sum", Arity::Fixed(1), |args| {
                let values = match &args[0] {
                    Term::Atom(_) => return fold_numbers("sum", &args[..1], Num::add),
                    list => list_from_term(list).map_err(|e| EvalError::Domain {
                        op: "sum".into(),
                        reason: e.to_string(),
                    })?,
                };
                if values.is_empty() {
                    return Ok(Term::int(0));
                }
                fold_numbers("sum", &values, Num::add)
            }),
        ];
        for def in defs {
            reg.register(def).expect("arithmetic operators are distinct");
        }
        reg
    }
}

#[derive(Debug, Clone)]
enum Num {
    Int(BigInt),
    Dec(f64),
}

impl Num {
    fn from_term(op: &str, t: &Term) -> Result<Num, EvalError> {
        match t {
            Term::Atom(Atom::Int(i)) => Ok(Num::Int(i.clone())),
            Term::Atom(Atom::Decimal(d)) => Ok(Num::Dec(*d)),
            other => Err(EvalError::Domain {
                op: op.to_string(),
                reason: format!("expected a number, found {other}"),
            }),
        }
    }

    fn to_f64(&self) -> f64 {
        match self {
            Num::Int(i) => i.to_f64().unwrap_or(f64::NAN),
            Num::Dec(d) => *d,
        }
    }

    fn into_term(self) -> Term {
        match self {
            Num::Int(i) => Term::int(i),
            Num::Dec(d) => Term::decimal(d),
        }
    }

    fn add(self, other: Num) -> Result<Num, EvalError> {
        Ok(match (self, other) {
            (Num::Int(a), Num::Int(b)) => Num::Int(a + b),
            (a, b) => Num::Dec(a.to_f64() + b.to_f64()),
        })
    }

    fn sub(self, other: Num) -> Result<Num, EvalError> {
        Ok(match (self, other) {
            (Num::Int(a), Num::Int(b)) => Num::Int(a - b),
            (a, b) => Num::Dec(a.to_f64() - b.to_f64()),
        })
    }

    fn mul(self, other: Num) -> Result<Num, EvalError> {
        Ok(match (self, other) {
            (Num::Int(a), Num::Int(b)) => Num::Int(a * b),
            (a, b) => Num::Dec(a.to_f64() * b.to_f64()),
        })
    }

    /// Exact when both sides are integers and the division is exact;
    /// otherwise decimal.
    fn div(self, other: Num) -> Result<Num, EvalError> {
        let zero = match &other {
            Num::Int(b) => b.is_zero(),
            Num::Dec(b) => *b == 0.0,
        };
        if zero {
            return Err(EvalError::Domain {
                op: "div".into(),
                reason: "division by zero".into(),
            });
        }
        Ok(match (self, other) {
            (Num::Int(a), Num::Int(b)) if (&a % &b).is_zero() => Num::Int(a / b),
            (a, b) => Num::Dec(a.to_f64() / b.to_f64()),
        })
    }
}

fn fold_numbers(
    op: &str,
    args: &[Term],
    f: fn(Num, Num) -> Result<Num, EvalError>,
) -> Result<Term, EvalError> {
    let mut nums = args.iter().map(|a| Num::from_term(op, a));
    let first = nums.next().expect("arity checked by caller")?;
    nums.try_fold(first, |acc, n| f(acc, n?)).map(Num::into_term)
}

/// Evaluates a ground expression bottom-up, memoizing every evaluated node.
pub fn eval_expr(e: &ExprTerm, reg: &OperatorRegistry) -> Result<Term, EvalError> {
    eval_term(&Term::Expr(e.clone()), reg)
}

/// Evaluates any ground term: atoms and `Nil` are values, lists evaluate
/// elementwise, expressions apply their operator.
pub fn eval_term(t: &Term, reg: &OperatorRegistry) -> Result<Term, EvalError> {
    enum Task {
        Visit(Term),
        Apply(ExprTerm),
        Pair,
    }

    let mut tasks = vec![Task::Visit(t.clone())];
    let mut values: Vec<Term> = Vec::new();
    while let Some(task) = tasks.pop() {
        match task {
            Task::Visit(t) => match t {
                Term::Var(_) => return Err(EvalError::NonGround(t.to_string())),
                Term::Atom(_) | Term::Nil => values.push(t),
                Term::Cons(c) => {
                    tasks.push(Task::Pair);
                    tasks.push(Task::Visit(c.cdr().clone()));
                    tasks.push(Task::Visit(c.car().clone()));
                }
                Term::Expr(e) => {
                    if let Some(v) = e.cached() {
                        values.push(v.clone());
                        continue;
                    }
                    if !e.operator().is_ground() || !e.operands().iter().all(Term::is_ground) {
                        return Err(EvalError::NonGround(Term::Expr(e).to_string()));
                    }
                    let operands: Vec<Term> = e.operands().to_vec();
                    tasks.push(Task::Apply(e));
                    tasks.extend(operands.into_iter().rev().map(Task::Visit));
                }
            },
            Task::Pair => {
                let cdr = values.pop().expect("cdr value");
                let car = values.pop().expect("car value");
                values.push(crate::term::cons(car, cdr));
            }
            Task::Apply(e) => {
                let args = values.split_off(values.len() - e.operands().len());
                let name = e
                    .operator()
                    .as_symbol()
                    .ok_or_else(|| EvalError::NotAnOperator(e.operator().to_string()))?;
                let def = reg
                    .get(name)
                    .ok_or_else(|| EvalError::UnboundOperator(name.to_string()))?;
                let value = def.call(&args)?;
                // Racing evaluators compute the same value; the first one is kept.
                let _ = e.0.cache.set(value.clone());
                values.push(value);
            }
        }
    }
    Ok(values.pop().expect("evaluation produces one value"))
}

/// Rewrites proper lists whose head is a registered operator symbol into
/// expression terms, everywhere inside `t`.
pub fn exprify(t: &Term, reg: &OperatorRegistry) -> Term {
    struct Exprify<'r>(&'r OperatorRegistry);
    impl crate::term::Rebuilder for Exprify<'_> {
        fn built_pair(&mut self, node: Term) -> Term {
            let head_is_op = match &node {
                Term::Cons(c) => c.car().as_symbol().is_some_and(|s| self.0.contains(s)),
                _ => false,
            };
            if !head_is_op {
                return node;
            }
            match list_from_term(&node) {
                Ok(items) => Term::Expr(ExprTerm::new(items).expect("nonempty list")),
                Err(_) => node,
            }
        }
    }
    crate::term::rebuild(t, &mut Exprify(reg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::list;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn counting_registry(counter: Arc<AtomicUsize>) -> OperatorRegistry {
        let mut reg = OperatorRegistry::new();
        reg.register(OperatorDef::new("add", Arity::AtLeast(1), move |args| {
            counter.fetch_add(1, Ordering::SeqCst);
            fold_numbers("add", args, Num::add)
        }))
        .unwrap();
        reg
    }

    #[test]
    fn construction_and_indexing() {
        let e = make_expr([Term::sym("add"), 1.into(), 2.into()]).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e.get(1), Some(&Term::int(1)));
        let head = e.slice(0..2).unwrap();
        assert_eq!(head.items(), &[Term::sym("add"), Term::int(1)]);
        assert!(head.cached().is_none());
        assert_eq!(make_expr(Vec::new()).unwrap_err(), ExprError::Empty);
        assert!(e.slice(0..0).is_err());
        assert!(e.slice(1..5).is_err());
        let nullary = make_expr([Term::sym("f")]).unwrap();
        assert_eq!(nullary.operands().len(), 0);
    }

    #[test]
    fn eval_simple_and_nested() {
        let reg = OperatorRegistry::arithmetic();
        assert_eq!(eval_term(&app("add", [1.into(), 2.into()]), &reg).unwrap(), Term::int(3));
        let nested = app("add", [app("mul", [2.into(), 3.into()]), 4.into()]);
        assert_eq!(eval_term(&nested, &reg).unwrap(), Term::int(10));
    }

    #[test]
    fn eval_errors() {
        let reg = OperatorRegistry::arithmetic();
        let x = crate::term::var();
        assert!(matches!(
            eval_term(&app("add", [x, 2.into()]), &reg),
            Err(EvalError::NonGround(_))
        ));
        assert!(matches!(
            eval_term(&app("frob", [1.into()]), &reg),
            Err(EvalError::UnboundOperator(_))
        ));
        assert!(matches!(
            eval_term(&app("sub", [1.into()]), &reg),
            Err(EvalError::Arity { .. })
        ));
        assert!(matches!(
            eval_term(&app("div", [1.into(), 0.into()]), &reg),
            Err(EvalError::Domain { .. })
        ));
        assert!(matches!(
            eval_term(&app("log", [0.into()]), &reg),
            Err(EvalError::Domain { .. })
        ));
        assert!(matches!(
            eval_term(&app("add", [Term::sym("a")]), &reg),
            Err(EvalError::Domain { .. })
        ));
    }

    #[test]
    fn numeric_promotion() {
        let reg = OperatorRegistry::arithmetic();
        let ev = |t: Term| eval_term(&t, &reg).unwrap();
        assert_eq!(ev(app("add", [1.into(), 2.5.into()])), Term::decimal(3.5));
        assert_eq!(ev(app("div", [6.into(), 3.into()])), Term::int(2));
        assert_eq!(ev(app("div", [7.into(), 2.into()])), Term::decimal(3.5));
        assert_eq!(ev(app("exp", [0.into()])), Term::decimal(1.0));
        assert_eq!(ev(app("log", [1.into()])), Term::decimal(0.0));
        assert_eq!(ev(app("sum", [list![1, 2, 3]])), Term::int(6));
        assert_eq!(ev(app("sum", [7.into()])), Term::int(7));
        assert_eq!(ev(app("sum", [Term::Nil])), Term::int(0));
    }

    #[test]
    fn cache_avoids_reevaluation() {
        let counter = Arc::new(AtomicUsize::new(0));
        let reg = counting_registry(counter.clone());
        let e = make_expr([Term::sym("add"), 1.into(), 2.into()]).unwrap();
        assert_eq!(eval_expr(&e, &reg).unwrap(), Term::int(3));
        assert_eq!(counter.load(Ordering::SeqCst), 1);
        assert_eq!(eval_expr(&e, &reg).unwrap(), Term::int(3));
        assert_eq!(counter.load(Ordering::SeqCst), 1);

        let rebuilt = e.rebuild(e.items().to_vec());
        assert_eq!(eval_expr(&rebuilt, &reg).unwrap(), Term::int(3));
        assert_eq!(counter.load(Ordering::SeqCst), 1);

        let changed = e.rebuild(vec![Term::sym("add"), 1.into(), 5.into()]);
        assert!(changed.cached().is_none());
        assert_eq!(eval_expr(&changed, &reg).unwrap(), Term::int(6));
        assert_eq!(counter.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn application_round_trip() {
        let inner = app("*", [1.into(), 2.into()]);
        let e = expr_of_application(Term::sym("+"), vec![inner.clone(), 3.into()]);
        assert_eq!(Term::Expr(e.clone()).to_string(), "(+ (* 1 2) 3)");
        let (rator, rands) = application_of_expr(&e);
        assert_eq!(rator, Term::sym("+"));
        assert_eq!(rands, vec![inner, Term::int(3)]);
        let (f, none) = application_of_expr(&make_expr([Term::sym("f")]).unwrap());
        assert_eq!((f, none.len()), (Term::sym("f"), 0));
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut reg = OperatorRegistry::arithmetic();
        let err = reg
            .register(OperatorDef::new("add", Arity::Fixed(2), |a| Ok(a[0].clone())))
            .unwrap_err();
        assert_eq!(err, DuplicateOperator("add".into()));
        assert!(reg.is_commutative("add") && reg.is_commutative("mul"));
        assert!(!reg.is_commutative("sub"));
    }

    #[test]
    fn exprify_converts_registered_heads() {
        let reg = OperatorRegistry::arithmetic();
        let raw = list![Term::sym("add"), 1, list![Term::sym("mul"), 2, 3]];
        let converted = exprify(&raw, &reg);
        assert!(converted.as_expr().is_some());
        assert_eq!(converted, raw);
        assert_eq!(eval_term(&converted, &reg).unwrap(), Term::int(7));
        let data = list![1, 2];
        assert!(exprify(&data, &reg).as_expr().is_none());
    }
}
