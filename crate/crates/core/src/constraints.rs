//! Constraint stores carried by search states: disequalities and
//! kind predicates. Both are revalidated after every substitution extension.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::goal::{Goal, State, Stream};
use crate::subst::{unify_collect, walk, Substitution};
use crate::term::{LVar, Term};

/// Prohibited binding-sets. Each set is a conjunction of bindings that must
/// never all hold at once.
#[derive(Clone, Debug, Default)]
pub struct DisequalityStore {
    prohibited: Vec<Vec<(LVar, Term)>>,
}

impl DisequalityStore {
    pub fn prohibited(&self) -> &[Vec<(LVar, Term)>] {
        &self.prohibited
    }
}

/// A named test over the shallow value of a bound variable.
#[derive(Clone)]
pub struct Predicate {
    name: Arc<str>,
    test: Arc<dyn Fn(&Term) -> bool + Send + Sync>,
}

impl Predicate {
    pub fn new<F>(name: &str, test: F) -> Self
    where
        F: Fn(&Term) -> bool + Send + Sync + 'static,
    {
        Predicate {
            name: Arc::from(name),
            test: Arc::new(test),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Applies the test to a non-variable term.
    pub fn holds(&self, t: &Term) -> bool {
        (self.test)(t)
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predicate({})", self.name)
    }
}

/// Pending predicate constraints: each entry requires the variable's value
/// to satisfy at least one predicate of its set.
#[derive(Clone, Debug, Default)]
pub struct PredicateStore {
    pending: Vec<(LVar, Arc<[Predicate]>)>,
}

impl PredicateStore {
    pub fn pending(&self) -> impl Iterator<Item = (&LVar, &[Predicate])> {
        self.pending.iter().map(|(v, p)| (v, &**p))
    }
}

/// The stores attached to a state, at most one per kind.
#[derive(Clone, Debug, Default)]
pub struct ConstraintStoreSet {
    diseq: Option<Arc<DisequalityStore>>,
    preds: Option<Arc<PredicateStore>>,
}

impl ConstraintStoreSet {
    pub fn is_empty(&self) -> bool {
        self.diseq.is_none() && self.preds.is_none()
    }

    pub fn disequalities(&self) -> Option<&DisequalityStore> {
        self.diseq.as_deref()
    }

    pub fn predicates(&self) -> Option<&PredicateStore> {
        self.preds.as_deref()
    }

    fn with_prohibited(&self, set: Vec<(LVar, Term)>) -> Self {
        let mut store = self.diseq.as_deref().cloned().unwrap_or_default();
        store.prohibited.push(set);
        ConstraintStoreSet {
            diseq: Some(Arc::new(store)),
            preds: self.preds.clone(),
        }
    }

    fn with_predicates(&self, v: LVar, preds: Arc<[Predicate]>) -> Self {
        let mut store = self.preds.as_deref().cloned().unwrap_or_default();
        store.pending.push((v, preds));
        ConstraintStoreSet {
            diseq: self.diseq.clone(),
            preds: Some(Arc::new(store)),
        }
    }
}

/// Rechecks every store against `s`. Returns the pruned stores, or `None`
/// when some constraint is violated.
pub fn revalidate(
    stores: &ConstraintStoreSet,
    s: &Substitution,
    occurs_check: bool,
) -> Option<ConstraintStoreSet> {
    let diseq = match &stores.diseq {
        None => None,
        Some(store) => {
            let mut kept = Vec::with_capacity(store.prohibited.len());
            for set in &store.prohibited {
                let mut delta = Vec::new();
                let mut trial = s.clone();
                let mut possible = true;
                for (v, t) in set {
                    match unify_collect(&Term::Var(v.clone()), t, &trial, occurs_check, &mut delta) {
                        Some(next) => trial = next,
                        None => {
                            possible = false;
                            break;
                        }
                    }
                }
                if !possible {
                    continue;
                }
                if delta.is_empty() {
                    return None;
                }
                kept.push(delta);
            }
            (!kept.is_empty()).then(|| Arc::new(DisequalityStore { prohibited: kept }))
        }
    };
    let preds = match &stores.preds {
        None => None,
        Some(store) => {
            let mut kept = Vec::with_capacity(store.pending.len());
            for (v, preds) in &store.pending {
                match walk(&Term::Var(v.clone()), s) {
                    Term::Var(w) => kept.push((w, preds.clone())),
                    value => {
                        if !preds.iter().any(|p| p.holds(&value)) {
                            return None;
                        }
                    }
                }
            }
            (!kept.is_empty()).then(|| Arc::new(PredicateStore { pending: kept }))
        }
    };
    Some(ConstraintStoreSet { diseq, preds })
}

/// `u` and `v` must never become equal.
pub fn neq(u: impl Into<Term>, v: impl Into<Term>) -> Goal {
    let (u, v) = (u.into(), v.into());
    Goal::new(move |st: &State| {
        let mut delta = Vec::new();
        match unify_collect(&u, &v, st.subst(), st.occurs_check(), &mut delta) {
            None => Stream::unit(st.clone()),
            Some(_) if delta.is_empty() => Stream::Empty,
            Some(_) => Stream::unit(st.with_constraints(st.constraints().with_prohibited(delta))),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("a predicate constraint needs at least one predicate")]
    NoPredicates,
}

/// Name-keyed predicate table.
#[derive(Clone, Debug, Default)]
pub struct PredicateRegistry {
    preds: HashMap<String, Predicate>,
}

fn is_number(t: &Term) -> bool {
    matches!(
        t.as_atom(),
        Some(crate::term::Atom::Int(_) | crate::term::Atom::Decimal(_))
    )
}

impl PredicateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The launch vocabulary: `integer`, `decimal`, `number`, `symbol`,
    /// `string`, `boolean`, `cons` (any pair, expression terms included),
    /// `nil`, `expr` (expression terms only) and `atomic` (anything that is
    /// not a pair).
    pub fn builtin() -> &'static PredicateRegistry {
        static BUILTIN: OnceLock<PredicateRegistry> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            use crate::term::Atom;
            let mut reg = PredicateRegistry::new();
            reg.register(Predicate::new("integer", |t| matches!(t.as_atom(), Some(Atom::Int(_)))));
            reg.register(Predicate::new("decimal", |t| {
                matches!(t.as_atom(), Some(Atom::Decimal(_)))
            }));
            reg.register(Predicate::new("number", is_number));
            reg.register(Predicate::new("symbol", |t| t.as_symbol().is_some()));
            reg.register(Predicate::new("string", |t| matches!(t.as_atom(), Some(Atom::Str(_)))));
            reg.register(Predicate::new("boolean", |t| matches!(t.as_atom(), Some(Atom::Bool(_)))));
            reg.register(Predicate::new("cons", Term::is_compound));
            reg.register(Predicate::new("nil", |t| matches!(t, Term::Nil)));
            reg.register(Predicate::new("expr", |t| t.as_expr().is_some()));
            reg.register(Predicate::new("atomic", |t| !t.is_compound()));
            reg
        })
    }

    /// Adds or replaces a predicate.
    pub fn register(&mut self, p: Predicate) {
        self.preds.insert(p.name().to_string(), p);
    }

    pub fn get(&self, name: &str) -> Result<Predicate, ConstraintError> {
        self.preds
            .get(name)
            .cloned()
            .ok_or_else(|| ConstraintError::UnknownPredicate(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.preds.keys().map(String::as_str)
    }
}

/// `v` must end up satisfying the named built-in predicate.
pub fn type_constraint(v: impl Into<Term>, kind: &str) -> Result<Goal, ConstraintError> {
    type_constraint_any(v, &[kind])
}

/// `v` must end up satisfying at least one of the named predicates.
pub fn type_constraint_any(v: impl Into<Term>, kinds: &[&str]) -> Result<Goal, ConstraintError> {
    let reg = PredicateRegistry::builtin();
    let preds = kinds
        .iter()
        .map(|k| reg.get(k))
        .collect::<Result<Vec<_>, _>>()?;
    predicate_constraint(v, preds)
}

/// `v` must end up satisfying at least one predicate of `preds`.
pub fn predicate_constraint(
    v: impl Into<Term>,
    preds: Vec<Predicate>,
) -> Result<Goal, ConstraintError> {
    if preds.is_empty() {
        return Err(ConstraintError::NoPredicates);
    }
    let v = v.into();
    let preds: Arc<[Predicate]> = preds.into();
    Ok(Goal::new(move |st: &State| match st.walk(&v) {
        Term::Var(w) => {
            Stream::unit(st.with_constraints(st.constraints().with_predicates(w, preds.clone())))
        }
        value => {
            if preds.iter().any(|p| p.holds(&value)) {
                Stream::unit(st.clone())
            } else {
                Stream::Empty
            }
        }
    }))
}

/// Shorthand for [`type_constraint`] with a built-in kind; panics on an
/// unknown name, so use it only with literal kinds.
pub fn typeo(v: impl Into<Term>, kind: &str) -> Goal {
    type_constraint(v, kind).unwrap_or_else(|e| panic!("{e}"))
}
