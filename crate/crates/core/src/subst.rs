//! Triangular substitutions: walking, unification and reification.
//!
//! All deep operations run on explicit stacks.

use std::collections::HashMap;

use crate::term::{rebuild, Cursor, LVar, OwnedShape, Rebuilder, Term};

/// Persistent map from logic variables to the terms they are bound to.
/// Bound terms may mention further bound variables; [`walk`] follows chains.
#[derive(Clone, Default)]
pub struct Substitution {
    bindings: im::HashMap<LVar, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, v: &LVar) -> Option<&Term> {
        self.bindings.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LVar, &Term)> {
        self.bindings.iter()
    }

    /// Adds a binding without any check. Callers are responsible for
    /// keeping the substitution acyclic.
    pub fn extend_unchecked(&self, v: LVar, t: Term) -> Substitution {
        Substitution {
            bindings: self.bindings.update(v, t),
        }
    }

    pub fn walk(&self, t: &Term) -> Term {
        walk(t, self)
    }

    pub fn walk_star(&self, t: &Term) -> Term {
        walk_star(t, self)
    }

    pub fn unify(&self, u: &Term, v: &Term) -> Option<Substitution> {
        unify(u, v, self)
    }

    pub fn reify(&self, t: &Term) -> Term {
        reify(t, self)
    }
}

impl std::fmt::Debug for Substitution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut entries: Vec<_> = self.bindings.iter().collect();
        entries.sort_by_key(|(v, _)| v.id());
        f.debug_map().entries(entries).finish()
    }
}

/// Follows variable bindings until reaching a non-variable or an unbound
/// variable. Never descends into structure.
pub fn walk(t: &Term, s: &Substitution) -> Term {
    let mut cur = t;
    while let Term::Var(v) = cur {
        match s.get(v) {
            Some(next) => cur = next,
            None => break,
        }
    }
    cur.clone()
}

struct DeepWalk<'s>(&'s Substitution);

impl Rebuilder for DeepWalk<'_> {
    fn enter(&mut self, t: Term) -> Term {
        walk(&t, self.0)
    }
}

/// Resolves every variable inside `t`, through cons cells and expression
/// operands alike.
pub fn walk_star(t: &Term, s: &Substitution) -> Term {
    rebuild(t, &mut DeepWalk(s))
}

/// True when `v` occurs in `walk_star(t, s)`.
pub fn occurs(v: &LVar, t: &Term, s: &Substitution) -> bool {
    let mut stack = vec![t.clone()];
    while let Some(t) = stack.pop() {
        match walk(&t, s) {
            Term::Var(w) => {
                if &w == v {
                    return true;
                }
            }
            Term::Cons(c) => {
                stack.push(c.cdr().clone());
                stack.push(c.car().clone());
            }
            Term::Expr(e) => stack.extend(e.items().iter().cloned()),
            Term::Atom(_) | Term::Nil => {}
        }
    }
    false
}

/// Unifies `u` and `v`, returning the extended substitution or `None` on a
/// clash or occurs-check violation.
pub fn unify(u: &Term, v: &Term, s: &Substitution) -> Option<Substitution> {
    let mut delta = Vec::new();
    unify_collect(u, v, s, true, &mut delta)
}

/// Unification without the occurs check. May build cyclic substitutions.
pub fn unify_no_occurs_check(u: &Term, v: &Term, s: &Substitution) -> Option<Substitution> {
    let mut delta = Vec::new();
    unify_collect(u, v, s, false, &mut delta)
}

fn resolve(c: Cursor, s: &Substitution) -> Cursor {
    match c {
        Cursor::Term(t @ Term::Var(_)) => Cursor::Term(walk(&t, s)),
        other => other,
    }
}

/// Unification that also records, in order, every binding it added.
pub(crate) fn unify_collect(
    u: &Term,
    v: &Term,
    s: &Substitution,
    occurs_check: bool,
    delta: &mut Vec<(LVar, Term)>,
) -> Option<Substitution> {
    let mut s = s.clone();
    let mut stack = vec![(Cursor::Term(u.clone()), Cursor::Term(v.clone()))];
    while let Some((a, b)) = stack.pop() {
        let a = resolve(a, &s);
        let b = resolve(b, &s);
        match (&a, &b) {
            (Cursor::Term(Term::Var(x)), Cursor::Term(Term::Var(y))) if x == y => continue,
            (Cursor::Term(Term::Expr(x)), Cursor::Term(Term::Expr(y))) => {
                if x.ptr_eq(y) {
                    continue;
                }
                if x.len() != y.len() {
                    return None;
                }
                for (p, q) in x.items().iter().zip(y.items()).rev() {
                    stack.push((Cursor::Term(p.clone()), Cursor::Term(q.clone())));
                }
                continue;
            }
            (Cursor::Term(Term::Cons(x)), Cursor::Term(Term::Cons(y)))
                if std::sync::Arc::ptr_eq(x, y) =>
            {
                continue
            }
            _ => {}
        }
        match (a.shape(), b.shape()) {
            (OwnedShape::Var(x), _) => {
                let t = b.into_term();
                if occurs_check && occurs(&x, &t, &s) {
                    return None;
                }
                delta.push((x.clone(), t.clone()));
                s = s.extend_unchecked(x, t);
            }
            (_, OwnedShape::Var(y)) => {
                let t = a.into_term();
                if occurs_check && occurs(&y, &t, &s) {
                    return None;
                }
                delta.push((y.clone(), t.clone()));
                s = s.extend_unchecked(y, t);
            }
            (OwnedShape::Atom(x), OwnedShape::Atom(y)) if x == y => {}
            (OwnedShape::Nil, OwnedShape::Nil) => {}
            (OwnedShape::Pair(ah, at), OwnedShape::Pair(bh, bt)) => {
                stack.push((at, bt));
                stack.push((ah, bh));
            }
            _ => return None,
        }
    }
    Some(s)
}

/// Display names handed out during reification, in first-encounter order.
/// Sharing one instance across several terms names their variables
/// consistently.
#[derive(Debug, Default)]
pub struct ReifyNames {
    names: HashMap<LVar, LVar>,
}

impl ReifyNames {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn name(&mut self, v: LVar) -> LVar {
        // Already-reified terms keep their names, which makes reify idempotent.
        if v.display_index().is_some() {
            return v;
        }
        let next = self.names.len() as u64;
        self.names.entry(v).or_insert_with(|| LVar::display(next)).clone()
    }
}

struct Reifier<'a> {
    s: &'a Substitution,
    names: &'a mut ReifyNames,
}

impl Rebuilder for Reifier<'_> {
    fn enter(&mut self, t: Term) -> Term {
        walk(&t, self.s)
    }

    fn leaf(&mut self, t: Term) -> Term {
        match t {
            Term::Var(v) => Term::Var(self.names.name(v)),
            other => other,
        }
    }
}

/// `walk_star(t, s)` with every remaining variable replaced by a display
/// variable `_0`, `_1`, ... in left-to-right, depth-first order.
pub fn reify(t: &Term, s: &Substitution) -> Term {
    reify_with(t, s, &mut ReifyNames::new())
}

pub fn reify_with(t: &Term, s: &Substitution, names: &mut ReifyNames) -> Term {
    rebuild(t, &mut Reifier { s, names })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::list;
    use crate::term::{cons, named_var, term_from_list, var};

    fn bind(s: &Substitution, v: &Term, t: Term) -> Substitution {
        s.extend_unchecked(v.as_var().unwrap().clone(), t)
    }

    #[test]
    fn walk_follows_chains_only() {
        let (x, y) = (var(), var());
        let s = bind(&bind(&Substitution::new(), &x, y.clone()), &y, 3.into());
        assert_eq!(walk(&x, &s), Term::int(3));
        assert_eq!(walk(&x, &Substitution::new()), x);
        let s1 = bind(&Substitution::new(), &x, 1.into());
        let l = list![x.clone(), 2];
        assert!(walk(&l, &s1).same_node(&l));
    }

    #[test]
    fn walk_star_resolves_deeply() {
        let (x, y) = (var(), var());
        let s = bind(&bind(&Substitution::new(), &x, 1.into()), &y, list![2, 3]);
        assert_eq!(walk_star(&cons(x, y), &s), list![1, 2, 3]);
        assert_eq!(walk_star(&Term::int(5), &s), Term::int(5));
    }

    #[test]
    fn unify_cons_pattern() {
        let (a, d) = (named_var("car"), named_var("cdr"));
        let s = unify(&list![1, 2], &cons(a.clone(), d.clone()), &Substitution::new()).unwrap();
        assert_eq!(s.walk_star(&a), Term::int(1));
        assert_eq!(s.walk_star(&d), list![2]);
    }

    #[test]
    fn unify_identical_var_adds_nothing() {
        let x = var();
        assert_eq!(unify(&x, &x, &Substitution::new()).unwrap().len(), 0);
    }

    #[test]
    fn occurs_check_rejects_cycles() {
        let x = var();
        assert!(unify(&x, &cons(1.into(), x.clone()), &Substitution::new()).is_none());
        assert!(unify_no_occurs_check(&x, &cons(1.into(), x.clone()), &Substitution::new()).is_some());
    }

    #[test]
    fn occurs_through_bindings() {
        let (x, y) = (var(), var());
        let xv = x.as_var().unwrap();
        assert!(occurs(xv, &list![1, list![2, x.clone()]], &Substitution::new()));
        assert!(occurs(xv, &y, &bind(&Substitution::new(), &y, x.clone())));
        assert!(!occurs(xv, &list![1, 2], &Substitution::new()));
    }

    #[test]
    fn expr_unifies_with_cons_spine() {
        let e = crate::expr::app("add", [1.into(), 2.into()]);
        let (r, d) = (var(), var());
        let s = unify(&e, &cons(r.clone(), d.clone()), &Substitution::new()).unwrap();
        assert_eq!(s.walk_star(&r), Term::sym("add"));
        assert_eq!(s.walk_star(&d), list![1, 2]);
        let other = crate::expr::app("add", [1.into()]);
        assert!(unify(&e, &other, &Substitution::new()).is_none());
    }

    #[test]
    fn reify_names_first_encounter() {
        let (x, y) = (var(), var());
        assert_eq!(reify(&x, &Substitution::new()).to_string(), "?_0");
        let r = reify(&list![x.clone(), y, x], &Substitution::new());
        assert_eq!(r.to_string(), "(?_0 ?_1 ?_0)");
        assert_eq!(reify(&r, &Substitution::new()), r);
    }

    #[test]
    fn deep_structures_are_stack_safe() {
        let n = 100_000;
        let vars: Vec<Term> = (0..n).map(|_| var()).collect();
        let pattern = term_from_list(vars.clone());
        let ground = term_from_list((0..n).map(Term::int).collect::<Vec<_>>());
        let s = unify(&pattern, &ground, &Substitution::new()).unwrap();
        assert_eq!(walk_star(&pattern, &s), ground);
        assert_eq!(reify(&pattern, &s), ground);

        let mut left = var();
        let mut left_ground = Term::int(0);
        for i in 0..n {
            left = cons(left, Term::int(i));
            left_ground = cons(left_ground, Term::int(i));
        }
        let s = unify(&left, &left_ground, &Substitution::new()).unwrap();
        assert_eq!(walk_star(&left, &s), left_ground);
    }
}
