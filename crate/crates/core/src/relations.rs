//! Relational building blocks for rewriting: list relations, permutations,
//! term-graph walking, fixed-point reduction and commutative matching.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;

use crate::constraints::typeo;
use crate::expr::{expr_of_application, OperatorRegistry};
use crate::goal::{conde, delay, eq, lall, lany, lany_prefer, Goal, GoalError, State, Stream};
use crate::subst::{walk, walk_star, Substitution};
use crate::term::{cons, term_from_list, var, LVar, Term};

/// A binary relation: a goal constructor over two terms.
#[derive(Clone)]
pub struct Relation(Arc<dyn Fn(&Term, &Term) -> Goal + Send + Sync>);

impl Relation {
    pub fn new<F>(f: F) -> Relation
    where
        F: Fn(&Term, &Term) -> Goal + Send + Sync + 'static,
    {
        Relation(Arc::new(f))
    }

    pub fn apply(&self, a: &Term, b: &Term) -> Goal {
        (self.0)(a, b)
    }

    /// The union of several relations.
    pub fn any(rels: Vec<Relation>) -> Relation {
        Relation::new(move |a, b| lany(rels.iter().map(|r| r.apply(a, b))))
    }

    /// Plain unification as a relation.
    pub fn eq() -> Relation {
        Relation::new(|a, b| eq(a.clone(), b.clone()))
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Relation(..)")
    }
}

/// `pair` is `(a . d)`.
pub fn conso(a: impl Into<Term>, d: impl Into<Term>, pair: impl Into<Term>) -> Goal {
    eq(cons(a.into(), d.into()), pair.into())
}

/// `x` is an element of the list `coll`.
pub fn membero(x: impl Into<Term>, coll: impl Into<Term>) -> Goal {
    let (x, coll) = (x.into(), coll.into());
    let (head, tail) = (var(), var());
    let x2 = x.clone();
    let tail2 = tail.clone();
    lall([
        conso(head.clone(), tail, coll),
        lany([eq(x, head), delay(move || membero(x2.clone(), tail2.clone()))]),
    ])
}

/// Elements of the list `t` when its spine is complete under `s`.
fn proper_list(t: &Term, s: &Substitution) -> Option<Vec<Term>> {
    let mut out = Vec::new();
    let mut cur = walk(t, s);
    loop {
        match cur {
            Term::Nil => return Some(out),
            Term::Cons(c) => {
                out.push(c.car().clone());
                cur = walk(c.cdr(), s);
            }
            Term::Expr(e) => {
                out.extend(e.items().iter().cloned());
                return Some(out);
            }
            _ => return None,
        }
    }
}

fn distinct_permutations(items: Vec<Term>) -> impl Iterator<Item = Vec<Term>> + Send {
    let n = items.len();
    let mut seen = HashSet::new();
    items
        .into_iter()
        .permutations(n)
        .filter(move |p| seen.insert(p.clone()))
}

/// `a` and `b` are proper lists holding the same multiset of elements.
///
/// With both sides ground this is a multiset comparison. With one side a
/// proper list, the distinct permutations of that side are enumerated.
/// When neither spine is known the goal aborts the search with a
/// groundedness error.
pub fn permuteo(a: impl Into<Term>, b: impl Into<Term>) -> Goal {
    let (a, b) = (a.into(), b.into());
    Goal::new(move |st: &State| {
        let la = proper_list(&a, st.subst());
        let lb = proper_list(&b, st.subst());
        match (la, lb) {
            (None, None) => Stream::Failed(GoalError::Groundedness(format!(
                "permuteo needs at least one proper list, got {} and {}",
                st.reify(&a),
                st.reify(&b)
            ))),
            (Some(xs), Some(ys)) => {
                let xs: Vec<Term> = xs.iter().map(|x| st.walk_star(x)).collect();
                let ys: Vec<Term> = ys.iter().map(|y| st.walk_star(y)).collect();
                if xs.len() != ys.len() {
                    return Stream::Empty;
                }
                if xs.iter().chain(&ys).all(Term::is_ground) {
                    let mut counts: HashMap<&Term, i64> = HashMap::new();
                    for x in &xs {
                        *counts.entry(x).or_default() += 1;
                    }
                    for y in &ys {
                        *counts.entry(y).or_default() -= 1;
                    }
                    return if counts.values().all(|&c| c == 0) {
                        Stream::unit(st.clone())
                    } else {
                        Stream::Empty
                    };
                }
                enumerate_permutations(st, xs, term_from_list(ys))
            }
            (Some(xs), None) => enumerate_permutations(st, xs, b.clone()),
            (None, Some(ys)) => enumerate_permutations(st, ys, a.clone()),
        }
    })
}

fn enumerate_permutations(st: &State, items: Vec<Term>, other: Term) -> Stream {
    let st = st.clone();
    Stream::from_iter(
        distinct_permutations(items)
            .filter_map(move |p| st.unify(&term_from_list(p), &other)),
    )
}

/// `rator` applied to the list `rands` is `term`. Builds an expression term
/// when `term` is unknown and `rands` is a complete list, a cons spine
/// otherwise.
pub fn applyo(rator: impl Into<Term>, rands: impl Into<Term>, term: impl Into<Term>) -> Goal {
    let (rator, rands, term) = (rator.into(), rands.into(), term.into());
    Goal::new(move |st: &State| {
        if st.walk(&term).is_var() {
            if let Some(items) = proper_list(&rands, st.subst()) {
                let e = expr_of_application(rator.clone(), items);
                return eq(term.clone(), Term::Expr(e)).apply(st);
            }
        }
        eq(term.clone(), cons(rator.clone(), rands.clone())).apply(st)
    })
}

/// Relates `l1` and `l2` elementwise by `rel`; when both lists are still
/// unknown they may also share a fresh tail.
pub fn mapo(rel: &Relation, l1: impl Into<Term>, l2: impl Into<Term>) -> Goal {
    let (rel, l1, l2) = (rel.clone(), l1.into(), l2.into());
    Goal::new(move |st: &State| {
        let both_fresh = st.walk(&l1).is_var() && st.walk(&l2).is_var();
        let (a, d, b, e) = (var(), var(), var(), var());
        let mut clauses = Vec::with_capacity(3);
        if both_fresh {
            clauses.push(vec![eq(l1.clone(), l2.clone())]);
        }
        clauses.push(vec![eq(l1.clone(), Term::Nil), eq(l2.clone(), Term::Nil)]);
        let (r1, r2) = (rel.clone(), rel.clone());
        let (a2, b2, d2, e2) = (a.clone(), b.clone(), d.clone(), e.clone());
        clauses.push(vec![
            conso(a, d, l1.clone()),
            conso(b, e, l2.clone()),
            delay(move || r1.apply(&a2, &b2)),
            delay(move || mapo(&r2, d2.clone(), e2.clone())),
        ]);
        conde(clauses).apply(st)
    })
}

/// Relates `l1` and `l2` elementwise, each pair either by `rel` or left
/// equal, with at least one pair related by `rel`.
pub fn map_anyo(rel: &Relation, l1: impl Into<Term>, l2: impl Into<Term>) -> Goal {
    map_anyo_from(rel.clone(), l1.into(), l2.into(), false)
}

fn map_anyo_from(rel: Relation, l1: Term, l2: Term, related: bool) -> Goal {
    Goal::new(move |st: &State| {
        let (a, d, b, e) = (var(), var(), var(), var());
        let mut clauses = Vec::with_capacity(3);
        if related {
            if st.walk(&l1).is_var() && st.walk(&l2).is_var() {
                clauses.push(vec![eq(l1.clone(), l2.clone())]);
            }
            clauses.push(vec![eq(l1.clone(), Term::Nil), eq(l2.clone(), Term::Nil)]);
        }
        let rewrite = {
            let (r, r2) = (rel.clone(), rel.clone());
            let (a, b, d, e) = (a.clone(), b.clone(), d.clone(), e.clone());
            let (d2, e2) = (d.clone(), e.clone());
            lall([
                delay(move || r.apply(&a, &b)),
                delay(move || map_anyo_from(r2.clone(), d2.clone(), e2.clone(), true)),
            ])
        };
        let keep = {
            let r = rel.clone();
            let (d, e) = (d.clone(), e.clone());
            lall([
                eq(a.clone(), b.clone()),
                delay(move || map_anyo_from(r.clone(), d.clone(), e.clone(), related)),
            ])
        };
        clauses.push(vec![
            conso(a, d, l1.clone()),
            conso(b, e, l2.clone()),
            lany([rewrite, keep]),
        ]);
        conde(clauses).apply(st)
    })
}

/// Both sides decomposed into operator and operand list, with the
/// application of a still-unknown side constructed last so that it sees
/// the operands the other goals produced.
fn descend<F>(st: &State, u: &Term, v: &Term, rator_rel: &Relation, operands: F) -> Goal
where
    F: FnOnce(Term, Term) -> Goal,
{
    let (ra, da, rb, db) = (var(), var(), var(), var());
    let u_app = applyo(ra.clone(), da.clone(), u.clone());
    let v_app = applyo(rb.clone(), db.clone(), v.clone());
    let u_known = !st.walk(u).is_var();
    let v_known = !st.walk(v).is_var();
    if !u_known && !v_known {
        return lall([
            u_app,
            v_app,
            rator_rel.apply(&ra, &rb),
            operands(da, db),
        ]);
    }
    let mut goals = Vec::with_capacity(4);
    let mut deferred = Vec::new();
    for (known, g) in [(u_known, u_app), (v_known, v_app)] {
        if known {
            goals.push(g);
        } else {
            deferred.push(g);
        }
    }
    goals.push(rator_rel.apply(&ra, &rb));
    goals.push(operands(da, db));
    goals.extend(deferred);
    lall(goals)
}

/// Relates term graphs: `rel` at the root, or the same relation applied
/// throughout the operator and operands of application-shaped terms, or
/// identity on atomic terms. The relation is reflexive.
pub fn walko(rel: &Relation, u: impl Into<Term>, v: impl Into<Term>, rator_rel: &Relation) -> Goal {
    let (rel, rator_rel, u, v) = (rel.clone(), rator_rel.clone(), u.into(), v.into());
    Goal::new(move |st: &State| {
        let child = {
            let (rel, rator_rel) = (rel.clone(), rator_rel.clone());
            Relation::new(move |a, b| walko(&rel, a.clone(), b.clone(), &rator_rel))
        };
        lany([
            rel.apply(&u, &v),
            descend(st, &u, &v, &rator_rel, |da, db| mapo(&child, da, db)),
            lall([typeo(u.clone(), "atomic"), eq(u.clone(), v.clone())]),
        ])
        .apply(st)
    })
}

/// [`walko`] with the operator positions unified.
pub fn term_walko(rel: &Relation, u: impl Into<Term>, v: impl Into<Term>) -> Goal {
    walko(rel, u, v, &Relation::eq())
}

/// Like [`term_walko`], but `rel` must fire at least once somewhere in the
/// term: at the root, or inside at least one operand.
pub fn walk_anyo(rel: &Relation, u: impl Into<Term>, v: impl Into<Term>) -> Goal {
    let (rel, u, v) = (rel.clone(), u.into(), v.into());
    Goal::new(move |st: &State| {
        let child = {
            let rel = rel.clone();
            Relation::new(move |a, b| walk_anyo(&rel, a.clone(), b.clone()))
        };
        lany([
            rel.apply(&u, &v),
            descend(st, &u, &v, &Relation::eq(), |da, db| map_anyo(&child, da, db)),
        ])
        .apply(st)
    })
}

/// `v` is reachable from `u` by one or more applications of `rel`.
///
/// For a known `u` the search prefers reducing further before stopping, so
/// the first answer is a form that `rel` cannot reduce any more.
pub fn reduceo(rel: &Relation, u: impl Into<Term>, v: impl Into<Term>) -> Goal {
    let (rel, u, v) = (rel.clone(), u.into(), v.into());
    Goal::new(move |st: &State| {
        let t = var();
        let step = rel.apply(&u, &t);
        let stop = eq(t.clone(), v.clone());
        let further = {
            let (rel, t, v) = (rel.clone(), t.clone(), v.clone());
            delay(move || reduceo(&rel, t.clone(), v.clone()))
        };
        if st.walk(&u).is_var() {
            lall([lany([stop, further]), step]).apply(st)
        } else {
            lall([step, lany_prefer(further, stop)]).apply(st)
        }
    })
}

/// Number of distinct unbound variables in `t` under `s`.
pub fn groundedness(t: &Term, s: &Substitution) -> usize {
    let mut seen: HashSet<LVar> = HashSet::new();
    collect_vars(&walk_star(t, s), &mut seen);
    seen.len()
}

fn collect_vars(t: &Term, seen: &mut HashSet<LVar>) {
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match t {
            Term::Var(v) => {
                seen.insert(v.clone());
            }
            Term::Cons(c) => {
                stack.push(c.cdr());
                stack.push(c.car());
            }
            Term::Expr(e) => stack.extend(e.items()),
            Term::Atom(_) | Term::Nil => {}
        }
    }
}

/// Stable sort of `pairs` by the number of distinct unbound variables in
/// each pair, most ground first.
pub fn ground_order(pairs: Vec<(Term, Term)>, s: &Substitution) -> Vec<(Term, Term)> {
    let mut scored: Vec<(usize, (Term, Term))> = pairs
        .into_iter()
        .map(|(a, b)| {
            let mut seen = HashSet::new();
            collect_vars(&walk_star(&a, s), &mut seen);
            collect_vars(&walk_star(&b, s), &mut seen);
            (seen.len(), (a, b))
        })
        .collect();
    scored.sort_by_key(|(score, _)| *score);
    scored.into_iter().map(|(_, p)| p).collect()
}

/// Unification that also matches the operands of commutative operators in
/// any order.
pub fn eq_comm(u: impl Into<Term>, v: impl Into<Term>, reg: &OperatorRegistry) -> Goal {
    let commutative: Arc<HashSet<String>> = Arc::new(
        reg.names()
            .filter(|n| reg.is_commutative(n))
            .map(str::to_string)
            .collect(),
    );
    eq_comm_with(u.into(), v.into(), commutative)
}

fn eq_comm_with(u: Term, v: Term, commutative: Arc<HashSet<String>>) -> Goal {
    Goal::new(move |st: &State| {
        let (wu, wv) = (st.walk(&u), st.walk(&v));
        if !wu.is_compound() || !wv.is_compound() {
            return eq(wu, wv).apply(st);
        }
        let head_u = crate::term::car(&wu).map(|h| st.walk(&h)).ok();
        let head_v = crate::term::car(&wv).map(|h| st.walk(&h)).ok();
        let op = match (&head_u, &head_v) {
            (Some(a), Some(b)) if a == b => a.as_symbol().filter(|s| commutative.contains(*s)),
            _ => None,
        };
        let recurse = |a: Term, b: Term| {
            let c = commutative.clone();
            delay(move || eq_comm_with(a.clone(), b.clone(), c.clone()))
        };
        let (Some(_), Some(ops_u), Some(ops_v)) = (
            op,
            crate::term::cdr(&wu).ok().and_then(|l| proper_list(&l, st.subst())),
            crate::term::cdr(&wv).ok().and_then(|l| proper_list(&l, st.subst())),
        ) else {
            let (ca, da) = (crate::term::car(&wu), crate::term::cdr(&wu));
            let (cb, db) = (crate::term::car(&wv), crate::term::cdr(&wv));
            return match (ca, da, cb, db) {
                (Ok(ca), Ok(da), Ok(cb), Ok(db)) => {
                    lall([recurse(ca, cb), recurse(da, db)]).apply(st)
                }
                _ => Stream::Empty,
            };
        };
        if ops_u.len() != ops_v.len() {
            return Stream::Empty;
        }
        let branches: Vec<Goal> = distinct_permutations(ops_u)
            .map(|perm| {
                let pairs = ground_order(perm.into_iter().zip(ops_v.iter().cloned()).collect(), st.subst());
                lall(pairs.into_iter().map(|(a, b)| recurse(a, b)))
            })
            .collect();
        lany(branches).apply(st)
    })
}
