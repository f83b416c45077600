//! Generators and property checks shared by the integration test targets.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use relkanren::constraints::{neq, typeo};
use relkanren::expr::app;
use relkanren::goal::{delay, eq, lany, run, Count, Goal};
use relkanren::relations::{permuteo, reduceo, walk_anyo, Relation};
use relkanren::sexpr::{parse_sexpr, print_term, render};
use relkanren::stats::{math_reduce_rule, standard_registry};
use relkanren::subst::{reify, unify, walk_star, Substitution};
use relkanren::term::{cons, term_from_list, var, LVar, Term};

/// A term shape whose variables are indices into a pool of fresh variables.
#[derive(Debug, Clone)]
pub enum Shape {
    Int(i64),
    Sym(&'static str),
    Var(usize),
    List(Vec<Shape>),
    Dotted(Vec<Shape>, Box<Shape>),
    App(&'static str, Vec<Shape>),
}

impl Shape {
    pub fn build(&self, pool: &[Term]) -> Term {
        match self {
            Shape::Int(i) => Term::int(*i),
            Shape::Sym(s) => Term::sym(s),
            Shape::Var(i) => pool[*i].clone(),
            Shape::List(items) => term_from_list(items.iter().map(|s| s.build(pool)).collect::<Vec<_>>()),
            Shape::Dotted(items, tail) => items
                .iter()
                .rev()
                .fold(tail.build(pool), |acc, s| cons(s.build(pool), acc)),
            Shape::App(op, args) => app(op, args.iter().map(|s| s.build(pool))),
        }
    }
}

pub const POOL: usize = 4;

pub fn pool() -> Vec<Term> {
    (0..POOL).map(|_| var()).collect()
}

fn shape_with(leaf: BoxedStrategy<Shape>) -> impl Strategy<Value = Shape> {
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Shape::List),
            (prop::collection::vec(inner.clone(), 1..3), inner.clone())
                .prop_map(|(items, tail)| Shape::Dotted(items, Box::new(tail))),
            (prop::sample::select(vec!["add", "mul", "f"]), prop::collection::vec(inner, 0..3))
                .prop_map(|(op, args)| Shape::App(op, args)),
        ]
    })
}

pub fn ground_shape() -> impl Strategy<Value = Shape> {
    shape_with(
        prop_oneof![
            (0i64..3).prop_map(Shape::Int),
            prop::sample::select(vec!["a", "b"]).prop_map(Shape::Sym),
        ]
        .boxed(),
    )
}

pub fn open_shape() -> impl Strategy<Value = Shape> {
    shape_with(
        prop_oneof![
            (0i64..3).prop_map(Shape::Int),
            prop::sample::select(vec!["a", "b"]).prop_map(Shape::Sym),
            (0..POOL).prop_map(Shape::Var),
        ]
        .boxed(),
    )
}

/// Terms exercising every atom kind and printer corner case.
pub fn printable_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        any::<i64>().prop_map(Term::int),
        prop::num::f64::ANY.prop_map(Term::decimal),
        "[a-z][a-z0-9-]{0,5}".prop_map(|s| Term::sym(&s)),
        "[ -~\n\t]{0,6}".prop_map(|s| Term::sym(&s)),
        "[ -~\n\t]{0,6}".prop_map(|s| Term::string(&s)),
        any::<bool>().prop_map(Term::boolean),
        Just(Term::Nil),
        Just(()).prop_map(|_| var()),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(term_from_list),
            (inner.clone(), inner.clone()).prop_map(|(a, d)| cons(a, d)),
            (prop::sample::select(vec!["add", "normal", "beta"]), prop::collection::vec(inner, 0..3))
                .prop_map(|(op, args)| app(op, args)),
        ]
    })
}

/// Ground terms over the math rule's vocabulary, with planted redexes.
pub fn math_term() -> impl Strategy<Value = Term> {
    let leaf = (0i64..4).prop_map(Term::int);
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|x| app("add", [x.clone(), x])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| app("add", [a, b])),
            inner.clone().prop_map(|x| app("log", [app("exp", [x])])),
            (inner.clone(), inner).prop_map(|(a, b)| app("mul", [a, b])),
        ]
    })
}

/// Innermost normalization with the math identities, written directly
/// over the term structure.
pub fn math_normal_form(t: &Term) -> Term {
    let Some(e) = t.as_expr() else {
        return t.clone();
    };
    let args: Vec<Term> = e.operands().iter().map(math_normal_form).collect();
    let op = e.operator().as_symbol().unwrap();
    match (op, args.as_slice()) {
        ("add", [a, b]) if render(a) == render(b) => app("mul", [Term::int(2), a.clone()]),
        ("log", [inner]) => match inner.as_expr() {
            Some(x) if x.operator().as_symbol() == Some("exp") && x.operands().len() == 1 => {
                x.operands()[0].clone()
            }
            _ => app("log", args),
        },
        _ => app(op, args),
    }
}

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn run_cases<S, F>(cases: u32, strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

/// True when following bindings from some variable leads back to it.
pub fn has_cycle(s: &Substitution) -> bool {
    let graph: HashMap<LVar, Vec<LVar>> = s
        .iter()
        .map(|(v, t)| {
            let mut vars = Vec::new();
            let mut stack = vec![t.clone()];
            while let Some(t) = stack.pop() {
                match t {
                    Term::Var(w) => vars.push(w),
                    Term::Cons(c) => {
                        stack.push(c.car().clone());
                        stack.push(c.cdr().clone());
                    }
                    Term::Expr(e) => stack.extend(e.items().iter().cloned()),
                    _ => {}
                }
            }
            (v.clone(), vars)
        })
        .collect();
    for start in graph.keys() {
        let mut seen = HashSet::new();
        let mut stack: Vec<LVar> = graph[start].clone();
        while let Some(v) = stack.pop() {
            if &v == start {
                return true;
            }
            if seen.insert(v.clone()) {
                if let Some(next) = graph.get(&v) {
                    stack.extend(next.iter().cloned());
                }
            }
        }
    }
    false
}

/// Symmetry, soundness, monotonicity and acyclicity of unification, plus
/// agreement with structural equality on ground terms.
pub fn check_unification(cases: u32) -> Result<(), String> {
    run_cases(
        cases,
        (open_shape(), open_shape(), open_shape(), open_shape(), ground_shape(), ground_shape()),
        |(pre_a, pre_b, a, b, g1, g2)| {
            let pool = pool();
            let base = unify(&pre_a.build(&pool), &pre_b.build(&pool), &Substitution::new())
                .unwrap_or_default();
            let (u, v) = (a.build(&pool), b.build(&pool));
            let uv = unify(&u, &v, &base);
            let vu = unify(&v, &u, &base);
            prop_assert_eq!(uv.is_some(), vu.is_some());
            let everything = term_from_list(
                std::iter::once(u.clone())
                    .chain(std::iter::once(v.clone()))
                    .chain(pool.iter().cloned())
                    .collect::<Vec<_>>(),
            );
            if let (Some(s1), Some(s2)) = (&uv, &vu) {
                prop_assert_eq!(reify(&everything, s1), reify(&everything, s2));
                prop_assert_eq!(render(&walk_star(&u, s1)), render(&walk_star(&v, s1)));
                for (var, t) in base.iter() {
                    prop_assert!(s1.get(var).is_some_and(|t1| render(t1) == render(t)));
                }
                prop_assert!(!has_cycle(s1));
            }
            let (t1, t2) = (g1.build(&[]), g2.build(&[]));
            let unifies = unify(&t1, &t2, &Substitution::new()).is_some();
            prop_assert_eq!(unifies, render(&t1) == render(&t2));
            Ok(())
        },
    )
}

fn nat_from(x: Term, k: i64) -> Goal {
    lany([eq(x.clone(), k), delay(move || nat_from(x.clone(), k + 1))])
}

/// An answer of a finite branch appears early even beside an infinite one.
pub fn check_interleaving(cases: u32) -> Result<(), String> {
    run_cases(cases, (-50i64..0, any::<bool>(), 0usize..3), |(k, infinite_first, extra)| {
        let x = var();
        let finite = lany((0..=extra as i64).map(|i| eq(x.clone(), k - i)).collect::<Vec<_>>());
        let infinite = nat_from(x.clone(), 0);
        let goal = if infinite_first {
            lany([infinite, finite])
        } else {
            lany([finite, infinite])
        };
        let bound = 2 * (extra + 1) + 2;
        let answers = run(Count::Take(bound), &x, [goal]).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for i in 0..=extra as i64 {
            prop_assert!(answers.contains(&Term::int(k - i)));
        }
        Ok(())
    })
}

#[derive(Debug, Clone)]
pub enum Posted {
    Eq(i64),
    Neq(i64),
    Integer,
    Member(Vec<i64>),
}

impl Posted {
    fn goal(&self, x: &Term) -> Goal {
        match self {
            Posted::Eq(v) => eq(x.clone(), *v),
            Posted::Neq(v) => neq(x.clone(), *v),
            Posted::Integer => typeo(x.clone(), "integer"),
            Posted::Member(vs) => relkanren::relations::membero(
                x.clone(),
                term_from_list(vs.iter().map(|v| Term::int(*v)).collect::<Vec<_>>()),
            ),
        }
    }
}

fn posted() -> impl Strategy<Value = Posted> {
    prop_oneof![
        (0i64..4).prop_map(Posted::Eq),
        (0i64..4).prop_map(Posted::Neq),
        Just(Posted::Integer),
        prop::collection::vec(0i64..4, 0..4).prop_map(Posted::Member),
    ]
}

pub fn answer_set(x: &Term, goals: Vec<Goal>) -> Vec<String> {
    let mut out: Vec<String> = run(Count::All, x, goals).unwrap().iter().map(print_term).collect();
    out.sort();
    out.dedup();
    out
}

/// The answer set of a conjunction does not depend on posting order.
pub fn check_constraint_order(cases: u32) -> Result<(), String> {
    run_cases(
        cases,
        prop::collection::vec(posted(), 1..5).prop_flat_map(|goals| {
            let n = goals.len();
            (Just(goals), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        }),
        |(goals, order)| {
            let x = var();
            let first = answer_set(&x, goals.iter().map(|g| g.goal(&x)).collect());
            let second = answer_set(&x, order.iter().map(|&i| goals[i].goal(&x)).collect());
            prop_assert_eq!(first, second);
            Ok(())
        },
    )
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Distinct arrangements of `items`: n! divided by each multiplicity's factorial.
pub fn distinct_arrangements(items: &[i64]) -> usize {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for i in items {
        *counts.entry(*i).or_default() += 1;
    }
    counts.values().fold(factorial(items.len()), |acc, c| acc / factorial(*c))
}

fn int_list(items: &[i64]) -> Term {
    term_from_list(items.iter().map(|i| Term::int(*i)).collect::<Vec<_>>())
}

/// permuteo agrees with sorted-multiset equality in both argument orders
/// and enumerates exactly the distinct arrangements of a ground list.
pub fn check_permuteo(cases: u32) -> Result<(), String> {
    run_cases(
        cases,
        (prop::collection::vec(0i64..3, 0..6), prop::collection::vec(0i64..3, 0..6), any::<bool>()),
        |(a, b, shuffle_b)| {
            let b = if shuffle_b {
                let mut r = a.clone();
                r.reverse();
                r
            } else {
                b
            };
            let q = var();
            let ab = !run(Count::All, &q, [permuteo(int_list(&a), int_list(&b))]).unwrap().is_empty();
            let ba = !run(Count::All, &q, [permuteo(int_list(&b), int_list(&a))]).unwrap().is_empty();
            let (mut sa, mut sb) = (a.clone(), b.clone());
            sa.sort();
            sb.sort();
            prop_assert_eq!(ab, sa == sb);
            prop_assert_eq!(ba, sa == sb);
            let perms = run(Count::All, &q, [permuteo(int_list(&a), q.clone())]).unwrap();
            prop_assert_eq!(perms.len(), distinct_arrangements(&a));
            let distinct: HashSet<String> = perms.iter().map(render).collect();
            prop_assert_eq!(distinct.len(), perms.len());
            Ok(())
        },
    )
}

/// The first answer of fixed-point reduction with the math identities is
/// the innermost normal form.
pub fn check_reduce_fixed_point(cases: u32) -> Result<(), String> {
    let step = Relation::new(|a, b| walk_anyo(&Relation::new(math_reduce_rule), a.clone(), b.clone()));
    run_cases(cases, math_term(), move |t| {
        let q = var();
        let expected = math_normal_form(&t);
        let first = run(Count::Take(1), &q, [reduceo(&step, t.clone(), q.clone())]).unwrap();
        if render(&expected) == render(&t) {
            prop_assert!(first.is_empty());
        } else {
            prop_assert_eq!(first.len(), 1);
            prop_assert_eq!(render(&first[0]), render(&expected));
        }
        Ok(())
    })
}

/// print then parse is the identity; parse then print is stable.
pub fn check_print_parse(cases: u32) -> Result<(), String> {
    let reg = standard_registry();
    run_cases(cases, printable_term(), move |t| {
        let text = print_term(&t);
        let parsed = parse_sexpr(&text, &reg).map_err(|e| TestCaseError::fail(format!("{e}: {text}")))?;
        prop_assert_eq!(print_term(&parsed), text.clone());
        prop_assert_eq!(reify(&parsed, &Substitution::new()), reify(&t, &Substitution::new()));
        Ok(())
    })
}
