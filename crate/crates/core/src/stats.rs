//! Random-variable vocabulary and the statistical rewrite rules.
//!
//! Normal distributions are parameterized by mean and variance.

use std::collections::BTreeMap;

use crate::constraints::type_constraint_any;
use crate::expr::{app, Arity, ExprTerm, OperatorDef, OperatorRegistry};
use crate::goal::{conde, eq, lall, Goal};
use crate::relations::Relation;
use crate::term::{var, Term};

/// Random-variable constructors and their arities.
pub const RV_OPERATORS: [(&str, usize); 4] = [
    ("normal", 2),
    ("beta", 2),
    ("binomial", 2),
    ("observe", 2),
];

/// Arithmetic plus the random-variable constructors. Evaluating a
/// random-variable term evaluates its parameters and keeps the constructor.
pub fn standard_registry() -> OperatorRegistry {
    let mut reg = OperatorRegistry::arithmetic();
    for (name, arity) in RV_OPERATORS {
        reg.register(OperatorDef::new(name, Arity::Fixed(arity), move |args| {
            let mut items = vec![Term::sym(name)];
            items.extend(args.iter().cloned());
            Ok(Term::Expr(ExprTerm::new(items).expect("nonempty")))
        }))
        .expect("random-variable names do not clash with arithmetic");
    }
    reg
}

/// `add(x, x)` ↔ `mul(2, x)` and `log(exp(x))` ↔ `x`, for `x` a number or
/// an application.
pub fn math_reduce_rule(e: &Term, r: &Term) -> Goal {
    let x = var();
    let kind = type_constraint_any(x.clone(), &["number", "cons"]).expect("built-in predicates");
    lall([
        kind,
        conde([
            vec![
                eq(e.clone(), app("add", [x.clone(), x.clone()])),
                eq(r.clone(), app("mul", [2.into(), x.clone()])),
            ],
            vec![
                eq(e.clone(), app("log", [app("exp", [x.clone()])])),
                eq(r.clone(), x),
            ],
        ]),
    ])
}

/// `add(normal(mx, vx), normal(my, vy))` ↔ `normal(add(mx, my), add(vx, vy))`.
pub fn normal_sum_rule(lhs: &Term, rhs: &Term) -> Goal {
    let (mx, vx, my, vy) = (var(), var(), var(), var());
    lall([
        eq(
            lhs.clone(),
            app(
                "add",
                [
                    app("normal", [mx.clone(), vx.clone()]),
                    app("normal", [my.clone(), vy.clone()]),
                ],
            ),
        ),
        eq(
            rhs.clone(),
            app("normal", [app("add", [mx, my]), app("add", [vx, vy])]),
        ),
    ])
}

/// `add(m, mul(s, normal(0, 1)))` ↔ `normal(m, mul(s, s))`.
pub fn normal_affine_rule(lhs: &Term, rhs: &Term) -> Goal {
    let (m, s) = (var(), var());
    lall([
        eq(
            lhs.clone(),
            app(
                "add",
                [
                    m.clone(),
                    app("mul", [s.clone(), app("normal", [0.into(), 1.into()])]),
                ],
            ),
        ),
        eq(
            rhs.clone(),
            app("normal", [m, app("mul", [s.clone(), s])]),
        ),
    ])
}

/// `observe(obs, binomial(n, beta(a, b)))` ↔
/// `binomial(n, beta(add(a, sum(obs)), add(b, sub(sum(n), sum(obs)))))`.
pub fn beta_binomial_conjugate(x: &Term, y: &Term) -> Goal {
    let (obs, n, a, b) = (var(), var(), var(), var());
    let sum = |t: &Term| app("sum", [t.clone()]);
    let a_post = app("add", [a.clone(), sum(&obs)]);
    let b_post = app("add", [b.clone(), app("sub", [sum(&n), sum(&obs)])]);
    lall([
        eq(
            x.clone(),
            app(
                "observe",
                [
                    obs.clone(),
                    app("binomial", [n.clone(), app("beta", [a, b])]),
                ],
            ),
        ),
        eq(
            y.clone(),
            app("binomial", [n, app("beta", [a_post, b_post])]),
        ),
    ])
}

/// A named rewrite rule.
#[derive(Clone, Debug)]
pub struct RuleSet {
    pub name: &'static str,
    pub rule: Relation,
    pub description: &'static str,
}

/// The rules available by name on the command line.
pub fn builtin_rulesets() -> BTreeMap<&'static str, RuleSet> {
    let entries = [
        (
            "math",
            Relation::new(math_reduce_rule),
            "add(x, x) <-> mul(2, x); log(exp(x)) <-> x",
        ),
        (
            "normal-sum",
            Relation::new(normal_sum_rule),
            "sum of two normals (mean, variance) is normal",
        ),
        (
            "normal-affine",
            Relation::new(normal_affine_rule),
            "m + s * normal(0, 1) <-> normal(m, s * s)",
        ),
        (
            "beta-binomial",
            Relation::new(beta_binomial_conjugate),
            "observed binomial with beta prior <-> binomial with beta posterior",
        ),
    ];
    entries
        .into_iter()
        .map(|(name, rule, description)| {
            (
                name,
                RuleSet {
                    name,
                    rule,
                    description,
                },
            )
        })
        .collect()
}
