//! A relational programming engine in the miniKanren tradition, with
//! evaluable expression terms, rewrite relations and a small set of
//! statistical model rewrite rules.
//!
//! ```
//! use relkanren::goal::{run, Count};
//! use relkanren::constraints::neq;
//! use relkanren::relations::membero;
//! use relkanren::term::var;
//! use relkanren::list;
//!
//! let x = var();
//! let answers = run(
//!     Count::All,
//!     &x,
//!     [neq(x.clone(), 1), neq(x.clone(), 3), membero(x.clone(), list![1, 2, 3])],
//! )
//! .unwrap();
//! assert_eq!(answers, vec![2.into()]);
//! ```

pub mod cli;
pub mod constraints;
pub mod expr;
pub mod goal;
pub mod relations;
pub mod sexpr;
pub mod stats;
pub mod subst;
pub mod term;

pub use goal::{run, run_bounded, Count, Goal, State};
pub use term::{var, Term};
