//! Search states, lazy interleaving streams, goals and the `run` interface.

use std::fmt;
use std::mem;
use std::sync::Arc;

use crate::constraints::{revalidate, ConstraintStoreSet};
use crate::subst::{reify_with, unify_collect, walk, walk_star, ReifyNames, Substitution};
use crate::term::Term;

/// One node of the search: a substitution plus constraint stores.
#[derive(Clone, Debug)]
pub struct State {
    subst: Substitution,
    constraints: ConstraintStoreSet,
    occurs_check: bool,
}

impl Default for State {
    fn default() -> Self {
        State {
            subst: Substitution::new(),
            constraints: ConstraintStoreSet::default(),
            occurs_check: true,
        }
    }
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    /// A start state whose unifications skip the occurs check.
    pub fn without_occurs_check() -> Self {
        State {
            occurs_check: false,
            ..Self::default()
        }
    }

    pub fn subst(&self) -> &Substitution {
        &self.subst
    }

    pub fn constraints(&self) -> &ConstraintStoreSet {
        &self.constraints
    }

    pub fn occurs_check(&self) -> bool {
        self.occurs_check
    }

    pub fn walk(&self, t: &Term) -> Term {
        walk(t, &self.subst)
    }

    pub fn walk_star(&self, t: &Term) -> Term {
        walk_star(t, &self.subst)
    }

    pub fn reify(&self, t: &Term) -> Term {
        reify_with(t, &self.subst, &mut ReifyNames::new())
    }

    /// Unifies and revalidates every constraint store. This is the only way
    /// goals extend a substitution.
    pub fn unify(&self, u: &Term, v: &Term) -> Option<State> {
        let mut delta = Vec::new();
        let subst = unify_collect(u, v, &self.subst, self.occurs_check, &mut delta)?;
        if delta.is_empty() {
            return Some(self.clone());
        }
        let constraints = if self.constraints.is_empty() {
            ConstraintStoreSet::default()
        } else {
            revalidate(&self.constraints, &subst, self.occurs_check)?
        };
        Some(State {
            subst,
            constraints,
            occurs_check: self.occurs_check,
        })
    }

    pub(crate) fn with_constraints(&self, constraints: ConstraintStoreSet) -> State {
        State {
            constraints,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GoalError {
    #[error("insufficiently ground arguments: {0}")]
    Groundedness(String),
}

type Thunk = Box<dyn FnOnce() -> Stream + Send>;

/// A lazy, possibly infinite sequence of states.
pub enum Stream {
    Empty,
    Mature(State, Box<Stream>),
    Immature(Thunk),
    /// Aborts the whole search when reached.
    Failed(GoalError),
}

impl fmt::Debug for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stream::Empty => f.write_str("Empty"),
            Stream::Mature(..) => f.write_str("Mature(..)"),
            Stream::Immature(_) => f.write_str("Immature(..)"),
            Stream::Failed(e) => write!(f, "Failed({e})"),
        }
    }
}

impl Stream {
    pub fn unit(s: State) -> Stream {
        Stream::Mature(s, Box::new(Stream::Empty))
    }

    pub fn suspend<F>(f: F) -> Stream
    where
        F: FnOnce() -> Stream + Send + 'static,
    {
        Stream::Immature(Box::new(f))
    }

    /// A stream that pulls states from `iter` one step at a time.
    pub fn from_iter<I>(iter: I) -> Stream
    where
        I: Iterator<Item = State> + Send + 'static,
    {
        fn step<I: Iterator<Item = State> + Send + 'static>(mut iter: I) -> Stream {
            match iter.next() {
                None => Stream::Empty,
                Some(s) => Stream::Mature(s, Box::new(Stream::suspend(move || step(iter)))),
            }
        }
        Stream::suspend(move || step(iter))
    }

    /// Fair union: suspended streams trade places so neither side starves.
    pub fn mplus(self, other: Stream) -> Stream {
        match self {
            Stream::Empty => other,
            Stream::Mature(s, rest) => Stream::Mature(s, Box::new(rest.mplus(other))),
            Stream::Immature(th) => Stream::suspend(move || other.mplus(th())),
            Stream::Failed(e) => Stream::Failed(e),
        }
    }

    /// Union that runs `self` alone until it yields its first state (or
    /// finishes), and only then interleaves with `other`.
    pub fn mplus_left<F>(self, other: F) -> Stream
    where
        F: FnOnce() -> Stream + Send + 'static,
    {
        match self {
            Stream::Empty => other(),
            Stream::Mature(s, rest) => {
                Stream::Mature(s, Box::new(rest.mplus(Stream::suspend(other))))
            }
            Stream::Immature(th) => Stream::suspend(move || th().mplus_left(other)),
            Stream::Failed(e) => Stream::Failed(e),
        }
    }

    /// Applies `g` to every state of the stream, merging the results fairly.
    pub fn bind(self, g: Goal) -> Stream {
        match self {
            Stream::Empty => Stream::Empty,
            Stream::Mature(s, rest) => {
                let head = g.apply(&s);
                head.mplus(Stream::suspend(move || rest.bind(g)))
            }
            Stream::Immature(th) => Stream::suspend(move || th().bind(g)),
            Stream::Failed(e) => Stream::Failed(e),
        }
    }

    /// Forces suspended steps until a state, the end or an error.
    pub fn next_state(&mut self) -> Option<Result<State, GoalError>> {
        loop {
            match mem::replace(self, Stream::Empty) {
                Stream::Empty => return None,
                Stream::Mature(s, rest) => {
                    *self = *rest;
                    return Some(Ok(s));
                }
                Stream::Immature(th) => *self = th(),
                Stream::Failed(e) => return Some(Err(e)),
            }
        }
    }
}

impl IntoIterator for Stream {
    type Item = Result<State, GoalError>;
    type IntoIter = StreamIter;

    fn into_iter(self) -> StreamIter {
        StreamIter(self)
    }
}

pub struct StreamIter(Stream);

impl Iterator for StreamIter {
    type Item = Result<State, GoalError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.0.next_state()
    }
}

/// A function from a state to a stream of successor states.
#[derive(Clone)]
pub struct Goal(Arc<dyn Fn(&State) -> Stream + Send + Sync>);

impl Goal {
    pub fn new<F>(f: F) -> Goal
    where
        F: Fn(&State) -> Stream + Send + Sync + 'static,
    {
        Goal(Arc::new(f))
    }

    pub fn apply(&self, s: &State) -> Stream {
        (self.0)(s)
    }

    pub fn succeed() -> Goal {
        Goal::new(|s| Stream::unit(s.clone()))
    }

    pub fn fail() -> Goal {
        Goal::new(|_| Stream::Empty)
    }

    /// A goal that aborts the search with `err` when applied.
    pub fn error(err: GoalError) -> Goal {
        Goal::new(move |_| Stream::Failed(err.clone()))
    }
}

impl fmt::Debug for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Goal(..)")
    }
}

/// Unification goal.
pub fn eq(u: impl Into<Term>, v: impl Into<Term>) -> Goal {
    let (u, v) = (u.into(), v.into());
    Goal::new(move |s| match s.unify(&u, &v) {
        Some(next) => Stream::unit(next),
        None => Stream::Empty,
    })
}

/// Conjunction. The empty conjunction succeeds once.
pub fn lall<I>(goals: I) -> Goal
where
    I: IntoIterator<Item = Goal>,
{
    let goals: Vec<Goal> = goals.into_iter().collect();
    match goals.len() {
        0 => Goal::succeed(),
        1 => goals.into_iter().next().unwrap(),
        _ => {
            let goals: Arc<[Goal]> = goals.into();
            Goal::new(move |s| {
                let mut stream = goals[0].apply(s);
                for g in &goals[1..] {
                    stream = stream.bind(g.clone());
                }
                stream
            })
        }
    }
}

/// Fair disjunction. The empty disjunction fails.
pub fn lany<I>(goals: I) -> Goal
where
    I: IntoIterator<Item = Goal>,
{
    let goals: Vec<Goal> = goals.into_iter().collect();
    match goals.len() {
        0 => Goal::fail(),
        1 => goals.into_iter().next().unwrap(),
        _ => {
            let goals: Arc<[Goal]> = goals.into();
            Goal::new(move |s| {
                goals
                    .iter()
                    .rev()
                    .fold(Stream::Empty, |acc, g| g.apply(s).mplus(acc))
            })
        }
    }
}

/// Disjunction that commits its search effort to `first` until `first`
/// produces a state or is exhausted.
pub fn lany_prefer(first: Goal, second: Goal) -> Goal {
    Goal::new(move |s| {
        let second = second.clone();
        let s2 = s.clone();
        first.apply(s).mplus_left(move || second.apply(&s2))
    })
}

/// Disjunction of conjunctions.
pub fn conde<I, C>(clauses: I) -> Goal
where
    I: IntoIterator<Item = C>,
    C: IntoIterator<Item = Goal>,
{
    lany(clauses.into_iter().map(lall))
}

/// Builds the goal only when the stream is demanded, which makes
/// self-referential relations safe to construct.
pub fn delay<F>(thunk: F) -> Goal
where
    F: Fn() -> Goal + Send + Sync + 'static,
{
    let thunk = Arc::new(thunk);
    Goal::new(move |s| {
        let thunk = thunk.clone();
        let s = s.clone();
        Stream::suspend(move || thunk().apply(&s))
    })
}

/// `lall!` / `lany!` / `conde!` accept goals as a comma-separated list.
#[macro_export]
macro_rules! lall {
    ($($g:expr),* $(,)?) => { $crate::goal::lall(vec![$($g),*]) };
}

#[macro_export]
macro_rules! lany {
    ($($g:expr),* $(,)?) => { $crate::goal::lany(vec![$($g),*]) };
}

#[macro_export]
macro_rules! conde {
    ($([$($g:expr),* $(,)?]),* $(,)?) => {
        $crate::goal::conde(vec![$(vec![$($g),*]),*])
    };
}

/// How many answers to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    All,
    Take(usize),
}

impl Count {
    fn reached(self, n: usize) -> bool {
        matches!(self, Count::Take(k) if n >= k)
    }
}

/// Pulls states from a stream under an optional step budget. One step is
/// one forced suspension.
pub struct Answers {
    stream: Stream,
    budget: Option<u64>,
    steps: u64,
    exhausted: bool,
}

impl Answers {
    pub fn new(stream: Stream, budget: Option<u64>) -> Self {
        Answers {
            stream,
            budget,
            steps: 0,
            exhausted: false,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// True once the budget stopped the search.
    pub fn exhausted(&self) -> bool {
        self.exhausted
    }
}

impl Iterator for Answers {
    type Item = Result<State, GoalError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.exhausted {
            return None;
        }
        loop {
            match mem::replace(&mut self.stream, Stream::Empty) {
                Stream::Empty => return None,
                Stream::Mature(s, rest) => {
                    self.stream = *rest;
                    return Some(Ok(s));
                }
                Stream::Immature(th) => {
                    if self.budget.is_some_and(|b| self.steps >= b) {
                        self.exhausted = true;
                        return None;
                    }
                    self.steps += 1;
                    self.stream = th();
                }
                Stream::Failed(e) => return Some(Err(e)),
            }
        }
    }
}

/// Starts the search for `lall(goals)` from an empty state.
pub fn solve<I>(goals: I, budget: Option<u64>) -> Answers
where
    I: IntoIterator<Item = Goal>,
{
    Answers::new(lall(goals).apply(&State::new()), budget)
}

/// Runs `lall(goals)` and reifies `query` in up to `n` answer states.
pub fn run<I>(n: Count, query: &Term, goals: I) -> Result<Vec<Term>, GoalError>
where
    I: IntoIterator<Item = Goal>,
{
    let mut out = Vec::new();
    if n.reached(0) {
        return Ok(out);
    }
    for state in solve(goals, None) {
        out.push(state?.reify(query));
        if n.reached(out.len()) {
            break;
        }
    }
    Ok(out)
}

/// Result of [`run_bounded`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedRun {
    pub answers: Vec<Term>,
    pub exhausted: bool,
}

/// Like [`run`], but gives up after `budget` steps, returning the answers
/// found so far.
pub fn run_bounded<I>(n: Count, budget: u64, query: &Term, goals: I) -> Result<BoundedRun, GoalError>
where
    I: IntoIterator<Item = Goal>,
{
    let mut answers = Vec::new();
    let mut iter = solve(goals, Some(budget));
    if !n.reached(0) {
        for state in iter.by_ref() {
            answers.push(state?.reify(query));
            if n.reached(answers.len()) {
                break;
            }
        }
    }
    Ok(BoundedRun {
        answers,
        exhausted: iter.exhausted(),
    })
}
