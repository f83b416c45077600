//! The `relkanren` command line: `rewrite` applies named rule sets to a
//! term, `query` runs a small goal program.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::constraints::{neq, type_constraint};
use crate::goal::{eq, Goal, GoalError, Answers, State, lall};
use crate::relations::{conso, membero, permuteo, reduceo, term_walko, walk_anyo, Relation};
use crate::sexpr::{parse_with_vars, render, ParseError};
use crate::stats::{builtin_rulesets, standard_registry};
use crate::term::{list_from_term, var, Term};

/// Environment variable holding the default step budget.
pub const MAX_STEPS_ENV: &str = "RELKANREN_MAX_STEPS";

#[derive(Parser, Debug)]
#[command(name = "relkanren", version, about = "Relational term rewriting from the command line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rewrite a term with one or more named rule sets.
    Rewrite(RewriteArgs),
    /// Run a goal program such as `(run 1 ?q (eq ?q 5))`.
    Query(QueryArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Apply the rules once, somewhere in the term.
    Walk,
    /// Keep applying the rules, anywhere in the term, until none applies.
    Reduce,
}

#[derive(Args, Debug)]
pub struct RewriteArgs {
    /// Rule set name (repeatable): math, normal-sum, normal-affine, beta-binomial.
    #[arg(long = "rules", required = true)]
    pub rules: Vec<String>,
    /// File holding one term; standard input when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Stop after this many answers; 0 prints all of them.
    #[arg(long, default_value_t = 0)]
    pub max_answers: usize,
    /// Search step budget; 0 means unlimited.
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long, value_enum, default_value_t = Mode::Walk)]
    pub mode: Mode,
    /// File receiving the answers; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    /// The goal program.
    #[arg(long)]
    pub goal: String,
    /// Search step budget; 0 means unlimited.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// File receiving the answers; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Answers = 0,
    NoAnswers = 1,
    BudgetExhausted = 2,
    UnknownRuleset = 3,
    BadInput = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown rule set `{0}` (available: beta-binomial, math, normal-affine, normal-sum)")]
    UnknownRuleset(String),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("malformed goal program: {0}")]
    MalformedGoal(String),
    #[error("invalid {MAX_STEPS_ENV} value `{0}`")]
    BadBudget(String),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("search aborted: {0}")]
    Search(#[from] GoalError),
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::UnknownRuleset(_) => ExitStatus::UnknownRuleset,
            _ => ExitStatus::BadInput,
        }
    }
}

fn lookup_rules(names: &[String]) -> Result<Relation, CliError> {
    let sets = builtin_rulesets();
    let rels = names
        .iter()
        .map(|n| {
            sets.get(n.as_str())
                .map(|s| s.rule.clone())
                .ok_or_else(|| CliError::UnknownRuleset(n.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(if rels.len() == 1 {
        rels.into_iter().next().unwrap()
    } else {
        Relation::any(rels)
    })
}

/// Budget from the flag, else from the environment; 0 means unlimited.
fn step_budget(flag: Option<u64>, env: Option<&str>) -> Result<Option<u64>, CliError> {
    let steps = match (flag, env) {
        (Some(n), _) => n,
        (None, Some(text)) => text
            .trim()
            .parse()
            .map_err(|_| CliError::BadBudget(text.to_string()))?,
        (None, None) => 0,
    };
    Ok((steps > 0).then_some(steps))
}

fn open_output<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

/// Streams answers to `out` as they are found.
fn emit(
    goal: Goal,
    query: &Term,
    limit: usize,
    budget: Option<u64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<ExitStatus, CliError> {
    let mut answers = Answers::new(goal.apply(&State::new()), budget);
    let mut count = 0usize;
    while limit == 0 || count < limit {
        match answers.next() {
            None => break,
            Some(state) => {
                writeln!(out, "{}", render(&state?.reify(query)))?;
                count += 1;
            }
        }
    }
    out.flush()?;
    if answers.exhausted() {
        writeln!(
            err,
            "step budget of {} exhausted after {count} answer(s)",
            budget.unwrap_or_default()
        )?;
        return Ok(ExitStatus::BudgetExhausted);
    }
    Ok(if count == 0 {
        ExitStatus::NoAnswers
    } else {
        ExitStatus::Answers
    })
}

pub fn cmd_rewrite(
    args: &RewriteArgs,
    env_budget: Option<&str>,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<ExitStatus, CliError> {
    let rel = lookup_rules(&args.rules)?;
    let budget = step_budget(args.max_steps, env_budget)?;
    let text = match &args.input {
        Some(path) => std::fs::read_to_string(path)?,
        None => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            s
        }
    };
    let (input, _) = parse_with_vars(&text, &standard_registry())?;
    let q = var();
    let goal = match args.mode {
        Mode::Walk => walk_anyo(&rel, input, q.clone()),
        Mode::Reduce => {
            let step = Relation::new(move |a, b| walk_anyo(&rel, a.clone(), b.clone()));
            reduceo(&step, input, q.clone())
        }
    };
    let mut out = open_output(&args.output, stdout)?;
    emit(goal, &q, args.max_answers, budget, &mut out, stderr)
}

fn goal_args<const N: usize>(head: &str, args: &[Term]) -> Result<[Term; N], CliError> {
    <[Term; N]>::try_from(args.to_vec()).map_err(|_| {
        CliError::MalformedGoal(format!("`{head}` takes {N} arguments, got {}", args.len()))
    })
}

fn rule_named(t: &Term) -> Result<Relation, CliError> {
    let name = t
        .as_symbol()
        .ok_or_else(|| CliError::MalformedGoal(format!("expected a rule set name, found {t}")))?;
    lookup_rules(&[name.to_string()])
}

fn build_goal(t: &Term) -> Result<Goal, CliError> {
    let items = list_from_term(t)
        .map_err(|_| CliError::MalformedGoal(format!("a goal must be a list, found {t}")))?;
    let (head, args) = items
        .split_first()
        .ok_or_else(|| CliError::MalformedGoal("empty goal".into()))?;
    let head = head
        .as_symbol()
        .ok_or_else(|| CliError::MalformedGoal(format!("goal head must be a symbol, found {head}")))?;
    Ok(match head {
        "eq" => {
            let [a, b] = goal_args(head, args)?;
            eq(a, b)
        }
        "neq" => {
            let [a, b] = goal_args(head, args)?;
            neq(a, b)
        }
        "membero" => {
            let [x, l] = goal_args(head, args)?;
            membero(x, l)
        }
        "conso" => {
            let [a, d, p] = goal_args(head, args)?;
            conso(a, d, p)
        }
        "permuteo" => {
            let [a, b] = goal_args(head, args)?;
            permuteo(a, b)
        }
        "typeo" => {
            let [x, kind] = goal_args(head, args)?;
            let kind = kind
                .as_symbol()
                .ok_or_else(|| CliError::MalformedGoal(format!("expected a kind name, found {kind}")))?;
            type_constraint(x, kind).map_err(|e| CliError::MalformedGoal(e.to_string()))?
        }
        "rule" => {
            let [name, a, b] = goal_args(head, args)?;
            rule_named(&name)?.apply(&a, &b)
        }
        "walko" => {
            let [name, a, b] = goal_args(head, args)?;
            term_walko(&rule_named(&name)?, a, b)
        }
        "reduceo" => {
            let [name, a, b] = goal_args(head, args)?;
            reduceo(&rule_named(&name)?, a, b)
        }
        other => return Err(CliError::MalformedGoal(format!("unknown goal `{other}`"))),
    })
}

pub fn cmd_query(
    args: &QueryArgs,
    env_budget: Option<&str>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<ExitStatus, CliError> {
    let budget = step_budget(args.max_steps, env_budget)?;
    let (program, _) = parse_with_vars(&args.goal, &standard_registry())?;
    let items = list_from_term(&program).unwrap_or_default();
    let [run_head, count, query, goals @ ..] = items.as_slice() else {
        return Err(CliError::MalformedGoal(
            "expected (run N ?q goal...)".into(),
        ));
    };
    if run_head.as_symbol() != Some("run") {
        return Err(CliError::MalformedGoal(format!("expected `run`, found {run_head}")));
    }
    let limit = match count.as_atom() {
        Some(crate::term::Atom::Int(n)) => usize::try_from(n)
            .map_err(|_| CliError::MalformedGoal(format!("bad answer count {n}")))?,
        _ => return Err(CliError::MalformedGoal(format!("bad answer count {count}"))),
    };
    let goal = lall(goals.iter().map(build_goal).collect::<Result<Vec<_>, _>>()?);
    let mut out = open_output(&args.output, stdout)?;
    emit(goal, query, limit, budget, &mut out, stderr)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run_cli<I, T>(
    args: I,
    env_budget: Option<&str>,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            let _ = if informational {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return if informational { 0 } else { ExitStatus::BadInput.code() };
        }
    };
    let result = match &cli.command {
        Command::Rewrite(args) => cmd_rewrite(args, env_budget, stdin, stdout, stderr),
        Command::Query(args) => cmd_query(args, env_budget, stdout, stderr),
    };
    match result {
        Ok(status) => status.code(),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.status().code()
        }
    }
}
