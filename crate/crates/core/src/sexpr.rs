//! Concrete syntax for terms.
//!
//! ```text
//! term    := atom | var | '(' ')' | '(' term+ ')' | '(' term+ '.' term ')'
//! atom    := integer | decimal | "string" | #t | #f | #inf | #-inf | #nan | symbol | |quoted symbol|
//! var     := ?name | ?_
//! ```
//!
//! Lists whose head is a registered operator symbol parse as expression
//! terms. `;` starts a comment running to the end of the line.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;

use crate::expr::{ExprTerm, OperatorRegistry};
use crate::subst::{reify, Substitution};
use crate::term::{cons, fresh_var, term_from_list, Atom, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Dot,
    Atom(Term),
    Var(String),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';')
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_space(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    /// The next token with its starting position.
    fn next(&mut self) -> Result<Option<(Token, usize, usize)>, ParseError> {
        self.skip_space();
        let (line, column) = (self.line, self.column);
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        let token = match c {
            '(' => {
                self.bump();
                Token::Open
            }
            ')' => {
                self.bump();
                Token::Close
            }
            '"' => {
                self.bump();
                Token::Atom(Term::string(&self.delimited('"', line, column)?))
            }
            '|' => {
                self.bump();
                Token::Atom(Term::sym(&self.delimited('|', line, column)?))
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = self.chars.peek() {
                    if is_delimiter(c) {
                        break;
                    }
                    word.push(c);
                    self.bump();
                }
                self.classify(word, line, column)?
            }
        };
        Ok(Some((token, line, column)))
    }

    fn delimited(&mut self, close: char, line: usize, column: usize) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(line, column, "unterminated literal")),
                Some(c) if c == close => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some(c @ ('\\' | '"' | '|')) => out.push(c),
                    Some(c) => {
                        return Err(self.error(self.line, self.column - 1, format!("unknown escape `\\{c}`")))
                    }
                    None => return Err(self.error(line, column, "unterminated literal")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn classify(&self, word: String, line: usize, column: usize) -> Result<Token, ParseError> {
        if word == "." {
            return Ok(Token::Dot);
        }
        if let Some(name) = word.strip_prefix('?') {
            if name.is_empty() {
                return Err(self.error(line, column, "`?` must be followed by a variable name"));
            }
            return Ok(Token::Var(name.to_string()));
        }
        if let Some(rest) = word.strip_prefix('#') {
            let atom = match rest {
                "t" => Term::boolean(true),
                "f" => Term::boolean(false),
                "inf" => Term::decimal(f64::INFINITY),
                "-inf" => Term::decimal(f64::NEG_INFINITY),
                "nan" => Term::decimal(f64::NAN),
                _ => return Err(self.error(line, column, format!("unknown literal `{word}`"))),
            };
            return Ok(Token::Atom(atom));
        }
        if is_integer(&word) {
            let value: BigInt = word.parse().expect("validated integer syntax");
            return Ok(Token::Atom(Term::int(value)));
        }
        if is_decimal(&word) {
            let value: f64 = word.parse().expect("validated decimal syntax");
            return Ok(Token::Atom(Term::decimal(value)));
        }
        Ok(Token::Atom(Term::sym(&word)))
    }
}

fn is_integer(w: &str) -> bool {
    let digits = w.strip_prefix(['+', '-']).unwrap_or(w);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// `[+-]? (d+ '.' d* | '.' d+ | d+) ([eE] [+-]? d+)?`, with a point or an
/// exponent present.
fn is_decimal(w: &str) -> bool {
    let body = w.strip_prefix(['+', '-']).unwrap_or(w);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (mantissa, None),
    };
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    let mantissa_ok = match frac_part {
        Some(f) => all_digits(int_part) && all_digits(f) && !(int_part.is_empty() && f.is_empty()),
        None => !int_part.is_empty() && all_digits(int_part),
    };
    let exponent_ok = match exponent {
        None => frac_part.is_some(),
        Some(e) => {
            let e = e.strip_prefix(['+', '-']).unwrap_or(e);
            !e.is_empty() && all_digits(e)
        }
    };
    mantissa_ok && exponent_ok
}

struct Frame {
    items: Vec<Term>,
    tail: Option<Term>,
    dotted: bool,
    line: usize,
    column: usize,
}

/// Parses exactly one term. Each distinct `?name` in the text maps to one
/// fresh variable; every `?_` is a new variable.
pub fn parse_sexpr(text: &str, reg: &OperatorRegistry) -> Result<Term, ParseError> {
    parse_with_vars(text, reg).map(|(t, _)| t)
}

/// [`parse_sexpr`], also returning the variables bound to each name.
pub fn parse_with_vars(
    text: &str,
    reg: &OperatorRegistry,
) -> Result<(Term, HashMap<String, Term>), ParseError> {
    let mut lexer = Lexer::new(text);
    let mut vars: HashMap<String, Term> = HashMap::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut result: Option<Term> = None;

    while let Some((token, line, column)) = lexer.next()? {
        if result.is_some() {
            return Err(lexer.error(line, column, "unexpected content after the term"));
        }
        let value = match token {
            Token::Open => {
                stack.push(Frame {
                    items: Vec::new(),
                    tail: None,
                    dotted: false,
                    line,
                    column,
                });
                continue;
            }
            Token::Dot => {
                match stack.last_mut() {
                    Some(f) if !f.items.is_empty() && !f.dotted => f.dotted = true,
                    Some(_) => return Err(lexer.error(line, column, "misplaced `.`")),
                    None => return Err(lexer.error(line, column, "`.` outside a list")),
                }
                continue;
            }
            Token::Close => {
                let frame = stack
                    .pop()
                    .ok_or_else(|| lexer.error(line, column, "unbalanced `)`"))?;
                if frame.dotted && frame.tail.is_none() {
                    return Err(lexer.error(line, column, "missing term after `.`"));
                }
                build_list(frame, reg)
            }
            Token::Atom(t) => t,
            Token::Var(name) => {
                if name == "_" {
                    Term::Var(fresh_var(None))
                } else {
                    vars.entry(name.clone())
                        .or_insert_with(|| Term::Var(fresh_var(Some(&name))))
                        .clone()
                }
            }
        };
        match stack.last_mut() {
            None => result = Some(value),
            Some(f) if f.dotted => {
                if f.tail.is_some() {
                    return Err(lexer.error(line, column, "more than one term after `.`"));
                }
                f.tail = Some(value);
            }
            Some(f) => f.items.push(value),
        }
    }
    if let Some(open) = stack.last() {
        return Err(lexer.error(open.line, open.column, "unbalanced `(`"));
    }
    let term = result.ok_or_else(|| lexer.error(lexer.line, lexer.column, "empty input"))?;
    Ok((term, vars))
}

fn build_list(frame: Frame, reg: &OperatorRegistry) -> Term {
    match frame.tail {
        Some(tail) => frame
            .items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| cons(item, acc)),
        None => {
            let is_app = frame
                .items
                .first()
                .and_then(Term::as_symbol)
                .is_some_and(|s| reg.contains(s));
            if is_app {
                Term::Expr(ExprTerm::new(frame.items).expect("nonempty"))
            } else {
                term_from_list(frame.items)
            }
        }
    }
}

fn symbol_needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s == "."
        || s.starts_with(['?', '#', '|'])
        || s.chars().any(|c| is_delimiter(c) || c == '|' || c == '\\')
        || is_integer(s)
        || is_decimal(s)
}

fn write_escaped(out: &mut String, s: &str, quote: char) {
    out.push(quote);
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\\' => out.push_str("\\\\"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
}

fn write_atom(out: &mut String, a: &Atom) {
    match a {
        Atom::Symbol(s) if symbol_needs_quotes(s) => write_escaped(out, s, '|'),
        Atom::Symbol(s) => out.push_str(s),
        Atom::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Atom::Decimal(d) if d.is_nan() => out.push_str("#nan"),
        Atom::Decimal(d) if d.is_infinite() => {
            out.push_str(if *d > 0.0 { "#inf" } else { "#-inf" })
        }
        // Debug formatting is the shortest round-tripping form and always
        // carries a point or an exponent.
        Atom::Decimal(d) => {
            let _ = write!(out, "{d:?}");
        }
        Atom::Str(s) => write_escaped(out, s, '"'),
        Atom::Bool(b) => out.push_str(if *b { "#t" } else { "#f" }),
    }
}

/// Text of `t` as it stands, without reifying its variables.
pub fn render(t: &Term) -> String {
    enum Task<'a> {
        Term(&'a Term),
        Items(&'a [Term]),
        Tail(&'a Term),
        Str(&'static str),
    }

    let mut out = String::new();
    let mut tasks = vec![Task::Term(t)];
    while let Some(task) = tasks.pop() {
        match task {
            Task::Str(s) => out.push_str(s),
            Task::Term(t) => match t {
                Term::Atom(a) => write_atom(&mut out, a),
                Term::Var(v) => {
                    let _ = write!(out, "{v:?}");
                }
                Term::Nil => out.push_str("()"),
                Term::Cons(c) => {
                    out.push('(');
                    tasks.push(Task::Str(")"));
                    tasks.push(Task::Tail(c.cdr()));
                    tasks.push(Task::Term(c.car()));
                }
                Term::Expr(e) => {
                    out.push('(');
                    tasks.push(Task::Str(")"));
                    tasks.push(Task::Items(e.items()));
                }
            },
            Task::Items(items) => {
                if let Some((first, rest)) = items.split_first() {
                    if !rest.is_empty() {
                        tasks.push(Task::Items(rest));
                        tasks.push(Task::Str(" "));
                    }
                    tasks.push(Task::Term(first));
                }
            }
            Task::Tail(t) => match t {
                Term::Nil => {}
                Term::Cons(c) => {
                    out.push(' ');
                    tasks.push(Task::Tail(c.cdr()));
                    tasks.push(Task::Term(c.car()));
                }
                Term::Expr(e) => {
                    out.push(' ');
                    tasks.push(Task::Items(e.items()));
                }
                other => {
                    out.push_str(" . ");
                    tasks.push(Task::Term(other));
                }
            },
        }
    }
    out
}

/// Canonical text of `t`: variables print as `?_0`, `?_1`, ... in order of
/// first appearance.
pub fn print_term(t: &Term) -> String {
    render(&reify(t, &Substitution::new()))
}
