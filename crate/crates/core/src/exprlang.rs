//! Scalar expression language for the functions `f`, `g` and the multimap
//! selections.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" INT)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! Identifiers are variables `x1..`, `y1..`, `p1..` or the function `abs`.
//! Divisors must be nonzero constants.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

/// Which space a variable lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarSpace {
    X,
    Y,
    P,
}

impl VarSpace {
    fn prefix(self) -> char {
        match self {
            VarSpace::X => 'x',
            VarSpace::Y => 'y',
            VarSpace::P => 'p',
        }
    }
}

/// A variable reference; `index` is zero-based, so `x1` is `{X, 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub space: VarSpace,
    pub index: usize,
}

impl Var {
    pub fn x(i: usize) -> Self {
        Var { space: VarSpace::X, index: i }
    }
    pub fn y(i: usize) -> Self {
        Var { space: VarSpace::Y, index: i }
    }
    pub fn p(i: usize) -> Self {
        Var { space: VarSpace::P, index: i }
    }

    fn parse(name: &str) -> Option<Var> {
        let mut chars = name.chars();
        let space = match chars.next()? {
            'x' => VarSpace::X,
            'y' => VarSpace::Y,
            'p' => VarSpace::P,
            _ => return None,
        };
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
            return None;
        }
        let n: usize = digits.parse().ok()?;
        Some(Var { space, index: n - 1 })
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.space.prefix(), self.index + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Abs(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character '{ch}' at column {col}")]
    Lexical { col: usize, ch: char },
    #[error("syntax error at column {col}: expected {expected}, found {found}")]
    Syntax {
        col: usize,
        expected: &'static str,
        found: String,
    },
    #[error("exponent at column {col} must be a nonnegative integer literal, found {found}")]
    BadExponent { col: usize, found: String },
    #[error("unknown function '{name}' at column {col}")]
    UnknownFunction { col: usize, name: String },
    #[error("unknown identifier '{name}' at column {col} (expected x1.., y1.. or p1..)")]
    UnknownIdentifier { col: usize, name: String },
    #[error("divisor at column {col} must be a constant expression")]
    NonConstantDivisor { col: usize },
    #[error("division by zero at column {col}")]
    ZeroDivisor { col: usize },
}

impl ParseError {
    /// One-based column within the expression text, when known.
    pub fn col(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Lexical { col, .. }
            | ParseError::Syntax { col, .. }
            | ParseError::BadExponent { col, .. }
            | ParseError::UnknownFunction { col, .. }
            | ParseError::UnknownIdentifier { col, .. }
            | ParseError::NonConstantDivisor { col }
            | ParseError::ZeroDivisor { col } => Some(*col),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(Var),
    #[error("non-finite value evaluating '{expr}' at {inputs}")]
    NonFinite { expr: String, inputs: String },
}

/// Variable bindings by space. A variable whose index is past the end of its
/// slice is unbound.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a, T> {
    pub x: &'a [T],
    pub y: &'a [T],
    pub p: &'a [T],
}

impl<'a, T: Scalar> Bindings<'a, T> {
    pub fn get(&self, v: Var) -> Option<T> {
        let slice = match v.space {
            VarSpace::X => self.x,
            VarSpace::Y => self.y,
            VarSpace::P => self.p,
        };
        slice.get(v.index).copied()
    }

    fn describe(&self) -> String {
        let fmt_slice = |s: &[T]| {
            s.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "x=[{}] y=[{}] p=[{}]",
            fmt_slice(self.x),
            fmt_slice(self.y),
            fmt_slice(self.p)
        )
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Literal(0.0)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        parse(source)
    }

    /// Evaluates with all intermediate arithmetic carried out in `T`.
    pub fn eval<T: Scalar>(&self, env: &Bindings<'_, T>) -> Result<T, EvalError> {
        let v = self.eval_raw(env)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite {
                expr: self.to_string(),
                inputs: env.describe(),
            })
        }
    }

    fn eval_raw<T: Scalar>(&self, env: &Bindings<'_, T>) -> Result<T, EvalError> {
        Ok(match self {
            Expr::Literal(v) => T::lit(*v),
            Expr::Var(v) => env.get(*v).ok_or(EvalError::Unbound(*v))?,
            Expr::Neg(e) => -e.eval_raw(env)?,
            Expr::Add(a, b) => a.eval_raw(env)? + b.eval_raw(env)?,
            Expr::Sub(a, b) => a.eval_raw(env)? - b.eval_raw(env)?,
            Expr::Mul(a, b) => a.eval_raw(env)? * b.eval_raw(env)?,
            Expr::Div(a, b) => a.eval_raw(env)? / b.eval_raw(env)?,
            Expr::Pow(a, k) => {
                let base = a.eval_raw(env)?;
                match i32::try_from(*k) {
                    Ok(k) => base.powi(k),
                    Err(_) => base.powf(T::lit(f64::from(*k))),
                }
            }
            Expr::Abs(e) => e.eval_raw(env)?.abs(),
        })
    }

    /// Evaluates against named bindings such as `{"x1": 0.5, "p1": 0.25}`.
    pub fn eval_named(&self, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut p = Vec::new();
        for v in self.free_vars() {
            let value = *env.get(&v.to_string()).ok_or(EvalError::Unbound(v))?;
            let slot = match v.space {
                VarSpace::X => &mut x,
                VarSpace::Y => &mut y,
                VarSpace::P => &mut p,
            };
            if slot.len() <= v.index {
                slot.resize(v.index + 1, f64::NAN);
            }
            slot[v.index] = value;
        }
        self.eval(&Bindings { x: &x, y: &y, p: &p })
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Literal(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Abs(e) => e.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.free_vars().is_empty()
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Literal(_) | Expr::Var(_) | Expr::Abs(_) => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Literal(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{})", -v)
            }
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                wrap(f, e, e.precedence() < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { "+" } else { "-" };
                wrap(f, a, a.precedence() < 1)?;
                write!(f, " {op} ")?;
                wrap(f, b, b.precedence() <= 1)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = if matches!(self, Expr::Mul(..)) { "*" } else { "/" };
                wrap(f, a, a.precedence() < 2)?;
                write!(f, " {op} ")?;
                wrap(f, b, b.precedence() <= 2)
            }
            Expr::Pow(a, k) => {
                wrap(f, a, a.precedence() < 5 || matches!(**a, Expr::Literal(v) if v < 0.0))?;
                write!(f, "^{k}")
            }
            Expr::Abs(e) => write!(f, "abs({e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, integer: Option<u32> },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num { value, .. } => format!("number {value}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => out.push((Tok::Plus, col)),
            '-' => out.push((Tok::Minus, col)),
            '*' => out.push((Tok::Star, col)),
            '/' => out.push((Tok::Slash, col)),
            '^' => out.push((Tok::Caret, col)),
            '(' => out.push((Tok::LParen, col)),
            ')' => out.push((Tok::RParen, col)),
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value: f64 = text.parse().map_err(|_| ParseError::Lexical {
                    col,
                    ch: chars[start],
                })?;
                let integer = if text.bytes().all(|b| b.is_ascii_digit()) {
                    text.parse::<u32>().ok()
                } else {
                    None
                };
                out.push((Tok::Num { value, integer }, col));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
                continue;
            }
            other => return Err(ParseError::Lexical { col, ch: other }),
        }
        i += 1;
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, expected: &'static str) -> ParseError {
        ParseError::Syntax {
            col: self.col(),
            expected,
            found: self.peek().describe(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    let col = self.col();
                    let rhs = self.factor()?;
                    if !rhs.is_constant() {
                        return Err(ParseError::NonConstantDivisor { col });
                    }
                    let empty: [f64; 0] = [];
                    let value = rhs.eval_raw(&Bindings { x: &empty, y: &empty, p: &empty });
                    if !matches!(value, Ok(v) if v != 0.0 && v.is_finite()) {
                        return Err(ParseError::ZeroDivisor { col });
                    }
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let col = self.col();
        match self.bump() {
            Tok::Num {
                integer: Some(k), ..
            } => Ok(Expr::Pow(Box::new(base), k)),
            other => Err(ParseError::BadExponent {
                col,
                found: other.describe(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let col = self.col();
        match self.peek().clone() {
            Tok::Num { value, .. } => {
                self.bump();
                Ok(Expr::Literal(value))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    if name != "abs" {
                        return Err(ParseError::UnknownFunction { col, name });
                    }
                    self.bump();
                    let inner = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Abs(Box::new(inner)));
                }
                Var::parse(&name)
                    .map(Expr::Var)
                    .ok_or(ParseError::UnknownIdentifier { col, name })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => Err(self.syntax("number, variable or '('")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax("')'"))
        }
    }
}

pub fn parse(source: &str) -> Result<Expr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.syntax("operator or end of input"));
    }
    Ok(e)
}

pub fn eval<T: Scalar>(e: &Expr, env: &Bindings<'_, T>) -> Result<T, EvalError> {
    e.eval(env)
}

pub fn free_vars(e: &Expr) -> BTreeSet<Var> {
    e.free_vars()
}
