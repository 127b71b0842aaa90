//! Sentences over a structure: grammar, printer, sort checker and evaluator.
//!
//! ```text
//! expr  := ('sup' | 'inf') var ':' 'S' '[' name ']' '.' expr | sum
//! sum   := prod ('+' prod)*
//! prod  := number '*' prod | atom ('*' atom)*
//! atom  := number | '(' expr ')' | max(expr, expr) | min(expr, expr)
//!        | absdiff(expr, expr) | ip(term, term) | nrm(term) | binder
//! term  := 0 | var | -term | i*term | avg(term, term) | pi[name](term) | (term)
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use starrep_core::linalg::{c, to_pairs, CMatrix, CVector};
use starrep_core::optimize::{maximize, AscentOptions};
use starrep_core::structure::Ellipsoid;
use starrep_core::MetricStructure;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("arity error at `{name}` (line {line}, column {col}): expected {expected} arguments, got {got}")]
    Arity { line: usize, col: usize, name: String, expected: usize, got: usize },
    #[error("binding error: {0}")]
    Binding(String),
    #[error("sort error in `{subterm}`: {msg}")]
    Sort { subterm: String, msg: String },
    #[error("missing sort S[{0}]")]
    MissingSort(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    Sup,
    Inf,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Zero,
    Var(String),
    Neg(Box<Term>),
    I(Box<Term>),
    Avg(Box<Term>, Box<Term>),
    Pi(String, Box<Term>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Binder { q: Quantifier, var: String, sort: String, body: Box<Expr> },
    Ip(Term, Term),
    Nrm(Term),
    Max(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    AbsDiff(Box<Expr>, Box<Expr>),
    Plus(Box<Expr>, Box<Expr>),
    Scale(f64, Box<Expr>),
    /// Product of two real values, as in `nrm(x)*nrm(x)`.
    Mul(Box<Expr>, Box<Expr>),
}

const RESERVED: [&str; 10] = ["sup", "inf", "max", "min", "absdiff", "ip", "nrm", "avg", "pi", "i"];

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Zero => write!(f, "0"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Neg(t) => write!(f, "-{t}"),
            Term::I(t) => write!(f, "i*{t}"),
            Term::Avg(a, b) => write!(f, "avg({a}, {b})"),
            Term::Pi(n, t) => write!(f, "pi[{n}]({t})"),
        }
    }
}

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Binder { .. } => 0,
            Expr::Plus(..) => 1,
            Expr::Scale(..) | Expr::Mul(..) => 2,
            _ => 3,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Binder { q, var, sort, body } => {
                let kw = if *q == Quantifier::Sup { "sup" } else { "inf" };
                write!(f, "{kw} {var}:S[{sort}] . ")?;
                body.write_at(f, 0)
            }
            Expr::Ip(a, b) => write!(f, "ip({a}, {b})"),
            Expr::Nrm(t) => write!(f, "nrm({t})"),
            Expr::Max(a, b) | Expr::Min(a, b) | Expr::AbsDiff(a, b) => {
                let name = match self {
                    Expr::Max(..) => "max",
                    Expr::Min(..) => "min",
                    _ => "absdiff",
                };
                write!(f, "{name}(")?;
                a.write_at(f, 0)?;
                write!(f, ", ")?;
                b.write_at(f, 0)?;
                write!(f, ")")
            }
            Expr::Plus(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " + ")?;
                b.write_at(f, 2)
            }
            Expr::Scale(v, e) => {
                write!(f, "{v}*")?;
                e.write_at(f, 2)
            }
            Expr::Mul(a, b) => {
                // a leading constant or scaling would read back as a scaling
                let min = if matches!(**a, Expr::Scale(..) | Expr::Const(_)) { 4 } else { 2 };
                a.write_at(f, min)?;
                write!(f, "*")?;
                b.write_at(f, 3)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn location(&self, pos: usize) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &ch in &self.chars[..pos.min(self.chars.len())] {
            if ch == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn error_at(&self, pos: usize, msg: impl Into<String>) -> DslError {
        let (line, col) = self.location(pos);
        DslError::Syntax { line, col, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, ch: char) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: char) -> Result<(), DslError> {
        if self.eat(ch) {
            Ok(())
        } else {
            let found = self.peek().map(|c| format!("`{c}`")).unwrap_or_else(|| "end of input".into());
            Err(self.error_at(self.pos, format!("expected `{ch}`, found {found}")))
        }
    }

    /// Identifier starting at the cursor, without consuming it.
    fn peek_ident(&mut self) -> Option<(String, usize)> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        while end < self.chars.len() && (self.chars[end].is_ascii_alphanumeric() || self.chars[end] == '_') {
            if end == start && self.chars[end].is_ascii_digit() {
                return None;
            }
            end += 1;
        }
        (end > start).then(|| (self.chars[start..end].iter().collect(), end))
    }

    fn ident(&mut self) -> Result<String, DslError> {
        match self.peek_ident() {
            Some((s, end)) => {
                self.pos = end;
                Ok(s)
            }
            None => Err(self.error_at(self.pos, "expected an identifier")),
        }
    }

    fn number_here(&mut self) -> Option<(f64, usize)> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        if self.chars.get(end) == Some(&'-') {
            end += 1;
        }
        let digits = end;
        while end < self.chars.len() && (self.chars[end].is_ascii_digit() || self.chars[end] == '.') {
            end += 1;
        }
        if end == digits {
            return None;
        }
        if end < self.chars.len() && matches!(self.chars[end], 'e' | 'E') {
            let mut k = end + 1;
            if k < self.chars.len() && matches!(self.chars[k], '+' | '-') {
                k += 1;
            }
            let exp_start = k;
            while k < self.chars.len() && self.chars[k].is_ascii_digit() {
                k += 1;
            }
            if k > exp_start {
                end = k;
            }
        }
        let text: String = self.chars[start..end].iter().collect();
        text.parse().ok().map(|v| (v, end))
    }

    fn bracket_name(&mut self) -> Result<String, DslError> {
        self.expect('[')?;
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos] != ']' {
            self.pos += 1;
        }
        if self.pos >= self.chars.len() {
            return Err(self.error_at(start, "unterminated sort name"));
        }
        let name: String = self.chars[start..self.pos].iter().collect::<String>().trim().to_string();
        self.pos += 1;
        if name.is_empty() {
            return Err(self.error_at(start, "empty sort name"));
        }
        Ok(name)
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        if let Some((kw, _)) = self.peek_ident() {
            if kw == "sup" || kw == "inf" {
                return self.binder();
            }
        }
        self.sum()
    }

    fn binder(&mut self) -> Result<Expr, DslError> {
        let kw = self.ident()?;
        let q = if kw == "sup" { Quantifier::Sup } else { Quantifier::Inf };
        let at = self.pos;
        let var = self.ident()?;
        if RESERVED.contains(&var.as_str()) {
            return Err(self.error_at(at, format!("`{var}` is reserved")));
        }
        self.expect(':')?;
        let s_at = self.pos;
        if self.ident()? != "S" {
            return Err(self.error_at(s_at, "expected `S[...]`"));
        }
        let sort = self.bracket_name()?;
        self.expect('.')?;
        let body = self.expr()?;
        Ok(Expr::Binder { q, var, sort, body: Box::new(body) })
    }

    fn sum(&mut self) -> Result<Expr, DslError> {
        let mut left = self.prod()?;
        while self.eat('+') {
            let right = self.prod()?;
            left = Expr::Plus(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn prod(&mut self) -> Result<Expr, DslError> {
        if let Some((v, end)) = self.number_here() {
            let save = self.pos;
            self.pos = end;
            if self.eat('*') {
                return Ok(Expr::Scale(v, Box::new(self.prod()?)));
            }
            self.pos = save;
        }
        let mut left = self.atom()?;
        while self.eat('*') {
            let right = self.atom()?;
            left = Expr::Mul(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn args<T>(&mut self, name: &str, at: usize, n: usize, mut item: impl FnMut(&mut Self) -> Result<T, DslError>) -> Result<Vec<T>, DslError> {
        self.expect('(')?;
        let mut out = Vec::new();
        if !self.eat(')') {
            loop {
                out.push(item(self)?);
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        if out.len() != n {
            let (line, col) = self.location(at);
            return Err(DslError::Arity { line, col, name: name.into(), expected: n, got: out.len() });
        }
        Ok(out)
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        if let Some((v, end)) = self.number_here() {
            self.pos = end;
            return Ok(Expr::Const(v));
        }
        if self.eat('(') {
            let e = self.expr()?;
            self.expect(')')?;
            return Ok(e);
        }
        let at = self.pos;
        let Some((name, end)) = self.peek_ident() else {
            let found = self.peek().map(|c| format!("`{c}`")).unwrap_or_else(|| "end of input".into());
            return Err(self.error_at(self.pos, format!("expected an expression, found {found}")));
        };
        match name.as_str() {
            "sup" | "inf" => self.binder(),
            "max" | "min" | "absdiff" => {
                self.pos = end;
                let mut a = self.args(&name, at, 2, |p| p.expr())?;
                let (y, x) = (Box::new(a.pop().unwrap()), Box::new(a.pop().unwrap()));
                Ok(match name.as_str() {
                    "max" => Expr::Max(x, y),
                    "min" => Expr::Min(x, y),
                    _ => Expr::AbsDiff(x, y),
                })
            }
            "ip" => {
                self.pos = end;
                let mut a = self.args(&name, at, 2, |p| p.term())?;
                let y = a.pop().unwrap();
                Ok(Expr::Ip(a.pop().unwrap(), y))
            }
            "nrm" => {
                self.pos = end;
                let mut a = self.args(&name, at, 1, |p| p.term())?;
                Ok(Expr::Nrm(a.pop().unwrap()))
            }
            _ => Err(self.error_at(at, format!("`{name}` is not an expression"))),
        }
    }

    fn term(&mut self) -> Result<Term, DslError> {
        if self.eat('-') {
            return Ok(Term::Neg(Box::new(self.term()?)));
        }
        if self.eat('(') {
            let t = self.term()?;
            self.expect(')')?;
            return Ok(t);
        }
        if let Some((v, end)) = self.number_here() {
            if v == 0.0 {
                self.pos = end;
                return Ok(Term::Zero);
            }
            return Err(self.error_at(self.pos, "the only constant term is 0"));
        }
        let at = self.pos;
        let name = self.ident()?;
        match name.as_str() {
            "i" => {
                self.expect('*')?;
                Ok(Term::I(Box::new(self.term()?)))
            }
            "avg" => {
                let mut a = self.args(&name, at, 2, |p| p.term())?;
                let y = a.pop().unwrap();
                Ok(Term::Avg(Box::new(a.pop().unwrap()), Box::new(y)))
            }
            "pi" => {
                let sort = self.bracket_name()?;
                let mut a = self.args(&name, at, 1, |p| p.term())?;
                Ok(Term::Pi(sort, Box::new(a.pop().unwrap())))
            }
            n if RESERVED.contains(&n) => Err(self.error_at(at, format!("`{n}` is not a term"))),
            _ => Ok(Term::Var(name)),
        }
    }
}

fn check_bindings(e: &Expr, scope: &mut Vec<String>, seen: &mut BTreeSet<String>) -> Result<(), DslError> {
    match e {
        Expr::Const(_) => Ok(()),
        Expr::Binder { var, body, .. } => {
            if !seen.insert(var.clone()) {
                return Err(DslError::Binding(format!("variable `{var}` is bound more than once")));
            }
            scope.push(var.clone());
            let r = check_bindings(body, scope, seen);
            scope.pop();
            r
        }
        Expr::Ip(a, b) => check_term_bindings(a, scope).and_then(|_| check_term_bindings(b, scope)),
        Expr::Nrm(a) => check_term_bindings(a, scope),
        Expr::Max(a, b) | Expr::Min(a, b) | Expr::AbsDiff(a, b) | Expr::Plus(a, b) | Expr::Mul(a, b) => {
            check_bindings(a, scope, seen)?;
            check_bindings(b, scope, seen)
        }
        Expr::Scale(_, a) => check_bindings(a, scope, seen),
    }
}

fn check_term_bindings(t: &Term, scope: &[String]) -> Result<(), DslError> {
    match t {
        Term::Zero => Ok(()),
        Term::Var(v) => {
            if scope.contains(v) {
                Ok(())
            } else {
                Err(DslError::Binding(format!("variable `{v}` is free")))
            }
        }
        Term::Neg(a) | Term::I(a) | Term::Pi(_, a) => check_term_bindings(a, scope),
        Term::Avg(a, b) => check_term_bindings(a, scope).and_then(|_| check_term_bindings(b, scope)),
    }
}

/// Parses a closed sentence; every variable must be bound exactly once.
pub fn parse_sentence(text: &str) -> Result<Expr, DslError> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0 };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.error_at(p.pos, "unexpected trailing input"));
    }
    check_bindings(&e, &mut Vec::new(), &mut BTreeSet::new())?;
    Ok(e)
}

#[derive(Clone, Debug)]
enum PTerm {
    Zero,
    Var(usize),
    Neg(Box<PTerm>),
    I(Box<PTerm>),
    Avg(Box<PTerm>, Box<PTerm>),
    Pi(CMatrix, Box<PTerm>),
}

#[derive(Clone, Debug)]
struct ExactInf {
    factor: f64,
    set: Ellipsoid,
    rest: PTerm,
}

#[derive(Clone, Debug)]
enum Plan {
    Const(f64),
    Binder { q: Quantifier, slot: usize, var: String, sort: String, op: CMatrix, top: CVector, exact: Option<Box<ExactInf>>, body: Box<Plan> },
    Ip(PTerm, PTerm),
    Nrm(PTerm),
    Max(Box<Plan>, Box<Plan>),
    Min(Box<Plan>, Box<Plan>),
    AbsDiff(Box<Plan>, Box<Plan>),
    Plus(Box<Plan>, Box<Plan>),
    Scale(f64, Box<Plan>),
    Mul(Box<Plan>, Box<Plan>),
}

/// A sentence resolved against a structure.
#[derive(Clone, Debug)]
pub struct Compiled {
    plan: Plan,
    slots: usize,
    dim: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum SortTy {
    /// The zero term, which lies in every sort.
    Any,
    Of(usize),
    /// Lies in the ambient space but in no named sort.
    Ambient,
}

struct Checker<'a> {
    m: &'a MetricStructure,
    /// Variables in scope with their slots.
    vars: Vec<(String, usize)>,
    /// Sort index of every slot.
    slot_sorts: Vec<usize>,
}

impl<'a> Checker<'a> {
    fn sort_name(&self, s: SortTy) -> String {
        match s {
            SortTy::Any => "any sort".into(),
            SortTy::Of(i) => format!("S[{}]", self.m.sorts()[i].name),
            SortTy::Ambient => "the ambient space".into(),
        }
    }

    fn term(&self, t: &Term) -> Result<(PTerm, SortTy), DslError> {
        Ok(match t {
            Term::Zero => (PTerm::Zero, SortTy::Any),
            Term::Var(v) => {
                let &(_, slot) = self.vars.iter().rev().find(|(n, _)| n == v).ok_or_else(|| DslError::Binding(format!("variable `{v}` is free")))?;
                (PTerm::Var(slot), SortTy::Of(self.slot_sorts[slot]))
            }
            Term::Neg(a) => {
                let (p, s) = self.term(a)?;
                (PTerm::Neg(Box::new(p)), s)
            }
            Term::I(a) => {
                let (p, s) = self.term(a)?;
                (PTerm::I(Box::new(p)), s)
            }
            Term::Avg(a, b) => {
                let (pa, sa) = self.term(a)?;
                let (pb, sb) = self.term(b)?;
                let s = match (sa, sb) {
                    (SortTy::Any, s) | (s, SortTy::Any) => s,
                    (x, y) if x == y => x,
                    _ => SortTy::Ambient,
                };
                (PTerm::Avg(Box::new(pa), Box::new(pb)), s)
            }
            Term::Pi(name, a) => {
                let ia = self.m.index(name).map_err(|_| DslError::MissingSort(name.clone()))?;
                let (p, s) = self.term(a)?;
                let out = match s {
                    SortTy::Any => SortTy::Any,
                    SortTy::Ambient => SortTy::Ambient,
                    SortTy::Of(ib) => SortTy::Of(self.m.product(ia, ib).map_err(|_| DslError::Sort {
                        subterm: t.to_string(),
                        msg: format!("no sort for S[{name}] applied to {}", self.sort_name(s)),
                    })?),
                };
                (PTerm::Pi(self.m.sorts()[ia].pi.clone(), Box::new(p)), out)
            }
        })
    }

    fn expr(&mut self, e: &Expr) -> Result<Plan, DslError> {
        Ok(match e {
            Expr::Const(v) => Plan::Const(*v),
            Expr::Binder { q, var, sort, body } => {
                let idx = self.m.index(sort).map_err(|_| DslError::MissingSort(sort.clone()))?;
                let slot = self.slot_sorts.len();
                self.slot_sorts.push(idx);
                self.vars.push((var.clone(), slot));
                let body_plan = self.expr(body)?;
                self.vars.pop();
                let set = &self.m.sorts()[idx].set;
                let op = set.operator().clone();
                let exact = if *q == Quantifier::Inf { exact_inf(&body_plan, slot, &op, self.m.ambient_dim()).map(Box::new) } else { None };
                Plan::Binder { q: *q, slot, var: var.clone(), sort: sort.clone(), op, top: set.top_direction(), exact, body: Box::new(body_plan) }
            }
            Expr::Ip(a, b) => Plan::Ip(self.term(a)?.0, self.term(b)?.0),
            Expr::Nrm(a) => Plan::Nrm(self.term(a)?.0),
            Expr::Max(a, b) => Plan::Max(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Min(a, b) => Plan::Min(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::AbsDiff(a, b) => Plan::AbsDiff(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Plus(a, b) => Plan::Plus(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Mul(a, b) => Plan::Mul(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Scale(v, a) => Plan::Scale(*v, Box::new(self.expr(a)?)),
        })
    }
}

/// Linear part of `t` in the variable `slot`.
fn coefficient(t: &PTerm, slot: usize, n: usize) -> CMatrix {
    match t {
        PTerm::Zero => CMatrix::zeros(n, n),
        PTerm::Var(s) => {
            if *s == slot {
                CMatrix::identity(n, n)
            } else {
                CMatrix::zeros(n, n)
            }
        }
        PTerm::Neg(a) => -coefficient(a, slot, n),
        PTerm::I(a) => coefficient(a, slot, n) * c(0.0, 1.0),
        PTerm::Avg(a, b) => (coefficient(a, slot, n) + coefficient(b, slot, n)) * c(0.5, 0.0),
        PTerm::Pi(p, a) => p * coefficient(a, slot, n),
    }
}

fn without(t: &PTerm, slot: usize) -> PTerm {
    match t {
        PTerm::Var(s) if *s == slot => PTerm::Zero,
        PTerm::Zero | PTerm::Var(_) => t.clone(),
        PTerm::Neg(a) => PTerm::Neg(Box::new(without(a, slot))),
        PTerm::I(a) => PTerm::I(Box::new(without(a, slot))),
        PTerm::Avg(a, b) => PTerm::Avg(Box::new(without(a, slot)), Box::new(without(b, slot))),
        PTerm::Pi(p, a) => PTerm::Pi(p.clone(), Box::new(without(a, slot))),
    }
}

/// `inf_y c·nrm(T)` with `T = M y + r` is `c · d(−r, M S_b)`.
fn exact_inf(body: &Plan, slot: usize, op: &CMatrix, n: usize) -> Option<ExactInf> {
    let (factor, t) = match body {
        Plan::Nrm(t) => (1.0, t),
        Plan::Scale(f, inner) if *f >= 0.0 => match &**inner {
            Plan::Nrm(t) => (*f, t),
            _ => return None,
        },
        _ => return None,
    };
    let m = coefficient(t, slot, n);
    Some(ExactInf { factor, set: Ellipsoid::new(m * op), rest: without(t, slot) })
}

fn eval_term(t: &PTerm, env: &[CVector], n: usize) -> CVector {
    match t {
        PTerm::Zero => CVector::zeros(n),
        PTerm::Var(s) => env[*s].clone(),
        PTerm::Neg(a) => -eval_term(a, env, n),
        PTerm::I(a) => eval_term(a, env, n) * c(0.0, 1.0),
        PTerm::Avg(a, b) => (eval_term(a, env, n) + eval_term(b, env, n)) * c(0.5, 0.0),
        PTerm::Pi(p, a) => p * eval_term(a, env, n),
    }
}

/// Budget for numeric binders.
pub type Budget = AscentOptions;

/// Value of a sentence and the points realizing its outermost binders.
#[derive(Clone, Debug, Serialize)]
pub struct SentenceValue {
    pub value: f64,
    pub witnesses: Vec<BinderWitness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BinderWitness {
    pub var: String,
    pub sort: String,
    pub point: Vec<[f64; 2]>,
}

impl Compiled {
    /// Resolves sort labels and derives the sort of every term.
    pub fn new(m: &MetricStructure, e: &Expr) -> Result<Self, DslError> {
        let mut ck = Checker { m, vars: Vec::new(), slot_sorts: Vec::new() };
        let plan = ck.expr(e)?;
        Ok(Compiled { plan, slots: ck.slot_sorts.len(), dim: m.ambient_dim() })
    }

    pub fn evaluate(&self, budget: &Budget) -> SentenceValue {
        let mut env = vec![CVector::zeros(self.dim); self.slots];
        let mut witnesses = Vec::new();
        let value = self.trace(&self.plan, &mut env, budget, &mut witnesses);
        SentenceValue { value, witnesses }
    }

    fn value(&self, p: &Plan, env: &mut Vec<CVector>, budget: &Budget) -> f64 {
        match p {
            Plan::Binder { .. } => self.binder(p, env, budget).0,
            _ => self.combine(p, env, budget, &mut |s, p, env| s.value(p, env, budget)),
        }
    }

    fn combine(&self, p: &Plan, env: &mut Vec<CVector>, _budget: &Budget, rec: &mut dyn FnMut(&Self, &Plan, &mut Vec<CVector>) -> f64) -> f64 {
        let n = self.dim;
        match p {
            Plan::Const(v) => *v,
            Plan::Ip(a, b) => starrep_core::linalg::real_inner(&eval_term(a, env, n), &eval_term(b, env, n)),
            Plan::Nrm(a) => eval_term(a, env, n).norm(),
            Plan::Max(a, b) => rec(self, a, env).max(rec(self, b, env)),
            Plan::Min(a, b) => rec(self, a, env).min(rec(self, b, env)),
            Plan::AbsDiff(a, b) => (rec(self, a, env) - rec(self, b, env)).abs(),
            Plan::Plus(a, b) => rec(self, a, env) + rec(self, b, env),
            Plan::Mul(a, b) => rec(self, a, env) * rec(self, b, env),
            Plan::Scale(v, a) => v * rec(self, a, env),
            Plan::Binder { .. } => unreachable!("binders are handled by the caller"),
        }
    }

    /// Optimal value of a binder and the ball parameter realizing it.
    fn binder(&self, p: &Plan, env: &[CVector], budget: &Budget) -> (f64, CVector) {
        let Plan::Binder { q, slot, op, top, exact, body, .. } = p else { unreachable!() };
        if let Some(ex) = exact {
            let r = eval_term(&ex.rest, env, self.dim);
            let proj = ex.set.project(&-r);
            return (ex.factor * proj.distance, proj.witness);
        }
        let sign = if *q == Quantifier::Sup { 1.0 } else { -1.0 };
        let base = env.to_vec();
        let f = |z: &[CVector]| {
            let mut e = base.clone();
            e[*slot] = op * &z[0];
            (sign * self.value(body, &mut e, budget), None)
        };
        let extra = vec![vec![top.clone()], vec![-top]];
        let r = maximize(&[self.dim], budget, &extra, f);
        (sign * r.value, r.point.into_iter().next().unwrap_or_else(|| CVector::zeros(self.dim)))
    }

    fn trace(&self, p: &Plan, env: &mut Vec<CVector>, budget: &Budget, out: &mut Vec<BinderWitness>) -> f64 {
        match p {
            Plan::Binder { slot, var, sort, op, body, .. } => {
                let (v, z) = self.binder(p, env, budget);
                let point = op * z;
                out.push(BinderWitness { var: var.clone(), sort: sort.clone(), point: to_pairs(&point) });
                env[*slot] = point;
                let _ = self.trace(body, env, budget, out);
                v
            }
            _ => self.value(p, env, budget),
        }
    }
}

/// Parses and sort-checks against `m`.
pub fn parse_checked(text: &str, m: &MetricStructure) -> Result<(Expr, Compiled), DslError> {
    let e = parse_sentence(text)?;
    let compiled = Compiled::new(m, &e)?;
    Ok((e, compiled))
}

pub fn evaluate_sentence(m: &MetricStructure, e: &Expr, budget: &Budget) -> Result<SentenceValue, DslError> {
    Ok(Compiled::new(m, e)?.evaluate(budget))
}

/// Sentences for the axioms with a direct counterpart, over sorts `a`, `b`.
pub fn axiom_sentence(axiom: &str, a: &str, b: &str) -> Option<String> {
    Some(match axiom {
        "Norm" => format!("sup x:S[{a}] . absdiff(ip(x, x), nrm(x)*nrm(x))"),
        "Sym" => format!("sup x:S[{a}] . sup y:S[{b}] . absdiff(ip(x, y), ip(y, x))"),
        "HausDist" => format!("sup x:S[{a}] . inf y:S[{b}] . 2*nrm(avg(x, -y))"),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_norm_axiom() {
        let e = parse_sentence("sup x:S[phi] . absdiff(ip(x,x), nrm(x)*nrm(x))").unwrap();
        let Expr::Binder { q, var, sort, body } = &e else { panic!() };
        assert_eq!((*q, var.as_str(), sort.as_str()), (Quantifier::Sup, "x", "phi"));
        assert!(matches!(**body, Expr::AbsDiff(..)));
        assert_eq!(parse_sentence(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn arity_error_points_at_ip() {
        let err = parse_sentence("sup x:S[phi] . ip(x)").unwrap_err();
        assert_eq!(err, DslError::Arity { line: 1, col: 16, name: "ip".into(), expected: 2, got: 1 });
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_sentence("sup x:S[a] .\n  max(nrm(x), )").unwrap_err();
        assert!(matches!(err, DslError::Syntax { line: 2, col: 15, .. }), "{err:?}");
        assert!(matches!(parse_sentence("sup x:S[a . 1"), Err(DslError::Syntax { .. })));
    }

    #[test]
    fn binding_rules() {
        assert!(matches!(parse_sentence("nrm(x)"), Err(DslError::Binding(_))));
        assert!(matches!(parse_sentence("sup x:S[a] . sup x:S[a] . nrm(x)"), Err(DslError::Binding(_))));
        assert!(matches!(parse_sentence("max(sup x:S[a] . nrm(x), sup x:S[b] . nrm(x))"), Err(DslError::Binding(_))));
    }

    #[test]
    fn precedence_round_trips() {
        for s in [
            "1 + 2 + 3",
            "1 + (2 + 3)",
            "2*nrm(0)*nrm(0)",
            "(2*nrm(0))*nrm(0)",
            "(2)*nrm(0)",
            "-1.5e-3*(sup x:S[a] . nrm(x)) + 1",
            "max(inf x:S[a] . nrm(-i*x), 0)",
            "sup x:S[a] . ip(pi[b](avg(x, 0)), --x)",
        ] {
            let e = parse_sentence(s).unwrap();
            assert_eq!(parse_sentence(&e.to_string()).unwrap(), e, "{s} -> {e}");
        }
        assert_eq!(parse_sentence("2*3").unwrap(), Expr::Scale(2.0, Box::new(Expr::Const(3.0))));
    }

    use starrep_core::linalg::c as cx;
    use starrep_core::structure::one_sided_hausdorff;
    use starrep_core::{AlgebraElement, Group, UnitaryRep};

    fn structure() -> MetricStructure {
        let s3 = Group::symmetric3();
        let rep = UnitaryRep::regular(&s3).unwrap();
        let t = AlgebraElement::dirac(&s3, s3.element_by_label("(1 2)").unwrap());
        let phi = AlgebraElement::from_density_fn(&s3, |g| cx(0.1 * (g.index() as f64 + 1.0), 0.05));
        MetricStructure::build(&rep, &[("t".into(), t), ("phi".into(), phi)]).unwrap()
    }

    fn budget() -> Budget {
        AscentOptions { starts: 16, seed: 3, max_iter: 300, tol: 1e-13 }
    }

    #[test]
    fn constants_evaluate_to_themselves() {
        let m = structure();
        let e = parse_sentence("max(0.25, 2*0.1) + 1").unwrap();
        assert_eq!(evaluate_sentence(&m, &e, &budget()).unwrap().value, 1.25);
    }

    #[test]
    fn norm_axiom_vanishes() {
        let m = structure();
        let e = parse_sentence(&axiom_sentence("Norm", "phi", "phi").unwrap()).unwrap();
        let v = evaluate_sentence(&m, &e, &budget()).unwrap();
        assert!(v.value <= 1e-10, "{}", v.value);
        assert_eq!(v.witnesses.len(), 1);
    }

    #[test]
    fn hausdorff_sentence_matches_direct_search() {
        let mut m = structure();
        m.inflate_sort("t", 1.3).unwrap();
        for (a, b) in [("phi", "t"), ("t", "phi")] {
            let e = parse_sentence(&axiom_sentence("HausDist", a, b).unwrap()).unwrap();
            let v = evaluate_sentence(&m, &e, &budget()).unwrap().value;
            let d = one_sided_hausdorff(&m, a, b, &budget()).unwrap().value;
            assert!((v - d).abs() < 1e-6, "{a} {b}: {v} vs {d}");
        }
    }

    #[test]
    fn sort_check_rejects_unknown_labels() {
        let m = structure();
        let missing = parse_sentence("sup x:S[nope] . nrm(x)").unwrap();
        assert_eq!(Compiled::new(&m, &missing).unwrap_err(), DslError::MissingSort("nope".into()));
        let pi = parse_sentence("sup x:S[t] . nrm(pi[zz](x))").unwrap();
        assert_eq!(Compiled::new(&m, &pi).unwrap_err(), DslError::MissingSort("zz".into()));
        let mixed = parse_sentence("sup x:S[t] . sup y:S[phi] . nrm(avg(x, y))").unwrap();
        assert!(Compiled::new(&m, &mixed).is_ok());
        // products of products are not sorts of the structure
        let deep = parse_sentence("sup x:S[phi] . nrm(pi[phi](pi[phi](x)))").unwrap();
        let err = Compiled::new(&m, &deep).unwrap_err();
        assert!(matches!(&err, DslError::Sort { subterm, .. } if subterm == "pi[phi](pi[phi](x))"), "{err}");
    }

    #[test]
    fn pi_terms_land_in_product_sorts() {
        let m = structure();
        // π(t)π(t) = identity, so ‖π_t π_t x‖ = ‖x‖ on S[phi]
        let e = parse_sentence("sup x:S[phi] . absdiff(nrm(pi[t](pi[t](x))), nrm(x))").unwrap();
        assert!(evaluate_sentence(&m, &e, &budget()).unwrap().value < 1e-12);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let m = structure();
        let e = parse_sentence("sup x:S[phi] . max(ip(x, x), inf y:S[t] . 3*nrm(avg(x, i*y)))").unwrap();
        let a = evaluate_sentence(&m, &e, &budget()).unwrap();
        let b = evaluate_sentence(&m, &e, &budget()).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    mod roundtrip {
        use super::super::*;
        use proptest::prelude::*;

        fn term(vars: Vec<String>) -> impl Strategy<Value = Term> {
            let leaf = prop_oneof![Just(Term::Zero), proptest::sample::select(vars).prop_map(Term::Var)];
            leaf.prop_recursive(3, 12, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|t| Term::Neg(Box::new(t))),
                    inner.clone().prop_map(|t| Term::I(Box::new(t))),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Avg(Box::new(a), Box::new(b))),
                    ("[a-z][a-z0-9.*+]{0,4}", inner).prop_map(|(n, t)| Term::Pi(n, Box::new(t))),
                ]
            })
        }

        fn body(vars: Vec<String>) -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (-1.0e3..1.0e3f64).prop_map(Expr::Const),
                term(vars.clone()).prop_map(Expr::Nrm),
                (term(vars.clone()), term(vars)).prop_map(|(a, b)| Expr::Ip(a, b)),
            ];
            leaf.prop_recursive(4, 24, 2, |inner| {
                let b = |e: Expr| Box::new(e);
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Max(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Min(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::AbsDiff(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Plus(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Mul(b(x), b(y))),
                    (-1.0e3..1.0e3f64, inner).prop_map(move |(k, x)| Expr::Scale(k, b(x))),
                ]
            })
        }

        fn sentence() -> impl Strategy<Value = Expr> {
            prop::collection::vec((any::<bool>(), "[a-z][a-z0-9]{0,3}"), 1..4)
                .prop_filter("distinct, unreserved names", |bs| {
                    let names: std::collections::BTreeSet<_> = bs.iter().map(|(_, n)| n).collect();
                    names.len() == bs.len() && bs.iter().all(|(_, n)| !RESERVED.contains(&n.as_str()))
                })
                .prop_flat_map(|binders| {
                    let vars: Vec<String> = binders.iter().map(|(_, n)| n.clone()).collect();
                    (Just(binders), body(vars))
                })
                .prop_map(|(binders, body)| {
                    binders.into_iter().rev().fold(body, |acc, (sup, var)| Expr::Binder {
                        q: if sup { Quantifier::Sup } else { Quantifier::Inf },
                        sort: format!("s{}", var.len()),
                        var,
                        body: Box::new(acc),
                    })
                })
        }

        proptest! {
            #[test]
            fn printed_sentences_parse_back(e in sentence()) {
                let text = e.to_string();
                prop_assert_eq!(parse_sentence(&text).unwrap(), e, "{}", text);
            }
        }
    }
}
