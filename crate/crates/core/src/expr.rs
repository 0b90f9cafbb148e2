// SPDX-License-Identifier: Apache-2.0
//! A small total expression language for computing attribute values in
//! rule replacements.
//!
//! Syntax, loosest binding first:
//!
//! ```text
//! expr   := or
//! or     := and ("||" and)*
//! and    := cmp ("&&" cmp)*
//! cmp    := sum (("==" | "!=" | "<" | "<=" | ">" | ">=") sum)?
//! sum    := prod (("+" | "-") prod)*
//! prod   := unary (("*" | "/") unary)*
//! unary  := "-" unary | "!" unary | atom
//! atom   := $N | INT | FLOAT | STRING | true | false | nan | inf
//!         | max(expr, expr) | min(expr, expr) | if(expr, expr, expr)
//!         | "(" expr ")"
//! ```
//!
//! Integer arithmetic is checked; overflow and division by zero are
//! evaluation errors. Integer division truncates. Operands of arithmetic and comparisons must have the same
//! kind; there are no implicit conversions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::acset::Scalar;
use crate::schema::ScalarKind;

const MAX_DEPTH: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Division; truncating on integers.
    Div,
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Max,
    Min,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Max => "max",
            BinOp::Min => "min",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttrExpr {
    Var(u32),
    Lit(Scalar),
    Unary(UnOp, Box<AttrExpr>),
    Binary(BinOp, Box<AttrExpr>, Box<AttrExpr>),
    If(Box<AttrExpr>, Box<AttrExpr>, Box<AttrExpr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("variable ${0} is unbound")]
    UnboundVar(u32),
    #[error("operator {op} not defined for {left}{}", .right.map(|k| format!(" and {k}")).unwrap_or_default())]
    KindMismatch {
        op: &'static str,
        left: ScalarKind,
        right: Option<ScalarKind>,
    },
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("integer division by zero")]
    DivZero,
    #[error("comparison with NaN")]
    NaN,
    #[error("parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
}

impl AttrExpr {
    pub fn var(v: u32) -> Self {
        AttrExpr::Var(v)
    }

    pub fn lit(s: Scalar) -> Self {
        AttrExpr::Lit(s)
    }

    pub fn binary(op: BinOp, a: AttrExpr, b: AttrExpr) -> Self {
        AttrExpr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Variables referenced anywhere in the expression.
    pub fn vars(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<u32>) {
        match self {
            AttrExpr::Var(v) => {
                out.insert(*v);
            }
            AttrExpr::Lit(_) => {}
            AttrExpr::Unary(_, a) => a.collect_vars(out),
            AttrExpr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            AttrExpr::If(c, a, b) => {
                c.collect_vars(out);
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Static kind of the expression given the kinds of its variables.
    pub fn infer_kind(
        &self,
        var_kind: &dyn Fn(u32) -> Option<ScalarKind>,
    ) -> Result<ScalarKind, ExprError> {
        use ScalarKind::*;
        match self {
            AttrExpr::Var(v) => var_kind(*v).ok_or(ExprError::UnboundVar(*v)),
            AttrExpr::Lit(s) => Ok(s.kind()),
            AttrExpr::Unary(op, a) => {
                let k = a.infer_kind(var_kind)?;
                match (op, k) {
                    (UnOp::Neg, Int | Float) => Ok(k),
                    (UnOp::Not, Bool) => Ok(Bool),
                    (UnOp::Neg, _) => Err(ExprError::KindMismatch {
                        op: "-",
                        left: k,
                        right: None,
                    }),
                    (UnOp::Not, _) => Err(ExprError::KindMismatch {
                        op: "!",
                        left: k,
                        right: None,
                    }),
                }
            }
            AttrExpr::Binary(op, a, b) => {
                let (ka, kb) = (a.infer_kind(var_kind)?, b.infer_kind(var_kind)?);
                let mismatch = ExprError::KindMismatch {
                    op: op.symbol(),
                    left: ka,
                    right: Some(kb),
                };
                if ka != kb {
                    return Err(mismatch);
                }
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Max | BinOp::Min => {
                        if matches!(ka, Int | Float) {
                            Ok(ka)
                        } else {
                            Err(mismatch)
                        }
                    }
                    BinOp::And | BinOp::Or => {
                        if ka == Bool {
                            Ok(Bool)
                        } else {
                            Err(mismatch)
                        }
                    }
                    BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        Ok(Bool)
                    }
                }
            }
            AttrExpr::If(c, a, b) => {
                let kc = c.infer_kind(var_kind)?;
                if kc != Bool {
                    return Err(ExprError::KindMismatch {
                        op: "if",
                        left: kc,
                        right: None,
                    });
                }
                let (ka, kb) = (a.infer_kind(var_kind)?, b.infer_kind(var_kind)?);
                if ka != kb {
                    return Err(ExprError::KindMismatch {
                        op: "if",
                        left: ka,
                        right: Some(kb),
                    });
                }
                Ok(ka)
            }
        }
    }
}

/// Strict evaluation under a variable binding.
pub fn eval_attr_expr(e: &AttrExpr, binding: &BTreeMap<u32, Scalar>) -> Result<Scalar, ExprError> {
    match e {
        AttrExpr::Var(v) => binding.get(v).cloned().ok_or(ExprError::UnboundVar(*v)),
        AttrExpr::Lit(s) => Ok(s.clone()),
        AttrExpr::Unary(op, a) => {
            let x = eval_attr_expr(a, binding)?;
            match (op, x) {
                (UnOp::Neg, Scalar::Int(i)) => i
                    .checked_neg()
                    .map(Scalar::Int)
                    .ok_or(ExprError::Overflow("-")),
                (UnOp::Neg, Scalar::Float(f)) => Ok(Scalar::Float(-f)),
                (UnOp::Not, Scalar::Bool(b)) => Ok(Scalar::Bool(!b)),
                (UnOp::Neg, x) => Err(ExprError::KindMismatch {
                    op: "-",
                    left: x.kind(),
                    right: None,
                }),
                (UnOp::Not, x) => Err(ExprError::KindMismatch {
                    op: "!",
                    left: x.kind(),
                    right: None,
                }),
            }
        }
        AttrExpr::Binary(op, a, b) => {
            // Boolean connectives are strict too: both sides are evaluated.
            let (x, y) = (eval_attr_expr(a, binding)?, eval_attr_expr(b, binding)?);
            binop(*op, x, y)
        }
        AttrExpr::If(c, a, b) => match eval_attr_expr(c, binding)? {
            Scalar::Bool(cond) => {
                let (x, y) = (eval_attr_expr(a, binding)?, eval_attr_expr(b, binding)?);
                if x.kind() != y.kind() {
                    return Err(ExprError::KindMismatch {
                        op: "if",
                        left: x.kind(),
                        right: Some(y.kind()),
                    });
                }
                Ok(if cond { x } else { y })
            }
            other => Err(ExprError::KindMismatch {
                op: "if",
                left: other.kind(),
                right: None,
            }),
        },
    }
}

fn binop(op: BinOp, x: Scalar, y: Scalar) -> Result<Scalar, ExprError> {
    use Scalar::*;
    let mismatch = |x: &Scalar, y: &Scalar| ExprError::KindMismatch {
        op: op.symbol(),
        left: x.kind(),
        right: Some(y.kind()),
    };
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Max | BinOp::Min => {
            match (&x, &y) {
                (Int(a), Int(b)) => {
                    let r = match op {
                        BinOp::Add => a.checked_add(*b),
                        BinOp::Sub => a.checked_sub(*b),
                        BinOp::Mul => a.checked_mul(*b),
                        BinOp::Div if *b == 0 => return Err(ExprError::DivZero),
                        BinOp::Div => a.checked_div(*b),
                        BinOp::Max => Some(*a.max(b)),
                        _ => Some(*a.min(b)),
                    };
                    r.map(Int).ok_or(ExprError::Overflow(op.symbol()))
                }
                (Float(a), Float(b)) => Ok(Float(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Max => a.max(*b),
                    _ => a.min(*b),
                })),
                _ => Err(mismatch(&x, &y)),
            }
        }
        BinOp::And | BinOp::Or => match (&x, &y) {
            (Bool(a), Bool(b)) => Ok(Bool(if op == BinOp::And { *a && *b } else { *a || *b })),
            _ => Err(mismatch(&x, &y)),
        },
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            if x.kind() != y.kind() {
                return Err(mismatch(&x, &y));
            }
            let ord = match (&x, &y) {
                (Float(a), Float(b)) => a.partial_cmp(b).ok_or(ExprError::NaN)?,
                _ => x.cmp(&y),
            };
            use std::cmp::Ordering::*;
            Ok(Bool(match op {
                BinOp::Eq => ord == Equal,
                BinOp::Ne => ord != Equal,
                BinOp::Lt => ord == Less,
                BinOp::Le => ord != Greater,
                BinOp::Gt => ord == Greater,
                _ => ord != Less,
            }))
        }
    }
}

fn write_lit(f: &mut fmt::Formatter<'_>, s: &Scalar) -> fmt::Result {
    match s {
        Scalar::Int(i) => write!(f, "{i}"),
        Scalar::Float(x) if x.is_nan() => f.write_str("nan"),
        Scalar::Float(x) if x.is_infinite() => f.write_str(if *x > 0.0 { "inf" } else { "-inf" }),
        Scalar::Float(x) => write!(f, "{x:?}"),
        Scalar::Bool(b) => write!(f, "{b}"),
        Scalar::Str(s) => {
            f.write_str("\"")?;
            for c in s.chars() {
                match c {
                    '"' => f.write_str("\\\"")?,
                    '\\' => f.write_str("\\\\")?,
                    '\n' => f.write_str("\\n")?,
                    '\t' => f.write_str("\\t")?,
                    c if c.is_control() => write!(f, "\\u{{{:x}}}", c as u32)?,
                    c => write!(f, "{c}")?,
                }
            }
            f.write_str("\"")
        }
    }
}

impl fmt::Display for AttrExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrExpr::Var(v) => write!(f, "${v}"),
            AttrExpr::Lit(s) => write_lit(f, s),
            AttrExpr::Unary(UnOp::Neg, a) => write!(f, "-({a})"),
            AttrExpr::Unary(UnOp::Not, a) => write!(f, "!({a})"),
            AttrExpr::Binary(op @ (BinOp::Max | BinOp::Min), a, b) => {
                write!(f, "{}({a}, {b})", op.symbol())
            }
            AttrExpr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            AttrExpr::If(c, a, b) => write!(f, "if({c}, {a}, {b})"),
        }
    }
}

impl std::str::FromStr for AttrExpr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_attr_expr(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Var(u32),
    /// Unsigned magnitude; the sign is applied by the parser so that
    /// `i64::MIN` is expressible.
    Int(u64),
    Float(f64),
    Str(String),
    Ident(String),
    Sym(&'static str),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let err = |pos: usize, m: &str| ExprError::Parse {
        pos,
        message: m.to_string(),
    };
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == b'$' {
            i += 1;
            let d = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[d..i]
                .parse::<u32>()
                .map_err(|_| err(start, "bad variable"))?;
            out.push((start, Tok::Var(n)));
        } else if c.is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let mut float = false;
            if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
                float = true;
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    float = true;
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            if float {
                let x = text
                    .parse::<f64>()
                    .map_err(|_| err(start, "bad float literal"))?;
                out.push((start, Tok::Float(x)));
            } else {
                let x = text
                    .parse::<u64>()
                    .map_err(|_| err(start, "integer literal out of range"))?;
                out.push((start, Tok::Int(x)));
            }
        } else if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(ch) = src[i..].chars().next() else {
                    return Err(err(start, "unterminated string"));
                };
                i += ch.len_utf8();
                match ch {
                    '"' => break,
                    '\\' => {
                        let Some(e) = src[i..].chars().next() else {
                            return Err(err(start, "unterminated string"));
                        };
                        i += e.len_utf8();
                        match e {
                            '"' => s.push('"'),
                            '\\' => s.push('\\'),
                            'n' => s.push('\n'),
                            't' => s.push('\t'),
                            'u' => {
                                let rest = &src[i..];
                                let close = rest.find('}').filter(|_| rest.starts_with('{'));
                                let Some(close) = close else {
                                    return Err(err(i, "bad \\u escape"));
                                };
                                let code = u32::from_str_radix(&rest[1..close], 16)
                                    .ok()
                                    .and_then(char::from_u32)
                                    .ok_or_else(|| err(i, "bad \\u escape"))?;
                                s.push(code);
                                i += close + 1;
                            }
                            _ => return Err(err(i, "unknown escape")),
                        }
                    }
                    ch => s.push(ch),
                }
            }
            out.push((start, Tok::Str(s)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            const SYMS: [&str; 16] = [
                "&&", "||", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "!", "(", ")",
                ",",
            ];
            let Some(sym) = SYMS.iter().find(|s| src[i..].starts_with(**s)) else {
                return Err(err(start, "unexpected character"));
            };
            i += sym.len();
            out.push((start, Tok::Sym(sym)));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    depth: usize,
}

impl Parser {
    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn err(&self, m: impl Into<String>) -> ExprError {
        ExprError::Parse {
            pos: self.here(),
            message: m.into(),
        }
    }

    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.toks.get(self.pos), Some((_, Tok::Sym(x))) if *x == s)
    }

    fn expect(&mut self, s: &str) -> Result<(), ExprError> {
        if self.peek_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.err("expression nested too deeply"))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<AttrExpr, ExprError> {
        self.enter()?;
        let mut lhs = self.and()?;
        while self.peek_sym("||") {
            self.pos += 1;
            lhs = AttrExpr::binary(BinOp::Or, lhs, self.and()?);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn and(&mut self) -> Result<AttrExpr, ExprError> {
        let mut lhs = self.cmp()?;
        while self.peek_sym("&&") {
            self.pos += 1;
            lhs = AttrExpr::binary(BinOp::And, lhs, self.cmp()?);
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> Result<AttrExpr, ExprError> {
        let lhs = self.sum()?;
        let ops = [
            ("==", BinOp::Eq),
            ("!=", BinOp::Ne),
            ("<=", BinOp::Le),
            (">=", BinOp::Ge),
            ("<", BinOp::Lt),
            (">", BinOp::Gt),
        ];
        for (s, op) in ops {
            if self.peek_sym(s) {
                self.pos += 1;
                let rhs = self.sum()?;
                return Ok(AttrExpr::binary(op, lhs, rhs));
            }
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<AttrExpr, ExprError> {
        let mut lhs = self.prod()?;
        loop {
            let op = if self.peek_sym("+") {
                BinOp::Add
            } else if self.peek_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            lhs = AttrExpr::binary(op, lhs, self.prod()?);
        }
    }

    fn prod(&mut self) -> Result<AttrExpr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_sym("*") {
                BinOp::Mul
            } else if self.peek_sym("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            lhs = AttrExpr::binary(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<AttrExpr, ExprError> {
        if self.peek_sym("-") {
            self.pos += 1;
            // A minus sign directly before a numeric literal is part of it.
            match self.toks.get(self.pos).map(|t| &t.1) {
                Some(Tok::Int(n)) => {
                    let n = *n;
                    self.pos += 1;
                    let v = if n == 1u64 << 63 {
                        i64::MIN
                    } else {
                        -(i64::try_from(n).map_err(|_| self.err("integer literal out of range"))?)
                    };
                    return Ok(AttrExpr::Lit(Scalar::Int(v)));
                }
                Some(Tok::Float(x)) => {
                    let x = *x;
                    self.pos += 1;
                    return Ok(AttrExpr::Lit(Scalar::Float(-x)));
                }
                Some(Tok::Ident(id)) if id == "inf" => {
                    self.pos += 1;
                    return Ok(AttrExpr::Lit(Scalar::Float(f64::NEG_INFINITY)));
                }
                _ => {}
            }
            self.enter()?;
            let e = self.unary()?;
            self.depth -= 1;
            return Ok(AttrExpr::Unary(UnOp::Neg, Box::new(e)));
        }
        if self.peek_sym("!") {
            self.pos += 1;
            self.enter()?;
            let e = self.unary()?;
            self.depth -= 1;
            return Ok(AttrExpr::Unary(UnOp::Not, Box::new(e)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<AttrExpr, ExprError> {
        let Some((_, tok)) = self.toks.get(self.pos).cloned() else {
            return Err(self.err("unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Var(v) => Ok(AttrExpr::Var(v)),
            Tok::Int(n) => i64::try_from(n)
                .map(|v| AttrExpr::Lit(Scalar::Int(v)))
                .map_err(|_| self.err("integer literal out of range")),
            Tok::Float(x) => Ok(AttrExpr::Lit(Scalar::Float(x))),
            Tok::Str(s) => Ok(AttrExpr::Lit(Scalar::Str(s.into()))),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(id) => match id.as_str() {
                "true" => Ok(AttrExpr::Lit(Scalar::Bool(true))),
                "false" => Ok(AttrExpr::Lit(Scalar::Bool(false))),
                "nan" => Ok(AttrExpr::Lit(Scalar::Float(f64::NAN))),
                "inf" => Ok(AttrExpr::Lit(Scalar::Float(f64::INFINITY))),
                "max" | "min" => {
                    self.expect("(")?;
                    let a = self.expr()?;
                    self.expect(",")?;
                    let b = self.expr()?;
                    self.expect(")")?;
                    let op = if id == "max" { BinOp::Max } else { BinOp::Min };
                    Ok(AttrExpr::binary(op, a, b))
                }
                "if" => {
                    self.expect("(")?;
                    let c = self.expr()?;
                    self.expect(",")?;
                    let a = self.expr()?;
                    self.expect(",")?;
                    let b = self.expr()?;
                    self.expect(")")?;
                    Ok(AttrExpr::If(Box::new(c), Box::new(a), Box::new(b)))
                }
                other => {
                    self.pos -= 1;
                    Err(self.err(format!("unknown identifier `{other}`")))
                }
            },
            _ => {
                self.pos -= 1;
                Err(self.err("unexpected token"))
            }
        }
    }
}

pub fn parse_attr_expr(src: &str) -> Result<AttrExpr, ExprError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        depth: 0,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(pairs: &[(u32, i64)]) -> BTreeMap<u32, Scalar> {
        pairs.iter().map(|&(v, x)| (v, Scalar::Int(x))).collect()
    }

    #[test]
    fn var_plus_four() {
        let e: AttrExpr = "$0 + 4".parse().unwrap();
        assert_eq!(eval_attr_expr(&e, &b(&[(0, 3)])).unwrap(), Scalar::Int(7));
        assert_eq!(
            eval_attr_expr(&e, &b(&[])).unwrap_err(),
            ExprError::UnboundVar(0)
        );
    }

    #[test]
    fn literal_and_precedence() {
        let e: AttrExpr = "5".parse().unwrap();
        assert_eq!(eval_attr_expr(&e, &b(&[])).unwrap(), Scalar::Int(5));
        let e: AttrExpr = "1 + 2 * 3 - -4".parse().unwrap();
        assert_eq!(eval_attr_expr(&e, &b(&[])).unwrap(), Scalar::Int(11));
        let e: AttrExpr = "$0 > 0 && !($1 == 2)".parse().unwrap();
        assert_eq!(
            eval_attr_expr(&e, &b(&[(0, 1), (1, 3)])).unwrap(),
            Scalar::Bool(true)
        );
        let e: AttrExpr = "max($0 - 1, 0)".parse().unwrap();
        assert_eq!(eval_attr_expr(&e, &b(&[(0, 0)])).unwrap(), Scalar::Int(0));
        let e: AttrExpr = "$0 / 2 * 2".parse().unwrap();
        assert_eq!(eval_attr_expr(&e, &b(&[(0, 7)])).unwrap(), Scalar::Int(6));
        let e: AttrExpr = "1 / $0".parse().unwrap();
        assert_eq!(
            eval_attr_expr(&e, &b(&[(0, 0)])).unwrap_err(),
            ExprError::DivZero
        );
    }

    #[test]
    fn overflow_and_kinds() {
        let e: AttrExpr = "9223372036854775807 + 1".parse().unwrap();
        assert_eq!(
            eval_attr_expr(&e, &b(&[])).unwrap_err(),
            ExprError::Overflow("+")
        );
        let e: AttrExpr = "-9223372036854775808".parse().unwrap();
        assert_eq!(e, AttrExpr::Lit(Scalar::Int(i64::MIN)));
        let e: AttrExpr = "1 + 1.5".parse().unwrap();
        assert!(matches!(
            eval_attr_expr(&e, &b(&[])),
            Err(ExprError::KindMismatch { .. })
        ));
        assert!(matches!(
            e.infer_kind(&|_| None),
            Err(ExprError::KindMismatch { .. })
        ));
        let e: AttrExpr = "if($0 > 2, \"hi\", \"lo\")".parse().unwrap();
        assert_eq!(
            e.infer_kind(&|_| Some(ScalarKind::Int)).unwrap(),
            ScalarKind::String
        );
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "$0 + 4",
            "-(-5)",
            "$1 - -5",
            "\"a\\\"b\\n\" == \"x\"",
            "1.5e-7 * -0.0",
            "!(true || false) && $2 <= 3",
            "if($0 < 1, min(1, 2), max(-inf, nan))",
        ] {
            let e = parse_attr_expr(src).unwrap();
            let shown = e.to_string();
            let again = parse_attr_expr(&shown).unwrap();
            assert_eq!(again.to_string(), shown, "{src}");
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_attr_expr("$0 + ") {
            Err(ExprError::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(parse_attr_expr("foo(1)").is_err());
        assert!(parse_attr_expr("(1").is_err());
        let deep = "(".repeat(500) + "1" + &")".repeat(500);
        assert!(parse_attr_expr(&deep).is_err());
    }
}
