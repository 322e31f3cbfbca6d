//! Closed-form expressions in the radial variable `t`.
//!
//! Expressions are parsed once and evaluated many times with late-bound
//! named parameters. Evaluation propagates truncated Taylor series, so the
//! first and second derivatives are exact up to rounding.
//!
//! Grammar, lowest to highest precedence:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 't' | ident | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | sin | cos | sinh | cosh | tanh | sqrt
//! ```

mod jet;

use std::collections::BTreeMap;
use std::fmt;

pub use jet::{Jet2, Taylor};

/// Named parameter values, bound at evaluation time.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound parameter `{name}` at byte {offset}")]
    UnboundParameter { name: String, offset: usize },
    #[error("domain error at byte {offset}: {message}")]
    Domain { offset: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl UnaryOp {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Self::Exp,
            "log" => Self::Log,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "sinh" => Self::Sinh,
            "cosh" => Self::Cosh,
            "tanh" => Self::Tanh,
            "sqrt" => Self::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::Neg => "-",
            Self::Exp => "exp",
            Self::Log => "log",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Sinh => "sinh",
            Self::Cosh => "cosh",
            Self::Tanh => "tanh",
            Self::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            Self::Add => '+',
            Self::Sub => '-',
            Self::Mul => '*',
            Self::Div => '/',
            Self::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Const(f64),
    Var,
    Param(String),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

/// AST node. `offset` is the byte position in the source and takes no part
/// in equality.
#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub offset: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Node {
    pub fn new(kind: NodeKind, offset: usize) -> Self {
        Self { kind, offset }
    }

    pub fn constant(v: f64) -> Self {
        Self::new(NodeKind::Const(v), 0)
    }

    pub fn var() -> Self {
        Self::new(NodeKind::Var, 0)
    }

    pub fn param(name: &str) -> Self {
        Self::new(NodeKind::Param(name.to_string()), 0)
    }

    pub fn unary(op: UnaryOp, arg: Node) -> Self {
        Self::new(NodeKind::Unary(op, Box::new(arg)), 0)
    }

    pub fn binary(op: BinaryOp, lhs: Node, rhs: Node) -> Self {
        Self::new(NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)), 0)
    }
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self, ExprError> {
        parse(source)
    }

    pub fn from_node(root: Node) -> Self {
        Self { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Parameter names referenced by the expression, sorted.
    pub fn parameters(&self) -> Vec<String> {
        fn walk(n: &Node, out: &mut Vec<String>) {
            match &n.kind {
                NodeKind::Param(p) => out.push(p.clone()),
                NodeKind::Unary(_, a) => walk(a, out),
                NodeKind::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                NodeKind::Const(_) | NodeKind::Var => {}
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out.sort();
        out.dedup();
        out
    }

    pub fn eval(&self, t: f64, params: &Params) -> Result<f64, ExprError> {
        Ok(self.eval_taylor::<1>(t, params)?.value())
    }

    /// Value, first and second derivative with respect to `t`.
    pub fn eval_d2(&self, t: f64, params: &Params) -> Result<Jet2, ExprError> {
        Ok(self.eval_taylor::<3>(t, params)?.into())
    }

    /// Taylor coefficients of order `N - 1` about `t`.
    pub fn eval_taylor<const N: usize>(
        &self,
        t: f64,
        params: &Params,
    ) -> Result<Taylor<N>, ExprError> {
        eval_node(&self.root, Taylor::variable(t), params)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Const(v) => write!(f, "{v:?}"),
            NodeKind::Var => write!(f, "t"),
            NodeKind::Param(p) => write!(f, "{p}"),
            NodeKind::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            NodeKind::Unary(op, a) => write!(f, "{}({a})", op.name()),
            NodeKind::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || (ch == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let tok = match ch {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(ch as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                let c = src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{c}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' {
                BinaryOp::Add
            } else {
                BinaryOp::Sub
            };
            let at = self.offset();
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::new(NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)), at);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' {
                BinaryOp::Mul
            } else {
                BinaryOp::Div
            };
            let at = self.offset();
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::new(NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)), at);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if let Some(Tok::Op('-')) = self.peek() {
            let at = self.offset();
            self.pos += 1;
            let arg = self.unary()?;
            return Ok(Node::new(NodeKind::Unary(UnaryOp::Neg, Box::new(arg)), at));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            let at = self.offset();
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::new(
                NodeKind::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)),
                at,
            ));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let at = self.offset();
        let Some((tok, _)) = self.toks.get(self.pos).cloned() else {
            return self.syntax("unexpected end of input");
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::new(NodeKind::Const(v), at)),
            Tok::LParen => {
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.syntax("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek() == Some(&Tok::LParen) {
                    let Some(op) = UnaryOp::from_name(&name) else {
                        return Err(ExprError::UnknownFunction { name, offset: at });
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(&Tok::RParen) {
                        return self.syntax("expected `)` after function argument");
                    }
                    self.pos += 1;
                    return Ok(Node::new(NodeKind::Unary(op, Box::new(arg)), at));
                }
                if UnaryOp::from_name(&name).is_some() {
                    return Err(ExprError::Syntax {
                        offset: at,
                        message: format!("function `{name}` requires an argument"),
                    });
                }
                if name == "t" {
                    Ok(Node::new(NodeKind::Var, at))
                } else {
                    Ok(Node::new(NodeKind::Param(name), at))
                }
            }
            Tok::Op(c) => Err(ExprError::Syntax {
                offset: at,
                message: format!("unexpected operator `{c}`"),
            }),
            Tok::RParen => Err(ExprError::Syntax {
                offset: at,
                message: "unexpected `)`".into(),
            }),
        }
    }
}

pub fn parse(source: &str) -> Result<Expr, ExprError> {
    let toks = lex(source)?;
    if toks.is_empty() {
        return Err(ExprError::Empty);
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: source.len(),
    };
    let root = p.expr()?;
    if p.pos != p.toks.len() {
        return p.syntax("trailing input");
    }
    Ok(Expr { root })
}

// ---------------------------------------------------------------------------
// Evaluation

fn domain<T>(offset: usize, message: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError::Domain {
        offset,
        message: message.into(),
    })
}

fn eval_node<const N: usize>(
    node: &Node,
    t: Taylor<N>,
    params: &Params,
) -> Result<Taylor<N>, ExprError> {
    let at = node.offset;
    Ok(match &node.kind {
        NodeKind::Const(v) => Taylor::constant(*v),
        NodeKind::Var => t,
        NodeKind::Param(name) => match params.get(name) {
            Some(v) => Taylor::constant(*v),
            None => {
                return Err(ExprError::UnboundParameter {
                    name: name.clone(),
                    offset: at,
                })
            }
        },
        NodeKind::Unary(op, arg) => {
            let u = eval_node(arg, t, params)?;
            match op {
                UnaryOp::Neg => -u,
                UnaryOp::Exp => u.exp(),
                UnaryOp::Log => {
                    if u.value() <= 0.0 {
                        return domain(at, format!("log of non-positive value {}", u.value()));
                    }
                    u.ln()
                }
                UnaryOp::Sin => u.sin_cos().0,
                UnaryOp::Cos => u.sin_cos().1,
                UnaryOp::Sinh => u.sinh_cosh().0,
                UnaryOp::Cosh => u.sinh_cosh().1,
                UnaryOp::Tanh => u.tanh(),
                UnaryOp::Sqrt => {
                    if u.value() <= 0.0 {
                        return domain(at, format!("sqrt of non-positive value {}", u.value()));
                    }
                    u.sqrt()
                }
            }
        }
        NodeKind::Binary(op, a, b) => {
            let x = eval_node(a, t, params)?;
            let y = eval_node(b, t, params)?;
            match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                BinaryOp::Div => {
                    if y.value() == 0.0 {
                        return domain(at, "division by zero");
                    }
                    x / y
                }
                BinaryOp::Pow => pow(x, y, at)?,
            }
        }
    })
}

fn pow<const N: usize>(
    base: Taylor<N>,
    exponent: Taylor<N>,
    at: usize,
) -> Result<Taylor<N>, ExprError> {
    let b0 = base.value();
    if exponent.is_constant() {
        let p = exponent.value();
        let integral = p.fract() == 0.0 && p.abs() < 1e9;
        if b0 > 0.0 || (b0 < 0.0 && integral) {
            return Ok(base.powf(p));
        }
        if b0 == 0.0 && integral && p >= 0.0 {
            return Ok(base.powi(p as u32));
        }
        if b0 < 0.0 {
            return domain(
                at,
                format!("negative base {b0} with non-integer exponent {p}"),
            );
        }
        return domain(
            at,
            format!("zero base with exponent {p} is not differentiable"),
        );
    }
    if b0 <= 0.0 {
        return domain(
            at,
            format!("variable exponent requires a positive base, got {b0}"),
        );
    }
    Ok((exponent * base.ln()).exp())
}
