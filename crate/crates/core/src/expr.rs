//! Coordinate expressions: parsing, printing and jet evaluation.
//!
//! Grammar:
//!
//! ```text
//! expr   := vector | sum
//! vector := "(" sum ("," sum)+ ")"
//! sum    := prod (("+" | "-") prod)*
//! prod   := unary (("*" | "/") unary)*
//! unary  := ["-"] power
//! power  := atom ["^" atom]
//! atom   := number | ident | ident "(" sum ")" | "(" sum ")"
//! ```
//!
//! Identifiers are the variables (`u`, `v`, `w` for maps, `t` for curves),
//! declared parameter names, and the functions listed in [`Func`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::jet::{Jet, Space, Taylor};

/// Elementary functions accepted by the parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sech,
    Exp,
    Log,
    Sqrt,
    Atan,
    Abs,
}

impl Func {
    pub const ALL: [Func; 12] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Sech,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Atan,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Param { name: String, value: f64 },
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Which variable names an expression is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vars {
    /// `u`, `v`, `w`.
    Map,
    /// `t`.
    Curve,
}

impl Vars {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            Vars::Map => &["u", "v", "w"],
            Vars::Curve => &["t"],
        }
    }
}

/// A parsed expression: a scalar or a vector of 2 to 4 scalar components.
#[derive(Clone, Debug)]
pub struct Expr {
    vars: Vars,
    vector: bool,
    comps: Vec<Node>,
    tape: Arc<Tape>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.vars == other.vars && self.vector == other.vector && self.comps == other.comps
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: found {found}, expected one of {}", expected.join(", "))]
    Syntax {
        pos: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdent { pos: usize, name: String },
    #[error("arity mismatch at offset {pos}: {detail}")]
    Arity { pos: usize, detail: String },
    #[error("empty expression")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error in `{node}`: {reason} (argument {arg})")]
    Domain {
        node: String,
        reason: &'static str,
        arg: f64,
    },
    #[error("expression needs {needed} variables, {given} given")]
    MissingVariable { needed: usize, given: usize },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const EXPECT_OPERAND: &[&str] = &["number", "identifier", "'('", "'-'"];
const EXPECT_ATOM: &[&str] = &["number", "identifier", "'('"];

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'0'..=b'9' | b'.' => {
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
                let x: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    found: format!("malformed number `{text}`"),
                    expected: vec!["number"],
                })?;
                out.push((start, Tok::Num(x)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: start,
                    found: format!("character `{ch}`"),
                    expected: EXPECT_OPERAND.to_vec(),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    vars: Vars,
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            pos: self.pos(),
            found: self.peek().describe(),
            expected: expected.to_vec(),
        }
    }

    fn expect(&mut self, t: Tok, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.fail(&[name]))
        }
    }

    fn root(&mut self) -> Result<(bool, Vec<Node>), ParseError> {
        if *self.peek() == Tok::End {
            return Err(ParseError::Empty);
        }
        if *self.peek() == Tok::LParen {
            let mark = self.at;
            let open = self.pos();
            self.bump();
            let first = self.sum()?;
            if *self.peek() == Tok::Comma {
                let mut comps = vec![first];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    comps.push(self.sum()?);
                }
                self.expect(Tok::RParen, "')'")?;
                if *self.peek() != Tok::End {
                    return Err(self.fail(&["end of input"]));
                }
                if comps.len() > 4 {
                    return Err(ParseError::Arity {
                        pos: open,
                        detail: format!("vector has {} components, at most 4 allowed", comps.len()),
                    });
                }
                return Ok((true, comps));
            }
            self.at = mark;
        }
        let s = self.sum()?;
        if *self.peek() != Tok::End {
            let expected: &[&str] = &["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"];
            return Err(self.fail(expected));
        }
        Ok((false, vec![s]))
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.prod()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.prod()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn prod(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let p = self.power(EXPECT_ATOM)?;
            return Ok(Node::Neg(Box::new(p)));
        }
        self.power(EXPECT_OPERAND)
    }

    fn power(&mut self, expected: &[&'static str]) -> Result<Node, ParseError> {
        let base = self.atom(expected)?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        let exp = self.atom(EXPECT_ATOM)?;
        if exp.max_var().is_some() {
            return Err(ParseError::Arity {
                pos,
                detail: "exponent must be constant".into(),
            });
        }
        Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
    }

    fn atom(&mut self, expected: &[&'static str]) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Node::Num(x))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(f) = Func::from_name(&name) {
                    self.expect(Tok::LParen, "'('")?;
                    let arg = self.sum()?;
                    if *self.peek() == Tok::Comma {
                        return Err(ParseError::Arity {
                            pos: self.pos(),
                            detail: format!("{name} takes exactly one argument"),
                        });
                    }
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                let node = if let Some(i) = self.vars.names().iter().position(|n| *n == name) {
                    Node::Var(i)
                } else if let Some(&value) = self.params.get(&name) {
                    Node::Param { name: name.clone(), value }
                } else {
                    return Err(ParseError::UnknownIdent { pos, name });
                };
                if *self.peek() == Tok::LParen {
                    return Err(ParseError::Arity {
                        pos: self.pos(),
                        detail: format!("`{name}` is not a function"),
                    });
                }
                Ok(node)
            }
            _ => Err(self.fail(expected)),
        }
    }
}

/// Parses a map expression in `u`, `v`, `w`.
pub fn parse(source: &str, params: &BTreeMap<String, f64>) -> Result<Expr, ParseError> {
    parse_with(source, params, Vars::Map)
}

/// Parses a curve expression in `t`.
pub fn parse_curve(source: &str, params: &BTreeMap<String, f64>) -> Result<Expr, ParseError> {
    parse_with(source, params, Vars::Curve)
}

pub fn parse_with(
    source: &str,
    params: &BTreeMap<String, f64>,
    vars: Vars,
) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, at: 0, vars, params };
    let (vector, comps) = p.root()?;
    Ok(Expr::build(vars, vector, comps))
}

impl Node {
    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::Num(_) | Node::Param { .. } => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Call(_, a) => a.max_var(),
            Node::Bin(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    fn const_value(&self) -> Option<f64> {
        match self {
            Node::Num(x) => Some(*x),
            Node::Param { value, .. } => Some(*value),
            Node::Var(_) => None,
            Node::Neg(a) => a.const_value().map(|x| -x),
            Node::Call(f, a) => a.const_value().map(|x| apply_scalar(*f, x)),
            Node::Bin(op, a, b) => {
                let (x, y) = (a.const_value()?, b.const_value()?);
                Some(match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => x.powf(y),
                })
            }
        }
    }

    fn map_vars(&self, perm: &[usize]) -> Node {
        match self {
            Node::Var(i) => Node::Var(perm[*i]),
            Node::Num(_) | Node::Param { .. } => self.clone(),
            Node::Neg(a) => Node::Neg(Box::new(a.map_vars(perm))),
            Node::Call(f, a) => Node::Call(*f, Box::new(a.map_vars(perm))),
            Node::Bin(op, a, b) => Node::Bin(*op, Box::new(a.map_vars(perm)), Box::new(b.map_vars(perm))),
        }
    }

    fn collect_params(&self, out: &mut BTreeMap<String, f64>) {
        match self {
            Node::Param { name, value } => {
                out.insert(name.clone(), *value);
            }
            Node::Num(_) | Node::Var(_) => {}
            Node::Neg(a) | Node::Call(_, a) => a.collect_params(out),
            Node::Bin(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    fn is_atom(&self) -> bool {
        matches!(self, Node::Num(_) | Node::Param { .. } | Node::Var(_) | Node::Call(..))
    }

    fn write(&self, names: &[&str], out: &mut String) {
        match self {
            Node::Num(x) => {
                if *x < 0.0 || (*x == 0.0 && x.is_sign_negative()) {
                    out.push_str(&format!("(-{})", -x));
                } else {
                    out.push_str(&format!("{x}"));
                }
            }
            Node::Param { name, .. } => out.push_str(name),
            Node::Var(i) => out.push_str(names[*i]),
            Node::Neg(a) => {
                out.push('-');
                a.write_operand(names, out, true);
            }
            Node::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(names, out);
                out.push(')');
            }
            Node::Bin(BinOp::Pow, a, b) => {
                a.write_operand(names, out, true);
                out.push('^');
                b.write_operand(names, out, true);
            }
            Node::Bin(op, a, b) => {
                a.write_operand(names, out, false);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                b.write_operand(names, out, false);
            }
        }
    }

    fn write_operand(&self, names: &[&str], out: &mut String, atom_only: bool) {
        let bare = self.is_atom() && !matches!(self, Node::Num(x) if *x < 0.0)
            || (!atom_only && matches!(self, Node::Bin(BinOp::Pow, ..)));
        if bare {
            self.write(names, out);
        } else {
            out.push('(');
            self.write(names, out);
            out.push(')');
        }
    }
}

fn apply_scalar(f: Func, x: f64) -> f64 {
    match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Sinh => x.sinh(),
        Func::Cosh => x.cosh(),
        Func::Tanh => x.tanh(),
        Func::Sech => 1.0 / x.cosh(),
        Func::Exp => x.exp(),
        Func::Log => x.ln(),
        Func::Sqrt => x.sqrt(),
        Func::Atan => x.atan(),
        Func::Abs => x.abs(),
    }
}

/// Reason and argument of a domain failure inside one operation.
struct Fault(&'static str, f64);

fn apply_bin(sp: &'static Space, op: BinOp, x: &Taylor, y: &Taylor, exponent: Option<f64>) -> Result<Taylor, Fault> {
    Ok(match op {
        BinOp::Add => *x + *y,
        BinOp::Sub => *x - *y,
        BinOp::Mul => sp.mul(x, y),
        BinOp::Div => {
            if y.value() == 0.0 {
                return Err(Fault("division by zero", 0.0));
            }
            sp.div(x, y)
        }
        BinOp::Pow => {
            let p = exponent.expect("exponent is constant by construction");
            if p.fract() == 0.0 && p.abs() < 2f64.powi(31) {
                if p < 0.0 && x.value() == 0.0 {
                    return Err(Fault("negative power of zero", 0.0));
                }
                sp.powi(x, p as i64)
            } else {
                let x0 = x.value();
                if x0 <= 0.0 {
                    return Err(Fault("non-integer power of a non-positive base", x0));
                }
                let d = [
                    x0.powf(p),
                    p * x0.powf(p - 1.0),
                    p * (p - 1.0) * x0.powf(p - 2.0),
                    p * (p - 1.0) * (p - 2.0) * x0.powf(p - 3.0),
                ];
                sp.compose(x, d)
            }
        }
    })
}

fn apply_call(sp: &'static Space, f: Func, x: &Taylor, abs_kink: &mut bool) -> Result<Taylor, Fault> {
    let x0 = x.value();
    let d = match f {
        Func::Sin => {
            let (s, c) = x0.sin_cos();
            [s, c, -s, -c]
        }
        Func::Cos => {
            let (s, c) = x0.sin_cos();
            [c, -s, -c, s]
        }
        Func::Tan => {
            let t = x0.tan();
            if !t.is_finite() {
                return Err(Fault("tan at a pole", x0));
            }
            let s = 1.0 + t * t;
            [t, s, 2.0 * t * s, s * (2.0 + 6.0 * t * t)]
        }
        Func::Sinh => {
            let (s, c) = (x0.sinh(), x0.cosh());
            [s, c, s, c]
        }
        Func::Cosh => {
            let (s, c) = (x0.sinh(), x0.cosh());
            [c, s, c, s]
        }
        Func::Tanh => {
            let t = x0.tanh();
            let s = 1.0 - t * t;
            [t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0)]
        }
        Func::Sech => {
            let s = 1.0 / x0.cosh();
            let t = x0.tanh();
            [s, -s * t, s * (2.0 * t * t - 1.0), s * t * (5.0 - 6.0 * t * t)]
        }
        Func::Exp => {
            let e = x0.exp();
            [e; 4]
        }
        Func::Log => {
            if x0 <= 0.0 {
                return Err(Fault("log of a non-positive value", x0));
            }
            let r = 1.0 / x0;
            [x0.ln(), r, -r * r, 2.0 * r * r * r]
        }
        Func::Sqrt => {
            if x0 < 0.0 || (x0 == 0.0 && sp.order() > 0) {
                return Err(Fault("sqrt outside its smooth domain", x0));
            }
            return Ok(sp.sqrt(x));
        }
        Func::Atan => {
            let q = 1.0 / (1.0 + x0 * x0);
            [x0.atan(), q, -2.0 * x0 * q * q, (6.0 * x0 * x0 - 2.0) * q * q * q]
        }
        Func::Abs => {
            if x0 == 0.0 && sp.order() > 0 {
                *abs_kink = true;
            }
            let s = if x0 < 0.0 { -1.0 } else { 1.0 };
            return Ok(x.scale(s));
        }
    };
    Ok(sp.compose(x, d))
}

/// Tree-walking evaluator. Slow, but it names the failing subexpression.
struct EvalCtx<'a> {
    sp: &'static Space,
    inputs: &'a [Taylor],
    names: &'static [&'static str],
    abs_kink: bool,
}

impl EvalCtx<'_> {
    fn domain(&self, node: &Node, Fault(reason, arg): Fault) -> EvalError {
        let mut s = String::new();
        node.write(self.names, &mut s);
        EvalError::Domain { node: s, reason, arg }
    }

    fn eval(&mut self, node: &Node) -> Result<Taylor, EvalError> {
        let sp = self.sp;
        Ok(match node {
            Node::Num(x) => Taylor::constant(*x),
            Node::Param { value, .. } => Taylor::constant(*value),
            Node::Var(i) => self.inputs[*i],
            Node::Neg(a) => -self.eval(a)?,
            Node::Bin(op, a, b) => {
                let x = self.eval(a)?;
                let (y, p) = match op {
                    BinOp::Pow => (Taylor::zero(), b.const_value()),
                    _ => (self.eval(b)?, None),
                };
                apply_bin(sp, *op, &x, &y, p).map_err(|f| self.domain(node, f))?
            }
            Node::Call(f, a) => {
                let x = self.eval(a)?;
                let mut kink = self.abs_kink;
                let r = apply_call(sp, *f, &x, &mut kink).map_err(|e| self.domain(node, e))?;
                self.abs_kink = kink;
                r
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    Const(u64),
    Var(usize),
    Neg(u32),
    Bin(BinOp, u32, u32),
    Pow(u32, u64),
    Call(Func, u32),
}

/// Straight-line form of an expression with shared subexpressions merged.
#[derive(Clone, Debug, Default)]
struct Tape {
    ops: Vec<Op>,
    outputs: Vec<u32>,
    arity: usize,
}

impl Tape {
    fn compile(comps: &[Node]) -> Tape {
        let mut tape = Tape::default();
        let mut seen = std::collections::HashMap::new();
        for c in comps {
            let slot = tape.push(c, &mut seen);
            tape.outputs.push(slot);
        }
        tape.arity = comps.iter().filter_map(Node::max_var).max().map_or(0, |m| m + 1);
        tape
    }

    fn push(&mut self, node: &Node, seen: &mut std::collections::HashMap<Op, u32>) -> u32 {
        let op = match node {
            Node::Num(x) | Node::Param { value: x, .. } => Op::Const(x.to_bits()),
            Node::Var(i) => Op::Var(*i),
            Node::Neg(a) => Op::Neg(self.push(a, seen)),
            Node::Bin(BinOp::Pow, a, b) => {
                let p = b.const_value().expect("exponent is constant by construction");
                Op::Pow(self.push(a, seen), p.to_bits())
            }
            Node::Bin(op, a, b) => {
                let x = self.push(a, seen);
                Op::Bin(*op, x, self.push(b, seen))
            }
            Node::Call(f, a) => Op::Call(*f, self.push(a, seen)),
        };
        *seen.entry(op).or_insert_with(|| {
            self.ops.push(op);
            (self.ops.len() - 1) as u32
        })
    }

    /// `None` on any domain failure; the caller reruns the tree walk for
    /// the message.
    fn eval(&self, sp: &'static Space, inputs: &[Taylor]) -> Option<(Vec<Taylor>, bool)> {
        let mut vals: Vec<Taylor> = Vec::with_capacity(self.ops.len());
        let mut kink = false;
        for op in &self.ops {
            let t = match *op {
                Op::Const(b) => Taylor::constant(f64::from_bits(b)),
                Op::Var(i) => inputs[i],
                Op::Neg(a) => -vals[a as usize],
                Op::Bin(op, a, b) => apply_bin(sp, op, &vals[a as usize], &vals[b as usize], None).ok()?,
                Op::Pow(a, p) => {
                    apply_bin(sp, BinOp::Pow, &vals[a as usize], &Taylor::zero(), Some(f64::from_bits(p))).ok()?
                }
                Op::Call(f, a) => apply_call(sp, f, &vals[a as usize], &mut kink).ok()?,
            };
            vals.push(t);
        }
        let out: Vec<Taylor> = self.outputs.iter().map(|&i| vals[i as usize]).collect();
        out.iter().all(Taylor::is_finite).then_some((out, kink))
    }
}

impl Expr {
    fn build(vars: Vars, vector: bool, comps: Vec<Node>) -> Expr {
        let tape = Arc::new(Tape::compile(&comps));
        Expr { vars, vector, comps, tape }
    }

    pub fn vars(&self) -> Vars {
        self.vars
    }

    pub fn is_vector(&self) -> bool {
        self.vector
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Node] {
        &self.comps
    }

    /// Number of variables the expression refers to (one past the largest index).
    pub fn arity(&self) -> usize {
        self.comps.iter().filter_map(Node::max_var).max().map_or(0, |m| m + 1)
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for c in &self.comps {
            c.collect_params(&mut out);
        }
        out
    }

    /// Builds a vector expression from components.
    pub fn vector(vars: Vars, comps: Vec<Node>) -> Expr {
        Expr::build(vars, comps.len() > 1, comps)
    }

    /// Renames variables: variable `i` becomes `perm[i]`.
    pub fn map_vars(&self, perm: &[usize]) -> Expr {
        Expr::build(self.vars, self.vector, self.comps.iter().map(|c| c.map_vars(perm)).collect())
    }

    pub fn negated(&self) -> Expr {
        Expr::build(self.vars, self.vector, self.comps.iter().map(|c| Node::Neg(Box::new(c.clone()))).collect())
    }

    /// Evaluates every component on Taylor inputs.
    pub fn eval_taylor(&self, sp: &'static Space, inputs: &[Taylor]) -> Result<(Vec<Taylor>, bool), EvalError> {
        let needed = self.tape.arity;
        if inputs.len() < needed {
            return Err(EvalError::MissingVariable { needed, given: inputs.len() });
        }
        if let Some(out) = self.tape.eval(sp, inputs) {
            return Ok(out);
        }
        let mut ctx = EvalCtx { sp, inputs, names: self.vars.names(), abs_kink: false };
        let mut out = Vec::with_capacity(self.comps.len());
        for c in &self.comps {
            let t = ctx.eval(c)?;
            if !t.is_finite() {
                return Err(ctx.domain(c, Fault("non-finite result", t.value())));
            }
            out.push(t);
        }
        Ok((out, ctx.abs_kink))
    }

    /// Plain values at a point.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        Ok(self.eval_jet(point, 0)?.value())
    }

    /// Exact partial derivatives up to `order` at `point`.
    pub fn eval_jet(&self, point: &[f64], order: u8) -> Result<Jet, EvalError> {
        let sp = Space::get(point.len().max(1), order);
        let inputs: Vec<Taylor> = point.iter().enumerate().map(|(i, &x)| sp.variable(i, x)).collect();
        let (comps, kink) = self.eval_taylor(sp, &inputs)?;
        Ok(Jet::new(sp, comps).with_abs_kink(kink))
    }
}

/// Exact jet of `e` at `point` (free-function form).
pub fn eval_jet(e: &Expr, point: &[f64], order: u8) -> Result<Jet, EvalError> {
    e.eval_jet(point, order)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.vars.names();
        let mut s = String::new();
        if self.vector {
            s.push('(');
            for (i, c) in self.comps.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                c.write(names, &mut s);
            }
            s.push(')');
        } else {
            self.comps[0].write(names, &mut s);
        }
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn cuspidal_parabola_jet_at_origin() {
        let e = parse("(a*u^2+v^2, b*v^2+v^3, u)", &params(&[("a", 1.0), ("b", 1.0)])).unwrap();
        assert_eq!(e.dim(), 3);
        let j = e.eval_jet(&[0.0, 0.0], 2).unwrap();
        assert_eq!(j.value(), vec![0.0, 0.0, 0.0]);
        assert_eq!(j.partial(&[0]), vec![0.0, 0.0, 1.0]);
        assert_eq!(j.partial(&[1]), vec![0.0, 0.0, 0.0]);
        assert_eq!(j.partial(&[1, 1]), vec![2.0, 2.0, 0.0]);
    }

    #[test]
    fn plane_map() {
        let e = parse("(u, v, 0)", &BTreeMap::new()).unwrap();
        let j = e.eval_jet(&[3.0, 4.0], 1).unwrap();
        assert_eq!(j.value(), vec![3.0, 4.0, 0.0]);
        assert_eq!(j.partial(&[0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(j.partial(&[1]), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn sine_second_order() {
        let e = parse("(sin(u),0,0)", &BTreeMap::new()).unwrap();
        let j = e.eval_jet(&[0.0, 0.0], 2).unwrap();
        assert_eq!(j.partial(&[0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(j.partial(&[0, 0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn double_comma_is_a_syntax_error_at_offset_three() {
        match parse("(u,, v)", &BTreeMap::new()) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_kinds() {
        let p = BTreeMap::new();
        assert!(matches!(parse("(u, q)", &p), Err(ParseError::UnknownIdent { pos: 4, .. })));
        assert!(matches!(parse("sin(u, v)", &p), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("u^v", &p), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("(1,2,3,4,5)", &p), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("", &p), Err(ParseError::Empty)));
        assert!(matches!(parse("u^2^3", &p), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("sin((u, v))", &p), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("u $ v", &p), Err(ParseError::Syntax { pos: 2, .. })));
    }

    #[test]
    fn precedence() {
        let e = parse("-u^2 + 2*v/4 - 1", &BTreeMap::new()).unwrap();
        let x = e.eval(&[3.0, 2.0]).unwrap()[0];
        assert_eq!(x, -9.0 + 1.0 - 1.0);
        let e = parse("(u + 1)*(v - 1)", &BTreeMap::new()).unwrap();
        assert_eq!(e.eval(&[1.0, 3.0]).unwrap()[0], 4.0);
    }

    #[test]
    fn round_trip_is_structural() {
        let p = params(&[("a", 1.5), ("b", -2.0)]);
        for src in [
            "(a*u^2+v^2, b*v^2+v^3, u)",
            "-(u - (v - 1)) / 2^(-3)",
            "(sech(u)*cos(v), sech(u)*sin(v), u - tanh(u))",
            "(1e-7*u, 2.5e30 - v, -(-u))",
            "(u^(1/3), sqrt(u*u + v*v), abs(u))",
        ] {
            let e = parse(src, &p).unwrap();
            let printed = e.to_string();
            let again = parse(&printed, &p).unwrap();
            assert_eq!(e, again, "{src} -> {printed}");
            assert_eq!(printed, again.to_string());
        }
    }

    #[test]
    fn domain_errors_name_the_node() {
        let e = parse("(log(u), 0, 0)", &BTreeMap::new()).unwrap();
        match e.eval_jet(&[-1.0, 0.0], 1) {
            Err(EvalError::Domain { node, .. }) => assert_eq!(node, "log(u)"),
            other => panic!("unexpected {other:?}"),
        }
        let e = parse("u^0.5", &BTreeMap::new()).unwrap();
        assert!(e.eval_jet(&[-1.0], 1).is_err());
        assert!(e.eval_jet(&[4.0], 1).is_ok());
    }

    #[test]
    fn abs_at_zero_sets_flag() {
        let e = parse("abs(u)", &BTreeMap::new()).unwrap();
        let j = e.eval_jet(&[0.0, 0.0], 1).unwrap();
        assert!(j.abs_kink());
        assert_eq!(j.partial(&[0]), vec![1.0]);
        assert!(!e.eval_jet(&[0.5, 0.0], 1).unwrap().abs_kink());
    }

    #[test]
    fn real_power_matches_powf() {
        let e = parse("u^2.5", &BTreeMap::new()).unwrap();
        let j = e.eval_jet(&[1.7], 3).unwrap();
        let x: f64 = 1.7;
        assert!((j.partial(&[0, 0, 0])[0] - 2.5 * 1.5 * 0.5 * x.powf(-0.5)).abs() < 1e-12);
    }
}
