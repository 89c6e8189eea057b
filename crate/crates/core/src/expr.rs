//! Small real-valued expression language for coefficient functions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right-associative
//! atom    := number | name | name '(' sum ')' | '(' sum ')'
//! ```
//!
//! Names are `pi`, the functions `sin cos exp sqrt abs`, and whatever
//! variables the caller allows.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Variables allowed by [`parse_expression`].
pub const SPATIAL_VARIABLES: &[&str] = &["x", "y"];
/// Variables allowed in Fourier symbols.
pub const WAVENUMBER_VARIABLES: &[&str] = &["kx", "ky"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Expression tree. Variables are stored by their position in the list of
/// names the expression was parsed against.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var { index: usize, name: String },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Evaluates with `vars[i]` bound to the `i`-th allowed variable.
    /// Missing trailing values read as zero.
    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var { index, .. } => vars.get(*index).copied().unwrap_or(0.0),
            Expr::Neg(e) => -e.eval(vars),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(vars), b.eval(vars));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(f, e) => f.apply(e.eval(vars)),
        }
    }

    /// Whether variable `index` appears anywhere in the tree.
    pub fn uses(&self, index: usize) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => false,
            Expr::Var { index: i, .. } => *i == index,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses(index),
            Expr::Binary(_, a, b) => a.uses(index) || b.uses(index),
        }
    }

    /// Shared closure of one variable, for coefficient constructors.
    pub fn into_fn1(self) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
        let e = Arc::new(self);
        move |x| e.eval(&[x])
    }

    /// Shared closure of two variables.
    pub fn into_fn2(self) -> impl Fn(f64, f64) -> f64 + Send + Sync + 'static {
        let e = Arc::new(self);
        move |x, y| e.eval(&[x, y])
    }
}

/// Integer exponents go through `powi` so that `x^2` is exact.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Prints every compound node in parentheses, so the output re-parses to
/// the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

/// Parses with the spatial variables `x`, `y`.
pub fn parse_expression(text: &str) -> Result<Expr> {
    parse_with(text, SPATIAL_VARIABLES)
}

/// Parses with a caller-chosen variable list.
pub fn parse_with(text: &str, variables: &[&str]) -> Result<Expr> {
    let mut p = Parser {
        src: text,
        tokens: tokenize(text)?,
        pos: 0,
        variables,
    };
    let e = p.sum()?;
    match p.peek() {
        None => Ok(e),
        Some(t) => Err(syntax(t.offset, format!("unexpected {}", t.kind))),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Num(f64),
    Ident,
    Op(char),
    Open,
    Close,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Num(v) => write!(f, "number {v}"),
            Kind::Ident => f.write_str("identifier"),
            Kind::Op(c) => write!(f, "`{c}`"),
            Kind::Open => f.write_str("`(`"),
            Kind::Close => f.write_str("`)`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Kind,
    offset: usize,
    len: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                i += 1;
                Kind::Op(c as char)
            }
            b'(' => {
                i += 1;
                Kind::Open
            }
            b')' => {
                i += 1;
                Kind::Close
            }
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
                let lit = &text[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
                if !v.is_finite() {
                    return Err(syntax(start, format!("number `{lit}` overflows")));
                }
                Kind::Num(v)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Kind::Ident
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        out.push(Token {
            kind,
            offset: start,
            len: i - start,
        });
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    variables: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn end_offset(&self) -> usize {
        self.src.len()
    }

    fn peek_op(&self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token { kind: Kind::Op(c), .. }) if ops.contains(c) => Some(*c),
            _ => None,
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(c) = self.peek_op(&['+', '-']) {
            self.pos += 1;
            let rhs = self.product()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek_op(&['*', '/']) {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op(&['-']).is_some() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op(&['^']).is_some() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_close(&mut self, open: usize) -> Result<()> {
        match self.next() {
            Some(Token { kind: Kind::Close, .. }) => Ok(()),
            Some(t) => Err(syntax(t.offset, format!("expected `)` to close `(` at byte {open}, found {}", t.kind))),
            None => Err(syntax(self.end_offset(), format!("unclosed `(` at byte {open}"))),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(t) = self.next() else {
            return Err(syntax(self.end_offset(), "unexpected end of input"));
        };
        match t.kind {
            Kind::Num(v) => Ok(Expr::Num(v)),
            Kind::Open => {
                let e = self.sum()?;
                self.expect_close(t.offset)?;
                Ok(e)
            }
            Kind::Ident => {
                let name = &self.src[t.offset..t.offset + t.len];
                if let Some(func) = Func::from_name(name) {
                    match self.next() {
                        Some(Token {
                            kind: Kind::Open,
                            offset,
                            ..
                        }) => {
                            let arg = self.sum()?;
                            self.expect_close(offset)?;
                            Ok(Expr::Call(func, Box::new(arg)))
                        }
                        Some(n) => Err(syntax(n.offset, format!("expected `(` after `{name}`"))),
                        None => Err(syntax(self.end_offset(), format!("expected `(` after `{name}`"))),
                    }
                } else if name == "pi" {
                    Ok(Expr::Pi)
                } else if let Some(index) = self.variables.iter().position(|v| *v == name) {
                    Ok(Expr::Var {
                        index,
                        name: name.to_string(),
                    })
                } else {
                    Err(Error::UnknownIdentifier {
                        name: name.to_string(),
                        offset: t.offset,
                    })
                }
            }
            other => Err(syntax(t.offset, format!("unexpected {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(text: &str, vars: &[f64]) -> f64 {
        parse_expression(text).unwrap().eval(vars)
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(eval("2/(1+x^2)^2", &[0.0]), 2.0);
        assert!((eval("exp(-x^2)", &[1.0]) - (-1f64).exp()).abs() < 1e-16);
        assert!((eval("exp(sin(x+y))/(2+cos(y))", &[0.0, 0.0]) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("-2^2", &[]), -4.0);
        assert_eq!(eval("2^3^2", &[]), 512.0);
        assert_eq!(eval("2^-1", &[]), 0.5);
        assert_eq!(eval("1-2-3", &[]), -4.0);
        assert_eq!(eval("8/4/2", &[]), 1.0);
        assert_eq!(eval("1+2*3", &[]), 7.0);
        assert_eq!(eval("--3", &[]), 3.0);
        assert!((eval("2*pi", &[]) - std::f64::consts::TAU).abs() < 1e-15);
        assert_eq!(eval("1.5e2 + .5", &[]), 150.5);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let cases = [("1 +", 3), ("(x", 2), ("x $ 1", 2), ("sin x", 4), ("2 3", 2), ("()", 1), ("1e999", 0)];
        for (text, offset) in cases {
            match parse_expression(text) {
                Err(Error::Syntax { offset: o, .. }) => assert_eq!(o, offset, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_identifiers() {
        match parse_expression("1 + z") {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "z");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_expression("ky").is_err());
        assert_eq!(parse_with("sqrt(1+ky^2)", WAVENUMBER_VARIABLES).unwrap().eval(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn variable_usage() {
        let e = parse_expression("cos(x) + 1").unwrap();
        assert!(e.uses(0));
        assert!(!e.uses(1));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e3).prop_map(Expr::Num),
            Just(Expr::Pi),
            Just(Expr::Var { index: 0, name: "x".into() }),
            Just(Expr::Var { index: 1, name: "y".into() }),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            let op = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow)
            ];
            let func = prop_oneof![
                Just(Func::Sin),
                Just(Func::Cos),
                Just(Func::Exp),
                Just(Func::Sqrt),
                Just(Func::Abs)
            ];
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Binary(o, Box::new(a), Box::new(b))),
                (func, inner).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse_expression(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }

        #[test]
        fn evaluation_survives_printing(e in arb_expr(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let a = e.eval(&[x, y]);
            let b = parse_expression(&e.to_string()).unwrap().eval(&[x, y]);
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }
}
