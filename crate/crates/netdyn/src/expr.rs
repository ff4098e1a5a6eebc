//! Arithmetic expression language for node dynamics.
//!
//! Grammar, in precedence order from loosest to tightest:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ('^' factor)?
//! atom   := number | 'x[' int ']' | 'u[' int '][' int ']' | 'p["' name '"]'
//!         | func '(' expr ')' | '(' expr ')' | '-' atom
//! ```
//!
//! `+ - * /` are left-associative, `^` is right-associative, and unary minus
//! is part of `atom`, so it binds tighter than `^`: `-2^2` is `(-2)^2 = 4`.
//! Inputs are addressed by slot position `u[slot][coord]`, never by edge id;
//! the binding of slots to edges lives outside the expression, which is what
//! lets a pulled-back system reuse its body unchanged.

use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// `x[i]`: coordinate `i` of the node's own state.
    SelfVar(usize),
    /// `u[slot][coord]`: coordinate `coord` of input slot `slot`.
    InputVar { slot: usize, coord: usize },
    /// `p["name"]`: a named constant.
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    App(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Tanh => v.tanh(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        })
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        })
    }
}

/// Shape of the arguments an expression may refer to: the node's own state
/// dimension, one input dimension per slot, and the declared parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSignature {
    pub self_dim: usize,
    pub input_dims: Vec<usize>,
    pub parameters: BTreeMap<String, f64>,
}

impl SystemSignature {
    pub fn new(self_dim: usize, input_dims: Vec<usize>) -> Self {
        SystemSignature { self_dim, input_dims, parameters: BTreeMap::new() }
    }

    pub fn with_parameters(mut self, parameters: BTreeMap<String, f64>) -> Self {
        self.parameters = parameters;
        self
    }
}

/// A reference in an expression that does not fit a signature.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureViolation {
    #[error("x[{index}] out of range: state has dimension {dim}")]
    SelfIndex { index: usize, dim: usize },
    #[error("u[{slot}][{coord}] names slot {slot}, but there are only {slots} slots")]
    Slot { slot: usize, coord: usize, slots: usize },
    #[error("u[{slot}][{coord}] out of range: slot {slot} has dimension {dim}")]
    InputIndex { slot: usize, coord: usize, dim: usize },
    #[error("parameter \"{0}\" is not declared")]
    UndeclaredParameter(String),
}

impl Expr {
    /// Every reference in this expression that falls outside `sig`, in
    /// left-to-right order. Empty means the expression fits the signature.
    pub fn validate(&self, sig: &SystemSignature) -> Vec<SignatureViolation> {
        let mut out = Vec::new();
        self.validate_into(sig, &mut out);
        out
    }

    fn validate_into(&self, sig: &SystemSignature, out: &mut Vec<SignatureViolation>) {
        match self {
            Expr::Num(_) => {}
            Expr::SelfVar(i) => {
                if *i >= sig.self_dim {
                    out.push(SignatureViolation::SelfIndex { index: *i, dim: sig.self_dim });
                }
            }
            Expr::InputVar { slot, coord } => {
                if *slot >= sig.input_dims.len() {
                    out.push(SignatureViolation::Slot {
                        slot: *slot,
                        coord: *coord,
                        slots: sig.input_dims.len(),
                    });
                } else if *coord >= sig.input_dims[*slot] {
                    out.push(SignatureViolation::InputIndex {
                        slot: *slot,
                        coord: *coord,
                        dim: sig.input_dims[*slot],
                    });
                }
            }
            Expr::Param(name) => {
                if !sig.parameters.contains_key(name) {
                    out.push(SignatureViolation::UndeclaredParameter(name.clone()));
                }
            }
            Expr::Neg(e) | Expr::App(_, e) => e.validate_into(sig, out),
            Expr::Bin(_, l, r) => {
                l.validate_into(sig, out);
                r.validate_into(sig, out);
            }
        }
    }

    /// Evaluate at a state, one input vector per slot, and parameter values.
    /// Out-of-range indices and missing parameters are reported as errors;
    /// domain issues inside the arithmetic (log of a negative, division by
    /// zero) follow IEEE semantics and produce NaN or infinities.
    pub fn eval(
        &self,
        state: &[f64],
        inputs: &[&[f64]],
        params: &BTreeMap<String, f64>,
    ) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::SelfVar(i) => state
                .get(*i)
                .copied()
                .ok_or(EvalError::SelfIndex { index: *i, dim: state.len() }),
            Expr::InputVar { slot, coord } => {
                let input = inputs
                    .get(*slot)
                    .ok_or(EvalError::Slot { slot: *slot, slots: inputs.len() })?;
                input.get(*coord).copied().ok_or(EvalError::InputIndex {
                    slot: *slot,
                    coord: *coord,
                    dim: input.len(),
                })
            }
            Expr::Param(name) => params
                .get(name)
                .copied()
                .ok_or_else(|| EvalError::UnknownParameter(name.clone())),
            Expr::Neg(e) => Ok(-e.eval(state, inputs, params)?),
            Expr::Bin(op, l, r) => {
                let l = l.eval(state, inputs, params)?;
                let r = r.eval(state, inputs, params)?;
                Ok(match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => l.powf(r),
                })
            }
            Expr::App(f, e) => Ok(f.apply(e.eval(state, inputs, params)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("x[{index}] out of range: state has dimension {dim}")]
    SelfIndex { index: usize, dim: usize },
    #[error("u[{slot}] out of range: {slots} input slots were supplied")]
    Slot { slot: usize, slots: usize },
    #[error("u[{slot}][{coord}] out of range: slot {slot} has dimension {dim}")]
    InputIndex { slot: usize, coord: usize, dim: usize },
    #[error("unknown parameter: \"{0}\"")]
    UnknownParameter(String),
}

/// Syntax error with the byte offset where parsing stopped, the set of
/// token shapes that would have been accepted there, and what was found.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    fn new(offset: usize, expected: &[&str], found: impl Into<String>) -> Self {
        ParseError {
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Name(String),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Name(s) => format!("'{s}'"),
            TokenKind::Str(s) => format!("\"{s}\""),
            TokenKind::Plus => "'+'".into(),
            TokenKind::Minus => "'-'".into(),
            TokenKind::Star => "'*'".into(),
            TokenKind::Slash => "'/'".into(),
            TokenKind::Caret => "'^'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::LBracket => "'['".into(),
            TokenKind::RBracket => "']'".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let offset = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => tokens.push(Token { kind: TokenKind::Plus, offset }),
            b'-' => tokens.push(Token { kind: TokenKind::Minus, offset }),
            b'*' => tokens.push(Token { kind: TokenKind::Star, offset }),
            b'/' => tokens.push(Token { kind: TokenKind::Slash, offset }),
            b'^' => tokens.push(Token { kind: TokenKind::Caret, offset }),
            b'(' => tokens.push(Token { kind: TokenKind::LParen, offset }),
            b')' => tokens.push(Token { kind: TokenKind::RParen, offset }),
            b'[' => tokens.push(Token { kind: TokenKind::LBracket, offset }),
            b']' => tokens.push(Token { kind: TokenKind::RBracket, offset }),
            b'"' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != b'"' {
                    j += 1;
                }
                if j == bytes.len() {
                    return Err(ParseError::new(offset, &["closing '\"'"], "end of input"));
                }
                tokens.push(Token {
                    kind: TokenKind::Str(text[start..j].to_owned()),
                    offset,
                });
                i = j + 1;
                continue;
            }
            b'0'..=b'9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' && bytes.get(j + 1).is_some_and(u8::is_ascii_digit) {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let value: f64 = text[i..j]
                    .parse()
                    .map_err(|_| ParseError::new(offset, &["number"], &text[i..j]))?;
                tokens.push(Token { kind: TokenKind::Number(value), offset });
                i = j;
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Name(text[i..j].to_owned()),
                    offset,
                });
                i = j;
                continue;
            }
            _ => {
                return Err(ParseError::new(
                    offset,
                    &["a token"],
                    format!("'{}'", &text[i..i + c.leading_ones().max(1) as usize]),
                ))
            }
        }
        i += 1;
    }
    Ok(tokens)
}

/// Parse an expression. Reports the first syntax error with its byte offset
/// and the set of token shapes that were acceptable at that point.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, len: text.len() };
    let expr = parser.expr()?;
    match parser.peek() {
        None => Ok(expr),
        Some(t) => Err(ParseError::new(t.offset, &["end of input"], t.kind.describe())),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

const ATOM_EXPECTED: &[&str] =
    &["number", "'x'", "'u'", "'p'", "function name", "'('", "'-'"];

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, expected: &[&str]) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::new(t.offset, expected, t.kind.describe()),
            None => ParseError::new(self.len, expected, "end of input"),
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &[&str]) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_here(expected)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Caret)) {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let token = match self.bump() {
            Some(t) => t,
            None => return Err(ParseError::new(self.len, ATOM_EXPECTED, "end of input")),
        };
        match token.kind {
            TokenKind::Number(v) => Ok(Expr::Num(v)),
            TokenKind::Minus => Ok(Expr::Neg(Box::new(self.atom()?))),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, &["')'"])?;
                Ok(inner)
            }
            TokenKind::Name(name) => match name.as_str() {
                "x" => {
                    let index = self.index()?;
                    Ok(Expr::SelfVar(index))
                }
                "u" => {
                    let slot = self.index()?;
                    let coord = self.index()?;
                    Ok(Expr::InputVar { slot, coord })
                }
                "p" => {
                    self.expect(TokenKind::LBracket, &["'['"])?;
                    let name = match self.bump() {
                        Some(Token { kind: TokenKind::Str(s), .. }) => s,
                        Some(t) => {
                            return Err(ParseError::new(
                                t.offset,
                                &["quoted parameter name"],
                                t.kind.describe(),
                            ))
                        }
                        None => {
                            return Err(ParseError::new(
                                self.len,
                                &["quoted parameter name"],
                                "end of input",
                            ))
                        }
                    };
                    self.expect(TokenKind::RBracket, &["']'"])?;
                    Ok(Expr::Param(name))
                }
                _ => match Func::from_name(&name) {
                    Some(f) => {
                        self.expect(TokenKind::LParen, &["'('"])?;
                        let arg = self.expr()?;
                        self.expect(TokenKind::RParen, &["')'"])?;
                        Ok(Expr::App(f, Box::new(arg)))
                    }
                    None => Err(ParseError::new(
                        token.offset,
                        ATOM_EXPECTED,
                        format!("'{name}'"),
                    )),
                },
            },
            other => Err(ParseError::new(token.offset, ATOM_EXPECTED, other.describe())),
        }
    }

    fn index(&mut self) -> Result<usize, ParseError> {
        self.expect(TokenKind::LBracket, &["'['"])?;
        let value = match self.bump() {
            Some(Token { kind: TokenKind::Number(v), offset }) => {
                if v.fract() != 0.0 || v < 0.0 || v > usize::MAX as f64 {
                    return Err(ParseError::new(
                        offset,
                        &["non-negative integer index"],
                        format!("number {v}"),
                    ));
                }
                v as usize
            }
            Some(t) => {
                return Err(ParseError::new(
                    t.offset,
                    &["non-negative integer index"],
                    t.kind.describe(),
                ))
            }
            None => {
                return Err(ParseError::new(
                    self.len,
                    &["non-negative integer index"],
                    "end of input",
                ))
            }
        };
        self.expect(TokenKind::RBracket, &["']'"])?;
        Ok(value)
    }
}

/// Canonical fully parenthesized form. `parse(&print(e))` reproduces `e`
/// for every parser-producible AST. Literal leaves must be finite and
/// non-negative for this round trip; the parser never produces anything
/// else, since a leading minus parses as negation.
pub fn print(e: &Expr) -> String {
    match e {
        Expr::Num(v) => format!("{v}"),
        Expr::SelfVar(i) => format!("x[{i}]"),
        Expr::InputVar { slot, coord } => format!("u[{slot}][{coord}]"),
        Expr::Param(name) => format!("p[\"{name}\"]"),
        Expr::Neg(inner) => format!("(-{})", print(inner)),
        Expr::Bin(op, l, r) => format!("({} {op} {})", print(l), print(r)),
        Expr::App(f, arg) => format!("{f}({})", print(arg)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn ev(text: &str, state: &[f64], inputs: &[&[f64]]) -> f64 {
        parse(text).unwrap().eval(state, inputs, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn leading_minus_is_negation() {
        assert_eq!(parse("-x[0]").unwrap(), Expr::Neg(Box::new(Expr::SelfVar(0))));
    }

    #[test]
    fn precedence_shapes_the_tree() {
        // u[0][0] + 2*u[1][0] - x[0] groups as (u00 + 2*u10) - x0.
        let ast = parse("u[0][0] + 2*u[1][0] - x[0]").unwrap();
        let u = |slot| Box::new(Expr::InputVar { slot, coord: 0 });
        let expected = Expr::Bin(
            BinOp::Sub,
            Box::new(Expr::Bin(
                BinOp::Add,
                u(0),
                Box::new(Expr::Bin(BinOp::Mul, Box::new(Expr::Num(2.0)), u(1))),
            )),
            Box::new(Expr::SelfVar(0)),
        );
        assert_eq!(ast, expected);
    }

    #[test]
    fn power_binds_function_application_results() {
        let ast = parse("sin(x[0])^2").unwrap();
        let expected = Expr::Bin(
            BinOp::Pow,
            Box::new(Expr::App(Func::Sin, Box::new(Expr::SelfVar(0)))),
            Box::new(Expr::Num(2.0)),
        );
        assert_eq!(ast, expected);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(ev("2^3^2", &[], &[]), 512.0);
        assert_eq!(ev("(2^3)^2", &[], &[]), 64.0);
    }

    #[test]
    fn unary_minus_is_part_of_the_power_base() {
        assert_eq!(ev("-2^2", &[], &[]), 4.0);
        assert_eq!(ev("-(2^2)", &[], &[]), -4.0);
        assert_eq!(ev("2^-1", &[], &[]), 0.5);
    }

    #[test]
    fn eval_matches_hand_arithmetic() {
        assert_eq!(ev("-x[0]", &[1.0], &[]), -1.0);
        assert_eq!(ev("u[0][0]+2*u[1][0]-x[0]", &[2.0], &[&[1.0], &[1.0]]), 1.0);
        assert_eq!(ev("sin(x[0])", &[0.0], &[]), 0.0);
        assert_eq!(ev("1-2-3", &[], &[]), -4.0);
        assert_eq!(ev("12/4/3", &[], &[]), 1.0);
    }

    #[test]
    fn parameters_resolve_by_name() {
        let e = parse("p[\"k\"] * x[0]").unwrap();
        assert_eq!(e.eval(&[3.0], &[], &params(&[("k", -2.0)])).unwrap(), -6.0);
        assert_eq!(
            e.eval(&[3.0], &[], &BTreeMap::new()),
            Err(EvalError::UnknownParameter("k".into()))
        );
    }

    #[test]
    fn ieee_semantics_for_domain_issues() {
        assert!(ev("log(0-1)", &[], &[]).is_nan());
        assert!(ev("1/0", &[], &[]).is_infinite());
        assert!(ev("sqrt(0-4)", &[], &[]).is_nan());
    }

    #[test]
    fn scientific_literals_parse() {
        assert_eq!(ev("1.5e2", &[], &[]), 150.0);
        assert_eq!(ev("2E-3", &[], &[]), 0.002);
        assert_eq!(ev("1e3+1", &[], &[]), 1001.0);
    }

    #[test]
    fn validate_reports_out_of_range_references() {
        let sig = SystemSignature::new(1, vec![1, 1]);
        assert_eq!(
            parse("x[1]").unwrap().validate(&sig),
            vec![SignatureViolation::SelfIndex { index: 1, dim: 1 }]
        );
        assert!(parse("u[0][0]+2*u[1][0]-x[0]").unwrap().validate(&sig).is_empty());
        assert_eq!(
            parse("p[\"k\"]").unwrap().validate(&sig),
            vec![SignatureViolation::UndeclaredParameter("k".into())]
        );
        assert_eq!(
            parse("u[2][0]").unwrap().validate(&sig),
            vec![SignatureViolation::Slot { slot: 2, coord: 0, slots: 2 }]
        );
        assert_eq!(
            parse("u[1][3]").unwrap().validate(&sig),
            vec![SignatureViolation::InputIndex { slot: 1, coord: 3, dim: 1 }]
        );
    }

    #[test]
    fn errors_carry_offset_and_expectations() {
        let err = parse("1 + ").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.expected.contains(&"number".to_string()));
        assert_eq!(err.found, "end of input");

        let err = parse("1 ) 2").unwrap_err();
        assert_eq!(err.offset, 2);
        assert_eq!(err.expected, vec!["end of input".to_string()]);

        let err = parse("x[1.5]").unwrap_err();
        assert_eq!(err.offset, 2);
        assert_eq!(err.expected, vec!["non-negative integer index".to_string()]);

        let err = parse("foo(1)").unwrap_err();
        assert_eq!(err.offset, 0);
        assert_eq!(err.found, "'foo'");

        let err = parse("1 + $").unwrap_err();
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn printing_reparses_to_the_same_tree() {
        for text in [
            "1+2*3",
            "-x[0]",
            "sin(x[0])^2",
            "2^3^2",
            "-(x[0]+1)",
            "0 - x[0]",
            "p[\"omega\"]*u[0][1] - tanh(x[2])/3",
            "1.5e-3 ^ 2 ^ 0.5",
            "abs(-(u[0][0]))",
        ] {
            let ast = parse(text).unwrap();
            let printed = print(&ast);
            assert_eq!(parse(&printed).unwrap(), ast, "round trip failed for {text} -> {printed}");
        }
    }

    #[test]
    fn print_keeps_negation_and_subtraction_apart() {
        let neg = parse("-(x[0])").unwrap();
        let sub = parse("0 - x[0]").unwrap();
        assert_ne!(neg, sub);
        assert_eq!(print(&neg), "(-x[0])");
        assert_eq!(print(&sub), "(0 - x[0])");
    }

    #[test]
    fn whitespace_is_insignificant() {
        assert_eq!(parse(" 1 +\t2 * 3 ").unwrap(), parse("1+2*3").unwrap());
    }

    #[test]
    fn tanh_wins_over_tan_by_longest_match() {
        assert_eq!(
            parse("tanh(x[0])").unwrap(),
            Expr::App(Func::Tanh, Box::new(Expr::SelfVar(0)))
        );
    }

    #[test]
    fn repeated_eval_is_bit_identical() {
        let e = parse("sin(x[0])^2 + tanh(u[0][0]) / 3 - p[\"c\"]").unwrap();
        let p = params(&[("c", 0.25)]);
        let a = e.eval(&[0.7], &[&[0.3]], &p).unwrap();
        let b = e.eval(&[0.7], &[&[0.3]], &p).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
