// SPDX-License-Identifier: Apache-2.0

//! Condition and expression language.
//!
//! The same grammar is used for enable conditions stored in symbol tables,
//! user breakpoint conditions and interactive `evaluate` requests. Values
//! are unsigned bit-vectors of at most 64 bits that may be unknown (x/z in
//! a trace). Evaluation is strict: every operand is evaluated and any
//! unknown leaf makes the whole result unknown.

use std::fmt;

use thiserror::Error;

pub const MAX_WIDTH: u32 = 64;

/// Mask covering the low `width` bits.
pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Minimal number of bits needed to hold `v` (at least one).
pub fn min_width(v: u64) -> u32 {
    (64 - v.leading_zeros()).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Value {
    width: u32,
    bits: u64,
    known: bool,
}

impl Value {
    /// Known value, truncated to `width` bits.
    pub fn new(width: u32, bits: u64) -> Self {
        let width = width.clamp(1, MAX_WIDTH);
        Value {
            width,
            bits: bits & mask(width),
            known: true,
        }
    }

    pub fn unknown(width: u32) -> Self {
        Value {
            width: width.clamp(1, MAX_WIDTH),
            bits: 0,
            known: false,
        }
    }

    /// A literal: width is the minimal width of the magnitude.
    pub fn literal(v: u64) -> Self {
        Value::new(min_width(v), v)
    }

    pub fn bool(b: bool) -> Self {
        Value::new(1, b as u64)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn is_known(&self) -> bool {
        self.known
    }

    /// The magnitude, or `None` when unknown.
    pub fn bits(&self) -> Option<u64> {
        self.known.then_some(self.bits)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.known {
            write!(f, "{}", self.bits)
        } else {
            f.write_str("x")
        }
    }
}

/// True iff the value is known and nonzero. Unknown never triggers a
/// breakpoint.
pub fn truthy(v: &Value) -> bool {
    v.known && v.bits != 0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    /// `~`
    Not,
    /// `!`
    LogicalNot,
    /// `-`
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogicalAnd,
    LogicalOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Mod => "%",
            And => "&",
            Or => "|",
            Xor => "^",
            Shl => "<<",
            Shr => ">>",
            Eq => "==",
            Ne => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            LogicalAnd => "&&",
            LogicalOr => "||",
        }
    }

    /// Binding power; higher binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            LogicalOr => 1,
            LogicalAnd => 2,
            Or => 3,
            Xor => 4,
            And => 5,
            Eq | Ne => 6,
            Lt | Le | Gt | Ge => 7,
            Shl | Shr => 8,
            Add | Sub => 9,
            Mul | Div | Mod => 10,
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        use BinaryOp::*;
        Some(match s {
            "+" => Add,
            "-" => Sub,
            "*" => Mul,
            "/" => Div,
            "%" => Mod,
            "&" => And,
            "|" => Or,
            "^" => Xor,
            "<<" => Shl,
            ">>" => Shr,
            "==" => Eq,
            "!=" => Ne,
            "<" => Lt,
            "<=" => Le,
            ">" => Gt,
            ">=" => Ge,
            "&&" => LogicalAnd,
            "||" => LogicalOr,
            _ => return None,
        })
    }

    /// Result width for operands of the given widths.
    pub fn result_width(self, lhs: u32, rhs: u32) -> u32 {
        use BinaryOp::*;
        match self {
            Eq | Ne | Lt | Le | Gt | Ge | LogicalAnd | LogicalOr => 1,
            Shl | Shr => lhs,
            _ => lhs.max(rhs),
        }
    }
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "~",
            UnaryOp::LogicalNot => "!",
            UnaryOp::Neg => "-",
        }
    }
}

/// Two-state evaluation of a binary operator on magnitudes already masked to
/// their widths. Division and modulo by zero are reported as `None`.
pub fn apply_binary(op: BinaryOp, a: u64, wa: u32, b: u64, wb: u32) -> Option<u64> {
    use BinaryOp::*;
    let w = op.result_width(wa, wb);
    let m = mask(w);
    Some(match op {
        Add => a.wrapping_add(b) & m,
        Sub => a.wrapping_sub(b) & m,
        Mul => a.wrapping_mul(b) & m,
        Div => a.checked_div(b)? & m,
        Mod => a.checked_rem(b)? & m,
        And => a & b,
        Or => a | b,
        Xor => a ^ b,
        Shl => {
            if b >= wa as u64 {
                0
            } else {
                (a << b) & m
            }
        }
        Shr => {
            if b >= wa as u64 {
                0
            } else {
                a >> b
            }
        }
        Eq => (a == b) as u64,
        Ne => (a != b) as u64,
        Lt => (a < b) as u64,
        Le => (a <= b) as u64,
        Gt => (a > b) as u64,
        Ge => (a >= b) as u64,
        LogicalAnd => (a != 0 && b != 0) as u64,
        LogicalOr => (a != 0 || b != 0) as u64,
    })
}

pub fn apply_unary(op: UnaryOp, a: u64, w: u32) -> (u64, u32) {
    match op {
        UnaryOp::Not => (!a & mask(w), w),
        UnaryOp::Neg => (a.wrapping_neg() & mask(w), w),
        UnaryOp::LogicalNot => ((a == 0) as u64, 1),
    }
}

/// Parsed expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprAst {
    Literal(u64),
    /// Hierarchical identifier with an optional constant index, `a.b.c[2]`.
    Ident { path: String, index: Option<u64> },
    Unary(UnaryOp, Box<ExprAst>),
    Binary(BinaryOp, Box<ExprAst>, Box<ExprAst>),
    Ternary(Box<ExprAst>, Box<ExprAst>, Box<ExprAst>),
}

impl ExprAst {
    pub fn ident(path: impl Into<String>) -> Self {
        ExprAst::Ident {
            path: path.into(),
            index: None,
        }
    }

    pub fn binary(op: BinaryOp, lhs: ExprAst, rhs: ExprAst) -> Self {
        ExprAst::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Every identifier in evaluation order, as looked up by [`eval`].
    pub fn identifiers(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit_idents(&mut |name| out.push(name));
        out
    }

    fn visit_idents(&self, f: &mut dyn FnMut(String)) {
        match self {
            ExprAst::Literal(_) => {}
            ExprAst::Ident { .. } => f(self.ident_name().unwrap()),
            ExprAst::Unary(_, a) => a.visit_idents(f),
            ExprAst::Binary(_, a, b) => {
                a.visit_idents(f);
                b.visit_idents(f);
            }
            ExprAst::Ternary(c, a, b) => {
                c.visit_idents(f);
                a.visit_idents(f);
                b.visit_idents(f);
            }
        }
    }

    /// Lookup key of an identifier node: `path` or `path[index]`.
    pub fn ident_name(&self) -> Option<String> {
        match self {
            ExprAst::Ident { path, index: None } => Some(path.clone()),
            ExprAst::Ident {
                path,
                index: Some(i),
            } => Some(format!("{path}[{i}]")),
            _ => None,
        }
    }
}

impl fmt::Display for ExprAst {
    /// Fully parenthesized; reparses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Literal(v) => write!(f, "{v}"),
            ExprAst::Ident { path, index } => match index {
                Some(i) => write!(f, "{path}[{i}]"),
                None => f.write_str(path),
            },
            ExprAst::Unary(op, a) => write!(f, "{}{}", op.symbol(), Paren(a)),
            ExprAst::Binary(op, a, b) => write!(f, "({} {} {})", a, op.symbol(), b),
            ExprAst::Ternary(c, a, b) => write!(f, "({c} ? {a} : {b})"),
        }
    }
}

struct Paren<'a>(&'a ExprAst);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            ExprAst::Literal(_) | ExprAst::Ident { .. } | ExprAst::Binary(..) | ExprAst::Ternary(..) => {
                write!(f, "{}", self.0)
            }
            ExprAst::Unary(..) => write!(f, "({})", self.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column in the expression text.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unresolved identifier `{0}`")]
    Unresolved(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(u64),
    Ident(String),
    Op(&'static str),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Question,
    Colon,
    Dot,
}

const OPERATORS: &[&str] = &[
    "<<", ">>", "==", "!=", "<=", ">=", "&&", "||", "+", "-", "*", "/", "%", "&", "|", "^", "<",
    ">", "~", "!",
];

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().filter(|c| **c != '_').collect();
            let v = parse_number(&s).ok_or_else(|| ParseError {
                column: col,
                message: format!("invalid number `{s}`"),
            })?;
            out.push((Tok::Num(v), col));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        let single = match c {
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '?' => Some(Tok::Question),
            ':' => Some(Tok::Colon),
            '.' => Some(Tok::Dot),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, col));
            i += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            Some(op) => {
                out.push((Tok::Op(op), col));
                i += op.len();
            }
            None => {
                return Err(ParseError {
                    column: col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

/// Decimal or `0x` hexadecimal literal.
pub fn parse_number(s: &str) -> Option<u64> {
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        if hex.is_empty() {
            return None;
        }
        u64::from_str_radix(hex, 16).ok()
    } else if s.chars().all(|c| c.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end_col)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            column: self.col(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ternary(&mut self) -> Result<ExprAst, ParseError> {
        let cond = self.binary(1)?;
        if self.peek() == Some(&Tok::Question) {
            self.pos += 1;
            let a = self.ternary()?;
            self.expect(Tok::Colon, "`:`")?;
            let b = self.ternary()?;
            return Ok(ExprAst::Ternary(Box::new(cond), Box::new(a), Box::new(b)));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> Result<ExprAst, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(s)) => match BinaryOp::from_symbol(s) {
                    Some(op) if op.precedence() >= min_prec => op,
                    _ => break,
                },
                _ => break,
            };
            self.pos += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = ExprAst::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ExprAst, ParseError> {
        let op = match self.peek() {
            Some(Tok::Op("~")) => Some(UnaryOp::Not),
            Some(Tok::Op("!")) => Some(UnaryOp::LogicalNot),
            Some(Tok::Op("-")) => Some(UnaryOp::Neg),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let a = self.unary()?;
            return Ok(ExprAst::Unary(op, Box::new(a)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<ExprAst, ParseError> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(ExprAst::Literal(v)),
            Some(Tok::LParen) => {
                let e = self.ternary()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(first)) => {
                let mut path = first;
                while self.peek() == Some(&Tok::Dot) {
                    self.pos += 1;
                    match self.bump() {
                        Some(Tok::Ident(seg)) => {
                            path.push('.');
                            path.push_str(&seg);
                        }
                        _ => {
                            self.pos -= 1;
                            return self.err("expected identifier after `.`");
                        }
                    }
                }
                let mut index = None;
                if self.peek() == Some(&Tok::LBracket) {
                    self.pos += 1;
                    match self.bump() {
                        Some(Tok::Num(v)) => index = Some(v),
                        _ => {
                            self.pos -= 1;
                            return self.err("index must be a constant");
                        }
                    }
                    self.expect(Tok::RBracket, "`]`")?;
                }
                Ok(ExprAst::Ident { path, index })
            }
            Some(_) => {
                self.pos -= 1;
                self.err("expected expression")
            }
            None => self.err("unexpected end of expression"),
        }
    }
}

/// Parse an expression with C-like precedence.
pub fn parse_expr(text: &str) -> Result<ExprAst, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end_col: text.chars().count() + 1,
    };
    let e = p.ternary()?;
    if p.pos < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

/// Strict evaluation. `lookup` receives identifier keys as produced by
/// [`ExprAst::ident_name`].
pub fn eval<F>(ast: &ExprAst, lookup: &mut F) -> Result<Value, EvalError>
where
    F: FnMut(&str) -> Option<Value>,
{
    Ok(match ast {
        ExprAst::Literal(v) => Value::literal(*v),
        ExprAst::Ident { .. } => {
            let name = ast.ident_name().unwrap();
            match lookup(&name) {
                Some(v) => v,
                None => return Err(EvalError::Unresolved(name)),
            }
        }
        ExprAst::Unary(op, a) => {
            let a = eval(a, lookup)?;
            let out_w = if *op == UnaryOp::LogicalNot { 1 } else { a.width };
            match a.bits() {
                Some(bits) => {
                    let (v, w) = apply_unary(*op, bits, a.width);
                    Value::new(w, v)
                }
                None => Value::unknown(out_w),
            }
        }
        ExprAst::Binary(op, a, b) => {
            let a = eval(a, lookup)?;
            let b = eval(b, lookup)?;
            let w = op.result_width(a.width, b.width);
            match (a.bits(), b.bits()) {
                (Some(x), Some(y)) => match apply_binary(*op, x, a.width, y, b.width) {
                    Some(v) => Value::new(w, v),
                    None => Value::unknown(w),
                },
                _ => Value::unknown(w),
            }
        }
        ExprAst::Ternary(c, a, b) => {
            let c = eval(c, lookup)?;
            let a = eval(a, lookup)?;
            let b = eval(b, lookup)?;
            let w = a.width.max(b.width);
            match (c.bits(), a.bits(), b.bits()) {
                (Some(c), Some(x), Some(y)) => Value::new(w, if c != 0 { x } else { y }),
                _ => Value::unknown(w),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn run(text: &str, env: &[(&str, Value)]) -> Value {
        let env: HashMap<String, Value> =
            env.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        eval(&parse_expr(text).unwrap(), &mut |n| env.get(n).copied()).unwrap()
    }

    #[test]
    fn parses_enable_condition() {
        let ast = parse_expr("data[0] % 2").unwrap();
        assert_eq!(
            ast,
            ExprAst::binary(
                BinaryOp::Mod,
                ExprAst::Ident {
                    path: "data".into(),
                    index: Some(0)
                },
                ExprAst::Literal(2)
            )
        );
    }

    #[test]
    fn literal_and_precedence() {
        assert_eq!(parse_expr("1").unwrap(), ExprAst::Literal(1));
        let ast = parse_expr("a == 1 && b").unwrap();
        match ast {
            ExprAst::Binary(BinaryOp::LogicalAnd, lhs, _) => {
                assert!(matches!(*lhs, ExprAst::Binary(BinaryOp::Eq, _, _)))
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_expr("1 + 2 * 3").unwrap().to_string(), "(1 + (2 * 3))");
        assert_eq!(parse_expr("a ? b : c ? d : e").unwrap().to_string(), "(a ? b : (c ? d : e))");
        assert_eq!(parse_expr("0x1F").unwrap(), ExprAst::Literal(31));
        assert_eq!(
            parse_expr("top.u.io_a").unwrap(),
            ExprAst::ident("top.u.io_a")
        );
    }

    #[test]
    fn syntax_errors_carry_columns() {
        let e = parse_expr("sum >").unwrap_err();
        assert_eq!(e.column, 6);
        assert!(parse_expr("a[b]").is_err());
        assert!(parse_expr("(a").is_err());
        assert!(parse_expr("a b").is_err());
        assert!(parse_expr("").is_err());
        assert!(parse_expr("a @ b").is_err());
    }

    #[test]
    fn evaluates_modulo() {
        let v = run("data[0] % 2", &[("data[0]", Value::new(8, 3))]);
        assert_eq!(v.bits(), Some(1));
        assert_eq!(v.width(), 8);
    }

    #[test]
    fn reflexive_equality() {
        let v = run("x == x", &[("x", Value::new(4, 9))]);
        assert_eq!(v, Value::new(1, 1));
    }

    #[test]
    fn division_by_zero_is_unknown() {
        let v = run("a % 0", &[("a", Value::new(8, 7))]);
        assert!(!v.is_known());
        assert!(!run("a / 0", &[("a", Value::new(8, 7))]).is_known());
    }

    #[test]
    fn strict_unknown_propagation() {
        let x = Value::unknown(1);
        // no short circuit: 0 && x is still unknown
        assert!(!run("0 && x", &[("x", x)]).is_known());
        assert!(!run("1 || x", &[("x", x)]).is_known());
        assert!(!run("1 ? 2 : x", &[("x", x)]).is_known());
    }

    #[test]
    fn truthiness() {
        assert!(truthy(&Value::new(1, 1)));
        assert!(!truthy(&Value::new(1, 0)));
        assert!(!truthy(&Value::unknown(1)));
    }

    #[test]
    fn widths_and_wrapping() {
        let a = Value::new(8, 250);
        assert_eq!(run("a + 10", &[("a", a)]).bits(), Some(4));
        assert_eq!(run("0 - 1", &[]).bits(), Some(1));
        assert_eq!(run("-a", &[("a", a)]).bits(), Some(6));
        assert_eq!(run("~a", &[("a", a)]).bits(), Some(5));
        assert_eq!(run("a << 9", &[("a", a)]).bits(), Some(0));
        assert_eq!(run("a >> 1", &[("a", a)]).bits(), Some(125));
        assert_eq!(run("!a", &[("a", a)]), Value::new(1, 0));
    }

    #[test]
    fn unresolved_identifier() {
        let ast = parse_expr("nope + 1").unwrap();
        let err = eval(&ast, &mut |_| None).unwrap_err();
        assert_eq!(err, EvalError::Unresolved("nope".into()));
    }

    #[test]
    fn display_reparses() {
        for text in ["~(a + b) * -c", "!a[3] || b.c", "(x ? 1 : 2) >> 1", "- -a"] {
            let ast = parse_expr(text).unwrap();
            assert_eq!(parse_expr(&ast.to_string()).unwrap(), ast, "{text}");
        }
    }
}
