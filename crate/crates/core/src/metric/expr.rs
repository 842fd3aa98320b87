//! Arithmetic expressions in `x` and `y`.
//!
//! Grammar, lowest precedence first (all binary operators left-associative):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' exponent)*
//! exponent:= ('-' | '+') exponent | primary
//! primary := number | 'x' | 'y' | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | sin | cos | sqrt | atan
//! ```

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Atan,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sqrt => v.sqrt(),
            Func::Atan => v.atan(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

impl Expr {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y), b.eval(x, y));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(x, y)),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::X | Expr::Y => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Symbolic partial derivative.
    pub fn diff(&self, v: Var) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            X => Num(if v == Var::X { 1.0 } else { 0.0 }),
            Y => Num(if v == Var::Y { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(v)),
            Bin(op, a, b) => {
                let (da, db) = (a.diff(v), b.diff(v));
                let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, b), mul(a, db)),
                    BinOp::Div => div(sub(mul(da, b.clone()), mul(a, db)), mul(b.clone(), b)),
                    BinOp::Pow => {
                        if b.is_constant() {
                            mul(mul(b.clone(), bin(BinOp::Pow, a, sub(b, Num(1.0)))), da)
                        } else {
                            let p = bin(BinOp::Pow, a.clone(), b.clone());
                            mul(p, add(mul(db, Call(Func::Log, Box::new(a.clone()))), div(mul(b, da), a)))
                        }
                    }
                }
            }
            Call(f, a) => {
                let da = a.diff(v);
                let a = a.as_ref().clone();
                let outer = match f {
                    Func::Exp => Call(Func::Exp, Box::new(a)),
                    Func::Log => div(Num(1.0), a),
                    Func::Sin => Call(Func::Cos, Box::new(a)),
                    Func::Cos => neg(Call(Func::Sin, Box::new(a))),
                    Func::Sqrt => div(Num(0.5), Call(Func::Sqrt, Box::new(a))),
                    Func::Atan => div(Num(1.0), add(Num(1.0), mul(a.clone(), a))),
                };
                mul(outer, da)
            }
        }
    }
}

/// Integer exponents use repeated multiplication so that `x^2` is exact for negative `x`.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(n) if *n == v)
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Bin(op, Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        bin(BinOp::Add, a, b)
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        neg(b)
    } else {
        bin(BinOp::Sub, a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        bin(BinOp::Mul, a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&b, 1.0) {
        a
    } else {
        bin(BinOp::Div, a, b)
    }
}

/// Fully parenthesized rendering that re-parses to an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::X => write!(f, "x"),
            Expr::Y => write!(f, "y"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = self.pos;
            while end < self.src.len() && (self.src[end].is_ascii_digit() || self.src[end] == b'.') {
                end += 1;
            }
            if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                let mut k = end + 1;
                if k < self.src.len() && (self.src[k] == b'+' || self.src[k] == b'-') {
                    k += 1;
                }
                if k < self.src.len() && self.src[k].is_ascii_digit() {
                    while k < self.src.len() && self.src[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = std::str::from_utf8(&self.src[start..end]).unwrap();
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Syntax { offset: start, message: format!("malformed number `{text}`") })?;
            self.pos = end;
            return Ok((Tok::Num(v), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = self.pos;
            while end < self.src.len() && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(String::from_utf8_lossy(&self.src[start..end]).into_owned()), start));
        }
        self.pos += 1;
        Ok((
            match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                _ => {
                    let ch = String::from_utf8_lossy(&self.src[start..]).chars().next().unwrap_or('?');
                    return Err(Error::Syntax { offset: start, message: format!("unexpected character `{ch}`") });
                }
            },
            start,
        ))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (t, at) = self.lex.next()?;
        self.tok = t;
        self.at = at;
        Ok(())
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.tok != t {
            return Err(Error::Syntax { offset: self.at, message: format!("expected {what}") });
        }
        self.bump()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            self.bump()?;
            let rhs = self.term()?;
            lhs = bin(if c == '+' { BinOp::Add } else { BinOp::Sub }, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            self.bump()?;
            let rhs = self.unary()?;
            lhs = bin(if c == '*' { BinOp::Mul } else { BinOp::Div }, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.tok {
            Tok::Op('-') => {
                self.bump()?;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let mut lhs = self.primary()?;
        while self.tok == Tok::Op('^') {
            self.bump()?;
            let rhs = self.exponent()?;
            lhs = bin(BinOp::Pow, lhs, rhs);
        }
        Ok(lhs)
    }

    fn exponent(&mut self) -> Result<Expr> {
        match self.tok {
            Tok::Op('-') => {
                self.bump()?;
                Ok(Expr::Neg(Box::new(self.exponent()?)))
            }
            Tok::Op('+') => {
                self.bump()?;
                self.exponent()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.at;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                self.bump()?;
                match name.as_str() {
                    "x" => return Ok(Expr::X),
                    "y" => return Ok(Expr::Y),
                    _ => {}
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(Error::UnknownIdentifier { name, offset: at });
                };
                if self.tok != Tok::LParen {
                    return Err(Error::Syntax { offset: self.at, message: format!("expected `(` after `{name}`") });
                }
                self.bump()?;
                if self.tok == Tok::RParen {
                    return Err(Error::Arity { name, expected: 1, found: 0 });
                }
                let arg = self.expr()?;
                let mut found = 1;
                while self.tok == Tok::Comma {
                    self.bump()?;
                    self.expr()?;
                    found += 1;
                }
                if found != 1 {
                    return Err(Error::Arity { name, expected: 1, found });
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::End => Err(Error::Syntax { offset: at, message: "unexpected end of input".into() }),
            other => Err(Error::Syntax { offset: at, message: format!("unexpected token {other:?}") }),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser { lex: Lexer { src: text.as_bytes(), pos: 0 }, tok: Tok::End, at: 0 };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(Error::Syntax { offset: p.at, message: "trailing input".into() });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        assert_eq!(parse("1 + 2 * 3").unwrap().eval(0.0, 0.0), 7.0);
        assert_eq!(parse("-2^2").unwrap().eval(0.0, 0.0), -4.0);
        assert_eq!(parse("2^3^2").unwrap().eval(0.0, 0.0), 64.0);
        assert_eq!(parse("8 / 4 / 2").unwrap().eval(0.0, 0.0), 1.0);
        assert_eq!(parse("2^-1").unwrap().eval(0.0, 0.0), 0.5);
        assert_eq!(parse("1.5e1 - x").unwrap().eval(5.0, 0.0), 10.0);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse("1 + z"), Err(Error::UnknownIdentifier { name: "z".into(), offset: 4 }));
        assert!(matches!(parse("1 + "), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse("(1"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse("1 $ 2"), Err(Error::Syntax { offset: 2, .. })));
        assert_eq!(parse("atan(x, y)"), Err(Error::Arity { name: "atan".into(), expected: 1, found: 2 }));
        assert_eq!(parse("sin()"), Err(Error::Arity { name: "sin".into(), expected: 1, found: 0 }));
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let e = parse("exp(sin(x*y)) / sqrt(1 + x^2) + atan(y)^x + log(2 + cos(x))").unwrap();
        let (x, y, h) = (0.4, 0.7, 1e-5);
        let dx = e.diff(Var::X).eval(x, y);
        let fd = (e.eval(x + h, y) - e.eval(x - h, y)) / (2.0 * h);
        assert!((dx - fd).abs() < 1e-8);
        let dy = e.diff(Var::Y).eval(x, y);
        let fd = (e.eval(x, y + h) - e.eval(x, y - h)) / (2.0 * h);
        assert!((dy - fd).abs() < 1e-8);
    }
}
