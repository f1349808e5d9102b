//! Scalar expressions in `x` and `u`.

use std::fmt;
use std::str::FromStr;

use super::jet::Jet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
}

impl Function {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Function::Exp,
            "ln" | "log" => Function::Ln,
            "sqrt" => Function::Sqrt,
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "sinh" => Function::Sinh,
            "cosh" => Function::Cosh,
            "tanh" => Function::Tanh,
            _ => return None,
        })
    }

    fn apply(self, a: Jet) -> Jet {
        match self {
            Function::Exp => a.exp(),
            Function::Ln => a.ln(),
            Function::Sqrt => a.sqrt(),
            Function::Sin => a.sin(),
            Function::Cos => a.cos(),
            Function::Sinh => a.sinh(),
            Function::Cosh => a.cosh(),
            Function::Tanh => a.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    X,
    U,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Function, Box<Expr>),
}

impl Expr {
    /// Evaluates the jet of the expression at `(x, u)`.
    pub fn jet(&self, x: f64, u: f64) -> Jet {
        match self {
            Expr::Number(v) => Jet::constant(*v),
            Expr::X => Jet::x(x),
            Expr::U => Jet::u(u),
            Expr::Neg(a) => -a.jet(x, u),
            Expr::Add(a, b) => a.jet(x, u) + b.jet(x, u),
            Expr::Sub(a, b) => a.jet(x, u) - b.jet(x, u),
            Expr::Mul(a, b) => a.jet(x, u) * b.jet(x, u),
            Expr::Div(a, b) => a.jet(x, u) / b.jet(x, u),
            Expr::Pow(a, b) if b.is_constant() => {
                let p = b.eval(x, u);
                if p.fract() == 0.0 && p.abs() <= 64.0 {
                    a.jet(x, u).powi(p as i32)
                } else {
                    a.jet(x, u).powf(p)
                }
            }
            Expr::Pow(a, b) => (b.jet(x, u) * a.jet(x, u).ln()).exp(),
            Expr::Call(f, a) => f.apply(a.jet(x, u)),
        }
    }

    /// Free of `x` and `u`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Number(_) => true,
            Expr::X | Expr::U => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    pub fn eval(&self, x: f64, u: f64) -> f64 {
        self.jet(x, u).value()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // An exponent needs digits after the `e`.
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
            let v = text.parse::<f64>().map_err(|_| Error::invalid(format!("bad number '{text}' at {start}")))?;
            out.push((start, Token::Number(v)));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Token::Ident(src[start..i].to_string())));
        } else if "+-*/^()".contains(ch) {
            out.push((i, Token::Op(ch)));
            i += 1;
        } else {
            return Err(Error::invalid(format!("unexpected character '{ch}' at {i}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |t| t.0)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(Error::invalid(format!("expected '{op}' at {}", self.offset())))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.offset();
        let tok = self.tokens.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        match tok {
            Some(Token::Number(v)) => Ok(Expr::Number(v)),
            Some(Token::Op('(')) => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::X),
                "u" => Ok(Expr::U),
                "pi" => Ok(Expr::Number(std::f64::consts::PI)),
                "e" => Ok(Expr::Number(std::f64::consts::E)),
                _ => match Function::lookup(&name) {
                    Some(f) => {
                        self.expect('(')?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                    None => Err(Error::invalid(format!(
                        "unknown name '{name}' at {at}; variables are x and u, products need '*'"
                    ))),
                },
            },
            Some(Token::Op(c)) => Err(Error::invalid(format!("unexpected '{c}' at {at}"))),
            None => Err(Error::invalid("unexpected end of expression")),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, len: src.len() };
        let e = p.expr()?;
        if p.pos < p.tokens.len() {
            return Err(Error::invalid(format!("trailing input at {}", p.offset())));
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::X => write!(f, "x"),
            Expr::U => write!(f, "u"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", format!("{func:?}").to_lowercase()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eval(src: &str, x: f64, u: f64) -> f64 {
        src.parse::<Expr>().unwrap().eval(x, u)
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("1+2*3", 0.0, 0.0), 7.0);
        assert_eq!(eval("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(eval("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval("(1+x)*(1+u)", 1.0, 2.0), 6.0);
        assert_eq!(eval("8/2/2", 0.0, 0.0), 2.0);
        assert_eq!(eval("1.5e2 + 2e-1", 0.0, 0.0), 150.2);
    }

    #[test]
    fn functions_and_constants() {
        assert_relative_eq!(eval("exp(ln(2)) + sin(pi/2) + sqrt(4)", 0.0, 0.0), 5.0, max_relative = 1e-15);
        assert_relative_eq!(eval("x^0.5", 4.0, 0.0), 2.0);
        assert_relative_eq!(eval("x^u", 2.0, 3.0), 8.0, max_relative = 1e-15);
        assert_relative_eq!(eval("2*e", 0.0, 0.0), 2.0 * std::f64::consts::E);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in ["1+", "ux", "2e", "(1+x", "1+x)", "foo(x)", "1 $ 2", "sin x", ""] {
            assert!(bad.parse::<Expr>().is_err(), "{bad}");
        }
    }

    #[test]
    fn exact_derivatives() {
        let e: Expr = "1+x+u*x".parse().unwrap();
        let j = e.jet(0.0, 0.5);
        assert_eq!((j.value(), j.dx(), j.du()), (1.0, 1.5, 0.0));
        assert_eq!(j.partial_u().dx(), 1.0);
    }
}
