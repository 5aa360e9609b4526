//! Tiny arithmetic expression grammar for coefficient fields.
//!
//! Configuration files describe the fields `α`, `β` and the conformal factor
//! `ψ` as closed-form expressions over the coordinates `(x, y, z)`:
//!
//! ```text
//!   expr   := term (('+' | '-') term)*
//!   term   := factor (('*' | '/') factor)*
//!   factor := '-' factor | primary
//!   primary:= number | 'x' | 'y' | 'z' | 'pi'
//!           | ('sin' | 'cos' | 'exp') '(' expr ')'
//!           | '(' expr ')'
//! ```

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::manifold::Manifold;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Expr {
    /// Parses the expression source.
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Var(Var::Z) => z,
            Expr::Neg(a) => -a.eval(x, y, z),
            Expr::Add(a, b) => a.eval(x, y, z) + b.eval(x, y, z),
            Expr::Sub(a, b) => a.eval(x, y, z) - b.eval(x, y, z),
            Expr::Mul(a, b) => a.eval(x, y, z) * b.eval(x, y, z),
            Expr::Div(a, b) => a.eval(x, y, z) / b.eval(x, y, z),
            Expr::Sin(a) => a.eval(x, y, z).sin(),
            Expr::Cos(a) => a.eval(x, y, z).cos(),
            Expr::Exp(a) => a.eval(x, y, z).exp(),
        }
    }

    /// Samples the expression on a manifold's grid.
    pub fn sample(&self, m: &Manifold) -> Result<ScalarField> {
        let field = m.field_from_fn(|x, y, z| self.eval(x, y, z));
        field.ensure_finite("expression field")?;
        Ok(field)
    }
}

/// Convenience: parse and sample in one step.
pub fn sample_expr(src: &str, m: &Manifold) -> Result<ScalarField> {
    Expr::parse(src)?.sample(m)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> CoreError {
        CoreError::Expr(format!("{msg} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.error("expected a number, name or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        let mut seen_e = false;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let take = c.is_ascii_digit()
                || c == b'.'
                || c == b'e'
                || c == b'E'
                || (seen_e
                    && (c == b'+' || c == b'-')
                    && matches!(self.src[self.pos - 1], b'e' | b'E'));
            if !take {
                break;
            }
            if c == b'e' || c == b'E' {
                seen_e = true;
            }
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| self.error("bad number"))
    }

    fn ident(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "x" => Ok(Expr::Var(Var::X)),
            "y" => Ok(Expr::Var(Var::Y)),
            "z" => Ok(Expr::Var(Var::Z)),
            "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            "sin" | "cos" | "exp" => {
                if self.peek() != Some(b'(') {
                    return Err(self.error("function call needs '('"));
                }
                self.pos += 1;
                let arg = Box::new(self.expr()?);
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(match name {
                    "sin" => Expr::Sin(arg),
                    "cos" => Expr::Cos(arg),
                    _ => Expr::Exp(arg),
                })
            }
            other => Err(CoreError::Expr(format!("unknown name '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("1 + 2*sin(pi*x) - cos(y)/2").unwrap();
        let v = e.eval(0.25, 0.0, 0.0);
        assert!((v - (1.0 + 2.0 * (std::f64::consts::PI * 0.25).sin() - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn unary_minus_and_nesting() {
        let e = Expr::parse("-exp(-(x - 1))").unwrap();
        assert!((e.eval(1.0, 0.0, 0.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_expression() {
        let e = Expr::parse("2.5e-1").unwrap();
        assert_eq!(e.eval(0.0, 0.0, 0.0), 0.25);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("sin x").is_err());
        assert!(Expr::parse("1 2").is_err());
    }
}
