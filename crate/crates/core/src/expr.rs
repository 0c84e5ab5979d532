//! Tiny arithmetic expression grammar for weights, scale factors and
//! potentials in scenario files.
//!
//! Supported: `+ - * / ^`, parentheses, unary minus, the functions
//! `exp log sqrt sin cos abs`, numeric literals and free variables
//! (typically `x`, `y`, `z`, `t`).

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, src: src.to_string() };
        let e = p.expr(0)?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!("trailing input in '{}'", src)));
        }
        Ok(e)
    }

    pub fn eval<S: Scalar>(&self, vars: &[(&str, S)]) -> Result<S> {
        match self {
            Expr::Num(x) => Ok(S::real(*x)),
            Expr::Var(name) => vars
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Expr(format!("unknown variable '{}'", name))),
            Expr::Neg(e) => Ok(-e.eval(vars)?),
            Expr::Add(a, b) => Ok(a.eval(vars)? + b.eval(vars)?),
            Expr::Sub(a, b) => Ok(a.eval(vars)? - b.eval(vars)?),
            Expr::Mul(a, b) => Ok(a.eval(vars)? * b.eval(vars)?),
            Expr::Div(a, b) => Ok(a.eval(vars)? / b.eval(vars)?),
            Expr::Pow(a, b) => Ok(a.eval(vars)?.powf(b.eval(vars)?)),
            Expr::Call(f, e) => {
                let v = e.eval(vars)?;
                match f.as_str() {
                    "exp" => Ok(v.exp()),
                    "log" => Ok(v.ln()),
                    "sqrt" => Ok(v.sqrt()),
                    "sin" => Ok(v.sin()),
                    "cos" => Ok(v.cos()),
                    "abs" => Ok(v.abs()),
                    other => Err(Error::Expr(format!("unknown function '{}'", other))),
                }
            }
        }
    }

    /// Names of the free variables appearing in the expression.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => out.push(n.clone()),
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
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
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || chars[i] == '.'
                    || chars[i] == 'e'
                    || chars[i] == 'E'
                    || ((chars[i] == '+' || chars[i] == '-')
                        && i > start
                        && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
            {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            let v = lit.parse::<f64>().map_err(|_| Error::Expr(format!("bad number '{}'", lit)))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c == '(' {
            out.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Tok::RParen);
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character '{}'", c)));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
    src: String,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr> {
        let mut lhs = match self.next() {
            Some(Tok::Num(x)) => Expr::Num(x),
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.next();
                    let arg = self.expr(0)?;
                    match self.next() {
                        Some(Tok::RParen) => Expr::Call(name, Box::new(arg)),
                        _ => return Err(Error::Expr(format!("missing ')' in '{}'", self.src))),
                    }
                } else {
                    Expr::Var(name)
                }
            }
            // unary minus binds looser than '^' so that -x^2 == -(x^2)
            Some(Tok::Op('-')) => Expr::Neg(Box::new(self.expr(5)?)),
            Some(Tok::Op('+')) => self.expr(5)?,
            Some(Tok::LParen) => {
                let e = self.expr(0)?;
                match self.next() {
                    Some(Tok::RParen) => e,
                    _ => return Err(Error::Expr(format!("missing ')' in '{}'", self.src))),
                }
            }
            other => return Err(Error::Expr(format!("unexpected token {:?} in '{}'", other, self.src))),
        };
        loop {
            let op = match self.peek() {
                Some(Tok::Op(c)) => *c,
                _ => break,
            };
            let (lbp, rbp) = match op {
                '+' | '-' => (1, 2),
                '*' | '/' => (3, 4),
                '^' => (6, 5), // right-associative
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.next();
            let rhs = self.expr(rbp)?;
            lhs = match op {
                '+' => Expr::Add(Box::new(lhs), Box::new(rhs)),
                '-' => Expr::Sub(Box::new(lhs), Box::new(rhs)),
                '*' => Expr::Mul(Box::new(lhs), Box::new(rhs)),
                '/' => Expr::Div(Box::new(lhs), Box::new(rhs)),
                '^' => Expr::Pow(Box::new(lhs), Box::new(rhs)),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eval(src: &str, vars: &[(&str, f64)]) -> f64 {
        Expr::parse(src).unwrap().eval(vars).unwrap()
    }

    #[test]
    fn precedence_and_unary() {
        assert_relative_eq!(eval("1+2*3", &[]), 7.0);
        assert_relative_eq!(eval("-(2+1)^2", &[]), -9.0);
        assert_relative_eq!(eval("2^3^2", &[]), 512.0); // right associative
        assert_relative_eq!(eval("-x^2/2", &[("x", 3.0)]), -4.5);
    }

    #[test]
    fn functions_and_variables() {
        assert_relative_eq!(eval("exp(2*t)", &[("t", 0.5)]), 1.0f64.exp());
        assert_relative_eq!(eval("log(exp(x))", &[("x", 1.25)]), 1.25, epsilon = 1e-12);
        assert_relative_eq!(eval("sqrt(x^2+y^2)", &[("x", 3.0), ("y", 4.0)]), 5.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("2 +").is_err());
        assert!(Expr::parse("foo(1").is_err());
        assert!(Expr::parse("1 ? 2").is_err());
        assert!(Expr::parse("bar(1)").unwrap().eval::<f64>(&[]).is_err());
    }
}
