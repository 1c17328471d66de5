use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;

use super::{Expr, PrimKind};
use crate::error::{Error, Result};

pub(super) fn write(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => {
            if c.im == 0.0 {
                write!(f, "{:?}", c.re)
            } else {
                write!(f, "(c {:?} {:?})", c.re, c.im)
            }
        }
        Expr::Var(j) => write!(f, "q{j}"),
        Expr::Sum(items) | Expr::Prod(items) => {
            f.write_str(if matches!(e, Expr::Sum(_)) { "(+" } else { "(*" })?;
            for it in items {
                f.write_str(" ")?;
                write(it, f)?;
            }
            f.write_str(")")
        }
        Expr::Pow(b, r) => {
            f.write_str("(^ ")?;
            write(b, f)?;
            write!(f, " {r})")
        }
        Expr::Prim(k, a) => {
            write!(f, "({} ", k.name())?;
            write(a, f)?;
            f.write_str(")")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(s: &str) -> Vec<(usize, Token<'_>)> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push((i, Token::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Token::Close));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b'(' | b')') && !bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                out.push((start, Token::Atom(&s[start..i])));
            }
        }
    }
    out
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
    len: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let at = self.tokens.get(self.pos).map_or(self.len, |t| t.0);
        Err(Error::Parse {
            pos: at,
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.tokens.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn number(&self, s: &str) -> Result<f64> {
        s.parse::<f64>().or_else(|_| self.err(format!("expected a number, found {s:?}")))
    }

    fn expr(&mut self) -> Result<Expr> {
        match self.next() {
            None => self.err("unexpected end of input"),
            Some(Token::Close) => {
                self.pos -= 1;
                self.err("unexpected ')'")
            }
            Some(Token::Atom(a)) => {
                if let Some(idx) = a.strip_prefix('q') {
                    return match idx.parse::<usize>() {
                        Ok(j) => Ok(Expr::Var(j)),
                        Err(_) => {
                            self.pos -= 1;
                            self.err(format!("bad variable {a:?}"))
                        }
                    };
                }
                self.pos -= 1;
                let x = self.number(a)?;
                self.pos += 1;
                Ok(Expr::real(x))
            }
            Some(Token::Open) => {
                let head = match self.next() {
                    Some(Token::Atom(h)) => h,
                    _ => {
                        self.pos -= 1;
                        return self.err("expected an operator after '('");
                    }
                };
                let e = match head {
                    "+" | "*" => {
                        let mut items = Vec::new();
                        while !matches!(self.peek(), Some(Token::Close) | None) {
                            items.push(self.expr()?);
                        }
                        if head == "+" {
                            Expr::Sum(items)
                        } else {
                            Expr::Prod(items)
                        }
                    }
                    "c" => {
                        let re = self.scalar()?;
                        let im = self.scalar()?;
                        Expr::Const(Complex64::new(re, im))
                    }
                    "^" => {
                        let base = self.expr()?;
                        let r = match self.next() {
                            Some(Token::Atom(a)) => match a.parse::<Rational64>() {
                                Ok(r) => r,
                                Err(_) => {
                                    self.pos -= 1;
                                    return self.err(format!("bad rational exponent {a:?}"));
                                }
                            },
                            _ => {
                                self.pos -= 1;
                                return self.err("expected a rational exponent");
                            }
                        };
                        Expr::Pow(Box::new(base), r)
                    }
                    name => match PrimKind::from_name(name) {
                        Some(k) => Expr::Prim(k, Box::new(self.expr()?)),
                        None => {
                            self.pos -= 1;
                            return self.err(format!("unknown operator {name:?}"));
                        }
                    },
                };
                match self.next() {
                    Some(Token::Close) => Ok(e),
                    _ => {
                        self.pos -= 1;
                        self.err("expected ')'")
                    }
                }
            }
        }
    }

    fn scalar(&mut self) -> Result<f64> {
        match self.next() {
            Some(Token::Atom(a)) => {
                self.pos -= 1;
                let x = self.number(a)?;
                self.pos += 1;
                Ok(x)
            }
            _ => {
                self.pos -= 1;
                self.err("expected a number")
            }
        }
    }
}

pub(super) fn parse(s: &str) -> Result<Expr> {
    let mut p = Parser {
        tokens: tokenize(s),
        pos: 0,
        len: s.len(),
    };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_forms() {
        let e: Expr = "(+ (* -2.5 (^ q0 3/2)) (csch (+ q0 (* -1.0 q1))) (c 0.0 1.0))".parse().unwrap();
        let v = e.eval(&[4.0, 3.0]).unwrap();
        let expected = -2.5 * 8.0 + 1.0 / 1f64.sinh();
        assert!((v.re - expected).abs() < 1e-12);
        assert!((v.im - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reports_positions() {
        match Expr::parse("(+ q0 (foo q1))") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Expr::parse("(+ q0").is_err());
        assert!(Expr::parse("q0 q1").is_err());
        assert!(Expr::parse("(^ q0 x)").is_err());
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::Sum(vec![
            Expr::Const(Complex64::new(0.1, -1e-20)),
            Expr::Pow(Box::new(Expr::Prim(PrimKind::Coth, Box::new(Expr::Var(2)))), Rational64::new(-3, 2)),
        ]);
        assert_eq!(Expr::parse(&e.to_string()).unwrap(), e);
    }
}
