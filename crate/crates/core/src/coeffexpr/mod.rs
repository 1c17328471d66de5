//! Coefficient expressions: immutable trees over complex scalars, closed
//! under partial differentiation.
//!
//! [`Expr`] is the user-facing tree. [`Poly`] is its canonical
//! sum-of-monomials form, used wherever terms must be collected (the
//! coefficients of [`crate::diffop::DiffOp`]). Evaluation of both raises
//! [`Error::Domain`] when a negative power or a `csch/coth/csc/cot` is taken
//! of a quantity with modulus below [`POLE_THRESHOLD`].
//!
//! Textual form (s-expressions, see [`Expr::parse`]):
//!
//! ```text
//! expr  := REAL | "q" INDEX | "(" head expr* ")"
//! head  := "+" | "*" | "c" | "^" | "sinh" | "coth" | "csch" | "sin" | "cot" | "csc"
//! (c RE IM)     complex constant
//! (^ expr P/Q)  rational power
//! ```

mod poly;
mod sexpr;
mod xkind;

pub use poly::{Atom, Func, Monomial, Poly};
pub use xkind::{PotentialKind, XKind};

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub const POLE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimKind {
    Sinh,
    Coth,
    Csch,
    Sin,
    Cot,
    Csc,
}

impl PrimKind {
    pub fn name(self) -> &'static str {
        match self {
            PrimKind::Sinh => "sinh",
            PrimKind::Coth => "coth",
            PrimKind::Csch => "csch",
            PrimKind::Sin => "sin",
            PrimKind::Cot => "cot",
            PrimKind::Csc => "csc",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sinh" => PrimKind::Sinh,
            "coth" => PrimKind::Coth,
            "csch" => PrimKind::Csch,
            "sin" => PrimKind::Sin,
            "cot" => PrimKind::Cot,
            "csc" => PrimKind::Csc,
            _ => return None,
        })
    }

    pub const ALL: [PrimKind; 6] = [
        PrimKind::Sinh,
        PrimKind::Coth,
        PrimKind::Csch,
        PrimKind::Sin,
        PrimKind::Cot,
        PrimKind::Csc,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var(usize),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Pow(Box<Expr>, Rational64),
    Prim(PrimKind, Box<Expr>),
}

/// Principal power; real positive bases stay on the real axis.
pub(crate) fn cpow(z: Complex64, r: Rational64) -> Complex64 {
    if r.is_integer() {
        let n = r.to_integer();
        if let Ok(n) = i32::try_from(n) {
            return z.powi(n);
        }
    }
    let rf = r.to_f64().unwrap();
    if z.im == 0.0 && z.re > 0.0 {
        Complex64::new(z.re.powf(rf), 0.0)
    } else if z.is_zero() {
        if rf > 0.0 {
            Complex64::zero()
        } else {
            Complex64::new(f64::INFINITY, 0.0)
        }
    } else {
        z.powf(rf)
    }
}

impl Expr {
    pub fn real(x: f64) -> Expr {
        Expr::Const(Complex64::new(x, 0.0))
    }

    pub fn constant(c: Complex64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(j: usize) -> Expr {
        Expr::Var(j)
    }

    pub fn pow(self, r: Rational64) -> Expr {
        Expr::Pow(Box::new(self), r)
    }

    pub fn powi(self, n: i64) -> Expr {
        self.pow(Rational64::from_integer(n))
    }

    pub fn prim(kind: PrimKind, arg: Expr) -> Expr {
        Expr::Prim(kind, Box::new(arg))
    }

    /// `Σ coeffs[j] q_j`.
    pub fn linear(coeffs: &[f64]) -> Expr {
        let items: Vec<Expr> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, &c)| {
                if c == 1.0 {
                    Expr::Var(j)
                } else {
                    Expr::Prod(vec![Expr::real(c), Expr::Var(j)])
                }
            })
            .collect();
        match items.len() {
            0 => Expr::real(0.0),
            1 => items.into_iter().next().unwrap(),
            _ => Expr::Sum(items),
        }
    }

    pub fn is_const_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn eval(&self, q: &[f64]) -> Result<Complex64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(j) => Complex64::new(
                *q.get(*j).ok_or(Error::DimensionMismatch {
                    expected: j + 1,
                    got: q.len(),
                })?,
                0.0,
            ),
            Expr::Sum(items) => {
                let mut s = Complex64::zero();
                for it in items {
                    s += it.eval(q)?;
                }
                s
            }
            Expr::Prod(items) => {
                let mut p = Complex64::new(1.0, 0.0);
                for it in items {
                    p *= it.eval(q)?;
                }
                p
            }
            Expr::Pow(b, r) => {
                let v = b.eval(q)?;
                if r.is_negative() && v.norm() < POLE_THRESHOLD {
                    return Err(Error::Domain {
                        node: "pow",
                        magnitude: v.norm(),
                    });
                }
                cpow(v, *r)
            }
            Expr::Prim(kind, arg) => {
                let a = arg.eval(q)?;
                let guard = |d: Complex64| {
                    if d.norm() < POLE_THRESHOLD {
                        Err(Error::Domain {
                            node: kind.name(),
                            magnitude: d.norm(),
                        })
                    } else {
                        Ok(d)
                    }
                };
                match kind {
                    PrimKind::Sinh => a.sinh(),
                    PrimKind::Sin => a.sin(),
                    PrimKind::Coth => a.cosh() / guard(a.sinh())?,
                    PrimKind::Csch => 1.0 / guard(a.sinh())?,
                    PrimKind::Cot => a.cos() / guard(a.sin())?,
                    PrimKind::Csc => 1.0 / guard(a.sin())?,
                }
            }
        })
    }

    /// True when no coordinate occurs in the tree.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Sum(items) | Expr::Prod(items) => items.iter().all(Expr::is_constant),
            Expr::Pow(b, _) => b.is_constant(),
            Expr::Prim(_, a) => a.is_constant(),
        }
    }

    /// Symbolic partial derivative with respect to `q_j`.
    pub fn diff(&self, j: usize) -> Expr {
        if self.is_constant() {
            return Expr::real(0.0);
        }
        match self {
            Expr::Const(_) => Expr::real(0.0),
            Expr::Var(k) => Expr::real(if *k == j { 1.0 } else { 0.0 }),
            Expr::Sum(items) => {
                let ds: Vec<Expr> = items
                    .iter()
                    .map(|e| e.diff(j))
                    .filter(|d| !d.is_const_zero())
                    .collect();
                sum_or_zero(ds)
            }
            Expr::Prod(items) => {
                let mut terms = Vec::new();
                for (i, it) in items.iter().enumerate() {
                    let d = it.diff(j);
                    if d.is_const_zero() {
                        continue;
                    }
                    let mut f = items.clone();
                    f[i] = d;
                    terms.push(Expr::Prod(f));
                }
                sum_or_zero(terms)
            }
            Expr::Pow(b, r) => {
                let db = b.diff(j);
                if db.is_const_zero() {
                    return Expr::real(0.0);
                }
                Expr::Prod(vec![
                    Expr::real(r.to_f64().unwrap()),
                    Expr::Pow(b.clone(), r - Rational64::from_integer(1)),
                    db,
                ])
            }
            Expr::Prim(kind, arg) => {
                let da = arg.diff(j);
                if da.is_const_zero() {
                    return Expr::real(0.0);
                }
                let p = |k: PrimKind| Expr::Prim(k, arg.clone());
                let outer = match kind {
                    PrimKind::Sinh => Expr::Prod(vec![p(PrimKind::Sinh), p(PrimKind::Coth)]),
                    PrimKind::Coth => Expr::Prod(vec![Expr::real(-1.0), p(PrimKind::Csch).powi(2)]),
                    PrimKind::Csch => {
                        Expr::Prod(vec![Expr::real(-1.0), p(PrimKind::Csch), p(PrimKind::Coth)])
                    }
                    PrimKind::Sin => Expr::Prod(vec![p(PrimKind::Sin), p(PrimKind::Cot)]),
                    PrimKind::Cot => Expr::Prod(vec![Expr::real(-1.0), p(PrimKind::Csc).powi(2)]),
                    PrimKind::Csc => {
                        Expr::Prod(vec![Expr::real(-1.0), p(PrimKind::Csc), p(PrimKind::Cot)])
                    }
                };
                Expr::Prod(vec![outer, da])
            }
        }
    }

    /// Replace `q_j` by `Σ_i m[(j, i)] q_i`, so that
    /// `result.eval(q) == self.eval(m q)`.
    pub fn substitute_linear(&self, m: &DMatrix<f64>) -> Result<Expr> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if let Some(k) = self.max_var() {
            if k >= m.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: k + 1,
                    got: m.nrows(),
                });
            }
        }
        Ok(self.subst_rec(m))
    }

    fn subst_rec(&self, m: &DMatrix<f64>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(j) => {
                let row: Vec<f64> = (0..m.ncols()).map(|i| m[(*j, i)]).collect();
                Expr::linear(&row)
            }
            Expr::Sum(items) => Expr::Sum(items.iter().map(|e| e.subst_rec(m)).collect()),
            Expr::Prod(items) => Expr::Prod(items.iter().map(|e| e.subst_rec(m)).collect()),
            Expr::Pow(b, r) => Expr::Pow(Box::new(b.subst_rec(m)), *r),
            Expr::Prim(k, a) => Expr::Prim(*k, Box::new(a.subst_rec(m))),
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(j) => Some(*j),
            Expr::Sum(items) | Expr::Prod(items) => items.iter().filter_map(Expr::max_var).max(),
            Expr::Pow(b, _) => b.max_var(),
            Expr::Prim(_, a) => a.max_var(),
        }
    }

    /// Flatten, fold constants, merge powers and collect like terms.
    pub fn normalize(&self) -> Expr {
        Poly::from_expr(self).to_expr()
    }

    pub fn to_poly(&self) -> Poly {
        Poly::from_expr(self)
    }

    /// Whether every primitive node is one of the declared kinds (always true
    /// for values of this type; kept as an explicit traversal for tests).
    pub fn prim_kinds(&self, out: &mut Vec<PrimKind>) {
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Sum(items) | Expr::Prod(items) => items.iter().for_each(|e| e.prim_kinds(out)),
            Expr::Pow(b, _) => b.prim_kinds(out),
            Expr::Prim(k, a) => {
                out.push(*k);
                a.prim_kinds(out);
            }
        }
    }

    pub fn parse(s: &str) -> Result<Expr> {
        sexpr::parse(s)
    }
}

fn sum_or_zero(mut items: Vec<Expr>) -> Expr {
    match items.len() {
        0 => Expr::real(0.0),
        1 => items.pop().unwrap(),
        _ => Expr::Sum(items),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        sexpr::write(self, f)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        sexpr::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Expr::var(0).powi(-2).eval(&[2.0]).unwrap(), c(0.25));
        let x = (1.0f64 + 2f64.sqrt()).ln();
        let v = Expr::prim(PrimKind::Csch, Expr::var(0)).eval(&[x]).unwrap();
        assert!((v - c(1.0)).norm() < 1e-15);
        assert_eq!(Expr::real(3.0).eval(&[0.1, 0.2]).unwrap(), c(3.0));
    }

    #[test]
    fn eval_reports_poles() {
        let e = Expr::prim(PrimKind::Csc, Expr::var(0));
        assert!(matches!(e.eval(&[0.0]), Err(Error::Domain { node: "csc", .. })));
        let e = Expr::var(0).powi(-1);
        assert!(matches!(e.eval(&[0.0]), Err(Error::Domain { node: "pow", .. })));
    }

    #[test]
    fn diff_examples() {
        let d = Expr::var(0).powi(3).diff(0);
        assert_eq!(d.eval(&[2.0]).unwrap(), c(12.0));
        let d = Expr::prim(PrimKind::Coth, Expr::var(0)).diff(0);
        // finite-difference oracle at q = 1
        let h = 1e-5;
        let f = |x: f64| 1.0 / x.tanh();
        let fd = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
        let v = d.eval(&[1.0]).unwrap();
        assert!((v.re - fd).abs() < 1e-8);
        assert!((v.re - (-0.724_061_6)).abs() < 1e-6);
        assert!(Expr::Const(Complex64::new(2.0, 1.0)).diff(3).is_const_zero());
    }

    #[test]
    fn substitute_examples() {
        let e = Expr::Sum(vec![Expr::var(0), Expr::Prod(vec![Expr::real(-1.0), Expr::var(1)])]);
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let s = e.substitute_linear(&swap).unwrap();
        assert_eq!(s.eval(&[3.0, 1.0]).unwrap(), c(-2.0));
        let id = DMatrix::identity(2, 2);
        assert_eq!(e.substitute_linear(&id).unwrap().eval(&[3.0, 1.0]).unwrap(), c(2.0));

        let inv_sq = Expr::var(0).powi(-2);
        let lam = 3.0;
        let scaled = inv_sq.substitute_linear(&DMatrix::from_element(1, 1, lam)).unwrap();
        for x in [0.5, 1.0, 2.5] {
            let a = scaled.eval(&[x]).unwrap();
            let b = inv_sq.eval(&[x]).unwrap() / (lam * lam);
            assert!((a - b).norm() < 1e-15);
        }
        assert!(Expr::var(3).substitute_linear(&DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn normalize_examples() {
        let e = Expr::var(1).pow(Rational64::new(1, 2));
        let s = Expr::Sum(vec![Expr::real(0.0), e.clone()]);
        assert_eq!(s.normalize(), e);
        let u = Expr::var(0);
        let p = Expr::Prod(vec![u.clone().powi(1), u.clone().powi(2)]);
        assert_eq!(p.normalize(), u.powi(3));
    }
}
