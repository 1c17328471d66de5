//! Canonical sum-of-monomials form of coefficient expressions.
//!
//! A [`Poly`] is a finite sum `Σ c · Π atomᵉ` with complex coefficients and
//! rational exponents. Atoms are coordinates or one of the functions
//! `sinh, coth, sin, cot` (and an opaque `base` used for powers of sums)
//! applied to another `Poly`. `csch` and `csc` are stored as `sinh⁻¹` and
//! `sin⁻¹`, powers of `coth` and `cot` above one are folded with
//! `coth² = 1 + sinh⁻²` and `cot² = sin⁻² − 1`, and odd functions carry a
//! canonical argument sign. Identities between atoms with different arguments
//! are not applied; zero-testing of such combinations is numerical.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{cpow, Expr, PrimKind, POLE_THRESHOLD};
use crate::error::{Error, Result};

type C = Complex64;
type Exp = Rational64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    /// The argument itself, raised to the monomial exponent.
    Base,
    Sinh,
    Coth,
    Sin,
    Cot,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    Var(usize),
    Fun(Func, Arc<Poly>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Monomial(Vec<(Atom, Exp)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn factors(&self) -> &[(Atom, Exp)] {
        &self.0
    }

    fn single(atom: Atom, e: Exp) -> Self {
        if e.is_zero() {
            Monomial::one()
        } else {
            Monomial(vec![(atom, e)])
        }
    }

    /// Merge two sorted factor lists, adding exponents.
    fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if !e.is_zero() {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    fn with_exponent(&self, idx: usize, e: Exp) -> Monomial {
        let mut f = self.0.clone();
        if e.is_zero() {
            f.remove(idx);
        } else {
            f[idx].1 = e;
        }
        Monomial(f)
    }

    fn pow(&self, r: Exp) -> Monomial {
        if r.is_zero() {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(a, e)| (a.clone(), e * r)).collect())
    }

    pub fn degree(&self) -> Exp {
        self.0.iter().map(|(_, e)| *e).sum()
    }
}

/// Canonical sum of monomials.
#[derive(Debug, Clone, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, C>,
}

fn cmp_c(a: &C, b: &C) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Poly {}

impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Poly {
    fn cmp(&self, other: &Self) -> Ordering {
        if std::ptr::eq(self, other) {
            return Ordering::Equal;
        }
        self.terms.len().cmp(&other.terms.len()).then_with(|| {
            for ((ma, ca), (mb, cb)) in self.terms.iter().zip(&other.terms) {
                let o = ma.cmp(mb).then_with(|| cmp_c(ca, cb));
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        })
    }
}

/// Turns `-0.0` parts into `0.0` so equal polynomials compare equal.
fn fold_zero(c: C) -> C {
    C::new(c.re + 0.0, c.im + 0.0)
}

fn is_integer(e: &Exp) -> bool {
    e.is_integer()
}

fn sign_pow(e: &Exp) -> f64 {
    if e.to_integer() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn real(x: f64) -> Self {
        Poly::constant(C::new(x, 0.0))
    }

    pub fn var(j: usize) -> Self {
        Poly::from_monomial(Monomial::single(Atom::Var(j), Exp::one()), C::one())
    }

    /// `Σ coeffs[j] q_j`.
    pub fn linear(coeffs: &[f64]) -> Self {
        let mut p = Poly::zero();
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                p.add_term(Monomial::single(Atom::Var(j), Exp::one()), C::new(c, 0.0));
            }
        }
        p
    }

    fn from_monomial(m: Monomial, c: C) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    /// The value if the polynomial has no non-constant monomial.
    pub fn as_constant(&self) -> Option<C> {
        match self.terms.len() {
            0 => Some(C::zero()),
            1 => self.terms.get(&Monomial::one()).copied(),
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        let c = fold_zero(c);
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                let s = fold_zero(s);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// `self += factor · other`.
    pub fn add_scaled(&mut self, other: &Poly, factor: C) {
        if factor.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * factor);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_scaled(other, C::one());
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_scaled(other, -C::one());
        out
    }

    pub fn scale(&self, factor: C) -> Poly {
        if factor.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), fold_zero(c * factor)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    pub fn neg(&self) -> Poly {
        self.scale(-C::one())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.push_reduced(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Add `c · m`, folding `coth^k` and `cot^k` for integer `k ≥ 2`.
    fn push_reduced(&mut self, m: Monomial, c: C) {
        let hit = m.0.iter().position(|(a, e)| {
            matches!(a, Atom::Fun(Func::Coth | Func::Cot, _)) && is_integer(e) && *e >= Exp::from_integer(2)
        });
        let Some(idx) = hit else {
            self.add_term(m, c);
            return;
        };
        let (atom, e) = m.0[idx].clone();
        let Atom::Fun(func, arg) = atom else { unreachable!() };
        let rest = m.with_exponent(idx, e - Exp::from_integer(2));
        let (partner, sign) = match func {
            Func::Coth => (Func::Sinh, 1.0),
            _ => (Func::Sin, -1.0),
        };
        let inv_sq = Monomial::single(Atom::Fun(partner, arg), Exp::from_integer(-2));
        // coth² = 1 + sinh⁻², cot² = sin⁻² − 1
        self.push_reduced(rest.mul(&inv_sq), c);
        self.push_reduced(rest, c * sign);
    }

    /// Multiply by a single monomial.
    fn mul_monomial(&self, m: &Monomial, c: C) -> Poly {
        let mut out = Poly::zero();
        for (mm, cc) in &self.terms {
            out.push_reduced(mm.mul(m), cc * c);
        }
        out
    }

    /// Rational power. Monomials with a positive real coefficient distribute
    /// the power over their atoms, which assumes those atoms are positive on
    /// the working domain.
    pub fn pow(&self, r: Exp) -> Poly {
        if r.is_zero() {
            return Poly::one();
        }
        if r.is_one() {
            return self.clone();
        }
        if let Some(c) = self.as_constant() {
            return Poly::constant(cpow(c, r));
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if is_integer(&r) || (c.im == 0.0 && c.re > 0.0) {
                let mut out = Poly::zero();
                out.push_reduced(m.pow(r), cpow(*c, r));
                return out;
            }
        }
        if is_integer(&r) && r > Exp::zero() {
            let mut n = r.to_integer();
            let mut base = self.clone();
            let mut acc = Poly::one();
            while n > 0 {
                if n & 1 == 1 {
                    acc = acc.mul(&base);
                }
                n >>= 1;
                if n > 0 {
                    base = base.mul(&base);
                }
            }
            return acc;
        }
        let (arg, scale, flipped) = canonical_base(self);
        let mut factor = cpow(C::new(scale, 0.0), r);
        let arg = if flipped {
            if is_integer(&r) {
                factor *= sign_pow(&r);
                arg
            } else {
                arg.neg()
            }
        } else {
            arg
        };
        Poly::from_monomial(Monomial::single(Atom::Fun(Func::Base, Arc::new(arg)), r), factor)
    }

    /// `func(arg)` with constant folding and odd-symmetry sign canonicalization.
    pub fn fun(func: Func, arg: Poly) -> Poly {
        if let Some(c) = arg.as_constant() {
            let v = match func {
                Func::Base => c,
                Func::Sinh => c.sinh(),
                Func::Coth => c.cosh() / c.sinh(),
                Func::Sin => c.sin(),
                Func::Cot => c.cos() / c.sin(),
            };
            return Poly::constant(v);
        }
        if func == Func::Base {
            return arg;
        }
        let arg = snap_arg(&arg);
        let (arg, sign) = if leading_negative(&arg) {
            (arg.neg(), -1.0)
        } else {
            (arg, 1.0)
        };
        Poly::from_monomial(
            Monomial::single(Atom::Fun(func, Arc::new(arg)), Exp::one()),
            C::new(sign, 0.0),
        )
    }

    pub fn sinh(arg: Poly) -> Poly {
        Poly::fun(Func::Sinh, arg)
    }

    pub fn coth(arg: Poly) -> Poly {
        Poly::fun(Func::Coth, arg)
    }

    pub fn sin(arg: Poly) -> Poly {
        Poly::fun(Func::Sin, arg)
    }

    pub fn cot(arg: Poly) -> Poly {
        Poly::fun(Func::Cot, arg)
    }

    pub fn csch(arg: Poly) -> Poly {
        Poly::sinh(arg).pow(-Exp::one())
    }

    pub fn csc(arg: Poly) -> Poly {
        Poly::sin(arg).pow(-Exp::one())
    }

    /// Exact partial derivative with respect to `q_j`.
    pub fn diff(&self, j: usize) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (idx, (atom, e)) in m.0.iter().enumerate() {
                let ce = c * e.to_f64().unwrap();
                match atom {
                    Atom::Var(k) => {
                        if *k == j {
                            out.push_reduced(m.with_exponent(idx, e - Exp::one()), ce);
                        }
                    }
                    Atom::Fun(func, arg) => {
                        let da = arg.diff(j);
                        if da.is_zero() {
                            continue;
                        }
                        let lowered = m.with_exponent(idx, e - Exp::one());
                        let (mono, coef) = match func {
                            Func::Base => (lowered, ce),
                            Func::Sinh => (
                                m.mul(&Monomial::single(Atom::Fun(Func::Coth, arg.clone()), Exp::one())),
                                ce,
                            ),
                            Func::Sin => (
                                m.mul(&Monomial::single(Atom::Fun(Func::Cot, arg.clone()), Exp::one())),
                                ce,
                            ),
                            Func::Coth => (
                                lowered.mul(&Monomial::single(
                                    Atom::Fun(Func::Sinh, arg.clone()),
                                    Exp::from_integer(-2),
                                )),
                                -ce,
                            ),
                            Func::Cot => (
                                lowered.mul(&Monomial::single(
                                    Atom::Fun(Func::Sin, arg.clone()),
                                    Exp::from_integer(-2),
                                )),
                                -ce,
                            ),
                        };
                        out.add_scaled(&da.mul_monomial(&mono, coef), C::one());
                    }
                }
            }
        }
        out
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                let v = match a {
                    Atom::Var(j) => Some(*j),
                    Atom::Fun(_, arg) => arg.max_var(),
                };
                best = best.max(v);
            }
        }
        best
    }

    pub fn eval(&self, q: &[f64]) -> Result<C> {
        let mut total = C::zero();
        for (m, c) in &self.terms {
            let mut v = *c;
            for (atom, e) in &m.0 {
                v *= eval_factor(atom, e, q)?;
            }
            total += v;
        }
        Ok(total)
    }

    /// Replace every `q_j` by `forms[j]`.
    pub fn substitute(&self, forms: &[Poly]) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut acc = Poly::constant(*c);
            for (atom, e) in &m.0 {
                let f = match atom {
                    Atom::Var(j) => forms[*j].pow(*e),
                    Atom::Fun(func, arg) => Poly::fun(*func, arg.substitute(forms)).pow(*e),
                };
                acc = acc.mul(&f);
            }
            out.add_scaled(&acc, C::one());
        }
        out
    }

    pub fn from_expr(e: &Expr) -> Poly {
        match e {
            Expr::Const(c) => Poly::constant(*c),
            Expr::Var(j) => Poly::var(*j),
            Expr::Sum(items) => {
                let mut out = Poly::zero();
                for it in items {
                    out.add_scaled(&Poly::from_expr(it), C::one());
                }
                out
            }
            Expr::Prod(items) => items
                .iter()
                .fold(Poly::one(), |acc, it| acc.mul(&Poly::from_expr(it))),
            Expr::Pow(b, r) => Poly::from_expr(b).pow(*r),
            Expr::Prim(kind, arg) => {
                let a = Poly::from_expr(arg);
                match kind {
                    PrimKind::Sinh => Poly::sinh(a),
                    PrimKind::Coth => Poly::coth(a),
                    PrimKind::Csch => Poly::csch(a),
                    PrimKind::Sin => Poly::sin(a),
                    PrimKind::Cot => Poly::cot(a),
                    PrimKind::Csc => Poly::csc(a),
                }
            }
        }
    }

    pub fn to_expr(&self) -> Expr {
        let mut items: Vec<Expr> = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut factors = Vec::with_capacity(m.0.len() + 1);
            if *c != C::one() || m.0.is_empty() {
                factors.push(Expr::Const(*c));
            }
            for (atom, e) in &m.0 {
                factors.push(atom_expr(atom, *e));
            }
            items.push(if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                Expr::Prod(factors)
            });
        }
        match items.len() {
            0 => Expr::Const(C::zero()),
            1 => items.pop().unwrap(),
            _ => Expr::Sum(items),
        }
    }
}

fn atom_expr(atom: &Atom, e: Exp) -> Expr {
    let (base, e) = match atom {
        Atom::Var(j) => (Expr::Var(*j), e),
        Atom::Fun(func, arg) => {
            let a = Box::new(arg.to_expr());
            match func {
                Func::Base => (arg.to_expr(), e),
                Func::Coth => (Expr::Prim(PrimKind::Coth, a), e),
                Func::Cot => (Expr::Prim(PrimKind::Cot, a), e),
                Func::Sinh if e < Exp::zero() => (Expr::Prim(PrimKind::Csch, a), -e),
                Func::Sinh => (Expr::Prim(PrimKind::Sinh, a), e),
                Func::Sin if e < Exp::zero() => (Expr::Prim(PrimKind::Csc, a), -e),
                Func::Sin => (Expr::Prim(PrimKind::Sin, a), e),
            }
        }
    };
    if e.is_one() {
        base
    } else {
        Expr::Pow(Box::new(base), e)
    }
}

fn leading_negative(p: &Poly) -> bool {
    match p.terms.values().next() {
        Some(c) => c.re < 0.0 || (c.re == 0.0 && c.im < 0.0),
        None => false,
    }
}

fn snap_arg(p: &Poly) -> Poly {
    Poly {
        terms: p
            .terms
            .iter()
            .filter_map(|(m, c)| {
                let s = fold_zero(C::new(snap(c.re), snap(c.im)));
                (!s.is_zero()).then(|| (m.clone(), s))
            })
            .collect(),
    }
}

/// Split a sum into `scale · sign · arg` with a leading coefficient of modulus 1.
fn canonical_base(p: &Poly) -> (Poly, f64, bool) {
    let p = snap_arg(p);
    let lead = *p.terms.values().next().expect("non-constant polynomial");
    let (scale, rest) = if lead.im == 0.0 {
        let s = lead.re.abs();
        (s, p.scale(C::new(1.0 / s, 0.0)))
    } else {
        (1.0, p)
    };
    let rest = snap_arg(&rest);
    if leading_negative(&rest) {
        (rest.neg(), scale, true)
    } else {
        (rest, scale, false)
    }
}

fn eval_factor(atom: &Atom, e: &Exp, q: &[f64]) -> Result<C> {
    let (value, node, pole_denominator) = match atom {
        Atom::Var(j) => {
            let x = *q.get(*j).ok_or(Error::DimensionMismatch {
                expected: j + 1,
                got: q.len(),
            })?;
            (C::new(x, 0.0), "pow", None)
        }
        Atom::Fun(func, arg) => {
            let a = arg.eval(q)?;
            match func {
                Func::Base => (a, "pow", None),
                Func::Sinh => (a.sinh(), "csch", None),
                Func::Sin => (a.sin(), "csc", None),
                Func::Coth => {
                    let s = a.sinh();
                    (a.cosh() / s, "coth", Some(s))
                }
                Func::Cot => {
                    let s = a.sin();
                    (a.cos() / s, "cot", Some(s))
                }
            }
        }
    };
    if let Some(d) = pole_denominator {
        if d.norm() < POLE_THRESHOLD {
            return Err(Error::Domain {
                node,
                magnitude: d.norm(),
            });
        }
    }
    if e.is_negative() && value.norm() < POLE_THRESHOLD {
        return Err(Error::Domain {
            node,
            magnitude: value.norm(),
        });
    }
    Ok(cpow(value, *e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Exp {
        Exp::new(n, d)
    }

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    fn l12() -> Poly {
        Poly::linear(&[1.0, -1.0])
    }

    #[test]
    fn exponents_merge_and_cancel() {
        let u = Poly::var(0);
        assert_eq!(u.pow(r(1, 1)).mul(&u.pow(r(2, 1))), u.pow(r(3, 1)));
        let s = Poly::sinh(l12()).pow(r(1, 2));
        let prod = s.mul(&Poly::sinh(l12()).pow(r(-1, 2)));
        assert_eq!(prod, Poly::one());
    }

    #[test]
    fn coth_squared_folds() {
        let c = Poly::coth(l12());
        let sq = c.mul(&c);
        let expected = Poly::one().add(&Poly::csch(l12()).pow(r(2, 1)));
        assert_eq!(sq, expected);
        let t = Poly::cot(l12());
        assert_eq!(t.mul(&t), Poly::csc(l12()).pow(r(2, 1)).sub(&Poly::one()));
    }

    #[test]
    fn odd_functions_canonicalize_sign() {
        let neg = Poly::linear(&[-1.0, 1.0]);
        assert_eq!(Poly::sinh(neg.clone()), Poly::sinh(l12()).neg());
        assert_eq!(Poly::csch(neg.clone()).pow(r(2, 1)), Poly::csch(l12()).pow(r(2, 1)));
        assert_eq!(neg.pow(r(-2, 1)), l12().pow(r(-2, 1)));
        assert_eq!(neg.pow(r(-1, 1)), l12().pow(r(-1, 1)).neg());
    }

    #[test]
    fn derivative_of_csch_squared_is_reduced() {
        // d²/dx² csch²x = 4 csch²x + 6 csch⁴x
        let x = Poly::var(0);
        let v = Poly::csch(x.clone()).pow(r(2, 1));
        let d2 = v.diff(0).diff(0);
        let expected = Poly::csch(x.clone())
            .pow(r(2, 1))
            .scale(C::new(4.0, 0.0))
            .add(&Poly::csch(x).pow(r(4, 1)).scale(C::new(6.0, 0.0)));
        assert_eq!(d2, expected);
    }

    #[test]
    fn eval_guards_poles() {
        let p = Poly::var(0).pow(r(-2, 1));
        assert!(matches!(p.eval(&[0.0]), Err(Error::Domain { .. })));
        let c = Poly::coth(Poly::var(0));
        assert!(matches!(c.eval(&[1e-14]), Err(Error::Domain { node: "coth", .. })));
    }

    #[test]
    fn substitution_matches_evaluation_at_image() {
        let p = Poly::csch(l12()).pow(r(2, 1)).mul(&Poly::var(1));
        let forms = vec![Poly::var(1), Poly::var(0)];
        let s = p.substitute(&forms);
        let q = [0.3, 1.7];
        assert!(close(s.eval(&q).unwrap(), p.eval(&[1.7, 0.3]).unwrap(), 1e-14));
    }

    #[test]
    fn fractional_power_of_sum_evaluates_principal_value() {
        let p = l12().pow(r(1, 2));
        assert!(close(p.eval(&[5.0, 1.0]).unwrap(), C::new(2.0, 0.0), 1e-15));
        let d = p.diff(0);
        assert!(close(d.eval(&[5.0, 1.0]).unwrap(), C::new(0.25, 0.0), 1e-15));
    }
}
