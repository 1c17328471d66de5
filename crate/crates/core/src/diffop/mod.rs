//! Linear differential operators `Σ_a c_a(q) ∂^a` in normal form.
//!
//! Coefficients are kept to the left of the derivatives and stored in the
//! canonical [`Poly`] form, so collecting terms after composition is exact up
//! to identities between functions of different arguments. Such residual
//! identities are settled numerically by [`DiffOp::residual_zero`].
//!
//! Momenta follow `p_j = −i ∂_j`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::coeffexpr::{Expr, Poly};
use crate::error::{Error, Result};

/// Highest total order any operator may reach.
pub const MAX_ORDER: usize = 8;

type C = Complex64;

/// Exponent vector of a monomial in `∂_1 … ∂_d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, j: usize) -> Self {
        let mut v = vec![0; dim];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn from_slice(a: &[u8]) -> Self {
        MultiIndex(a.to_vec())
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&x| x as usize).sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn sub(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// All `γ ≤ self` componentwise, paired with `Π_j C(a_j, γ_j)`.
    fn lower_sets(&self) -> Vec<(MultiIndex, f64)> {
        let mut out = vec![(Vec::with_capacity(self.0.len()), 1.0)];
        for &aj in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (aj as usize + 1));
            for (prefix, w) in &out {
                for g in 0..=aj {
                    let mut p: Vec<u8> = prefix.clone();
                    p.push(g);
                    next.push((p, w * binomial(aj, g)));
                }
            }
            out = next;
        }
        out.into_iter().map(|(v, w)| (MultiIndex(v), w)).collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

fn binomial(n: u8, k: u8) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffOp {
    dim: usize,
    terms: BTreeMap<MultiIndex, Poly>,
}

/// Outcome of a numerical zero test of an operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCheck {
    /// Largest coefficient modulus over all points, unnormalized.
    pub residual_max: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Where `residual_max` was attained.
    pub worst: Option<(MultiIndex, Vec<f64>)>,
}

impl DiffOp {
    pub fn zero(dim: usize) -> Self {
        DiffOp {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        DiffOp::multiplication(dim, Poly::one())
    }

    /// Multiplication by a function.
    pub fn multiplication(dim: usize, f: Poly) -> Self {
        let mut op = DiffOp::zero(dim);
        op.add_term(MultiIndex::zero(dim), f);
        op
    }

    pub fn multiplication_expr(dim: usize, f: &Expr) -> Self {
        DiffOp::multiplication(dim, f.to_poly())
    }

    pub fn partial(dim: usize, j: usize) -> Self {
        let mut op = DiffOp::zero(dim);
        op.add_term(MultiIndex::unit(dim, j), Poly::one());
        op
    }

    /// `p_j = −i ∂_j`.
    pub fn momentum(dim: usize, j: usize) -> Self {
        let mut op = DiffOp::zero(dim);
        op.add_term(MultiIndex::unit(dim, j), Poly::constant(C::new(0.0, -1.0)));
        op
    }

    /// `f(q) p^a` with the function to the left.
    pub fn p_monomial(dim: usize, a: &[u8], f: Poly) -> Self {
        let idx = MultiIndex::from_slice(a);
        let k = idx.order();
        let phase = C::new(0.0, -1.0).powi(k as i32);
        let mut op = DiffOp::zero(dim);
        op.add_term(idx, f.scale(phase));
        op
    }

    /// `Σ_j p_j^k`.
    pub fn power_sum(dim: usize, k: u8) -> Self {
        let mut op = DiffOp::zero(dim);
        for j in 0..dim {
            let mut a = vec![0u8; dim];
            a[j] = k;
            op.add_assign(&DiffOp::p_monomial(dim, &a, Poly::one()));
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.terms.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Poly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, a: &[u8]) -> Option<&Poly> {
        self.terms.get(&MultiIndex::from_slice(a))
    }

    pub fn coeff_expr(&self, a: &[u8]) -> Expr {
        self.coeff(a).map_or(Expr::real(0.0), Poly::to_expr)
    }

    fn add_term(&mut self, a: MultiIndex, c: Poly) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&a) {
            Some(existing) => {
                existing.add_scaled(&c, C::one());
                if existing.is_zero() {
                    self.terms.remove(&a);
                }
            }
            None => {
                self.terms.insert(a, c);
            }
        }
    }

    fn check_dim(&self, other: &DiffOp) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    fn add_assign(&mut self, other: &DiffOp) {
        for (a, c) in &other.terms {
            self.add_term(a.clone(), c.clone());
        }
    }

    pub fn add(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check_dim(other)?;
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    pub fn sub(&self, other: &DiffOp) -> Result<DiffOp> {
        self.add(&other.scale(-C::one()))
    }

    /// `self + factor · other`.
    pub fn add_scaled(&mut self, other: &DiffOp, factor: C) -> Result<()> {
        self.check_dim(other)?;
        for (a, c) in &other.terms {
            self.add_term(a.clone(), c.scale(factor));
        }
        Ok(())
    }

    pub fn scale(&self, factor: C) -> DiffOp {
        let mut out = DiffOp::zero(self.dim);
        if factor.is_zero() {
            return out;
        }
        for (a, c) in &self.terms {
            out.add_term(a.clone(), c.scale(factor));
        }
        out
    }

    pub fn scale_real(&self, factor: f64) -> DiffOp {
        self.scale(C::new(factor, 0.0))
    }

    /// Left multiplication by a function.
    pub fn left_mul(&self, f: &Poly) -> DiffOp {
        let mut out = DiffOp::zero(self.dim);
        for (a, c) in &self.terms {
            out.add_term(a.clone(), f.mul(c));
        }
        out
    }

    /// `self ∘ other`, expanded with the Leibniz rule.
    pub fn compose(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check_dim(other)?;
        let total = self.order() + other.order();
        if !self.is_zero() && !other.is_zero() && total > MAX_ORDER {
            return Err(Error::OrderTooHigh(total));
        }
        let mut derivs: HashMap<(MultiIndex, MultiIndex), Poly> = HashMap::new();
        let mut out = DiffOp::zero(self.dim);
        for (a, ca) in &self.terms {
            for (gamma, weight) in a.lower_sets() {
                let rest = a.sub(&gamma);
                for (b, db) in &other.terms {
                    let d = derivative_cached(&mut derivs, b, db, &gamma);
                    if d.is_zero() {
                        continue;
                    }
                    let coeff = ca.mul(&d).scale(C::new(weight, 0.0));
                    out.add_term(rest.add(b), coeff);
                }
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &DiffOp) -> Result<DiffOp> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    /// `w ∘ self ∘ w⁻¹`.
    pub fn conjugate(&self, w: &Poly) -> Result<DiffOp> {
        let winv = w.pow(num_rational::Rational64::from_integer(-1));
        let left = DiffOp::multiplication(self.dim, w.clone());
        let right = DiffOp::multiplication(self.dim, winv);
        left.compose(&self.compose(&right)?)
    }

    /// Action on a function.
    pub fn apply(&self, f: &Poly) -> Result<Poly> {
        if let Some(j) = f.max_var() {
            if j >= self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: j + 1,
                });
            }
        }
        let mut out = Poly::zero();
        for (a, c) in &self.terms {
            let mut d = f.clone();
            for (j, &k) in a.as_slice().iter().enumerate() {
                for _ in 0..k {
                    d = d.diff(j);
                }
            }
            out.add_scaled(&c.mul(&d), C::one());
        }
        Ok(out)
    }

    /// `Σ_a c_a(s q) Π_j (Σ_i s_ji ∂_i)^{a_j}` for an orthogonal `s`.
    pub fn pushforward_orthogonal(&self, s: &DMatrix<f64>) -> Result<DiffOp> {
        if s.nrows() != self.dim || s.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: s.nrows(),
            });
        }
        let dev = (s.transpose() * s - DMatrix::<f64>::identity(self.dim, self.dim)).amax();
        if dev > 1e-12 {
            return Err(Error::NotOrthogonal(dev));
        }
        let forms: Vec<Poly> = (0..self.dim)
            .map(|j| Poly::linear(&(0..self.dim).map(|i| s[(j, i)]).collect::<Vec<_>>()))
            .collect();
        let rotated: Vec<BTreeMap<MultiIndex, f64>> = (0..self.dim)
            .map(|j| {
                (0..self.dim)
                    .filter(|&i| s[(j, i)] != 0.0)
                    .map(|i| (MultiIndex::unit(self.dim, i), s[(j, i)]))
                    .collect()
            })
            .collect();
        let mut out = DiffOp::zero(self.dim);
        for (a, c) in &self.terms {
            let mut symbol: BTreeMap<MultiIndex, f64> = BTreeMap::new();
            symbol.insert(MultiIndex::zero(self.dim), 1.0);
            for (j, &k) in a.as_slice().iter().enumerate() {
                for _ in 0..k {
                    symbol = poly_mul(&symbol, &rotated[j]);
                }
            }
            let c_s = c.substitute(&forms);
            for (b, w) in symbol {
                if w != 0.0 {
                    out.add_term(b, c_s.scale(C::new(w, 0.0)));
                }
            }
        }
        Ok(out)
    }

    /// `Σ_a c_a(λ q) λ^{−|a|} ∂^a`, the operator transported by `q ↦ λq`.
    pub fn grade_scale(&self, lambda: f64) -> DiffOp {
        let forms: Vec<Poly> = (0..self.dim)
            .map(|j| {
                let mut v = vec![0.0; self.dim];
                v[j] = lambda;
                Poly::linear(&v)
            })
            .collect();
        let mut out = DiffOp::zero(self.dim);
        for (a, c) in &self.terms {
            let w = lambda.powi(-(a.order() as i32));
            out.add_term(a.clone(), c.substitute(&forms).scale(C::new(w, 0.0)));
        }
        out
    }

    /// Coefficient values at a point.
    pub fn eval_coeffs(&self, q: &[f64]) -> Result<Vec<(MultiIndex, C)>> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: q.len(),
            });
        }
        self.terms
            .iter()
            .map(|(a, c)| Ok((a.clone(), c.eval(q)?)))
            .collect()
    }

    /// Largest coefficient modulus over the points, with its location.
    pub fn max_coeff_abs(&self, points: &[Vec<f64>]) -> Result<(f64, Option<(MultiIndex, Vec<f64>)>)> {
        let mut best = 0.0;
        let mut worst = None;
        for q in points {
            for (a, v) in self.eval_coeffs(q)? {
                let m = v.norm();
                if m.is_nan() || m > best || (worst.is_none() && m >= best) {
                    best = if m.is_nan() { f64::INFINITY } else { m };
                    worst = Some((a, q.clone()));
                }
            }
        }
        Ok((best, worst))
    }

    /// Pass when every coefficient is at most `tolerance · scale` in modulus
    /// at every point.
    pub fn residual_zero(&self, points: &[Vec<f64>], tolerance: f64, scale: f64) -> Result<ZeroCheck> {
        let (residual_max, worst) = self.max_coeff_abs(points)?;
        Ok(ZeroCheck {
            residual_max,
            scale,
            tolerance,
            pass: residual_max <= tolerance * scale,
            worst,
        })
    }

    /// Pretty form in momentum notation: `coefficient · p^a` per line.
    pub fn display_p(&self) -> String {
        let mut lines = Vec::new();
        for (a, c) in &self.terms {
            let k = a.order();
            let to_p = C::new(0.0, 1.0).powi(k as i32);
            let coeff = c.scale(to_p).to_expr();
            let mono: Vec<String> = a
                .as_slice()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| if e == 1 { format!("p{j}") } else { format!("p{j}^{e}") })
                .collect();
            let mono = if mono.is_empty() { "1".to_string() } else { mono.join(" ") };
            lines.push(format!("{coeff} * {mono}"));
        }
        if lines.is_empty() {
            "0".into()
        } else {
            lines.join("\n")
        }
    }
}

fn derivative_cached(
    cache: &mut HashMap<(MultiIndex, MultiIndex), Poly>,
    b: &MultiIndex,
    db: &Poly,
    gamma: &MultiIndex,
) -> Poly {
    if gamma.order() == 0 {
        return db.clone();
    }
    let key = (b.clone(), gamma.clone());
    if let Some(p) = cache.get(&key) {
        return p.clone();
    }
    let j = gamma.as_slice().iter().rposition(|&x| x > 0).unwrap();
    let mut lower = gamma.clone();
    lower.0[j] -= 1;
    let d = derivative_cached(cache, b, db, &lower).diff(j);
    cache.insert(key, d.clone());
    d
}

fn poly_mul(a: &BTreeMap<MultiIndex, f64>, b: &BTreeMap<MultiIndex, f64>) -> BTreeMap<MultiIndex, f64> {
    let mut out: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for (x, cx) in a {
        for (y, cy) in b {
            *out.entry(x.add(y)).or_insert(0.0) += cx * cy;
        }
    }
    out
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (a, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "d{a}: {}", c.to_expr())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffexpr::PrimKind;

    fn re(x: f64) -> C {
        C::new(x, 0.0)
    }

    #[test]
    fn derivative_times_multiplication() {
        // ∂ ∘ q = q ∂ + 1
        let d = DiffOp::partial(1, 0);
        let q = DiffOp::multiplication(1, Poly::var(0));
        let c = d.compose(&q).unwrap();
        assert_eq!(c.coeff(&[1]), Some(&Poly::var(0)));
        assert_eq!(c.coeff(&[0]), Some(&Poly::one()));
        let comm = d.commutator(&q).unwrap();
        assert_eq!(comm, DiffOp::identity(1));
    }

    #[test]
    fn canonical_commutation() {
        // [q_j, p_k] = i δ_jk
        for j in 0..2 {
            for k in 0..2 {
                let q = DiffOp::multiplication(2, Poly::var(j));
                let p = DiffOp::momentum(2, k);
                let c = q.commutator(&p).unwrap();
                if j == k {
                    assert_eq!(c, DiffOp::identity(2).scale(C::new(0.0, 1.0)));
                } else {
                    assert!(c.is_zero());
                }
            }
        }
    }

    #[test]
    fn apply_matches_composition() {
        let f = Expr::prim(PrimKind::Sinh, Expr::linear(&[1.0, 2.0])).to_poly();
        let a = DiffOp::p_monomial(2, &[1, 1], Poly::var(0));
        let b = DiffOp::p_monomial(2, &[2, 0], Poly::csch(Poly::var(1)));
        let ab = a.compose(&b).unwrap();
        let lhs = ab.apply(&f).unwrap();
        let rhs = a.apply(&b.apply(&f).unwrap()).unwrap();
        for q in [[0.3, 0.7], [1.1, -0.4]] {
            let d = lhs.eval(&q).unwrap() - rhs.eval(&q).unwrap();
            assert!(d.norm() < 1e-10 * (1.0 + lhs.eval(&q).unwrap().norm()));
        }
    }

    #[test]
    fn order_limit() {
        let a = DiffOp::power_sum(1, 5);
        let b = DiffOp::power_sum(1, 4);
        assert!(matches!(a.compose(&b), Err(Error::OrderTooHigh(9))));
        assert!(DiffOp::power_sum(1, 4).compose(&b).is_ok());
    }

    #[test]
    fn conjugation_of_derivative() {
        // w ∂ w⁻¹ = ∂ − w'/w
        let w = Poly::sinh(Poly::var(0)).pow(num_rational::Rational64::new(3, 2));
        let c = DiffOp::partial(1, 0).conjugate(&w).unwrap();
        assert_eq!(c.coeff(&[1]), Some(&Poly::one()));
        let v = c.coeff(&[0]).unwrap().eval(&[0.8]).unwrap();
        assert!((v - re(-1.5 / 0.8f64.tanh())).norm() < 1e-14);
    }

    #[test]
    fn pushforward_of_laplacian_is_invariant() {
        let lap = DiffOp::power_sum(2, 2);
        let t = std::f64::consts::FRAC_PI_6;
        let rot = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let pushed = lap.pushforward_orthogonal(&rot).unwrap();
        let diff = pushed.sub(&lap).unwrap();
        let (m, _) = diff.max_coeff_abs(&[vec![0.1, 0.2]]).unwrap();
        assert!(m < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(matches!(lap.pushforward_orthogonal(&bad), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn grade_scale_of_homogeneous_operator() {
        // q⁻² is homogeneous of degree −2, like ∂².
        let h = DiffOp::power_sum(1, 2).add(&DiffOp::multiplication(1, Poly::var(0).pow(num_rational::Rational64::from_integer(-2)))).unwrap();
        let s = h.grade_scale(3.0);
        let d = s.sub(&h.scale_real(1.0 / 9.0)).unwrap();
        let (m, _) = d.max_coeff_abs(&[vec![0.7], vec![1.9]]).unwrap();
        assert!(m < 1e-15);
    }

    #[test]
    fn residual_zero_reports_raw_value() {
        let op = DiffOp::multiplication(1, Poly::real(1e-3));
        let r = op.residual_zero(&[vec![0.5]], 1e-2, 2.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.residual_max, 1e-3);
        let r = op.residual_zero(&[vec![0.5]], 1e-4, 2.0).unwrap();
        assert!(!r.pass);
    }
}
