//! Explicit higher integrals: `I₃, I₄, I₅` and the `J_k` family for `A_{n−1}`,
//! and `I₄` for `B_n, C_n, BC_n, D_n`.
//!
//! A prime on a potential means the derivative with respect to its argument,
//! taken before substitution, so `[x²(2q)]' = V'(2q)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::{c, hamiltonian, laplace_beltrami_radial, radial_delta, xi, ModelSpec, Template};
use crate::coeffexpr::{Poly, XKind};
use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::rootsys::{Family, RootClass};

fn form(n: usize, terms: &[(usize, f64)]) -> Poly {
    let mut v = vec![0.0; n];
    for &(j, x) in terms {
        v[j] += x;
    }
    Poly::linear(&v)
}

fn minus(n: usize, k: usize, l: usize) -> Poly {
    form(n, &[(k, 1.0), (l, -1.0)])
}

fn plus(n: usize, k: usize, l: usize) -> Poly {
    form(n, &[(k, 1.0), (l, 1.0)])
}

fn exps(n: usize, pairs: &[(usize, u8)]) -> Vec<u8> {
    let mut a = vec![0u8; n];
    for &(j, e) in pairs {
        a[j] += e;
    }
    a
}

fn ordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |k| (0..n).filter(move |&l| l != k).map(move |l| (k, l)))
}

/// `Σ_{k≠l} f(k, l) p^{e(k, l)}` with the function on the left.
fn pair_sum<F, E>(n: usize, mut f: F, e: E) -> Result<DiffOp>
where
    F: FnMut(usize, usize) -> Result<Poly>,
    E: Fn(usize, usize) -> Vec<(usize, u8)>,
{
    let mut out = DiffOp::zero(n);
    for (k, l) in ordered_pairs(n) {
        let coeff = f(k, l)?;
        out.add_scaled(&DiffOp::p_monomial(n, &exps(n, &e(k, l)), coeff), c(1.0))?;
    }
    Ok(out)
}

/// `i p^a` as an operator built from a real function.
fn times_i(op: DiffOp) -> DiffOp {
    op.scale(Complex64::new(0.0, 1.0))
}

fn check_a(n: usize, xk: &XKind) -> Result<()> {
    if n < 2 {
        return Err(Error::UnsupportedSystem {
            family: Family::A,
            rank: n,
        });
    }
    reject_harmonic(xk)
}

fn reject_harmonic(xk: &XKind) -> Result<()> {
    xk.validated()?;
    if xk.kind == crate::coeffexpr::PotentialKind::RationalHarmonic {
        return Err(Error::OutOfScope("no higher integrals are built for the harmonic kind".into()));
    }
    Ok(())
}

/// `Σp³ + 3g² Σ_{k≠l} x²(q_k−q_l) p_l`.
pub fn template_i3_a(n: usize, xk: &XKind, g2: f64) -> Result<Template> {
    check_a(n, xk)?;
    let mut t = Template::new(n);
    t.push("p3", 1.0, DiffOp::power_sum(n, 3));
    t.push(
        "x2_pl",
        3.0 * g2,
        pair_sum(n, |k, l| xk.v_derivative(&minus(n, k, l), 0), |_, l| vec![(l, 1)])?,
    );
    Ok(t)
}

/// Square of the matrix `X_kl = x(q_k − q_l)`, `X_kk = 0`.
fn x_matrix_square(n: usize, xk: &XKind) -> Result<Vec<Vec<Poly>>> {
    let mut x = vec![vec![Poly::zero(); n]; n];
    for (k, l) in ordered_pairs(n) {
        x[k][l] = xk.x_power(&minus(n, k, l), 1)?;
    }
    let mut sq = vec![vec![Poly::zero(); n]; n];
    for k in 0..n {
        for l in 0..n {
            for m in (0..n).filter(|&m| m != k && m != l) {
                sq[k][l] = sq[k][l].add(&x[k][m].mul(&x[m][l]));
            }
        }
    }
    Ok(sq)
}

/// Diagonal of `X⁴`.
fn x4_diagonal(n: usize, xk: &XKind) -> Result<Vec<Poly>> {
    let sq = x_matrix_square(n, xk)?;
    Ok((0..n)
        .map(|l| (0..n).fold(Poly::zero(), |acc, m| acc.add(&sq[l][m].mul(&sq[m][l]))))
        .collect())
}

/// `Σp⁴ + 2g² Σ x²(2p_l² + p_k p_l) + g⁴ tr X⁴ + g² Σ {2[x²]' i p_l − [x²]''}`.
///
/// For `n = 2` the trace is `Σ_{k≠l} x⁴`; from `n = 3` on it also carries
/// the products `x²(q_k−q_l) x²(q_k−q_m)`.
pub fn template_i4_a(n: usize, xk: &XKind, g2: f64) -> Result<Template> {
    check_a(n, xk)?;
    let v = |k, l, d| xk.v_derivative(&minus(n, k, l), d);
    let mut t = Template::new(n);
    t.push("p4", 1.0, DiffOp::power_sum(n, 4));
    t.push("x2_pl2", 4.0 * g2, pair_sum(n, |k, l| v(k, l, 0), |_, l| vec![(l, 2)])?);
    t.push("x2_pkpl", 2.0 * g2, pair_sum(n, |k, l| v(k, l, 0), |k, l| vec![(k, 1), (l, 1)])?);
    let trace = x4_diagonal(n, xk)?.iter().fold(Poly::zero(), |acc, d| acc.add(d));
    t.push("x4", g2 * g2, DiffOp::multiplication(n, trace));
    t.push("dx2_ipl", 2.0 * g2, times_i(pair_sum(n, |k, l| v(k, l, 1), |_, l| vec![(l, 1)])?));
    t.push("ddx2", -g2, pair_sum(n, |k, l| v(k, l, 2), |_, _| vec![])?);
    Ok(t)
}

/// `Σp⁵ + 5g² Σ x²(p_l³ + p_k² p_l) + 5g⁴ Σ_l (X⁴)_ll p_l + 5g² Σ {[x²]' i p_l² − [x²]'' p_l}`.
pub fn template_i5_a(n: usize, xk: &XKind, g2: f64) -> Result<Template> {
    check_a(n, xk)?;
    let v = |k, l, d| xk.v_derivative(&minus(n, k, l), d);
    let mut t = Template::new(n);
    t.push("p5", 1.0, DiffOp::power_sum(n, 5));
    let cubic = pair_sum(n, |k, l| v(k, l, 0), |_, l| vec![(l, 3)])?
        .add(&pair_sum(n, |k, l| v(k, l, 0), |k, l| vec![(k, 2), (l, 1)])?)?;
    t.push("x2_p3", 5.0 * g2, cubic);
    let mut x4_pl = DiffOp::zero(n);
    for (l, d) in x4_diagonal(n, xk)?.into_iter().enumerate() {
        x4_pl.add_scaled(&DiffOp::p_monomial(n, &exps(n, &[(l, 1)]), d), c(1.0))?;
    }
    t.push("x4_pl", 5.0 * g2 * g2, x4_pl);
    t.push("dx2_ipl2", 5.0 * g2, times_i(pair_sum(n, |k, l| v(k, l, 1), |_, l| vec![(l, 2)])?));
    t.push("ddx2_pl", -5.0 * g2, pair_sum(n, |k, l| v(k, l, 2), |_, l| vec![(l, 1)])?);
    Ok(t)
}

pub fn integral_i3_a(n: usize, xk: &XKind, g2: f64) -> Result<DiffOp> {
    Ok(template_i3_a(n, xk, g2)?.assemble())
}

pub fn integral_i4_a(n: usize, xk: &XKind, g2: f64) -> Result<DiffOp> {
    Ok(template_i4_a(n, xk, g2)?.assemble())
}

pub fn integral_i5_a(n: usize, xk: &XKind, g2: f64) -> Result<DiffOp> {
    Ok(template_i5_a(n, xk, g2)?.assemble())
}

/// Fourth-order integral for `B_n, C_n, BC_n, D_n` with couplings
/// `g² = edge`, `g₁² = short`, `g₂² = long` (zero where the class is absent).
pub fn template_i4_b(spec: &ModelSpec) -> Result<Template> {
    let rs = &spec.rs;
    if !matches!(rs.family, Family::B | Family::C | Family::BC | Family::D) {
        return Err(Error::Invalid(format!(
            "the B-type fourth-order integral needs family B, C, BC or D, got {}",
            rs.family
        )));
    }
    if rs.rank < 2 {
        return Err(Error::UnsupportedSystem {
            family: rs.family,
            rank: rs.rank,
        });
    }
    let xk = &spec.xkind;
    reject_harmonic(xk)?;
    let n = rs.rank;
    let classes = rs.classes();
    let coupling = |class| {
        if classes.contains(&class) {
            spec.couplings.get(class)
        } else {
            0.0
        }
    };
    let (g2, g12, g22) = (
        coupling(RootClass::Edge),
        coupling(RootClass::Short),
        coupling(RootClass::Long),
    );
    let edge = |k, l, d| -> Result<Poly> {
        Ok(xk.v_derivative(&minus(n, k, l), d)?.add(&xk.v_derivative(&plus(n, k, l), d)?))
    };
    let edge_diff = |k, l| -> Result<Poly> {
        Ok(xk.v_derivative(&minus(n, k, l), 0)?.sub(&xk.v_derivative(&plus(n, k, l), 0)?))
    };
    let single = |scale: f64, d: usize, e: u8| -> Result<DiffOp> {
        let mut out = DiffOp::zero(n);
        for l in 0..n {
            let f = xk.v_derivative(&form(n, &[(l, scale)]), d)?;
            out.add_scaled(&DiffOp::p_monomial(n, &exps(n, &[(l, e)]), f), c(1.0))?;
        }
        Ok(out)
    };

    let single_product = |s1: f64, s2: f64| -> Result<DiffOp> {
        let mut out = Poly::zero();
        for l in 0..n {
            let f = xk.v_derivative(&form(n, &[(l, s1)]), 0)?;
            out = out.add(&f.mul(&xk.v_derivative(&form(n, &[(l, s2)]), 0)?));
        }
        Ok(DiffOp::multiplication(n, out))
    };

    let mut t = Template::new(n);
    t.push("p4", 2.0, DiffOp::power_sum(n, 4));
    t.push("edge_pl2", 8.0 * g2, pair_sum(n, |k, l| edge(k, l, 0), |_, l| vec![(l, 2)])?);
    t.push("short_pl2", 8.0 * g12, single(1.0, 0, 2)?);
    t.push("long_pl2", 8.0 * g22, single(2.0, 0, 2)?);
    t.push("edge_pkpl", 4.0 * g2, pair_sum(n, edge_diff, |k, l| vec![(k, 1), (l, 1)])?);
    let edge_d1 = |k, l| -> Result<Poly> {
        Ok(xk.v_derivative(&minus(n, k, l), 1)?.sub(&xk.v_derivative(&plus(n, k, l), 1)?))
    };
    t.push("edge_d1", 4.0 * g2, times_i(pair_sum(n, edge_d1, |_, l| vec![(l, 1)])?));
    t.push("edge_quartic", g2 * g2, DiffOp::multiplication(n, edge_quartic(n, xk)?));
    t.push("short_quartic", 8.0 * g12 * g12, single_product(1.0, 1.0)?);
    t.push("long_quartic", 8.0 * g22 * g22, single_product(2.0, 2.0)?);
    t.push("short_long", 16.0 * g12 * g22, single_product(1.0, 2.0)?);
    t.push("edge_short", 8.0 * g2 * g12, DiffOp::multiplication(n, edge_short(n, xk)?));
    t.push("edge_long", 8.0 * g2 * g22, DiffOp::multiplication(n, edge_long(n, xk)?));
    t.push("short_d1", -8.0 * g12, times_i(single(1.0, 1, 1)?));
    t.push("long_d1", -16.0 * g22, times_i(single(2.0, 1, 1)?));
    t.push("edge_d2", -2.0 * g2, pair_sum(n, |k, l| edge(k, l, 2), |_, _| vec![])?);
    t.push("short_d2", -4.0 * g12, single(1.0, 2, 0)?);
    t.push("long_d2", -16.0 * g22, single(2.0, 2, 0)?);
    Ok(t)
}

/// `Σ_{k≠l} [2(V₋² + V₊²) + 12 V₋V₊] + 4 Σ_{k,l,m distinct} (V₋+V₊)_{kl} (V₋+V₊)_{km}`
/// with `V∓ = x²(q_k ∓ q_l)`.
fn edge_quartic(n: usize, xk: &XKind) -> Result<Poly> {
    let mut out = Poly::zero();
    let mut sums = vec![vec![Poly::zero(); n]; n];
    for (k, l) in ordered_pairs(n) {
        let vm = xk.v_derivative(&minus(n, k, l), 0)?;
        let vp = xk.v_derivative(&plus(n, k, l), 0)?;
        let squares = vm.mul(&vm).add(&vp.mul(&vp)).scale(c(2.0));
        out = out.add(&squares).add(&vm.mul(&vp).scale(c(12.0)));
        sums[k][l] = vm.add(&vp);
    }
    for k in 0..n {
        for l in (0..n).filter(|&l| l != k) {
            for m in (0..n).filter(|&m| m != k && m != l) {
                out = out.add(&sums[k][l].mul(&sums[k][m]).scale(c(4.0)));
            }
        }
    }
    Ok(out)
}

/// `Σ_{k≠l} [x²(q_l)(V₋+V₊) − 2 x²(q_k) x(q_k−q_l) x(q_k+q_l)]`.
fn edge_short(n: usize, xk: &XKind) -> Result<Poly> {
    let mut out = Poly::zero();
    for (k, l) in ordered_pairs(n) {
        let e = xk.v_derivative(&minus(n, k, l), 0)?.add(&xk.v_derivative(&plus(n, k, l), 0)?);
        let cross = xk.x_power(&minus(n, k, l), 1)?.mul(&xk.x_power(&plus(n, k, l), 1)?);
        out = out
            .add(&xk.v_derivative(&form(n, &[(l, 1.0)]), 0)?.mul(&e))
            .add(&xk.v_derivative(&form(n, &[(k, 1.0)]), 0)?.mul(&cross).scale(c(-2.0)));
    }
    Ok(out)
}

/// `Σ_{k≠l} [2 x²(2q_l)(V₋+V₊) − V₋V₊]`.
fn edge_long(n: usize, xk: &XKind) -> Result<Poly> {
    let mut out = Poly::zero();
    for (k, l) in ordered_pairs(n) {
        let vm = xk.v_derivative(&minus(n, k, l), 0)?;
        let vp = xk.v_derivative(&plus(n, k, l), 0)?;
        out = out
            .add(&xk.v_derivative(&form(n, &[(l, 2.0)]), 0)?.mul(&vm.add(&vp)).scale(c(2.0)))
            .sub(&vm.mul(&vp));
    }
    Ok(out)
}

pub fn integral_i4_b(spec: &ModelSpec) -> Result<DiffOp> {
    Ok(template_i4_b(spec)?.assemble())
}

/// Partial matchings of `0..n`: pairs and the unmatched rest.
fn matchings(items: &[usize]) -> Vec<(Vec<(usize, usize)>, Vec<usize>)> {
    let Some((&first, rest)) = items.split_first() else {
        return vec![(Vec::new(), Vec::new())];
    };
    let mut out = Vec::new();
    for (mut pairs, mut singles) in matchings(rest) {
        singles.insert(0, first);
        out.push((std::mem::take(&mut pairs), singles));
    }
    for (i, &partner) in rest.iter().enumerate() {
        let mut others = rest.to_vec();
        others.remove(i);
        for (mut pairs, singles) in matchings(&others) {
            pairs.insert(0, (first, partner));
            out.push((pairs, singles));
        }
    }
    out
}

/// `exp{−(g²/2) Σ_{k≠l} x²(q_k−q_l) ∂_{p_k} ∂_{p_l}} p₁⋯p_n`, expanded as a sum
/// over partial matchings `M` of `Π_M (−g² x²(q_k−q_l)) Π_{m∉M} p_m`.
pub fn j_top(n: usize, xk: &XKind, g2: f64) -> Result<DiffOp> {
    check_a(n, xk)?;
    let idx: Vec<usize> = (0..n).collect();
    let mut out = DiffOp::zero(n);
    for (pairs, singles) in matchings(&idx) {
        let mut coeff = Poly::one();
        for &(k, l) in &pairs {
            coeff = coeff.mul(&xk.v_derivative(&minus(n, k, l), 0)?.scale(c(-g2)));
        }
        if coeff.is_zero() {
            continue;
        }
        let e: Vec<(usize, u8)> = singles.iter().map(|&m| (m, 1)).collect();
        out.add_scaled(&DiffOp::p_monomial(n, &exps(n, &e), coeff), c(1.0))?;
    }
    Ok(out)
}

/// `J_{k−1} = i/(k−n−1) [Q, J_k]` with `Q = Σ q_j`.
pub fn j_lower(jk: &DiffOp, k: usize, n: usize) -> Result<DiffOp> {
    if k < 2 || k > n {
        return Err(Error::Invalid(format!("J_lower needs 2 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let q = DiffOp::multiplication(n, Poly::linear(&vec![1.0; n]));
    let factor = Complex64::new(0.0, 1.0 / (k as f64 - n as f64 - 1.0));
    Ok(q.commutator(jk)?.scale(factor))
}

/// `[J_1, …, J_n]`.
pub fn j_family(n: usize, xk: &XKind, g2: f64) -> Result<Vec<DiffOp>> {
    let mut out = vec![j_top(n, xk, g2)?];
    for k in (2..=n).rev() {
        let next = j_lower(out.last().unwrap(), k, n)?;
        out.push(next);
    }
    out.reverse();
    Ok(out)
}

/// Operators that can be requested by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntegralName {
    H,
    B,
    Xi,
    I3,
    I4,
    I5,
    I4B,
    J(usize),
    Delta(usize),
}

impl fmt::Display for IntegralName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegralName::H => f.write_str("H"),
            IntegralName::B => f.write_str("B"),
            IntegralName::Xi => f.write_str("xi"),
            IntegralName::I3 => f.write_str("I3"),
            IntegralName::I4 => f.write_str("I4"),
            IntegralName::I5 => f.write_str("I5"),
            IntegralName::I4B => f.write_str("I4B"),
            IntegralName::J(k) => write!(f, "J{k}"),
            IntegralName::Delta(k) => write!(f, "Delta{k}"),
        }
    }
}

impl FromStr for IntegralName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let index = |rest: &str| {
            rest.parse::<usize>()
                .map_err(|_| Error::Invalid(format!("unknown operator {s:?}")))
        };
        Ok(match s {
            "H" => IntegralName::H,
            "B" => IntegralName::B,
            "xi" | "Xi" => IntegralName::Xi,
            "I3" => IntegralName::I3,
            "I4" => IntegralName::I4,
            "I5" => IntegralName::I5,
            "I4B" | "I4_B" => IntegralName::I4B,
            _ if s.starts_with("Delta") => IntegralName::Delta(index(&s[5..])?),
            _ if s.starts_with('J') => IntegralName::J(index(&s[1..])?),
            _ => return Err(Error::Invalid(format!("unknown operator {s:?}"))),
        })
    }
}

impl IntegralName {
    /// Whether the operator is meaningful for the family.
    pub fn supports(&self, family: Family) -> bool {
        match self {
            IntegralName::H | IntegralName::B | IntegralName::Xi => true,
            IntegralName::I3 | IntegralName::I4 | IntegralName::I5 | IntegralName::J(_) => family == Family::A,
            IntegralName::I4B => matches!(family, Family::B | Family::C | Family::BC | Family::D),
            IntegralName::Delta(k) => match family {
                Family::A => *k >= 2,
                Family::B | Family::C | Family::BC | Family::D => *k == 2 || *k == 4,
                Family::G => *k == 2,
            },
        }
    }

    /// Build the operator. `Xi` is returned as a multiplication operator.
    pub fn build(&self, spec: &ModelSpec) -> Result<DiffOp> {
        let family = spec.rs.family;
        if !self.supports(family) {
            return Err(Error::Invalid(format!("operator {self} is not defined for family {family}")));
        }
        let n = spec.dim();
        let g2 = spec.couplings.edge;
        let xk = &spec.xkind;
        match self {
            IntegralName::H => hamiltonian(spec),
            IntegralName::B => laplace_beltrami_radial(spec),
            IntegralName::Xi => Ok(DiffOp::multiplication(n, xi(spec)?)),
            IntegralName::I3 => integral_i3_a(n, xk, g2),
            IntegralName::I4 => integral_i4_a(n, xk, g2),
            IntegralName::I5 => integral_i5_a(n, xk, g2),
            IntegralName::I4B => integral_i4_b(spec),
            IntegralName::J(k) => {
                if *k < 1 || *k > n {
                    return Err(Error::Invalid(format!("J{k} needs 1 ≤ k ≤ {n}")));
                }
                Ok(j_family(n, xk, g2)?.swap_remove(k - 1))
            }
            IntegralName::Delta(2) => laplace_beltrami_radial(spec),
            IntegralName::Delta(4) if family != Family::A => radial_delta(&integral_i4_b(spec)?, spec),
            IntegralName::Delta(k) => {
                if *k > n {
                    return Err(Error::Invalid(format!("Delta{k} needs k ≤ {n}")));
                }
                radial_delta(&j_family(n, xk, g2)?.swap_remove(k - 1), spec)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{Region, RootSystem};

    fn points(n: usize, seed: u64) -> Vec<Vec<f64>> {
        RootSystem::build(Family::A, n)
            .unwrap()
            .sample_points(&Region::chamber(), 0.3, seed, 10)
            .unwrap()
    }

    #[test]
    fn free_limits() {
        let xk = XKind::rational();
        assert_eq!(integral_i3_a(2, &xk, 0.0).unwrap(), DiffOp::power_sum(2, 3));
        let mut p123 = DiffOp::p_monomial(3, &[1, 1, 1], Poly::one());
        assert_eq!(j_top(3, &xk, 0.0).unwrap(), p123.clone());
        p123 = p123.scale_real(0.0);
        assert!(p123.is_zero());
    }

    #[test]
    fn j_top_expansions() {
        let xk = XKind::rational();
        let j2 = j_top(2, &xk, 1.5).unwrap();
        let v = xk.v_derivative(&minus(2, 0, 1), 0).unwrap();
        let expected = DiffOp::p_monomial(2, &[1, 1], Poly::one())
            .add(&DiffOp::multiplication(2, v.scale(c(-1.5))))
            .unwrap();
        assert_eq!(j2, expected);

        let j3 = j_top(3, &xk, 1.0).unwrap();
        assert_eq!(j3.terms().count(), 4);
        let c3 = j3.coeff(&[0, 0, 1]).unwrap();
        let q = [3.0, 1.0, 0.0];
        // −x²(q1−q2) p3 = −(1/4)·(−i)
        assert!((c3.eval(&q).unwrap() - Complex64::new(0.0, 0.25)).norm() < 1e-15);
    }

    #[test]
    fn j_lower_gives_total_momentum() {
        let xk = XKind::hyperbolic(1.0);
        let js = j_family(2, &xk, 0.7).unwrap();
        assert_eq!(js[0], DiffOp::power_sum(2, 1));
        let js = j_family(3, &xk, 0.7).unwrap();
        assert_eq!(js[0], DiffOp::power_sum(3, 1));
    }

    #[test]
    fn matchings_are_counted_by_telephone_numbers() {
        for (n, count) in [(1, 1), (2, 2), (3, 4), (4, 10), (5, 26)] {
            let idx: Vec<usize> = (0..n).collect();
            assert_eq!(matchings(&idx).len(), count);
        }
    }

    #[test]
    fn i3_commutes_with_h_for_a2() {
        let rs = RootSystem::build(Family::A, 3).unwrap();
        for xk in [XKind::rational(), XKind::hyperbolic(1.0)] {
            let spec = ModelSpec::explicit(rs.clone(), xk, super::super::CouplingSet::uniform(0.8)).unwrap();
            let h = hamiltonian(&spec).unwrap();
            let i3 = integral_i3_a(3, &xk, 0.8).unwrap();
            let (m, _) = h.commutator(&i3).unwrap().max_coeff_abs(&points(3, 1)).unwrap();
            assert!(m < 1e-9, "{m}");
        }
    }

    fn relative(a: &DiffOp, b: &DiffOp, pts: &[Vec<f64>]) -> f64 {
        let (r, _) = a.commutator(b).unwrap().max_coeff_abs(pts).unwrap();
        let (s, _) = a.compose(b).unwrap().max_coeff_abs(pts).unwrap();
        r / s
    }

    #[test]
    fn a_type_integrals_commute() {
        for n in [3, 4] {
            for xk in [XKind::rational(), XKind::hyperbolic(0.7), XKind::trigonometric(1.0)] {
                let rs = RootSystem::build(Family::A, n).unwrap();
                let spec = ModelSpec::explicit(rs.clone(), xk, super::super::CouplingSet::uniform(0.6)).unwrap();
                let pts = rs.sample_points(&spec.region(), 0.3, 2, 6).unwrap();
                let h = hamiltonian(&spec).unwrap();
                let i4 = integral_i4_a(n, &xk, 0.6).unwrap();
                let i5 = integral_i5_a(n, &xk, 0.6).unwrap();
                assert!(relative(&h, &i4, &pts) < 1e-12);
                assert!(relative(&h, &i5, &pts) < 1e-12);
            }
        }
    }

    #[test]
    fn b_type_quartic_integral_commutes() {
        use super::super::CouplingSet;
        let cases = [(Family::B, 3), (Family::C, 2), (Family::D, 3), (Family::BC, 3)];
        for (family, rank) in cases {
            for xk in [XKind::rational(), XKind::hyperbolic(1.0), XKind::trigonometric(0.8)] {
                let rs = RootSystem::build(family, rank).unwrap();
                let couplings = CouplingSet {
                    edge: 0.7,
                    short: -0.2,
                    long: 1.3,
                };
                let spec = ModelSpec::explicit(rs.clone(), xk, couplings).unwrap();
                let pts = rs.sample_points(&spec.region(), 0.3, 3, 6).unwrap();
                let h = hamiltonian(&spec).unwrap();
                let i4 = integral_i4_b(&spec).unwrap();
                let rel = relative(&h, &i4, &pts);
                assert!(rel < 1e-10, "{family}{rank} {:?}: {rel:e}", xk.kind);
            }
        }
    }

    #[test]
    fn operator_names_round_trip() {
        for s in ["H", "B", "xi", "I3", "I4", "I5", "I4B", "J3", "Delta4"] {
            let n: IntegralName = s.parse().unwrap();
            assert_eq!(n.to_string(), s);
        }
        assert!("K2".parse::<IntegralName>().is_err());
        assert!(!IntegralName::I4B.supports(Family::A));
        assert!(!IntegralName::I3.supports(Family::G));
    }
}
