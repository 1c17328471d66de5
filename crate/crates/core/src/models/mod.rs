//! Hamiltonians, the ground-state factor `ξ`, the radial Laplace–Beltrami
//! operator `B`, and the explicit commuting integrals.
//!
//! All operators use `p_j = −i ∂_j` and `H = ½ Σ p_j² + Σ_{α>0} g_α² V((q, α))`.
//! Integrals are built as a [`Template`]: a list of named pieces with scalar
//! weights, so that individual weights can be refit by
//! [`crate::verify::calibrate`].

mod integrals;

pub use integrals::{
    integral_i3_a, integral_i4_a, integral_i4_b, integral_i5_a, j_family, j_lower, j_top, template_i3_a,
    template_i4_a, template_i4_b, template_i5_a, IntegralName,
};

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::coeffexpr::{PotentialKind, Poly, XKind};
use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::rootsys::{q_to_f64, Family, Region, Root, RootClass, RootSystem};

/// Squared couplings `g_α²` per root class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    /// `g²` on `q_k ± q_l` (or on every root of `A`).
    pub edge: f64,
    /// `g₁²` on `q_l` (short roots of `G2`).
    pub short: f64,
    /// `g₂²` on `2 q_l` (long roots of `G2`).
    pub long: f64,
}

impl CouplingSet {
    pub fn uniform(g2: f64) -> Self {
        CouplingSet {
            edge: g2,
            short: g2,
            long: g2,
        }
    }

    pub fn get(&self, class: RootClass) -> f64 {
        match class {
            RootClass::Edge => self.edge,
            RootClass::Short => self.short,
            RootClass::Long => self.long,
        }
    }

    pub fn set(&mut self, class: RootClass, value: f64) {
        match class {
            RootClass::Edge => self.edge = value,
            RootClass::Short => self.short = value,
            RootClass::Long => self.long = value,
        }
    }

    /// Couplings produced by the stored multiplicities of `rs`.
    pub fn from_group(rs: &RootSystem) -> Self {
        let mut c = CouplingSet::uniform(0.0);
        for (class, g2) in rs.group_couplings() {
            c.set(class, q_to_f64(&g2));
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMode {
    Explicit,
    Group,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub rs: RootSystem,
    pub xkind: XKind,
    pub couplings: CouplingSet,
    pub mode: CouplingMode,
}

impl ModelSpec {
    pub fn explicit(rs: RootSystem, xkind: XKind, couplings: CouplingSet) -> Result<Self> {
        let xkind = xkind.validated()?;
        for class in rs.classes() {
            if !couplings.get(class).is_finite() {
                return Err(Error::Invalid(format!("coupling on {class} roots is not finite")));
            }
        }
        Ok(ModelSpec {
            rs,
            xkind,
            couplings,
            mode: CouplingMode::Explicit,
        })
    }

    /// Couplings derived from the multiplicities stored in `rs`.
    pub fn group(rs: RootSystem, xkind: XKind) -> Result<Self> {
        let couplings = CouplingSet::from_group(&rs);
        let mut spec = ModelSpec::explicit(rs, xkind, couplings)?;
        spec.mode = CouplingMode::Group;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.rs.ambient_dim
    }

    pub fn region(&self) -> Region {
        if self.xkind.periodic() {
            Region::alcove(self.xkind.a)
        } else {
            Region::chamber()
        }
    }

    fn require_ground_state(&self) -> Result<()> {
        match self.xkind.kind {
            PotentialKind::Rational | PotentialKind::Hyperbolic | PotentialKind::Trigonometric => Ok(()),
            _ => Err(Error::OutOfScope(format!(
                "no ground-state factor for the {} kind",
                self.xkind.kind
            ))),
        }
    }
}

pub(crate) fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub(crate) fn root_form(r: &Root) -> Poly {
    Poly::linear(&r.coords_f64())
}

/// `Σ_{α>0} g_α² V((q, α))`.
pub fn potential(spec: &ModelSpec) -> Result<Poly> {
    let mut u = Poly::zero();
    for r in &spec.rs.positive_roots {
        let g2 = spec.couplings.get(r.class);
        if g2 == 0.0 {
            continue;
        }
        u.add_scaled(&spec.xkind.v_derivative(&root_form(r), 0)?, c(g2));
    }
    Ok(u)
}

pub fn hamiltonian(spec: &ModelSpec) -> Result<DiffOp> {
    spec.xkind.validated()?;
    let d = spec.dim();
    let kinetic = DiffOp::power_sum(d, 2).scale_real(0.5);
    kinetic.add(&DiffOp::multiplication(d, potential(spec)?))
}

/// `ξ = Π_{α>0} x((q, α))^{−m_α/2}`.
pub fn xi(spec: &ModelSpec) -> Result<Poly> {
    spec.require_ground_state()?;
    let a = spec.xkind.a;
    let mut out = Poly::one();
    for r in &spec.rs.positive_roots {
        if r.mult == 0 {
            continue;
        }
        let form = root_form(r);
        let base = match spec.xkind.kind {
            PotentialKind::Rational => form,
            PotentialKind::Hyperbolic => Poly::sinh(form.scale(c(a))).scale(c(1.0 / a)),
            PotentialKind::Trigonometric => Poly::sin(form.scale(c(a))).scale(c(1.0 / a)),
            _ => unreachable!(),
        };
        out = out.mul(&base.pow(Rational64::new(r.mult as i64, 2)));
    }
    Ok(out)
}

/// `B = −ξ⁻² Σ_l p_l ξ² p_l`.
pub fn laplace_beltrami_radial(spec: &ModelSpec) -> Result<DiffOp> {
    let d = spec.dim();
    let xi2 = xi(spec)?.pow(Rational64::from_integer(2));
    let xi_m2 = xi2.pow(Rational64::from_integer(-1));
    let mut sum = DiffOp::zero(d);
    for l in 0..d {
        let p = DiffOp::momentum(d, l);
        let inner = p.compose(&DiffOp::multiplication(d, xi2.clone()))?.compose(&p)?;
        sum.add_scaled(&inner, c(1.0))?;
    }
    Ok(sum.left_mul(&xi_m2).scale_real(-1.0))
}

/// The constant added to `B` before conjugating back to `H`: `a²ρ²` for the
/// hyperbolic kind, `−a²ρ²` for the trigonometric kind, and 0 for the
/// rational kind.
pub fn ground_shift(spec: &ModelSpec) -> Result<f64> {
    spec.require_ground_state()?;
    let rho2 = q_to_f64(&spec.rs.rho_sq());
    let a2 = spec.xkind.a * spec.xkind.a;
    Ok(match spec.xkind.kind {
        PotentialKind::Rational => 0.0,
        PotentialKind::Hyperbolic => a2 * rho2,
        PotentialKind::Trigonometric => -a2 * rho2,
        _ => unreachable!(),
    })
}

/// `−½ ξ (B + shift) ξ⁻¹`, the Hamiltonian rebuilt from `B`.
pub fn hamiltonian_from_b(spec: &ModelSpec) -> Result<DiffOp> {
    let d = spec.dim();
    let b = laplace_beltrami_radial(spec)?;
    let shifted = b.add(&DiffOp::identity(d).scale_real(ground_shift(spec)?))?;
    Ok(shifted.conjugate(&xi(spec)?)?.scale_real(-0.5))
}

/// `−½ ξ (B + shift) ξ⁻¹ − H`; order 0 and constant at group couplings.
pub fn conjugation_discrepancy(spec: &ModelSpec) -> Result<DiffOp> {
    hamiltonian_from_b(spec)?.sub(&hamiltonian(spec)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugationOutcome {
    /// Highest derivative order present in the discrepancy.
    pub order: usize,
    /// Mean of the order-0 coefficient over the points.
    pub constant: f64,
    /// Largest deviation of the order-0 coefficient from its mean.
    pub spread: f64,
    /// Largest coefficient modulus of the discrepancy above order 0.
    pub higher_order_max: f64,
    /// Largest modulus of the potential over the points.
    pub scale: f64,
}

pub fn conjugation_check(spec: &ModelSpec, points: &[Vec<f64>]) -> Result<ConjugationOutcome> {
    let d = conjugation_discrepancy(spec)?;
    let zero = vec![0u8; spec.dim()];
    let c0 = d.coeff(&zero).cloned().unwrap_or_else(Poly::zero);
    let u = potential(spec)?;
    let mut vals = Vec::with_capacity(points.len());
    let mut scale: f64 = 0.0;
    let mut higher: f64 = 0.0;
    for q in points {
        vals.push(c0.eval(q)?.re);
        scale = scale.max(u.eval(q)?.norm());
        for (a, v) in d.eval_coeffs(q)? {
            if a.order() > 0 {
                higher = higher.max(v.norm());
            }
        }
    }
    let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
    let spread = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok(ConjugationOutcome {
        order: d.terms().filter(|(_, p)| !p.is_zero()).map(|(a, _)| a.order()).max().unwrap_or(0),
        constant: mean,
        spread,
        higher_order_max: higher,
        scale: scale.max(1.0),
    })
}

/// `⅛ Σ_{α≠β>0} m_α m_β (α, β) [coth q_α coth q_β − 1]` over ordered pairs.
///
/// Returns the value and the sum of the moduli of the individual terms,
/// the natural scale of the cancellation.
pub fn f_eval(rs: &RootSystem, q: &[f64]) -> Result<(f64, f64)> {
    if q.len() != rs.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: rs.ambient_dim,
            got: q.len(),
        });
    }
    let roots = &rs.positive_roots;
    let coth: Vec<f64> = roots
        .iter()
        .map(|r| {
            let t = r.pairing(q);
            let s = t.sinh();
            if s.abs() < crate::coeffexpr::POLE_THRESHOLD {
                Err(Error::Domain {
                    node: "coth",
                    magnitude: s.abs(),
                })
            } else {
                Ok(t.cosh() / s)
            }
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut scale = 0.0;
    for (i, a) in roots.iter().enumerate() {
        for (j, b) in roots.iter().enumerate() {
            if i == j {
                continue;
            }
            let ab = q_to_f64(&crate::rootsys::dot(&a.coords, &b.coords));
            let w = 0.125 * (a.mult as f64) * (b.mult as f64) * ab;
            let term = w * (coth[i] * coth[j] - 1.0);
            total += term;
            scale += term.abs();
        }
    }
    Ok((total, scale))
}

/// `½ Σ_l m_short m_long (coth q_l coth 2q_l − 1)`: what the ordered-pair sum
/// reduces to on `BC_n`, since the `B_n`, `C_n` and `D_n` parts vanish.
pub fn f_reduced_bc(rs: &RootSystem, q: &[f64]) -> Result<f64> {
    if rs.family != Family::BC {
        return Err(Error::Invalid("the reduced form applies to BC systems only".into()));
    }
    let m = rs.multiplicities();
    let w = 0.5 * m.short as f64 * m.long as f64;
    Ok(q.iter()
        .map(|&x| w * ((x.cosh() / x.sinh()) * ((2.0 * x).cosh() / (2.0 * x).sinh()) - 1.0))
        .sum())
}

/// `ξ⁻¹ I ξ`.
pub fn radial_delta(op: &DiffOp, spec: &ModelSpec) -> Result<DiffOp> {
    op.conjugate(&xi(spec)?.pow(Rational64::from_integer(-1)))
}

/// Named scalar-weighted sum of operators.
#[derive(Debug, Clone)]
pub struct Template {
    pub dim: usize,
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub name: String,
    pub weight: f64,
    pub op: DiffOp,
}

impl Template {
    pub fn new(dim: usize) -> Self {
        Template {
            dim,
            pieces: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, weight: f64, op: DiffOp) {
        self.pieces.push(Piece {
            name: name.into(),
            weight,
            op,
        });
    }

    pub fn names(&self) -> Vec<&str> {
        self.pieces.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn piece(&self, name: &str) -> Result<&Piece> {
        self.pieces
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Invalid(format!("template has no piece named {name:?}")))
    }

    pub fn set_weight(&mut self, name: &str, weight: f64) -> Result<()> {
        let p = self
            .pieces
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Invalid(format!("template has no piece named {name:?}")))?;
        p.weight = weight;
        Ok(())
    }

    pub fn weights(&self) -> BTreeMap<String, f64> {
        self.pieces.iter().map(|p| (p.name.clone(), p.weight)).collect()
    }

    pub fn assemble(&self) -> DiffOp {
        let mut out = DiffOp::zero(self.dim);
        for p in &self.pieces {
            out.add_scaled(&p.op, c(p.weight)).expect("pieces share the template dimension");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::Multiplicities;

    fn pts(rs: &RootSystem, region: Region, count: usize) -> Vec<Vec<f64>> {
        rs.sample_points(&region, 0.3, 7, count).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let rs = RootSystem::build(Family::A, 2).unwrap();
        let h = hamiltonian(&ModelSpec::explicit(rs.clone(), XKind::rational(), CouplingSet::uniform(1.0)).unwrap()).unwrap();
        let v = h.apply(&Poly::one()).unwrap().eval(&[1.0, 0.0]).unwrap();
        assert!((v - c(1.0)).norm() < 1e-15);

        let h = hamiltonian(&ModelSpec::explicit(rs, XKind::hyperbolic(1.0), CouplingSet::uniform(1.0)).unwrap()).unwrap();
        let v = h.apply(&Poly::one()).unwrap().eval(&[1.5, 0.5]).unwrap();
        assert!((v.re - 1.0 / 1f64.sinh().powi(2)).abs() < 1e-14);

        let rs = RootSystem::build(Family::B, 2).unwrap();
        let u = potential(&ModelSpec::explicit(rs, XKind::rational(), CouplingSet::uniform(1.0)).unwrap()).unwrap();
        let expected = 1.0 + 1.0 / 9.0 + 0.25 + 1.0;
        assert!((u.eval(&[2.0, 1.0]).unwrap().re - expected).abs() < 1e-14);
    }

    #[test]
    fn xi_examples() {
        let rs = RootSystem::build(Family::A, 2).unwrap();
        let spec = ModelSpec::group(rs, XKind::rational()).unwrap();
        assert!((xi(&spec).unwrap().eval(&[4.0, 0.0]).unwrap().re - 2.0).abs() < 1e-15);
        let rs = RootSystem::build(Family::A, 3).unwrap();
        let spec = ModelSpec::group(rs, XKind::rational()).unwrap();
        assert!((xi(&spec).unwrap().eval(&[3.0, 1.0, 0.0]).unwrap().re - 6f64.sqrt()).abs() < 1e-14);
        let spec = ModelSpec::explicit(RootSystem::build(Family::A, 2).unwrap(), XKind::harmonic(1.0), CouplingSet::uniform(1.0)).unwrap();
        assert!(matches!(xi(&spec), Err(Error::OutOfScope(_))));
    }

    #[test]
    fn b_annihilates_constants_and_matches_finite_differences() {
        let rs = RootSystem::build(Family::A, 2).unwrap();
        let spec = ModelSpec::group(rs, XKind::hyperbolic(1.0)).unwrap();
        let b = laplace_beltrami_radial(&spec).unwrap();
        assert_eq!(b.order(), 2);
        assert!(b.apply(&Poly::one()).unwrap().is_zero());
        // finite-difference oracle on a Gaussian: B f = f'' + 2·½·coth(q1−q2)·(∂1 − ∂2) f
        let f = |x: f64, y: f64| (-(x * x + 0.5 * y * y)).exp();
        for q in [[0.9, 0.2], [1.4, -0.3], [0.4, -0.6]] {
            let h = 1e-4;
            let fxx = (f(q[0] + h, q[1]) - 2.0 * f(q[0], q[1]) + f(q[0] - h, q[1])) / (h * h);
            let fyy = (f(q[0], q[1] + h) - 2.0 * f(q[0], q[1]) + f(q[0], q[1] - h)) / (h * h);
            let fx = (f(q[0] + h, q[1]) - f(q[0] - h, q[1])) / (2.0 * h);
            let fy = (f(q[0], q[1] + h) - f(q[0], q[1] - h)) / (2.0 * h);
            let coth = 1.0 / (q[0] - q[1]).tanh();
            let fd = fxx + fyy + coth * (fx - fy);
            let coeffs: BTreeMap<_, _> = b.eval_coeffs(&q).unwrap().into_iter().collect();
            let get = |a: [u8; 2]| coeffs.get(&crate::diffop::MultiIndex::from_slice(&a)).copied().unwrap_or_default();
            let exact = get([2, 0]) * fxx + get([0, 2]) * fyy + get([1, 0]) * fx + get([0, 1]) * fy;
            assert!((exact.re - fd).abs() < 1e-5, "{} vs {}", exact.re, fd);
        }
    }

    #[test]
    fn conjugation_holds_for_a2_and_bc2() {
        let rs = RootSystem::build(Family::A, 3).unwrap();
        let spec = ModelSpec::group(rs.clone(), XKind::hyperbolic(1.0)).unwrap();
        let out = conjugation_check(&spec, &pts(&rs, Region::chamber(), 20)).unwrap();
        assert_eq!(out.order, 0);
        assert!(out.spread < 1e-9, "{out:?}");
        assert!(out.constant.abs() < 1e-9, "{out:?}");

        let rs = RootSystem::build(Family::BC, 2)
            .unwrap()
            .with_multiplicities(Multiplicities { edge: 4, short: 4, long: 1 });
        let spec = ModelSpec::group(rs.clone(), XKind::hyperbolic(1.0)).unwrap();
        let out = conjugation_check(&spec, &pts(&rs, Region::chamber(), 20)).unwrap();
        assert!(out.spread < 1e-9, "{out:?}");
        assert!(out.constant.abs() < 1e-9, "{out:?}");
    }

    #[test]
    fn conjugation_rational_a1_is_exact() {
        let rs = RootSystem::build(Family::A, 2).unwrap();
        let spec = ModelSpec::group(rs, XKind::rational()).unwrap();
        let d = conjugation_discrepancy(&spec).unwrap();
        for q in [[1.0, 0.0], [2.5, -1.0]] {
            for (_, v) in d.eval_coeffs(&q).unwrap() {
                assert!(v.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn f_vanishes_for_a2_and_reduces_for_bc() {
        let rs = RootSystem::build(Family::A, 3).unwrap();
        let (f, _) = f_eval(&rs, &[1.3, 0.4, 0.0]).unwrap();
        assert!(f.abs() < 1e-12);

        let rs = RootSystem::build(Family::BC, 1)
            .unwrap()
            .with_multiplicities(Multiplicities { edge: 1, short: 2, long: 1 });
        let (f, _) = f_eval(&rs, &[0.5]).unwrap();
        let r = f_reduced_bc(&rs, &[0.5]).unwrap();
        assert!((f - r).abs() < 1e-12 * r.abs().max(1.0));
    }

    #[test]
    fn radial_delta_inverts_conjugation() {
        let rs = RootSystem::build(Family::A, 3).unwrap();
        let spec = ModelSpec::group(rs.clone(), XKind::hyperbolic(1.0)).unwrap();
        let h = hamiltonian(&spec).unwrap();
        let round = radial_delta(&h.conjugate(&xi(&spec).unwrap()).unwrap(), &spec).unwrap();
        let (m, _) = round.sub(&h).unwrap().max_coeff_abs(&pts(&rs, Region::chamber(), 5)).unwrap();
        assert!(m < 1e-12);
    }
}
