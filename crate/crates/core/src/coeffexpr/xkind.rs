use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Expr, Poly, PrimKind};
use crate::error::{Error, Result};

/// The five potential shapes `V(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    /// I: `ξ⁻²`
    Rational,
    /// II: `a² sinh⁻² aξ`
    Hyperbolic,
    /// III: `a² sin⁻² aξ`
    #[serde(alias = "trig")]
    Trigonometric,
    /// IV: elliptic. Recognized only to be rejected.
    Elliptic,
    /// V: `ξ⁻² + ω² ξ²`
    #[serde(alias = "harmonic")]
    RationalHarmonic,
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PotentialKind::Rational => "rational",
            PotentialKind::Hyperbolic => "hyperbolic",
            PotentialKind::Trigonometric => "trig",
            PotentialKind::Elliptic => "elliptic",
            PotentialKind::RationalHarmonic => "harmonic",
        })
    }
}

impl FromStr for PotentialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "i" => Ok(PotentialKind::Rational),
            "hyperbolic" | "ii" => Ok(PotentialKind::Hyperbolic),
            "trig" | "trigonometric" | "iii" => Ok(PotentialKind::Trigonometric),
            "elliptic" | "iv" => Ok(PotentialKind::Elliptic),
            "harmonic" | "rational_harmonic" | "v" => Ok(PotentialKind::RationalHarmonic),
            other => Err(Error::Invalid(format!("unknown potential kind {other:?}"))),
        }
    }
}

/// Potential kind with its scale `a` and, for kind V, frequency `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XKind {
    pub kind: PotentialKind,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub omega: f64,
}

fn one() -> f64 {
    1.0
}

impl XKind {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        XKind { kind, a: 1.0, omega: 0.0 }.validated()
    }

    pub fn rational() -> Self {
        XKind { kind: PotentialKind::Rational, a: 1.0, omega: 0.0 }
    }

    pub fn hyperbolic(a: f64) -> Self {
        XKind { kind: PotentialKind::Hyperbolic, a, omega: 0.0 }
    }

    pub fn trigonometric(a: f64) -> Self {
        XKind { kind: PotentialKind::Trigonometric, a, omega: 0.0 }
    }

    pub fn harmonic(omega: f64) -> Self {
        XKind { kind: PotentialKind::RationalHarmonic, a: 1.0, omega }
    }

    pub fn validated(self) -> Result<Self> {
        if self.kind == PotentialKind::Elliptic {
            return Err(Error::OutOfScope("the elliptic potential (kind IV) is not supported".into()));
        }
        if !(self.a > 0.0) {
            return Err(Error::Invalid(format!("scale a must be positive, got {}", self.a)));
        }
        if self.omega != 0.0 && self.kind != PotentialKind::RationalHarmonic {
            return Err(Error::Invalid("omega is only meaningful for the harmonic kind".into()));
        }
        Ok(self)
    }

    /// Whether the system lives on the alcove rather than the chamber.
    pub fn periodic(&self) -> bool {
        self.kind == PotentialKind::Trigonometric
    }

    /// `x(ξ)`: `ξ⁻¹`, `a csch aξ` or `a csc aξ`.
    pub fn x_expr(&self, linear_form: Expr) -> Result<Expr> {
        let a = self.a;
        let scaled = || Expr::Prod(vec![Expr::real(a), linear_form.clone()]);
        match self.validated()?.kind {
            PotentialKind::Rational => Ok(linear_form.powi(-1)),
            PotentialKind::Hyperbolic => Ok(Expr::Prod(vec![
                Expr::real(a),
                Expr::prim(PrimKind::Csch, scaled()),
            ])),
            PotentialKind::Trigonometric => Ok(Expr::Prod(vec![
                Expr::real(a),
                Expr::prim(PrimKind::Csc, scaled()),
            ])),
            PotentialKind::RationalHarmonic => Err(Error::Invalid(
                "the harmonic kind has no x-function".into(),
            )),
            PotentialKind::Elliptic => unreachable!(),
        }
    }

    /// `V(ξ)`: `x²`, or `ξ⁻² + ω² ξ²` for kind V.
    pub fn v_expr(&self, linear_form: Expr) -> Result<Expr> {
        match self.validated()?.kind {
            PotentialKind::RationalHarmonic => Ok(Expr::Sum(vec![
                linear_form.clone().powi(-2),
                Expr::Prod(vec![
                    Expr::Const(Complex64::new(self.omega * self.omega, 0.0)),
                    linear_form.powi(2),
                ]),
            ])),
            _ => Ok(self.x_expr(linear_form)?.powi(2)),
        }
    }

    /// `(d/dξ)^order V(ξ)` evaluated at `ξ = linear_form`, in canonical form.
    pub fn v_derivative(&self, linear_form: &Poly, order: usize) -> Result<Poly> {
        let mut v = self.v_expr(Expr::Var(0))?.to_poly();
        for _ in 0..order {
            v = v.diff(0);
        }
        Ok(v.substitute(std::slice::from_ref(linear_form)))
    }

    /// `x(ξ)^power` at `ξ = linear_form`, in canonical form.
    pub fn x_power(&self, linear_form: &Poly, power: i64) -> Result<Poly> {
        let x = self.x_expr(Expr::Var(0))?.powi(power).to_poly();
        Ok(x.substitute(std::slice::from_ref(linear_form)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_and_v_examples() {
        let l = Expr::linear(&[1.0, -1.0]);
        let x = XKind::rational().x_expr(l).unwrap();
        assert!((x.eval(&[2.0, 1.0]).unwrap().re - 1.0).abs() < 1e-15);

        let v = XKind::hyperbolic(1.0).v_expr(Expr::Var(0)).unwrap();
        assert!((v.eval(&[1.0]).unwrap().re - 0.724_061_6).abs() < 1e-6);

        let v = XKind::harmonic(2.0).v_expr(Expr::Var(0)).unwrap();
        assert!((v.eval(&[1.0]).unwrap().re - 5.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_has_no_x_and_elliptic_is_rejected() {
        assert!(XKind::harmonic(1.0).x_expr(Expr::Var(0)).is_err());
        let iv = XKind { kind: PotentialKind::Elliptic, a: 1.0, omega: 0.0 };
        assert!(matches!(iv.v_expr(Expr::Var(0)), Err(Error::OutOfScope(_))));
        assert!("IV".parse::<PotentialKind>().is_ok());
    }

    #[test]
    fn v_derivative_matches_finite_difference() {
        for xk in [XKind::rational(), XKind::hyperbolic(0.7), XKind::trigonometric(1.3)] {
            let l = Poly::linear(&[1.0, 1.0]);
            let v = xk.v_derivative(&l, 0).unwrap();
            let d = xk.v_derivative(&l, 1).unwrap();
            let q = [0.4, 0.3];
            let h = 1e-6;
            let fd = (v.eval(&[q[0] + h, q[1]]).unwrap() - v.eval(&[q[0] - h, q[1]]).unwrap()) / (2.0 * h);
            let exact = d.eval(&q).unwrap();
            assert!((fd - exact).norm() < 1e-6 * (1.0 + exact.norm()), "{xk:?}");
        }
    }
}
