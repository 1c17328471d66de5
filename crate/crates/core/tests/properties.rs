use cmsys::coeffexpr::{Expr, Poly};
use cmsys::coeffexpr::PotentialKind;
use cmsys::diffop::DiffOp;
use cmsys::models::CouplingSet;
use cmsys::rootsys::Family;
use cmsys::verify::{run_check, CheckKind, CheckSpec, SystemSpec};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;

const POINTS: [[f64; 2]; 3] = [[0.37, 1.13], [-0.81, 0.29], [1.47, -0.53]];

fn linear_form() -> impl Strategy<Value = Poly> {
    (-2i32..=2, -2i32..=2)
        .prop_filter("nonzero form", |(a, b)| (*a, *b) != (0, 0))
        .prop_map(|(a, b)| Poly::linear(&[a as f64, b as f64]))
}

fn factor() -> impl Strategy<Value = Poly> {
    prop_oneof![
        Just(Poly::one()),
        Just(Poly::var(0)),
        Just(Poly::var(1)),
        linear_form().prop_map(Poly::sinh),
        linear_form().prop_map(Poly::coth),
        linear_form().prop_map(Poly::csch),
        linear_form().prop_map(Poly::cot),
    ]
}

fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((-3i32..=3, factor(), factor()), 1..4).prop_map(|terms| {
        terms
            .into_iter()
            .fold(Poly::zero(), |acc, (c, f, g)| acc.add(&f.mul(&g).scale(C::new(c as f64, 0.0))))
    })
}

fn index() -> impl Strategy<Value = Vec<u8>> {
    prop_oneof![Just(vec![0, 0]), Just(vec![1, 0]), Just(vec![0, 1]), Just(vec![2, 0]), Just(vec![1, 1]), Just(vec![0, 2])]
}

fn op() -> impl Strategy<Value = DiffOp> {
    prop::collection::vec((index(), poly()), 1..4).prop_map(|terms| {
        terms
            .into_iter()
            .fold(DiffOp::zero(2), |acc, (a, f)| acc.add(&DiffOp::p_monomial(2, &a, f)).unwrap())
    })
}

fn max_coeff(a: &DiffOp) -> f64 {
    let pts: Vec<Vec<f64>> = POINTS.iter().map(|p| p.to_vec()).collect();
    a.max_coeff_abs(&pts).unwrap().0
}

fn close(a: C, b: C) -> bool {
    (a - b).norm() <= 1e-9 * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobi_identity(a in op(), b in op(), c in op()) {
        let j = a.commutator(&b.commutator(&c).unwrap()).unwrap()
            .add(&b.commutator(&c.commutator(&a).unwrap()).unwrap()).unwrap()
            .add(&c.commutator(&a.commutator(&b).unwrap()).unwrap()).unwrap();
        let scale = max_coeff(&a.compose(&b.compose(&c).unwrap()).unwrap()).max(1.0);
        prop_assert!(max_coeff(&j) <= 1e-10 * scale);
    }

    #[test]
    fn composition_agrees_with_application(a in op(), b in op(), f in poly()) {
        let lhs = a.compose(&b).unwrap().apply(&f).unwrap();
        let rhs = a.apply(&b.apply(&f).unwrap()).unwrap();
        for q in POINTS {
            prop_assert!(close(lhs.eval(&q).unwrap(), rhs.eval(&q).unwrap()));
        }
    }

    #[test]
    fn grade_scale_is_multiplicative(a in op(), b in op(), lambda in 0.3f64..3.0) {
        let lhs = a.compose(&b).unwrap().grade_scale(lambda);
        let rhs = a.grade_scale(lambda).compose(&b.grade_scale(lambda)).unwrap();
        let scale = max_coeff(&lhs).max(1.0);
        prop_assert!(max_coeff(&lhs.sub(&rhs).unwrap()) <= 1e-10 * scale);
    }

    #[test]
    fn rotation_respects_commutators(a in op(), b in op(), theta in 0.0f64..6.3) {
        let s = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let lhs = a.commutator(&b).unwrap().pushforward_orthogonal(&s).unwrap();
        let rhs = a.pushforward_orthogonal(&s).unwrap()
            .commutator(&b.pushforward_orthogonal(&s).unwrap()).unwrap();
        let scale = max_coeff(&lhs).max(1.0);
        prop_assert!(max_coeff(&lhs.sub(&rhs).unwrap()) <= 1e-9 * scale);
    }

    #[test]
    fn derivative_obeys_leibniz(f in poly(), g in poly(), j in 0usize..2) {
        let lhs = f.mul(&g).diff(j);
        let rhs = f.diff(j).mul(&g).add(&f.mul(&g.diff(j)));
        for q in POINTS {
            prop_assert!(close(lhs.eval(&q).unwrap(), rhs.eval(&q).unwrap()));
        }
    }

    #[test]
    fn sexpr_round_trip(f in poly()) {
        let e = f.to_expr();
        let back: Expr = e.to_string().parse().unwrap();
        for q in POINTS {
            prop_assert!(close(e.eval(&q).unwrap(), back.eval(&q).unwrap()));
        }
        prop_assert_eq!(Poly::from_expr(&back), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn quartic_integral_commutes_at_any_coupling(
        edge in -2.0f64..2.0,
        short in -2.0f64..2.0,
        long in -2.0f64..2.0,
        family in prop_oneof![Just(Family::B), Just(Family::C), Just(Family::BC)],
        kind in prop_oneof![Just(PotentialKind::Rational), Just(PotentialKind::Hyperbolic), Just(PotentialKind::Trigonometric)],
    ) {
        let system = SystemSpec::new(family, 2, kind).with_couplings(CouplingSet { edge, short, long });
        let spec = CheckSpec::new(CheckKind::Commute, Some(system)).operators(&["H", "I4B"]).points(6);
        let report = run_check(&spec).unwrap();
        prop_assert!(report.pass, "{}", report.summary());
    }
}
