use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use num_traits::Zero;

use super::{relative, CheckKind, CheckSpec, Detail, Report, SystemDescriptor};
use crate::coeffexpr::{PotentialKind, XKind};
use crate::diffop::{DiffOp, MultiIndex};
use crate::error::{Error, Result};
use crate::models::{f_eval, f_reduced_bc, conjugation_check, CouplingSet, IntegralName, ModelSpec};
use crate::rootsys::{catalog_lookup, q_to_f64, Family, RegionKind, CATALOG_LABELS};

const GRADATION_LAMBDAS: [f64; 3] = [0.5, 2.0, 3.0];
const ASYMPTOTIC_EPSILONS: [f64; 3] = [0.2, 0.1, 0.05];
const TABLE_NS: [u32; 3] = [3, 4, 5];

/// Run one check. Deterministic given the seeds.
pub fn run_check(cs: &CheckSpec) -> Result<Report> {
    cs.validate()?;
    let tolerance = cs.tolerance();
    if cs.check == CheckKind::TableCouplings {
        return table_couplings(cs, tolerance);
    }
    let system = cs.system.as_ref().expect("validated");
    let spec = system.model()?;
    let margin = cs.margin.unwrap_or(match spec.region().kind {
        RegionKind::Chamber => 0.3,
        RegionKind::Alcove => 0.25,
    });
    let mut ctx = Ctx {
        cs,
        spec: &spec,
        margin,
        tolerance,
        details: Vec::new(),
        measured: BTreeMap::new(),
    };
    match cs.check {
        CheckKind::Conjugation => ctx.conjugation()?,
        CheckKind::FVanish => ctx.f_vanish()?,
        CheckKind::Commute | CheckKind::PairwiseCommute => ctx.commute()?,
        CheckKind::Weyl => ctx.weyl()?,
        CheckKind::Gradation => ctx.gradation()?,
        CheckKind::Asymptotic => ctx.asymptotic()?,
        CheckKind::TableCouplings => unreachable!(),
    }
    let descriptor = SystemDescriptor::of(&spec, system.space.as_deref());
    Ok(ctx.finish(Some(descriptor)))
}

struct Ctx<'a> {
    cs: &'a CheckSpec,
    spec: &'a ModelSpec,
    margin: f64,
    tolerance: f64,
    details: Vec<Detail>,
    measured: BTreeMap<String, f64>,
}

impl Ctx<'_> {
    fn points(&self, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.spec
            .rs
            .sample_points(&self.spec.region(), self.margin, seed, self.cs.n_points)
    }

    fn record(&mut self, seed: u64, label: String, residual: f64, scale: f64, worst: Option<(MultiIndex, Vec<f64>)>) {
        let pass = residual.is_finite() && relative(residual, scale) <= self.tolerance;
        let (index, point) = match worst {
            Some((a, q)) => (Some(a.to_string()), Some(q)),
            None => (None, None),
        };
        self.details.push(Detail {
            seed,
            label,
            residual,
            scale,
            pass,
            index,
            point,
        });
    }

    fn finish(self, system: Option<SystemDescriptor>) -> Report {
        finish_report(self.cs, system, self.margin, self.tolerance, self.details, self.measured)
    }

    fn build(&self, name: &str) -> Result<DiffOp> {
        let op: IntegralName = name.parse()?;
        match (op, self.cs.perturb) {
            (IntegralName::H, Some(eps)) => {
                let c = self.spec.couplings;
                let perturbed = CouplingSet {
                    edge: c.edge * (1.0 + eps),
                    short: c.short * (1.0 + eps),
                    long: c.long * (1.0 + eps),
                };
                let spec = ModelSpec::explicit(self.spec.rs.clone(), self.spec.xkind, perturbed)?;
                op.build(&spec)
            }
            _ => op.build(self.spec),
        }
    }

    fn conjugation(&mut self) -> Result<()> {
        for &seed in &self.cs.seeds {
            let pts = self.points(seed)?;
            let out = conjugation_check(self.spec, &pts)?;
            let residual = out.spread.max(out.higher_order_max);
            self.measured.insert(format!("constant_seed{seed}"), out.constant);
            self.measured.insert(format!("order_seed{seed}"), out.order as f64);
            self.record(seed, "G - H".into(), residual, out.scale, None);
        }
        Ok(())
    }

    fn f_vanish(&mut self) -> Result<()> {
        let rs = self.spec.rs.clone();
        for &seed in &self.cs.seeds {
            let pts = rs.sample_points(&crate::rootsys::Region::chamber(), self.margin, seed, self.cs.n_points)?;
            let (mut worst_rel, mut worst) = (-1.0, (0.0, 1.0, Vec::new()));
            for q in &pts {
                let (f, terms) = f_eval(&rs, q).map_err(|e| at_point(e, q))?;
                let residual = if rs.family == Family::BC {
                    (f - f_reduced_bc(&rs, q)?).abs()
                } else {
                    f.abs()
                };
                let scale = terms.max(f64::MIN_POSITIVE);
                if relative(residual, scale) > worst_rel {
                    worst_rel = relative(residual, scale);
                    worst = (residual, scale, q.clone());
                }
            }
            let label = if rs.family == Family::BC {
                "F - F_reduced".to_string()
            } else {
                "F".to_string()
            };
            self.record(seed, label, worst.0, worst.1, Some((MultiIndex::zero(0), worst.2)));
        }
        Ok(())
    }

    fn commute(&mut self) -> Result<()> {
        let names = self.cs.operators.clone();
        let ops = names.iter().map(|n| self.build(n)).collect::<Result<Vec<_>>>()?;
        let mut pairs = Vec::new();
        for i in 0..ops.len() {
            for j in i + 1..ops.len() {
                let comm = ops[i].commutator(&ops[j])?;
                let prod = ops[i].compose(&ops[j])?;
                pairs.push((format!("[{}, {}]", names[i], names[j]), comm, prod));
            }
        }
        for &seed in &self.cs.seeds {
            let pts = self.points(seed)?;
            for (label, comm, prod) in &pairs {
                let (r, worst) = max_abs(comm, &pts)?;
                let (s, _) = max_abs(prod, &pts)?;
                self.record(seed, label.clone(), r, s, worst);
            }
        }
        Ok(())
    }

    fn weyl(&mut self) -> Result<()> {
        let gens: Vec<_> = self.spec.rs.weyl_generators().iter().map(|g| g.to_f64()).collect();
        let mut diffs = Vec::new();
        for name in &self.cs.operators {
            let op = self.build(name)?;
            for (k, s) in gens.iter().enumerate() {
                let moved = op.pushforward_orthogonal(s)?;
                diffs.push((format!("{name} under s{}", k + 1), moved.sub(&op)?, op.clone()));
            }
        }
        for &seed in &self.cs.seeds {
            let pts = self.points(seed)?;
            for (label, diff, op) in &diffs {
                let (r, worst) = max_abs(diff, &pts)?;
                let (s, _) = max_abs(op, &pts)?;
                self.record(seed, label.clone(), r, s, worst);
            }
        }
        Ok(())
    }

    fn gradation(&mut self) -> Result<()> {
        if self.spec.xkind.kind != PotentialKind::Rational {
            return Err(Error::Invalid("gradation holds for the rational kind only".into()));
        }
        let mut diffs = Vec::new();
        for name in &self.cs.operators {
            let op = self.build(name)?;
            let k = op.order() as i32;
            for lambda in GRADATION_LAMBDAS {
                let expected = op.scale_real(lambda.powi(-k));
                diffs.push((format!("{name} at lambda {lambda}"), op.grade_scale(lambda).sub(&expected)?, expected));
            }
        }
        for &seed in &self.cs.seeds {
            let pts = self.points(seed)?;
            for (label, diff, expected) in &diffs {
                let (r, worst) = max_abs(diff, &pts)?;
                let (s, _) = max_abs(expected, &pts)?;
                self.record(seed, label.clone(), r, s, worst);
            }
        }
        Ok(())
    }

    /// Relative distance between the coefficients of an operator and of its
    /// rational counterpart at `q = εu`, for shrinking `ε`. The residual is
    /// the largest ratio of successive distances.
    fn asymptotic(&mut self) -> Result<()> {
        if self.spec.xkind.kind == PotentialKind::Rational {
            return Err(Error::Invalid(
                "the asymptotic check compares a non-rational kind with the rational one".into(),
            ));
        }
        let rational = ModelSpec::explicit(self.spec.rs.clone(), XKind::rational(), self.spec.couplings)?;
        let mut pairs = Vec::new();
        for name in &self.cs.operators {
            let op: IntegralName = name.parse()?;
            pairs.push((name.clone(), self.build(name)?, op.build(&rational)?));
        }
        for &seed in &self.cs.seeds {
            let u = self.spec.rs.sample_points(&crate::rootsys::Region::chamber(), self.margin, seed, 1)?.remove(0);
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let u: Vec<f64> = u.iter().map(|x| x / norm).collect();
            for (name, op, op_rational) in &pairs {
                let mut devs = Vec::new();
                for eps in ASYMPTOTIC_EPSILONS {
                    let q: Vec<f64> = u.iter().map(|x| eps * x).collect();
                    let dev = coefficient_distance(op, op_rational, &q)?;
                    self.measured.insert(format!("{name}_eps{eps}_seed{seed}"), dev);
                    devs.push(dev);
                }
                let worst_ratio = devs
                    .windows(2)
                    .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::INFINITY })
                    .fold(0.0, f64::max);
                let q: Vec<f64> = u.iter().map(|x| ASYMPTOTIC_EPSILONS[0] * x).collect();
                self.record(
                    seed,
                    format!("{name} deviation ratio"),
                    worst_ratio,
                    1.0,
                    Some((MultiIndex::zero(0), q)),
                );
            }
        }
        Ok(())
    }
}

/// `max_a |c_a(q) − c'_a(q)| / max_a |c'_a(q)|`.
fn coefficient_distance(op: &DiffOp, reference: &DiffOp, q: &[f64]) -> Result<f64> {
    let a: BTreeMap<MultiIndex, Complex64> = op.eval_coeffs(q).map_err(|e| at_point(e, q))?.into_iter().collect();
    let b: BTreeMap<MultiIndex, Complex64> =
        reference.eval_coeffs(q).map_err(|e| at_point(e, q))?.into_iter().collect();
    let keys: BTreeSet<&MultiIndex> = a.keys().chain(b.keys()).collect();
    let mut dist: f64 = 0.0;
    let mut size: f64 = 0.0;
    for k in keys {
        let x = a.get(k).copied().unwrap_or_else(Complex64::zero);
        let y = b.get(k).copied().unwrap_or_else(Complex64::zero);
        dist = dist.max((x - y).norm());
        size = size.max(y.norm());
    }
    Ok(relative(dist, size))
}

fn at_point(e: Error, q: &[f64]) -> Error {
    match e {
        Error::Domain { .. } => Error::Invalid(format!("{e} at sample point {q:?}")),
        other => other,
    }
}

/// Largest coefficient modulus, with pole errors tagged by the point.
fn max_abs(op: &DiffOp, points: &[Vec<f64>]) -> Result<(f64, Option<(MultiIndex, Vec<f64>)>)> {
    let mut best = 0.0;
    let mut worst = None;
    for q in points {
        let (m, w) = op.max_coeff_abs(std::slice::from_ref(q)).map_err(|e| at_point(e, q))?;
        if worst.is_none() || !(m <= best) {
            best = if m.is_nan() { f64::INFINITY } else { m };
            worst = w;
        }
    }
    Ok((best, worst))
}

fn finish_report(
    cs: &CheckSpec,
    system: Option<SystemDescriptor>,
    margin: f64,
    tolerance: f64,
    details: Vec<Detail>,
    measured: BTreeMap<String, f64>,
) -> Report {
    let worst = details
        .iter()
        .max_by(|a, b| relative(a.residual, a.scale).total_cmp(&relative(b.residual, b.scale)));
    let (residual_max, scale) = worst.map_or((0.0, 1.0), |d| (d.residual, d.scale));
    Report {
        check: cs.check,
        system,
        operators: cs.operators.clone(),
        n_points: cs.n_points,
        margin,
        seeds: cs.seeds.clone(),
        tolerance,
        scale,
        residual_max,
        pass: details.iter().all(|d| d.pass),
        details,
        measured,
    }
}

/// Every catalog row, instantiated at each table parameter where the row
/// depends on it, against the couplings recomputed from its multiplicities
/// in exact rational arithmetic.
fn table_couplings(cs: &CheckSpec, tolerance: f64) -> Result<Report> {
    let mut details = Vec::new();
    let mut measured = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for label in CATALOG_LABELS {
        for n in TABLE_NS {
            let entry = catalog_lookup(label, Some(n))?;
            if !seen.insert((label, entry.n)) {
                continue;
            }
            let derived = entry.couplings_from_multiplicities();
            let mut residual = 0.0;
            let mut mismatched = Vec::new();
            for (class, tabulated) in &entry.couplings {
                let got = derived.get(class).copied().unwrap_or_default();
                if got != *tabulated {
                    residual += q_to_f64(&(got - tabulated)).abs().max(f64::MIN_POSITIVE);
                    mismatched.push(format!("{class}: {got} vs {tabulated}"));
                }
            }
            let name = match entry.n {
                Some(n) => format!("{label} (n = {n})"),
                None => label.to_string(),
            };
            for (class, g2) in &entry.couplings {
                measured.insert(format!("{name} {class}"), q_to_f64(g2));
            }
            details.push(Detail {
                seed: 0,
                label: if mismatched.is_empty() {
                    name
                } else {
                    format!("{name}: {}", mismatched.join(", "))
                },
                residual,
                scale: 1.0,
                pass: residual <= tolerance,
                index: None,
                point: None,
            });
        }
    }
    Ok(finish_report(cs, None, 0.0, tolerance, details, measured))
}
