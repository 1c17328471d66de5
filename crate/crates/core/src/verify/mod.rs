//! Verification harness: declarative checks over sampled interior points,
//! structured reports, and weight calibration for operator templates.
//!
//! Every residual is reported raw together with a scale; a seed passes when
//! `residual / scale ≤ tolerance`, and a check passes when every seed does.

mod calibrate;
mod checks;

pub use calibrate::{calibrate, Calibration, MAX_UNKNOWNS};
pub use checks::run_check;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffexpr::{PotentialKind, XKind};
use crate::error::{Error, Result};
use crate::models::{CouplingMode, CouplingSet, ModelSpec};
use crate::rootsys::{catalog_lookup, Family, Multiplicities, RootSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Conjugation,
    FVanish,
    Commute,
    PairwiseCommute,
    Weyl,
    Gradation,
    Asymptotic,
    TableCouplings,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Conjugation => "conjugation",
            CheckKind::FVanish => "f_vanish",
            CheckKind::Commute => "commute",
            CheckKind::PairwiseCommute => "pairwise_commute",
            CheckKind::Weyl => "weyl",
            CheckKind::Gradation => "gradation",
            CheckKind::Asymptotic => "asymptotic",
            CheckKind::TableCouplings => "table_couplings",
        }
    }

    fn default_tolerance(&self) -> f64 {
        match self {
            CheckKind::Conjugation => 1e-9,
            CheckKind::FVanish => 1e-10,
            CheckKind::Commute => 1e-8,
            CheckKind::PairwiseCommute => 1e-7,
            CheckKind::Weyl => 1e-9,
            CheckKind::Gradation => 1e-10,
            // Largest allowed ratio of successive deviations when ε halves.
            CheckKind::Asymptotic => 0.75,
            CheckKind::TableCouplings => 0.0,
        }
    }
}

/// A system as written in a config: a family and rank, or a catalog row.
///
/// `rank` is the Lie rank, so `A` with rank 2 has three particles. Without
/// explicit `couplings` the group values of the multiplicities are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub rank: Option<usize>,
    /// Catalog label such as `"D III"`, used instead of family and rank.
    #[serde(default)]
    pub space: Option<String>,
    /// Table parameter for catalog rows that depend on it.
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default = "default_kind")]
    pub kind: PotentialKind,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub multiplicities: Option<Multiplicities>,
    #[serde(default)]
    pub couplings: Option<CouplingSet>,
}

fn default_kind() -> PotentialKind {
    PotentialKind::Hyperbolic
}

fn default_a() -> f64 {
    1.0
}

impl SystemSpec {
    pub fn new(family: Family, rank: usize, kind: PotentialKind) -> Self {
        SystemSpec {
            family: Some(family),
            rank: Some(rank),
            space: None,
            n: None,
            kind,
            a: 1.0,
            omega: 0.0,
            multiplicities: None,
            couplings: None,
        }
    }

    pub fn from_space(label: &str, n: Option<u32>, kind: PotentialKind) -> Self {
        SystemSpec {
            family: None,
            rank: None,
            space: Some(label.to_string()),
            n,
            kind,
            a: 1.0,
            omega: 0.0,
            multiplicities: None,
            couplings: None,
        }
    }

    pub fn with_couplings(mut self, c: CouplingSet) -> Self {
        self.couplings = Some(c);
        self
    }

    pub fn with_multiplicities(mut self, m: Multiplicities) -> Self {
        self.multiplicities = Some(m);
        self
    }

    pub fn xkind(&self) -> Result<XKind> {
        XKind {
            kind: self.kind,
            a: self.a,
            omega: self.omega,
        }
        .validated()
    }

    pub fn root_system(&self) -> Result<RootSystem> {
        let rs = match (&self.space, self.family, self.rank) {
            (Some(label), None, None) => catalog_lookup(label, self.n)?.root_system()?,
            (None, Some(family), Some(rank)) => {
                let size = if family == Family::A { rank + 1 } else { rank };
                RootSystem::build(family, size)?
            }
            _ => {
                return Err(Error::Invalid(
                    "a system needs either `space` or both `family` and `rank`".into(),
                ))
            }
        };
        Ok(match self.multiplicities {
            Some(m) => rs.with_multiplicities(m),
            None => rs,
        })
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let rs = self.root_system()?;
        let xk = self.xkind()?;
        match self.couplings {
            Some(c) => ModelSpec::explicit(rs, xk, c),
            None => ModelSpec::group(rs, xk),
        }
    }
}

/// What a report says about the system it ran on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub family: Family,
    pub rank: usize,
    pub kind: PotentialKind,
    pub a: f64,
    pub couplings: CouplingSet,
    pub mode: CouplingMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<String>,
}

impl SystemDescriptor {
    pub fn of(spec: &ModelSpec, space: Option<&str>) -> Self {
        SystemDescriptor {
            family: spec.rs.family,
            rank: spec.rs.rank,
            kind: spec.xkind.kind,
            a: spec.xkind.a,
            couplings: spec.couplings,
            mode: spec.mode,
            space: space.map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub check: CheckKind,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    /// Operator names understood by [`crate::models::IntegralName`].
    #[serde(default)]
    pub operators: Vec<String>,
    #[serde(default = "default_points")]
    pub n_points: usize,
    /// Distance from the walls; defaults to 0.3 on the chamber and 0.25 on
    /// the alcove.
    #[serde(default)]
    pub margin: Option<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Relative perturbation of every coupling of `H` only, for negative controls.
    #[serde(default)]
    pub perturb: Option<f64>,
}

fn default_points() -> usize {
    25
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2]
}

impl CheckSpec {
    pub fn new(check: CheckKind, system: Option<SystemSpec>) -> Self {
        CheckSpec {
            check,
            system,
            operators: Vec::new(),
            n_points: default_points(),
            margin: None,
            seeds: default_seeds(),
            tolerance: None,
            perturb: None,
        }
    }

    pub fn operators(mut self, ops: &[&str]) -> Self {
        self.operators = ops.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn points(mut self, n: usize) -> Self {
        self.n_points = n;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or_else(|| self.check.default_tolerance())
    }

    /// Field-level validation, with errors naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Invalid(format!("{field}: {msg}")));
        if self.n_points < 1 {
            return bad("n_points", "must be at least 1".into());
        }
        if let Some(m) = self.margin {
            if !(m > 0.0) {
                return bad("margin", format!("must be positive, got {m}"));
            }
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) && self.check != CheckKind::TableCouplings {
                return bad("tolerance", format!("must be positive, got {t}"));
            }
        }
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required".into());
        }
        if let Some(p) = self.perturb {
            if !p.is_finite() {
                return bad("perturb", "must be finite".into());
            }
        }
        let needs_system = self.check != CheckKind::TableCouplings;
        if needs_system && self.system.is_none() {
            return bad("system", format!("required by the {} check", self.check.name()));
        }
        let min_ops = match self.check {
            CheckKind::Commute | CheckKind::PairwiseCommute => 2,
            CheckKind::Weyl | CheckKind::Gradation | CheckKind::Asymptotic => 1,
            _ => 0,
        };
        if self.operators.len() < min_ops {
            return bad(
                "operators",
                format!("the {} check needs at least {min_ops} operators", self.check.name()),
            );
        }
        if self.check == CheckKind::Commute && self.operators.len() != 2 {
            return bad("operators", "commute takes exactly two operators".into());
        }
        for (i, name) in self.operators.iter().enumerate() {
            if let Err(e) = name.parse::<crate::models::IntegralName>() {
                return bad(&format!("operators[{i}]"), e.to_string());
            }
        }
        Ok(())
    }
}

/// The worst coefficient of one residual evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detail {
    pub seed: u64,
    pub label: String,
    pub residual: f64,
    pub scale: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: CheckKind,
    #[serde(default)]
    pub system: Option<SystemDescriptor>,
    #[serde(default)]
    pub operators: Vec<String>,
    pub n_points: usize,
    pub margin: f64,
    pub seeds: Vec<u64>,
    pub tolerance: f64,
    /// Scale of the detail with the largest relative residual.
    pub scale: f64,
    /// Raw residual of the detail with the largest relative residual.
    pub residual_max: f64,
    pub pass: bool,
    pub details: Vec<Detail>,
    /// Named measured quantities, such as the conjugation constant.
    #[serde(default)]
    pub measured: BTreeMap<String, f64>,
}

impl Report {
    pub fn relative(&self) -> f64 {
        relative(self.residual_max, self.scale)
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        let system = match &self.system {
            Some(s) => {
                let label = s.space.clone().unwrap_or_else(|| format!("{}{}", s.family, s.rank));
                format!(" {label} {}", s.kind)
            }
            None => String::new(),
        };
        let ops = if self.operators.is_empty() {
            String::new()
        } else {
            format!(" [{}]", self.operators.join(","))
        };
        format!(
            "{} {}{}{}: residual {:.3e} / scale {:.3e} = {:.3e} (tol {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.check.name(),
            system,
            ops,
            self.residual_max,
            self.scale,
            self.relative(),
            self.tolerance
        )
    }
}

pub(crate) fn relative(residual: f64, scale: f64) -> f64 {
    if residual == 0.0 {
        0.0
    } else {
        residual / scale.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub suite: Vec<CheckSpec>,
    #[serde(default)]
    pub output: OutputFormat,
    #[serde(default)]
    pub fail_fast: bool,
}

impl Config {
    /// Parse and validate, reporting the JSON path and line of any problem.
    pub fn from_json(text: &str) -> Result<Config> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Invalid(format!(
                "config field `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })?;
        for (i, cs) in config.suite.iter().enumerate() {
            cs.validate()
                .map_err(|e| Error::Invalid(format!("config field `suite[{i}].{}`", strip_invalid(&e))))?;
        }
        Ok(config)
    }
}

fn strip_invalid(e: &Error) -> String {
    match e {
        Error::Invalid(msg) => msg.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub reports: Vec<Report>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

/// Run every check of the config. Checks run concurrently; reports keep the
/// config order. With `fail_fast` the checks run in order and stop at the
/// first failure.
pub fn run_suite(config: &Config) -> Result<SuiteOutcome> {
    for (i, cs) in config.suite.iter().enumerate() {
        cs.validate()
            .map_err(|e| Error::Invalid(format!("suite[{i}].{}", strip_invalid(&e))))?;
    }
    let reports = if config.fail_fast {
        let mut out = Vec::new();
        for cs in &config.suite {
            let r = run_check(cs)?;
            let stop = !r.pass;
            out.push(r);
            if stop {
                break;
            }
        }
        out
    } else {
        config.suite.par_iter().map(run_check).collect::<Result<Vec<_>>>()?
    };
    let passed = reports.iter().filter(|r| r.pass).count();
    let failed = reports.len() - passed;
    Ok(SuiteOutcome {
        pass: failed == 0,
        passed,
        failed,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a2(kind: PotentialKind) -> SystemSpec {
        SystemSpec::new(Family::A, 2, kind)
    }

    #[test]
    fn operator_commutes_with_itself() {
        let cs = CheckSpec::new(CheckKind::Commute, Some(a2(PotentialKind::Hyperbolic))).operators(&["H", "H"]);
        let r = run_check(&cs).unwrap();
        assert!(r.pass);
        assert_eq!(r.residual_max, 0.0);
        assert!(r.scale > 0.0);
        assert_eq!(r.details.len(), 2);
    }

    #[test]
    fn f_vanishes_on_a3() {
        let cs = CheckSpec::new(CheckKind::FVanish, Some(SystemSpec::new(Family::A, 3, PotentialKind::Hyperbolic)))
            .points(100);
        let r = run_check(&cs).unwrap();
        assert!(r.pass, "{}", r.summary());
    }

    #[test]
    fn tables_match_exactly() {
        let r = run_check(&CheckSpec::new(CheckKind::TableCouplings, None)).unwrap();
        assert!(r.pass);
        assert_eq!(r.residual_max, 0.0);
        assert_eq!(r.tolerance, 0.0);
    }

    #[test]
    fn perturbed_coupling_is_caught() {
        let mut cs = CheckSpec::new(CheckKind::Commute, Some(a2(PotentialKind::Rational))).operators(&["H", "I3"]);
        cs.perturb = Some(0.1);
        let r = run_check(&cs).unwrap();
        assert!(!r.pass);
        assert!(r.relative() > 1e3 * r.tolerance);
    }

    #[test]
    fn reports_are_deterministic_and_round_trip() {
        let cs = CheckSpec::new(CheckKind::Conjugation, Some(a2(PotentialKind::Trigonometric))).points(8);
        let a = serde_json::to_string(&run_check(&cs).unwrap()).unwrap();
        let b = serde_json::to_string(&run_check(&cs).unwrap()).unwrap();
        assert_eq!(a, b);
        let back: Report = serde_json::from_str(&a).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), a);
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = Config::from_json(r#"{"suite": [{"check": "commute", "n_points": "x"}]}"#).unwrap_err();
        assert!(err.to_string().contains("suite[0].n_points"), "{err}");
        let err = Config::from_json(r#"{"suite": [{"check": "weyl", "system": {"family": "A", "rank": 2}, "n_points": 0, "operators": ["H"]}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("suite[0].n_points"), "{err}");
        let err = Config::from_json(r#"{"suite": [{"check": "commute", "system": {"family": "A", "rank": 2}, "operators": ["H", "K"]}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("operators[1]"), "{err}");
        let err = Config::from_json(r#"{"suite": [{"check": "nope"}]}"#).unwrap_err();
        assert!(err.to_string().contains("suite[0].check"), "{err}");
    }

    #[test]
    fn empty_suite_passes() {
        let out = run_suite(&Config::from_json("{}").unwrap()).unwrap();
        assert!(out.pass);
        assert!(out.reports.is_empty());
    }

    #[test]
    fn suite_keeps_config_order() {
        let config = Config {
            suite: vec![
                CheckSpec::new(CheckKind::TableCouplings, None),
                CheckSpec::new(CheckKind::Gradation, Some(a2(PotentialKind::Rational))).operators(&["I3"]),
                CheckSpec::new(CheckKind::Weyl, Some(a2(PotentialKind::Hyperbolic))).operators(&["H"]),
            ],
            output: OutputFormat::Json,
            fail_fast: false,
        };
        let out = run_suite(&config).unwrap();
        let kinds: Vec<CheckKind> = out.reports.iter().map(|r| r.check).collect();
        assert_eq!(kinds, [CheckKind::TableCouplings, CheckKind::Gradation, CheckKind::Weyl]);
        assert!(out.pass);
    }

    #[test]
    fn fail_fast_stops_at_first_failure() {
        let mut bad = CheckSpec::new(CheckKind::Commute, Some(a2(PotentialKind::Rational))).operators(&["H", "I3"]);
        bad.perturb = Some(0.1);
        let config = Config {
            suite: vec![bad, CheckSpec::new(CheckKind::TableCouplings, None)],
            output: OutputFormat::Text,
            fail_fast: true,
        };
        let out = run_suite(&config).unwrap();
        assert_eq!(out.reports.len(), 1);
        assert!(!out.pass);
    }

    #[test]
    fn catalog_systems_resolve() {
        let s = SystemSpec::from_space("D III", None, PotentialKind::Hyperbolic);
        let spec = s.model().unwrap();
        assert_eq!(spec.rs.family, Family::BC);
        assert_eq!(spec.couplings.long, -0.5);
        assert!(SystemSpec::from_space("nope", None, PotentialKind::Hyperbolic).model().is_err());
        let mut s = a2(PotentialKind::Elliptic);
        assert!(s.model().is_err());
        s.kind = PotentialKind::Rational;
        s.rank = None;
        assert!(s.model().is_err());
    }
}
