//! Symmetric spaces of noncompact type whose restricted root systems are
//! `A_{n-1}` or have rank 2, with the coupling constants of the associated
//! quantum systems.
//!
//! Multiplicities are stored per root class under the realization's squared
//! lengths (edge 2, short 1, long 4). The coupling column is the tabulated
//! value; for `C II(2,2)` the multiplicities reproducing it are not unique and
//! are flagged advisory.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{coupling_from_multiplicity, Family, Multiplicities, RootClass, RootSystem, Q};
use crate::error::{Error, Result};

pub const CATALOG_LABELS: [&str; 9] = [
    "A I",
    "A II",
    "E IV",
    "BD I",
    "C II(2,2)",
    "A III",
    "C II(n,2)",
    "D III",
    "E III",
];

/// A tabulated coupling, either constant or `scale·(n − r1)(n − r2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingFormula {
    Const(i64, i64),
    Quadratic { num: i64, den: i64, r1: i64, r2: i64 },
}

impl CouplingFormula {
    pub fn eval(&self, n: i64) -> Q {
        match *self {
            CouplingFormula::Const(a, b) => Q::new(a, b),
            CouplingFormula::Quadratic { num, den, r1, r2 } => {
                Q::new(num, den) * Q::from_integer((n - r1) * (n - r2))
            }
        }
    }
}

impl fmt::Display for CouplingFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CouplingFormula::Const(a, b) => write!(f, "{}", Q::new(a, b)),
            CouplingFormula::Quadratic { num, den, r1, r2 } => {
                let s = Q::new(num, den);
                let factor = |r: i64| {
                    if r == 0 {
                        "n".to_string()
                    } else {
                        format!("(n-{r})")
                    }
                };
                let body = if r1 == r2 {
                    format!("{}^2", factor(r1))
                } else {
                    format!("{}{}", factor(r1), factor(r2))
                };
                if s == Q::from_integer(1) {
                    f.write_str(&body)
                } else {
                    write!(f, "{s}*{body}")
                }
            }
        }
    }
}

/// Multiplicity `a·n + b`.
#[derive(Debug, Clone, Copy)]
struct Affine(i64, i64);

#[derive(Debug, Clone, Copy)]
enum SizeRule {
    /// Root-system size parameter equals the table's `n` (rank `n − 1`).
    N,
    Fixed(usize),
}

struct Row {
    label: &'static str,
    quotient: &'static str,
    family: Family,
    size: SizeRule,
    /// Minimum valid `n` when the row depends on `n`.
    min_n: Option<u32>,
    range: &'static str,
    mults: &'static [(RootClass, Affine)],
    couplings: &'static [(RootClass, CouplingFormula)],
    advisory: bool,
}

use CouplingFormula::{Const, Quadratic};
use RootClass::{Edge, Long, Short};

const ROWS: [Row; 9] = [
    Row {
        label: "A I",
        quotient: "SL(n,R)/SO(n)",
        family: Family::A,
        size: SizeRule::N,
        min_n: Some(2),
        range: "n >= 2",
        mults: &[(Edge, Affine(0, 1))],
        couplings: &[(Edge, Const(-1, 4))],
        advisory: false,
    },
    Row {
        label: "A II",
        quotient: "SU*(2n)/Sp(n)",
        family: Family::A,
        size: SizeRule::N,
        min_n: Some(2),
        range: "n >= 2",
        mults: &[(Edge, Affine(0, 4))],
        couplings: &[(Edge, Const(2, 1))],
        advisory: false,
    },
    Row {
        label: "E IV",
        quotient: "E6/F4",
        family: Family::A,
        size: SizeRule::Fixed(3),
        min_n: None,
        range: "",
        mults: &[(Edge, Affine(0, 8))],
        couplings: &[(Edge, Const(12, 1))],
        advisory: false,
    },
    Row {
        label: "BD I",
        quotient: "SO_0(n,2)/(SO(n)xSO(2))",
        family: Family::B,
        size: SizeRule::Fixed(2),
        min_n: Some(3),
        range: "n > 2",
        mults: &[(Edge, Affine(0, 1)), (Short, Affine(1, -2))],
        couplings: &[
            (Edge, Const(-1, 4)),
            (Short, Quadratic { num: 1, den: 8, r1: 2, r2: 4 }),
            (Long, Const(0, 1)),
        ],
        advisory: false,
    },
    Row {
        label: "C II(2,2)",
        quotient: "Sp(2,2)/(Sp(2)xSp(2))",
        family: Family::B,
        size: SizeRule::Fixed(2),
        min_n: None,
        range: "",
        mults: &[(Edge, Affine(0, 3)), (Short, Affine(0, 4))],
        couplings: &[(Edge, Const(3, 4)), (Short, Const(1, 1)), (Long, Const(0, 1))],
        advisory: true,
    },
    Row {
        label: "A III",
        quotient: "SU(n,2)/(SU(n)xU(2))",
        family: Family::BC,
        size: SizeRule::Fixed(2),
        min_n: Some(3),
        range: "n > 2",
        mults: &[(Edge, Affine(0, 2)), (Short, Affine(2, -4)), (Long, Affine(0, 1))],
        couplings: &[
            (Edge, Const(0, 1)),
            (Short, Quadratic { num: 1, den: 2, r1: 2, r2: 2 }),
            (Long, Const(-1, 2)),
        ],
        advisory: false,
    },
    Row {
        label: "C II(n,2)",
        quotient: "Sp(n,2)/(Sp(n)xSp(2))",
        family: Family::BC,
        size: SizeRule::Fixed(2),
        min_n: Some(3),
        range: "n > 2",
        mults: &[(Edge, Affine(0, 4)), (Short, Affine(4, -8)), (Long, Affine(0, 3))],
        couplings: &[
            (Edge, Const(2, 1)),
            (Short, Quadratic { num: 2, den: 1, r1: 1, r2: 2 }),
            (Long, Const(3, 2)),
        ],
        advisory: false,
    },
    Row {
        label: "D III",
        quotient: "SO*(10)/U(5)",
        family: Family::BC,
        size: SizeRule::Fixed(2),
        min_n: None,
        range: "",
        mults: &[(Edge, Affine(0, 4)), (Short, Affine(0, 4)), (Long, Affine(0, 1))],
        couplings: &[(Edge, Const(2, 1)), (Short, Const(2, 1)), (Long, Const(-1, 2))],
        advisory: false,
    },
    Row {
        label: "E III",
        quotient: "E6/(SO(10)xSO(2))",
        family: Family::BC,
        size: SizeRule::Fixed(2),
        min_n: None,
        range: "",
        mults: &[(Edge, Affine(0, 6)), (Short, Affine(0, 8)), (Long, Affine(0, 1))],
        couplings: &[(Edge, Const(6, 1)), (Short, Const(8, 1)), (Long, Const(-1, 2))],
        advisory: false,
    },
];

const DEFAULT_N: u32 = 3;

/// Multiplicity and squared root length of one root class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassData {
    pub multiplicity: u32,
    #[serde(with = "qstr")]
    pub sq_length: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceEntry {
    pub cartan_label: String,
    pub quotient: String,
    pub family: Family,
    /// Root-system size parameter (particle number for `A`).
    pub size: usize,
    pub rank: usize,
    pub rank_expr: String,
    /// The `n` this entry was instantiated at, for rows that depend on it.
    pub n: Option<u32>,
    pub mult_classes: BTreeMap<RootClass, ClassData>,
    #[serde(with = "qmap")]
    pub couplings: BTreeMap<RootClass, Q>,
    /// Tabulated coupling expressions, as printed.
    pub coupling_formulas: BTreeMap<RootClass, String>,
    /// True when the multiplicities are one of several reproducing the couplings.
    pub advisory_multiplicities: bool,
}

impl SpaceEntry {
    pub fn multiplicities(&self) -> Multiplicities {
        let get = |c| self.mult_classes.get(&c).map_or(0, |d: &ClassData| d.multiplicity);
        Multiplicities {
            edge: get(Edge),
            short: get(Short),
            long: get(Long),
        }
    }

    /// The restricted root system with this entry's multiplicities.
    pub fn root_system(&self) -> Result<RootSystem> {
        Ok(RootSystem::build(self.family, self.size)?.with_multiplicities(self.multiplicities()))
    }

    /// Couplings recomputed from the stored multiplicities.
    pub fn couplings_from_multiplicities(&self) -> BTreeMap<RootClass, Q> {
        let mut out = BTreeMap::new();
        let long = self.mult_classes.get(&Long).map_or(0, |d| d.multiplicity);
        for (&class, d) in &self.mult_classes {
            let double = if self.family == Family::BC && class == Short { long } else { 0 };
            out.insert(class, coupling_from_multiplicity(d.multiplicity, double, d.sq_length));
        }
        for &class in self.couplings.keys() {
            out.entry(class).or_insert_with(Q::zero);
        }
        out
    }
}

fn sq_length(class: RootClass) -> Q {
    match class {
        Edge => Q::from_integer(2),
        Short => Q::from_integer(1),
        Long => Q::from_integer(4),
    }
}

fn instantiate(row: &Row, n: Option<u32>) -> Result<SpaceEntry> {
    let n = match row.min_n {
        Some(min) => {
            let n = n.unwrap_or(DEFAULT_N.max(min));
            if n < min {
                return Err(Error::OutOfRange {
                    label: row.label.to_string(),
                    n,
                    range: row.range,
                });
            }
            Some(n)
        }
        None => None,
    };
    let ni = n.unwrap_or(0) as i64;
    let size = match row.size {
        SizeRule::N => ni as usize,
        SizeRule::Fixed(s) => s,
    };
    let (rank, rank_expr) = match (row.family, row.size) {
        (Family::A, SizeRule::N) => (size - 1, "n-1".to_string()),
        (Family::A, SizeRule::Fixed(s)) => (s - 1, (s - 1).to_string()),
        (_, _) => (size, size.to_string()),
    };
    let mult_classes = row
        .mults
        .iter()
        .map(|&(class, Affine(a, b))| {
            let m = a * ni + b;
            (
                class,
                ClassData {
                    multiplicity: u32::try_from(m).expect("multiplicity is nonnegative on the valid range"),
                    sq_length: sq_length(class),
                },
            )
        })
        .collect();
    let couplings = row.couplings.iter().map(|&(c, f)| (c, f.eval(ni))).collect();
    let coupling_formulas = row.couplings.iter().map(|&(c, f)| (c, f.to_string())).collect();
    Ok(SpaceEntry {
        cartan_label: row.label.to_string(),
        quotient: row.quotient.to_string(),
        family: row.family,
        size,
        rank,
        rank_expr,
        n,
        mult_classes,
        couplings,
        coupling_formulas,
        advisory_multiplicities: row.advisory,
    })
}

/// All rows, with `n`-dependent rows instantiated at `n = 3`.
pub fn catalog() -> Vec<SpaceEntry> {
    ROWS.iter()
        .map(|r| instantiate(r, None).expect("default n is valid"))
        .collect()
}

/// One row, instantiated at `n` (ignored by rows that do not depend on it).
pub fn catalog_lookup(label: &str, n: Option<u32>) -> Result<SpaceEntry> {
    let wanted = normalize_label(label);
    let row = ROWS
        .iter()
        .find(|r| normalize_label(r.label) == wanted)
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
    instantiate(row, n)
}

fn normalize_label(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_ascii_uppercase()
}

/// Aligned plain-text rendering of the catalog.
pub fn render_table(entries: &[SpaceEntry]) -> String {
    let header = ["label", "space", "system", "n", "edge g^2", "short g1^2", "long g2^2", "formulas"];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for e in entries {
        let get = |c| e.couplings.get(&c).map_or("-".to_string(), |q| q.to_string());
        let formulas = e
            .coupling_formulas
            .iter()
            .map(|(c, f)| format!("{c}={f}"))
            .collect::<Vec<_>>()
            .join(" ");
        let system = match e.family {
            Family::A => format!("A{}", e.rank),
            f => format!("{f}{}", e.rank),
        };
        rows.push(vec![
            e.cartan_label.clone(),
            e.quotient.clone(),
            system,
            e.n.map_or("-".into(), |n| n.to_string()),
            get(Edge),
            get(Short),
            get(Long),
            formulas,
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line = r
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub(crate) mod qstr {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::Q;

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<Q>().map_err(|e| D::Error::custom(format!("bad rational {s:?}: {e}")))
    }
}

pub(crate) mod qmap {
    use std::collections::BTreeMap;

    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    use super::{RootClass, Q};

    pub fn serialize<S: Serializer>(m: &BTreeMap<RootClass, Q>, s: S) -> Result<S::Ok, S::Error> {
        let strs: BTreeMap<RootClass, String> = m.iter().map(|(k, v)| (*k, v.to_string())).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<RootClass, Q>, D::Error> {
        let strs = BTreeMap::<RootClass, String>::deserialize(d)?;
        strs.into_iter()
            .map(|(k, v)| {
                v.parse::<Q>()
                    .map(|q| (k, q))
                    .map_err(|e| D::Error::custom(format!("bad rational {v:?}: {e}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Q {
        Q::new(a, b)
    }

    fn triple(e: &SpaceEntry) -> (Q, Q, Q) {
        let g = |c| e.couplings.get(&c).copied().unwrap_or_else(Q::zero);
        (g(Edge), g(Short), g(Long))
    }

    #[test]
    fn lookup_examples() {
        assert_eq!(triple(&catalog_lookup("A III", Some(4)).unwrap()), (q(0, 1), q(2, 1), q(-1, 2)));
        assert_eq!(triple(&catalog_lookup("C II(n,2)", Some(3)).unwrap()), (q(2, 1), q(4, 1), q(3, 2)));
        assert_eq!(triple(&catalog_lookup("BD I", Some(4)).unwrap()), (q(-1, 4), q(0, 1), q(0, 1)));
        assert_eq!(catalog_lookup("A II", None).unwrap().couplings[&Edge], q(2, 1));
    }

    #[test]
    fn lookup_errors() {
        assert!(matches!(catalog_lookup("F II", None), Err(Error::UnknownLabel(_))));
        assert!(matches!(catalog_lookup("A III", Some(2)), Err(Error::OutOfRange { .. })));
        assert!(matches!(catalog_lookup("BD I", Some(1)), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn stored_couplings_agree_with_multiplicities() {
        for label in CATALOG_LABELS {
            for n in 3..=7 {
                let e = catalog_lookup(label, Some(n)).unwrap();
                assert_eq!(e.couplings_from_multiplicities(), e.couplings, "{label} n={n}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let all = catalog();
        let s = serde_json::to_string(&all).unwrap();
        let back: Vec<SpaceEntry> = serde_json::from_str(&s).unwrap();
        assert_eq!(all, back);
        assert!(s.contains("\"-1/4\""));
    }

    #[test]
    fn table_renders_every_row() {
        let t = render_table(&catalog());
        assert_eq!(t.lines().count(), 10);
        assert!(t.contains("1/8*(n-2)(n-4)"));
    }
}
