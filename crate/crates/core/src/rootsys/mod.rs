//! Root systems in their standard realizations, Weyl groups, chambers and
//! alcoves, the weighted half-sum `rho`, and the multiplicity-to-coupling
//! relation.
//!
//! All root data is exact (`Rational64`). The size parameter passed to
//! [`RootSystem::build`] is the number of ambient coordinates for family `A`
//! (so `(A, n)` is `A_{n-1}` realized by `e_k - e_l`) and the rank for every
//! other family. `G2` is realized in the plane `q1 + q2 + q3 = 0` of a
//! three-dimensional ambient space, with short roots of squared length 2 and
//! long roots of squared length 6.

mod catalog;
mod matrix;

pub use catalog::{catalog, catalog_lookup, render_table, ClassData, CouplingFormula, SpaceEntry, CATALOG_LABELS};
pub use matrix::QMatrix;

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = Rational64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
    BC,
    G,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::BC => "BC",
            Family::G => "G",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Family::A),
            "B" => Ok(Family::B),
            "C" => Ok(Family::C),
            "D" => Ok(Family::D),
            "BC" => Ok(Family::BC),
            "G" | "G2" => Ok(Family::G),
            other => Err(Error::Invalid(format!("unknown root-system family {other:?}"))),
        }
    }
}

/// Weyl orbit of a root in the standard realization.
///
/// `Edge` is `e_k ± e_l`, `Short` is `e_l`, `Long` is `2 e_l`. For `G2` the
/// short roots `e_i - e_j` are `Short` and the long roots are `Long`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootClass {
    Edge,
    Short,
    Long,
}

impl fmt::Display for RootClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RootClass::Edge => "edge",
            RootClass::Short => "short",
            RootClass::Long => "long",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Root {
    pub coords: Vec<Q>,
    pub sq_length: Q,
    /// Multiplicity `m_α`.
    pub mult: u32,
    /// Multiplicity of `2α` when `2α` is also a root, else 0.
    pub double_mult: u32,
    pub class: RootClass,
}

impl Root {
    fn new(coords: Vec<Q>, class: RootClass) -> Self {
        let sq_length = dot(&coords, &coords);
        Root {
            coords,
            sq_length,
            mult: 1,
            double_mult: 0,
            class,
        }
    }

    pub fn coords_f64(&self) -> Vec<f64> {
        self.coords.iter().map(q_to_f64).collect()
    }

    /// `(q, α)` for a floating-point point.
    pub fn pairing(&self, q: &[f64]) -> f64 {
        self.coords.iter().zip(q).map(|(a, x)| q_to_f64(a) * x).sum()
    }
}

/// Per-class multiplicities; a class absent from the family is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiplicities {
    pub edge: u32,
    pub short: u32,
    pub long: u32,
}

impl Default for Multiplicities {
    fn default() -> Self {
        Multiplicities {
            edge: 1,
            short: 1,
            long: 1,
        }
    }
}

impl Multiplicities {
    pub fn get(&self, class: RootClass) -> u32 {
        match class {
            RootClass::Edge => self.edge,
            RootClass::Short => self.short,
            RootClass::Long => self.long,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSystem {
    pub family: Family,
    /// The size parameter the system was built with (particle number for `A`).
    pub size: usize,
    /// Lie rank.
    pub rank: usize,
    pub ambient_dim: usize,
    pub positive_roots: Vec<Root>,
    /// Indices into `positive_roots`.
    pub simple: Vec<usize>,
}

pub(crate) fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().expect("rational fits in f64")
}

pub(crate) fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

fn unit(dim: usize, i: usize, scale: i64) -> Vec<Q> {
    let mut v = vec![Q::zero(); dim];
    v[i] = Q::from_integer(scale);
    v
}

fn pair(dim: usize, k: usize, l: usize, sign: i64) -> Vec<Q> {
    let mut v = vec![Q::zero(); dim];
    v[k] = Q::from_integer(1);
    v[l] = Q::from_integer(sign);
    v
}

fn ints(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| Q::from_integer(x)).collect()
}

impl RootSystem {
    /// Standard realization of `family` with all multiplicities 1.
    pub fn build(family: Family, size: usize) -> Result<Self> {
        let unsupported = Error::UnsupportedSystem { family, rank: size };
        let n = size;
        let mut roots = Vec::new();
        let mut simple_coords: Vec<Vec<Q>> = Vec::new();
        let (rank, dim) = match family {
            Family::A => {
                if n < 2 {
                    return Err(unsupported);
                }
                (n - 1, n)
            }
            Family::B | Family::C | Family::BC => {
                if n < 1 {
                    return Err(unsupported);
                }
                (n, n)
            }
            Family::D => {
                if n < 2 {
                    return Err(unsupported);
                }
                (n, n)
            }
            Family::G => {
                if n != 2 {
                    return Err(unsupported);
                }
                (2, 3)
            }
        };

        if family == Family::G {
            for (v, class) in [
                ([1, -1, 0], RootClass::Short),
                ([1, 0, -1], RootClass::Short),
                ([0, 1, -1], RootClass::Short),
                ([2, -1, -1], RootClass::Long),
                ([-1, 2, -1], RootClass::Long),
                ([1, 1, -2], RootClass::Long),
            ] {
                roots.push(Root::new(ints(&v), class));
            }
            simple_coords.push(ints(&[1, -1, 0]));
            simple_coords.push(ints(&[-1, 2, -1]));
        } else {
            for k in 0..dim {
                for l in (k + 1)..dim {
                    roots.push(Root::new(pair(dim, k, l, -1), RootClass::Edge));
                    if family != Family::A {
                        roots.push(Root::new(pair(dim, k, l, 1), RootClass::Edge));
                    }
                }
            }
            for l in 0..dim {
                if matches!(family, Family::B | Family::BC) {
                    roots.push(Root::new(unit(dim, l, 1), RootClass::Short));
                }
                if matches!(family, Family::C | Family::BC) {
                    roots.push(Root::new(unit(dim, l, 2), RootClass::Long));
                }
            }
            for k in 0..dim.saturating_sub(1) {
                simple_coords.push(pair(dim, k, k + 1, -1));
            }
            match family {
                Family::B | Family::BC => simple_coords.push(unit(dim, dim - 1, 1)),
                Family::C => simple_coords.push(unit(dim, dim - 1, 2)),
                Family::D => simple_coords.push(pair(dim, dim - 2, dim - 1, 1)),
                _ => {}
            }
        }

        let simple = simple_coords
            .iter()
            .map(|s| {
                roots
                    .iter()
                    .position(|r| &r.coords == s)
                    .expect("simple root is a positive root")
            })
            .collect();

        let mut rs = RootSystem {
            family,
            size,
            rank,
            ambient_dim: dim,
            positive_roots: roots,
            simple,
        };
        rs.set_multiplicities(Multiplicities::default());
        Ok(rs)
    }

    /// Copy with per-class multiplicities replaced.
    pub fn with_multiplicities(mut self, m: Multiplicities) -> Self {
        self.set_multiplicities(m);
        self
    }

    fn set_multiplicities(&mut self, m: Multiplicities) {
        let has_long = self.classes().contains(&RootClass::Long);
        let bc = self.family == Family::BC;
        for r in &mut self.positive_roots {
            r.mult = m.get(r.class);
            r.double_mult = if bc && has_long && r.class == RootClass::Short {
                m.long
            } else {
                0
            };
        }
    }

    /// Multiplicities currently stored, with 0 for classes the family lacks.
    pub fn multiplicities(&self) -> Multiplicities {
        let get = |c| {
            self.positive_roots
                .iter()
                .find(|r| r.class == c)
                .map_or(0, |r| r.mult)
        };
        Multiplicities {
            edge: get(RootClass::Edge),
            short: get(RootClass::Short),
            long: get(RootClass::Long),
        }
    }

    /// Root classes present, in `Edge, Short, Long` order.
    pub fn classes(&self) -> Vec<RootClass> {
        let mut seen: Vec<RootClass> = self.positive_roots.iter().map(|r| r.class).collect();
        seen.sort();
        seen.dedup();
        seen
    }

    /// Squared length of the roots in a class.
    pub fn class_sq_length(&self, class: RootClass) -> Option<Q> {
        self.positive_roots
            .iter()
            .find(|r| r.class == class)
            .map(|r| r.sq_length)
    }

    pub fn simple_roots(&self) -> impl Iterator<Item = &Root> {
        self.simple.iter().map(move |&i| &self.positive_roots[i])
    }

    /// A vector pairing positively with every positive root.
    pub fn regular_vector(&self) -> Vec<Q> {
        if self.family == Family::G {
            return ints(&[2, 1, -3]);
        }
        let d = self.ambient_dim as i64;
        (0..d).map(|i| Q::from_integer(d - i)).collect()
    }

    pub fn label(&self) -> String {
        match self.family {
            Family::A => format!("A{}", self.rank),
            other => format!("{other}{}", self.rank),
        }
    }

    /// Coupling `g_α²` for each class, from the stored multiplicities.
    pub fn group_couplings(&self) -> BTreeMap<RootClass, Q> {
        let mut out = BTreeMap::new();
        for r in &self.positive_roots {
            out.entry(r.class)
                .or_insert_with(|| coupling_from_multiplicity(r.mult, r.double_mult, r.sq_length));
        }
        out
    }

    /// Reflection matrices of the simple roots.
    pub fn weyl_generators(&self) -> Vec<QMatrix> {
        self.simple_roots()
            .map(|a| QMatrix::reflection(&a.coords))
            .collect()
    }

    /// Every Weyl group element, by closure of the generators.
    pub fn weyl_group(&self) -> Vec<QMatrix> {
        generate_group(&self.weyl_generators(), self.ambient_dim)
    }

    /// `½ Σ m_α α` over positive roots (doubles enter as separate roots).
    pub fn rho(&self) -> Vec<Q> {
        let half = Q::new(1, 2);
        let mut rho = vec![Q::zero(); self.ambient_dim];
        for r in &self.positive_roots {
            let m = Q::from_integer(r.mult as i64);
            for (acc, c) in rho.iter_mut().zip(&r.coords) {
                *acc += half * m * c;
            }
        }
        rho
    }

    pub fn rho_sq(&self) -> Q {
        let rho = self.rho();
        dot(&rho, &rho)
    }

    /// Membership of `q` in the open chamber or alcove.
    pub fn in_region(&self, region: &Region, q: &[f64]) -> bool {
        if q.len() != self.ambient_dim {
            return false;
        }
        self.positive_roots.iter().all(|r| {
            let t = r.pairing(q);
            match region.kind {
                RegionKind::Chamber => t > 0.0,
                RegionKind::Alcove => {
                    let at = region.scale_a * t;
                    at > 0.0 && at < std::f64::consts::PI
                }
            }
        })
    }

    fn inside_with_margin(&self, region: &Region, q: &[f64], margin: f64) -> bool {
        self.positive_roots.iter().all(|r| {
            let t = r.pairing(q);
            match region.kind {
                RegionKind::Chamber => t >= margin,
                RegionKind::Alcove => {
                    t >= margin && region.scale_a * t <= std::f64::consts::PI - margin
                }
            }
        })
    }

    /// First point of [`RootSystem::sample_points`] for this seed.
    pub fn sample_interior_point(&self, region: &Region, margin: f64, seed: u64) -> Result<Vec<f64>> {
        Ok(self.sample_points(region, margin, seed, 1)?.remove(0))
    }

    /// `count` deterministic points at distance at least `margin` from every
    /// wall, drawn by rejection from a box.
    pub fn sample_points(
        &self,
        region: &Region,
        margin: f64,
        seed: u64,
        count: usize,
    ) -> Result<Vec<Vec<f64>>> {
        const MAX_ATTEMPTS: usize = 2_000_000;
        if !(margin > 0.0) {
            return Err(Error::Invalid(format!("margin must be positive, got {margin}")));
        }
        if region.kind == RegionKind::Alcove && !(region.scale_a > 0.0) {
            return Err(Error::Invalid("alcove scale must be positive".into()));
        }
        let half_width = match region.kind {
            RegionKind::Chamber => 3.0,
            RegionKind::Alcove => std::f64::consts::PI / region.scale_a,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        let mut q = vec![0.0; self.ambient_dim];
        while out.len() < count {
            if attempts >= MAX_ATTEMPTS {
                return Err(Error::Sampling { margin, attempts });
            }
            attempts += 1;
            for x in q.iter_mut() {
                *x = rng.gen_range(-half_width..half_width);
            }
            if self.inside_with_margin(region, &q, margin) {
                out.push(q.clone());
                attempts = 0;
            }
        }
        Ok(out)
    }
}

/// Breadth-first closure of a finite matrix group.
pub fn generate_group(generators: &[QMatrix], dim: usize) -> Vec<QMatrix> {
    let mut seen: HashSet<QMatrix> = HashSet::new();
    let mut out = Vec::new();
    let mut queue: VecDeque<QMatrix> = VecDeque::new();
    queue.push_back(QMatrix::identity(dim));
    while let Some(g) = queue.pop_front() {
        if !seen.insert(g.clone()) {
            continue;
        }
        for s in generators {
            let next = g.mul(s);
            if !seen.contains(&next) {
                queue.push_back(next);
            }
        }
        out.push(g);
    }
    out
}

/// `g² = ⅛ m (m + 2 m₂ − 2) |α|²`, exactly.
pub fn coupling_from_multiplicity(m: u32, m2: u32, sq_len: Q) -> Q {
    let m = Q::from_integer(m as i64);
    let m2 = Q::from_integer(m2 as i64);
    Q::new(1, 8) * m * (m + Q::from_integer(2) * m2 - Q::from_integer(2)) * sq_len
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Chamber,
    Alcove,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    /// Alcove period parameter `a`.
    pub scale_a: f64,
}

impl Region {
    pub fn chamber() -> Self {
        Region {
            kind: RegionKind::Chamber,
            scale_a: 1.0,
        }
    }

    pub fn alcove(a: f64) -> Self {
        Region {
            kind: RegionKind::Alcove,
            scale_a: a,
        }
    }
}
