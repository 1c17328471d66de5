use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diffop::{DiffOp, MultiIndex};
use crate::error::{Error, Result};
use crate::models::Template;

/// Upper bound on the number of unknown weights.
pub const MAX_UNKNOWNS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Fitted weight per unknown piece, in the order requested.
    pub values: Vec<(String, f64)>,
    /// Numerical rank of the linear system.
    pub rank: usize,
    /// Largest coefficient modulus of the commutator with fitted weights.
    pub residual_max: f64,
    /// Largest coefficient modulus of the composition of the operators.
    pub scale: f64,
}

impl Calibration {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual_max / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Fit the weights of `unknowns` so that `[h, template]` vanishes at `points`.
///
/// Each coefficient of the commutator at each point gives one complex
/// equation, linear in the unknowns. Rows are scaled per point by the largest
/// entry of that point's block, and the system is solved by normal equations
/// after a rank check on the singular values.
pub fn calibrate(template: &Template, unknowns: &[&str], h: &DiffOp, points: &[Vec<f64>]) -> Result<Calibration> {
    if unknowns.len() > MAX_UNKNOWNS {
        return Err(Error::Invalid(format!(
            "at most {MAX_UNKNOWNS} unknowns are supported, got {}",
            unknowns.len()
        )));
    }
    for name in unknowns {
        template.piece(name)?;
    }
    let mut fixed = DiffOp::zero(template.dim);
    let mut columns: Vec<DiffOp> = Vec::with_capacity(unknowns.len());
    for name in unknowns {
        columns.push(h.commutator(&template.piece(name)?.op)?);
    }
    for p in &template.pieces {
        if !unknowns.contains(&p.name.as_str()) {
            fixed.add_scaled(&p.op, num_complex::Complex64::new(p.weight, 0.0))?;
        }
    }
    let rhs_op = h.commutator(&fixed)?;

    let m = unknowns.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for q in points {
        let mut block: BTreeMap<MultiIndex, (Vec<num_complex::Complex64>, num_complex::Complex64)> = BTreeMap::new();
        for (i, col) in columns.iter().enumerate() {
            for (a, v) in col.eval_coeffs(q)? {
                block.entry(a).or_insert_with(|| (vec![Default::default(); m], Default::default())).0[i] = v;
            }
        }
        for (a, v) in rhs_op.eval_coeffs(q)? {
            block.entry(a).or_insert_with(|| (vec![Default::default(); m], Default::default())).1 = -v;
        }
        let size = block
            .values()
            .flat_map(|(r, b)| r.iter().chain(std::iter::once(b)).map(|z| z.norm()))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for (_, (row, b)) in block {
            rows.push(row.iter().map(|z| z.re / size).collect());
            rhs.push(b.re / size);
            rows.push(row.iter().map(|z| z.im / size).collect());
            rhs.push(b.im / size);
        }
    }

    let values = if m == 0 {
        Vec::new()
    } else {
        let a = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
        let b = DVector::from_vec(rhs);
        let sv = a.clone().svd(false, false).singular_values;
        let top = sv.max();
        let rank = sv.iter().filter(|&&s| s > top * 1e-10).count();
        if rank < m || top == 0.0 {
            return Err(Error::RankDeficient { rank, unknowns: m });
        }
        let ata = a.transpose() * &a;
        let atb = a.transpose() * b;
        let sol = ata
            .cholesky()
            .ok_or(Error::RankDeficient { rank, unknowns: m })?
            .solve(&atb);
        sol.iter().copied().collect::<Vec<f64>>()
    };

    let mut fitted = template.clone();
    for (name, v) in unknowns.iter().zip(&values) {
        fitted.set_weight(name, *v)?;
    }
    let op = fitted.assemble();
    let (residual_max, _) = h.commutator(&op)?.max_coeff_abs(points)?;
    let (scale, _) = h.compose(&op)?.max_coeff_abs(points)?;
    Ok(Calibration {
        values: unknowns.iter().map(|s| s.to_string()).zip(values).collect(),
        rank: m,
        residual_max,
        scale,
    })
}
