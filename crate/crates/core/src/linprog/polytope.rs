//! The adversary polytopes of the selection game.
//!
//! `Y` is the set of `(a, b) ∈ [-1, 1]^k × [-1, 1]^k` with
//! `a(i) + a(i') ≥ 0`, `b(i) + b(i') ≥ 0` for `i ≠ i'` and `b ≥ a`.
//! The monotone variant `Y₊` additionally requires `a, b ≥ 0`.

use serde::{Deserialize, Serialize};

use super::{LinearProgram, LpStatus};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    General,
    Monotone,
}

impl Variant {
    /// Lower end of the coordinate box.
    pub fn lower(self) -> f64 {
        match self {
            Variant::General => -1.0,
            Variant::Monotone => 0.0,
        }
    }

    /// Weight `α` on `b` in the vector reward: `1` or `1 − 1/k`.
    pub fn alpha(self, k: usize) -> f64 {
        match self {
            Variant::General => 1.0,
            Variant::Monotone => 1.0 - 1.0 / k as f64,
        }
    }
}

/// `Y` (or `Y₊`) over the stacked vector `y = (a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolytopeY {
    pub k: usize,
    pub variant: Variant,
}

impl PolytopeY {
    pub fn new(k: usize, variant: Variant) -> Self {
        PolytopeY { k, variant }
    }

    pub fn dim(&self) -> usize {
        2 * self.k
    }

    /// All constraints as rows of `A y ≤ d`, box included.
    pub fn rows(&self) -> Vec<(Vec<f64>, f64)> {
        let k = self.k;
        let dim = 2 * k;
        let mut rows = Vec::new();
        let unit = |v: usize, s: f64| {
            let mut row = vec![0.0; dim];
            row[v] = s;
            row
        };
        for v in 0..dim {
            rows.push((unit(v, 1.0), 1.0));
            rows.push((unit(v, -1.0), -self.variant.lower()));
        }
        for block in [0, k] {
            for i in 0..k {
                for i2 in i + 1..k {
                    let mut row = vec![0.0; dim];
                    row[block + i] = -1.0;
                    row[block + i2] = -1.0;
                    rows.push((row, 0.0));
                }
            }
        }
        for i in 0..k {
            let mut row = vec![0.0; dim];
            row[i] = 1.0;
            row[k + i] = -1.0;
            rows.push((row, 0.0));
        }
        rows
    }

    pub fn contains(&self, a: &[f64], b: &[f64], tol: f64) -> bool {
        if a.len() != self.k || b.len() != self.k {
            return false;
        }
        let lo = self.variant.lower();
        let in_box = |v: &f64| *v >= lo - tol && *v <= 1.0 + tol;
        if !a.iter().all(in_box) || !b.iter().all(in_box) {
            return false;
        }
        for i in 0..self.k {
            if b[i] < a[i] - tol {
                return false;
            }
            for i2 in i + 1..self.k {
                if a[i] + a[i2] < -tol || b[i] + b[i2] < -tol {
                    return false;
                }
            }
        }
        true
    }

    /// Whether `b` is feasible for the `b`-block alone.
    pub fn contains_b(&self, b: &[f64], tol: f64) -> bool {
        // (b, b) ∈ Y whenever b passes the b-block constraints
        self.contains(b, b, tol)
    }

    /// `maximize functional · y` over the polytope.
    pub fn program(&self, functional: &[f64]) -> Result<LinearProgram> {
        if functional.len() != self.dim() {
            return Err(Error::dims(self.dim(), functional.len()));
        }
        let k = self.k;
        let mut lp = LinearProgram::new(functional.to_vec());
        for v in 0..self.dim() {
            lp.set_bounds(v, self.variant.lower(), 1.0)?;
        }
        for block in [0, k] {
            for i in 0..k {
                for i2 in i + 1..k {
                    let mut row = vec![0.0; self.dim()];
                    row[block + i] = -1.0;
                    row[block + i2] = -1.0;
                    lp.add_le(row, 0.0)?;
                }
            }
        }
        for i in 0..k {
            let mut row = vec![0.0; self.dim()];
            row[i] = 1.0;
            row[k + i] = -1.0;
            lp.add_le(row, 0.0)?;
        }
        Ok(lp)
    }
}

/// Exact `max functional · (a, b)` over `Y` or `Y₊`, with a maximizer.
pub fn max_over_y(functional: &[f64], variant: Variant) -> Result<(f64, Vec<f64>)> {
    if !functional.len().is_multiple_of(2) || functional.is_empty() {
        return Err(Error::dims("2k entries", functional.len()));
    }
    let poly = PolytopeY::new(functional.len() / 2, variant);
    let (point, value) = poly.program(functional)?.solve().into_optimal()?;
    Ok((value, point))
}

/// Round-off allowed on `b` below the box before the slice counts as empty.
const SLICE_TOLERANCE: f64 = 1e-9;

/// The slice `Y(b) = { a : (a, b) ∈ Y }` for a fixed `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeYb {
    b: Vec<f64>,
    variant: Variant,
    lp: LinearProgram,
}

impl PolytopeYb {
    pub fn new(b: &[f64], variant: Variant) -> Result<Self> {
        let k = b.len();
        if k == 0 {
            return Err(Error::InvalidArgument("empty feedback vector".into()));
        }
        let mut lp = LinearProgram::new(vec![0.0; k]);
        for (i, &bi) in b.iter().enumerate() {
            if !bi.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite feedback b({i})"
                )));
            }
            let hi = bi.min(1.0);
            if hi < variant.lower() - SLICE_TOLERANCE {
                return Err(Error::Lp(LpStatus::Infeasible));
            }
            lp.set_bounds(i, variant.lower(), hi.max(variant.lower()))?;
        }
        for i in 0..k {
            for i2 in i + 1..k {
                let mut row = vec![0.0; k];
                row[i] = -1.0;
                row[i2] = -1.0;
                lp.add_le(row, 0.0)?;
            }
        }
        Ok(PolytopeYb {
            b: b.to_vec(),
            variant,
            lp,
        })
    }

    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// `max objective · a` over `Y(b)`; swaps the objective in place.
    pub fn maximize(&mut self, objective: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.lp.set_objective(objective.to_vec())?;
        let (point, value) = self.lp.solve().into_optimal()?;
        Ok((value, point))
    }

    pub fn contains(&self, a: &[f64], tol: f64) -> bool {
        PolytopeY::new(self.k(), self.variant).contains(a, &self.b, tol)
    }
}
