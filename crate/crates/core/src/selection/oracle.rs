//! LP halfspace oracle for the selection game.
//!
//! For a direction `θ ∈ K` the oracle returns `p ∈ Δ_k` minimizing
//! `max_y θ·ℓ(p, y)`. The inner maximum over the adversary polytope is
//! replaced by its LP dual, so one LP over `(p, q)` yields `p`:
//!
//! ```text
//! minimize d·q   s.t.  Aᵀq = c(p),  q ≥ 0,  p ∈ Δ_k
//! ```
//!
//! where `A y ≤ d` describes the adversary set and `c(p)` collects the
//! coefficients of `θ·ℓ(p, y)` in `y` (the constant term is zero).
//!
//! Two adversary sets are supported. [`OracleKind::Standard`] uses `Y`
//! itself. [`OracleKind::PerCoordinate`] lets the adversary pick a separate
//! `a`-block for every coordinate (all sharing `b`), which is exactly the
//! freedom the pessimistic fill-in `ℓ̂` uses; a `p` valid for this set keeps
//! `θ·ℓ̂ ≤ 0` in every round and is valid for `Y` as well.

use serde::{Deserialize, Serialize};

use super::ProbVector;
use crate::error::{Error, Result};
use crate::linprog::{LinearProgram, Variant};

/// Largest `max_y θ·ℓ(p, y)` accepted from the oracle.
pub const VALIDITY_TOLERANCE: f64 = 1e-7;

/// Below this total weight `θ` is treated as the zero functional.
const ZERO_THETA: f64 = 1e-15;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Standard,
    #[default]
    PerCoordinate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleOutput {
    pub p: ProbVector,
    /// Optimal value of the oracle LP: the adversary's best response value.
    pub achieved: f64,
}

/// A row of `A y ≤ d` with at most two nonzeros, in block-local indices.
#[derive(Clone, Copy, Debug)]
struct Row {
    terms: [(Slot, f64); 2],
    len: usize,
    rhs: f64,
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    A(usize),
    B(usize),
}

impl Row {
    fn one(slot: Slot, coef: f64, rhs: f64) -> Self {
        Row {
            terms: [(slot, coef), (slot, 0.0)],
            len: 1,
            rhs,
        }
    }

    fn two(s1: Slot, c1: f64, s2: Slot, c2: f64, rhs: f64) -> Self {
        Row {
            terms: [(s1, c1), (s2, c2)],
            len: 2,
            rhs,
        }
    }
}

/// Oracle with the constraint template of one `a`-block and the `b`-block
/// built once per `(k, variant)`.
#[derive(Clone, Debug)]
pub struct HalfspaceOracle {
    k: usize,
    variant: Variant,
    kind: OracleKind,
    a_block: Vec<Row>,
    b_block: Vec<Row>,
}

impl HalfspaceOracle {
    pub fn new(k: usize, variant: Variant, kind: OracleKind) -> Self {
        let lower = variant.lower();
        let mut a_block = Vec::new();
        let mut b_block = Vec::new();
        for i in 0..k {
            a_block.push(Row::one(Slot::A(i), 1.0, 1.0));
            a_block.push(Row::one(Slot::A(i), -1.0, -lower));
            b_block.push(Row::one(Slot::B(i), 1.0, 1.0));
            b_block.push(Row::one(Slot::B(i), -1.0, -lower));
        }
        for i in 0..k {
            for i2 in i + 1..k {
                a_block.push(Row::two(Slot::A(i), -1.0, Slot::A(i2), -1.0, 0.0));
                b_block.push(Row::two(Slot::B(i), -1.0, Slot::B(i2), -1.0, 0.0));
            }
        }
        for i in 0..k {
            a_block.push(Row::two(Slot::A(i), 1.0, Slot::B(i), -1.0, 0.0));
        }
        HalfspaceOracle {
            k,
            variant,
            kind,
            a_block,
            b_block,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn query(&self, theta: &[f64]) -> Result<OracleOutput> {
        let k = self.k;
        if theta.len() != k {
            return Err(Error::dims(k, theta.len()));
        }
        if theta.iter().any(|v| !v.is_finite() || *v < -1e-12) {
            return Err(Error::InvalidArgument(
                "θ must be a finite point of K".into(),
            ));
        }
        let scale: f64 = theta.iter().map(|v| v.max(0.0)).sum();
        if scale <= ZERO_THETA {
            return Ok(OracleOutput {
                p: ProbVector::uniform(k),
                achieved: 0.0,
            });
        }
        // solve for θ/‖θ‖₁ and scale the achieved value back
        let theta: Vec<f64> = theta.iter().map(|v| v.max(0.0) / scale).collect();
        let total: f64 = theta.iter().sum();

        // Each a-block carries a target vector (the θ-part of its
        // coefficients) and the factor multiplying p in its coefficients.
        let blocks: Vec<(Vec<f64>, f64)> = match self.kind {
            OracleKind::Standard => vec![(theta.to_vec(), total)],
            OracleKind::PerCoordinate => (0..k)
                .filter(|&i| theta[i] > 0.0)
                .map(|i| {
                    let mut target = vec![0.0; k];
                    target[i] = theta[i];
                    (target, theta[i])
                })
                .collect(),
        };
        let alpha = self.variant.alpha(k);
        let nblocks = blocks.len();
        let ydim = (nblocks + 1) * k;
        let b_offset = nblocks * k;
        let nrows = nblocks * self.a_block.len() + self.b_block.len();
        let nvars = k + nrows;

        // equality rows: one per y-coordinate, plus the simplex row
        let mut eq = vec![vec![0.0; nvars]; ydim + 1];
        let mut rhs = vec![0.0; ydim + 1];
        let mut objective = vec![0.0; nvars];
        let mut place = |row: &Row, block: Option<usize>, q: usize, eq: &mut Vec<Vec<f64>>| {
            for &(slot, coef) in &row.terms[..row.len] {
                let v = match (slot, block) {
                    (Slot::A(i), Some(blk)) => blk * k + i,
                    (Slot::B(i), _) => b_offset + i,
                    (Slot::A(_), None) => unreachable!("b-block rows only touch b"),
                };
                eq[v][k + q] += coef;
            }
            objective[k + q] = -row.rhs;
        };
        let mut q = 0;
        for blk in 0..nblocks {
            for row in &self.a_block {
                place(row, Some(blk), q, &mut eq);
                q += 1;
            }
        }
        for row in &self.b_block {
            place(row, None, q, &mut eq);
            q += 1;
        }
        for (blk, (target, factor)) in blocks.iter().enumerate() {
            for x in 0..k {
                eq[blk * k + x][x] += factor;
                rhs[blk * k + x] = target[x];
            }
        }
        for x in 0..k {
            eq[b_offset + x][x] += alpha * total;
        }
        eq[ydim][..k].fill(1.0);
        rhs[ydim] = 1.0;

        let mut lp = LinearProgram::new(objective);
        for (row, r) in eq.into_iter().zip(rhs) {
            lp.add_eq(row, r)?;
        }
        let (point, value) = lp
            .solve()
            .into_optimal()
            .map_err(|_| Error::OracleFailure { achieved: f64::NAN })?;
        let achieved = -value * scale;
        if achieved > VALIDITY_TOLERANCE {
            return Err(Error::OracleFailure { achieved });
        }
        Ok(OracleOutput {
            p: ProbVector::from_weights(&point[..k])?,
            achieved,
        })
    }
}

/// One-shot oracle query.
pub fn halfspace_oracle(theta: &[f64], variant: Variant, kind: OracleKind) -> Result<OracleOutput> {
    HalfspaceOracle::new(theta.len(), variant, kind).query(theta)
}
