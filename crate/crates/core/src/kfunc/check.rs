//! Exhaustive property checkers for tabular functions.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{checked_space, KFunction, TabularKFunction};
use crate::error::Result;

/// Largest `(k+1)^n` accepted by the checkers.
pub const CHECK_LIMIT: usize = 4096;

/// Slack allowed on every checker inequality.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Decoded table: labels of every point plus powers of the radix.
struct Grid<'a> {
    n: usize,
    k: usize,
    values: &'a [f64],
    labels: Vec<Vec<usize>>,
    powers: Vec<usize>,
}

impl<'a> Grid<'a> {
    fn new(f: &'a TabularKFunction) -> Result<Self> {
        checked_space(f.n(), f.k(), CHECK_LIMIT)?;
        let (n, k) = (f.n(), f.k());
        let labels = super::assignments(n, k)
            .map(|x| x.labels().to_vec())
            .collect();
        let powers = (0..n).map(|j| (k + 1).pow(j as u32)).collect();
        Ok(Grid {
            n,
            k,
            values: f.values(),
            labels,
            powers,
        })
    }

    fn size(&self) -> usize {
        self.values.len()
    }

    /// Index of `x + i e_j` for `x(j) = 0`.
    fn add(&self, x: usize, j: usize, i: usize) -> usize {
        x + i * self.powers[j]
    }

    /// Calls `visit(x)` for every `x ≤ y` (including `y` itself).
    fn for_each_below(&self, y: usize, mut visit: impl FnMut(usize) -> bool) -> bool {
        let support: Vec<usize> = (0..self.n).filter(|&j| self.labels[y][j] != 0).collect();
        let drops: Vec<usize> = support
            .iter()
            .map(|&j| self.labels[y][j] * self.powers[j])
            .collect();
        for mask in 0usize..(1 << support.len()) {
            let mut x = y;
            let mut bits = mask;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                x -= drops[b];
                bits &= bits - 1;
            }
            if !visit(x) {
                return false;
            }
        }
        true
    }
}

/// `f(x) + f(y) ≥ f(x ⊔ y) + f(x ⊓ y)` for every pair.
pub fn is_k_submodular_lattice(f: &TabularKFunction) -> Result<bool> {
    let grid = Grid::new(f)?;
    let v = grid.values;
    for x in 0..grid.size() {
        let lx = &grid.labels[x];
        for y in x + 1..grid.size() {
            let ly = &grid.labels[y];
            let (mut join, mut meet) = (0, 0);
            for j in 0..grid.n {
                let (a, b) = (lx[j], ly[j]);
                if a == 0 || b == 0 || a == b {
                    join += a.max(b) * grid.powers[j];
                    meet += a.min(b) * grid.powers[j];
                }
            }
            if v[x] + v[y] + CHECK_TOLERANCE < v[join] + v[meet] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `Δ_{j,i} f(x) + Δ_{j,i'} f(x) ≥ 0` for `i ≠ i'` and `j ∉ supp(x)`.
pub fn is_pairwise_monotone(f: &TabularKFunction) -> Result<bool> {
    let grid = Grid::new(f)?;
    let v = grid.values;
    for x in 0..grid.size() {
        for j in (0..grid.n).filter(|&j| grid.labels[x][j] == 0) {
            for i in 1..=grid.k {
                let di = v[grid.add(x, j, i)] - v[x];
                for i2 in i + 1..=grid.k {
                    let di2 = v[grid.add(x, j, i2)] - v[x];
                    if di + di2 < -CHECK_TOLERANCE {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// `Δ_{j,i} f(x) ≥ Δ_{j,i} f(y)` for `x ≤ y` and `j ∉ supp(y)`.
pub fn is_orthant_submodular(f: &TabularKFunction) -> Result<bool> {
    let grid = Grid::new(f)?;
    let v = grid.values;
    for y in 0..grid.size() {
        for j in (0..grid.n).filter(|&j| grid.labels[y][j] == 0) {
            for i in 1..=grid.k {
                let dy = v[grid.add(y, j, i)] - v[y];
                let ok =
                    grid.for_each_below(y, |x| v[grid.add(x, j, i)] - v[x] + CHECK_TOLERANCE >= dy);
                if !ok {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// `f(x) ≤ f(y)` for every comparable pair `x ≤ y`.
pub fn is_monotone(f: &TabularKFunction) -> Result<bool> {
    let grid = Grid::new(f)?;
    let v = grid.values;
    for y in 0..grid.size() {
        if !grid.for_each_below(y, |x| v[x] <= v[y] + CHECK_TOLERANCE) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All four checkers at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub lattice: bool,
    pub pairwise: bool,
    pub orthant: bool,
    pub monotone: bool,
}

impl CheckReport {
    pub fn run(f: &TabularKFunction) -> Result<Self> {
        Ok(CheckReport {
            lattice: is_k_submodular_lattice(f)?,
            pairwise: is_pairwise_monotone(f)?,
            orthant: is_orthant_submodular(f)?,
            monotone: is_monotone(f)?,
        })
    }

    pub fn is_k_submodular(&self) -> bool {
        self.lattice
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lattice={} pairwise={} orthant={} monotone={}",
            self.lattice, self.pairwise, self.orthant, self.monotone
        )
    }
}
