//! Small dense linear programs.
//!
//! Two-phase primal simplex on a dense tableau with Bland's rule. Sized for
//! the O(k²)-row programs that arise in the selection game; no attempt is
//! made at sparsity or factorization updates.

mod polytope;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use polytope::{max_over_y, PolytopeY, PolytopeYb, Variant};

/// Pivot and feasibility tolerance.
pub const PIVOT_TOLERANCE: f64 = 1e-9;
const PHASE_ONE_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `maximize c·z  s.t.  A z ≤ d,  E z = e,  lo ≤ z ≤ hi`.
///
/// Variables default to `[0, +∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    inequalities: Vec<(Vec<f64>, f64)>,
    equalities: Vec<(Vec<f64>, f64)>,
    bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub point: Vec<f64>,
    pub value: f64,
}

impl LpSolution {
    pub fn into_optimal(self) -> Result<(Vec<f64>, f64)> {
        match self.status {
            LpStatus::Optimal => Ok((self.point, self.value)),
            other => Err(Error::Lp(other)),
        }
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            inequalities: Vec::new(),
            equalities: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) -> Result<()> {
        if objective.len() != self.num_vars() {
            return Err(Error::dims(self.num_vars(), objective.len()));
        }
        self.objective = objective;
        Ok(())
    }

    fn check_row(&self, row: &[f64], rhs: f64) -> Result<()> {
        if row.len() != self.num_vars() {
            return Err(Error::dims(self.num_vars(), row.len()));
        }
        if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "constraint entries must be finite".into(),
            ));
        }
        Ok(())
    }

    /// `row · z ≤ rhs`
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        self.inequalities.push((row, rhs));
        Ok(())
    }

    /// `row · z ≥ rhs`
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs)
    }

    /// `row · z = rhs`
    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        self.equalities.push((row, rhs));
        Ok(())
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> Result<()> {
        if var >= self.num_vars() {
            return Err(Error::InvalidArgument(format!(
                "variable {var} out of range"
            )));
        }
        if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "invalid bounds [{lo}, {hi}]"
            )));
        }
        self.bounds[var] = (lo, hi);
        Ok(())
    }

    pub fn set_free(&mut self, var: usize) -> Result<()> {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn inequalities(&self) -> &[(Vec<f64>, f64)] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[(Vec<f64>, f64)] {
        &self.equalities
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn solve(&self) -> LpSolution {
        solve_lp(self)
    }
}

/// How an original variable maps onto nonnegative standard-form columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// `z = lo + u`
    Shifted { col: usize, lo: f64 },
    /// `z = hi − u`
    Mirrored { col: usize, hi: f64 },
    /// `z = u⁺ − u⁻`
    Split { pos: usize, neg: usize },
}

struct Tableau {
    width: usize, // columns including rhs
    rows: Vec<f64>,
    basis: Vec<usize>,
    obj: Vec<f64>, // reduced costs (maximize): enter when > tol
    obj_value: f64,
}

impl Tableau {
    fn m(&self) -> usize {
        self.basis.len()
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.rows[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.rows[r * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, c);
        for v in &mut self.rows[r * w..(r + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.rows[r * w..(r + 1) * w].to_vec();
        for other in 0..self.m() {
            if other == r {
                continue;
            }
            let factor = self.rows[other * w + c];
            if factor != 0.0 {
                for (dst, &src) in self.rows[other * w..(other + 1) * w]
                    .iter_mut()
                    .zip(&pivot_row)
                {
                    *dst -= factor * src;
                }
            }
        }
        let factor = self.obj[c];
        if factor != 0.0 {
            for (dst, &src) in self.obj.iter_mut().zip(&pivot_row[..w - 1]) {
                *dst -= factor * src;
            }
            self.obj_value += factor * pivot_row[w - 1];
        }
        self.basis[r] = c;
    }

    /// Installs `cost` as the objective, priced out against the basis.
    fn price(&mut self, cost: &[f64]) {
        self.obj = cost.to_vec();
        self.obj_value = 0.0;
        for r in 0..self.m() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for c in 0..self.width - 1 {
                    self.obj[c] -= cb * self.at(r, c);
                }
                self.obj_value += cb * self.rhs(r);
            }
        }
    }

    /// Bland's rule: lowest-index improving column, lowest-index basic
    /// variable among tied ratios.
    fn run(&mut self, allowed: &[bool]) -> LpStatus {
        loop {
            let entering =
                (0..self.width - 1).find(|&c| allowed[c] && self.obj[c] > PIVOT_TOLERANCE);
            let Some(c) = entering else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m() {
                let a = self.at(r, c);
                if a > PIVOT_TOLERANCE {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((best, best_ratio)) => {
                            if ratio < best_ratio - PIVOT_TOLERANCE
                                || (ratio <= best_ratio + PIVOT_TOLERANCE
                                    && self.basis[r] < self.basis[best])
                            {
                                Some((r, ratio))
                            } else {
                                Some((best, best_ratio))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return LpStatus::Unbounded,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.rows.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
    }
}

/// Solves `lp` to a vertex optimum. Deterministic for a fixed input.
pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    let n = lp.num_vars();

    // column layout: structural columns, then slacks, then artificials
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut extra_le: Vec<(usize, f64)> = Vec::new(); // u_col ≤ width for boxed vars
    for &(lo, hi) in &lp.bounds {
        let map = if lo.is_finite() {
            if hi.is_finite() {
                extra_le.push((ncols, hi - lo));
            }
            VarMap::Shifted { col: ncols, lo }
        } else if hi.is_finite() {
            VarMap::Mirrored { col: ncols, hi }
        } else {
            ncols += 1;
            VarMap::Split {
                pos: ncols - 1,
                neg: ncols,
            }
        };
        ncols += 1;
        maps.push(map);
    }
    if extra_le.iter().any(|&(_, width)| width < -PIVOT_TOLERANCE) {
        return infeasible(n);
    }
    let structural = ncols;

    // translate a row over z into a row over u plus a constant shift
    let translate = |row: &[f64]| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; structural];
        let mut shift = 0.0;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, lo } => {
                    out[col] += a;
                    shift += a * lo;
                }
                VarMap::Mirrored { col, hi } => {
                    out[col] -= a;
                    shift += a * hi;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] += a;
                    out[neg] -= a;
                }
            }
        }
        (out, shift)
    };

    // (coefficients, rhs, is_inequality)
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (row, rhs) in &lp.inequalities {
        let (coef, shift) = translate(row);
        rows.push((coef, rhs - shift, true));
    }
    for &(col, width) in &extra_le {
        let mut coef = vec![0.0; structural];
        coef[col] = 1.0;
        rows.push((coef, width.max(0.0), true));
    }
    for (row, rhs) in &lp.equalities {
        let (coef, shift) = translate(row);
        rows.push((coef, rhs - shift, false));
    }

    let m = rows.len();
    let slacks = rows.iter().filter(|r| r.2).count();
    let needs_artificial: Vec<bool> = rows
        .iter()
        .map(|(_, rhs, ineq)| !*ineq || *rhs < 0.0)
        .collect();
    let artificials = needs_artificial.iter().filter(|&&a| a).count();
    let total = structural + slacks + artificials;
    let width = total + 1;

    let mut tab = Tableau {
        width,
        rows: vec![0.0; m * width],
        basis: vec![0; m],
        obj: vec![0.0; total],
        obj_value: 0.0,
    };
    let (mut next_slack, mut next_art) = (structural, structural + slacks);
    for (r, (coef, rhs, ineq)) in rows.iter().enumerate() {
        let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
        let base = r * width;
        for (c, &a) in coef.iter().enumerate() {
            tab.rows[base + c] = sign * a;
        }
        tab.rows[base + width - 1] = sign * rhs;
        if *ineq {
            tab.rows[base + next_slack] = sign;
            if !needs_artificial[r] {
                tab.basis[r] = next_slack;
            }
            next_slack += 1;
        }
        if needs_artificial[r] {
            tab.rows[base + next_art] = 1.0;
            tab.basis[r] = next_art;
            next_art += 1;
        }
    }

    let is_artificial = |c: usize| c >= structural + slacks;
    if artificials > 0 {
        let cost: Vec<f64> = (0..total)
            .map(|c| if is_artificial(c) { -1.0 } else { 0.0 })
            .collect();
        tab.price(&cost);
        let allowed = vec![true; total];
        tab.run(&allowed);
        if tab.obj_value < -PHASE_ONE_TOLERANCE {
            return infeasible(n);
        }
        // drive remaining artificials out of the basis
        let mut r = 0;
        while r < tab.m() {
            if is_artificial(tab.basis[r]) {
                let col = (0..structural + slacks).find(|&c| tab.at(r, c).abs() > PIVOT_TOLERANCE);
                match col {
                    Some(c) => tab.pivot(r, c),
                    None => {
                        tab.remove_row(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    let mut cost = vec![0.0; total];
    for (j, map) in maps.iter().enumerate() {
        let cj = lp.objective[j];
        match *map {
            VarMap::Shifted { col, .. } => cost[col] += cj,
            VarMap::Mirrored { col, .. } => cost[col] -= cj,
            VarMap::Split { pos, neg } => {
                cost[pos] += cj;
                cost[neg] -= cj;
            }
        }
    }
    tab.price(&cost);
    let allowed: Vec<bool> = (0..total).map(|c| !is_artificial(c)).collect();
    let status = tab.run(&allowed);

    let mut u = vec![0.0; total];
    for r in 0..tab.m() {
        u[tab.basis[r]] = tab.rhs(r);
    }
    let point: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted { col, lo } => lo + u[col],
            VarMap::Mirrored { col, hi } => hi - u[col],
            VarMap::Split { pos, neg } => u[pos] - u[neg],
        })
        .collect();
    let value = match status {
        LpStatus::Optimal => lp.objective.iter().zip(&point).map(|(c, z)| c * z).sum(),
        LpStatus::Unbounded => f64::INFINITY,
        LpStatus::Infeasible => f64::NEG_INFINITY,
    };
    LpSolution {
        status,
        point,
        value,
    }
}

fn infeasible(n: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        point: vec![f64::NAN; n],
        value: f64::NEG_INFINITY,
    }
}
