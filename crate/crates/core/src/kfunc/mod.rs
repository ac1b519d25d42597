//! k-submodular functions on `(k+1)^V`.
//!
//! An [`Assignment`] gives every ground-set element a label in `0..=k`,
//! where `0` means "unassigned". Elements are indexed from `0` in code.
//! Tables are indexed in mixed radix with base `k + 1` and element `0` as
//! the least significant digit.

mod check;
mod families;
mod generate;
mod opt;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use check::{
    is_k_submodular_lattice, is_monotone, is_orthant_submodular, is_pairwise_monotone, CheckReport,
    CHECK_LIMIT, CHECK_TOLERANCE,
};
pub use families::{
    CoverageKFunction, EmbeddedBisubmodular, SeparableKFunction, TabularFile, TabularKFunction,
};
pub use generate::{
    embed_submodular, gen_coverage, gen_random_submodular_set, gen_random_tabular,
    gen_random_tabular_with, gen_separable, gen_separable_monotone, TabularGenParams,
    REJECTION_BUDGET,
};
pub use opt::{best_in_table, brute_force_max, BRUTE_FORCE_LIMIT};

/// A point of `(k+1)^V`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn zeros(n: usize, k: usize) -> Self {
        Assignment {
            labels: vec![0; n],
            k,
        }
    }

    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("assignment needs n >= 1".into()));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("assignment needs k >= 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > k) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} outside 0..={k}"
            )));
        }
        Ok(Assignment { labels, k })
    }

    /// Decodes a mixed-radix table index.
    pub fn from_index(mut index: usize, n: usize, k: usize) -> Self {
        let base = k + 1;
        let labels = (0..n)
            .map(|_| {
                let digit = index % base;
                index /= base;
                digit
            })
            .collect();
        Assignment { labels, k }
    }

    pub fn index(&self) -> usize {
        let base = self.k + 1;
        self.labels
            .iter()
            .rev()
            .fold(0usize, |acc, &label| acc * base + label)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, j: usize) -> usize {
        self.labels[j]
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&j| self.labels[j] != 0).collect()
    }

    pub fn support_len(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    pub fn is_full_support(&self) -> bool {
        self.labels.iter().all(|&l| l != 0)
    }

    /// `x + i e_j` without the `j ∉ supp(x)` precondition; use [`marginal`]
    /// for the checked form.
    pub fn with_label(&self, j: usize, i: usize) -> Self {
        let mut out = self.clone();
        out.labels[j] = i;
        out
    }

    pub fn set(&mut self, j: usize, i: usize) {
        debug_assert!(i <= self.k);
        self.labels[j] = i;
    }

    /// The partition view `(X_1, ..., X_k)`.
    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.k];
        for (j, &l) in self.labels.iter().enumerate() {
            if l != 0 {
                parts[l - 1].push(j);
            }
        }
        parts
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() || self.k != other.k {
            return Err(Error::dims(
                format!("n={}, k={}", self.n(), self.k),
                format!("n={}, k={}", other.n(), other.k),
            ));
        }
        Ok(())
    }

    /// Entry-wise generalized union.
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let labels = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(&i, &j)| join_label(i, j))
            .collect();
        Ok(Assignment { labels, k: self.k })
    }

    /// Entry-wise generalized intersection.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let labels = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(&i, &j)| meet_label(i, j))
            .collect();
        Ok(Assignment { labels, k: self.k })
    }

    /// `self ≤ other` iff `self ⊓ other = self`.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        Ok(self.meet(other)? == *self)
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (idx, l) in self.labels.iter().enumerate() {
            if idx > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[inline]
fn join_label(i: usize, j: usize) -> usize {
    if i == 0 || j == 0 || i == j {
        i.max(j)
    } else {
        0
    }
}

#[inline]
fn meet_label(i: usize, j: usize) -> usize {
    if i == 0 || j == 0 || i == j {
        i.min(j)
    } else {
        0
    }
}

/// Number of points in `(k+1)^n`, or `None` on overflow.
pub fn space_size(n: usize, k: usize) -> Option<usize> {
    let base = k.checked_add(1)?;
    (0..n).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

pub(crate) fn checked_space(n: usize, k: usize, limit: usize) -> Result<usize> {
    match space_size(n, k) {
        Some(size) if size <= limit => Ok(size),
        Some(size) => Err(Error::TooLarge {
            size: size as u128,
            limit: limit as u128,
        }),
        None => Err(Error::TooLarge {
            size: u128::MAX,
            limit: limit as u128,
        }),
    }
}

/// Iterates `(k+1)^n` in table-index order.
pub fn assignments(n: usize, k: usize) -> impl Iterator<Item = Assignment> {
    let size = space_size(n, k).expect("assignment space overflows usize");
    let mut current = Assignment::zeros(n, k);
    let mut first = true;
    (0..size).map(move |_| {
        if first {
            first = false;
        } else {
            for label in current.labels.iter_mut() {
                if *label == k {
                    *label = 0;
                } else {
                    *label += 1;
                    break;
                }
            }
        }
        current.clone()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Tabular,
    Separable,
    Coverage,
    EmbeddedBisubmodular,
}

/// Value oracle for `f: (k+1)^V → [0, 1]`.
pub trait KFunction: Send + Sync + fmt::Debug {
    fn n(&self) -> usize;
    fn k(&self) -> usize;
    /// Whether the function is declared monotone.
    fn claims_monotone(&self) -> bool;
    fn family(&self) -> Family;
    fn evaluate(&self, x: &Assignment) -> f64;
}

impl<F: KFunction + ?Sized> KFunction for &F {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn k(&self) -> usize {
        (**self).k()
    }
    fn claims_monotone(&self) -> bool {
        (**self).claims_monotone()
    }
    fn family(&self) -> Family {
        (**self).family()
    }
    fn evaluate(&self, x: &Assignment) -> f64 {
        (**self).evaluate(x)
    }
}

impl<F: KFunction + ?Sized> KFunction for std::sync::Arc<F> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn k(&self) -> usize {
        (**self).k()
    }
    fn claims_monotone(&self) -> bool {
        (**self).claims_monotone()
    }
    fn family(&self) -> Family {
        (**self).family()
    }
    fn evaluate(&self, x: &Assignment) -> f64 {
        (**self).evaluate(x)
    }
}

pub(crate) fn ensure_shape(f: &dyn KFunction, x: &Assignment) -> Result<()> {
    if f.n() != x.n() || f.k() != x.k() {
        return Err(Error::dims(
            format!("n={}, k={}", f.n(), f.k()),
            format!("n={}, k={}", x.n(), x.k()),
        ));
    }
    Ok(())
}

/// `Δ_{j,i} f(x) = f(x + i e_j) − f(x)` for `j ∉ supp(x)`, `i ∈ 1..=k`.
pub fn marginal(f: &dyn KFunction, x: &Assignment, j: usize, i: usize) -> Result<f64> {
    ensure_shape(f, x)?;
    if j >= x.n() {
        return Err(Error::InvalidArgument(format!(
            "element {j} outside ground set of size {}",
            x.n()
        )));
    }
    if i == 0 || i > x.k() {
        return Err(Error::InvalidArgument(format!(
            "label {i} outside 1..={}",
            x.k()
        )));
    }
    if x.label(j) != 0 {
        return Err(Error::ElementInSupport { element: j });
    }
    Ok(f.evaluate(&x.with_label(j, i)) - f.evaluate(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(labels: &[usize], k: usize) -> Assignment {
        Assignment::new(labels.to_vec(), k).unwrap()
    }

    #[test]
    fn join_examples() {
        assert_eq!(
            a(&[1, 0, 2], 2).join(&a(&[1, 2, 2], 2)).unwrap(),
            a(&[1, 2, 2], 2)
        );
        let x = a(&[2, 0, 1], 2);
        assert_eq!(x.join(&Assignment::zeros(3, 2)).unwrap(), x);
        assert_eq!(a(&[1, 2], 2).join(&a(&[2, 2], 2)).unwrap(), a(&[0, 2], 2));
    }

    #[test]
    fn meet_examples() {
        assert_eq!(
            a(&[1, 0, 2], 2).meet(&a(&[1, 2, 2], 2)).unwrap(),
            a(&[1, 0, 2], 2)
        );
        let x = a(&[2, 1, 0], 3);
        assert_eq!(x.meet(&x).unwrap(), x);
        assert_eq!(a(&[1, 2], 2).meet(&a(&[2, 2], 2)).unwrap(), a(&[0, 2], 2));
    }

    #[test]
    fn leq_examples() {
        let y = a(&[1, 2], 2);
        assert!(Assignment::zeros(2, 2).leq(&y).unwrap());
        assert!(a(&[1, 0], 2).leq(&y).unwrap());
        assert!(!a(&[1, 2], 2).leq(&a(&[2, 2], 2)).unwrap());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = a(&[1, 0], 2);
        assert!(matches!(
            x.join(&a(&[1, 0, 0], 2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(x.meet(&a(&[1, 0], 3)).is_err());
        assert!(x.leq(&a(&[1], 2)).is_err());
    }

    #[test]
    fn labels_are_validated() {
        assert!(Assignment::new(vec![3], 2).is_err());
        assert!(Assignment::new(vec![], 2).is_err());
        assert!(Assignment::new(vec![0], 0).is_err());
    }

    #[test]
    fn index_round_trip_and_order() {
        let all: Vec<_> = assignments(3, 2).collect();
        assert_eq!(all.len(), 27);
        for (idx, x) in all.iter().enumerate() {
            assert_eq!(x.index(), idx);
            assert_eq!(Assignment::from_index(idx, 3, 2), *x);
        }
        // element 0 is the least significant digit
        assert_eq!(all[1], a(&[1, 0, 0], 2));
        assert_eq!(all[3], a(&[0, 1, 0], 2));
    }

    #[test]
    fn support_and_parts() {
        let x = a(&[2, 0, 1, 2], 3);
        assert_eq!(x.support(), vec![0, 2, 3]);
        assert_eq!(x.support_len(), 3);
        assert!(!x.is_full_support());
        assert_eq!(x.parts(), vec![vec![2], vec![0, 3], vec![]]);
    }

    #[test]
    fn marginal_rejects_labelled_element() {
        let f = TabularKFunction::new(1, 2, vec![0.2, 0.7, 0.4]).unwrap();
        let x = a(&[1], 2);
        assert!(matches!(
            marginal(&f, &x, 0, 2),
            Err(Error::ElementInSupport { element: 0 })
        ));
        assert!(marginal(&f, &Assignment::zeros(1, 2), 0, 3).is_err());
        assert!(marginal(&f, &Assignment::zeros(1, 2), 0, 0).is_err());
    }

    #[test]
    fn marginal_table_lookup() {
        let f = TabularKFunction::new(1, 2, vec![0.2, 0.7, 0.4]).unwrap();
        let m = marginal(&f, &Assignment::zeros(1, 2), 0, 1).unwrap();
        assert!((m - 0.5).abs() < 1e-15);
    }
}
