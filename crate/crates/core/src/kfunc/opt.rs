use std::cmp::Ordering;

use super::{checked_space, Assignment, KFunction};
use crate::error::Result;

/// Largest `(k+1)^n` accepted by brute-force paths.
pub const BRUTE_FORCE_LIMIT: usize = 1 << 20;

/// Exhaustive maximizer of `f`.
///
/// Ties (exact float equality) go to the larger support, then to the
/// lexicographically smallest label vector. For `k ≥ 2` and k-submodular `f`
/// the winner therefore has full support.
pub fn brute_force_max(f: &dyn KFunction) -> Result<(Assignment, f64)> {
    checked_space(f.n(), f.k(), BRUTE_FORCE_LIMIT)?;
    let values: Vec<f64> = super::assignments(f.n(), f.k())
        .map(|x| f.evaluate(&x))
        .collect();
    Ok(best_in_table(f.n(), f.k(), &values))
}

/// Same tie-breaking as [`brute_force_max`] over an explicit value table.
pub fn best_in_table(n: usize, k: usize, values: &[f64]) -> (Assignment, f64) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<Assignment> = None;
    for (idx, _) in values.iter().enumerate().filter(|(_, &v)| v == max) {
        let candidate = Assignment::from_index(idx, n, k);
        let better = match &best {
            None => true,
            Some(current) => prefer(&candidate, current) == Ordering::Greater,
        };
        if better {
            best = Some(candidate);
        }
    }
    (best.expect("value table is nonempty"), max)
}

fn prefer(a: &Assignment, b: &Assignment) -> Ordering {
    a.support_len()
        .cmp(&b.support_len())
        .then_with(|| b.labels().cmp(a.labels()))
}
