//! Independent reference implementations used as test oracles. They share
//! no code with the library beyond the `KFunction` trait and `Assignment`
//! constructors.

#![allow(dead_code)]

use ksubmax::kfunc::{Assignment, KFunction};

/// All label vectors of `{0..k}^n`, element 0 varying fastest.
pub fn all_labels(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * (k + 1));
        for label in 0..=k {
            for prefix in &out {
                let mut v: Vec<usize> = prefix.clone();
                v.push(label);
                next.push(v);
            }
        }
        out = next;
    }
    // reorder so element 0 is the least significant digit
    out.sort_by_key(|v| v.iter().rev().fold(0usize, |acc, &l| acc * (k + 1) + l));
    out
}

pub fn assignment(labels: &[usize], k: usize) -> Assignment {
    Assignment::new(labels.to_vec(), k).unwrap()
}

fn join_label(x: usize, y: usize) -> usize {
    match (x, y) {
        (0, v) | (v, 0) => v,
        (a, b) if a == b => a,
        _ => 0,
    }
}

fn meet_label(x: usize, y: usize) -> usize {
    if x == y {
        x
    } else {
        0
    }
}

/// Direct double loop over all pairs with the lattice inequality.
pub fn naive_lattice(f: &dyn KFunction, tol: f64) -> bool {
    let (n, k) = (f.n(), f.k());
    let points = all_labels(n, k);
    let values: Vec<f64> = points
        .iter()
        .map(|x| f.evaluate(&assignment(x, k)))
        .collect();
    let index = |v: &[usize]| v.iter().rev().fold(0usize, |acc, &l| acc * (k + 1) + l);
    for (i, x) in points.iter().enumerate() {
        for (j, y) in points.iter().enumerate().skip(i + 1) {
            let join: Vec<usize> = x.iter().zip(y).map(|(&a, &b)| join_label(a, b)).collect();
            let meet: Vec<usize> = x.iter().zip(y).map(|(&a, &b)| meet_label(a, b)).collect();
            if values[i] + values[j] + tol < values[index(&join)] + values[index(&meet)] {
                return false;
            }
        }
    }
    true
}

/// Exhaustive maximum by direct evaluation.
pub fn naive_max(f: &dyn KFunction) -> f64 {
    all_labels(f.n(), f.k())
        .iter()
        .map(|x| f.evaluate(&assignment(x, f.k())))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Membership in the adversary polytope, written out constraint by
/// constraint.
pub fn in_y(a: &[f64], b: &[f64], monotone: bool, tol: f64) -> bool {
    let k = a.len();
    let lo = if monotone { 0.0 } else { -1.0 };
    for i in 0..k {
        for v in [a[i], b[i]] {
            if v < lo - tol || v > 1.0 + tol {
                return false;
            }
        }
        if b[i] + tol < a[i] {
            return false;
        }
        for j in 0..k {
            if i != j && (a[i] + a[j] < -tol || b[i] + b[j] < -tol) {
                return false;
            }
        }
    }
    true
}

/// Points of `{−1, 0, 1}^{2k}` (or `{0, 1}^{2k}`) inside the polytope.
pub fn grid_points(k: usize, monotone: bool) -> Vec<(Vec<f64>, Vec<f64>)> {
    let values: &[f64] = if monotone {
        &[0.0, 1.0]
    } else {
        &[-1.0, 0.0, 1.0]
    };
    let base = values.len();
    let total = base.pow(2 * k as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut y = Vec::with_capacity(2 * k);
        for _ in 0..2 * k {
            y.push(values[code % base]);
            code /= base;
        }
        let b = y.split_off(k);
        if in_y(&y, &b, monotone, 0.0) {
            out.push((y, b));
        }
    }
    out
}

/// `max_y θ·ℓ(p, y)` over a point list.
pub fn max_theta_reward(
    points: &[(Vec<f64>, Vec<f64>)],
    theta: &[f64],
    p: &[f64],
    alpha: f64,
) -> f64 {
    let total: f64 = theta.iter().sum();
    points
        .iter()
        .map(|(a, b)| {
            let shared: f64 = (0..p.len()).map(|i| (alpha * b[i] + a[i]) * p[i]).sum();
            (0..p.len()).map(|i| theta[i] * a[i]).sum::<f64>() - total * shared
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Regret of OGD-style plays against `losses` over `{θ ≥ 0, ‖θ‖ ≤ 1}`.
pub fn reference_olo_regret(losses: &[Vec<f64>], plays: &[Vec<f64>]) -> f64 {
    let k = losses[0].len();
    let mut g = vec![0.0; k];
    let mut played = 0.0;
    for (f, theta) in losses.iter().zip(plays) {
        for i in 0..k {
            g[i] += f[i];
            played += f[i] * theta[i];
        }
    }
    // the minimizer of g·θ over the cap is −max(−g, 0) / ‖max(−g, 0)‖
    let neg: Vec<f64> = g.iter().map(|v| (-v).max(0.0)).collect();
    let len = neg.iter().map(|v| v * v).sum::<f64>().sqrt();
    played + len
}
