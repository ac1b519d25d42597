//! Seeded generators for the adversary function families.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::check::{is_k_submodular_lattice, is_monotone, CHECK_LIMIT};
use super::families::EmbeddedBisubmodular;
use super::opt::BRUTE_FORCE_LIMIT;
use super::{
    assignments, checked_space, space_size, CoverageKFunction, KFunction, SeparableKFunction,
    TabularKFunction,
};
use crate::error::{Error, Result};

/// Attempt budget for [`gen_random_tabular`].
pub const REJECTION_BUDGET: usize = 10_000;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Raises every weight that pairs negatively with the row minimum.
fn repair_pairs(row: &mut [f64]) {
    let (argmin, &min) = row
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("k >= 1");
    if min < 0.0 {
        for (i, w) in row.iter_mut().enumerate() {
            if i != argmin {
                *w = w.max(-min);
            }
        }
    }
}

fn separable_weights(rng: &mut impl Rng, n: usize, k: usize, monotone: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let lo = if monotone { 0.0 } else { -1.0 };
            let mut row: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..1.0)).collect();
            repair_pairs(&mut row);
            row
        })
        .collect()
}

/// Separable function with weights in `[-1, 1]`, repaired to be pairwise
/// monotone, rescaled onto `[0, 1]`.
pub fn gen_separable(n: usize, k: usize, seed: u64) -> Result<SeparableKFunction> {
    validate_sizes(n, k)?;
    let mut rng = rng_for(seed);
    SeparableKFunction::normalized(separable_weights(&mut rng, n, k, false))
}

/// Separable function with nonnegative weights (monotone).
pub fn gen_separable_monotone(n: usize, k: usize, seed: u64) -> Result<SeparableKFunction> {
    validate_sizes(n, k)?;
    let mut rng = rng_for(seed);
    SeparableKFunction::normalized(separable_weights(&mut rng, n, k, true))
}

fn validate_sizes(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "need n, k >= 1 (got n={n}, k={k})"
        )));
    }
    Ok(())
}

fn coverage_sets(
    rng: &mut impl Rng,
    n: usize,
    k: usize,
    m: usize,
) -> (Vec<f64>, Vec<Vec<Vec<usize>>>) {
    let weights = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
    let density = 0.3;
    let covers = (0..n)
        .map(|_| {
            (0..k)
                .map(|_| (0..m).filter(|_| rng.gen_bool(density)).collect())
                .collect()
        })
        .collect();
    (weights, covers)
}

/// Random weighted coverage over a universe of `m` points.
///
/// Normalized by the exact maximum when `(k+1)^n` is enumerable, otherwise
/// by the total point weight.
pub fn gen_coverage(n: usize, k: usize, m: usize, seed: u64) -> Result<CoverageKFunction> {
    validate_sizes(n, k)?;
    if m == 0 {
        return Err(Error::InvalidArgument(
            "coverage universe must be nonempty".into(),
        ));
    }
    let mut rng = rng_for(seed);
    let (weights, covers) = coverage_sets(&mut rng, n, k, m);
    let total: f64 = weights.iter().sum();
    let raw = CoverageKFunction::new(k, weights.clone(), covers.clone(), total)?;
    let norm = if checked_space(n, k, BRUTE_FORCE_LIMIT).is_ok() {
        assignments(n, k)
            .map(|x| raw.covered_weight(&x))
            .fold(0.0, f64::max)
    } else {
        total
    };
    let norm = if norm > 0.0 { norm } else { 1.0 };
    CoverageKFunction::new(k, weights, covers, norm)
}

/// Tuning for [`gen_random_tabular_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TabularGenParams {
    /// Uniform per-entry noise amplitude, relative to the table's range.
    /// Shrinks by [`NOISE_DECAY`] after every rejected proposal.
    pub noise: f64,
    /// Restrict the structured components to monotone ones and reject
    /// non-monotone draws.
    pub monotone: bool,
    pub max_attempts: usize,
}

impl Default for TabularGenParams {
    fn default() -> Self {
        TabularGenParams {
            noise: 2e-3,
            monotone: false,
            max_attempts: REJECTION_BUDGET,
        }
    }
}

pub const NOISE_DECAY: f64 = 0.8;

/// Random k-submodular table by rejection sampling.
pub fn gen_random_tabular(n: usize, k: usize, seed: u64) -> Result<TabularKFunction> {
    gen_random_tabular_with(n, k, seed, TabularGenParams::default())
}

/// Proposal: a random positive mix of a concave function of weighted support
/// size, a separable term and a coverage term, plus uniform noise; rescaled
/// onto `[0, 1]` and kept only if the lattice checker (and, when requested,
/// the monotonicity checker) accepts it. The noiseless mix is k-submodular.
pub fn gen_random_tabular_with(
    n: usize,
    k: usize,
    seed: u64,
    params: TabularGenParams,
) -> Result<TabularKFunction> {
    validate_sizes(n, k)?;
    checked_space(n, k, CHECK_LIMIT)?;
    let mut rng = rng_for(seed);
    let mut noise = params.noise;
    for _ in 0..params.max_attempts {
        let table = propose_table(&mut rng, n, k, noise, params.monotone);
        noise *= NOISE_DECAY;
        let f = TabularKFunction::new(n, k, table)?;
        if !is_k_submodular_lattice(&f)? {
            continue;
        }
        let monotone = is_monotone(&f)?;
        if params.monotone && !monotone {
            continue;
        }
        return Ok(f.with_monotone_claim(monotone));
    }
    Err(Error::SamplingBudget {
        attempts: params.max_attempts,
    })
}

fn propose_table(rng: &mut impl Rng, n: usize, k: usize, noise: f64, monotone: bool) -> Vec<f64> {
    let sizes: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let sep = separable_weights(rng, n, k, monotone);
    let m = 2 * n + 2;
    let (cov_weights, covers) = coverage_sets(rng, n, k, m);
    let cov = CoverageKFunction::new(k, cov_weights.clone(), covers, cov_weights.iter().sum())
        .expect("generated coverage is well formed");
    let mix: [f64; 3] = [
        rng.gen_range(0.2..1.0),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
    ];
    let mut table: Vec<f64> = assignments(n, k)
        .map(|x| {
            let mut size = 0.0;
            let mut lin = 0.0;
            for (j, &l) in x.labels().iter().enumerate() {
                if l != 0 {
                    size += sizes[j];
                    lin += sep[j][l - 1];
                }
            }
            mix[0] * size.sqrt() + mix[1] * lin + mix[2] * cov.evaluate(&x)
        })
        .collect();
    let (lo, hi) = range(&table);
    let amplitude = noise * (hi - lo).max(f64::MIN_POSITIVE);
    if amplitude > 0.0 {
        for v in table.iter_mut() {
            *v += rng.gen_range(-amplitude..=amplitude);
        }
    }
    rescale(&mut table);
    table
}

fn range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn rescale(values: &mut [f64]) {
    let (lo, hi) = range(values);
    let span = hi - lo;
    for v in values.iter_mut() {
        *v = if span > 0.0 {
            ((*v - lo) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
}

/// Random nonnegative submodular set function on `2^n`, as a `k = 1` table
/// (bit `j` of the index is element `j`). Mix of a cut function, a concave
/// function of weighted cardinality and a coverage term; values in `[0, 1]`.
pub fn gen_random_submodular_set(n: usize, seed: u64) -> Result<TabularKFunction> {
    validate_sizes(n, 1)?;
    checked_space(n, 1, CHECK_LIMIT)?;
    let mut rng = rng_for(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.5) {
                edges.push((u, v, rng.gen_range(0.0..1.0)));
            }
        }
    }
    let sizes: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let (cov_weights, covers) = coverage_sets(&mut rng, n, 1, n + 2);
    let cov = CoverageKFunction::new(1, cov_weights.clone(), covers, cov_weights.iter().sum())?;
    let mix: [f64; 3] = [
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
    ];
    let mut table: Vec<f64> = assignments(n, 1)
        .map(|x| {
            let inside = |j: usize| x.label(j) == 1;
            let cut: f64 = edges
                .iter()
                .filter(|(u, v, _)| inside(*u) != inside(*v))
                .map(|e| e.2)
                .sum();
            let size: f64 = (0..n).filter(|&j| inside(j)).map(|j| sizes[j]).sum();
            mix[0] * cut + mix[1] * size.sqrt() + mix[2] * cov.evaluate(&x)
        })
        .collect();
    let max = table.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for v in table.iter_mut() {
            *v /= max;
        }
    }
    TabularKFunction::new(n, 1, table)
}

/// Bisubmodular embedding of a nonnegative set function `g` (given as a
/// `k = 1` table), rescaled onto `[0, 1]` by enumerating `3^n`.
///
/// With `verify`, `g` is first checked for submodularity.
pub fn embed_submodular(g: &TabularKFunction, verify: bool) -> Result<EmbeddedBisubmodular> {
    if g.k() != 1 {
        return Err(Error::InvalidArgument(format!(
            "set function must be a k = 1 table, got k = {}",
            g.k()
        )));
    }
    if g.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument(
            "set function must be nonnegative".into(),
        ));
    }
    if verify && !is_k_submodular_lattice(g)? {
        return Err(Error::NotSubmodular);
    }
    let n = g.n();
    checked_space(n, 2, BRUTE_FORCE_LIMIT)?;
    let probe = EmbeddedBisubmodular::new(g.clone(), 0.0, 1.0);
    let (lo, hi) = range(&assignments(n, 2).map(|x| probe.raw(&x)).collect::<Vec<_>>());
    let (offset, scale) = if lo >= 0.0 {
        (0.0, if hi > 0.0 { 1.0 / hi } else { 0.0 })
    } else {
        let span = hi - lo;
        (-lo / span, 1.0 / span)
    };
    debug_assert!(space_size(n, 2).is_some());
    Ok(EmbeddedBisubmodular::new(g.clone(), offset, scale))
}
