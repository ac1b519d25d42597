use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{checked_space, ensure_shape, space_size, Assignment, Family, KFunction};
use crate::error::{Error, Result};
use crate::kfunc::opt::BRUTE_FORCE_LIMIT;

const RANGE_SLACK: f64 = 1e-12;

fn check_unit_range(value: f64, at: impl FnOnce() -> String) -> Result<()> {
    if !value.is_finite() || !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&value) {
        return Err(Error::RangeViolation { value, at: at() });
    }
    Ok(())
}

/// Explicit table over `(k+1)^n` in mixed-radix order.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularKFunction {
    n: usize,
    k: usize,
    monotone: bool,
    values: Vec<f64>,
}

/// On-disk form of a [`TabularKFunction`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularFile {
    pub n: usize,
    pub k: usize,
    pub monotone: bool,
    pub values: Vec<f64>,
}

impl TabularKFunction {
    pub fn new(n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidArgument(
                "tabular function needs n, k >= 1".into(),
            ));
        }
        let expected = space_size(n, k)
            .ok_or_else(|| Error::InvalidArgument("table size overflows".into()))?;
        if values.len() != expected {
            return Err(Error::dims(
                format!("{expected} table entries"),
                values.len(),
            ));
        }
        for (idx, &v) in values.iter().enumerate() {
            check_unit_range(v, || Assignment::from_index(idx, n, k).to_string())?;
        }
        Ok(TabularKFunction {
            n,
            k,
            monotone: false,
            values,
        })
    }

    pub fn constant(n: usize, k: usize, value: f64) -> Result<Self> {
        let size = checked_space(n, k, BRUTE_FORCE_LIMIT)?;
        Self::new(n, k, vec![value; size]).map(|f| f.with_monotone_claim(true))
    }

    /// Tabulates any oracle; limited to brute-force scale.
    pub fn from_oracle(f: &dyn KFunction) -> Result<Self> {
        let size = checked_space(f.n(), f.k(), BRUTE_FORCE_LIMIT)?;
        let values: Vec<f64> = super::assignments(f.n(), f.k())
            .map(|x| f.evaluate(&x))
            .collect();
        debug_assert_eq!(values.len(), size);
        Ok(Self::new(f.n(), f.k(), values)?.with_monotone_claim(f.claims_monotone()))
    }

    pub fn with_monotone_claim(mut self, monotone: bool) -> Self {
        self.monotone = monotone;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn to_file(&self) -> TabularFile {
        TabularFile {
            n: self.n,
            k: self.k,
            monotone: self.monotone,
            values: self.values.clone(),
        }
    }

    pub fn from_file(file: TabularFile) -> Result<Self> {
        Ok(Self::new(file.n, file.k, file.values)?.with_monotone_claim(file.monotone))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file())?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

impl KFunction for TabularKFunction {
    fn n(&self) -> usize {
        self.n
    }
    fn k(&self) -> usize {
        self.k
    }
    fn claims_monotone(&self) -> bool {
        self.monotone
    }
    fn family(&self) -> Family {
        Family::Tabular
    }
    fn evaluate(&self, x: &Assignment) -> f64 {
        debug_assert!(ensure_shape(self, x).is_ok());
        self.values[x.index()]
    }
}

/// `f(x) = offset + scale · Σ_{j ∈ supp(x)} w[j][x(j)]`.
///
/// Pairwise sums `w[j][i] + w[j][i']` must be nonnegative; the function is
/// then k-submodular with orthant submodularity holding with equality.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableKFunction {
    k: usize,
    weights: Vec<Vec<f64>>,
    offset: f64,
    scale: f64,
}

impl SeparableKFunction {
    pub fn new(weights: Vec<Vec<f64>>, offset: f64, scale: f64) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "separable function needs n >= 1".into(),
            ));
        }
        let k = weights[0].len();
        if k == 0 {
            return Err(Error::InvalidArgument(
                "separable function needs k >= 1".into(),
            ));
        }
        if !(scale.is_finite() && scale >= 0.0 && offset.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "offset {offset} / scale {scale} must be finite with scale >= 0"
            )));
        }
        for (j, row) in weights.iter().enumerate() {
            if row.len() != k {
                return Err(Error::dims(format!("{k} weights"), row.len()));
            }
            if row.iter().any(|w| !w.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite weight for element {j}"
                )));
            }
            for i in 0..k {
                for i2 in i + 1..k {
                    if row[i] + row[i2] < 0.0 {
                        return Err(Error::InvalidArgument(format!(
                            "w[{j}][{}] + w[{j}][{}] < 0",
                            i + 1,
                            i2 + 1
                        )));
                    }
                }
            }
        }
        let f = SeparableKFunction {
            k,
            weights,
            offset,
            scale,
        };
        let (lo, hi) = f.raw_range();
        check_unit_range(offset + scale * lo, || "minimizer".into())?;
        check_unit_range(offset + scale * hi, || "maximizer".into())?;
        Ok(f)
    }

    /// Chooses offset and scale so the values span exactly `[0, 1]`.
    pub fn normalized(weights: Vec<Vec<f64>>) -> Result<Self> {
        let probe = SeparableKFunction::new(weights.clone(), 0.0, 0.0)?;
        let (lo, hi) = probe.raw_range();
        let span = hi - lo;
        let scale = if span > 0.0 { 1.0 / span } else { 0.0 };
        Self::new(weights, -lo * scale, scale)
    }

    /// Exact `(min, max)` of the raw sum over `(k+1)^n`.
    fn raw_range(&self) -> (f64, f64) {
        self.weights.iter().fold((0.0, 0.0), |(lo, hi), row| {
            let row_min = row.iter().copied().fold(f64::INFINITY, f64::min);
            let row_max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo + row_min.min(0.0), hi + row_max.max(0.0))
        })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weight(&self, j: usize, i: usize) -> f64 {
        self.weights[j][i - 1]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl KFunction for SeparableKFunction {
    fn n(&self) -> usize {
        self.weights.len()
    }
    fn k(&self) -> usize {
        self.k
    }
    fn claims_monotone(&self) -> bool {
        self.weights.iter().flatten().all(|&w| w >= 0.0)
    }
    fn family(&self) -> Family {
        Family::Separable
    }
    fn evaluate(&self, x: &Assignment) -> f64 {
        let sum: f64 = x
            .labels()
            .iter()
            .zip(&self.weights)
            .filter(|(&l, _)| l != 0)
            .map(|(&l, row)| row[l - 1])
            .sum();
        self.offset + self.scale * sum
    }
}

/// Weighted coverage: `f(x) = w(⋃_{j ∈ supp(x)} S[j][x(j)]) / norm`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageKFunction {
    k: usize,
    universe: usize,
    point_weights: Vec<f64>,
    // covers[j][i - 1] is a bitset over the universe
    covers: Vec<Vec<Vec<u64>>>,
    norm: f64,
}

impl CoverageKFunction {
    pub fn new(
        k: usize,
        point_weights: Vec<f64>,
        covers: Vec<Vec<Vec<usize>>>,
        norm: f64,
    ) -> Result<Self> {
        let universe = point_weights.len();
        if covers.is_empty() || k == 0 {
            return Err(Error::InvalidArgument(
                "coverage function needs n, k >= 1".into(),
            ));
        }
        if point_weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "point weights must be nonnegative".into(),
            ));
        }
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "normalizer {norm} must be positive"
            )));
        }
        let words = universe.div_ceil(64).max(1);
        let mut bitsets = Vec::with_capacity(covers.len());
        for row in &covers {
            if row.len() != k {
                return Err(Error::dims(format!("{k} cover sets"), row.len()));
            }
            let mut row_bits = Vec::with_capacity(k);
            for set in row {
                let mut bits = vec![0u64; words];
                for &u in set {
                    if u >= universe {
                        return Err(Error::InvalidArgument(format!(
                            "cover point {u} outside universe of size {universe}"
                        )));
                    }
                    bits[u / 64] |= 1 << (u % 64);
                }
                row_bits.push(bits);
            }
            bitsets.push(row_bits);
        }
        let total: f64 = point_weights.iter().sum();
        let f = CoverageKFunction {
            k,
            universe,
            point_weights,
            covers: bitsets,
            norm,
        };
        if total > norm {
            // a normalizer below the total weight is fine if no assignment reaches it
            if checked_space(f.n(), k, BRUTE_FORCE_LIMIT).is_err() {
                return Err(Error::InvalidArgument(format!(
                    "normalizer {norm} below total weight {total} on a non-enumerable instance"
                )));
            }
            for x in super::assignments(f.n(), k) {
                check_unit_range(f.evaluate(&x), || x.to_string())?;
            }
        }
        Ok(f)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Unnormalized covered weight.
    pub fn covered_weight(&self, x: &Assignment) -> f64 {
        let words = self.covers[0][0].len();
        let mut union = vec![0u64; words];
        for (j, &l) in x.labels().iter().enumerate() {
            if l != 0 {
                for (acc, bits) in union.iter_mut().zip(&self.covers[j][l - 1]) {
                    *acc |= bits;
                }
            }
        }
        let mut total = 0.0;
        for (w, &word) in union.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let bit = word.trailing_zeros() as usize;
                total += self.point_weights[w * 64 + bit];
                word &= word - 1;
            }
        }
        total
    }
}

impl KFunction for CoverageKFunction {
    fn n(&self) -> usize {
        self.covers.len()
    }
    fn k(&self) -> usize {
        self.k
    }
    fn claims_monotone(&self) -> bool {
        true
    }
    fn family(&self) -> Family {
        Family::Coverage
    }
    fn evaluate(&self, x: &Assignment) -> f64 {
        self.covered_weight(x) / self.norm
    }
}

/// Bisubmodular embedding `f(S, T) = g(S) + g(V∖T) − g(V)` of a set
/// function `g`, affinely rescaled into `[0, 1]`. Label 1 places an element
/// in `S`, label 2 in `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedBisubmodular {
    g: TabularKFunction,
    offset: f64,
    scale: f64,
}

impl EmbeddedBisubmodular {
    pub(crate) fn new(g: TabularKFunction, offset: f64, scale: f64) -> Self {
        EmbeddedBisubmodular { g, offset, scale }
    }

    pub fn set_function(&self) -> &TabularKFunction {
        &self.g
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The embedding before rescaling: `g(S) + g(V∖T) − g(V)` with
    /// `S` the label-1 and `T` the label-2 elements.
    pub fn raw(&self, x: &Assignment) -> f64 {
        let n = self.g.n;
        let full = (1usize << n) - 1;
        let (mut s, mut t) = (0usize, 0usize);
        for (j, &l) in x.labels().iter().enumerate() {
            match l {
                1 => s |= 1 << j,
                2 => t |= 1 << j,
                _ => {}
            }
        }
        self.g.values[s] + self.g.values[full & !t] - self.g.values[full]
    }
}

impl KFunction for EmbeddedBisubmodular {
    fn n(&self) -> usize {
        self.g.n
    }
    fn k(&self) -> usize {
        2
    }
    fn claims_monotone(&self) -> bool {
        false
    }
    fn family(&self) -> Family {
        Family::EmbeddedBisubmodular
    }
    fn evaluate(&self, x: &Assignment) -> f64 {
        self.offset + self.scale * self.raw(x)
    }
}
