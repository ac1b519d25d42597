//! Function pools and the adversaries that draw from them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::engine::Mode;
use crate::error::{Error, Result};
use crate::kfunc::{
    embed_submodular, gen_coverage, gen_random_submodular_set, gen_random_tabular_with,
    gen_separable, gen_separable_monotone, space_size, Assignment, CheckReport, KFunction,
    TabularGenParams, TabularKFunction, CHECK_LIMIT,
};
use crate::rng::Rng;

/// Function family the adversary draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyChoice {
    Separable,
    Coverage,
    Tabular,
    Embed,
}

impl fmt::Display for FamilyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyChoice::Separable => "separable",
            FamilyChoice::Coverage => "coverage",
            FamilyChoice::Tabular => "tabular",
            FamilyChoice::Embed => "embed",
        })
    }
}

impl FromStr for FamilyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separable" => Ok(FamilyChoice::Separable),
            "coverage" => Ok(FamilyChoice::Coverage),
            "tabular" => Ok(FamilyChoice::Tabular),
            "embed" => Ok(FamilyChoice::Embed),
            _ => Err(Error::InvalidArgument(format!(
                "family must be separable, coverage, tabular or embed, got {s}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversaryKind {
    /// Commits to the whole schedule `f_1..f_T` before play starts.
    Oblivious,
    /// Sees `x_t` and plays the pool function that hurts most.
    Adaptive,
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryKind::Oblivious => "oblivious",
            AdversaryKind::Adaptive => "adaptive",
        })
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oblivious" => Ok(AdversaryKind::Oblivious),
            "adaptive" => Ok(AdversaryKind::Adaptive),
            _ => Err(Error::InvalidArgument(format!(
                "adversary must be oblivious or adaptive, got {s}"
            ))),
        }
    }
}

/// A validated pool member: the function as played plus its full table.
#[derive(Clone, Debug)]
pub struct PoolMember {
    pub function: Arc<dyn KFunction>,
    pub table: TabularKFunction,
}

impl PoolMember {
    /// Tabulates `function` and runs the checkers that fit the instance.
    pub fn validated(function: Arc<dyn KFunction>, mode: Mode) -> Result<Self> {
        let table = TabularKFunction::from_oracle(function.as_ref())?;
        let checkable = space_size(table.n(), table.k()).is_some_and(|s| s <= CHECK_LIMIT);
        if checkable {
            let report = CheckReport::run(&table)?;
            if !report.lattice {
                return Err(Error::InvalidArgument(format!(
                    "adversary emitted a non-k-submodular {:?} function",
                    function.family()
                )));
            }
            if mode == Mode::Monotone && !report.monotone {
                return Err(Error::InvalidArgument(format!(
                    "adversary emitted a non-monotone {:?} function in monotone mode",
                    function.family()
                )));
            }
        } else if mode == Mode::Monotone && !function.claims_monotone() {
            return Err(Error::InvalidArgument(
                "monotone mode needs a family that is monotone by construction".into(),
            ));
        }
        Ok(PoolMember { function, table })
    }
}

/// Draws one function of the requested family.
pub fn generate_function(
    family: FamilyChoice,
    n: usize,
    k: usize,
    mode: Mode,
    coverage_points: usize,
    seed: u64,
) -> Result<Arc<dyn KFunction>> {
    let monotone = mode == Mode::Monotone;
    Ok(match family {
        FamilyChoice::Separable if monotone => Arc::new(gen_separable_monotone(n, k, seed)?),
        FamilyChoice::Separable => Arc::new(gen_separable(n, k, seed)?),
        FamilyChoice::Coverage => Arc::new(gen_coverage(n, k, coverage_points, seed)?),
        FamilyChoice::Tabular => {
            let params = TabularGenParams {
                monotone,
                ..TabularGenParams::default()
            };
            Arc::new(gen_random_tabular_with(n, k, seed, params)?)
        }
        FamilyChoice::Embed => {
            if k != 2 {
                return Err(Error::InvalidArgument(
                    "the embed family needs k = 2".into(),
                ));
            }
            if monotone {
                return Err(Error::InvalidArgument(
                    "the embed family is not monotone; use nonmonotone mode".into(),
                ));
            }
            let g = gen_random_submodular_set(n, seed)?;
            Arc::new(embed_submodular(&g, true)?)
        }
    })
}

/// A pool of `size` validated functions, seeded from `rng`.
pub fn build_pool(
    family: FamilyChoice,
    n: usize,
    k: usize,
    mode: Mode,
    coverage_points: usize,
    size: usize,
    rng: &mut Rng,
) -> Result<Vec<PoolMember>> {
    if size == 0 {
        return Err(Error::InvalidArgument(
            "function pool must not be empty".into(),
        ));
    }
    (0..size)
        .map(|_| {
            let seed = rng.gen::<u64>();
            let f = generate_function(family, n, k, mode, coverage_points, seed)?;
            PoolMember::validated(f, mode)
        })
        .collect()
}

/// Index of the pool function with the smallest value at `x`; ties go to
/// the lowest index.
pub fn adaptive_greedy_adversary(x: &Assignment, pool: &[PoolMember]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (m, member) in pool.iter().enumerate() {
        let value = member.table.value_at(x.index());
        if best.is_none_or(|(_, v)| value < v) {
            best = Some((m, value));
        }
    }
    best.map(|(m, _)| m)
        .ok_or_else(|| Error::InvalidArgument("adaptive adversary needs a non-empty pool".into()))
}

/// Source of `f_t` for one trial.
#[derive(Clone, Debug)]
pub enum Adversary {
    Oblivious {
        pool: Vec<PoolMember>,
        schedule: Vec<usize>,
    },
    Adaptive {
        pool: Vec<PoolMember>,
    },
}

impl Adversary {
    /// Oblivious adversary with a uniformly random schedule over the pool.
    pub fn oblivious(pool: Vec<PoolMember>, horizon: usize, rng: &mut Rng) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::InvalidArgument(
                "function pool must not be empty".into(),
            ));
        }
        let schedule = (0..horizon).map(|_| rng.gen_range(0..pool.len())).collect();
        Ok(Adversary::Oblivious { pool, schedule })
    }

    pub fn adaptive(pool: Vec<PoolMember>) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::InvalidArgument(
                "function pool must not be empty".into(),
            ));
        }
        Ok(Adversary::Adaptive { pool })
    }

    pub fn pool(&self) -> &[PoolMember] {
        match self {
            Adversary::Oblivious { pool, .. } | Adversary::Adaptive { pool } => pool,
        }
    }

    /// Pool index of `f_t` for the 1-based round `t` after the player
    /// committed to `x`.
    pub fn choose(&self, t: usize, x: &Assignment) -> Result<usize> {
        match self {
            Adversary::Oblivious { schedule, .. } => schedule
                .get(t - 1)
                .copied()
                .ok_or(Error::Protocol("oblivious schedule exhausted")),
            Adversary::Adaptive { pool } => adaptive_greedy_adversary(x, pool),
        }
    }
}
