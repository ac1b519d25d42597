//! The k-submodular selection game and its approachability-based player.
//!
//! Each round the player commits to `p_t ∈ Δ_k`, the adversary plays
//! `(a_t, b_t)` from `Y` (or `Y₊`) and only `b_t` is revealed. The player
//! drives the vector reward `ℓ(p, y)(i) = a(i) − Σ_{i'} (α b(i') + a(i')) p(i')`
//! towards the nonpositive orthant: OGD over `K` supplies a direction
//! `θ_t`, the halfspace oracle turns it into `p_t`, and the unseen `a_t` is
//! filled in pessimistically.

mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linprog::{PolytopeY, PolytopeYb, Variant};
use crate::olo::{self, dot, positive_norm, EtaPolicy, Ogd};

pub use oracle::{halfspace_oracle, HalfspaceOracle, OracleKind, OracleOutput, VALIDITY_TOLERANCE};

/// Tolerance for simplex and polytope membership.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

/// A point of the probability simplex `Δ_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidArgument("empty probability vector".into()));
        }
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{p:?} has negative entries"
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > MEMBERSHIP_TOLERANCE {
            return Err(Error::InvalidArgument(format!("{p:?} sums to {total}")));
        }
        Ok(ProbVector(p))
    }

    pub fn uniform(k: usize) -> Self {
        ProbVector(vec![1.0 / k as f64; k])
    }

    pub fn point_mass(k: usize, label: usize) -> Self {
        let mut p = vec![0.0; k];
        p[label - 1] = 1.0;
        ProbVector(p)
    }

    /// Clips round-off negatives and renormalizes.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let clipped: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidArgument(format!("cannot normalize {w:?}")));
        }
        Ok(ProbVector(clipped.into_iter().map(|v| v / total).collect()))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Inverse-CDF sampling in label order; `u ∈ [0, 1)`. Labels are
    /// 1-based.
    pub fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        // u beyond the accumulated mass after round-off: last positive label
        self.0
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.0.len() - 1)
            + 1
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;
    fn try_from(p: Vec<f64>) -> Result<Self> {
        ProbVector::new(p)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// The adversary's move `(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryPlay {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub variant: Variant,
}

impl AdversaryPlay {
    pub fn new(a: Vec<f64>, b: Vec<f64>, variant: Variant) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::dims(a.len(), b.len()));
        }
        if !PolytopeY::new(a.len(), variant).contains(&a, &b, MEMBERSHIP_TOLERANCE) {
            return Err(Error::InvalidArgument(format!(
                "({a:?}, {b:?}) is not a feasible {variant:?} adversary play"
            )));
        }
        Ok(AdversaryPlay { a, b, variant })
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn reward(&self, p: &ProbVector, alpha: f64) -> Result<Vec<f64>> {
        reward_ell(p.as_slice(), &self.a, &self.b, alpha)
    }
}

/// `ℓ(p, (a, b))(i) = a(i) − Σ_{i'} (α b(i') + a(i')) p(i')`.
pub fn reward_ell(p: &[f64], a: &[f64], b: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if p.len() != a.len() || a.len() != b.len() {
        return Err(Error::dims(
            format!("k={}", p.len()),
            format!("a: {}, b: {}", a.len(), b.len()),
        ));
    }
    let shared: f64 = (0..p.len()).map(|i| (alpha * b[i] + a[i]) * p[i]).sum();
    Ok(a.iter().map(|ai| ai - shared).collect())
}

/// `ℓ̂(i) = max_{a ∈ Y(b)} ℓ(p, (a, b))(i)`, one LP per coordinate.
pub fn pessimistic_fill(p: &ProbVector, b: &[f64], variant: Variant) -> Result<Vec<f64>> {
    let k = p.k();
    if b.len() != k {
        return Err(Error::dims(k, b.len()));
    }
    let alpha = variant.alpha(k);
    let mut slice = PolytopeYb::new(b, variant)?;
    let shared_b = alpha * dot(b, p.as_slice());
    let mut fill = Vec::with_capacity(k);
    for i in 0..k {
        let mut objective: Vec<f64> = p.as_slice().iter().map(|v| -v).collect();
        objective[i] += 1.0;
        let (value, _) = slice.maximize(&objective)?;
        fill.push(value - shared_b);
    }
    Ok(fill)
}

/// `dist(z, R₋^k) = ‖max(z, 0)‖ = max_{θ ∈ K} θ·z`.
pub fn dist_to_target(z: &[f64]) -> f64 {
    positive_norm(z)
}

/// One round of the selection game as seen by an outside referee.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayRecord {
    pub p: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// `max_{i*} Σ_t a_t(i*) − Σ_t Σ_i (α b_t(i) + a_t(i)) p_t(i)`; zero for an
/// empty history.
pub fn selection_regret(history: &[PlayRecord], alpha: f64) -> Result<f64> {
    let Some(first) = history.first() else {
        return Ok(0.0);
    };
    let k = first.p.len();
    let mut best = vec![0.0; k];
    let mut earned = 0.0;
    for round in history {
        if round.p.len() != k || round.a.len() != k || round.b.len() != k {
            return Err(Error::dims(
                k,
                round.p.len().max(round.a.len()).max(round.b.len()),
            ));
        }
        for (i, total) in best.iter_mut().enumerate() {
            *total += round.a[i];
            earned += (alpha * round.b[i] + round.a[i]) * round.p[i];
        }
    }
    let best = best.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(best - earned)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub k: usize,
    pub variant: Variant,
    pub eta: f64,
    pub oracle: OracleKind,
    pub keep_history: bool,
}

impl GameConfig {
    pub fn new(k: usize, variant: Variant, eta: EtaPolicy, horizon: usize) -> Result<Self> {
        Ok(GameConfig {
            k,
            variant,
            eta: eta.resolve(k, horizon)?,
            oracle: OracleKind::default(),
            keep_history: false,
        })
    }
}

/// Player-side record of one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRound {
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub b: Vec<f64>,
    pub fill: Vec<f64>,
    /// Oracle LP value `max θ·ℓ(p, ·)` over the oracle's adversary set.
    pub oracle_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedOutcome {
    pub fill: Vec<f64>,
    /// `θ_t·ℓ̂_t`; nonpositive when the oracle is valid for the fill-in.
    pub sign: f64,
}

/// Running diagnostics kept even in streaming mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GameStats {
    pub rounds: usize,
    pub max_oracle_value: f64,
    pub max_sign: f64,
    pub sign_violations: usize,
    pub max_fill_abs: f64,
}

#[derive(Clone, Debug)]
struct Pending {
    theta: Vec<f64>,
    p: ProbVector,
    oracle_value: f64,
}

/// The selection-game player: OGD directions, LP oracle, pessimistic
/// fill-in. `select_next` and `feed` must alternate.
#[derive(Clone, Debug)]
pub struct SelectionGame {
    config: GameConfig,
    alpha: f64,
    ogd: Ogd,
    oracle: HalfspaceOracle,
    polytope: PolytopeY,
    pending: Option<Pending>,
    history: Option<Vec<GameRound>>,
    stats: GameStats,
}

impl SelectionGame {
    pub fn new(config: GameConfig) -> Result<Self> {
        if config.k == 0 {
            return Err(Error::InvalidArgument("selection game needs k >= 1".into()));
        }
        Ok(SelectionGame {
            alpha: config.variant.alpha(config.k),
            ogd: Ogd::new(config.k, config.eta)?,
            oracle: HalfspaceOracle::new(config.k, config.variant, config.oracle),
            polytope: PolytopeY::new(config.k, config.variant),
            pending: None,
            history: config.keep_history.then(Vec::new),
            stats: GameStats::default(),
            config,
        })
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn ogd(&self) -> &Ogd {
        &self.ogd
    }

    pub fn stats(&self) -> &GameStats {
        &self.stats
    }

    pub fn history(&self) -> Option<&[GameRound]> {
        self.history.as_deref()
    }

    /// Rate `g(k, T) = 2 D G √T` guaranteed with the default step size.
    pub fn rate_bound(&self, horizon: usize) -> f64 {
        2.0 * olo::DIAMETER * olo::loss_norm_bound(self.k()) * (horizon as f64).sqrt()
    }

    /// Current direction `θ_t` (before `select_next`, the next one to play).
    pub fn theta(&self) -> &[f64] {
        self.ogd.theta()
    }

    pub fn pending(&self) -> Option<&ProbVector> {
        self.pending.as_ref().map(|p| &p.p)
    }

    pub fn select_next(&mut self) -> Result<ProbVector> {
        if self.pending.is_some() {
            return Err(Error::Protocol("select_next called twice without feed"));
        }
        let theta = self.ogd.theta().to_vec();
        let out = self.oracle.query(&theta)?;
        self.pending = Some(Pending {
            theta,
            p: out.p.clone(),
            oracle_value: out.achieved,
        });
        Ok(out.p)
    }

    pub fn feed(&mut self, b: &[f64]) -> Result<FeedOutcome> {
        if b.len() != self.k() {
            return Err(Error::dims(self.k(), b.len()));
        }
        if self.pending.is_none() {
            return Err(Error::Protocol("feed called without a pending selection"));
        }
        if !self.polytope.contains_b(b, MEMBERSHIP_TOLERANCE) {
            return Err(Error::InvalidArgument(format!(
                "feedback {b:?} is infeasible for the {:?} game",
                self.config.variant
            )));
        }
        let pending = self.pending.take().expect("checked above");
        let fill = pessimistic_fill(&pending.p, b, self.config.variant)?;
        let sign = dot(&pending.theta, &fill);
        let loss: Vec<f64> = fill.iter().map(|v| -v).collect();
        self.ogd.step(&loss)?;

        let stats = &mut self.stats;
        stats.rounds += 1;
        stats.max_oracle_value = stats.max_oracle_value.max(pending.oracle_value);
        stats.max_sign = if stats.rounds == 1 {
            sign
        } else {
            stats.max_sign.max(sign)
        };
        if sign > VALIDITY_TOLERANCE {
            stats.sign_violations += 1;
        }
        stats.max_fill_abs = fill.iter().fold(stats.max_fill_abs, |m, v| m.max(v.abs()));

        if let Some(history) = self.history.as_mut() {
            history.push(GameRound {
                theta: pending.theta,
                p: pending.p.into(),
                b: b.to_vec(),
                fill: fill.clone(),
                oracle_value: pending.oracle_value,
            });
        }
        Ok(FeedOutcome { fill, sign })
    }
}
