//! Online linear optimization over `K = { θ ≥ 0 : ‖θ‖ ≤ 1 }` with online
//! gradient descent.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Diameter of `K` used in the default step size and the regret bound.
pub const DIAMETER: f64 = std::f64::consts::SQRT_2;

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Euclidean norm of the positive part.
pub(crate) fn positive_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// The nonnegative cap of the unit ball in `R^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionK {
    pub k: usize,
}

impl RegionK {
    pub fn new(k: usize) -> Self {
        RegionK { k }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.k && theta.iter().all(|&v| v >= -1e-12) && norm(theta) <= 1.0 + 1e-12
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        project_k(v)
    }

    /// `min_{θ ∈ K} g·θ = −‖max(−g, 0)‖`.
    pub fn min_linear(&self, g: &[f64]) -> f64 {
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        -positive_norm(&neg)
    }
}

/// Clip to the orthant, then scale back onto the unit ball if needed.
pub fn project_k(v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    let len = norm(&out);
    if len > 1.0 {
        out.iter_mut().for_each(|x| *x /= len);
    }
    out
}

/// Step size `η`: fixed, or `D / (G √T)` with `G = 3√k`. Serialized as
/// `"auto"` or a number.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum EtaPolicy {
    #[default]
    Auto,
    Fixed(f64),
}

impl EtaPolicy {
    pub fn fixed(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {eta} must be positive"
            )));
        }
        Ok(EtaPolicy::Fixed(eta))
    }

    pub fn resolve(self, k: usize, horizon: usize) -> Result<f64> {
        let eta = match self {
            EtaPolicy::Auto => default_eta(k, horizon),
            EtaPolicy::Fixed(eta) => eta,
        };
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {eta} must be positive"
            )));
        }
        Ok(eta)
    }
}

impl std::str::FromStr for EtaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(EtaPolicy::Auto);
        }
        let eta: f64 = s.parse().map_err(|_| {
            Error::InvalidArgument(format!("eta must be `auto` or a number, got {s}"))
        })?;
        EtaPolicy::fixed(eta)
    }
}

impl fmt::Display for EtaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaPolicy::Auto => f.write_str("auto"),
            EtaPolicy::Fixed(eta) => write!(f, "{eta}"),
        }
    }
}

impl Serialize for EtaPolicy {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EtaPolicy::Auto => serializer.serialize_str("auto"),
            EtaPolicy::Fixed(eta) => serializer.serialize_f64(*eta),
        }
    }
}

impl<'de> Deserialize<'de> for EtaPolicy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Number(eta) => EtaPolicy::fixed(eta),
            Raw::Text(text) => text.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Bound on `‖ℓ̂‖` used for `G`: every coordinate of the fill-in lies in
/// `[-3, 3]`.
pub fn loss_norm_bound(k: usize) -> f64 {
    3.0 * (k as f64).sqrt()
}

pub fn default_eta(k: usize, horizon: usize) -> f64 {
    DIAMETER / (loss_norm_bound(k) * (horizon.max(1) as f64).sqrt())
}

/// Online gradient descent on `K`, starting at the origin.
#[derive(Clone, Debug)]
pub struct Ogd {
    theta: Vec<f64>,
    eta: f64,
    rounds: usize,
    cumulative_loss: Vec<f64>,
    played_loss: f64,
    squared_norms: f64,
}

impl Ogd {
    pub fn new(k: usize, eta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("OGD needs k >= 1".into()));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {eta} must be positive"
            )));
        }
        Ok(Ogd {
            theta: vec![0.0; k],
            eta,
            rounds: 0,
            cumulative_loss: vec![0.0; k],
            played_loss: 0.0,
            squared_norms: 0.0,
        })
    }

    pub fn k(&self) -> usize {
        self.theta.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// The current play `θ_t`.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Observes `f_t` against the current play and moves to
    /// `θ_{t+1} = proj_K(θ_t − η f_t)`.
    pub fn step(&mut self, loss: &[f64]) -> Result<&[f64]> {
        if loss.len() != self.k() {
            return Err(Error::dims(self.k(), loss.len()));
        }
        if loss.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite loss vector".into()));
        }
        self.played_loss += dot(loss, &self.theta);
        self.squared_norms += dot(loss, loss);
        for (acc, &f) in self.cumulative_loss.iter_mut().zip(loss) {
            *acc += f;
        }
        let moved: Vec<f64> = self
            .theta
            .iter()
            .zip(loss)
            .map(|(t, f)| t - self.eta * f)
            .collect();
        self.theta = project_k(&moved);
        self.rounds += 1;
        Ok(&self.theta)
    }

    /// `Σ f_t·θ_t − min_{θ ∈ K} Σ f_t·θ`.
    pub fn regret(&self) -> f64 {
        self.played_loss - RegionK::new(self.k()).min_linear(&self.cumulative_loss)
    }

    /// `D²/η + η Σ ‖f_t‖²`.
    pub fn regret_bound(&self) -> f64 {
        DIAMETER * DIAMETER / self.eta + self.eta * self.squared_norms
    }

    pub fn cumulative_loss(&self) -> &[f64] {
        &self.cumulative_loss
    }
}

/// Regret of an arbitrary play sequence against losses `f_1..f_T`.
pub fn olo_regret(losses: &[Vec<f64>], plays: &[Vec<f64>]) -> Result<f64> {
    if losses.len() != plays.len() {
        return Err(Error::dims(losses.len(), plays.len()));
    }
    let Some(first) = losses.first() else {
        return Ok(0.0);
    };
    let k = first.len();
    let mut cumulative = vec![0.0; k];
    let mut played = 0.0;
    for (f, theta) in losses.iter().zip(plays) {
        if f.len() != k || theta.len() != k {
            return Err(Error::dims(k, f.len().max(theta.len())));
        }
        played += dot(f, theta);
        for (acc, v) in cumulative.iter_mut().zip(f) {
            *acc += v;
        }
    }
    Ok(played - RegionK::new(k).min_linear(&cumulative))
}
