//! Stand-alone runs of the selection game against scripted, random and
//! worst-case adversaries.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linprog::{max_over_y, Variant};
use crate::olo::{self, norm, EtaPolicy};
use crate::rng::{self, Rng};
use crate::selection::{
    dist_to_target, AdversaryPlay, GameConfig, GameRound, GameStats, OracleKind, PlayRecord,
    ProbVector, SelectionGame,
};

pub const GAME_TRACE_HEADER: [&str; 4] = ["t", "theta_norm", "dist_to_S", "selection_regret_bound"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameAdversary {
    /// A fixed cycle of feasible plays.
    Scripted,
    /// Random convex combinations of polytope vertices.
    Random,
    /// Sees `p_t` and maximizes the largest reward coordinate.
    Worstcase,
}

impl fmt::Display for GameAdversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameAdversary::Scripted => "scripted",
            GameAdversary::Random => "random",
            GameAdversary::Worstcase => "worstcase",
        })
    }
}

impl FromStr for GameAdversary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scripted" => Ok(GameAdversary::Scripted),
            "random" => Ok(GameAdversary::Random),
            "worstcase" => Ok(GameAdversary::Worstcase),
            _ => Err(Error::InvalidArgument(format!(
                "selection-game adversary must be scripted, random or worstcase, got {s}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRunConfig {
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub variant: Variant,
    pub adversary: GameAdversary,
    pub seed: u64,
    pub eta: EtaPolicy,
    pub oracle: OracleKind,
    /// Keep the player's per-round record and the adversary's plays.
    pub keep_history: bool,
}

impl GameRunConfig {
    pub fn new(k: usize, horizon: usize, variant: Variant, adversary: GameAdversary) -> Self {
        GameRunConfig {
            k,
            horizon,
            variant,
            adversary,
            seed: 0,
            eta: EtaPolicy::Auto,
            oracle: OracleKind::default(),
            keep_history: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRow {
    pub t: usize,
    /// `‖θ_t‖` of the direction used in round `t`.
    pub theta_norm: f64,
    /// Distance of the average reward vector to the nonpositive orthant.
    pub dist_to_s: f64,
    /// OGD regret bound `D²/η + η Σ_{s ≤ t} ‖f_s‖²`.
    pub selection_regret_bound: f64,
}

#[derive(Clone, Debug)]
pub struct GameRun {
    pub rows: Vec<GameRow>,
    pub selection_regret: f64,
    pub olo_regret: f64,
    /// `D²/η + η Σ ‖f_t‖²` after the last round.
    pub olo_bound: f64,
    /// `2√2 · 3√k · √T`.
    pub rate_bound: f64,
    pub stats: GameStats,
    /// Rounds where `ℓ̂_t` fell below the true reward in some coordinate.
    pub dominance_violations: usize,
    pub rounds: Option<Vec<GameRound>>,
    pub plays: Option<Vec<PlayRecord>>,
}

fn unit(k: usize, i: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[i] = value;
    v
}

fn scripted(t: usize, k: usize, variant: Variant) -> (Vec<f64>, Vec<f64>) {
    let i = (t - 1) % k;
    let ones = vec![1.0; k];
    match (variant, (t - 1) / k % 3) {
        (_, 0) => (unit(k, i, 1.0), unit(k, i, 1.0)),
        (Variant::General, 1) => {
            let mut a = ones.clone();
            a[i] = -1.0;
            (a, ones)
        }
        (Variant::Monotone, 1) => (vec![0.0; k], ones),
        (Variant::General, _) => (vec![0.0; k], unit(k, i, 1.0)),
        (Variant::Monotone, _) => (unit(k, i, 1.0), ones),
    }
}

fn random_play(k: usize, variant: Variant, rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut y = vec![0.0; 2 * k];
    let weights: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let functional: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, vertex) = max_over_y(&functional, variant)?;
        for (acc, v) in y.iter_mut().zip(vertex) {
            *acc += w / total * v;
        }
    }
    let b = y.split_off(k);
    Ok((y, b))
}

/// The `y` maximizing `max_i ℓ(p, y)(i)`; ties go to the lowest `i`.
fn worst_case(p: &ProbVector, variant: Variant) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = p.k();
    let alpha = variant.alpha(k);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for i in 0..k {
        let mut functional = vec![0.0; 2 * k];
        for x in 0..k {
            functional[x] = -p.as_slice()[x];
            functional[k + x] = -alpha * p.as_slice()[x];
        }
        functional[i] += 1.0;
        let (value, y) = max_over_y(&functional, variant)?;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, y));
        }
    }
    let mut y = best.expect("k >= 1").1;
    let b = y.split_off(k);
    Ok((y, b))
}

/// Plays `T` rounds of the selection game and measures regret and distance
/// to the target set.
pub fn run_selection_game(config: &GameRunConfig) -> Result<GameRun> {
    let (k, variant) = (config.k, config.variant);
    if config.horizon == 0 {
        return Err(Error::InvalidArgument("T must be at least 1".into()));
    }
    let mut game = SelectionGame::new(GameConfig {
        k,
        variant,
        eta: config.eta.resolve(k, config.horizon)?,
        oracle: config.oracle,
        keep_history: config.keep_history,
    })?;
    let alpha = game.alpha();
    let mut rng = rng::adversary_stream(config.seed, 0);
    let mut rows = Vec::with_capacity(config.horizon);
    let mut plays = config.keep_history.then(Vec::new);
    let mut best = vec![0.0; k];
    let mut earned = 0.0;
    let mut average = vec![0.0; k];
    let mut dominance_violations = 0;

    for t in 1..=config.horizon {
        let theta_norm = norm(game.theta());
        let p = game.select_next()?;
        let (a, b) = match config.adversary {
            GameAdversary::Scripted => scripted(t, k, variant),
            GameAdversary::Random => random_play(k, variant, &mut rng)?,
            GameAdversary::Worstcase => worst_case(&p, variant)?,
        };
        let play = AdversaryPlay::new(a, b, variant)?;
        let reward = play.reward(&p, alpha)?;
        let outcome = game.feed(&play.b)?;
        if outcome.fill.iter().zip(&reward).any(|(f, r)| f + 1e-9 < *r) {
            dominance_violations += 1;
        }
        for i in 0..k {
            best[i] += play.a[i];
            earned += (alpha * play.b[i] + play.a[i]) * p.as_slice()[i];
            average[i] += (reward[i] - average[i]) / t as f64;
        }
        rows.push(GameRow {
            t,
            theta_norm,
            dist_to_s: dist_to_target(&average),
            selection_regret_bound: game.ogd().regret_bound(),
        });
        if let Some(plays) = plays.as_mut() {
            plays.push(PlayRecord {
                p: p.into(),
                a: play.a,
                b: play.b,
            });
        }
    }

    let selection_regret = best.iter().copied().fold(f64::NEG_INFINITY, f64::max) - earned;
    Ok(GameRun {
        rows,
        selection_regret,
        olo_regret: game.ogd().regret(),
        olo_bound: game.ogd().regret_bound(),
        rate_bound: 2.0 * olo::DIAMETER * olo::loss_norm_bound(k) * (config.horizon as f64).sqrt(),
        stats: *game.stats(),
        dominance_violations,
        rounds: game.history().map(<[GameRound]>::to_vec),
        plays,
    })
}

pub fn write_game_trace(rows: &[GameRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_game_trace_to(rows, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_game_trace_to<W: Write>(rows: &[GameRow], out: W) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(GAME_TRACE_HEADER)?;
    for r in rows {
        writer.write_record([
            r.t.to_string(),
            format!("{:.9}", r.theta_norm),
            format!("{:.9}", r.dist_to_s),
            format!("{:.9}", r.selection_regret_bound),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
