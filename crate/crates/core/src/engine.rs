//! The online k-submodular maximizer.
//!
//! One selection game runs per ground-set element. In round `t` the elements
//! are labelled in order `j = 1..n`: game `j` proposes `p_t^(j)`, a label is
//! sampled from it, and after `f_t` is revealed game `j` receives the
//! marginal gains `b_t^(j)(i) = Δ_{j,i} f_t(x_t^(j−1))` of the prefix it saw.
//!
//! With recording switched on the engine keeps every round's trajectory so
//! that [`hybrid_diagnostic`] can replay the hybrid sequence between a
//! comparator `o` and the played `x_t`.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kfunc::{Assignment, KFunction};
use crate::linprog::{PolytopeY, Variant};
use crate::olo::EtaPolicy;
use crate::rng::{self, Rng};
use crate::selection::{GameConfig, OracleKind, ProbVector, SelectionGame};

/// Slack on the `[0, 1]` range of revealed function values.
pub const RANGE_SLACK: f64 = 1e-12;

/// Largest negative marginal accepted as round-off in monotone mode.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Nonmonotone,
    Monotone,
}

impl Mode {
    pub fn variant(self) -> Variant {
        match self {
            Mode::Nonmonotone => Variant::General,
            Mode::Monotone => Variant::Monotone,
        }
    }

    /// The `α` played by each selection game: `1` or `1 − 1/k`.
    pub fn selection_alpha(self, k: usize) -> f64 {
        self.variant().alpha(k)
    }

    /// The approximation ratio of the regret guarantee, `1 / (α + 1)`:
    /// `1/2` or `k / (2k − 1)`.
    pub fn regret_ratio(self, k: usize) -> f64 {
        1.0 / (self.selection_alpha(k) + 1.0)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Nonmonotone => "nonmonotone",
            Mode::Monotone => "monotone",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonmonotone" => Ok(Mode::Nonmonotone),
            "monotone" => Ok(Mode::Monotone),
            _ => Err(Error::InvalidArgument(format!(
                "mode must be `nonmonotone` or `monotone`, got {s}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub n: usize,
    pub k: usize,
    pub mode: Mode,
    pub eta: EtaPolicy,
    /// Horizon `T`, used by the automatic step size.
    pub horizon: usize,
    pub seed: u64,
    pub trial: u32,
    pub oracle: OracleKind,
    /// Keep per-round trajectories for the hybrid diagnostic.
    pub record: bool,
}

impl EngineConfig {
    pub fn new(n: usize, k: usize, mode: Mode, horizon: usize, seed: u64) -> Self {
        EngineConfig {
            n,
            k,
            mode,
            eta: EtaPolicy::Auto,
            horizon,
            seed,
            trial: 0,
            oracle: OracleKind::default(),
            record: false,
        }
    }
}

/// Outcome of one round.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundResult {
    /// 1-based round index.
    pub t: usize,
    pub x: Assignment,
    pub reward: f64,
    /// `feedback[j][i − 1] = b_t^(j)(i)`.
    pub feedback: Vec<Vec<f64>>,
}

/// What the engine remembers about a round in recording mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTrace {
    pub x: Assignment,
    /// The distributions `p_t^(j)`, one per element.
    pub p: Vec<Vec<f64>>,
    pub feedback: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
struct PendingRound {
    x: Assignment,
    p: Vec<ProbVector>,
}

#[derive(Debug)]
pub struct Engine {
    config: EngineConfig,
    games: Vec<SelectionGame>,
    rngs: Vec<Rng>,
    pending: Option<PendingRound>,
    rounds: usize,
    trajectory: Option<Vec<RoundTrace>>,
    min_feedback: f64,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        if config.n == 0 || config.k == 0 {
            return Err(Error::InvalidArgument(
                "engine needs n >= 1 and k >= 1".into(),
            ));
        }
        if config.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let game = GameConfig {
            k: config.k,
            variant: config.mode.variant(),
            eta: config.eta.resolve(config.k, config.horizon)?,
            oracle: config.oracle,
            keep_history: false,
        };
        let games = (0..config.n)
            .map(|_| SelectionGame::new(game))
            .collect::<Result<Vec<_>>>()?;
        let rngs = (0..config.n)
            .map(|j| rng::element_stream(config.seed, config.trial, j))
            .collect();
        Ok(Engine {
            games,
            rngs,
            pending: None,
            rounds: 0,
            trajectory: config.record.then(Vec::new),
            min_feedback: f64::INFINITY,
            config,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn games(&self) -> &[SelectionGame] {
        &self.games
    }

    pub fn trajectory(&self) -> Option<&[RoundTrace]> {
        self.trajectory.as_deref()
    }

    /// Smallest feedback entry seen so far (`+∞` before the first round).
    pub fn min_feedback(&self) -> f64 {
        self.min_feedback
    }

    /// Labels every element in order and returns the full assignment `x_t`.
    pub fn begin_round(&mut self) -> Result<Assignment> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "begin_round called twice without finish_round",
            ));
        }
        let mut x = Assignment::zeros(self.n(), self.k());
        let mut p = Vec::with_capacity(self.n());
        for (j, (game, rng)) in self.games.iter_mut().zip(&mut self.rngs).enumerate() {
            let pj = game.select_next()?;
            x.set(j, pj.sample(rng.gen::<f64>()));
            p.push(pj);
        }
        self.pending = Some(PendingRound { x: x.clone(), p });
        Ok(x)
    }

    /// Reveals `f_t`, feeds every game its marginal gains and records the
    /// reward. Nothing is fed if any value or feedback entry is rejected.
    pub fn finish_round(&mut self, f: &dyn KFunction) -> Result<RoundResult> {
        let Some(pending) = self.pending.as_ref() else {
            return Err(Error::Protocol("finish_round called without begin_round"));
        };
        let (n, k) = (self.n(), self.k());
        if f.n() != n || f.k() != k {
            return Err(Error::dims(
                format!("n={n}, k={k}"),
                format!("n={}, k={}", f.n(), f.k()),
            ));
        }
        let monotone = self.config.mode == Mode::Monotone;
        let eval = |y: &Assignment| -> Result<f64> {
            let v = f.evaluate(y);
            if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) {
                return Err(Error::RangeViolation {
                    value: v,
                    at: y.to_string(),
                });
            }
            Ok(v)
        };

        let mut prefix = Assignment::zeros(n, k);
        let mut base = eval(&prefix)?;
        let mut feedback = Vec::with_capacity(n);
        for j in 0..n {
            let mut b = Vec::with_capacity(k);
            for i in 1..=k {
                let value = eval(&prefix.with_label(j, i))? - base;
                if monotone && value < -MONOTONE_SLACK {
                    return Err(Error::MonotoneViolation {
                        element: j,
                        label: i,
                        value,
                    });
                }
                b.push(value);
            }
            let label = pending.x.label(j);
            prefix.set(j, label);
            base = eval(&prefix)?;
            feedback.push(b);
        }
        let reward = eval(&pending.x)?;

        let pending = self.pending.take().expect("checked above");
        for (game, b) in self.games.iter_mut().zip(&feedback) {
            game.feed(b)?;
        }
        self.min_feedback = feedback
            .iter()
            .flatten()
            .fold(self.min_feedback, |m, &v| m.min(v));
        self.rounds += 1;
        if let Some(trajectory) = self.trajectory.as_mut() {
            trajectory.push(RoundTrace {
                x: pending.x.clone(),
                p: pending.p.into_iter().map(Vec::from).collect(),
                feedback: feedback.clone(),
            });
        }
        Ok(RoundResult {
            t: self.rounds,
            x: pending.x,
            reward,
            feedback,
        })
    }

    /// Plays one full round against `f`.
    pub fn play(&mut self, f: &dyn KFunction) -> Result<RoundResult> {
        self.begin_round()?;
        self.finish_round(f)
    }

    /// Hybrid diagnostic over the recorded trajectory, with each element's
    /// bound set to its game's measured OGD regret.
    pub fn hybrid_diagnostic(
        &self,
        o: &Assignment,
        functions: &[&dyn KFunction],
    ) -> Result<HybridDiagnostic> {
        let trajectory = self.trajectory().ok_or(Error::Protocol(
            "hybrid diagnostic needs a recording engine",
        ))?;
        let mut diag = hybrid_diagnostic(trajectory, o, functions, self.mode())?;
        for (element, game) in diag.per_element.iter_mut().zip(&self.games) {
            element.bound = Some(game.ogd().regret());
        }
        Ok(diag)
    }
}

/// `ratio · comparator − Σ rewards`.
pub fn alpha_regret(rewards: &[f64], comparator_value: f64, ratio: f64) -> f64 {
    if rewards.is_empty() {
        return 0.0;
    }
    ratio * comparator_value - rewards.iter().sum::<f64>()
}

/// One step `(t, j)` of the hybrid sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HybridStep {
    pub t: usize,
    /// 1-based element index.
    pub j: usize,
    /// `o_t^(j)`.
    pub o: Assignment,
    /// `s_t^(j−1)`.
    pub s: Assignment,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Per-element totals of the selection guarantee
/// `Σ_t Σ_i (a(i*) − a(i)) p(i) ≤ α Σ_t Σ_i b(i) p(i) + rate`, `i* = o(j)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ElementDiagnostic {
    pub lhs: f64,
    pub rhs: f64,
    /// Measured rate of the element's selection game, when known.
    pub bound: Option<f64>,
    /// Realized `Σ_t f_t(o_t^(j−1)) − f_t(o_t^(j))`.
    pub hybrid_drop: f64,
    /// Realized `Σ_t f_t(x_t^(j)) − f_t(x_t^(j−1))`.
    pub prefix_gain: f64,
}

impl ElementDiagnostic {
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HybridDiagnostic {
    pub o: Option<Assignment>,
    pub rounds: usize,
    /// Largest `|Σ_j [f(o^(j−1)) − f(o^(j))] − (f(o) − f(x_t))|`.
    pub max_telescoping_error: f64,
    /// Steps where the double-join formula disagreed with "x on the first
    /// j elements, o on the rest".
    pub closed_form_mismatches: usize,
    pub pairs_checked: usize,
    /// Pairs `(a, b)` outside `Y` (or `Y₊`) beyond `1e−9`.
    pub pairs_outside: usize,
    pub per_element: Vec<ElementDiagnostic>,
    pub steps: Vec<HybridStep>,
}

impl HybridDiagnostic {
    /// Whether every element meets its selection guarantee within `tol`.
    /// Elements without a bound are skipped.
    pub fn guarantee_holds(&self, tol: f64) -> bool {
        self.per_element
            .iter()
            .all(|e| e.bound.is_none_or(|bound| e.slack() <= bound + tol))
    }

    /// `Σ_j slack_j ≤ Σ_j bound_j`: the summed form of the guarantee.
    pub fn summed_guarantee_holds(&self, tol: f64) -> bool {
        let slack: f64 = self.per_element.iter().map(ElementDiagnostic::slack).sum();
        let bound: f64 = self.per_element.iter().filter_map(|e| e.bound).sum();
        slack <= bound + tol
    }
}

fn prefix_of(x: &Assignment, j: usize) -> Assignment {
    let mut out = Assignment::zeros(x.n(), x.k());
    for e in 0..j {
        out.set(e, x.label(e));
    }
    out
}

/// Replays the hybrid sequence `o_t^(j) = (o ⊔ x_t^(j)) ⊔ x_t^(j)` between the
/// comparator `o` and each recorded `x_t`.
pub fn hybrid_diagnostic(
    trajectory: &[RoundTrace],
    o: &Assignment,
    functions: &[&dyn KFunction],
    mode: Mode,
) -> Result<HybridDiagnostic> {
    if trajectory.len() != functions.len() {
        return Err(Error::dims(
            format!("{} functions", trajectory.len()),
            functions.len(),
        ));
    }
    if !o.is_full_support() {
        return Err(Error::InvalidArgument(format!(
            "comparator {o} lacks full support"
        )));
    }
    let (n, k) = (o.n(), o.k());
    let alpha = mode.selection_alpha(k);
    let polytope = PolytopeY::new(k, mode.variant());
    let mut diag = HybridDiagnostic {
        o: Some(o.clone()),
        per_element: vec![ElementDiagnostic::default(); n],
        ..HybridDiagnostic::default()
    };

    for (t, (round, f)) in trajectory.iter().zip(functions).enumerate() {
        let x = &round.x;
        if x.n() != n || x.k() != k || f.n() != n || f.k() != k {
            return Err(Error::dims(
                format!("n={n}, k={k}"),
                format!("round {}", t + 1),
            ));
        }
        let mut hybrids = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let xj = prefix_of(x, j);
            let hybrid = o.join(&xj)?.join(&xj)?;
            let mut closed = o.clone();
            for e in 0..j {
                closed.set(e, x.label(e));
            }
            if hybrid != closed {
                diag.closed_form_mismatches += 1;
            }
            hybrids.push(hybrid);
        }
        let values: Vec<f64> = hybrids.iter().map(|h| f.evaluate(h)).collect();
        let telescoped: f64 = values.windows(2).map(|w| w[0] - w[1]).sum();
        let error = (telescoped - (f.evaluate(o) - f.evaluate(x))).abs();
        diag.max_telescoping_error = diag.max_telescoping_error.max(error);

        let mut prefix_value = f.evaluate(&Assignment::zeros(n, k));
        for j in 0..n {
            let mut s = hybrids[j].clone();
            s.set(j, 0);
            let fs = f.evaluate(&s);
            let a: Vec<f64> = (1..=k)
                .map(|i| f.evaluate(&s.with_label(j, i)) - fs)
                .collect();
            let b = &round.feedback[j];
            let p = &round.p[j];
            diag.pairs_checked += 1;
            if !polytope.contains(&a, b, 1e-9) {
                diag.pairs_outside += 1;
            }
            let star = a[o.label(j) - 1];
            let element = &mut diag.per_element[j];
            element.lhs += (0..k).map(|i| (star - a[i]) * p[i]).sum::<f64>();
            element.rhs += alpha * (0..k).map(|i| b[i] * p[i]).sum::<f64>();
            element.hybrid_drop += values[j] - values[j + 1];
            let gained = b[x.label(j) - 1];
            element.prefix_gain += gained;
            prefix_value += gained;
            diag.steps.push(HybridStep {
                t: t + 1,
                j: j + 1,
                o: hybrids[j + 1].clone(),
                s,
                a,
                b: b.clone(),
            });
        }
        debug_assert!((prefix_value - f.evaluate(x)).abs() < 1e-9);
        diag.rounds += 1;
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kfunc::{gen_coverage, gen_separable, SeparableKFunction, TabularKFunction};

    fn engine(n: usize, k: usize, mode: Mode, seed: u64) -> Engine {
        let mut config = EngineConfig::new(n, k, mode, 50, seed);
        config.record = true;
        Engine::new(config).unwrap()
    }

    fn a(labels: &[usize], k: usize) -> Assignment {
        Assignment::new(labels.to_vec(), k).unwrap()
    }

    #[test]
    fn rounds_alternate() {
        let f = TabularKFunction::constant(2, 2, 0.5).unwrap();
        let mut e = engine(2, 2, Mode::Nonmonotone, 1);
        assert!(matches!(e.finish_round(&f), Err(Error::Protocol(_))));
        let x = e.begin_round().unwrap();
        assert!(x.is_full_support());
        assert!(matches!(e.begin_round(), Err(Error::Protocol(_))));
        let r = e.finish_round(&f).unwrap();
        assert_eq!(r.reward, 0.5);
        assert_eq!(r.t, 1);
    }

    #[test]
    fn single_element_feedback_is_the_marginal() {
        // f(0) = 0.1, f(1) = 0.4, f(2) = 0.3
        let f = TabularKFunction::new(1, 2, vec![0.1, 0.4, 0.3]).unwrap();
        let mut e = engine(1, 2, Mode::Nonmonotone, 3);
        let r = e.play(&f).unwrap();
        assert!((r.feedback[0][0] - 0.3).abs() < 1e-15);
        assert!((r.feedback[0][1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn separable_feedback_is_constant() {
        let f = gen_separable(3, 3, 5).unwrap();
        let mut e = engine(3, 3, Mode::Nonmonotone, 5);
        for _ in 0..5 {
            let r = e.play(&f).unwrap();
            for j in 0..3 {
                for i in 1..=3 {
                    let w = f.scale() * f.weight(j, i);
                    assert!((r.feedback[j][i - 1] - w).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_play() {
        let f = gen_coverage(3, 2, 6, 2).unwrap();
        let mut e1 = engine(3, 2, Mode::Monotone, 11);
        let mut e2 = engine(3, 2, Mode::Monotone, 11);
        for _ in 0..20 {
            assert_eq!(e1.play(&f).unwrap(), e2.play(&f).unwrap());
        }
    }

    #[test]
    fn range_violations_are_rejected_before_feeding() {
        #[derive(Debug)]
        struct TooBig;
        impl KFunction for TooBig {
            fn n(&self) -> usize {
                1
            }
            fn k(&self) -> usize {
                2
            }
            fn claims_monotone(&self) -> bool {
                true
            }
            fn family(&self) -> crate::kfunc::Family {
                crate::kfunc::Family::Tabular
            }
            fn evaluate(&self, x: &Assignment) -> f64 {
                if x.label(0) == 2 {
                    1.5
                } else {
                    0.0
                }
            }
        }
        let mut e = engine(1, 2, Mode::Nonmonotone, 0);
        e.begin_round().unwrap();
        assert!(matches!(
            e.finish_round(&TooBig),
            Err(Error::RangeViolation { .. })
        ));
        assert_eq!(e.games()[0].stats().rounds, 0);
    }

    #[test]
    fn monotone_mode_rejects_negative_feedback() {
        let f = SeparableKFunction::new(vec![vec![0.5, -0.25]], 0.5, 1.0).unwrap();
        let mut e = engine(1, 2, Mode::Monotone, 0);
        e.begin_round().unwrap();
        assert!(matches!(
            e.finish_round(&f),
            Err(Error::MonotoneViolation {
                element: 0,
                label: 2,
                ..
            })
        ));
    }

    #[test]
    fn alpha_regret_examples() {
        assert_eq!(alpha_regret(&[], 3.0, 0.5), 0.0);
        assert!((alpha_regret(&[1.0, 1.0], 2.0, 0.5) + 1.0).abs() < 1e-15);
        assert!((Mode::Monotone.regret_ratio(3) - 3.0 / 5.0).abs() < 1e-15);
        assert_eq!(Mode::Nonmonotone.regret_ratio(4), 0.5);
    }

    #[test]
    fn hybrid_double_join_example() {
        // o = (1, 2), x_t = (2, 2): o^(1) = (2, 2)
        let o = a(&[1, 2], 2);
        let x1 = a(&[2, 0], 2);
        assert_eq!(o.join(&x1).unwrap(), a(&[0, 2], 2));
        assert_eq!(o.join(&x1).unwrap().join(&x1).unwrap(), a(&[2, 2], 2));
    }

    #[test]
    fn hybrid_with_o_equal_to_x_is_flat() {
        let f = gen_coverage(2, 2, 5, 1).unwrap();
        let mut e = engine(2, 2, Mode::Nonmonotone, 4);
        let r = e.play(&f).unwrap();
        let d = e.hybrid_diagnostic(&r.x, &[&f]).unwrap();
        assert!(d.steps.iter().all(|s| s.o == r.x));
        assert!(d.max_telescoping_error < 1e-15);
        assert!(d.per_element.iter().all(|el| el.hybrid_drop == 0.0));
    }

    #[test]
    fn hybrid_invariants_on_random_instance() {
        let fs: Vec<_> = (0..30).map(|s| gen_coverage(3, 2, 6, s).unwrap()).collect();
        let mut e = engine(3, 2, Mode::Nonmonotone, 9);
        for f in &fs {
            e.play(f).unwrap();
        }
        let refs: Vec<&dyn KFunction> = fs.iter().map(|f| f as &dyn KFunction).collect();
        let d = e.hybrid_diagnostic(&a(&[1, 2, 1], 2), &refs).unwrap();
        assert_eq!(d.rounds, 30);
        assert_eq!(d.closed_form_mismatches, 0);
        assert_eq!(d.pairs_outside, 0);
        assert!(d.max_telescoping_error <= 1e-12);
        assert!(d.guarantee_holds(1e-6));
        assert!(d.summed_guarantee_holds(1e-6));
    }

    #[test]
    fn hybrid_rejects_partial_comparator() {
        let f = gen_coverage(2, 2, 5, 1).unwrap();
        let mut e = engine(2, 2, Mode::Nonmonotone, 4);
        e.play(&f).unwrap();
        assert!(e.hybrid_diagnostic(&a(&[1, 0], 2), &[&f]).is_err());
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let k = 4;
        let p = ProbVector::uniform(k);
        let mut rng = rng::element_stream(2024, 0, 0);
        let rounds = 10_000;
        let mut counts = vec![0usize; k];
        for _ in 0..rounds {
            counts[p.sample(rng.gen::<f64>()) - 1] += 1;
        }
        let q = 1.0 / k as f64;
        let sigma = (rounds as f64 * q * (1.0 - q)).sqrt();
        for c in counts {
            assert!((c as f64 - rounds as f64 * q).abs() <= 3.0 * sigma, "{c}");
        }
    }
}
