//! Experiment orchestration: adversaries, the exact comparator, traces and
//! summaries.

mod adversary;
mod game;
mod trace;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{Engine, EngineConfig, HybridDiagnostic, Mode};
use crate::error::{Error, Result};
use crate::kfunc::{best_in_table, space_size, Assignment, KFunction, BRUTE_FORCE_LIMIT};
use crate::olo::{self, EtaPolicy};
use crate::rng;
use crate::selection::OracleKind;

pub use adversary::{
    adaptive_greedy_adversary, build_pool, generate_function, Adversary, AdversaryKind,
    FamilyChoice, PoolMember,
};
pub use game::{
    run_selection_game, write_game_trace, write_game_trace_to, GameAdversary, GameRow, GameRun,
    GameRunConfig, GAME_TRACE_HEADER,
};
pub use trace::{
    checkpoints, read_trace, tail_nonincreasing, write_trace, write_trace_to, TraceRecord,
    TRACE_HEADER,
};

/// Slack on the per-checkpoint monotonicity of `regret_t / √t`.
pub const TAIL_TOLERANCE: f64 = 1e-9;

/// Slack on the telescoping identity of the hybrid sequence.
pub const TELESCOPING_TOLERANCE: f64 = 1e-12;

/// Slack on each element's selection guarantee.
pub const GUARANTEE_TOLERANCE: f64 = 1e-6;

fn default_trials() -> u32 {
    1
}

/// Everything needed to reproduce a run. Deserializes from the same JSON
/// the CLI accepts with `--config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(default)]
    pub mode: Mode,
    pub family: FamilyChoice,
    #[serde(default = "default_adversary")]
    pub adversary: AdversaryKind,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub eta: EtaPolicy,
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Functions in the adversary's pool; 8 for oblivious, 5 for adaptive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    /// Universe size of coverage instances; `3n` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_points: Option<usize>,
    #[serde(default)]
    pub oracle: OracleKind,
}

fn default_adversary() -> AdversaryKind {
    AdversaryKind::Oblivious
}

impl ExperimentConfig {
    pub fn new(n: usize, k: usize, horizon: usize, family: FamilyChoice) -> Self {
        ExperimentConfig {
            n,
            k,
            horizon,
            mode: Mode::default(),
            family,
            adversary: default_adversary(),
            trials: default_trials(),
            seed: 0,
            eta: EtaPolicy::default(),
            diagnostics: false,
            out: None,
            pool_size: None,
            coverage_points: None,
            oracle: OracleKind::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidArgument("n and k must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("T must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.pool_size == Some(0) {
            return Err(Error::InvalidArgument(
                "pool_size must be at least 1".into(),
            ));
        }
        match space_size(self.n, self.k) {
            Some(size) if size <= BRUTE_FORCE_LIMIT => {}
            _ => {
                return Err(Error::TooLarge {
                    size: (self.k as u128 + 1).saturating_pow(self.n as u32),
                    limit: BRUTE_FORCE_LIMIT as u128,
                })
            }
        }
        if self.family == FamilyChoice::Embed && self.k != 2 {
            return Err(Error::InvalidArgument(
                "the embed family needs k = 2".into(),
            ));
        }
        if self.family == FamilyChoice::Embed && self.mode == Mode::Monotone {
            return Err(Error::InvalidArgument(
                "the embed family is not monotone".into(),
            ));
        }
        self.eta.resolve(self.k, self.horizon)?;
        Ok(())
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size.unwrap_or(match self.adversary {
            AdversaryKind::Oblivious => 8,
            AdversaryKind::Adaptive => 5,
        })
    }

    pub fn coverage_points(&self) -> usize {
        self.coverage_points.unwrap_or(3 * self.n)
    }

    /// The reported approximation ratio: `1/2` or `k/(2k − 1)`.
    pub fn alpha(&self) -> f64 {
        self.mode.regret_ratio(self.k)
    }

    /// `n · 2 D G` with `D = √2`, `G = 3√k`; the regret bound is this times
    /// `√T`.
    pub fn bound_constant(&self) -> f64 {
        self.n as f64 * 2.0 * olo::DIAMETER * olo::loss_norm_bound(self.k)
    }

    /// Builds the adversary of `trial` from its own random stream.
    pub fn adversary_for(&self, trial: u32) -> Result<Adversary> {
        let mut rng = rng::adversary_stream(self.seed, trial);
        let pool = build_pool(
            self.family,
            self.n,
            self.k,
            self.mode,
            self.coverage_points(),
            self.pool_size(),
            &mut rng,
        )?;
        match self.adversary {
            AdversaryKind::Oblivious => Adversary::oblivious(pool, self.horizon, &mut rng),
            AdversaryKind::Adaptive => Adversary::adaptive(pool),
        }
    }
}

/// Hybrid-diagnostic results kept per trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HybridCheck {
    pub max_telescoping_error: f64,
    pub pairs_checked: usize,
    pub pairs_outside: usize,
    pub closed_form_mismatches: usize,
    pub guarantee_holds: bool,
    pub summed_guarantee_holds: bool,
}

impl HybridCheck {
    fn from_diagnostic(d: &HybridDiagnostic) -> Self {
        HybridCheck {
            max_telescoping_error: d.max_telescoping_error,
            pairs_checked: d.pairs_checked,
            pairs_outside: d.pairs_outside,
            closed_form_mismatches: d.closed_form_mismatches,
            guarantee_holds: d.guarantee_holds(GUARANTEE_TOLERANCE),
            summed_guarantee_holds: d.summed_guarantee_holds(GUARANTEE_TOLERANCE),
        }
    }

    fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_telescoping_error > TELESCOPING_TOLERANCE {
            out.push(format!(
                "telescoping error {:e}",
                self.max_telescoping_error
            ));
        }
        if self.pairs_outside > 0 {
            out.push(format!(
                "{} of {} hybrid pairs outside the adversary polytope",
                self.pairs_outside, self.pairs_checked
            ));
        }
        if self.closed_form_mismatches > 0 {
            out.push(format!(
                "{} hybrid closed-form mismatches",
                self.closed_form_mismatches
            ));
        }
        if !self.guarantee_holds || !self.summed_guarantee_holds {
            out.push("per-element selection guarantee violated".into());
        }
        out
    }
}

/// Everything measured in one trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: u32,
    pub records: Vec<TraceRecord>,
    pub comparator: Assignment,
    pub final_alpha_regret: f64,
    /// Smallest feedback entry over all rounds and elements.
    pub min_feedback: f64,
    pub sign_violations: usize,
    pub max_oracle_value: f64,
    /// Largest OGD regret over the element games.
    pub max_ogd_regret: f64,
    pub hybrid: Option<HybridCheck>,
    pub failures: Vec<String>,
}

impl TrialOutcome {
    pub fn tail_nonincreasing(&self) -> bool {
        tail_nonincreasing(&self.records, TAIL_TOLERANCE)
    }
}

/// Runs one trial with the adversary derived from the config.
pub fn run_trial(config: &ExperimentConfig, trial: u32) -> Result<TrialOutcome> {
    let adversary = config.adversary_for(trial)?;
    run_trial_with(config, trial, &adversary)
}

/// Runs one trial against a given adversary.
pub fn run_trial_with(
    config: &ExperimentConfig,
    trial: u32,
    adversary: &Adversary,
) -> Result<TrialOutcome> {
    config.validate()?;
    let (n, k) = (config.n, config.k);
    let pool = adversary.pool();
    if pool.iter().any(|m| m.table.n() != n || m.table.k() != k) {
        return Err(Error::dims(
            format!("pool over n={n}, k={k}"),
            "a different shape",
        ));
    }
    let alpha = config.alpha();
    let mut engine_config = EngineConfig::new(n, k, config.mode, config.horizon, config.seed);
    engine_config.eta = config.eta;
    engine_config.trial = trial;
    engine_config.oracle = config.oracle;
    engine_config.record = config.diagnostics;
    let mut engine = Engine::new(engine_config)?;

    let stops = checkpoints(config.horizon);
    let mut next_stop = 0;
    let mut cumulative = vec![0.0; pool[0].table.values().len()];
    let mut cum_reward = 0.0;
    let mut played = Vec::new();
    let mut records = Vec::with_capacity(stops.len());
    let mut comparator = Assignment::zeros(n, k);

    for t in 1..=config.horizon {
        let x = engine.begin_round()?;
        let m = adversary.choose(t, &x)?;
        let member = pool
            .get(m)
            .ok_or(Error::Protocol("adversary chose outside its pool"))?;
        let round = engine.finish_round(member.function.as_ref())?;
        cum_reward += round.reward;
        for (acc, v) in cumulative.iter_mut().zip(member.table.values()) {
            *acc += v;
        }
        if config.diagnostics {
            played.push(m);
        }
        if stops.get(next_stop) == Some(&t) {
            let (best, opt) = best_in_table(n, k, &cumulative);
            comparator = best;
            records.push(TraceRecord::new(t, round.reward, cum_reward, opt, alpha));
            next_stop += 1;
        }
    }

    let final_alpha_regret = records.last().map_or(0.0, |r| r.alpha_regret);
    let mut failures = Vec::new();
    let stats: Vec<_> = engine.games().iter().map(|g| *g.stats()).collect();
    let sign_violations = stats.iter().map(|s| s.sign_violations).sum();
    if sign_violations > 0 {
        failures.push(format!(
            "{sign_violations} rounds violate the fill-in sign condition"
        ));
    }
    let max_oracle_value = stats.iter().map(|s| s.max_oracle_value).fold(0.0, f64::max);
    let max_ogd_regret = engine
        .games()
        .iter()
        .map(|g| g.ogd().regret())
        .fold(f64::NEG_INFINITY, f64::max);

    let hybrid = if config.diagnostics && comparator.is_full_support() {
        let functions: Vec<&dyn KFunction> =
            played.iter().map(|&m| pool[m].function.as_ref()).collect();
        let diagnostic = engine.hybrid_diagnostic(&comparator, &functions)?;
        let check = HybridCheck::from_diagnostic(&diagnostic);
        failures.extend(check.failures());
        Some(check)
    } else {
        None
    };

    Ok(TrialOutcome {
        trial,
        records,
        comparator,
        final_alpha_regret,
        min_feedback: engine.min_feedback(),
        sign_violations,
        max_oracle_value,
        max_ogd_regret,
        hybrid,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub t: usize,
    pub mean_alpha_regret: f64,
    pub max_alpha_regret: f64,
    pub mean_regret_over_sqrt_t: f64,
    /// `bound_constant · √t`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: u32,
    pub mean_alpha_regret: f64,
    pub max_alpha_regret: f64,
    pub bound_constant: f64,
    pub bound_violated: bool,
    pub per_checkpoint: Vec<CheckpointSummary>,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    /// Fraction of trials whose `regret_t / √t` is non-increasing over the
    /// final half of the checkpoints.
    pub nonincreasing_tail_fraction: f64,
    pub invariant_failures: Vec<String>,
}

impl Summary {
    pub fn from_trials(config: &ExperimentConfig, outcomes: &[TrialOutcome]) -> Self {
        let count = outcomes.len().max(1) as f64;
        let bound_constant = config.bound_constant();
        let stops = checkpoints(config.horizon);
        let per_checkpoint: Vec<CheckpointSummary> = stops
            .iter()
            .enumerate()
            .map(|(c, &t)| {
                let regrets = outcomes
                    .iter()
                    .filter_map(|o| o.records.get(c))
                    .map(|r| r.alpha_regret);
                let (sum, max) =
                    regrets.fold((0.0, f64::NEG_INFINITY), |(s, m), r| (s + r, m.max(r)));
                let mean = sum / count;
                CheckpointSummary {
                    t,
                    mean_alpha_regret: mean,
                    max_alpha_regret: max,
                    mean_regret_over_sqrt_t: mean / (t as f64).sqrt(),
                    bound: bound_constant * (t as f64).sqrt(),
                }
            })
            .collect();
        let bound_violated = per_checkpoint.iter().any(|c| c.mean_alpha_regret > c.bound);
        let mut invariant_failures: Vec<String> = outcomes
            .iter()
            .flat_map(|o| {
                o.failures
                    .iter()
                    .map(move |f| format!("trial {}: {f}", o.trial))
            })
            .collect();
        if bound_violated {
            invariant_failures.push("mean alpha-regret exceeds the regret bound".into());
        }
        let final_regrets = outcomes.iter().map(|o| o.final_alpha_regret);
        Summary {
            trials: outcomes.len() as u32,
            mean_alpha_regret: final_regrets.clone().sum::<f64>() / count,
            max_alpha_regret: final_regrets.fold(f64::NEG_INFINITY, f64::max),
            bound_constant,
            bound_violated,
            per_checkpoint,
            alpha: config.alpha(),
            horizon: config.horizon,
            nonincreasing_tail_fraction: outcomes.iter().filter(|o| o.tail_nonincreasing()).count()
                as f64
                / count,
            invariant_failures,
        }
    }

    pub fn passed(&self) -> bool {
        self.invariant_failures.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub summary: Summary,
    pub outcomes: Vec<TrialOutcome>,
    /// Trace files written, one per trial.
    pub traces: Vec<PathBuf>,
}

pub fn trace_path(dir: &Path, trial: u32) -> PathBuf {
    dir.join(format!("trace_{trial:03}.csv"))
}

pub fn summary_path(dir: &Path) -> PathBuf {
    dir.join("summary.json")
}

/// Runs all trials; with `out` set, writes one trace per trial plus
/// `summary.json` and cross-checks every trace against its file.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let outcomes = (0..config.trials)
        .map(|trial| run_trial(config, trial))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = Summary::from_trials(config, &outcomes);
    let mut traces = Vec::new();
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for outcome in &outcomes {
            let path = trace_path(dir, outcome.trial);
            write_trace(&outcome.records, &path)?;
            if let Some(problem) = parse_back_problem(&path, outcome)? {
                summary.invariant_failures.push(problem);
            }
            traces.push(path);
        }
        write_summary(&summary, &summary_path(dir))?;
    }
    Ok(ExperimentReport {
        summary,
        outcomes,
        traces,
    })
}

/// Recomputes the final α-regret from a written trace.
fn parse_back_problem(path: &Path, outcome: &TrialOutcome) -> Result<Option<String>> {
    let rows = read_trace(path)?;
    let Some(last) = rows.last() else {
        return Ok(Some(format!("{}: empty trace", path.display())));
    };
    let recomputed = last.alpha * last.cum_opt - last.cum_reward;
    if (recomputed - last.alpha_regret).abs() > 1e-8
        || (last.alpha_regret - outcome.final_alpha_regret).abs() > 1e-8
    {
        return Ok(Some(format!(
            "{}: final alpha-regret {} does not match recomputation {}",
            path.display(),
            outcome.final_alpha_regret,
            recomputed
        )));
    }
    Ok(None)
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
