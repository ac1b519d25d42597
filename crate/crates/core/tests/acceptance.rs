//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

mod common;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;

use common::{
    all_labels, assignment, grid_points, in_y, max_theta_reward, naive_lattice, naive_max,
    reference_olo_regret,
};
use ksubmax::engine::{Engine, EngineConfig, Mode};
use ksubmax::harness::{
    run_experiment, run_selection_game, summary_path, trace_path, Adversary, AdversaryKind,
    ExperimentConfig, FamilyChoice, GameAdversary, GameRunConfig, TrialOutcome,
};
use ksubmax::kfunc::{
    brute_force_max, embed_submodular, gen_coverage, gen_random_submodular_set, gen_random_tabular,
    gen_separable, is_k_submodular_lattice, is_orthant_submodular, is_pairwise_monotone,
    Assignment, KFunction, TabularKFunction,
};
use ksubmax::linprog::{max_over_y, Variant};
use ksubmax::olo::{default_eta, Ogd, DIAMETER};
use ksubmax::rng;
use ksubmax::selection::{OracleKind, PlayRecord};

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

fn checker_equivalence() -> Verdict {
    let shapes = [
        (2, 2),
        (3, 2),
        (4, 2),
        (5, 2),
        (2, 3),
        (3, 3),
        (4, 3),
        (3, 4),
        (4, 4),
        (5, 3),
    ];
    let mut rng = rng::stream(101, 0);
    let (mut total, mut accepted, mut agree, mut oracle_agree) = (0, 0, 0, 0);
    for seed in 0..100u64 {
        let (n, k) = shapes[seed as usize % shapes.len()];
        let base = gen_random_tabular(n, k, seed).unwrap();
        let mut values = base.values().to_vec();
        let at = rng.gen_range(0..values.len());
        values[at] = rng.gen::<f64>();
        let perturbed = TabularKFunction::new(n, k, values).unwrap();
        for f in [&base, &perturbed] {
            let lattice = is_k_submodular_lattice(f).unwrap();
            let local = is_pairwise_monotone(f).unwrap() && is_orthant_submodular(f).unwrap();
            total += 1;
            accepted += usize::from(lattice);
            agree += usize::from(lattice == local);
            oracle_agree += usize::from(lattice == naive_lattice(f, 1e-9));
        }
    }
    Verdict::new(
        agree == total && oracle_agree == total && accepted > 0 && accepted < total,
        format!(
            "{agree}/{total} agree ({accepted} accepted, {} rejected); reference pair check agrees on {oracle_agree}/{total}",
            total - accepted
        ),
    )
}

fn full_support_maximizers() -> Verdict {
    let mut checked = 0;
    let mut good = 0;
    for seed in 0..100u64 {
        let k = 2 + (seed as usize % 2);
        let n = 1 + (seed as usize / 2) % 4;
        let f: Box<dyn KFunction> = match seed % 4 {
            0 => Box::new(gen_separable(n, k, seed).unwrap()),
            1 => Box::new(gen_coverage(n, k, 3 * n, seed).unwrap()),
            2 => Box::new(gen_random_tabular(n, k, seed).unwrap()),
            _ if k == 2 => Box::new(
                embed_submodular(&gen_random_submodular_set(n, seed).unwrap(), true).unwrap(),
            ),
            _ => Box::new(gen_coverage(n, k, 2 * n, seed).unwrap()),
        };
        let (x, value) = brute_force_max(f.as_ref()).unwrap();
        checked += 1;
        if x.is_full_support() && value == naive_max(f.as_ref()) && f.evaluate(&x) == value {
            good += 1;
        }
    }
    Verdict::new(
        good == checked,
        format!("{good}/{checked} maximizers have full support and the exact exhaustive value"),
    )
}

fn embedding() -> Verdict {
    let mut good = 0;
    let mut inputs_ok = 0;
    for seed in 0..50u64 {
        let n = 1 + seed as usize % 4;
        let g = gen_random_submodular_set(n, seed + 1000).unwrap();
        inputs_ok += usize::from(naive_lattice(&g, 1e-9) && g.values().iter().all(|&v| v >= 0.0));
        let f = embed_submodular(&g, false).unwrap();
        let table = TabularKFunction::from_oracle(&f).unwrap();
        if is_k_submodular_lattice(&table).unwrap() && naive_lattice(&f, 1e-9) {
            good += 1;
        }
    }
    Verdict::new(
        good == 50 && inputs_ok == 50,
        format!("{good}/50 embeddings pass the k=2 lattice check ({inputs_ok}/50 inputs submodular and nonnegative)"),
    )
}

fn oracle_validity() -> Verdict {
    // the vertex grid must reproduce the LP maximum before it can serve as
    // the reference
    let mut rng = rng::stream(404, 0);
    let mut grid_mismatch = 0;
    for k in [2, 3, 5] {
        for variant in [Variant::General, Variant::Monotone] {
            let points = grid_points(k, variant == Variant::Monotone);
            for _ in 0..100 {
                let c: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let grid = points
                    .iter()
                    .map(|(a, b)| a.iter().chain(b).zip(&c).map(|(y, w)| y * w).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                let (lp, _) = max_over_y(&c, variant).unwrap();
                if (grid - lp).abs() > 1e-9 {
                    grid_mismatch += 1;
                }
            }
        }
    }

    let mut calls = 0;
    let mut valid = 0;
    let mut strengthened_sign = 0;
    let mut standard_rounds = 0;
    let mut standard_sign = 0;
    let mut standard_valid = 0;
    for k in [2, 3, 5] {
        for variant in [Variant::General, Variant::Monotone] {
            let points = grid_points(k, variant == Variant::Monotone);
            let alpha = variant.alpha(k);
            for adversary in [
                GameAdversary::Scripted,
                GameAdversary::Random,
                GameAdversary::Worstcase,
            ] {
                for oracle in [OracleKind::PerCoordinate, OracleKind::Standard] {
                    let mut config = GameRunConfig::new(k, 100, variant, adversary);
                    config.seed = 17 + k as u64;
                    config.oracle = oracle;
                    config.keep_history = true;
                    let run = run_selection_game(&config).unwrap();
                    let rounds = run.rounds.unwrap();
                    let ok = rounds
                        .iter()
                        .filter(|r| max_theta_reward(&points, &r.theta, &r.p, alpha) <= 1e-7)
                        .count();
                    let sign = rounds
                        .iter()
                        .filter(|r| {
                            r.theta.iter().zip(&r.fill).map(|(t, f)| t * f).sum::<f64>() > 1e-7
                        })
                        .count();
                    match oracle {
                        OracleKind::PerCoordinate => {
                            calls += rounds.len();
                            valid += ok;
                            strengthened_sign += sign;
                        }
                        OracleKind::Standard => {
                            standard_rounds += rounds.len();
                            standard_valid += ok;
                            standard_sign += sign;
                        }
                    }
                }
            }
        }
    }
    Verdict::new(
        grid_mismatch == 0 && calls >= 1000 && valid == calls && strengthened_sign == 0 && standard_valid == standard_rounds,
        format!(
            "{valid}/{calls} calls valid over all vertices; fill-in sign violations {strengthened_sign}/{calls} \
             (standard oracle: {standard_valid}/{standard_rounds} valid, sign violation rate {:.3}); \
             vertex grid vs LP mismatches {grid_mismatch}",
            standard_sign as f64 / standard_rounds as f64
        ),
    )
}

/// `max_i Σ_t a_t(i) − Σ_t Σ_x (α b_t(x) + a_t(x)) p_t(x)`.
fn reference_selection_regret(plays: &[PlayRecord], alpha: f64) -> f64 {
    let k = plays[0].a.len();
    let best = (0..k)
        .map(|i| plays.iter().map(|r| r.a[i]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let earned: f64 = plays
        .iter()
        .map(|r| {
            (0..k)
                .map(|x| (alpha * r.b[x] + r.a[x]) * r.p[x])
                .sum::<f64>()
        })
        .sum();
    best - earned
}

fn selection_chain() -> Verdict {
    let mut games = 0;
    let mut good = 0;
    let mut worst_ratio: f64 = f64::NEG_INFINITY;
    for k in [2, 3, 5] {
        for horizon in [100, 1000] {
            for variant in [Variant::General, Variant::Monotone] {
                for adversary in [GameAdversary::Scripted, GameAdversary::Random] {
                    let mut config = GameRunConfig::new(k, horizon, variant, adversary);
                    config.seed = 5 * k as u64 + horizon as u64;
                    config.keep_history = true;
                    let run = run_selection_game(&config).unwrap();
                    let alpha = variant.alpha(k);
                    let regret = reference_selection_regret(run.plays.as_ref().unwrap(), alpha);
                    let rounds = run.rounds.as_ref().unwrap();
                    let losses: Vec<Vec<f64>> = rounds
                        .iter()
                        .map(|r| r.fill.iter().map(|v| -v).collect())
                        .collect();
                    let plays: Vec<Vec<f64>> = rounds.iter().map(|r| r.theta.clone()).collect();
                    let olo = reference_olo_regret(&losses, &plays);
                    let rate =
                        2.0 * 2f64.sqrt() * 3.0 * (k as f64).sqrt() * (horizon as f64).sqrt();
                    games += 1;
                    worst_ratio = worst_ratio.max(regret / rate);
                    if regret <= olo + 1e-6
                        && regret <= rate
                        && (olo - run.olo_regret).abs() < 1e-8
                        && (regret - run.selection_regret).abs() < 1e-8
                    {
                        good += 1;
                    }
                }
            }
        }
    }
    Verdict::new(
        good == games,
        format!("{good}/{games} games satisfy regret <= OLO regret + 1e-6 and <= 2*sqrt(2)*3*sqrt(k)*sqrt(T); worst regret/rate {worst_ratio:.4}"),
    )
}

fn ogd_bound() -> Verdict {
    let mut rng = rng::stream(606, 0);
    let mut good = 0;
    for run in 0..100 {
        let k = 1 + run % 5;
        let horizon = 1000;
        let eta = if run % 2 == 0 {
            default_eta(k, horizon)
        } else {
            10f64.powf(rng.gen_range(-3.0..0.0))
        };
        let scale = rng.gen_range(0.1..3.0);
        let drift: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.5..0.5) * scale).collect();
        let mut ogd = Ogd::new(k, eta).unwrap();
        let mut losses = Vec::with_capacity(horizon);
        let mut plays = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let f: Vec<f64> = drift
                .iter()
                .map(|d| d + rng.gen_range(-scale..scale))
                .collect();
            plays.push(ogd.theta().to_vec());
            ogd.step(&f).unwrap();
            losses.push(f);
        }
        let regret = reference_olo_regret(&losses, &plays);
        let squares: f64 = losses.iter().flatten().map(|v| v * v).sum();
        let bound = DIAMETER * DIAMETER / eta + eta * squares;
        if regret <= bound && (regret - ogd.regret()).abs() < 1e-8 {
            good += 1;
        }
    }
    Verdict::new(
        good == 100,
        format!("{good}/100 runs within D^2/eta + eta*sum ||f_t||^2"),
    )
}

fn grid_configs(mode: Mode, adversary: AdversaryKind) -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for n in [2, 3, 4] {
        for k in [2, 3] {
            for family in [FamilyChoice::Coverage, FamilyChoice::Separable] {
                let mut config = ExperimentConfig::new(n, k, 2000, family);
                config.mode = mode;
                config.adversary = adversary;
                config.trials = 20;
                config.seed = 7000 + 10 * n as u64 + k as u64;
                out.push(config);
            }
        }
    }
    out
}

/// Recomputes `max_x Σ_t f_t(x)` of an oblivious trial by direct evaluation.
fn comparator_matches(config: &ExperimentConfig, outcome: &TrialOutcome) -> bool {
    let Adversary::Oblivious { pool, schedule } = config.adversary_for(outcome.trial).unwrap()
    else {
        return false;
    };
    let points: Vec<Assignment> = all_labels(config.n, config.k)
        .iter()
        .map(|x| assignment(x, config.k))
        .collect();
    let best = points
        .iter()
        .map(|x| {
            schedule
                .iter()
                .map(|&m| pool[m].function.evaluate(x))
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let last = outcome.records.last().unwrap();
    (last.cum_opt - best).abs() < 1e-9
}

struct GridResult {
    configs: usize,
    mean_within: usize,
    tail_ok: usize,
    trials_within: usize,
    trials: usize,
    comparator_ok: usize,
    failures: usize,
    min_feedback: f64,
    worst_mean_ratio: f64,
}

fn run_grid(mode: Mode, adversary: AdversaryKind) -> GridResult {
    let mut r = GridResult {
        configs: 0,
        mean_within: 0,
        tail_ok: 0,
        trials_within: 0,
        trials: 0,
        comparator_ok: 0,
        failures: 0,
        min_feedback: f64::INFINITY,
        worst_mean_ratio: f64::NEG_INFINITY,
    };
    for config in grid_configs(mode, adversary) {
        let report = run_experiment(&config).unwrap();
        let bound = config.bound_constant() * (config.horizon as f64).sqrt();
        let s = &report.summary;
        r.configs += 1;
        r.mean_within += usize::from(s.mean_alpha_regret <= bound);
        r.worst_mean_ratio = r.worst_mean_ratio.max(s.mean_alpha_regret / bound);
        let tails = report
            .outcomes
            .iter()
            .filter(|o| o.tail_nonincreasing())
            .count();
        r.tail_ok += usize::from(tails as f64 >= 0.9 * report.outcomes.len() as f64);
        r.trials += report.outcomes.len();
        r.trials_within += report
            .outcomes
            .iter()
            .filter(|o| o.final_alpha_regret <= bound)
            .count();
        r.failures += s.invariant_failures.len();
        r.min_feedback = report
            .outcomes
            .iter()
            .map(|o| o.min_feedback)
            .fold(r.min_feedback, f64::min);
        if adversary == AdversaryKind::Oblivious {
            r.comparator_ok += usize::from(comparator_matches(&config, &report.outcomes[0]));
        } else {
            r.comparator_ok += 1;
        }
    }
    r
}

fn nonmonotone_regret() -> Verdict {
    let r = run_grid(Mode::Nonmonotone, AdversaryKind::Oblivious);
    Verdict::new(
        r.mean_within == r.configs && r.tail_ok == r.configs && r.comparator_ok == r.configs && r.failures == 0,
        format!(
            "mean 1/2-regret within bound in {}/{} configs (worst mean/bound {:.4}); tail non-increasing in >=90% of trials for {}/{} configs; comparator recomputed for {}/{}; invariant failures {}",
            r.mean_within, r.configs, r.worst_mean_ratio, r.tail_ok, r.configs, r.comparator_ok, r.configs, r.failures
        ),
    )
}

fn monotone_regret() -> Verdict {
    let r = run_grid(Mode::Monotone, AdversaryKind::Oblivious);
    Verdict::new(
        r.mean_within == r.configs && r.min_feedback >= 0.0 && r.comparator_ok == r.configs && r.failures == 0,
        format!(
            "mean k/(2k-1)-regret within bound in {}/{} configs (worst mean/bound {:.4}); min feedback {:.3e}; comparator recomputed for {}/{}; invariant failures {}",
            r.mean_within, r.configs, r.worst_mean_ratio, r.min_feedback, r.comparator_ok, r.configs, r.failures
        ),
    )
}

fn adaptive_regret() -> Verdict {
    let r = run_grid(Mode::Nonmonotone, AdversaryKind::Adaptive);
    let fraction = r.trials_within as f64 / r.trials as f64;
    Verdict::new(
        fraction >= 0.9 && r.mean_within == r.configs && r.failures == 0,
        format!(
            "{}/{} trials within bound ({:.1}%); mean within bound in {}/{} configs (worst mean/bound {:.4}); invariant failures {}",
            r.trials_within, r.trials, 100.0 * fraction, r.mean_within, r.configs, r.worst_mean_ratio, r.failures
        ),
    )
}

fn hybrid_diagnostics() -> Verdict {
    let mut rounds_checked = 0;
    let mut telescoping_bad = 0;
    let mut pairs = 0;
    let mut pairs_bad = 0;
    let mut library_bad = 0;
    let mut worst = 0.0f64;
    let cases = [
        (Mode::Nonmonotone, FamilyChoice::Coverage),
        (Mode::Nonmonotone, FamilyChoice::Separable),
        (Mode::Nonmonotone, FamilyChoice::Tabular),
        (Mode::Nonmonotone, FamilyChoice::Embed),
        (Mode::Monotone, FamilyChoice::Coverage),
        (Mode::Monotone, FamilyChoice::Separable),
        (Mode::Monotone, FamilyChoice::Tabular),
    ];
    for n in [2, 3] {
        for (c, &(mode, family)) in cases.iter().enumerate() {
            let k = 2;
            let mut config = ExperimentConfig::new(n, k, 200, family);
            config.mode = mode;
            config.seed = 900 + c as u64;
            let Adversary::Oblivious { pool, schedule } = config.adversary_for(0).unwrap() else {
                unreachable!()
            };
            let mut engine_config = EngineConfig::new(n, k, mode, 200, config.seed);
            engine_config.record = true;
            let mut engine = Engine::new(engine_config).unwrap();
            let functions: Vec<&dyn KFunction> = schedule
                .iter()
                .map(|&m| pool[m].function.as_ref())
                .collect();
            for f in &functions {
                engine.play(*f).unwrap();
            }
            let points: Vec<Vec<usize>> = all_labels(n, k)
                .into_iter()
                .filter(|x| x.iter().all(|&l| l > 0))
                .collect();
            let o_labels = points
                .iter()
                .max_by(|x, y| {
                    let fx: f64 = functions
                        .iter()
                        .map(|f| f.evaluate(&assignment(x, k)))
                        .sum();
                    let fy: f64 = functions
                        .iter()
                        .map(|f| f.evaluate(&assignment(y, k)))
                        .sum();
                    fx.total_cmp(&fy)
                })
                .unwrap();
            let o = assignment(o_labels, k);
            let diag = engine.hybrid_diagnostic(&o, &functions).unwrap();
            if diag.max_telescoping_error > 1e-12
                || diag.pairs_outside > 0
                || diag.closed_form_mismatches > 0
            {
                library_bad += 1;
            }
            let monotone = mode == Mode::Monotone;
            for step in &diag.steps {
                pairs += 1;
                if !in_y(&step.a, &step.b, monotone, 1e-9) {
                    pairs_bad += 1;
                }
            }
            for (t, round) in engine.trajectory().unwrap().iter().enumerate() {
                let f = functions[t];
                let x = round.x.labels();
                let hybrid = |j: usize| -> f64 {
                    let labels: Vec<usize> = (0..n)
                        .map(|e| if e < j { x[e] } else { o_labels[e] })
                        .collect();
                    f.evaluate(&assignment(&labels, k))
                };
                let telescoped: f64 = (1..=n).map(|j| hybrid(j - 1) - hybrid(j)).sum();
                let error = (telescoped - (f.evaluate(&o) - f.evaluate(&round.x))).abs();
                worst = worst.max(error);
                rounds_checked += 1;
                if error > 1e-12 {
                    telescoping_bad += 1;
                }
            }
        }
    }
    Verdict::new(
        telescoping_bad == 0 && pairs_bad == 0 && library_bad == 0,
        format!(
            "telescoping within 1e-12 in {}/{rounds_checked} rounds (max error {worst:.1e}); {}/{pairs} (a, b) pairs in Y or Y+; library diagnostic flagged {library_bad} runs",
            rounds_checked - telescoping_bad,
            pairs - pairs_bad
        ),
    )
}

fn shipped_configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut out: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    out.sort();
    out
}

fn determinism() -> Verdict {
    let configs = shipped_configs();
    let tmp = tempfile::tempdir().unwrap();
    let mut identical = 0;
    for (c, path) in configs.iter().enumerate() {
        let mut files = Vec::new();
        for attempt in 0..2 {
            let mut config = ExperimentConfig::load(path).unwrap();
            let out = tmp.path().join(format!("{c}-{attempt}"));
            config.out = Some(out.clone());
            run_experiment(&config).unwrap();
            let mut bytes: Vec<Vec<u8>> = (0..config.trials)
                .map(|trial| fs::read(trace_path(&out, trial)).unwrap())
                .collect();
            bytes.push(fs::read(summary_path(&out)).unwrap());
            files.push(bytes);
        }
        identical += usize::from(files[0] == files[1]);
    }
    Verdict::new(
        !configs.is_empty() && identical == configs.len(),
        format!(
            "{identical}/{} shipped configs produce byte-identical traces and summaries",
            configs.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        ("checker equivalence", checker_equivalence),
        ("full-support maximizers", full_support_maximizers),
        ("bisubmodular embedding", embedding),
        ("halfspace oracle validity", oracle_validity),
        ("selection regret chain and rate", selection_chain),
        ("OGD regret bound", ogd_bound),
        ("1/2-regret, oblivious adversaries", nonmonotone_regret),
        ("k/(2k-1)-regret, monotone mode", monotone_regret),
        ("adaptive adversary", adaptive_regret),
        ("hybrid diagnostics", hybrid_diagnostics),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|info| eprintln!("{info}")));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Verdict::new(false, "panicked"));
        let status = if verdict.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!verdict.passed);
        println!(
            "criterion {:>2} {status} {name}: {} [{:.1}s]",
            i + 1,
            verdict.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 11 acceptance criteria passed");
}
