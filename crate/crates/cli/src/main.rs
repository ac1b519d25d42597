use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ksubmax::engine::Mode;
use ksubmax::harness::{
    run_experiment, run_selection_game, write_game_trace, write_game_trace_to, AdversaryKind,
    ExperimentConfig, FamilyChoice, GameAdversary, GameRunConfig,
};
use ksubmax::kfunc::{brute_force_max, CheckReport, KFunction, TabularKFunction};
use ksubmax::linprog::Variant;
use ksubmax::olo::EtaPolicy;
use ksubmax::selection::OracleKind;

#[derive(Parser)]
#[command(
    name = "ksubmax",
    version,
    about = "Online k-submodular maximization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the online maximizer against a generated adversary.
    Simulate(SimulateArgs),
    /// Run the k-submodularity checkers on a tabular function file.
    Check { file: PathBuf },
    /// Exhaustively maximize a tabular function file.
    OfflineOpt { file: PathBuf },
    /// Play the selection game alone and emit a per-round CSV.
    SelectionGame(GameArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Nonmonotone,
    Monotone,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Separable,
    Coverage,
    Tabular,
    Embed,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdversaryArg {
    Oblivious,
    Adaptive,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Standard,
    PerCoordinate,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameAdversaryArg {
    Scripted,
    Random,
    Worstcase,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    General,
    Monotone,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config mirroring the flags; flags given alongside override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "T", value_name = "T")]
    horizon: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long, value_enum)]
    adversary: Option<AdversaryArg>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// `auto` or a positive step size.
    #[arg(long)]
    eta: Option<EtaPolicy>,
    /// Replay the hybrid sequence and check its invariants.
    #[arg(long)]
    diagnostics: bool,
    /// Directory for traces and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    coverage_points: Option<usize>,
    #[arg(long, value_enum)]
    oracle: Option<OracleArg>,
}

#[derive(Args)]
struct GameArgs {
    #[arg(long)]
    k: usize,
    #[arg(long = "T", value_name = "T")]
    horizon: usize,
    #[arg(long, value_enum)]
    adversary: GameAdversaryArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "auto")]
    eta: EtaPolicy,
    #[arg(long, value_enum, default_value = "general")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "per-coordinate")]
    oracle: OracleArg,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl From<OracleArg> for OracleKind {
    fn from(arg: OracleArg) -> Self {
        match arg {
            OracleArg::Standard => OracleKind::Standard,
            OracleArg::PerCoordinate => OracleKind::PerCoordinate,
        }
    }
}

impl SimulateArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)
                .with_context(|| format!("loading {}", path.display()))?,
            None => {
                let (Some(n), Some(k), Some(horizon), Some(family)) =
                    (self.n, self.k, self.horizon, self.family)
                else {
                    bail!("--n, --k, --T and --family are required without --config");
                };
                ExperimentConfig::new(n, k, horizon, family_choice(family))
            }
        };
        if let Some(n) = self.n {
            config.n = n;
        }
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(horizon) = self.horizon {
            config.horizon = horizon;
        }
        if let Some(family) = self.family {
            config.family = family_choice(family);
        }
        if let Some(mode) = self.mode {
            config.mode = match mode {
                ModeArg::Nonmonotone => Mode::Nonmonotone,
                ModeArg::Monotone => Mode::Monotone,
            };
        }
        if let Some(adversary) = self.adversary {
            config.adversary = match adversary {
                AdversaryArg::Oblivious => AdversaryKind::Oblivious,
                AdversaryArg::Adaptive => AdversaryKind::Adaptive,
            };
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(eta) = self.eta {
            config.eta = eta;
        }
        if let Some(oracle) = self.oracle {
            config.oracle = oracle.into();
        }
        config.diagnostics |= self.diagnostics;
        config.out = self.out.or(config.out);
        config.pool_size = self.pool_size.or(config.pool_size);
        config.coverage_points = self.coverage_points.or(config.coverage_points);
        config.validate()?;
        Ok(config)
    }
}

fn family_choice(arg: FamilyArg) -> FamilyChoice {
    match arg {
        FamilyArg::Separable => FamilyChoice::Separable,
        FamilyArg::Coverage => FamilyChoice::Coverage,
        FamilyArg::Tabular => FamilyChoice::Tabular,
        FamilyArg::Embed => FamilyChoice::Embed,
    }
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let config = args.into_config()?;
    let report = run_experiment(&config)?;
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &report.summary)?;
    writeln!(stdout)?;
    if report.summary.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        for failure in &report.summary.invariant_failures {
            eprintln!("invariant failed: {failure}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn check(file: PathBuf) -> Result<ExitCode> {
    let f = TabularKFunction::load(&file)?;
    let report = CheckReport::run(&f)?;
    let out = json!({
        "n": f.n(),
        "k": f.k(),
        "k_submodular": report.is_k_submodular(),
        "lattice": report.lattice,
        "pairwise_monotone": report.pairwise,
        "orthant_submodular": report.orthant,
        "monotone": report.monotone,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(if report.is_k_submodular() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn offline_opt(file: PathBuf) -> Result<ExitCode> {
    let f = TabularKFunction::load(&file)?;
    let (x, value) = brute_force_max(&f)?;
    let out = json!({ "assignment": x.labels(), "value": value });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

fn selection_game(args: GameArgs) -> Result<ExitCode> {
    let variant = match args.variant {
        VariantArg::General => Variant::General,
        VariantArg::Monotone => Variant::Monotone,
    };
    let adversary = match args.adversary {
        GameAdversaryArg::Scripted => GameAdversary::Scripted,
        GameAdversaryArg::Random => GameAdversary::Random,
        GameAdversaryArg::Worstcase => GameAdversary::Worstcase,
    };
    let mut config = GameRunConfig::new(args.k, args.horizon, variant, adversary);
    config.seed = args.seed;
    config.eta = args.eta;
    config.oracle = args.oracle.into();
    let run = run_selection_game(&config)?;
    match &args.out {
        Some(path) => write_game_trace(&run.rows, path)?,
        None => write_game_trace_to(&run.rows, io::stdout().lock())?,
    }
    eprintln!(
        "selection_regret={:.9} olo_regret={:.9} rate_bound={:.9} sign_violations={}",
        run.selection_regret, run.olo_regret, run.rate_bound, run.stats.sign_violations
    );
    let chain_holds = run.selection_regret <= run.olo_regret + 1e-6;
    Ok(if chain_holds && run.stats.sign_violations == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Check { file } => check(file),
        Command::OfflineOpt { file } => offline_opt(file),
        Command::SelectionGame(args) => selection_game(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
