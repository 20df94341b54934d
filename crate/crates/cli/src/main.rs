//! `whittle-kit`: index computation, penalty scans and learning runs.
//!
//! Exit codes: 0 success, 2 usage or I/O or parse error, 3 non-stochastic
//! transition matrix, 4 other invalid arm or configuration, 5 solver
//! failure, 6 arm too large for enumeration.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use whittle_core::baselines::{qgi_run, qwi_run, BaselineError, QLearningParams};
use whittle_core::experiments::{ex1_arm, ex2_arm, ex8_arm};
use whittle_core::index::IndexError;
use whittle_core::learner::{
    blinq_run, error_metrics, order_statistics, write_metrics_csv, write_trace_csv,
    ArmBackedSimulator, BlinqConfig, LearningTrace, Reference, Schedule,
};
use whittle_core::mdp::{
    generate_dirichlet_arm, random_dense_arm, validate_arm, ArmJson, RewardLaw,
};
use whittle_core::oracle::{scan_arm, search_non_indexable, OracleError};
use whittle_core::{ewisc, Arm, MdpError};

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<MdpError> for Failure {
    fn from(e: MdpError) -> Self {
        let code = match e {
            MdpError::NotStochastic { .. } => 3,
            MdpError::SingularSystem => 5,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<IndexError> for Failure {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Mdp(e) => e.into(),
            e => Failure { code: 5, message: e.to_string() },
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::Mdp(e) => return e.into(),
            OracleError::TooLarge(_) => 6,
            OracleError::GridTooCoarse { .. } => 2,
            OracleError::NotFound(_) | OracleError::MissingZero(_) => 5,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<BaselineError> for Failure {
    fn from(e: BaselineError) -> Self {
        Failure { code: 4, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "whittle-kit", version, about = "Whittle and Gittins index toolkit")]
struct Cli {
    /// Worker threads for independent learning runs.
    #[arg(long, global = true, env = "WHITTLE_KIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an arm and compute its indices.
    Compute {
        arm: PathBuf,
        /// Override the arm's discount factor.
        #[arg(long)]
        discount: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force scan of the optimal advantages over a penalty grid.
    Scan {
        arm: PathBuf,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long)]
        discount: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn indices from simulated trajectories.
    Learn(LearnArgs),
    /// Generate a random arm.
    Generate {
        #[arg(long)]
        states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = GenKind::Dirichlet)]
        kind: GenKind,
        /// Active reward law of Dirichlet arms.
        #[arg(long, value_enum, default_value_t = Law::FivePlus)]
        law: Law,
        /// Discount of dense arms (Dirichlet arms are always discounted).
        #[arg(long)]
        discount: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random search for a non-indexable arm.
    Search {
        #[arg(long)]
        states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    /// Rested arm with Dirichlet(1/S) active rows.
    Dirichlet,
    /// Restless arm with dense uniform rows.
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    FivePlus,
    Geometric,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Ex1,
    Ex2,
    Ex8,
    Custom,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Algorithm {
    Blinq,
    Qgi,
    Qwi,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Blinq => "blinq",
            Algorithm::Qgi => "qgi",
            Algorithm::Qwi => "qwi",
        }
    }
}

#[derive(clap::Args)]
struct LearnArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Arm file, required for `custom`.
    #[arg(long)]
    arm: Option<PathBuf>,
    /// Defaults to every algorithm applicable to the arm.
    #[arg(long, value_enum, value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
    /// First run seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive run seeds.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    #[arg(long, default_value_t = 2.0)]
    schedule_factor: f64,
    #[arg(long)]
    discount: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Leave the `ewisc_ms` column empty so outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

fn read_arm(path: &Path, discount: Option<f64>) -> CliResult<Arm> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let raw: ArmJson = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let arm = Arm::try_from(raw)?;
    match discount {
        Some(beta) => Ok(arm.with_discount(Some(beta))?),
        None => Ok(arm),
    }
}

fn emit(value: &Value, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn compute(arm: &Path, discount: Option<f64>, out: Option<&Path>) -> CliResult<()> {
    let arm = read_arm(arm, discount)?;
    let report = validate_arm(&arm);
    let result = ewisc(&arm)?;
    let mut value = serde_json::to_value(&result)?;
    value["validation"] = serde_json::to_value(&report)?;
    emit(&value, out)
}

fn scan(arm: &Path, grid: usize, discount: Option<f64>, out: Option<&Path>) -> CliResult<()> {
    let arm = read_arm(arm, discount)?;
    let result = scan_arm(&arm, grid)?;
    emit(&serde_json::to_value(&result)?, out)
}

fn generate(
    states: usize,
    seed: u64,
    kind: GenKind,
    law: Law,
    discount: Option<f64>,
    out: Option<&Path>,
) -> CliResult<()> {
    if states == 0 {
        return Err(Failure::usage("--states must be positive"));
    }
    let arm = match kind {
        GenKind::Dirichlet => {
            let law = match law {
                Law::FivePlus => RewardLaw::FivePlus,
                Law::Geometric => RewardLaw::Geometric,
            };
            let arm = generate_dirichlet_arm(states, seed, law);
            match discount {
                Some(beta) => arm.with_discount(Some(beta))?,
                None => arm,
            }
        }
        GenKind::Dense => {
            if let Some(beta) = discount {
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(MdpError::InvalidDiscount(beta).into());
                }
            }
            random_dense_arm(states, seed, discount)
        }
    };
    emit(&serde_json::to_value(&arm)?, out)
}

fn search(states: usize, seed: u64, max_trials: usize, out: Option<&Path>) -> CliResult<()> {
    let arm = search_non_indexable(seed, states, max_trials)?;
    emit(&serde_json::to_value(&arm)?, out)
}

struct Job {
    algorithm: Algorithm,
    seed: u64,
}

fn run_job(job: &Job, arm: &Arm, args: &LearnArgs, reference: Option<&Reference>) -> CliResult<LearningTrace> {
    let sim = ArmBackedSimulator::new(arm.clone());
    let truth = reference.map(|r| r.indices.as_slice());
    let params = QLearningParams::default();
    let mut trace = match job.algorithm {
        Algorithm::Blinq => {
            let mut config = BlinqConfig::for_arm(arm, args.horizon, job.seed);
            config.schedule = Schedule::new(args.schedule_factor, 1)
                .ok_or_else(|| Failure { code: 4, message: "--schedule-factor must exceed 1".into() })?;
            blinq_run(&sim, &config, reference)
        }
        Algorithm::Qgi => qgi_run(&sim, arm.discount(), &params, args.horizon, job.seed, truth)?,
        Algorithm::Qwi => qwi_run(&sim, arm.discount(), &params, args.horizon, job.seed, truth),
    };
    if args.no_timing {
        trace.records.iter_mut().for_each(|r| r.ewisc_ms = None);
    }
    Ok(trace)
}

fn write_job_files(dir: &Path, trace: &LearningTrace, truth: Option<&[f64]>) -> CliResult<()> {
    let stem = format!("{}_seed{}", trace.algorithm, trace.seed);
    let file = fs::File::create(dir.join(format!("trace_{stem}.csv")))?;
    write_trace_csv(trace, truth, BufWriter::new(file))?;
    if let Some(truth) = truth {
        let file = fs::File::create(dir.join(format!("metrics_{stem}.csv")))?;
        write_metrics_csv(&error_metrics(trace, truth), BufWriter::new(file))?;
    }
    Ok(())
}

/// Final-error order statistics per algorithm, pooled over seeds.
fn summarize(traces: &[LearningTrace], algorithms: &[Algorithm], truth: Option<&[f64]>) -> Value {
    let mut summary = Map::new();
    for alg in algorithms {
        let runs: Vec<&LearningTrace> = traces.iter().filter(|t| t.algorithm == alg.name()).collect();
        let finals: Vec<_> = runs.iter().filter_map(|t| t.last_ok()).collect();
        let entry = if truth.is_none() {
            json!({ "note": "no reference indices" })
        } else if finals.len() < runs.len() {
            json!({ "note": "no index records (coverage not reached)" })
        } else {
            let errors: Vec<f64> = finals
                .iter()
                .flat_map(|r| r.abs_errors.clone().unwrap_or_default())
                .collect();
            let (min, median, max) = order_statistics(&errors);
            let final_t = finals.iter().map(|r| r.t).min().unwrap_or(0);
            json!({ "min": min, "median": median, "max": max, "final_t": final_t })
        };
        summary.insert(alg.name().to_string(), entry);
    }
    Value::Object(summary)
}

fn learn(args: &LearnArgs, threads: Option<usize>) -> CliResult<()> {
    if args.seeds == 0 {
        return Err(Failure::usage("--seeds must be positive"));
    }
    if args.horizon == 0 {
        return Err(Failure::usage("--horizon must be positive"));
    }
    let arm = match (args.experiment, &args.arm) {
        (Experiment::Custom, Some(path)) => read_arm(path, None)?,
        (Experiment::Custom, None) => return Err(Failure::usage("custom experiments need --arm")),
        (_, Some(_)) => return Err(Failure::usage("--arm is only valid with custom")),
        (Experiment::Ex1, None) => ex1_arm(),
        (Experiment::Ex2, None) => ex2_arm().1,
        (Experiment::Ex8, None) => ex8_arm().1,
    };
    let arm = match args.discount {
        Some(beta) => arm.with_discount(Some(beta))?,
        None => arm,
    };
    let gittins = arm.is_rested() && arm.discount().is_some();
    let algorithms = if args.algorithms.is_empty() {
        let mut all = vec![Algorithm::Blinq];
        if gittins {
            all.push(Algorithm::Qgi);
        }
        all.push(Algorithm::Qwi);
        all
    } else {
        let mut chosen = args.algorithms.clone();
        chosen.dedup();
        chosen
    };
    if algorithms.contains(&Algorithm::Qgi) && !gittins {
        return Err(Failure {
            code: 4,
            message: "qgi needs a rested arm with a discount factor".into(),
        });
    }

    let reference = Reference::from_arm(&arm).ok();
    let truth = reference.as_ref().map(|r| r.indices.as_slice());
    fs::create_dir_all(&args.out)?;
    let jobs: Vec<Job> = algorithms
        .iter()
        .flat_map(|&algorithm| (args.seed..args.seed + args.seeds).map(move |seed| Job { algorithm, seed }))
        .collect();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| Failure::usage(e.to_string()))?;
    let traces: Vec<LearningTrace> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let trace = run_job(job, &arm, args, reference.as_ref())?;
                write_job_files(&args.out, &trace, truth)?;
                Ok(trace)
            })
            .collect::<CliResult<_>>()
    })?;

    let summary = summarize(&traces, &algorithms, truth);
    emit(&summary, Some(&args.out.join("summary.json")))?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Compute { arm, discount, out } => compute(&arm, discount, out.as_deref()),
        Command::Scan { arm, grid, discount, out } => scan(&arm, grid, discount, out.as_deref()),
        Command::Learn(args) => learn(&args, cli.threads),
        Command::Generate { states, seed, kind, law, discount, out } => {
            generate(states, seed, kind, law, discount, out.as_deref())
        }
        Command::Search { states, seed, max_trials, out } => search(states, seed, max_trials, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
