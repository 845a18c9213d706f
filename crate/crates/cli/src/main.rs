//! Command-line interface: parsing, exact analysis, adversarial checking,
//! safety, erasure checking, Monte Carlo, and Bloom analytics.
//!
//! Exit codes: 0 = success / bound holds, 1 = bound violated or check
//! failed, 2 = usage error, 3 = resource guard hit.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use probsched::analytics;
use probsched::dist::{display_rat, rat_to_f64, Rat};
use probsched::exact::{BoundVerdict, ExactEngine, DEFAULT_MEMO_LIMIT};
use probsched::fixtures;
use probsched::mc;
use probsched::predicate::{parse_predicate, Predicate};
use probsched::report::{HistoryPoint, McFields, RatField, Report};
use probsched::semantics::{
    erasability_check, pexec_n, Config, Policy, RoundRobin, Scripted, UniformRandom,
};
use probsched::syntax::{erase, parse_program, pretty};

#[derive(Parser)]
#[command(
    name = "probsched",
    about = "Exact and Monte Carlo probability analysis for concurrent probabilistic programs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and print the desugared core tree
    Parse(ProgramArgs),
    /// Exact value distribution under a concrete scheduler
    Exact(ExactArgs),
    /// Worst-case violation probability over all schedulers
    Adversary(AdversaryArgs),
    /// Minimum execution mass over all schedulers (stuck-freedom bound)
    Safety(SafetyArgs),
    /// Monte Carlo estimation with exact binomial confidence intervals
    Mc(McArgs),
    /// Print the tape-erased program
    Erase(ProgramArgs),
    /// Check that uniform tape presampling is scheduler-invisible
    EraseCheck(EraseCheckArgs),
    /// Evaluate the Bloom false-positive recurrence
    Efp(EfpArgs),
    /// Brute-force enumeration oracle for the Bloom false-positive rate
    BloomOracle(EfpArgs),
    /// List the fixture catalogue
    Fixtures,
}

#[derive(Args)]
struct ProgramArgs {
    /// Path to a `.cpl` program file
    file: Option<String>,
    /// Use a named fixture instead of a file
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    program: ProgramArgs,
    /// Scheduler: round_robin, uniform_random, or scripted:i,j,k
    #[arg(long, default_value = "round_robin")]
    scheduler: String,
    /// Horizon in scheduler steps; defaults to the fixture's
    /// recommendation or doubling until two consecutive probes agree
    #[arg(long)]
    horizon: Option<u64>,
    /// Predicate to report a violation probability for
    #[arg(long)]
    predicate: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AdversaryArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    predicate: Option<String>,
    /// Bound `p/q` to check the worst case against
    #[arg(long)]
    bound: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SafetyArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_steps: u64,
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    #[arg(long, default_value = "uniform_random")]
    scheduler: String,
    #[arg(long)]
    predicate: Option<String>,
    /// Count timeouts and stuck runs as violations (conservative reading)
    #[arg(long)]
    timeout_as_violation: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EraseCheckArgs {
    #[command(flatten)]
    program: ProgramArgs,
    /// Check depth in scheduler steps
    #[arg(long, default_value_t = 10)]
    horizon: u64,
    #[arg(long, default_value = "round_robin")]
    scheduler: String,
}

#[derive(Args)]
struct EfpArgs {
    /// Array size in bits (S)
    #[arg(long)]
    size: u64,
    /// Number of hash functions (k)
    #[arg(long)]
    hashes: u64,
    /// Number of inserted distinct keys (N)
    #[arg(long, alias = "keys")]
    insertions: u64,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Program(String),
    #[error(transparent)]
    Engine(#[from] probsched::exact::EngineError),
    #[error(transparent)]
    Bloom(#[from] analytics::BloomError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Program(_) => 2,
            CliError::Engine(_) => 3,
            CliError::Bloom(analytics::BloomError::TooLarge { .. }) => 3,
            CliError::Bloom(_) => 2,
        }
    }
}

/// Resolved program input plus fixture defaults.
struct Loaded {
    label: String,
    program: probsched::syntax::Expr,
    fixture: Option<fixtures::Fixture>,
}

fn load(args: &ProgramArgs) -> Result<Loaded, CliError> {
    match (&args.file, &args.fixture) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "pass either a file or --fixture, not both".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "pass a program file or --fixture NAME".into(),
        )),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            let program =
                parse_program(&text).map_err(|e| CliError::Program(format!("{path}: {e}")))?;
            Ok(Loaded {
                label: path.clone(),
                program,
                fixture: None,
            })
        }
        (None, Some(name)) => {
            let f = fixtures::fixture(name).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Loaded {
                label: format!("fixture {name}"),
                program: f.program(),
                fixture: Some(f),
            })
        }
    }
}

fn scheduler_from(name: &str) -> Result<Box<dyn Policy>, CliError> {
    if name == "round_robin" {
        return Ok(Box::new(RoundRobin));
    }
    if name == "uniform_random" {
        return Ok(Box::new(UniformRandom));
    }
    if let Some(rest) = name.strip_prefix("scripted:") {
        let script: Result<Vec<usize>, _> = rest.split(',').map(|t| t.trim().parse()).collect();
        return Ok(Box::new(Scripted(script.map_err(|_| {
            CliError::Usage(format!("bad script `{rest}`; expected e.g. scripted:0,1,0"))
        })?)));
    }
    Err(CliError::Usage(format!(
        "unknown scheduler `{name}`; use round_robin, uniform_random, or scripted:i,j,k"
    )))
}

fn predicate_from(
    explicit: &Option<String>,
    fixture: &Option<fixtures::Fixture>,
) -> Result<Predicate, CliError> {
    match explicit {
        Some(text) => parse_predicate(text).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(fixture
            .as_ref()
            .map(|f| f.predicate.clone())
            .unwrap_or_else(Predicate::always)),
    }
}

fn parse_rat(text: &str) -> Result<Rat, CliError> {
    let bad = || CliError::Usage(format!("bad rational `{text}`; expected p/q or an integer"));
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ok(probsched::dist::rat(n, d))
    } else {
        let n: i64 = text.trim().parse().map_err(|_| bad())?;
        Ok(probsched::dist::rat(n, 1))
    }
}

fn engine() -> ExactEngine {
    let limit = std::env::var("PROBSCHED_MEMO_LIMIT")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MEMO_LIMIT);
    ExactEngine::new().with_memo_limit(limit)
}

fn emit(report: &Report, json: bool) {
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
}

const ADVERSARY_NOTE: &str = "the adversary is full-view (it sees tape queues); \
its value upper-bounds the violation probability of every tape-censored \
probabilistic scheduler at this horizon";

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Parse(args) => {
            let loaded = load(&args)?;
            println!("{}", pretty(&loaded.program));
            Ok(ExitCode::SUCCESS)
        }
        Command::Erase(args) => {
            let loaded = load(&args)?;
            println!("{}", pretty(&erase(&loaded.program)));
            Ok(ExitCode::SUCCESS)
        }
        Command::Exact(args) => {
            let loaded = load(&args.program)?;
            let policy = scheduler_from(&args.scheduler)?;
            let phi = predicate_from(&args.predicate, &loaded.fixture)?;
            let mut eng = engine();
            let cfg = Config::initial(loaded.program.clone());
            let (horizon, dist, residual) = match args
                .horizon
                .or(loaded.fixture.as_ref().map(|f| f.horizon))
            {
                Some(h) => {
                    let (d, r) = eng.value_dist(policy.as_ref(), &cfg, h)?;
                    (h, d, r)
                }
                None => auto_horizon(&mut eng, policy.as_ref(), &cfg)?,
            };
            let violation = dist.prob(|v| !phi.eval(v));
            let mut report = Report::new(loaded.label, "exact");
            report.fixture = loaded.fixture.as_ref().map(|f| f.name.to_string());
            report.scheduler = Some(args.scheduler.clone());
            report.predicate = Some(phi.to_string());
            report.horizon = Some(horizon);
            report.distribution = Some(dist.canonical_text());
            report.residual = Some(RatField::new(&residual));
            report.value = Some(RatField::new(violation.as_rat()));
            emit(&report, args.json);
            Ok(ExitCode::SUCCESS)
        }
        Command::Adversary(args) => {
            let loaded = load(&args.program)?;
            let phi = predicate_from(&args.predicate, &loaded.fixture)?;
            let horizon = args
                .horizon
                .or(loaded.fixture.as_ref().map(|f| f.horizon))
                .ok_or_else(|| CliError::Usage("--horizon required for a raw file".into()))?;
            let mut eng = engine();
            let cfg = Config::initial(loaded.program.clone());
            let history = eng.sup_violation_history(&cfg, &phi, (horizon / 8).max(1), horizon)?;
            let value = history.last().unwrap().1.clone();
            let witness = eng.witness_script(&cfg, horizon, &phi)?;
            let mut report = Report::new(loaded.label, "sup_violation");
            report.fixture = loaded.fixture.as_ref().map(|f| f.name.to_string());
            report.predicate = Some(phi.to_string());
            report.horizon = Some(horizon);
            report.value = Some(RatField::new(value.as_rat()));
            report.monotone_history = Some(
                history
                    .iter()
                    .map(|(h, p)| HistoryPoint {
                        horizon: *h,
                        value: RatField::new(p.as_rat()),
                    })
                    .collect(),
            );
            report.witness = Some(witness);
            report.note = Some(ADVERSARY_NOTE.to_string());
            let exit = match &args.bound {
                None => ExitCode::SUCCESS,
                Some(btext) => {
                    let bound = parse_rat(btext)?;
                    match eng.check_bound(&cfg, horizon, &phi, &bound)? {
                        BoundVerdict::HoldsAtHorizon { .. } => ExitCode::SUCCESS,
                        BoundVerdict::Violated { witness, .. } => {
                            report.witness = Some(witness);
                            ExitCode::from(1)
                        }
                    }
                }
            };
            emit(&report, args.json);
            Ok(exit)
        }
        Command::Safety(args) => {
            let loaded = load(&args.program)?;
            let horizon = args
                .horizon
                .or(loaded.fixture.as_ref().map(|f| f.horizon))
                .ok_or_else(|| CliError::Usage("--horizon required for a raw file".into()))?;
            let mut eng = engine();
            let cfg = Config::initial(loaded.program.clone());
            let v = eng.min_mass(&cfg, horizon)?;
            let mut report = Report::new(loaded.label, "min_mass");
            report.fixture = loaded.fixture.as_ref().map(|f| f.name.to_string());
            report.horizon = Some(horizon);
            report.value = Some(RatField::new(v.as_rat()));
            emit(&report, args.json);
            Ok(ExitCode::SUCCESS)
        }
        Command::Mc(args) => {
            let loaded = load(&args.program)?;
            let policy = scheduler_from(&args.scheduler)?;
            let phi = predicate_from(&args.predicate, &loaded.fixture)?;
            if args.trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            if !(args.confidence > 0.0 && args.confidence < 1.0) {
                return Err(CliError::Usage("--confidence must be in (0,1)".into()));
            }
            let cfg = Config::initial(loaded.program.clone());
            let est = mc::estimate(
                policy.as_ref(),
                &cfg,
                &phi,
                args.trials,
                args.seed,
                args.max_steps,
                args.confidence,
                args.timeout_as_violation,
            );
            let mut report = Report::new(loaded.label, "mc");
            report.fixture = loaded.fixture.as_ref().map(|f| f.name.to_string());
            report.scheduler = Some(args.scheduler.clone());
            report.predicate = Some(phi.to_string());
            report.horizon = Some(args.max_steps);
            report.estimate = Some(McFields::from(&est));
            emit(&report, args.json);
            Ok(ExitCode::SUCCESS)
        }
        Command::EraseCheck(args) => {
            let loaded = load(&args.program)?;
            let policy = scheduler_from(&args.scheduler)?;
            let cfg = Config::initial(loaded.program.clone());
            match first_tape_config(&cfg, 600) {
                None => {
                    println!("no tape is ever allocated; trivially erasable");
                    Ok(ExitCode::SUCCESS)
                }
                Some(tcfg) => {
                    let mut all_pass = true;
                    let labels: Vec<_> = tcfg.state.tapes.keys().copied().collect();
                    for l in labels {
                        let verdict = erasability_check(policy.as_ref(), 0, &tcfg, l, args.horizon)
                            .map_err(|e| CliError::Program(e.to_string()))?;
                        let ok = verdict.passed();
                        all_pass &= ok;
                        println!(
                            "tape {l}: {}",
                            if ok {
                                "erasable (pass)"
                            } else {
                                "NOT erasable (fail)"
                            }
                        );
                    }
                    Ok(if all_pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    })
                }
            }
        }
        Command::Efp(args) => {
            let v = analytics::efp(args.hashes * args.insertions, 0, args.size, args.hashes)?;
            print_rat_report("efp", &args, &v);
            Ok(ExitCode::SUCCESS)
        }
        Command::BloomOracle(args) => {
            let v = analytics::bloom_bruteforce(args.size, args.hashes, args.insertions)?;
            print_rat_report("bloom-oracle", &args, &v);
            Ok(ExitCode::SUCCESS)
        }
        Command::Fixtures => {
            for name in fixtures::FIXTURE_NAMES {
                let f = fixtures::fixture(name).expect("catalogue name");
                println!("{:14} horizon {:5}  {:?}", name, f.horizon, f.expectation);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_rat_report(mode: &str, args: &EfpArgs, v: &Rat) {
    if args.json {
        let mut report = Report::new(
            format!("S={} k={} N={}", args.size, args.hashes, args.insertions),
            mode,
        );
        report.value = Some(RatField::new(v));
        println!("{}", report.to_json());
    } else {
        println!("{} ({})", display_rat(v), rat_to_f64(v));
    }
}

/// Doubles the horizon until two consecutive probes agree on both the
/// distribution and the residual.
fn auto_horizon(
    eng: &mut ExactEngine,
    policy: &dyn Policy,
    cfg: &Config,
) -> Result<(u64, probsched::dist::Dist<probsched::syntax::Value>, Rat), CliError> {
    let mut h = 8u64;
    let mut prev: Option<(probsched::dist::Dist<probsched::syntax::Value>, Rat)> = None;
    loop {
        let (d, r) = eng.value_dist(policy, cfg, h)?;
        if let Some((pd, pr)) = &prev {
            if *pd == d && *pr == r {
                return Ok((h, d, r));
            }
        }
        if h >= 1 << 14 {
            return Ok((h, d, r));
        }
        prev = Some((d, r));
        h *= 2;
    }
}

/// Runs the program under round robin until some tape is allocated,
/// returning the first (smallest) configuration that has one.
fn first_tape_config(cfg: &Config, max_steps: u64) -> Option<Config> {
    for n in 0..=max_steps {
        let d = pexec_n(&RoundRobin, 0, cfg, n);
        let mut hits: Vec<&Config> = d
            .iter()
            .map(|((_, c), _)| c)
            .filter(|c| !c.state.tapes.is_empty())
            .collect();
        hits.sort();
        if let Some(first) = hits.first() {
            return Some((*first).clone());
        }
        if d.iter().all(|((_, c), _)| c.is_final()) {
            return None;
        }
    }
    None
}
