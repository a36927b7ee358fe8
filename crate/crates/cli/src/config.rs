//! Command-line flags, the optional JSON config file, and validation.
//!
//! Precedence, highest first: flags, config file, `EQBOOST_SEED` (seed
//! only), built-in defaults. The config file is a flat JSON object whose
//! keys are the subcommand's long flag names with `_` in place of `-`.
//! Values from the file are spliced into the argument list ahead of the
//! real flags, so both go through the same parser; a file key whose flag
//! also appears on the command line is dropped.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use eqboost::game::AdversaryKind;
use eqboost::learners::ScheduleMode;
use eqboost::model::{DiscreteDistribution, FeatureSpace, Hypothesis, HypothesisClass};
use eqboost::process::{
    convergence_steps, AllDown, GreedyUp, ProcessState, Proportional, Scheduler, UniformRandom,
    UpRule,
};
use eqboost::rng::RandomStream;
use eqboost::verify::random_interval;
use eqboost::voting::vote_bound;

pub const SEED_ENV: &str = "EQBOOST_SEED";

/// A rejected flag, config key or environment value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError {
    pub flag: String,
    pub message: String,
}

impl UsageError {
    pub fn new(flag: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            flag: flag.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid {}: {}", self.flag, self.message)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "eqboost",
    version,
    about = "Boosting from equivalence queries: learner runs, adversarial games, \
             process simulations, PAC comparisons and invariant checks"
)]
pub struct Cli {
    /// JSON object of flag values; keys are long flag names with '_' for '-'.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the booster once against the exact equivalence oracle.
    Learn(LearnArgs),
    /// Play the learning game against an adversary and report the verdict.
    Game(GameArgs),
    /// Simulate the mass-movement process.
    Process(ProcessArgs),
    /// Sweep epsilon and compare booster queries with PAC sample sizes.
    Compare(CompareArgs),
    /// Run the invariant suites; exits non-zero if any fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Practical,
    Theory,
}

impl From<ModeArg> for ScheduleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Practical => ScheduleMode::Practical,
            ModeArg::Theory => ScheduleMode::Theory,
        }
    }
}

/// `thresholds`, `intervals` or `unions:K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassSpec {
    Thresholds,
    Intervals,
    Unions(usize),
}

impl FromStr for ClassSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "thresholds" => Ok(Self::Thresholds),
            "intervals" => Ok(Self::Intervals),
            _ => match s.strip_prefix("unions:").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(Self::Unions(k)),
                _ => Err(format!(
                    "'{s}' is not one of thresholds, intervals, unions:K with K >= 1"
                )),
            },
        }
    }
}

impl ClassSpec {
    pub fn build(self, n: usize) -> eqboost::Result<HypothesisClass> {
        let space = FeatureSpace::new(n)?;
        match self {
            Self::Thresholds => Ok(HypothesisClass::thresholds(space)),
            Self::Intervals => Ok(HypothesisClass::intervals(space)),
            Self::Unions(k) => HypothesisClass::union_of_intervals(space, k),
        }
    }

    /// A random member, used when the target is `random`.
    pub fn random_member(self, n: usize, rng: &mut RandomStream) -> Hypothesis {
        match self {
            Self::Thresholds => Hypothesis::Threshold(rng.range_inclusive(1, n as i64 - 1)),
            Self::Intervals => random_interval(n, rng),
            Self::Unions(k) => {
                let mut ends = std::collections::BTreeSet::new();
                while ends.len() < 2 * k {
                    ends.insert(rng.below(n) as i64);
                }
                let ends: Vec<i64> = ends.into_iter().collect();
                Hypothesis::union(ends.chunks(2).map(|c| (c[0], c[1])).collect())
                    .expect("distinct sorted endpoints")
            }
        }
    }
}

/// `uniform`, `random` (Dirichlet weights) or `geometric:R` (weight `R^x`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistSpec {
    Uniform,
    Random,
    Geometric(f64),
}

impl FromStr for DistSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "random" => Ok(Self::Random),
            _ => match s.strip_prefix("geometric:").map(str::parse::<f64>) {
                Some(Ok(r)) if r > 0.0 && r <= 1.0 => Ok(Self::Geometric(r)),
                _ => Err(format!(
                    "'{s}' is not one of uniform, random, geometric:R with R in (0, 1]"
                )),
            },
        }
    }
}

impl DistSpec {
    pub fn build(self, n: usize, rng: &mut RandomStream) -> eqboost::Result<DiscreteDistribution> {
        match self {
            Self::Uniform => DiscreteDistribution::uniform(n),
            Self::Random => Ok(eqboost::verify::random_distribution(n, rng)),
            Self::Geometric(r) => {
                let w: Vec<f64> = (0..n).map(|x| r.powi(x as i32)).collect();
                DiscreteDistribution::new(&w)
            }
        }
    }
}

/// `random`, `threshold:T`, `interval:A:B` or `union:A-B,C-D,...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSpec {
    Random,
    Fixed(Hypothesis),
}

impl FromStr for TargetSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad =
            || format!("'{s}' is not one of random, threshold:T, interval:A:B, union:A-B,C-D");
        if s == "random" {
            return Ok(Self::Random);
        }
        if let Some(t) = s.strip_prefix("threshold:") {
            return t
                .parse()
                .map(|t| Self::Fixed(Hypothesis::Threshold(t)))
                .map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("interval:") {
            let (a, b) = rest.split_once(':').ok_or_else(bad)?;
            let a = a.parse().map_err(|_| bad())?;
            let b = b.parse().map_err(|_| bad())?;
            return Ok(Self::Fixed(Hypothesis::Interval(a, b)));
        }
        if let Some(rest) = s.strip_prefix("union:") {
            let parts = rest
                .split(',')
                .map(|p| {
                    let (a, b) = p.split_once('-').ok_or_else(bad)?;
                    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
                })
                .collect::<Result<Vec<(i64, i64)>, String>>()?;
            return Hypothesis::union(parts)
                .map(Self::Fixed)
                .map_err(|e| e.to_string());
        }
        Err(bad())
    }
}

impl TargetSpec {
    pub fn resolve(&self, class: ClassSpec, n: usize, rng: &mut RandomStream) -> Hypothesis {
        match self {
            Self::Random => class.random_member(n, rng),
            Self::Fixed(h) => h.clone(),
        }
    }
}

/// `strong`, `fixed`, `nearest`, `biased:BETA` or `lazy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarySpec(pub AdversaryKind);

impl FromStr for AdversarySpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let kind = match s {
            "strong" => AdversaryKind::Strong,
            "fixed" => AdversaryKind::FixedError,
            "nearest" => AdversaryKind::NearestError,
            "lazy" => AdversaryKind::Lazy,
            _ => match s.strip_prefix("biased:").map(str::parse::<f64>) {
                Some(Ok(beta)) if beta.is_finite() => AdversaryKind::BiasedError { beta },
                _ => {
                    return Err(format!(
                        "'{s}' is not one of strong, fixed, nearest, biased:BETA, lazy"
                    ))
                }
            },
        };
        Ok(Self(kind))
    }
}

/// `top`, `bottom`, `uniform` or `at:I` for odd `I` in `[-B, B]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartSpec {
    Top,
    Bottom,
    Uniform,
    At(i32),
}

impl FromStr for StartSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "top" => Ok(Self::Top),
            "bottom" => Ok(Self::Bottom),
            "uniform" => Ok(Self::Uniform),
            _ => match s.strip_prefix("at:").map(str::parse::<i32>) {
                Some(Ok(i)) => Ok(Self::At(i)),
                _ => Err(format!("'{s}' is not one of top, bottom, uniform, at:I")),
            },
        }
    }
}

impl StartSpec {
    pub fn build(self, epsilon: f64, rule: UpRule) -> eqboost::Result<ProcessState> {
        let b = vote_bound(epsilon)?;
        match self {
            Self::Top => ProcessState::concentrated(epsilon, b, rule),
            Self::Bottom => ProcessState::concentrated(epsilon, -b, rule),
            Self::At(i) => ProcessState::concentrated(epsilon, i, rule),
            Self::Uniform => {
                let slots = b as usize + 1;
                ProcessState::new(epsilon, &vec![1.0 / slots as f64; slots], rule)
            }
        }
    }
}

/// `greedy-up`, `all-down`, `uniform-random` or `proportional:F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchedulerSpec {
    GreedyUp,
    AllDown,
    UniformRandom,
    Proportional(f64),
}

impl FromStr for SchedulerSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "greedy-up" => Ok(Self::GreedyUp),
            "all-down" => Ok(Self::AllDown),
            "uniform-random" => Ok(Self::UniformRandom),
            _ => match s.strip_prefix("proportional:").map(str::parse::<f64>) {
                Some(Ok(f)) if (0.0..=1.0).contains(&f) => Ok(Self::Proportional(f)),
                _ => Err(format!(
                    "'{s}' is not one of greedy-up, all-down, uniform-random, proportional:F"
                )),
            },
        }
    }
}

impl SchedulerSpec {
    pub fn build(self, rng: RandomStream) -> Box<dyn Scheduler> {
        match self {
            Self::GreedyUp => Box::new(GreedyUp),
            Self::AllDown => Box::new(AllDown),
            Self::UniformRandom => Box::new(UniformRandom::new(rng)),
            Self::Proportional(f) => Box::new(Proportional { down: f }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    Voting,
    ErrorRegion,
    LevelSet,
    Oracle,
    Process,
    Trajectory,
    Dichotomy,
}

#[derive(Debug, Clone, clap::Args)]
#[command(args_override_self = true)]
pub struct LearnArgs {
    /// Hypothesis class: thresholds, intervals or unions:K.
    #[arg(long, default_value = "thresholds")]
    pub class: ClassSpec,
    /// Number of points in the feature space.
    #[arg(long, default_value_t = 65536)]
    pub n: usize,
    /// Data distribution: uniform, random or geometric:R.
    #[arg(long, default_value = "uniform")]
    pub dist: DistSpec,
    /// Ground truth: random, threshold:T, interval:A:B or union:A-B,C-D.
    #[arg(long, default_value = "random")]
    pub target: TargetSpec,
    /// Target risk, in (0, 1).
    #[arg(long, default_value_t = 1.0 / 16.0)]
    pub eps: f64,
    /// Failure probability, in (0, 1).
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Practical)]
    pub mode: ModeArg,
    /// Batch-size constant (default 1 practical, 128 theory).
    #[arg(long)]
    pub c_m: Option<f64>,
    /// Round-count constant (default 1 practical, 10 theory).
    #[arg(long)]
    pub c_t: Option<f64>,
    /// Fix the batch size outright.
    #[arg(long)]
    pub batch: Option<u64>,
    /// Fix the number of rounds outright.
    #[arg(long)]
    pub rounds: Option<u64>,
    /// Query budget; required to execute a theory schedule.
    #[arg(long)]
    pub budget: Option<u128>,
    /// Print the schedule without running it.
    #[arg(long)]
    pub dry_run: bool,
    /// Base seed (falls back to EQBOOST_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, clap::Args)]
#[command(args_override_self = true)]
pub struct GameArgs {
    #[arg(long, default_value = "thresholds")]
    pub class: ClassSpec,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value = "uniform")]
    pub dist: DistSpec,
    #[arg(long, default_value = "random")]
    pub target: TargetSpec,
    #[arg(long, default_value_t = 1.0 / 16.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub delta: f64,
    #[arg(long)]
    pub c_m: Option<f64>,
    #[arg(long)]
    pub c_t: Option<f64>,
    /// Adversary: strong, fixed, nearest, biased:BETA or lazy.
    #[arg(long, default_value = "strong")]
    pub adversary: AdversarySpec,
    /// Number of games.
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write one CSV row per game here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Args)]
#[command(args_override_self = true)]
pub struct ProcessArgs {
    /// Sets the vote bound B; must be below 1/32 for the convergence check.
    #[arg(long, default_value_t = 1.0 / 1024.0)]
    pub eps: f64,
    /// Initial masses: top, bottom, uniform or at:I.
    #[arg(long, default_value = "top")]
    pub start: StartSpec,
    /// greedy-up, all-down, uniform-random or proportional:F.
    #[arg(long, default_value = "greedy-up")]
    pub scheduler: SchedulerSpec,
    /// Number of steps (default ceil(10 B^3)).
    #[arg(long)]
    pub steps: Option<u64>,
    /// Apply the heavy-position rule to negative positions only.
    #[arg(long)]
    pub negative_only: bool,
    /// Trajectory row interval for --output.
    #[arg(long, default_value_t = 1000)]
    pub record_every: u64,
    /// Include per-position masses in the trajectory CSV.
    #[arg(long)]
    pub masses: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the trajectory CSV here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Args)]
#[command(args_override_self = true)]
pub struct CompareArgs {
    #[arg(long, default_value = "thresholds")]
    pub class: ClassSpec,
    #[arg(long, default_value_t = 65536)]
    pub n: usize,
    #[arg(long, default_value = "uniform")]
    pub dist: DistSpec,
    #[arg(long, default_value = "random")]
    pub target: TargetSpec,
    /// Comma-separated target risks.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.0625,0.0078125,0.0009765625"
    )]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Practical)]
    pub mode: ModeArg,
    #[arg(long)]
    pub c_m: Option<f64>,
    #[arg(long)]
    pub c_t: Option<f64>,
    #[arg(long)]
    pub budget: Option<u128>,
    /// Trials per epsilon.
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Args)]
#[command(args_override_self = true)]
pub struct VerifyArgs {
    /// Suites to run (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub suite: Vec<SuiteName>,
    /// Smaller instance counts for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Outcome of argument handling.
#[derive(Debug)]
pub enum Parsed {
    Run(Box<Cli>),
    /// `--help` or `--version`: print and exit successfully.
    Info(String),
    Usage(String),
}

fn clap_outcome(result: Result<Cli, clap::Error>) -> Parsed {
    match result {
        Ok(cli) => Parsed::Run(Box::new(cli)),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                Parsed::Info(e.render().to_string())
            }
            // Includes a bare `eqboost`: the help goes to stderr with exit 2.
            _ => Parsed::Usage(e.render().to_string()),
        },
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Learn(_) => "learn",
        Command::Game(_) => "game",
        Command::Process(_) => "process",
        Command::Compare(_) => "compare",
        Command::Verify(_) => "verify",
    }
}

/// Flags derived from a config file for subcommand `name`, skipping any
/// long flag listed in `given`.
pub fn file_flags(name: &str, text: &str, given: &[String]) -> Result<Vec<OsString>, UsageError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| UsageError::new("--config", format!("not valid JSON: {e}")))?;
    let serde_json::Value::Object(map) = value else {
        return Err(UsageError::new("--config", "expected a JSON object"));
    };
    let command = Cli::command();
    let sub = command
        .find_subcommand(name)
        .expect("subcommand names come from the parser");
    let known: Vec<(String, bool)> = sub
        .get_arguments()
        .filter_map(|a| {
            let long = a.get_long()?;
            let is_flag = matches!(a.get_action(), clap::ArgAction::SetTrue);
            Some((long.to_string(), is_flag))
        })
        .filter(|(long, _)| long != "config" && long != "help")
        .collect();
    let mut out = Vec::new();
    for (key, v) in map {
        let long = key.replace('_', "-");
        let Some((_, is_flag)) = known.iter().find(|(k, _)| *k == long) else {
            return Err(UsageError::new(
                format!("config key '{key}'"),
                format!("unknown for '{name}'"),
            ));
        };
        if given.contains(&long) {
            continue;
        }
        let flag = format!("--{long}");
        let bad = || {
            UsageError::new(
                format!("config key '{key}'"),
                format!("unsupported value {v}"),
            )
        };
        if *is_flag {
            match v {
                serde_json::Value::Bool(true) => out.push(flag.into()),
                serde_json::Value::Bool(false) => {}
                _ => return Err(bad()),
            }
            continue;
        }
        let text = match &v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    serde_json::Value::String(s) => Ok(s.clone()),
                    serde_json::Value::Number(n) => Ok(n.to_string()),
                    _ => Err(bad()),
                })
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            _ => return Err(bad()),
        };
        out.push(flag.into());
        out.push(text.into());
    }
    Ok(out)
}

/// Parses `argv` (program name first), splicing in the config file if one
/// is named.
pub fn parse_args(argv: &[OsString]) -> Result<Parsed, UsageError> {
    let first = clap_outcome(Cli::try_parse_from(argv));
    let Parsed::Run(cli) = first else {
        return Ok(first);
    };
    let Some(path) = cli.config.clone() else {
        return Ok(Parsed::Run(cli));
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| UsageError::new("--config", format!("cannot read {}: {e}", path.display())))?;
    let name = subcommand_name(&cli.command);
    // Flags given on the command line replace file values outright, which
    // matters for list-valued flags that would otherwise accumulate.
    let given: Vec<String> = argv
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let extra = file_flags(name, &text, &given)?;
    // The subcommand is the first argument equal to its name.
    let pos = argv
        .iter()
        .position(|a| a.to_str() == Some(name))
        .expect("subcommand was parsed from argv");
    let mut merged: Vec<OsString> = argv[..=pos].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[pos + 1..]);
    Ok(clap_outcome(Cli::try_parse_from(merged)))
}

/// Seed from the flag or file, then the environment, then 0.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> Result<u64, UsageError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| UsageError::new(SEED_ENV, format!("'{v}' is not an unsigned integer"))),
        None => Ok(0),
    }
}

fn open_unit(flag: &str, v: f64) -> Result<(), UsageError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(UsageError::new(flag, format!("{v} is not in (0, 1)")))
    }
}

fn positive_constant(flag: &str, v: Option<f64>) -> Result<(), UsageError> {
    match v {
        Some(c) if !(c > 0.0 && c.is_finite()) => Err(UsageError::new(
            flag,
            format!("{c} is not a positive number"),
        )),
        _ => Ok(()),
    }
}

fn space_size(flag: &str, n: usize, class: ClassSpec) -> Result<(), UsageError> {
    let min = match class {
        ClassSpec::Unions(k) => 2 * k,
        _ => 2,
    };
    if n < min {
        return Err(UsageError::new(
            flag,
            format!("{n} points are too few, need at least {min}"),
        ));
    }
    Ok(())
}

fn target_fits(target: &TargetSpec, class: ClassSpec, n: usize) -> Result<(), UsageError> {
    if let TargetSpec::Fixed(h) = target {
        let c = class
            .build(n)
            .map_err(|e| UsageError::new("--class", e.to_string()))?;
        if !c.contains(h) {
            return Err(UsageError::new(
                "--target",
                format!("{h} is not in the {} class", c.short_name()),
            ));
        }
    }
    Ok(())
}

impl LearnArgs {
    pub fn validate(&self) -> Result<(), UsageError> {
        open_unit("--eps", self.eps)?;
        open_unit("--delta", self.delta)?;
        space_size("--n", self.n, self.class)?;
        positive_constant("--c-m", self.c_m)?;
        positive_constant("--c-t", self.c_t)?;
        for (flag, v) in [("--batch", self.batch), ("--rounds", self.rounds)] {
            if v == Some(0) {
                return Err(UsageError::new(flag, "must be at least 1"));
            }
        }
        if self.mode == ModeArg::Theory && !self.dry_run && self.budget.is_none() {
            return Err(UsageError::new(
                "--budget",
                "executing a theory schedule needs an explicit budget (or use --dry-run)",
            ));
        }
        target_fits(&self.target, self.class, self.n)
    }
}

impl GameArgs {
    pub fn validate(&self) -> Result<(), UsageError> {
        open_unit("--eps", self.eps)?;
        open_unit("--delta", self.delta)?;
        space_size("--n", self.n, self.class)?;
        positive_constant("--c-m", self.c_m)?;
        positive_constant("--c-t", self.c_t)?;
        if self.trials == 0 {
            return Err(UsageError::new("--trials", "must be at least 1"));
        }
        target_fits(&self.target, self.class, self.n)
    }
}

impl ProcessArgs {
    pub fn validate(&self) -> Result<(), UsageError> {
        if !(self.eps > 0.0 && self.eps < 1.0 / 32.0) {
            return Err(UsageError::new(
                "--eps",
                format!("{} is not in (0, 1/32)", self.eps),
            ));
        }
        let b = vote_bound(self.eps).map_err(|e| UsageError::new("--eps", e.to_string()))?;
        if let StartSpec::At(i) = self.start {
            if i % 2 == 0 || i.abs() > b {
                return Err(UsageError::new(
                    "--start",
                    format!("position {i} is not odd or lies outside [-{b}, {b}]"),
                ));
            }
        }
        if self.record_every == 0 {
            return Err(UsageError::new("--record-every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        self.steps
            .unwrap_or_else(|| convergence_steps(self.eps).expect("validated epsilon"))
    }
}

impl CompareArgs {
    pub fn validate(&self) -> Result<(), UsageError> {
        if self.eps.is_empty() {
            return Err(UsageError::new("--eps", "needs at least one value"));
        }
        for &e in &self.eps {
            open_unit("--eps", e)?;
        }
        open_unit("--delta", self.delta)?;
        space_size("--n", self.n, self.class)?;
        positive_constant("--c-m", self.c_m)?;
        positive_constant("--c-t", self.c_t)?;
        if self.trials == 0 {
            return Err(UsageError::new("--trials", "must be at least 1"));
        }
        if self.mode == ModeArg::Theory && self.budget.is_none() {
            return Err(UsageError::new(
                "--budget",
                "executing a theory schedule needs an explicit budget",
            ));
        }
        target_fits(&self.target, self.class, self.n)
    }
}

impl Command {
    pub fn validate(&self) -> Result<(), UsageError> {
        match self {
            Command::Learn(a) => a.validate(),
            Command::Game(a) => a.validate(),
            Command::Process(a) => a.validate(),
            Command::Compare(a) => a.validate(),
            Command::Verify(_) => Ok(()),
        }
    }

    pub fn seed_flag(&self) -> Option<u64> {
        match self {
            Command::Learn(a) => a.seed,
            Command::Game(a) => a.seed,
            Command::Process(a) => a.seed,
            Command::Compare(a) => a.seed,
            Command::Verify(a) => a.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<OsString> {
        std::iter::once("eqboost")
            .chain(s.split_whitespace())
            .map(OsString::from)
            .collect()
    }

    fn run(s: &str) -> Cli {
        match parse_args(&argv(s)).unwrap() {
            Parsed::Run(c) => *c,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn learn_defaults_to_practical() {
        let cli = run("learn --class thresholds --n 65536 --eps 0.0078125 --seed 7");
        let Command::Learn(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.mode, ModeArg::Practical);
        assert_eq!(a.eps, 0.0078125);
        assert_eq!(a.seed, Some(7));
        assert!(a.validate().is_ok());
    }

    #[test]
    fn eps_out_of_range_names_flag() {
        let cli = run("learn --eps 1.5");
        let err = cli.command.validate().unwrap_err();
        assert_eq!(err.flag, "--eps");
        let cli = run("compare --eps 0.1,0");
        assert_eq!(cli.command.validate().unwrap_err().flag, "--eps");
    }

    #[test]
    fn theory_execution_needs_budget() {
        let cli = run("learn --mode theory");
        assert_eq!(cli.command.validate().unwrap_err().flag, "--budget");
        assert!(run("learn --mode theory --dry-run")
            .command
            .validate()
            .is_ok());
    }

    #[test]
    fn bad_spec_is_usage_error() {
        assert!(matches!(
            parse_args(&argv("learn --class circles")),
            Ok(Parsed::Usage(_))
        ));
        assert!(matches!(
            parse_args(&argv("game --adversary sneaky")),
            Ok(Parsed::Usage(_))
        ));
        assert!(matches!(
            parse_args(&argv("learn --help")),
            Ok(Parsed::Info(_))
        ));
    }

    #[test]
    fn target_must_be_in_class() {
        let cli = run("learn --class thresholds --n 100 --target interval:3:9");
        assert_eq!(cli.command.validate().unwrap_err().flag, "--target");
        let cli = run("learn --class unions:2 --n 100 --target union:1-3,7-9");
        assert!(cli.command.validate().is_ok());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"trials": 20, "eps": [0.25, 0.125], "seed": 3}"#).unwrap();
        let p = path.display();
        let Command::Compare(a) = run(&format!("compare --config {p} --trials 50")).command else {
            panic!()
        };
        assert_eq!(a.trials, 50);
        assert_eq!(a.eps, vec![0.25, 0.125]);
        assert_eq!(a.seed, Some(3));
        let Command::Compare(a) = run(&format!("compare --eps 0.5 --config {p}")).command else {
            panic!()
        };
        assert_eq!(a.trials, 20);
        assert_eq!(a.eps, vec![0.5]);
    }

    #[test]
    fn file_rejects_unknown_keys() {
        let err = file_flags("compare", r#"{"trails": 5}"#, &[]).unwrap_err();
        assert!(err.flag.contains("trails"));
        assert!(file_flags("compare", "[1]", &[]).is_err());
        assert!(file_flags("learn", r#"{"dry_run": "yes"}"#, &[]).is_err());
        assert_eq!(
            file_flags("learn", r#"{"dry_run": true}"#, &[]).unwrap(),
            vec![OsString::from("--dry-run")]
        );
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(5), Some("9")), Ok(5));
        assert_eq!(resolve_seed(None, Some("9")), Ok(9));
        assert_eq!(resolve_seed(None, None), Ok(0));
        assert_eq!(resolve_seed(None, Some("x")).unwrap_err().flag, SEED_ENV);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("unions:3".parse(), Ok(ClassSpec::Unions(3)));
        assert!("unions:0".parse::<ClassSpec>().is_err());
        assert_eq!("geometric:0.5".parse(), Ok(DistSpec::Geometric(0.5)));
        assert_eq!(
            "interval:2:5".parse(),
            Ok(TargetSpec::Fixed(Hypothesis::Interval(2, 5)))
        );
        assert!("union:5-9,1-3".parse::<TargetSpec>().is_err());
        assert_eq!(
            "biased:2".parse::<AdversarySpec>().unwrap().0,
            AdversaryKind::BiasedError { beta: 2.0 }
        );
        assert_eq!("at:-3".parse(), Ok(StartSpec::At(-3)));
        assert_eq!(
            "proportional:1".parse(),
            Ok(SchedulerSpec::Proportional(1.0))
        );
    }
}
