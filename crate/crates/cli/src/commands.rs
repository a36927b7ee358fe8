//! The subcommands. Each writes its report to `out` and returns whether it
//! succeeded in the command's own sense.

use std::io::Write;

use eqboost::game::{run_game, Adversary, Verdict};
use eqboost::learners::{
    eq_learn, pac_learn, pac_sample_size, schedule_params, EqLearnOptions, LearnError, Schedule,
    ScheduleMode, ScheduleOverrides,
};
use eqboost::model::{risk, DiscreteDistribution, Hypothesis, HypothesisClass};
use eqboost::oracles::ExactEqOracle;
use eqboost::process::{run_process, write_trajectory_csv, RunOptions, UpRule};
use eqboost::rng::{component, RandomStream};
use eqboost::verify::{
    dichotomy_suite, error_region_suite, level_set_suite, oracle_exactness_suite, process_suite,
    trajectory_suite, voting_identity_suite, DichotomyConfig, ErrorRegionConfig, LevelSetConfig,
    OracleConfig, ProcessConfig, SuiteReport, TrajectoryConfig,
};

use crate::config::{
    ClassSpec, CompareArgs, GameArgs, LearnArgs, ModeArg, ProcessArgs, SuiteName, VerifyArgs,
};
use crate::csvout::{emit_csv_to, real};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Core(#[from] eqboost::Error),
    #[error("{0}")]
    Learn(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<LearnError> for CommandError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::Core(e) => Self::Core(e),
            other => Self::Learn(other.to_string()),
        }
    }
}

pub type CommandResult = Result<bool, CommandError>;

fn schedule_lines(out: &mut dyn Write, s: &Schedule) -> std::io::Result<()> {
    let mode = match s.mode {
        ScheduleMode::Practical => "practical",
        ScheduleMode::Theory => "theory",
    };
    writeln!(out, "mode: {mode}")?;
    writeln!(out, "epsilon: {:e}", s.epsilon)?;
    writeln!(out, "delta: {:e}", s.delta)?;
    writeln!(out, "d: {}", s.d)?;
    writeln!(out, "eps_prime: {:e}", s.eps_prime)?;
    writeln!(out, "bound: {}", s.bound)?;
    writeln!(out, "batch_size: {}", s.m)?;
    writeln!(out, "rounds: {}", s.t)?;
    writeln!(out, "function_bound: {}", s.function_bound())?;
    writeln!(out, "query_bound: {}", s.query_bound())?;
    writeln!(out, "polylog_reference: {:e}", s.polylog_reference())?;
    writeln!(
        out,
        "query_bound_over_reference: {:e}",
        s.query_bound() as f64 / s.polylog_reference()
    )?;
    if !s.in_guarantee_range() {
        writeln!(
            out,
            "note: epsilon above 1/32, outside the worst-case guarantee"
        )?;
    }
    Ok(())
}

fn overrides(c_m: Option<f64>, c_t: Option<f64>) -> ScheduleOverrides {
    ScheduleOverrides {
        c_m,
        c_t,
        ..Default::default()
    }
}

/// Distribution and target for one trial, both drawn from the trial's
/// instance stream.
fn instance(
    dist: crate::config::DistSpec,
    target: &crate::config::TargetSpec,
    class: ClassSpec,
    n: usize,
    seed: u64,
    trial: u64,
) -> eqboost::Result<(DiscreteDistribution, Hypothesis)> {
    let mut rng = RandomStream::substream(seed, trial, component::INSTANCE);
    let d = dist.build(n, &mut rng)?;
    let g = target.resolve(class, n, &mut rng);
    Ok((d, g))
}

pub fn learn(args: &LearnArgs, seed: u64, out: &mut dyn Write) -> CommandResult {
    let class = args.class.build(args.n)?;
    let schedule = schedule_params(
        args.eps,
        args.delta,
        class.vc_dim(),
        args.mode.into(),
        ScheduleOverrides {
            c_m: args.c_m,
            c_t: args.c_t,
            m: args.batch,
            t: args.rounds,
        },
    )?;
    writeln!(out, "class: {}", class.short_name())?;
    writeln!(out, "n: {}", args.n)?;
    schedule_lines(out, &schedule)?;
    if args.dry_run {
        writeln!(out, "executed: false")?;
        return Ok(true);
    }
    let (dist, g) = instance(args.dist, &args.target, args.class, args.n, seed, 0)?;
    writeln!(out, "target: {g}")?;
    let mut oracle = ExactEqOracle::new(
        &g,
        &dist,
        RandomStream::substream(seed, 0, component::EQUIVALENCE),
    );
    let run = eq_learn(
        &class,
        &mut oracle,
        &schedule,
        EqLearnOptions {
            budget: args.budget,
            ..Default::default()
        },
    )?;
    let final_risk = risk(&run.hypothesis, &g, &dist);
    writeln!(out, "executed: true")?;
    writeln!(out, "eq_queries: {}", run.stats.eq_queries)?;
    writeln!(out, "distinct_functions: {}", run.stats.distinct_functions)?;
    writeln!(out, "rounds_run: {}", run.stats.rounds)?;
    writeln!(out, "early_stop: {}", run.stats.early_stop)?;
    writeln!(out, "final_risk: {}", real(final_risk))?;
    writeln!(out, "success: {}", final_risk <= args.eps)?;
    writeln!(
        out,
        "pac_samples: {}",
        pac_sample_size(class.vc_dim(), args.eps, args.delta)?
    )?;
    Ok(true)
}

pub const GAME_HEADER: [&str; 10] = [
    "trial",
    "adversary",
    "verdict",
    "round",
    "tv",
    "final_risk",
    "distinct_functions",
    "function_bound",
    "eq_queries",
    "seed",
];

pub fn game(args: &GameArgs, seed: u64, out: &mut dyn Write) -> CommandResult {
    let class = args.class.build(args.n)?;
    let schedule = schedule_params(
        args.eps,
        args.delta,
        class.vc_dim(),
        ScheduleMode::Practical,
        overrides(args.c_m, args.c_t),
    )?;
    let kind = args.adversary.0;
    let mut rows = Vec::new();
    let mut counts = [0u64; 3];
    for trial in 0..args.trials {
        let (dist, g) = instance(args.dist, &args.target, args.class, args.n, seed, trial)?;
        let adversary = Adversary::new(
            kind,
            RandomStream::substream(seed, trial, component::ADVERSARY),
        );
        let t = run_game(
            &class,
            &dist,
            &g,
            adversary,
            &schedule,
            RandomStream::substream(seed, trial, component::EXAMPLES),
        )?;
        let (round, tv) = match t.verdict {
            Verdict::NonStrongRoundFound { round, tv } => (round.to_string(), real(tv)),
            _ => (String::new(), String::new()),
        };
        counts[match t.verdict {
            Verdict::RiskAchieved { .. } => 0,
            Verdict::NonStrongRoundFound { .. } => 1,
            Verdict::Failure { .. } => 2,
        }] += 1;
        writeln!(
            out,
            "game {trial}: {} final_risk={} distinct_functions={} round={round} tv={tv}",
            t.verdict.name(),
            real(t.final_risk),
            t.distinct_functions(),
        )?;
        rows.push(vec![
            trial.to_string(),
            kind.name(),
            t.verdict.name().to_string(),
            round,
            tv,
            real(t.final_risk),
            t.distinct_functions().to_string(),
            schedule.function_bound().to_string(),
            t.stats.eq_queries.to_string(),
            seed.to_string(),
        ]);
    }
    writeln!(
        out,
        "summary: risk-achieved={} non-strong-round={} failure={}",
        counts[0], counts[1], counts[2]
    )?;
    if let Some(path) = &args.output {
        emit_csv_to(Some(path), &GAME_HEADER, &rows)?;
    }
    Ok(true)
}

pub fn process(args: &ProcessArgs, seed: u64, out: &mut dyn Write) -> CommandResult {
    let rule = if args.negative_only {
        UpRule::NegativeOnly
    } else {
        UpRule::AllSlots
    };
    let state = args.start.build(args.eps, rule)?;
    let bound = state.bound();
    let mut scheduler =
        args.scheduler
            .build(RandomStream::substream(seed, 0, component::SCHEDULER));
    let options = RunOptions {
        record_every: args.output.as_ref().map(|_| args.record_every),
        record_masses: args.masses,
    };
    let run = run_process(state, scheduler.as_mut(), args.steps(), options)?;
    writeln!(out, "scheduler: {}", run.scheduler)?;
    writeln!(out, "bound: {bound}")?;
    writeln!(out, "steps: {}", run.steps)?;
    writeln!(out, "final_w: {}", real(run.final_metrics.w))?;
    writeln!(out, "final_m: {}", real(run.final_metrics.m))?;
    writeln!(
        out,
        "final_positive_mass: {}",
        real(run.final_metrics.positive_mass)
    )?;
    writeln!(out, "positive_mass_bound: {}", real(run.bound))?;
    writeln!(out, "converged: {}", run.converged)?;
    writeln!(out, "recurrence_violations: {}", run.recurrence_violations)?;
    writeln!(
        out,
        "max_recurrence_excess: {}",
        real(run.max_recurrence_excess)
    )?;
    writeln!(out, "sandwich_violations: {}", run.sandwich_violations)?;
    writeln!(out, "max_mass_drift: {}", real(run.max_mass_drift))?;
    writeln!(out, "clamped_steps: {}", run.clamped_steps)?;
    if run.clamped_steps > 0 {
        writeln!(
            out,
            "warning: {} plans were inadmissible and were projected",
            run.clamped_steps
        )?;
    }
    if let Some(path) = &args.output {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_trajectory_csv(&mut f, bound, &run.rows)?;
        f.flush()?;
    }
    Ok(true)
}

pub const COMPARE_HEADER: [&str; 14] = [
    "kind",
    "epsilon",
    "trial",
    "d",
    "class",
    "mode",
    "eq_queries",
    "eq_distinct_functions",
    "pac_samples",
    "pac_success",
    "eq_success",
    "final_risk_eq",
    "final_risk_pac",
    "seed",
];

/// One booster run and one PAC run on the same instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareTrial {
    pub epsilon: f64,
    pub trial: u64,
    pub d: usize,
    pub class: String,
    pub mode: ModeArg,
    pub eq_queries: u64,
    pub eq_distinct_functions: u64,
    pub pac_samples: u64,
    pub pac_success: bool,
    pub eq_success: bool,
    pub final_risk_eq: f64,
    pub final_risk_pac: f64,
    pub seed: u64,
}

/// Per-epsilon aggregate: success rates and medians.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareSummary {
    pub epsilon: f64,
    pub trials: u64,
    pub median_eq_queries: f64,
    pub median_eq_distinct_functions: f64,
    pub pac_samples: u64,
    pub pac_success_rate: f64,
    pub eq_success_rate: f64,
    pub median_final_risk_eq: f64,
    pub median_final_risk_pac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub trials: Vec<CompareTrial>,
    pub summaries: Vec<CompareSummary>,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

fn mode_name(m: ModeArg) -> &'static str {
    match m {
        ModeArg::Practical => "practical",
        ModeArg::Theory => "theory",
    }
}

/// Runs every (epsilon, trial) pair serially. Targets and distributions
/// depend only on the trial, so each epsilon sees the same instances.
pub fn run_compare_sweep(args: &CompareArgs, seed: u64) -> Result<CompareReport, CommandError> {
    let class: HypothesisClass = args.class.build(args.n)?;
    let d = class.vc_dim();
    let mut trials = Vec::new();
    let mut summaries = Vec::new();
    for (ei, &eps) in args.eps.iter().enumerate() {
        let schedule = schedule_params(
            eps,
            args.delta,
            d,
            args.mode.into(),
            overrides(args.c_m, args.c_t),
        )?;
        let pac_samples = pac_sample_size(d, eps, args.delta)?;
        let stream_id = |trial: u64| ((ei as u64) << 32) | trial;
        let first = trials.len();
        for trial in 0..args.trials {
            let (dist, g) = instance(args.dist, &args.target, args.class, args.n, seed, trial)?;
            let mut oracle = ExactEqOracle::new(
                &g,
                &dist,
                RandomStream::substream(seed, stream_id(trial), component::EQUIVALENCE),
            );
            let run = eq_learn(
                &class,
                &mut oracle,
                &schedule,
                EqLearnOptions {
                    budget: args.budget,
                    ..Default::default()
                },
            )?;
            let risk_eq = risk(&run.hypothesis, &g, &dist);
            let mut pac_rng = RandomStream::substream(seed, stream_id(trial), component::PAC);
            let pac = pac_learn(&class, &dist, &g, eps, args.delta, &mut pac_rng)?;
            let risk_pac = risk(&pac.hypothesis, &g, &dist);
            trials.push(CompareTrial {
                epsilon: eps,
                trial,
                d,
                class: class.short_name(),
                mode: args.mode,
                eq_queries: run.stats.eq_queries,
                eq_distinct_functions: run.stats.distinct_functions,
                pac_samples: pac.samples,
                pac_success: risk_pac <= eps,
                eq_success: risk_eq <= eps,
                final_risk_eq: risk_eq,
                final_risk_pac: risk_pac,
                seed,
            });
        }
        let these = &trials[first..];
        let k = these.len() as f64;
        let col = |f: &dyn Fn(&CompareTrial) -> f64| -> Vec<f64> { these.iter().map(f).collect() };
        summaries.push(CompareSummary {
            epsilon: eps,
            trials: args.trials,
            median_eq_queries: median(&mut col(&|t| t.eq_queries as f64)),
            median_eq_distinct_functions: median(&mut col(&|t| t.eq_distinct_functions as f64)),
            pac_samples,
            pac_success_rate: these.iter().filter(|t| t.pac_success).count() as f64 / k,
            eq_success_rate: these.iter().filter(|t| t.eq_success).count() as f64 / k,
            median_final_risk_eq: median(&mut col(&|t| t.final_risk_eq)),
            median_final_risk_pac: median(&mut col(&|t| t.final_risk_pac)),
        });
    }
    Ok(CompareReport { trials, summaries })
}

/// Trial rows for each epsilon, followed by that epsilon's summary row.
pub fn compare_rows(report: &CompareReport, args: &CompareArgs, seed: u64) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for s in &report.summaries {
        let mut d = 0;
        let mut class = String::new();
        for t in report.trials.iter().filter(|t| t.epsilon == s.epsilon) {
            d = t.d;
            class.clone_from(&t.class);
            rows.push(vec![
                "trial".into(),
                real(t.epsilon),
                t.trial.to_string(),
                t.d.to_string(),
                t.class.clone(),
                mode_name(t.mode).into(),
                t.eq_queries.to_string(),
                t.eq_distinct_functions.to_string(),
                t.pac_samples.to_string(),
                t.pac_success.to_string(),
                t.eq_success.to_string(),
                real(t.final_risk_eq),
                real(t.final_risk_pac),
                t.seed.to_string(),
            ]);
        }
        rows.push(vec![
            "summary".into(),
            real(s.epsilon),
            String::new(),
            d.to_string(),
            class,
            mode_name(args.mode).into(),
            real(s.median_eq_queries),
            real(s.median_eq_distinct_functions),
            s.pac_samples.to_string(),
            real(s.pac_success_rate),
            real(s.eq_success_rate),
            real(s.median_final_risk_eq),
            real(s.median_final_risk_pac),
            seed.to_string(),
        ]);
    }
    rows
}

pub fn compare(args: &CompareArgs, seed: u64, out: &mut dyn Write) -> CommandResult {
    let report = run_compare_sweep(args, seed)?;
    let rows = compare_rows(&report, args, seed);
    if let Some(text) = emit_csv_to(args.output.as_deref(), &COMPARE_HEADER, &rows)? {
        out.write_all(text.as_bytes())?;
    }
    Ok(true)
}

/// Runs the selected suites and prints one line per suite.
pub fn verify_suites(args: &VerifyArgs, seed: u64) -> Result<Vec<SuiteReport>, CommandError> {
    let all = [
        SuiteName::Voting,
        SuiteName::ErrorRegion,
        SuiteName::LevelSet,
        SuiteName::Oracle,
        SuiteName::Process,
        SuiteName::Trajectory,
        SuiteName::Dichotomy,
    ];
    let selected: &[SuiteName] = if args.suite.is_empty() {
        &all
    } else {
        &args.suite
    };
    let quick = args.quick;
    let mut reports = Vec::new();
    for &suite in selected {
        let r = match suite {
            SuiteName::Voting => voting_identity_suite(if quick { 1_000 } else { 10_000 }, seed),
            SuiteName::ErrorRegion => {
                let config = if quick {
                    ErrorRegionConfig {
                        instances: 40,
                        n: 1024,
                        pass_threshold: 34,
                        ..Default::default()
                    }
                } else {
                    ErrorRegionConfig::default()
                };
                error_region_suite(config, seed)?
            }
            SuiteName::LevelSet => {
                let config = if quick {
                    LevelSetConfig {
                        instances: 4,
                        n: 256,
                        ..Default::default()
                    }
                } else {
                    LevelSetConfig::default()
                };
                level_set_suite(config, seed)?
            }
            SuiteName::Oracle => {
                let config = if quick {
                    OracleConfig {
                        instances: 10,
                        draws: 20_000,
                        tv_tolerance: 0.03,
                    }
                } else {
                    OracleConfig::default()
                };
                oracle_exactness_suite(config, seed)
            }
            SuiteName::Process => {
                let config = if quick {
                    ProcessConfig {
                        epsilon: 0.5f64.powi(9),
                        random_schedulers: 5,
                    }
                } else {
                    ProcessConfig::default()
                };
                process_suite(config, seed)?
            }
            SuiteName::Trajectory => {
                let config = if quick {
                    TrajectoryConfig {
                        runs: 5,
                        ..Default::default()
                    }
                } else {
                    TrajectoryConfig::default()
                };
                trajectory_suite(config, seed)?
            }
            SuiteName::Dichotomy => {
                let config = if quick {
                    DichotomyConfig {
                        games: 5,
                        ..Default::default()
                    }
                } else {
                    DichotomyConfig::default()
                };
                dichotomy_suite(config, seed)?
            }
        };
        reports.push(r);
    }
    Ok(reports)
}

pub fn print_report(out: &mut dyn Write, r: &SuiteReport) -> std::io::Result<()> {
    let mut line = format!(
        "{} {}: checks={} failures={}",
        if r.passed { "PASS" } else { "FAIL" },
        r.name,
        r.checks,
        r.failures
    );
    for (k, v) in &r.values {
        line.push_str(&format!(" {k}={v}"));
    }
    writeln!(out, "{line}")
}

/// Machine-readable summary of the failed suites.
pub fn failure_json(reports: &[SuiteReport]) -> serde_json::Value {
    let failed: Vec<serde_json::Value> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| {
            serde_json::json!({
                "suite": r.name,
                "checks": r.checks,
                "failures": r.failures,
                "notes": r.notes,
            })
        })
        .collect();
    serde_json::json!({ "passed": failed.is_empty(), "failed": failed })
}

pub fn verify(
    args: &VerifyArgs,
    seed: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CommandResult {
    let reports = verify_suites(args, seed)?;
    for r in &reports {
        print_report(out, r)?;
    }
    let ok = reports.iter().all(|r| r.passed);
    if !ok {
        writeln!(err, "{}", failure_json(&reports))?;
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_examples() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn failure_summary_lists_failed_suites() {
        let mut r = voting_identity_suite(10, 0);
        let ok = failure_json(std::slice::from_ref(&r));
        assert_eq!(ok["passed"], true);
        r.passed = false;
        r.notes.push("broken".into());
        let bad = failure_json(&[r]);
        assert_eq!(bad["failed"][0]["suite"], "voting identities");
        assert_eq!(bad["failed"][0]["notes"][0], "broken");
    }
}
