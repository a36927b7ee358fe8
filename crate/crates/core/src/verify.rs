//! Invariant suites: seeded, self-contained checks of the properties the
//! booster's correctness rests on. Each suite returns a [`SuiteReport`].

use crate::error::Result;
use crate::game::{run_game, strength_test, Adversary, AdversaryKind, StrengthMode, Verdict};
use crate::learners::{eq_learn, schedule_params, EqLearnOptions, ScheduleMode, ScheduleOverrides};
use crate::model::{
    risk_tables, DiscreteDistribution, FeatureSpace, Hypothesis, HypothesisClass, Label, Region,
};
use crate::oracles::{eq_batch_tables, total_variation, EqBatch, ExactEqOracle};
use crate::process::{
    admissible_check, convergence_steps, epsilon_for_bound, run_process, trajectory_from_committee,
    GreedyUp, MovePlan, ProcessState, RunOptions, UniformRandom, UpRule,
};
use crate::rng::{component, RandomStream};
use crate::voting::{vote_g_from_scratch, votes_from_scratch, VoteParams, VoteState};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub checks: u64,
    pub failures: u64,
    /// Named measurements, in the order they were taken.
    pub values: Vec<(String, f64)>,
    /// First few failure descriptions.
    pub notes: Vec<String>,
}

const MAX_NOTES: usize = 5;

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: true,
            checks: 0,
            failures: 0,
            values: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, note: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.notes.len() < MAX_NOTES {
                self.notes.push(note());
            }
        }
    }

    fn value(&mut self, name: impl Into<String>, v: f64) {
        self.values.push((name.into(), v));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Dirichlet(1) weights over `0..n`.
pub fn random_distribution(n: usize, rng: &mut RandomStream) -> DiscreteDistribution {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
    DiscreteDistribution::new(&w).expect("exponential weights are positive")
}

pub fn random_table(n: usize, rng: &mut RandomStream) -> Vec<Label> {
    (0..n)
        .map(|_| if rng.next_u64() & 1 == 1 { 1 } else { -1 })
        .collect()
}

pub fn random_interval(n: usize, rng: &mut RandomStream) -> Hypothesis {
    let a = rng.below(n) as i64;
    let b = rng.below(n) as i64;
    Hypothesis::Interval(a.min(b), a.max(b))
}

/// Vote identities on random committees: tallies odd and within `[-B, B]`,
/// `Vote_g = -g Vote`, majority correct iff `Vote_g < 0`, and incremental
/// tallies equal the direct recursion.
pub fn voting_identity_suite(cases: u64, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("voting identities");
    let epsilons = [0.5, 0.25, 0.1, 1.0 / 32.0, 1e-3];
    for case in 0..cases {
        let mut rng = RandomStream::substream(seed, case, component::INSTANCE);
        let n = 1 + rng.below(32);
        let size = 1 + rng.below(40);
        let params = VoteParams::new(epsilons[rng.below(epsilons.len())]).expect("valid epsilon");
        let b = params.bound();
        let mut state = VoteState::new(params, FeatureSpace::new(n).expect("n >= 1"));
        for _ in 0..size {
            state.extend(Hypothesis::Table(random_table(n, &mut rng)));
        }
        let g = random_table(n, &mut rng);
        let x = rng.below(n);
        let scratch = votes_from_scratch(state.committee(), n, b);
        let vote_g = vote_g_from_scratch(state.committee(), &g, b);
        let maj = state.majority().expect("non-empty committee").eval(x);
        let v = state.votes()[x];
        report.check(v % 2 != 0 && v.abs() <= b, || {
            format!("case {case}: vote {v} not odd or outside [-{b}, {b}]")
        });
        report.check(vote_g[x] == -i32::from(g[x]) * v, || {
            format!(
                "case {case}: Vote_g {} != -g Vote {}",
                vote_g[x],
                -i32::from(g[x]) * v
            )
        });
        report.check((maj == g[x]) == (vote_g[x] < 0), || {
            format!(
                "case {case}: majority correctness disagrees with Vote_g {}",
                vote_g[x]
            )
        });
        report.check(scratch == state.votes(), || {
            format!("case {case}: incremental tallies differ from recursion")
        });
    }
    report.passed = report.failures == 0;
    report
}

/// Largest possible error of an interval consistent with `samples`,
/// restricted to `region`. Samples carry true labels.
///
/// The error of interval `h` on `region` is `D(region, g = +1)` plus the sum
/// of `s(x)` over `x` in `h`, where `s(x) = D(x)` on region points with
/// `g = -1` and `-D(x)` on region points with `g = +1`.
pub fn worst_consistent_interval_error(
    positives: &[bool],
    negatives: &[bool],
    region: &Region,
    g: &[Label],
    dist: &DiscreteDistribution,
) -> f64 {
    let n = g.len();
    let s: Vec<f64> = (0..n)
        .map(|x| {
            if !region.contains(x) {
                0.0
            } else if g[x] < 0 {
                dist.weight(x)
            } else {
                -dist.weight(x)
            }
        })
        .collect();
    let base: f64 = (0..n)
        .filter(|&x| region.contains(x) && g[x] > 0)
        .map(|x| dist.weight(x))
        .sum();
    let first_pos = positives.iter().position(|&p| p);
    let best_gain = match first_pos {
        Some(lo) => {
            let hi = positives.iter().rposition(|&p| p).expect("has a positive");
            let core: f64 = s[lo..=hi].iter().sum();
            let mut left_best = 0.0f64;
            let mut acc = 0.0;
            for x in (0..lo).rev() {
                if negatives[x] {
                    break;
                }
                acc += s[x];
                left_best = left_best.max(acc);
            }
            let mut right_best = 0.0f64;
            acc = 0.0;
            for x in hi + 1..n {
                if negatives[x] {
                    break;
                }
                acc += s[x];
                right_best = right_best.max(acc);
            }
            core + left_best + right_best
        }
        None => {
            // Best sub-interval avoiding every negative sample, or empty.
            let mut best = 0.0f64;
            let mut run = 0.0f64;
            for x in 0..n {
                if negatives[x] {
                    run = 0.0;
                    continue;
                }
                run = (run + s[x]).max(s[x]);
                best = best.max(run);
            }
            best
        }
    };
    base + best_gain
}

fn sample_masks(
    samples: impl IntoIterator<Item = (usize, Label)>,
    n: usize,
) -> (Vec<bool>, Vec<bool>) {
    let mut pos = vec![false; n];
    let mut neg = vec![false; n];
    for (x, l) in samples {
        if l > 0 {
            pos[x] = true;
        } else {
            neg[x] = true;
        }
    }
    (pos, neg)
}

#[derive(Debug, Clone, Copy)]
pub struct ErrorRegionConfig {
    pub instances: u64,
    pub n: usize,
    pub delta: f64,
    pub c_m: f64,
    /// Committee size and vote bound used to produce the majority under
    /// test.
    pub committee: usize,
    pub epsilon: f64,
    pub pass_threshold: u64,
}

impl Default for ErrorRegionConfig {
    fn default() -> Self {
        Self {
            instances: 200,
            n: 4096,
            delta: 0.05,
            c_m: 128.0,
            committee: 3,
            epsilon: 1.0 / 8.0,
            pass_threshold: 183,
        }
    }
}

/// Batch size `ceil(c_m (d + log2(1/delta)))`.
pub fn error_region_batch(c_m: f64, d: usize, delta: f64) -> u64 {
    (c_m * (d as f64 + (1.0 / delta).log2())).ceil() as u64
}

/// Intervals over random distributions: after `m` counterexamples to a
/// majority, every consistent interval errs on at most 1/16 of the
/// majority's error region, in at least `pass_threshold` instances.
pub fn error_region_suite(config: ErrorRegionConfig, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("error-region shrinkage");
    let n = config.n;
    let d = 2;
    let m = error_region_batch(config.c_m, d, config.delta) as usize;
    let params = VoteParams::new(config.epsilon)?;
    let mut successes = 0u64;
    let mut worst_ratio = 0.0f64;
    for inst in 0..config.instances {
        let mut rng = RandomStream::substream(seed, inst, component::INSTANCE);
        let dist = random_distribution(n, &mut rng);
        let g = random_interval(n, &mut rng).to_table(n);
        let (maj, region) = loop {
            let mut state = VoteState::new(params, FeatureSpace::new(n)?);
            for _ in 0..config.committee {
                state.extend(random_interval(n, &mut rng));
            }
            let maj = state.majority()?.to_table(n);
            let region = Region::disagreement(&maj, &g);
            if dist.mass(&region) > 0.0 {
                break (maj, region);
            }
        };
        let mut eq_rng = RandomStream::substream(seed, inst, component::EQUIVALENCE);
        let EqBatch::Examples(samples) = eq_batch_tables(&maj, &g, &dist, m, &mut eq_rng) else {
            unreachable!("region has mass");
        };
        let (pos, neg) = sample_masks(samples.iter().map(|e| (e.point, e.label)), n);
        let err = worst_consistent_interval_error(&pos, &neg, &region, &g, &dist);
        let ratio = err / dist.mass(&region);
        worst_ratio = worst_ratio.max(ratio);
        if ratio <= 1.0 / 16.0 + 1e-12 {
            successes += 1;
        }
    }
    report.checks = config.instances;
    report.failures = config.instances - successes;
    report.value("batch_size", m as f64);
    report.value("successes", successes as f64);
    report.value("instances", config.instances as f64);
    report.value("worst_error_share", worst_ratio);
    report.passed = successes >= config.pass_threshold;
    if !report.passed {
        report.notes.push(format!(
            "{successes}/{} instances within 1/16, need {}",
            config.instances, config.pass_threshold
        ));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct LevelSetConfig {
    pub instances: u64,
    pub n: usize,
    pub delta: f64,
    pub c_m: f64,
    pub epsilon: f64,
    pub committee: usize,
}

impl Default for LevelSetConfig {
    fn default() -> Self {
        Self {
            instances: 20,
            n: 1024,
            delta: 0.05,
            c_m: 128.0,
            epsilon: 0.25,
            committee: 4,
        }
    }
}

/// Intervals with a small vote bound: for every correct level `Vote_g = -v`
/// holding at least `1/B^4` of the majority's error mass, counterexamples to
/// the majority flipped on `|Vote| = v` force every consistent interval to
/// err on at most 1/16 of that level. Passes when the success rate is at
/// least `1 - delta` minus three standard deviations.
pub fn level_set_suite(config: LevelSetConfig, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("level-set shrinkage");
    let n = config.n;
    let params = VoteParams::new(config.epsilon)?;
    let b = params.bound();
    let b4 = f64::from(b).powi(4);
    let m = (error_region_batch(config.c_m, 2, config.delta) as f64 * b4).ceil() as usize;
    let mut events = 0u64;
    let mut successes = 0u64;
    for inst in 0..config.instances {
        let mut rng = RandomStream::substream(seed, inst, component::INSTANCE);
        let dist = random_distribution(n, &mut rng);
        let g_h = random_interval(n, &mut rng);
        let g = g_h.to_table(n);
        let mut state = VoteState::new(params, FeatureSpace::new(n)?);
        for _ in 0..config.committee {
            state.extend(random_interval(n, &mut rng));
        }
        let vote_g = state.vote_g(&g_h);
        let maj = state.majority()?.to_table(n);
        let maj_wrong = dist.mass(&Region::disagreement(&maj, &g));
        let mut eq_rng = RandomStream::substream(seed, inst, component::EQUIVALENCE);
        for v in params.levels() {
            let level = Region::from_mask(vote_g.iter().map(|&q| q == -v).collect());
            let level_mass = dist.mass(&level);
            if level_mass == 0.0 || level_mass < maj_wrong / b4 {
                continue;
            }
            let mut flipped = maj.clone();
            for (x, l) in flipped.iter_mut().enumerate() {
                if state.votes()[x].abs() == v {
                    *l = -*l;
                }
            }
            let EqBatch::Examples(samples) = eq_batch_tables(&flipped, &g, &dist, m, &mut eq_rng)
            else {
                unreachable!("flipped majority errs on the level");
            };
            let (pos, neg) = sample_masks(samples.iter().map(|e| (e.point, e.label)), n);
            let err = worst_consistent_interval_error(&pos, &neg, &level, &g, &dist);
            events += 1;
            if err <= level_mass / 16.0 + 1e-12 {
                successes += 1;
            }
        }
    }
    let rate = if events == 0 {
        1.0
    } else {
        successes as f64 / events as f64
    };
    let p = 1.0 - config.delta;
    let slack = 3.0 * (p * (1.0 - p) / events.max(1) as f64).sqrt();
    report.checks = events;
    report.failures = events - successes;
    report.value("batch_size", m as f64);
    report.value("events", events as f64);
    report.value("success_rate", rate);
    report.passed = events > 0 && rate >= p - slack;
    if !report.passed {
        report
            .notes
            .push(format!("success rate {rate} over {events} levels"));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub instances: u64,
    pub draws: usize,
    pub tv_tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            instances: 50,
            draws: 100_000,
            tv_tolerance: 0.01,
        }
    }
}

/// Random `(f, g, D)` on 16 to 24 points: empirical counterexamples match
/// `D|{f != g}` in total variation, and the exact risk is within three
/// standard deviations of a Monte Carlo estimate.
pub fn oracle_exactness_suite(config: OracleConfig, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("oracle exactness");
    let mut worst_tv = 0.0f64;
    let mut worst_z = 0.0f64;
    for inst in 0..config.instances {
        let mut rng = RandomStream::substream(seed, inst, component::INSTANCE);
        let n = 16 + rng.below(9);
        let dist = random_distribution(n, &mut rng);
        let g = random_table(n, &mut rng);
        let f = loop {
            let f = random_table(n, &mut rng);
            if f != g {
                break f;
            }
        };
        let mut eq_rng = RandomStream::substream(seed, inst, component::EQUIVALENCE);
        let EqBatch::Examples(samples) = eq_batch_tables(&f, &g, &dist, config.draws, &mut eq_rng)
        else {
            unreachable!("f differs from g on a positive-mass point");
        };
        let mut counts = vec![0.0; n];
        for e in &samples {
            counts[e.point] += 1.0;
        }
        let bad = samples
            .iter()
            .find(|e| f[e.point] == g[e.point] || e.label != g[e.point]);
        report.check(bad.is_none(), || {
            format!(
                "instance {inst}: counterexample {:?} is not an error",
                bad.unwrap()
            )
        });
        let empirical: Vec<f64> = counts.iter().map(|c| c / config.draws as f64).collect();
        let target = dist
            .restrict(&Region::disagreement(&f, &g))
            .expect("disagreement has mass");
        let tv = total_variation(&empirical, target.weights());
        worst_tv = worst_tv.max(tv);
        report.check(tv <= config.tv_tolerance, || {
            format!("instance {inst}: TV {tv} above {}", config.tv_tolerance)
        });

        let mut ex_rng = RandomStream::substream(seed, inst, component::EXAMPLES);
        let hits = (0..config.draws)
            .filter(|_| {
                let x = dist.sample(&mut ex_rng);
                f[x] != g[x]
            })
            .count();
        let exact = risk_tables(&f, &g, &dist);
        let estimate = hits as f64 / config.draws as f64;
        let sigma = (exact * (1.0 - exact) / config.draws as f64).sqrt();
        let z = (estimate - exact).abs() / sigma;
        worst_z = worst_z.max(z);
        report.check(z <= 3.0, || {
            format!("instance {inst}: risk {exact} vs estimate {estimate} ({z:.2} sigma)")
        });
    }
    report.value("worst_tv", worst_tv);
    report.value("worst_risk_z", worst_z);
    report.passed = report.failures == 0;
    report
}

#[derive(Debug, Clone, Copy)]
pub struct ProcessConfig {
    pub epsilon: f64,
    /// Number of seeded uniform-random schedulers run besides greedy-up.
    pub random_schedulers: u64,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5f64.powi(31),
            random_schedulers: 20,
        }
    }
}

/// From all mass at `+B`, greedy-up and seeded random schedulers leave at
/// most `64 epsilon B^3` positive mass after `ceil(10 B^3)` steps, and the
/// `W` recurrence and sandwich hold at every step.
pub fn process_suite(config: ProcessConfig, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("process convergence");
    let steps = convergence_steps(config.epsilon)?;
    let start = ProcessState::concentrated(
        config.epsilon,
        crate::voting::vote_bound(config.epsilon)?,
        UpRule::AllSlots,
    )?;
    let mut worst_positive = 0.0f64;
    let mut recurrence = 0u64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut bound = 0.0;
    for run_idx in 0..=config.random_schedulers {
        let run = if run_idx == 0 {
            run_process(start.clone(), &mut GreedyUp, steps, RunOptions::default())?
        } else {
            let rng = RandomStream::substream(seed, run_idx, component::SCHEDULER);
            run_process(
                start.clone(),
                &mut UniformRandom::new(rng),
                steps,
                RunOptions::default(),
            )?
        };
        bound = run.bound;
        worst_positive = worst_positive.max(run.final_metrics.positive_mass);
        recurrence += run.recurrence_violations;
        worst_excess = worst_excess.max(run.max_recurrence_excess);
        report.check(run.converged, || {
            format!(
                "{} #{run_idx}: positive mass {} above {}",
                run.scheduler, run.final_metrics.positive_mass, run.bound
            )
        });
        report.check(run.recurrence_violations == 0, || {
            format!(
                "{} #{run_idx}: {} W-recurrence violations",
                run.scheduler, run.recurrence_violations
            )
        });
        report.check(run.sandwich_violations == 0, || {
            format!("{} #{run_idx}: sandwich violated", run.scheduler)
        });
        report.check(run.max_mass_drift <= 1e-9, || {
            format!(
                "{} #{run_idx}: mass drift {}",
                run.scheduler, run.max_mass_drift
            )
        });
    }
    report.value("steps", steps as f64);
    report.value("bound", bound);
    report.value("worst_final_positive_mass", worst_positive);
    report.value("recurrence_violations", recurrence as f64);
    report.value("worst_recurrence_excess", worst_excess);
    report.passed = report.failures == 0;
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct TrajectoryConfig {
    pub runs: u64,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            runs: 20,
            n: 1024,
            epsilon: 1.0 / 16.0,
            delta: 1.0 / 3.0,
        }
    }
}

/// Level-set masses of real booster runs: every transition where both
/// shrinkage events hold must be an admissible process step (rule (b) on
/// negative positions). Transitions where an event failed are counted, not
/// judged; admissibility under the all-positions rule is reported too.
pub fn trajectory_suite(config: TrajectoryConfig, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("booster trajectories");
    let n = config.n;
    let class = HypothesisClass::intervals(FeatureSpace::new(n)?);
    let schedule = schedule_params(
        config.epsilon,
        config.delta,
        class.vc_dim(),
        ScheduleMode::Practical,
        ScheduleOverrides::default(),
    )?;
    let mut transitions = 0u64;
    let mut event_failures = 0u64;
    let mut all_slot_admissible = 0u64;
    for run in 0..config.runs {
        let mut rng = RandomStream::substream(seed, run, component::INSTANCE);
        let dist = random_distribution(n, &mut rng);
        let g = random_interval(n, &mut rng);
        let mut oracle = ExactEqOracle::new(
            &g,
            &dist,
            RandomStream::substream(seed, run, component::EQUIVALENCE),
        );
        let result = eq_learn(&class, &mut oracle, &schedule, EqLearnOptions::default()).map_err(
            |e| match e {
                crate::learners::LearnError::Core(e) => e,
                crate::learners::LearnError::AdversaryInconsistent { .. } => {
                    crate::Error::NoConsistent
                }
            },
        )?;
        let tr = trajectory_from_committee(&result.committee, &g, &dist, result.bound)?;
        let eps = epsilon_for_bound(result.bound)?;
        for j in 0..tr.plans.len() {
            transitions += 1;
            let plan = MovePlan {
                down: tr.plans[j].clone(),
            };
            let all = ProcessState::new(eps, &tr.masses[j], UpRule::AllSlots)?;
            if admissible_check(&all, &plan).is_ok() {
                all_slot_admissible += 1;
            }
            if !(tr.error_region_event[j] && tr.level_events[j]) {
                event_failures += 1;
                continue;
            }
            let neg = ProcessState::new(eps, &tr.masses[j], UpRule::NegativeOnly)?;
            let verdict = admissible_check(&neg, &plan);
            report.check(verdict.is_ok(), || {
                format!("run {run}, round {}: {}", j + 2, verdict.unwrap_err())
            });
        }
    }
    report.value("transitions", transitions as f64);
    report.value("event_failures", event_failures as f64);
    report.value("all_positions_admissible", all_slot_admissible as f64);
    report.passed = report.failures == 0;
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct DichotomyConfig {
    pub games: u64,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self {
            games: 20,
            n: 256,
            epsilon: 1.0 / 16.0,
            delta: 1.0 / 3.0,
            beta: 2.0,
        }
    }
}

pub fn adversary_roster(beta: f64) -> [AdversaryKind; 5] {
    [
        AdversaryKind::Strong,
        AdversaryKind::FixedError,
        AdversaryKind::NearestError,
        AdversaryKind::BiasedError { beta },
        AdversaryKind::Lazy,
    ]
}

/// Games of thresholds against every adversary kind: each ends with the
/// risk target met or a round whose function the adversary was not strong
/// for (confirmed by a fresh exact strength test), and never shows more
/// than `t (B + 1)` distinct functions.
pub fn dichotomy_suite(config: DichotomyConfig, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("game dichotomy");
    let n = config.n;
    let class = HypothesisClass::thresholds(FeatureSpace::new(n)?);
    let dist = DiscreteDistribution::uniform(n)?;
    let schedule = schedule_params(
        config.epsilon,
        config.delta,
        class.vc_dim(),
        ScheduleMode::Practical,
        ScheduleOverrides::default(),
    )?;
    let mut achieved = 0u64;
    let mut non_strong = 0u64;
    for kind in adversary_roster(config.beta) {
        for game in 0..config.games {
            let mut rng = RandomStream::substream(seed, game, component::INSTANCE);
            let g = Hypothesis::Threshold(rng.range_inclusive(1, n as i64 - 1));
            let adversary = Adversary::new(
                kind,
                RandomStream::substream(seed, game, component::ADVERSARY),
            );
            let t = run_game(
                &class,
                &dist,
                &g,
                adversary,
                &schedule,
                RandomStream::substream(seed, game, component::EXAMPLES),
            )?;
            report.check(
                t.distinct_functions() as u128 <= schedule.function_bound(),
                || {
                    format!(
                        "{} game {game}: {} distinct functions",
                        kind.name(),
                        t.distinct_functions()
                    )
                },
            );
            match t.verdict {
                Verdict::RiskAchieved { .. } => achieved += 1,
                Verdict::NonStrongRoundFound { round, .. } => {
                    non_strong += 1;
                    let f = Hypothesis::Table(t.functions[t.rounds[round].function].table.clone());
                    let mut fresh = Adversary::new(kind, RandomStream::new(0));
                    let strength = strength_test(
                        &mut fresh,
                        &f,
                        &g,
                        &dist,
                        StrengthMode::Exact,
                        &mut RandomStream::new(0),
                    )?;
                    report.check(strength.tv > 0.0, || {
                        format!(
                            "{} game {game}: flagged round {round} has zero distance",
                            kind.name()
                        )
                    });
                }
                Verdict::Failure { risk } => report.check(false, || {
                    format!("{} game {game}: failure with risk {risk}", kind.name())
                }),
            }
        }
    }
    report.value("risk_achieved", achieved as f64);
    report.value("non_strong_round", non_strong as f64);
    report.passed = report.failures == 0;
    Ok(report)
}
