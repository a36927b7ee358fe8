//! Adversaries and the adversarial learning game.
//!
//! An adversary sees the function `f` it attacks and one fresh draw `x` from
//! the example oracle, and answers with a point. It is *strong* for `f` when
//! the distribution of its answers equals the equivalence oracle's
//! counterexample distribution `D|{f != g}`.
//!
//! The game runs the booster with the adversary in place of the equivalence
//! oracle. The harness is omniscient: it knows `g` and `D`, so for every
//! function shown it can compute the exact total variation distance between
//! the adversary's reply distribution and the true counterexample
//! distribution. The verdict is
//!
//! * `RiskAchieved` if the final hypothesis has risk at most `epsilon`,
//! * otherwise `NonStrongRoundFound` at the first round whose function the
//!   adversary was not strong for,
//! * otherwise `Failure`.
//!
//! Adversaries get no access to the transcript, so their answers cannot
//! depend on history.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::learners::{eq_learn, EqLearnOptions, EqRun, LearnError, QueryStats, Schedule};
use crate::model::{
    risk_tables, DiscreteDistribution, Hypothesis, HypothesisClass, Label, LabeledExample, Region,
};
use crate::oracles::{empirical_distribution, total_variation, CounterexampleSource, EqBatch};
use crate::rng::RandomStream;

/// Exact distances at or below this are treated as zero.
pub const EXACT_TV_TOLERANCE: f64 = 1e-12;
/// Defaults for the empirical strength test.
pub const DEFAULT_STRENGTH_SAMPLES: usize = 1000;
pub const DEFAULT_STRENGTH_TAU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdversaryKind {
    /// Ignores `x` and samples `D|{f != g}` exactly.
    Strong,
    /// Always the lowest-index error point of `f`.
    FixedError,
    /// The error point nearest to `x`, ties broken to the left.
    NearestError,
    /// An error point drawn with weight `D(e) * (rank(e) + 1)^beta`, where
    /// `rank` orders the error points by index.
    BiasedError { beta: f64 },
    /// Returns `x` unchanged.
    Lazy,
}

impl AdversaryKind {
    pub fn name(&self) -> String {
        match self {
            AdversaryKind::Strong => "strong".into(),
            AdversaryKind::FixedError => "fixed".into(),
            AdversaryKind::NearestError => "nearest".into(),
            AdversaryKind::BiasedError { beta } => format!("biased:{beta}"),
            AdversaryKind::Lazy => "lazy".into(),
        }
    }
}

/// The ground truth available to the omniscient harness.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruth<'a> {
    pub g: &'a [Label],
    pub dist: &'a DiscreteDistribution,
}

/// Per-function data an adversary needs to answer quickly.
#[derive(Debug, Clone)]
pub struct PreparedAttack {
    /// Error points of `f` with positive mass, in index order.
    errors: Vec<usize>,
    /// Sampler over `errors` for the randomized kinds.
    sampler: Option<DiscreteDistribution>,
}

#[derive(Debug, Clone)]
pub struct Adversary {
    kind: AdversaryKind,
    rng: RandomStream,
}

impl Adversary {
    pub fn new(kind: AdversaryKind, rng: RandomStream) -> Self {
        Self { kind, rng }
    }

    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    pub fn prepare(&self, f: &[Label], truth: &GroundTruth<'_>) -> Result<PreparedAttack> {
        let errors: Vec<usize> = (0..f.len())
            .filter(|&x| f[x] != truth.g[x] && truth.dist.weight(x) > 0.0)
            .collect();
        if errors.is_empty() {
            return Err(Error::NoErrorExists);
        }
        let sampler = match self.kind {
            AdversaryKind::Strong => Some(truth.dist.weight_vector(&errors)),
            AdversaryKind::BiasedError { beta } => {
                let w: Vec<f64> = errors
                    .iter()
                    .enumerate()
                    .map(|(r, &e)| truth.dist.weight(e) * ((r + 1) as f64).powf(beta))
                    .collect();
                Some(DiscreteDistribution::new(&w)?)
            }
            _ => None,
        };
        Ok(PreparedAttack { errors, sampler })
    }

    pub fn respond_prepared(&mut self, attack: &PreparedAttack, x: usize) -> usize {
        match self.kind {
            AdversaryKind::Strong | AdversaryKind::BiasedError { .. } => {
                let s = attack
                    .sampler
                    .as_ref()
                    .expect("randomized kinds carry a sampler");
                attack.errors[s.sample(&mut self.rng)]
            }
            AdversaryKind::FixedError => attack.errors[0],
            AdversaryKind::NearestError => nearest(&attack.errors, x),
            AdversaryKind::Lazy => x,
        }
    }

    /// One reply to `f` given the example-oracle draw `x`.
    pub fn respond(&mut self, f: &[Label], x: usize, truth: &GroundTruth<'_>) -> Result<usize> {
        let attack = self.prepare(f, truth)?;
        Ok(self.respond_prepared(&attack, x))
    }

    /// Exact distribution of `A(f, x)` for `x ~ D`.
    pub fn reply_distribution(&self, f: &[Label], truth: &GroundTruth<'_>) -> Result<Vec<f64>> {
        let attack = self.prepare(f, truth)?;
        let n = f.len();
        let mut out = vec![0.0; n];
        match self.kind {
            AdversaryKind::Strong | AdversaryKind::BiasedError { .. } => {
                let s = attack.sampler.as_ref().expect("sampler");
                for (i, &e) in attack.errors.iter().enumerate() {
                    out[e] = s.weight(i);
                }
            }
            AdversaryKind::FixedError => out[attack.errors[0]] = 1.0,
            AdversaryKind::NearestError => {
                for (x, &w) in truth.dist.weights().iter().enumerate() {
                    if w > 0.0 {
                        out[nearest(&attack.errors, x)] += w;
                    }
                }
            }
            AdversaryKind::Lazy => out.copy_from_slice(truth.dist.weights()),
        }
        Ok(out)
    }
}

fn nearest(errors: &[usize], x: usize) -> usize {
    let i = errors.partition_point(|&e| e < x);
    match (i.checked_sub(1).map(|j| errors[j]), errors.get(i)) {
        (Some(left), Some(&right)) => {
            if x - left <= right - x {
                left
            } else {
                right
            }
        }
        (Some(left), None) => left,
        (None, Some(&right)) => right,
        (None, None) => unreachable!("errors is non-empty"),
    }
}

impl DiscreteDistribution {
    /// The distribution restricted to `points` and re-indexed by position in
    /// `points`.
    fn weight_vector(&self, points: &[usize]) -> DiscreteDistribution {
        let w: Vec<f64> = points.iter().map(|&x| self.weight(x)).collect();
        DiscreteDistribution::new(&w).expect("points carry positive mass")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrengthMode {
    /// Uses the adversary's exact reply distribution.
    Exact,
    /// Two-sample comparison over `samples` replies; strong iff the
    /// estimated distance is at most `tau`.
    Empirical { samples: usize, tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthReport {
    pub tv: f64,
    pub is_strong: bool,
}

/// Distance between the adversary's replies to `f` and the true
/// counterexample distribution.
pub fn strength_test(
    adversary: &mut Adversary,
    f: &Hypothesis,
    g: &Hypothesis,
    dist: &DiscreteDistribution,
    mode: StrengthMode,
    rng: &mut RandomStream,
) -> Result<StrengthReport> {
    let n = dist.len();
    let f = f.to_table(n);
    let g = g.to_table(n);
    let Ok(target) = dist.restrict(&Region::disagreement(&f, &g)) else {
        return Err(Error::ZeroRiskFunction);
    };
    let truth = GroundTruth { g: &g, dist };
    match mode {
        StrengthMode::Exact => {
            let replies = adversary.reply_distribution(&f, &truth)?;
            let tv = total_variation(&replies, target.weights());
            Ok(StrengthReport {
                tv,
                is_strong: tv <= EXACT_TV_TOLERANCE,
            })
        }
        StrengthMode::Empirical { samples, tau } => {
            let attack = adversary.prepare(&f, &truth)?;
            let replies: Vec<usize> = (0..samples)
                .map(|_| {
                    let x = dist.sample(rng);
                    adversary.respond_prepared(&attack, x)
                })
                .collect();
            let tv = total_variation(&empirical_distribution(replies, n), target.weights());
            Ok(StrengthReport {
                tv,
                is_strong: tv <= tau,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    RiskAchieved { risk: f64 },
    NonStrongRoundFound { round: usize, tv: f64 },
    Failure { risk: f64 },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::RiskAchieved { .. } => "risk-achieved",
            Verdict::NonStrongRoundFound { .. } => "non-strong-round",
            Verdict::Failure { .. } => "failure",
        }
    }
}

/// One interaction: the learner showed function `function`, the adversary
/// answered `reply`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameRound {
    pub function: usize,
    pub reply: usize,
    /// Whether `reply` really is a point where the shown function errs.
    pub genuine: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShownFunction {
    pub table: Vec<Label>,
    pub risk: f64,
    /// Exact distance between the adversary's replies and the true
    /// counterexample distribution; zero for risk-zero functions, which are
    /// answered `Yes`.
    pub tv: f64,
}

#[derive(Debug, Clone)]
pub struct GameTranscript {
    pub rounds: Vec<GameRound>,
    pub functions: Vec<ShownFunction>,
    pub verdict: Verdict,
    pub final_risk: f64,
    pub hypothesis: Hypothesis,
    pub stats: QueryStats,
    /// Set when the adversary's replies admitted no consistent hypothesis.
    pub inconsistent_round: Option<u64>,
}

impl GameTranscript {
    pub fn distinct_functions(&self) -> usize {
        self.functions.len()
    }
}

struct AdversarialSource<'a> {
    adversary: Adversary,
    truth: GroundTruth<'a>,
    examples: RandomStream,
    ids: HashMap<u64, usize>,
    functions: Vec<ShownFunction>,
    rounds: Vec<GameRound>,
}

impl AdversarialSource<'_> {
    fn register(&mut self, f: &[Label]) -> usize {
        let mut h = DefaultHasher::new();
        f.hash(&mut h);
        let key = h.finish();
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let risk = risk_tables(f, self.truth.g, self.truth.dist);
        let tv = match self
            .truth
            .dist
            .restrict(&Region::disagreement(f, self.truth.g))
        {
            Ok(target) => {
                let replies = self
                    .adversary
                    .reply_distribution(f, &self.truth)
                    .expect("positive-risk function has error points");
                total_variation(&replies, target.weights())
            }
            Err(_) => 0.0,
        };
        let id = self.functions.len();
        self.functions.push(ShownFunction {
            table: f.to_vec(),
            risk,
            tv,
        });
        self.ids.insert(key, id);
        id
    }
}

impl CounterexampleSource for AdversarialSource<'_> {
    fn counterexamples(&mut self, f: &Hypothesis, k: usize) -> EqBatch {
        let f = f.to_table(self.truth.g.len());
        let id = self.register(&f);
        let attack = match self.adversary.prepare(&f, &self.truth) {
            Ok(a) => a,
            Err(_) => return EqBatch::Yes,
        };
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let x = self.truth.dist.sample(&mut self.examples);
            let reply = self.adversary.respond_prepared(&attack, x);
            self.rounds.push(GameRound {
                function: id,
                reply,
                genuine: f[reply] != self.truth.g[reply],
            });
            out.push(LabeledExample {
                point: reply,
                label: -f[reply],
            });
        }
        EqBatch::Examples(out)
    }
}

/// Plays the adversarial learning game and returns the transcript and verdict.
pub fn run_game(
    class: &HypothesisClass,
    dist: &DiscreteDistribution,
    g: &Hypothesis,
    adversary: Adversary,
    schedule: &Schedule,
    examples: RandomStream,
) -> Result<GameTranscript> {
    let n = class.space().size();
    if dist.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: dist.len(),
        });
    }
    let g_tab = g.to_table(n);
    let mut source = AdversarialSource {
        adversary,
        truth: GroundTruth { g: &g_tab, dist },
        examples,
        ids: HashMap::new(),
        functions: Vec::new(),
        rounds: Vec::new(),
    };
    let (run, inconsistent_round): (EqRun, Option<u64>) =
        match eq_learn(class, &mut source, schedule, EqLearnOptions::default()) {
            Ok(run) => (run, None),
            Err(LearnError::AdversaryInconsistent { round, partial }) => (*partial, Some(round)),
            Err(LearnError::Core(e)) => return Err(e),
        };
    let final_table = run.hypothesis.to_table(n);
    let final_risk = risk_tables(&final_table, &g_tab, dist);
    let verdict = if final_risk <= schedule.epsilon {
        Verdict::RiskAchieved { risk: final_risk }
    } else if let Some((round, tv)) = source
        .rounds
        .iter()
        .enumerate()
        .map(|(i, r)| (i, source.functions[r.function].tv))
        .find(|&(_, tv)| tv > EXACT_TV_TOLERANCE)
    {
        Verdict::NonStrongRoundFound { round, tv }
    } else {
        Verdict::Failure { risk: final_risk }
    };
    Ok(GameTranscript {
        rounds: source.rounds,
        functions: source.functions,
        verdict,
        final_risk,
        hypothesis: run.hypothesis,
        stats: run.stats,
        inconsistent_round,
    })
}
