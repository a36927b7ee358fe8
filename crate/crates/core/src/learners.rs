//! Consistent-hypothesis finders, the PAC baseline and the equivalence-query
//! booster.
//!
//! The booster keeps a committee whose clipped majority is the current
//! estimate. Every round it asks for counterexamples to the majority and, for
//! every odd confidence level `v`, for counterexamples to the majority flipped
//! on the points whose tally is `+-v`. The flipped queries sample regions the
//! majority already gets right, so the next committee member cannot undo
//! earlier progress there. The next member is any class element consistent
//! with the union of all those samples.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashSet};
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::error::{check_open_unit, Error, Result};
use crate::model::{
    xor_table_in_place, ClassKind, DiscreteDistribution, Hypothesis, HypothesisClass, Label,
    LabeledExample,
};
use crate::oracles::{ex_query, CounterexampleSource, EqBatch};
use crate::rng::RandomStream;
use crate::voting::{vote_bound, VoteParams, VoteState};

/// Constants for the theory schedule's `O(.)` terms.
pub const THEORY_C_M: f64 = 128.0;
pub const THEORY_C_T: f64 = 10.0;
/// Defaults for the executable schedule.
pub const PRACTICAL_C_M: f64 = 1.0;
pub const PRACTICAL_C_T: f64 = 1.0;
/// Largest number of queries a theory schedule may be executed with unless
/// the caller raises the budget.
pub const DEFAULT_THEORY_BUDGET: u128 = 1_000_000_000;

/// Returns the canonical class member agreeing with every sample.
///
/// Canonical choices: the leftmost threshold, the smallest interval (empty
/// when there are no positive samples), the union with the fewest and
/// tightest intervals, and the first listed member of a finite class.
pub fn find_consistent(class: &HypothesisClass, samples: &[LabeledExample]) -> Result<Hypothesis> {
    let n = class.space().size();
    let mut labels: BTreeMap<usize, Label> = BTreeMap::new();
    for s in samples {
        if s.point >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: s.point + 1,
            });
        }
        if *labels.entry(s.point).or_insert(s.label) != s.label {
            return Err(Error::NoConsistent);
        }
    }
    let positives = || {
        labels
            .iter()
            .filter(|(_, &l)| l == 1)
            .map(|(&x, _)| x as i64)
    };
    let negatives = || {
        labels
            .iter()
            .filter(|(_, &l)| l == -1)
            .map(|(&x, _)| x as i64)
    };

    match class.kind() {
        ClassKind::Thresholds => {
            let theta = negatives().max().map_or(0, |x| x + 1);
            match positives().min() {
                Some(p) if p < theta => Err(Error::NoConsistent),
                _ => Ok(Hypothesis::Threshold(theta)),
            }
        }
        ClassKind::Intervals => {
            let (Some(lo), Some(hi)) = (positives().min(), positives().max()) else {
                return Ok(Hypothesis::Interval(0, -1));
            };
            if negatives().any(|x| lo <= x && x <= hi) {
                Err(Error::NoConsistent)
            } else {
                Ok(Hypothesis::Interval(lo, hi))
            }
        }
        ClassKind::UnionOfIntervals(k) => {
            let mut parts: Vec<(i64, i64)> = Vec::new();
            let mut open = false;
            for (&x, &l) in &labels {
                let x = x as i64;
                if l == 1 {
                    if open {
                        parts.last_mut().expect("open run").1 = x;
                    } else {
                        parts.push((x, x));
                        open = true;
                    }
                } else {
                    open = false;
                }
            }
            if parts.len() > *k {
                Err(Error::NoConsistent)
            } else {
                Hypothesis::union(parts)
            }
        }
        ClassKind::Finite(members) => members
            .iter()
            .find(|m| labels.iter().all(|(&x, &l)| m[x] == l))
            .map(|m| Hypothesis::Table(m.clone()))
            .ok_or(Error::NoConsistent),
    }
}

/// The class member chosen with no samples at all.
pub fn canonical_member(class: &HypothesisClass) -> Hypothesis {
    find_consistent(class, &[]).expect("every class has a member consistent with no samples")
}

/// Sample size `ceil((d log2(1/eps) + log2(1/delta)) / eps)` sufficient for
/// `FindConsistent` to reach risk `eps` with probability `1 - delta`.
pub fn pac_sample_size(d: usize, epsilon: f64, delta: f64) -> Result<u64> {
    if d == 0 {
        return Err(Error::OutOfRange {
            what: "VC dimension",
            value: 0.0,
            expected: "must be at least 1",
        });
    }
    check_open_unit("epsilon", epsilon)?;
    check_open_unit("delta", delta)?;
    let bits = d as f64 * (1.0 / epsilon).log2() + (1.0 / delta).log2();
    Ok((bits / epsilon).ceil() as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacRun {
    pub hypothesis: Hypothesis,
    pub samples: u64,
}

/// Draws `pac_sample_size` labelled examples and returns a consistent member.
pub fn pac_learn(
    class: &HypothesisClass,
    dist: &DiscreteDistribution,
    g: &Hypothesis,
    epsilon: f64,
    delta: f64,
    rng: &mut RandomStream,
) -> Result<PacRun> {
    let samples = pac_sample_size(class.vc_dim().max(1), epsilon, delta)?;
    let data: Vec<LabeledExample> = (0..samples).map(|_| ex_query(dist, g, rng)).collect();
    Ok(PacRun {
        hypothesis: find_consistent(class, &data)?,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleMode {
    /// Worst-case constants: `eps' = eps / (1e5 log2^4(1/eps))`, batches of
    /// size `c_m (d + log2 B^4 + log2 1/delta) B^4`.
    Theory,
    /// `eps' = eps` and batches of size `c_m (d + log2 B^4 + log2 1/delta)`.
    Practical,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScheduleOverrides {
    pub c_m: Option<f64>,
    pub c_t: Option<f64>,
    /// Fixes the batch size outright.
    pub m: Option<u64>,
    /// Fixes the number of rounds outright.
    pub t: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub epsilon: f64,
    pub delta: f64,
    pub d: usize,
    pub eps_prime: f64,
    pub bound: i32,
    pub m: u64,
    pub t: u64,
    pub c_m: f64,
    pub c_t: f64,
    pub mode: ScheduleMode,
}

impl Schedule {
    /// Most functions the booster can present: `t (B + 1)`.
    pub fn function_bound(&self) -> u128 {
        u128::from(self.t) * (self.bound as u128 + 1)
    }

    /// Most counterexamples the booster can request: `t (B + 1) m`.
    pub fn query_bound(&self) -> u128 {
        self.function_bound() * u128::from(self.m)
    }

    /// `(d + log2(1/delta)) log2^9(1/eps)`, the shape the query bound is
    /// measured against.
    pub fn polylog_reference(&self) -> f64 {
        (self.d as f64 + (1.0 / self.delta).log2()) * (1.0 / self.epsilon).log2().powi(9)
    }

    /// Whether `eps` is in the range where the worst-case guarantee applies.
    pub fn in_guarantee_range(&self) -> bool {
        self.epsilon <= 1.0 / 32.0
    }
}

pub fn schedule_params(
    epsilon: f64,
    delta: f64,
    d: usize,
    mode: ScheduleMode,
    overrides: ScheduleOverrides,
) -> Result<Schedule> {
    check_open_unit("epsilon", epsilon)?;
    check_open_unit("delta", delta)?;
    if d == 0 {
        return Err(Error::OutOfRange {
            what: "VC dimension",
            value: 0.0,
            expected: "must be at least 1",
        });
    }
    let (default_cm, default_ct) = match mode {
        ScheduleMode::Theory => (THEORY_C_M, THEORY_C_T),
        ScheduleMode::Practical => (PRACTICAL_C_M, PRACTICAL_C_T),
    };
    let c_m = overrides.c_m.unwrap_or(default_cm);
    let c_t = overrides.c_t.unwrap_or(default_ct);
    for (what, c) in [("c_m", c_m), ("c_t", c_t)] {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::OutOfRange {
                what,
                value: c,
                expected: "must be positive",
            });
        }
    }
    let eps_prime = match mode {
        ScheduleMode::Theory => epsilon / (1e5 * (1.0 / epsilon).log2().powi(4)),
        ScheduleMode::Practical => epsilon,
    };
    let bound = vote_bound(eps_prime)?;
    let b = f64::from(bound);
    let b4 = b.powi(4);
    let bits = d as f64 + b4.log2() + (1.0 / delta).log2();
    let m = overrides.m.unwrap_or_else(|| match mode {
        ScheduleMode::Theory => (c_m * bits * b4).ceil() as u64,
        ScheduleMode::Practical => (c_m * bits).ceil() as u64,
    });
    let t = overrides
        .t
        .unwrap_or_else(|| (c_t * b.powi(3)).ceil() as u64);
    if m == 0 || t == 0 {
        return Err(Error::OutOfRange {
            what: "schedule size",
            value: 0.0,
            expected: "m and t must be at least 1",
        });
    }
    Ok(Schedule {
        epsilon,
        delta,
        d,
        eps_prime,
        bound,
        m,
        t,
        c_m,
        c_t,
        mode,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Counterexamples requested over all batches not answered `Yes`.
    pub eq_queries: u64,
    pub distinct_functions: u64,
    pub rounds: u64,
    pub batches: u64,
    pub early_stop: bool,
}

#[derive(Debug, Clone)]
pub struct EqRun {
    pub hypothesis: Hypothesis,
    pub stats: QueryStats,
    pub committee: Vec<Hypothesis>,
    pub bound: i32,
}

#[derive(Debug, Error)]
pub enum LearnError {
    /// The counterexamples gathered in a round admit no consistent class
    /// member. Under a genuine oracle this cannot happen; against an
    /// adversary it certifies the adversary is not a strong one.
    #[error("round {round}: no hypothesis is consistent with the counterexamples")]
    AdversaryInconsistent { round: u64, partial: Box<EqRun> },
    #[error(transparent)]
    Core(#[from] Error),
}

#[derive(Default)]
pub struct EqLearnOptions<'a> {
    /// First committee member; defaults to [`canonical_member`].
    pub initial: Option<Hypothesis>,
    /// Omniscient stop rule, checked on every majority before it is queried.
    /// Only allowed with the practical schedule.
    pub stop_when: Option<&'a dyn Fn(&Hypothesis) -> bool>,
    /// Query budget for theory schedules; [`DEFAULT_THEORY_BUDGET`] if unset.
    pub budget: Option<u128>,
}

fn table_fingerprint(t: &[Label]) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

/// Runs the booster against `oracle` and returns the final clipped majority.
pub fn eq_learn(
    class: &HypothesisClass,
    oracle: &mut dyn CounterexampleSource,
    schedule: &Schedule,
    options: EqLearnOptions<'_>,
) -> std::result::Result<EqRun, LearnError> {
    if schedule.mode == ScheduleMode::Theory {
        if options.stop_when.is_some() {
            return Err(Error::OutOfRange {
                what: "omniscient early stop",
                value: 1.0,
                expected: "only available with the practical schedule",
            }
            .into());
        }
        let budget = options.budget.unwrap_or(DEFAULT_THEORY_BUDGET);
        if schedule.query_bound() > budget {
            return Err(Error::ScheduleInfeasible {
                required: schedule.query_bound(),
                budget,
            }
            .into());
        }
    }

    let n = class.space().size();
    let m = schedule.m as usize;
    let params = VoteParams::new(schedule.eps_prime)?;
    let mut state = VoteState::new(params, class.space());
    state.extend(options.initial.unwrap_or_else(|| canonical_member(class)));

    let mut stats = QueryStats::default();
    let mut shown: HashSet<u64> = HashSet::new();
    let finish = |state: VoteState, stats: QueryStats| EqRun {
        hypothesis: Hypothesis::Table(state.majority_table()),
        stats,
        bound: params.bound(),
        committee: state.into_committee(),
    };

    for round in 2..=schedule.t {
        stats.rounds += 1;
        let maj_table = state.majority_table();
        let maj = Hypothesis::Table(maj_table.clone());
        if options.stop_when.is_some_and(|stop| stop(&maj)) {
            stats.early_stop = true;
            return Ok(finish(state, stats));
        }
        shown.insert(table_fingerprint(&maj_table));
        stats.distinct_functions = shown.len() as u64;
        stats.batches += 1;
        let mut samples = match oracle.counterexamples(&maj, m) {
            EqBatch::Yes => {
                stats.early_stop = true;
                return Ok(finish(state, stats));
            }
            EqBatch::Examples(s) => s,
        };
        stats.eq_queries += m as u64;

        let mut occupied = vec![false; params.bound() as usize + 1];
        for v in state.votes() {
            occupied[v.unsigned_abs() as usize] = true;
        }
        for level in params.levels() {
            if !occupied[level as usize] {
                continue;
            }
            let region = state.confidence_level_set(level)?;
            let mut flipped = maj_table.clone();
            xor_table_in_place(&mut flipped, &region);
            shown.insert(table_fingerprint(&flipped));
            stats.distinct_functions = shown.len() as u64;
            stats.batches += 1;
            if let EqBatch::Examples(s) = oracle.counterexamples(&Hypothesis::Table(flipped), m) {
                stats.eq_queries += m as u64;
                samples.extend(s);
            }
        }

        match find_consistent(class, &samples) {
            Ok(h) => state.extend(h),
            Err(Error::NoConsistent) => {
                return Err(LearnError::AdversaryInconsistent {
                    round,
                    partial: Box::new(finish(state, stats)),
                })
            }
            Err(e) => return Err(e.into()),
        }
    }
    debug_assert_eq!(state.votes().len(), n);
    Ok(finish(state, stats))
}
