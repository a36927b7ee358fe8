//! The mass-movement process on odd integers.
//!
//! Mass sits on the odd positions `-B, ..., -1, 1, ..., B`. At every step each
//! position sends a share `d_i` of its mass two steps down and the rest two
//! steps up; mass leaving `[-B, B]` is reflected back onto the boundary. A
//! plan is admissible when
//!
//! * (a) at least 15/16 of the total positive mass moves down, and
//! * (b) every position holding at least `1/B^4` of the positive mass sends
//!   at most 1/16 of its own mass up.
//!
//! Rule (b) is applied to every position by default; [`UpRule::NegativeOnly`]
//! restricts it to negative positions, which is the form the booster's
//! trajectories are guaranteed to satisfy.
//!
//! The potentials `W = sum_{i<0} 2^i p_i + P+` and `M` (mean positive
//! position) drive the convergence argument: `W` may grow by at most a
//! factor `1 + 1/B^3` plus `2 epsilon` per step, and the positive mass ends
//! below `64 epsilon B^3` after `O(B^3)` steps.

use std::io::Write;

use crate::error::{check_open_unit, Error, Result};
use crate::model::{DiscreteDistribution, Hypothesis};
use crate::rng::RandomStream;
use crate::voting::{clip, vote_bound};

/// Mass that must move down, as a share of the positive mass.
pub const DOWN_SHARE: f64 = 15.0 / 16.0;
/// Largest share a heavy position may send up.
pub const UP_SHARE: f64 = 1.0 / 16.0;
pub const ADMISSIBILITY_TOLERANCE: f64 = 1e-12;
pub const MASS_TOLERANCE: f64 = 1e-9;
pub const RECURRENCE_TOLERANCE: f64 = 1e-9;
/// Convergence checks run for `ceil(CONVERGENCE_STEPS_FACTOR * B^3)` steps.
pub const CONVERGENCE_STEPS_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpRule {
    #[default]
    AllSlots,
    NegativeOnly,
}

/// Masses on the odd positions of `[-B, B]`. Slot `k` holds position
/// `2k - B`.
#[derive(Debug, Clone)]
pub struct ProcessState {
    epsilon: f64,
    bound: i32,
    masses: Vec<f64>,
    step: u64,
    rule: UpRule,
    clamped_steps: u64,
    powers: Vec<f64>,
    plan: Vec<f64>,
    next: Vec<f64>,
}

pub fn init_process(epsilon: f64, masses: &[f64]) -> Result<ProcessState> {
    ProcessState::new(epsilon, masses, UpRule::default())
}

impl ProcessState {
    pub fn new(epsilon: f64, masses: &[f64], rule: UpRule) -> Result<Self> {
        let bound = vote_bound(epsilon)?;
        let slots = bound as usize + 1;
        if masses.len() != slots {
            return Err(Error::BadMassVector(format!(
                "expected {slots} masses for B = {bound}, got {}",
                masses.len()
            )));
        }
        if let Some((k, p)) = masses
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::BadMassVector(format!(
                "mass {p} at position {} is not a non-negative number",
                2 * k as i32 - bound
            )));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::BadMassVector(format!(
                "masses sum to {total}, not 1"
            )));
        }
        let powers = (0..slots)
            .map(|k| {
                let i = 2 * k as i32 - bound;
                if i < 0 {
                    2f64.powi(i)
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            epsilon,
            bound,
            masses: masses.to_vec(),
            step: 0,
            rule,
            clamped_steps: 0,
            powers,
            plan: vec![0.0; slots],
            next: vec![0.0; slots],
        })
    }

    /// All mass on position `i`.
    pub fn concentrated(epsilon: f64, position: i32, rule: UpRule) -> Result<Self> {
        let bound = vote_bound(epsilon)?;
        if position % 2 == 0 || position.abs() > bound {
            return Err(Error::BadMassVector(format!(
                "position {position} is not odd or lies outside [-{bound}, {bound}]"
            )));
        }
        let mut masses = vec![0.0; bound as usize + 1];
        masses[slot_of(position, bound)] = 1.0;
        Self::new(epsilon, &masses, rule)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn bound(&self) -> i32 {
        self.bound
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass_at(&self, position: i32) -> f64 {
        if position % 2 == 0 || position.abs() > self.bound {
            return 0.0;
        }
        self.masses[slot_of(position, self.bound)]
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn rule(&self) -> UpRule {
        self.rule
    }

    /// Steps whose plan had to be projected onto the admissible set.
    pub fn clamped_steps(&self) -> u64 {
        self.clamped_steps
    }

    pub fn positions(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.masses.len()).map(move |k| position_of(k, self.bound))
    }

    fn first_positive(&self) -> usize {
        (self.bound as usize).div_ceil(2)
    }

    pub fn positive_mass(&self) -> f64 {
        self.masses[self.first_positive()..].iter().sum()
    }

    /// Mass above which rule (b) binds.
    pub fn heavy_threshold(&self) -> f64 {
        let b4 = f64::from(self.bound).powi(4);
        self.positive_mass() / b4
    }

    /// Whether rule (b) constrains slot `k` given the current threshold.
    fn is_heavy(&self, k: usize, threshold: f64) -> bool {
        let applies = match self.rule {
            UpRule::AllSlots => true,
            UpRule::NegativeOnly => k < self.first_positive(),
        };
        applies && self.masses[k] >= threshold
    }

    /// Slots constrained by rule (b) under the current masses.
    pub fn heavy_slots(&self) -> Vec<bool> {
        let thr = self.heavy_threshold();
        (0..self.masses.len())
            .map(|k| self.is_heavy(k, thr))
            .collect()
    }
}

pub fn slot_of(position: i32, bound: i32) -> usize {
    ((position + bound) / 2) as usize
}

pub fn position_of(slot: usize, bound: i32) -> i32 {
    2 * slot as i32 - bound
}

/// Down shares `d_i`, one per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MovePlan {
    pub down: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    WrongLength {
        expected: usize,
        actual: usize,
    },
    NotAShare {
        position: i32,
        value: f64,
    },
    PositiveMassDown {
        moved_down: f64,
        required: f64,
    },
    HeavyMovesUp {
        position: i32,
        up: f64,
        allowed: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::WrongLength { expected, actual } => {
                write!(f, "plan has {actual} shares, expected {expected}")
            }
            Violation::NotAShare { position, value } => {
                write!(f, "share {value} at position {position} is outside [0, 1]")
            }
            Violation::PositiveMassDown { moved_down, required } => write!(
                f,
                "rule (a): {moved_down} of the positive mass moves down, at least {required} required"
            ),
            Violation::HeavyMovesUp { position, up, allowed } => write!(
                f,
                "rule (b): position {position} sends {up} up, at most {allowed} allowed"
            ),
        }
    }
}

pub fn admissible_check(
    state: &ProcessState,
    plan: &MovePlan,
) -> std::result::Result<(), Violation> {
    check_shares(state, &plan.down)
}

fn check_shares(state: &ProcessState, down: &[f64]) -> std::result::Result<(), Violation> {
    let slots = state.masses.len();
    if down.len() != slots {
        return Err(Violation::WrongLength {
            expected: slots,
            actual: down.len(),
        });
    }
    for (k, &d) in down.iter().enumerate() {
        if !(0.0..=1.0).contains(&d) {
            return Err(Violation::NotAShare {
                position: position_of(k, state.bound),
                value: d,
            });
        }
    }
    let first_pos = state.first_positive();
    let positive = state.positive_mass();
    let moved_down: f64 = (first_pos..slots).map(|k| down[k] * state.masses[k]).sum();
    let required = DOWN_SHARE * positive;
    if moved_down < required - ADMISSIBILITY_TOLERANCE {
        return Err(Violation::PositiveMassDown {
            moved_down,
            required,
        });
    }
    let thr = positive / f64::from(state.bound).powi(4);
    for (k, &p) in state.masses.iter().enumerate() {
        if state.is_heavy(k, thr) {
            let up = (1.0 - down[k]) * p;
            let allowed = UP_SHARE * p;
            if up > allowed + ADMISSIBILITY_TOLERANCE {
                return Err(Violation::HeavyMovesUp {
                    position: position_of(k, state.bound),
                    up,
                    allowed,
                });
            }
        }
    }
    Ok(())
}

/// Euclidean projection of `down` onto the admissible plans for `state`.
pub fn clamp_plan(state: &ProcessState, down: &mut [f64]) {
    let slots = state.masses.len();
    let thr = state.heavy_threshold();
    let lower: Vec<f64> = (0..slots)
        .map(|k| {
            if state.is_heavy(k, thr) {
                DOWN_SHARE
            } else {
                0.0
            }
        })
        .collect();
    for (k, d) in down.iter_mut().enumerate() {
        *d = if d.is_nan() {
            1.0
        } else {
            d.clamp(lower[k], 1.0)
        };
    }
    let first_pos = state.first_positive();
    let p = &state.masses;
    let required = DOWN_SHARE * state.positive_mass();
    let moved = |lambda: f64, down: &[f64]| -> f64 {
        (first_pos..slots)
            .map(|k| (down[k] + lambda * p[k]).clamp(lower[k], 1.0) * p[k])
            .sum()
    };
    if moved(0.0, down) >= required {
        return;
    }
    // Raising every positive share to 1 always suffices.
    let mut hi = (first_pos..slots)
        .filter(|&k| p[k] > 0.0)
        .map(|k| (1.0 - down[k]) / p[k])
        .fold(0.0, f64::max);
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if moved(mid, down) >= required {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    for k in first_pos..slots {
        down[k] = (down[k] + hi * p[k]).clamp(lower[k], 1.0);
    }
}

/// Chooses a plan for the current state. Plans are validated and projected
/// onto the admissible set by [`process_step`].
pub trait Scheduler {
    fn name(&self) -> String;
    /// Writes one down share per slot into `down`.
    fn plan(&mut self, state: &ProcessState, down: &mut [f64]);
}

/// Sends as much mass up as the rules allow: exactly 15/16 of every positive
/// position down, heavy negatives at 15/16, light negatives entirely up.
#[derive(Debug, Clone, Default)]
pub struct GreedyUp;

impl Scheduler for GreedyUp {
    fn name(&self) -> String {
        "greedy-up".into()
    }

    fn plan(&mut self, state: &ProcessState, down: &mut [f64]) {
        let thr = state.heavy_threshold();
        let first_pos = state.first_positive();
        for (k, d) in down.iter_mut().enumerate() {
            *d = if k >= first_pos || state.is_heavy(k, thr) {
                DOWN_SHARE
            } else {
                0.0
            };
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AllDown;

impl Scheduler for AllDown {
    fn name(&self) -> String {
        "all-down".into()
    }

    fn plan(&mut self, _state: &ProcessState, down: &mut [f64]) {
        down.fill(1.0);
    }
}

/// Each share uniform in its admissible interval: `[15/16, 1]` on positive
/// and heavy positions, `[0, 1]` elsewhere.
#[derive(Debug, Clone)]
pub struct UniformRandom {
    rng: RandomStream,
}

impl UniformRandom {
    pub fn new(rng: RandomStream) -> Self {
        Self { rng }
    }
}

impl Scheduler for UniformRandom {
    fn name(&self) -> String {
        "uniform-random".into()
    }

    fn plan(&mut self, state: &ProcessState, down: &mut [f64]) {
        let thr = state.heavy_threshold();
        let first_pos = state.first_positive();
        for (k, d) in down.iter_mut().enumerate() {
            let u = self.rng.next_f64();
            *d = if k >= first_pos || state.is_heavy(k, thr) {
                DOWN_SHARE + UP_SHARE * u
            } else {
                u
            };
        }
    }
}

/// The same down share at every position.
#[derive(Debug, Clone)]
pub struct Proportional {
    pub down: f64,
}

impl Default for Proportional {
    fn default() -> Self {
        Self { down: DOWN_SHARE }
    }
}

impl Scheduler for Proportional {
    fn name(&self) -> String {
        format!("proportional:{}", self.down)
    }

    fn plan(&mut self, _state: &ProcessState, down: &mut [f64]) {
        down.fill(self.down);
    }
}

/// Replays recorded plans, then moves everything down.
#[derive(Debug, Clone)]
pub struct TraceReplay {
    plans: Vec<Vec<f64>>,
    next: usize,
}

impl TraceReplay {
    pub fn new(plans: Vec<Vec<f64>>) -> Self {
        Self { plans, next: 0 }
    }
}

impl Scheduler for TraceReplay {
    fn name(&self) -> String {
        "trace-replay".into()
    }

    fn plan(&mut self, _state: &ProcessState, down: &mut [f64]) {
        match self.plans.get(self.next) {
            Some(p) if p.len() == down.len() => down.copy_from_slice(p),
            _ => down.fill(1.0),
        }
        self.next += 1;
    }
}

/// Advances the process by one step. Returns the violation if the
/// scheduler's plan had to be clamped.
pub fn process_step(state: &mut ProcessState, scheduler: &mut dyn Scheduler) -> Option<Violation> {
    let mut plan = std::mem::take(&mut state.plan);
    scheduler.plan(state, &mut plan);
    let violation = check_shares(state, &plan).err();
    if violation.is_some() {
        clamp_plan(state, &mut plan);
        state.clamped_steps += 1;
    }
    apply_plan(state, &plan);
    state.plan = plan;
    violation
}

fn apply_plan(state: &mut ProcessState, down: &[f64]) {
    let last = state.masses.len() - 1;
    let next = &mut state.next;
    next.fill(0.0);
    for (k, (&p, &d)) in state.masses.iter().zip(down).enumerate() {
        let below = d * p;
        next[k.saturating_sub(1)] += below;
        next[(k + 1).min(last)] += p - below;
    }
    std::mem::swap(&mut state.masses, &mut state.next);
    state.step += 1;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessMetrics {
    /// `sum_{i<0} 2^i p_i + P+`.
    pub w: f64,
    /// Mean positive position, 0 without positive mass.
    pub m: f64,
    pub positive_mass: f64,
}

pub fn metrics(state: &ProcessState) -> ProcessMetrics {
    let first_pos = state.first_positive();
    let mut w = 0.0;
    for k in 0..first_pos {
        w += state.powers[k] * state.masses[k];
    }
    let mut positive = 0.0;
    let mut moment = 0.0;
    for k in first_pos..state.masses.len() {
        let p = state.masses[k];
        positive += p;
        moment += f64::from(position_of(k, state.bound)) * p;
    }
    ProcessMetrics {
        w: w + positive,
        m: if positive > 0.0 {
            moment / positive
        } else {
            0.0
        },
        positive_mass: positive,
    }
}

/// `64 epsilon B^3`.
pub fn convergence_bound(epsilon: f64) -> Result<f64> {
    let b = f64::from(vote_bound(epsilon)?);
    Ok(64.0 * epsilon * b.powi(3))
}

/// `ceil(10 B^3)`.
pub fn convergence_steps(epsilon: f64) -> Result<u64> {
    let b = f64::from(vote_bound(epsilon)?);
    Ok((CONVERGENCE_STEPS_FACTOR * b.powi(3)).ceil() as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: u64,
    pub metrics: ProcessMetrics,
    /// Per-slot masses, when requested.
    pub masses: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record a row every this many steps (and at the start and end).
    pub record_every: Option<u64>,
    pub record_masses: bool,
}

#[derive(Debug, Clone)]
pub struct ProcessRun {
    pub scheduler: String,
    pub steps: u64,
    pub initial: ProcessMetrics,
    pub final_metrics: ProcessMetrics,
    pub final_masses: Vec<f64>,
    /// `64 epsilon B^3`.
    pub bound: f64,
    /// Whether the final positive mass is within `bound`.
    pub converged: bool,
    /// Steps where `W_{t+1} > (1 + 1/B^3) W_t + 2 epsilon + 1e-9`.
    pub recurrence_violations: u64,
    /// Largest value of `W_{t+1} - ((1 + 1/B^3) W_t + 2 epsilon)`.
    pub max_recurrence_excess: f64,
    /// Steps where `P+ <= W <= 1` failed beyond tolerance.
    pub sandwich_violations: u64,
    pub max_mass_drift: f64,
    pub clamped_steps: u64,
    pub rows: Vec<TrajectoryRow>,
}

/// Runs `steps` steps from `state`, checking the `W` recurrence and the
/// sandwich `P+ <= W <= 1` after every step.
pub fn run_process(
    mut state: ProcessState,
    scheduler: &mut dyn Scheduler,
    steps: u64,
    options: RunOptions,
) -> Result<ProcessRun> {
    if !(state.epsilon > 0.0 && state.epsilon < 1.0 / 32.0) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: state.epsilon,
            expected: "must lie in (0, 1/32) for the convergence check",
        });
    }
    let eps = state.epsilon;
    let growth = 1.0 + 1.0 / f64::from(state.bound).powi(3);
    let bound = convergence_bound(eps)?;
    let initial = metrics(&state);
    let clamped_before = state.clamped_steps;
    let mut rows = Vec::new();
    let record = |state: &ProcessState, m: ProcessMetrics| TrajectoryRow {
        step: state.step,
        metrics: m,
        masses: options.record_masses.then(|| state.masses.clone()),
    };
    if options.record_every.is_some() {
        rows.push(record(&state, initial));
    }
    let mut prev = initial;
    let mut recurrence_violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    let mut sandwich_violations = 0;
    let mut max_drift: f64 = 0.0;
    for t in 1..=steps {
        process_step(&mut state, scheduler);
        let now = metrics(&state);
        let excess = now.w - (growth * prev.w + 2.0 * eps);
        max_excess = max_excess.max(excess);
        if excess > RECURRENCE_TOLERANCE {
            recurrence_violations += 1;
        }
        if now.positive_mass > now.w + MASS_TOLERANCE || now.w > 1.0 + MASS_TOLERANCE {
            sandwich_violations += 1;
        }
        if t % 1024 == 0 || t == steps {
            let total: f64 = state.masses.iter().sum();
            max_drift = max_drift.max((total - 1.0).abs());
        }
        if let Some(every) = options.record_every {
            if every > 0 && (t % every == 0 || t == steps) {
                rows.push(record(&state, now));
            }
        }
        prev = now;
    }
    Ok(ProcessRun {
        scheduler: scheduler.name(),
        steps,
        initial,
        final_metrics: prev,
        final_masses: state.masses.clone(),
        bound,
        converged: prev.positive_mass <= bound,
        recurrence_violations,
        max_recurrence_excess: if steps == 0 { 0.0 } else { max_excess },
        sandwich_violations,
        max_mass_drift: max_drift,
        clamped_steps: state.clamped_steps - clamped_before,
        rows,
    })
}

/// Writes `step,W,M,positive_mass` and, when present, one column per
/// position.
pub fn write_trajectory_csv(
    out: &mut dyn Write,
    bound: i32,
    rows: &[TrajectoryRow],
) -> std::io::Result<()> {
    let with_masses = rows.first().is_some_and(|r| r.masses.is_some());
    write!(out, "step,W,M,positive_mass")?;
    if with_masses {
        for k in 0..=bound as usize {
            write!(out, ",p[{}]", position_of(k, bound))?;
        }
    }
    writeln!(out)?;
    for r in rows {
        write!(
            out,
            "{},{:.16e},{:.16e},{:.16e}",
            r.step, r.metrics.w, r.metrics.m, r.metrics.positive_mass
        )?;
        if let Some(ms) = &r.masses {
            for p in ms {
                write!(out, ",{p:.16e}")?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Level-set masses of a committee's `Vote_g` over its rounds.
#[derive(Debug, Clone)]
pub struct CommitteeTrajectory {
    pub bound: i32,
    /// `masses[j][k] = D(Vote_g(h_1..h_{j+1}) = position k)`.
    pub masses: Vec<Vec<f64>>,
    /// `plans[j][k]`: share of level `k` on which `h_{j+2}` is correct,
    /// i.e. the share that moves down. Empty levels get 1.
    pub plans: Vec<Vec<f64>>,
    /// Per transition: whether the new member errs on at most 1/16 of the
    /// majority's error region.
    pub error_region_event: Vec<bool>,
    /// Per transition: whether the new member errs on at most 1/16 of every
    /// correct level `Vote_g = -v` holding at least `1/B^4` of the
    /// majority's error mass.
    pub level_events: Vec<bool>,
}

/// Replays a committee against `g` under `dist`.
pub fn trajectory_from_committee(
    committee: &[Hypothesis],
    g: &Hypothesis,
    dist: &DiscreteDistribution,
    bound: i32,
) -> Result<CommitteeTrajectory> {
    if committee.is_empty() {
        return Err(Error::EmptyCommittee);
    }
    if bound < 1 || bound % 2 == 0 {
        return Err(Error::OutOfRange {
            what: "vote bound",
            value: f64::from(bound),
            expected: "must be a positive odd integer",
        });
    }
    let n = dist.len();
    let g = g.to_table(n);
    let slots = bound as usize + 1;
    let b4 = f64::from(bound).powi(4);
    let mut vote_g: Vec<i32> = Vec::new();
    let mut out = CommitteeTrajectory {
        bound,
        masses: Vec::new(),
        plans: Vec::new(),
        error_region_event: Vec::new(),
        level_events: Vec::new(),
    };
    for (j, h) in committee.iter().enumerate() {
        let h = h.to_table(n);
        if j > 0 {
            let mut level = vec![0.0; slots];
            let mut correct = vec![0.0; slots];
            let mut maj_wrong = 0.0;
            let mut both_wrong = 0.0;
            for x in 0..n {
                let w = dist.weight(x);
                let k = slot_of(vote_g[x], bound);
                level[k] += w;
                if h[x] == g[x] {
                    correct[k] += w;
                }
                if vote_g[x] > 0 {
                    maj_wrong += w;
                    if h[x] != g[x] {
                        both_wrong += w;
                    }
                }
            }
            let plan = (0..slots)
                .map(|k| {
                    if level[k] > 0.0 {
                        correct[k] / level[k]
                    } else {
                        1.0
                    }
                })
                .collect();
            out.plans.push(plan);
            out.error_region_event
                .push(both_wrong <= maj_wrong / 16.0 + ADMISSIBILITY_TOLERANCE);
            let levels_ok = (0..slots / 2).all(|k| {
                level[k] < maj_wrong / b4
                    || level[k] - correct[k] <= level[k] / 16.0 + ADMISSIBILITY_TOLERANCE
            });
            out.level_events.push(levels_ok);
        }
        if j == 0 {
            vote_g = (0..n).map(|x| if h[x] == g[x] { -1 } else { 1 }).collect();
        } else {
            for x in 0..n {
                let step = if h[x] == g[x] { -2 } else { 2 };
                vote_g[x] = clip(vote_g[x] + step, bound);
            }
        }
        let mut masses = vec![0.0; slots];
        for x in 0..n {
            masses[slot_of(vote_g[x], bound)] += dist.weight(x);
        }
        out.masses.push(masses);
    }
    Ok(out)
}

/// Epsilon whose vote bound is `bound`, for building process states from
/// committee trajectories.
pub fn epsilon_for_bound(bound: i32) -> Result<f64> {
    if bound < 3 || bound % 2 == 0 {
        return Err(Error::OutOfRange {
            what: "vote bound",
            value: f64::from(bound),
            expected: "must be an odd integer of at least 3",
        });
    }
    let eps = 0.5f64.powi((bound - 1) / 2);
    check_open_unit("epsilon", eps)?;
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn init_examples() {
        let s = ProcessState::concentrated(0.25, 5, UpRule::AllSlots).unwrap();
        assert_eq!(s.bound(), 5);
        assert_eq!(s.mass_at(5), 1.0);
        assert!(init_process(0.25, &[1.0 / 6.0; 6]).is_ok());
        assert!(matches!(
            init_process(0.25, &[0.15; 6]),
            Err(Error::BadMassVector(_))
        ));
        assert!(init_process(0.25, &[0.25; 4]).is_err());
        assert!(init_process(0.25, &[-0.5, 1.5, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let s = init_process(0.5, &[0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(
            admissible_check(&s, &MovePlan { down: vec![1.0; 4] }),
            Ok(())
        );
        let plan = MovePlan {
            down: vec![1.0, 1.0, 0.8, 1.0],
        };
        assert!(matches!(
            admissible_check(&s, &plan),
            Err(Violation::PositiveMassDown { .. })
        ));
        let plan = MovePlan {
            down: vec![1.0, 0.9, 1.0, 1.0],
        };
        assert!(matches!(
            admissible_check(&s, &plan),
            Err(Violation::HeavyMovesUp { position: -1, .. })
        ));
    }

    #[test]
    fn greedy_step_example() {
        let mut s = init_process(0.5, &[0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(process_step(&mut s, &mut GreedyUp), None);
        let expected = [0.46875, 0.46875, 0.03125, 0.03125];
        for (a, b) in s.masses().iter().zip(expected) {
            assert!(close(*a, b), "{:?}", s.masses());
        }
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn reflection_at_bottom() {
        let mut s = ProcessState::concentrated(0.25, -5, UpRule::AllSlots).unwrap();
        process_step(&mut s, &mut AllDown);
        assert_eq!(s.mass_at(-5), 1.0);
        let mut s = ProcessState::concentrated(0.25, 5, UpRule::AllSlots).unwrap();
        process_step(&mut s, &mut Proportional { down: 0.0 });
        // Clamped to 15/16 down; the rest reflects at the top.
        assert!(close(s.mass_at(3), DOWN_SHARE));
        assert!(close(s.mass_at(5), UP_SHARE));
        assert_eq!(s.clamped_steps(), 1);
    }

    #[test]
    fn metrics_examples() {
        let s = init_process(0.5, &[0.25; 4]).unwrap();
        let m = metrics(&s);
        assert!(close(m.w, 0.65625));
        assert!(close(m.m, 2.0));
        assert!(close(m.positive_mass, 0.5));
        let s = ProcessState::concentrated(0.5, -3, UpRule::AllSlots).unwrap();
        let m = metrics(&s);
        assert!(close(m.w, 0.125));
        assert_eq!(m.positive_mass, 0.0);
        assert_eq!(m.m, 0.0);
        let s = ProcessState::concentrated(0.5, 1, UpRule::AllSlots).unwrap();
        let m = metrics(&s);
        assert_eq!((m.w, m.m), (1.0, 1.0));
    }

    #[test]
    fn negative_only_rule_frees_positive_slots() {
        // Position +3 heavy: under the default rule it may send at most 1/16 up.
        let s = init_process(0.5, &[0.0, 0.0, 0.5, 0.5]).unwrap();
        let plan = MovePlan {
            down: vec![1.0, 1.0, 1.0, 0.875],
        };
        assert!(admissible_check(&s, &plan).is_err());
        let s = ProcessState::new(0.5, &[0.0, 0.0, 0.5, 0.5], UpRule::NegativeOnly).unwrap();
        assert_eq!(admissible_check(&s, &plan), Ok(()));
    }

    #[test]
    fn all_down_converges_monotonically() {
        let eps = 1.0 / 64.0;
        let s = init_process(eps, &[1.0 / 14.0; 14]).unwrap();
        let b = s.bound() as u64;
        let run = run_process(
            s,
            &mut AllDown,
            3 * b,
            RunOptions {
                record_every: Some(1),
                record_masses: false,
            },
        )
        .unwrap();
        assert!(run.converged);
        let after: Vec<f64> = run.rows[b as usize..]
            .iter()
            .map(|r| r.metrics.positive_mass)
            .collect();
        assert!(after.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(after[0], 0.0);
        assert_eq!(run.recurrence_violations, 0);
    }

    #[test]
    fn run_rejects_large_epsilon() {
        let s = init_process(0.5, &[0.25; 4]).unwrap();
        assert!(run_process(s, &mut AllDown, 1, RunOptions::default()).is_err());
    }

    #[test]
    fn greedy_converges_small_bound() {
        let eps = 1.0 / 64.0;
        let s = ProcessState::concentrated(eps, 13, UpRule::AllSlots).unwrap();
        let steps = convergence_steps(eps).unwrap();
        let run = run_process(s, &mut GreedyUp, steps, RunOptions::default()).unwrap();
        assert!(run.converged, "{:?}", run.final_metrics);
        assert_eq!(run.recurrence_violations, 0);
        assert_eq!(run.sandwich_violations, 0);
        assert_eq!(run.clamped_steps, 0);
    }

    #[test]
    fn conservation_over_many_random_steps() {
        let mut s = ProcessState::concentrated(1.0 / 64.0, 13, UpRule::AllSlots).unwrap();
        let mut sched = UniformRandom::new(RandomStream::new(5));
        for _ in 0..1_000_000 {
            process_step(&mut s, &mut sched);
        }
        let total: f64 = s.masses().iter().sum();
        assert!((total - 1.0).abs() <= 1e-9, "drift {}", total - 1.0);
        assert_eq!(s.clamped_steps(), 0);
    }

    #[test]
    fn csv_export() {
        let s = init_process(1.0 / 64.0, &[1.0 / 14.0; 14]).unwrap();
        let run = run_process(
            s,
            &mut AllDown,
            4,
            RunOptions {
                record_every: Some(2),
                record_masses: true,
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, 13, &run.rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("step,W,M,positive_mass,p[-13]"));
        assert_eq!(lines[1].split(',').count(), 4 + 14);
    }

    #[test]
    fn committee_trajectory_matches_process() {
        let dist = DiscreteDistribution::uniform(8).unwrap();
        let g = Hypothesis::Threshold(4);
        let committee = vec![
            Hypothesis::Threshold(0),
            Hypothesis::Threshold(3),
            Hypothesis::Threshold(4),
            Hypothesis::Threshold(5),
        ];
        let tr = trajectory_from_committee(&committee, &g, &dist, 5).unwrap();
        assert_eq!(tr.masses.len(), 4);
        assert_eq!(tr.plans.len(), 3);
        // First member errs on 0..4.
        assert_eq!(tr.masses[0], vec![0.0, 0.0, 0.5, 0.5, 0.0, 0.0]);
        // The raw plans need not be admissible, so apply them unchecked.
        let mut s = init_process(0.25, &tr.masses[0]).unwrap();
        for j in 1..4 {
            apply_plan(&mut s, &tr.plans[j - 1]);
            for (a, b) in s.masses().iter().zip(&tr.masses[j]) {
                assert!(close(*a, *b));
            }
        }
    }

    proptest! {
        #[test]
        fn clamped_plans_are_admissible(
            raw in prop::collection::vec(0.0f64..1.0, 14),
            shares in prop::collection::vec(-0.5f64..1.5, 14),
            negative_only in any::<bool>(),
        ) {
            let total: f64 = raw.iter().sum::<f64>() + 1e-9;
            let masses: Vec<f64> = raw.iter().map(|r| (r + 1e-9 / 14.0) / total).collect();
            let rule = if negative_only { UpRule::NegativeOnly } else { UpRule::AllSlots };
            let s = ProcessState::new(1.0 / 64.0, &masses, rule).unwrap();
            let mut down = shares.clone();
            clamp_plan(&s, &mut down);
            prop_assert_eq!(admissible_check(&s, &MovePlan { down: down.clone() }), Ok(()));
            // Projection leaves admissible plans alone.
            let mut again = down.clone();
            clamp_plan(&s, &mut again);
            prop_assert_eq!(again, down);
        }

        #[test]
        fn greedy_and_random_plans_are_admissible(
            raw in prop::collection::vec(0.0f64..1.0, 14),
            seed in any::<u64>(),
        ) {
            let total: f64 = raw.iter().sum::<f64>() + 1e-9;
            let masses: Vec<f64> = raw.iter().map(|r| (r + 1e-9 / 14.0) / total).collect();
            let s = init_process(1.0 / 64.0, &masses).unwrap();
            let mut down = vec![0.0; 14];
            GreedyUp.plan(&s, &mut down);
            prop_assert_eq!(admissible_check(&s, &MovePlan { down: down.clone() }), Ok(()));
            UniformRandom::new(RandomStream::new(seed)).plan(&s, &mut down);
            prop_assert_eq!(admissible_check(&s, &MovePlan { down }), Ok(()));
        }
    }
}
