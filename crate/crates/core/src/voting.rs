//! Clipped majority votes.
//!
//! A committee `h_1, ..., h_i` casts votes at every point. The tally starts at
//! `h_1(x)`, each further member adds `2 * h_j(x)`, and the running total is
//! clipped to `[-B, B]` after every addition. Because the tally starts odd and
//! moves in steps of two, it is always odd and never zero, so the majority
//! `sign(tally)` is well defined.
//!
//! The signed-correctness tally `Vote_g` runs the same recursion on the
//! increments `+2` (member wrong) and `-2` (member right). It is maintained
//! here with `Vote_g` itself as the inner term, which makes the pointwise
//! identity `Vote_g(x) = -g(x) * Vote(x)` hold exactly.

use crate::error::{check_open_unit, Error, Result};
use crate::model::{FeatureSpace, Hypothesis, Label, Region};

/// Vote bound `B = 2 * ceil(log2(1/epsilon)) + 1`.
pub fn vote_bound(epsilon: f64) -> Result<i32> {
    check_open_unit("epsilon", epsilon)?;
    Ok(2 * ceil_log2_inv(epsilon) + 1)
}

/// `ceil(log2(1/epsilon))` computed by exact comparison against powers of
/// two, so inputs like `1/32` land on the right integer.
pub(crate) fn ceil_log2_inv(epsilon: f64) -> i32 {
    let mut k = 0;
    let mut p = 1.0f64;
    while p > epsilon {
        p *= 0.5;
        k += 1;
    }
    k
}

pub fn clip(v: i32, bound: i32) -> i32 {
    v.clamp(-bound, bound)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteParams {
    epsilon: f64,
    bound: i32,
}

impl VoteParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(Self {
            epsilon,
            bound: vote_bound(epsilon)?,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn bound(&self) -> i32 {
        self.bound
    }

    /// Odd confidence levels `1, 3, ..., B`.
    pub fn levels(&self) -> impl Iterator<Item = i32> {
        (1..=self.bound).step_by(2)
    }
}

/// Per-point clipped tallies of a growing committee.
#[derive(Debug, Clone)]
pub struct VoteState {
    params: VoteParams,
    votes: Vec<i32>,
    committee: Vec<Hypothesis>,
}

impl VoteState {
    pub fn new(params: VoteParams, space: FeatureSpace) -> Self {
        Self {
            params,
            votes: vec![0; space.size()],
            committee: Vec::new(),
        }
    }

    pub fn params(&self) -> VoteParams {
        self.params
    }

    pub fn votes(&self) -> &[i32] {
        &self.votes
    }

    pub fn committee(&self) -> &[Hypothesis] {
        &self.committee
    }

    pub fn into_committee(self) -> Vec<Hypothesis> {
        self.committee
    }

    /// Appends `h` to the committee and updates every tally.
    pub fn extend(&mut self, h: Hypothesis) {
        let b = self.params.bound;
        let first = self.committee.is_empty();
        for (x, v) in self.votes.iter_mut().enumerate() {
            let hx = i32::from(h.eval(x));
            *v = if first { hx } else { clip(*v + 2 * hx, b) };
        }
        self.committee.push(h);
    }

    /// `Vote_g` recomputed from the committee.
    pub fn vote_g(&self, g: &Hypothesis) -> Vec<i32> {
        let n = self.votes.len();
        let g = g.to_table(n);
        vote_g_from_scratch(&self.committee, &g, self.params.bound)
    }

    pub fn majority(&self) -> Result<Hypothesis> {
        if self.committee.is_empty() {
            return Err(Error::EmptyCommittee);
        }
        Ok(Hypothesis::Table(self.majority_table()))
    }

    pub(crate) fn majority_table(&self) -> Vec<Label> {
        self.votes
            .iter()
            .map(|&v| if v >= 0 { 1 } else { -1 })
            .collect()
    }

    /// Points whose tally has absolute value `level`.
    pub fn confidence_level_set(&self, level: i32) -> Result<Region> {
        if level < 1 || level > self.params.bound || level % 2 == 0 {
            return Err(Error::OutOfRange {
                what: "confidence level",
                value: f64::from(level),
                expected: "must be odd and in [1, B]",
            });
        }
        Ok(Region::from_mask(
            self.votes.iter().map(|v| v.abs() == level).collect(),
        ))
    }
}

/// `Vote(h_1..h_i)` on `0..n` by direct recursion over the committee.
pub fn votes_from_scratch(committee: &[Hypothesis], n: usize, bound: i32) -> Vec<i32> {
    let mut votes = vec![0; n];
    for (j, h) in committee.iter().enumerate() {
        for (x, v) in votes.iter_mut().enumerate() {
            let hx = i32::from(h.eval(x));
            *v = if j == 0 { hx } else { clip(*v + 2 * hx, bound) };
        }
    }
    votes
}

/// `Vote_g(h_1..h_i)` on `0..n`: `+1` steps where a member errs, `-1` where
/// it agrees with `g`, scaled and clipped like `Vote`.
pub fn vote_g_from_scratch(committee: &[Hypothesis], g: &[Label], bound: i32) -> Vec<i32> {
    let mut votes = vec![0; g.len()];
    for (j, h) in committee.iter().enumerate() {
        for (x, v) in votes.iter_mut().enumerate() {
            let step = if h.eval(x) == g[x] { -1 } else { 1 };
            *v = if j == 0 {
                step
            } else {
                clip(*v + 2 * step, bound)
            };
        }
    }
    votes
}
