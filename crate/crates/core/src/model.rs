//! Finite feature spaces, exact distributions, hypotheses and risk.
//!
//! The feature space is the integer grid `0..n`. Because everything is finite,
//! risks and conditional distributions are computed exactly rather than
//! estimated, which is what lets the rest of the crate check probabilistic
//! claims against ground truth.

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// A binary label, always `-1` or `+1`.
pub type Label = i8;

/// Tolerance on the total mass of a distribution after normalization.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Largest grid on which the VC dimension of an explicit class is computed
/// by exhaustive shattering search.
pub const EXACT_VC_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureSpace {
    size: usize,
}

impl FeatureSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::OutOfRange {
                what: "feature space size",
                value: 0.0,
                expected: "must be at least 1",
            });
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn points(&self) -> std::ops::Range<usize> {
        0..self.size
    }
}

/// A subset of the feature space, stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    mask: Vec<bool>,
}

impl Region {
    pub fn empty(n: usize) -> Self {
        Self {
            mask: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            mask: vec![true; n],
        }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    pub fn from_points(n: usize, points: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; n];
        for x in points {
            if x >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: x + 1,
                });
            }
            mask[x] = true;
        }
        Ok(Self { mask })
    }

    /// Points where two label tables disagree.
    pub fn disagreement(f: &[Label], g: &[Label]) -> Self {
        debug_assert_eq!(f.len(), g.len());
        Self {
            mask: f.iter().zip(g).map(|(a, b)| a != b).collect(),
        }
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask[x]
    }

    /// Size of the ambient feature space.
    pub fn space_size(&self) -> usize {
        self.mask.len()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

/// An exact probability vector over `0..n`.
///
/// Sampling uses binary search over the cumulative sums, so a draw consumes
/// exactly one uniform variate from the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    normalizer: f64,
}

impl DiscreteDistribution {
    /// Normalizes non-negative raw weights into a distribution.
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::AllZero);
        }
        for (point, &weight) in raw.iter().enumerate() {
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::NegativeWeight { point, weight });
            }
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::AllZero);
        }
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        Ok(Self::from_normalized(weights, total))
    }

    fn from_normalized(weights: Vec<f64>, normalizer: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self {
            weights,
            cumulative,
            normalizer,
        }
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(&vec![1.0; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: at + 1,
            });
        }
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        Self::new(&w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    /// Sum of the raw weights this distribution was normalized by.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn mass(&self, region: &Region) -> f64 {
        self.mass_where(|x| region.contains(x))
    }

    pub fn mass_where(&self, mut pred: impl FnMut(usize) -> bool) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .filter(|&(x, _)| pred(x))
            .fold(0.0, |acc, (_, w)| acc + w)
    }

    /// Draws a point by inverting the cumulative distribution.
    pub fn sample(&self, rng: &mut RandomStream) -> usize {
        let total = *self.cumulative.last().expect("non-empty distribution");
        let u = rng.next_f64() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // Rounding can push `u` onto the last cumulative value.
        idx.min(self.last_supported())
    }

    fn last_supported(&self) -> usize {
        self.weights
            .iter()
            .rposition(|&w| w > 0.0)
            .unwrap_or(self.weights.len() - 1)
    }

    /// The conditional distribution on `region`.
    pub fn restrict(&self, region: &Region) -> Result<Self> {
        if region.space_size() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: region.space_size(),
            });
        }
        let raw: Vec<f64> = self
            .weights
            .iter()
            .zip(region.mask())
            .map(|(&w, &inside)| if inside { w } else { 0.0 })
            .collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMassRegion);
        }
        let weights = raw.into_iter().map(|w| w / total).collect();
        Ok(Self::from_normalized(weights, total))
    }

    pub fn support(&self) -> Region {
        Region::from_mask(self.weights.iter().map(|&w| w > 0.0).collect())
    }
}

/// A classifier `X -> {-1, +1}`.
///
/// Polarity conventions: a threshold labels `+1` iff `x >= theta`; intervals
/// and unions of intervals label `+1` inside. An interval with `lo > hi` is
/// empty and labels everything `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    Threshold(i64),
    Interval(i64, i64),
    /// Sorted, disjoint, non-empty closed intervals.
    Union(Vec<(i64, i64)>),
    Table(Vec<Label>),
}

impl Hypothesis {
    /// Builds a union of intervals, checking that they are sorted, disjoint
    /// and non-empty.
    pub fn union(intervals: Vec<(i64, i64)>) -> Result<Self> {
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if a > b {
                return Err(Error::InvalidHypothesis(format!(
                    "empty interval [{a}, {b}]"
                )));
            }
            if i > 0 && intervals[i - 1].1 >= a {
                return Err(Error::InvalidHypothesis(format!(
                    "intervals [{}, {}] and [{a}, {b}] overlap or are unsorted",
                    intervals[i - 1].0,
                    intervals[i - 1].1
                )));
            }
        }
        Ok(Self::Union(intervals))
    }

    pub fn table(labels: Vec<Label>) -> Result<Self> {
        if let Some(x) = labels.iter().position(|&l| l != 1 && l != -1) {
            return Err(Error::InvalidHypothesis(format!(
                "label {} at point {x} is not +-1",
                labels[x]
            )));
        }
        Ok(Self::Table(labels))
    }

    pub fn eval(&self, x: usize) -> Label {
        let xi = x as i64;
        let inside = match self {
            Hypothesis::Threshold(theta) => xi >= *theta,
            Hypothesis::Interval(a, b) => *a <= xi && xi <= *b,
            Hypothesis::Union(parts) => {
                let idx = parts.partition_point(|&(_, b)| b < xi);
                parts.get(idx).is_some_and(|&(a, _)| a <= xi)
            }
            Hypothesis::Table(t) => return t[x],
        };
        if inside {
            1
        } else {
            -1
        }
    }

    /// Evaluates on every point of `0..n`.
    pub fn to_table(&self, n: usize) -> Vec<Label> {
        match self {
            Hypothesis::Table(t) => {
                assert_eq!(t.len(), n, "table length does not match feature space");
                t.clone()
            }
            _ => (0..n).map(|x| self.eval(x)).collect(),
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Threshold(t) => write!(f, "threshold({t})"),
            Hypothesis::Interval(a, b) if a > b => write!(f, "interval(empty)"),
            Hypothesis::Interval(a, b) => write!(f, "interval({a}, {b})"),
            Hypothesis::Union(parts) => {
                write!(f, "union(")?;
                for (i, (a, b)) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "[{a}, {b}]")?;
                }
                write!(f, ")")
            }
            Hypothesis::Table(t) => write!(f, "table({} points)", t.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledExample {
    pub point: usize,
    pub label: Label,
}

/// Exact probability that `f` and `g` disagree under `dist`.
pub fn risk(f: &Hypothesis, g: &Hypothesis, dist: &DiscreteDistribution) -> f64 {
    dist.mass_where(|x| f.eval(x) != g.eval(x))
}

/// [`risk`] on precomputed label tables.
pub fn risk_tables(f: &[Label], g: &[Label], dist: &DiscreteDistribution) -> f64 {
    dist.weights()
        .iter()
        .zip(f.iter().zip(g))
        .filter(|(_, (a, b))| a != b)
        .fold(0.0, |acc, (w, _)| acc + w)
}

/// `f` with its predictions flipped on `region`.
pub fn xor_region(f: &Hypothesis, region: &Region) -> Hypothesis {
    let n = region.space_size();
    let mut t = f.to_table(n);
    xor_table_in_place(&mut t, region);
    Hypothesis::Table(t)
}

pub(crate) fn xor_table_in_place(t: &mut [Label], region: &Region) {
    for (l, &inside) in t.iter_mut().zip(region.mask()) {
        if inside {
            *l = -*l;
        }
    }
}

/// Number of maximal runs of `+1` in a label table.
pub(crate) fn positive_runs(t: &[Label]) -> usize {
    let mut runs = 0;
    let mut prev = -1;
    for &l in t {
        if l == 1 && prev != 1 {
            runs += 1;
        }
        prev = l;
    }
    runs
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassKind {
    Thresholds,
    Intervals,
    UnionOfIntervals(usize),
    Finite(Vec<Vec<Label>>),
}

/// A hypothesis class over a fixed feature space, with its VC dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisClass {
    kind: ClassKind,
    space: FeatureSpace,
    vc: usize,
}

impl HypothesisClass {
    pub fn thresholds(space: FeatureSpace) -> Self {
        Self {
            kind: ClassKind::Thresholds,
            space,
            vc: 1,
        }
    }

    pub fn intervals(space: FeatureSpace) -> Self {
        Self {
            kind: ClassKind::Intervals,
            space,
            vc: 2,
        }
    }

    pub fn union_of_intervals(space: FeatureSpace, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::OutOfRange {
                what: "number of intervals",
                value: 0.0,
                expected: "must be at least 1",
            });
        }
        Ok(Self {
            kind: ClassKind::UnionOfIntervals(k),
            space,
            vc: 2 * k,
        })
    }

    /// An explicit finite class. The VC dimension is found by exhaustive
    /// shattering search when the grid is small enough, otherwise
    /// `vc_override` must be given.
    pub fn finite(
        space: FeatureSpace,
        tables: Vec<Vec<Label>>,
        vc_override: Option<usize>,
    ) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::InvalidHypothesis(
                "finite class has no members".into(),
            ));
        }
        for t in &tables {
            if t.len() != space.size() {
                return Err(Error::DimensionMismatch {
                    expected: space.size(),
                    actual: t.len(),
                });
            }
            Hypothesis::table(t.clone())?;
        }
        let vc = match vc_override {
            Some(vc) => vc,
            None if space.size() <= EXACT_VC_LIMIT => shattering_dimension(&tables),
            None => {
                return Err(Error::TooLargeForExactVc {
                    n: space.size(),
                    limit: EXACT_VC_LIMIT,
                })
            }
        };
        Ok(Self {
            kind: ClassKind::Finite(tables),
            space,
            vc,
        })
    }

    pub fn kind(&self) -> &ClassKind {
        &self.kind
    }

    pub fn space(&self) -> FeatureSpace {
        self.space
    }

    pub fn vc_dim(&self) -> usize {
        self.vc
    }

    pub fn contains(&self, h: &Hypothesis) -> bool {
        match h {
            Hypothesis::Table(t) if t.len() != self.space.size() => false,
            _ => self.contains_table(&h.to_table(self.space.size())),
        }
    }

    /// Membership of the function given by its label table.
    pub fn contains_table(&self, t: &[Label]) -> bool {
        if t.len() != self.space.size() {
            return false;
        }
        match &self.kind {
            ClassKind::Thresholds => {
                // -1 ... -1 +1 ... +1
                t.windows(2).all(|w| w[0] <= w[1])
            }
            ClassKind::Intervals => positive_runs(t) <= 1,
            ClassKind::UnionOfIntervals(k) => positive_runs(t) <= *k,
            ClassKind::Finite(members) => members.iter().any(|m| m == t),
        }
    }

    pub fn short_name(&self) -> String {
        match &self.kind {
            ClassKind::Thresholds => "thresholds".into(),
            ClassKind::Intervals => "intervals".into(),
            ClassKind::UnionOfIntervals(k) => format!("union{k}"),
            ClassKind::Finite(m) => format!("finite{}", m.len()),
        }
    }
}

/// Size of the largest subset of points shattered by `tables`.
///
/// Exhaustive: tries every subset of each size, stopping at the first size
/// for which no subset is shattered (shattering is closed under subsets).
pub fn shattering_dimension(tables: &[Vec<Label>]) -> usize {
    let Some(n) = tables.first().map(Vec::len) else {
        return 0;
    };
    let mut best = 0;
    for k in 1..=n.min(63) {
        if (1u128 << k) > tables.len() as u128 {
            break;
        }
        let mut found = false;
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            if is_shattered(tables, &subset) {
                found = true;
                break;
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
        if !found {
            break;
        }
        best = k;
    }
    best
}

fn is_shattered(tables: &[Vec<Label>], subset: &[usize]) -> bool {
    let mut seen = std::collections::HashSet::new();
    for t in tables {
        let pattern = subset
            .iter()
            .enumerate()
            .fold(0u64, |acc, (bit, &x)| acc | (u64::from(t[x] == 1) << bit));
        seen.insert(pattern);
    }
    seen.len() == 1usize << subset.len()
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn make_distribution_normalizes() {
        let d = DiscreteDistribution::new(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(close(d.weights(), &[0.25; 4]));
        let d = DiscreteDistribution::new(&[0.0, 2.0, 0.0, 2.0]).unwrap();
        assert!(close(d.weights(), &[0.0, 0.5, 0.0, 0.5]));
        assert_eq!(d.normalizer(), 4.0);
    }

    #[test]
    fn make_distribution_errors() {
        assert!(matches!(
            DiscreteDistribution::new(&[1.0, -1.0]),
            Err(Error::NegativeWeight { point: 1, .. })
        ));
        assert_eq!(DiscreteDistribution::new(&[0.0, 0.0]), Err(Error::AllZero));
        assert_eq!(DiscreteDistribution::new(&[]), Err(Error::AllZero));
        assert!(DiscreteDistribution::new(&[f64::NAN]).is_err());
    }

    #[test]
    fn point_mass_sampling() {
        let d = DiscreteDistribution::new(&[0.0, 1.0, 0.0]).unwrap();
        let mut rng = RandomStream::new(3);
        for _ in 0..1000 {
            assert_eq!(d.sample(&mut rng), 1);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = DiscreteDistribution::new(&[0.25, 0.75]).unwrap();
        let draw = |seed| {
            let mut rng = RandomStream::new(seed);
            (0..200).map(|_| d.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn uniform_two_frequency() {
        let d = DiscreteDistribution::uniform(2).unwrap();
        let mut rng = RandomStream::new(5);
        let n = 100_000;
        let zeros = (0..n).filter(|_| d.sample(&mut rng) == 0).count();
        // 3 sigma of Binomial(1e5, 1/2) is ~0.0047; the stated band is 0.01.
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn restrict_examples() {
        let d = DiscreteDistribution::uniform(4).unwrap();
        let r = d
            .restrict(&Region::from_points(4, [1, 3]).unwrap())
            .unwrap();
        assert!(close(r.weights(), &[0.0, 0.5, 0.0, 0.5]));

        let d = DiscreteDistribution::new(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let r = d.restrict(&Region::from_points(4, [3]).unwrap()).unwrap();
        assert!(close(r.weights(), &[0.0, 0.0, 0.0, 1.0]));

        let d = DiscreteDistribution::new(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            d.restrict(&Region::from_points(3, [1]).unwrap()),
            Err(Error::ZeroMassRegion)
        );
        assert_eq!(d.restrict(&Region::empty(3)), Err(Error::ZeroMassRegion));
    }

    #[test]
    fn risk_examples() {
        let d = DiscreteDistribution::uniform(10).unwrap();
        let g = Hypothesis::Threshold(5);
        let f = Hypothesis::Threshold(7);
        assert_eq!(risk(&g, &g, &d), 0.0);
        assert!((risk(&f, &g, &d) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn xor_region_examples() {
        let f = Hypothesis::Threshold(5);
        assert_eq!(
            xor_region(&f, &Region::empty(10)).to_table(10),
            f.to_table(10)
        );
        let neg: Vec<Label> = f.to_table(10).iter().map(|l| -l).collect();
        assert_eq!(xor_region(&f, &Region::full(10)).to_table(10), neg);
        let flipped = xor_region(&f, &Region::from_points(10, [5, 6]).unwrap());
        assert_eq!(flipped.to_table(10), Hypothesis::Threshold(7).to_table(10));
    }

    #[test]
    fn hypothesis_polarity() {
        assert_eq!(Hypothesis::Threshold(3).to_table(5), vec![-1, -1, -1, 1, 1]);
        assert_eq!(Hypothesis::Interval(1, 2).to_table(4), vec![-1, 1, 1, -1]);
        assert_eq!(Hypothesis::Interval(2, 1).to_table(4), vec![-1; 4]);
        let u = Hypothesis::union(vec![(0, 0), (3, 4)]).unwrap();
        assert_eq!(u.to_table(6), vec![1, -1, -1, 1, 1, -1]);
    }

    #[test]
    fn union_validation() {
        assert!(Hypothesis::union(vec![(3, 2)]).is_err());
        assert!(Hypothesis::union(vec![(0, 3), (3, 5)]).is_err());
        assert!(Hypothesis::union(vec![(4, 5), (0, 1)]).is_err());
        assert!(Hypothesis::union(vec![]).is_ok());
        assert!(Hypothesis::table(vec![1, 0]).is_err());
    }

    #[test]
    fn membership() {
        let space = FeatureSpace::new(6).unwrap();
        let th = HypothesisClass::thresholds(space);
        assert!(th.contains(&Hypothesis::Threshold(2)));
        assert!(!th.contains(&Hypothesis::Interval(1, 2)));
        let iv = HypothesisClass::intervals(space);
        assert!(iv.contains(&Hypothesis::Interval(1, 2)));
        assert!(iv.contains(&Hypothesis::Interval(3, 2)));
        assert!(!iv.contains(&Hypothesis::union(vec![(0, 0), (2, 2)]).unwrap()));
        let u2 = HypothesisClass::union_of_intervals(space, 2).unwrap();
        assert!(u2.contains(&Hypothesis::union(vec![(0, 0), (2, 2)]).unwrap()));
        assert!(!u2.contains(&Hypothesis::union(vec![(0, 0), (2, 2), (4, 4)]).unwrap()));
    }

    #[test]
    fn vc_of_builtin_classes() {
        let space = FeatureSpace::new(30).unwrap();
        assert_eq!(HypothesisClass::thresholds(space).vc_dim(), 1);
        assert_eq!(HypothesisClass::intervals(space).vc_dim(), 2);
        assert_eq!(
            HypothesisClass::union_of_intervals(space, 3)
                .unwrap()
                .vc_dim(),
            6
        );
    }

    #[test]
    fn vc_of_finite_classes() {
        let space = FeatureSpace::new(4).unwrap();
        let single = HypothesisClass::finite(space, vec![vec![1, -1, 1, -1]], None).unwrap();
        assert_eq!(single.vc_dim(), 0);
        let pair = HypothesisClass::finite(space, vec![vec![1, 1, 1, 1], vec![-1, 1, 1, 1]], None)
            .unwrap();
        assert_eq!(pair.vc_dim(), 1);

        let big = FeatureSpace::new(21).unwrap();
        assert_eq!(
            HypothesisClass::finite(big, vec![vec![1; 21]], None),
            Err(Error::TooLargeForExactVc { n: 21, limit: 20 })
        );
        assert_eq!(
            HypothesisClass::finite(big, vec![vec![1; 21]], Some(0))
                .unwrap()
                .vc_dim(),
            0
        );
    }
}
