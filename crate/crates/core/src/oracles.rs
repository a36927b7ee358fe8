//! Example and equivalence query oracles.
//!
//! The equivalence oracle answers a query for `f` with points drawn from the
//! data distribution conditioned on the disagreement set `{f != g}`, or `Yes`
//! when that set has zero mass. Labels are binary, so a counterexample `x` to
//! `f` carries the inferred label `-f(x)`.

use crate::model::{DiscreteDistribution, Hypothesis, Label, LabeledExample, Region};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqResponse {
    Yes,
    Counterexample { point: usize, label: Label },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EqBatch {
    Yes,
    Examples(Vec<LabeledExample>),
}

impl EqBatch {
    pub fn is_yes(&self) -> bool {
        matches!(self, EqBatch::Yes)
    }
}

/// Anything that can answer equivalence queries: the exact oracle, or an
/// adversary standing in for it.
pub trait CounterexampleSource {
    /// `k` counterexamples to `f`, or `Yes`.
    fn counterexamples(&mut self, f: &Hypothesis, k: usize) -> EqBatch;
}

pub fn ex_query(
    dist: &DiscreteDistribution,
    g: &Hypothesis,
    rng: &mut RandomStream,
) -> LabeledExample {
    let point = dist.sample(rng);
    LabeledExample {
        point,
        label: g.eval(point),
    }
}

pub fn eq_query(
    f: &Hypothesis,
    g: &Hypothesis,
    dist: &DiscreteDistribution,
    rng: &mut RandomStream,
) -> EqResponse {
    match eq_batch(f, g, dist, 1, rng) {
        EqBatch::Yes => EqResponse::Yes,
        EqBatch::Examples(ex) => EqResponse::Counterexample {
            point: ex[0].point,
            label: ex[0].label,
        },
    }
}

/// `k` i.i.d. counterexamples to `f`. Consumes the stream exactly like `k`
/// successive calls to [`eq_query`].
pub fn eq_batch(
    f: &Hypothesis,
    g: &Hypothesis,
    dist: &DiscreteDistribution,
    k: usize,
    rng: &mut RandomStream,
) -> EqBatch {
    let n = dist.len();
    let f_tab = f.to_table(n);
    let g_tab = g.to_table(n);
    eq_batch_tables(&f_tab, &g_tab, dist, k, rng)
}

pub(crate) fn eq_batch_tables(
    f: &[Label],
    g: &[Label],
    dist: &DiscreteDistribution,
    k: usize,
    rng: &mut RandomStream,
) -> EqBatch {
    let Ok(conditional) = dist.restrict(&Region::disagreement(f, g)) else {
        return EqBatch::Yes;
    };
    EqBatch::Examples(
        (0..k)
            .map(|_| {
                let point = conditional.sample(rng);
                LabeledExample {
                    point,
                    label: -f[point],
                }
            })
            .collect(),
    )
}

/// The exact equivalence oracle for ground truth `g` under `dist`.
#[derive(Debug, Clone)]
pub struct ExactEqOracle<'a> {
    g: Vec<Label>,
    dist: &'a DiscreteDistribution,
    rng: RandomStream,
}

impl<'a> ExactEqOracle<'a> {
    pub fn new(g: &Hypothesis, dist: &'a DiscreteDistribution, rng: RandomStream) -> Self {
        Self {
            g: g.to_table(dist.len()),
            dist,
            rng,
        }
    }
}

impl CounterexampleSource for ExactEqOracle<'_> {
    fn counterexamples(&mut self, f: &Hypothesis, k: usize) -> EqBatch {
        let f_tab = f.to_table(self.dist.len());
        eq_batch_tables(&f_tab, &self.g, self.dist, k, &mut self.rng)
    }
}

/// Total variation distance `(1/2) * sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Normalized histogram of `points` over `0..n`.
pub fn empirical_distribution(points: impl IntoIterator<Item = usize>, n: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n];
    let mut total = 0usize;
    for p in points {
        counts[p] += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|c| {
            if total == 0 {
                0.0
            } else {
                c as f64 / total as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ex_point_mass() {
        let d = DiscreteDistribution::point_mass(4, 2).unwrap();
        let g = Hypothesis::Threshold(1);
        let mut rng = RandomStream::new(0);
        assert_eq!(
            ex_query(&d, &g, &mut rng),
            LabeledExample { point: 2, label: 1 }
        );
    }

    #[test]
    fn ex_labels_match_truth() {
        let d = DiscreteDistribution::uniform(10).unwrap();
        let g = Hypothesis::Threshold(5);
        let mut rng = RandomStream::new(1);
        for _ in 0..1000 {
            let e = ex_query(&d, &g, &mut rng);
            assert_eq!(e.label, g.eval(e.point));
        }
    }

    #[test]
    fn eq_yes_when_equal() {
        let d = DiscreteDistribution::uniform(10).unwrap();
        let g = Hypothesis::Threshold(5);
        let mut rng = RandomStream::new(2);
        assert_eq!(eq_query(&g, &g, &d, &mut rng), EqResponse::Yes);
        assert_eq!(eq_batch(&g, &g, &d, 7, &mut rng), EqBatch::Yes);
    }

    #[test]
    fn eq_yes_when_disagreement_has_zero_mass() {
        let d = DiscreteDistribution::new(&[1.0, 1.0, 0.0, 1.0]).unwrap();
        let g = Hypothesis::Table(vec![1, 1, 1, 1]);
        let f = Hypothesis::Table(vec![1, 1, -1, 1]);
        let mut rng = RandomStream::new(2);
        assert_eq!(eq_query(&f, &g, &d, &mut rng), EqResponse::Yes);
    }

    #[test]
    fn eq_threshold_instance() {
        let d = DiscreteDistribution::uniform(10).unwrap();
        let g = Hypothesis::Threshold(5);
        let f = Hypothesis::Threshold(7);
        let mut rng = RandomStream::new(3);
        let mut fives = 0;
        let n = 100_000;
        for _ in 0..n {
            match eq_query(&f, &g, &d, &mut rng) {
                EqResponse::Counterexample { point, label } => {
                    assert!(point == 5 || point == 6);
                    assert_eq!(label, 1);
                    fives += usize::from(point == 5);
                }
                EqResponse::Yes => panic!("unexpected YES"),
            }
        }
        assert!((fives as f64 / n as f64 - 0.5).abs() < 0.01);
        match eq_batch(&f, &g, &d, 3, &mut rng) {
            EqBatch::Examples(ex) => {
                assert_eq!(ex.len(), 3);
                assert!(ex
                    .iter()
                    .all(|e| (e.point == 5 || e.point == 6) && e.label == 1));
            }
            EqBatch::Yes => panic!("unexpected YES"),
        }
    }

    #[test]
    fn batch_equals_repeated_single_queries() {
        let d = DiscreteDistribution::new(&[0.1, 0.3, 0.2, 0.15, 0.25]).unwrap();
        let g = Hypothesis::Interval(1, 3);
        let f = Hypothesis::Threshold(2);
        let mut a = RandomStream::new(99);
        let mut b = RandomStream::new(99);
        let EqBatch::Examples(batch) = eq_batch(&f, &g, &d, 50, &mut a) else {
            panic!()
        };
        let singles: Vec<_> = (0..50)
            .map(|_| match eq_query(&f, &g, &d, &mut b) {
                EqResponse::Counterexample { point, label } => LabeledExample { point, label },
                EqResponse::Yes => panic!(),
            })
            .collect();
        assert_eq!(batch, singles);
    }

    #[test]
    fn tv_basics() {
        assert_eq!(total_variation(&[1.0, 0.0], &[0.5, 0.5]), 0.5);
        assert_eq!(total_variation(&[0.2, 0.8], &[0.2, 0.8]), 0.0);
        assert_eq!(
            empirical_distribution([0, 0, 1, 3], 4),
            vec![0.5, 0.25, 0.0, 0.25]
        );
    }
}
