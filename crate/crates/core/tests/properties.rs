//! Property tests across modules.

use eqboost::learners::{
    eq_learn, find_consistent, schedule_params, EqLearnOptions, ScheduleMode, ScheduleOverrides,
};
use eqboost::model::{
    risk, DiscreteDistribution, FeatureSpace, Hypothesis, HypothesisClass, LabeledExample, Region,
};
use eqboost::oracles::{CounterexampleSource, EqBatch, ExactEqOracle};
use eqboost::process::{
    admissible_check, clamp_plan, process_step, GreedyUp, MovePlan, ProcessState, Proportional,
    UniformRandom, UpRule,
};
use eqboost::rng::RandomStream;
use proptest::prelude::*;

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-3)
}

fn interval(n: usize) -> impl Strategy<Value = Hypothesis> {
    (0..n as i64, 0..n as i64).prop_map(|(a, b)| Hypothesis::Interval(a.min(b), a.max(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn consistent_intervals_fit_their_samples(
        g in interval(40),
        points in prop::collection::vec(0usize..40, 0..30),
    ) {
        let class = HypothesisClass::intervals(FeatureSpace::new(40).unwrap());
        let samples: Vec<LabeledExample> =
            points.iter().map(|&x| LabeledExample { point: x, label: g.eval(x) }).collect();
        let h = find_consistent(&class, &samples).unwrap();
        prop_assert!(class.contains(&h));
        for s in &samples {
            prop_assert_eq!(h.eval(s.point), s.label);
        }
    }

    #[test]
    fn consistent_unions_fit_their_samples(
        cuts in prop::collection::btree_set(0i64..60, 6),
        points in prop::collection::vec(0usize..60, 0..40),
    ) {
        let c: Vec<i64> = cuts.into_iter().collect();
        let g = Hypothesis::union(vec![(c[0], c[1]), (c[2] + 1, c[3]), (c[4] + 1, c[5])]);
        prop_assume!(g.is_ok());
        let g = g.unwrap();
        let class = HypothesisClass::union_of_intervals(FeatureSpace::new(60).unwrap(), 3).unwrap();
        let samples: Vec<LabeledExample> =
            points.iter().map(|&x| LabeledExample { point: x, label: g.eval(x) }).collect();
        let h = find_consistent(&class, &samples).unwrap();
        prop_assert!(class.contains(&h));
        for s in &samples {
            prop_assert_eq!(h.eval(s.point), s.label);
        }
    }

    #[test]
    fn restriction_is_conditioning(w in weights(12), mask in prop::collection::vec(any::<bool>(), 12)) {
        let dist = DiscreteDistribution::new(&w).unwrap();
        let region = Region::from_mask(mask.clone());
        let mass = dist.mass(&region);
        match dist.restrict(&region) {
            Ok(r) => {
                prop_assert!(mass > 0.0);
                prop_assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
                for (x, &inside) in mask.iter().enumerate() {
                    let expect = if inside { dist.weight(x) / mass } else { 0.0 };
                    prop_assert!((r.weight(x) - expect).abs() < 1e-12);
                }
            }
            Err(_) => prop_assert_eq!(mass, 0.0),
        }
    }

    #[test]
    fn counterexamples_are_errors(w in weights(16), f in interval(16), g in interval(16), seed in any::<u64>()) {
        let dist = DiscreteDistribution::new(&w).unwrap();
        let mut oracle = ExactEqOracle::new(&g, &dist, RandomStream::new(seed));
        match oracle.counterexamples(&f, 50) {
            EqBatch::Yes => prop_assert_eq!(risk(&f, &g, &dist), 0.0),
            EqBatch::Examples(s) => {
                prop_assert_eq!(s.len(), 50);
                for e in s {
                    prop_assert!(f.eval(e.point) != g.eval(e.point));
                    prop_assert!(dist.weight(e.point) > 0.0);
                    prop_assert_eq!(e.label, g.eval(e.point));
                }
            }
        }
    }

    #[test]
    fn clamped_plans_are_admissible(
        raw in prop::collection::vec(0.0f64..1.0, 10),
        plan in prop::collection::vec(-0.5f64..1.5, 10),
        negative_only in any::<bool>(),
    ) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-3);
        let total: f64 = raw.iter().sum();
        let masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
        let rule = if negative_only { UpRule::NegativeOnly } else { UpRule::AllSlots };
        let state = ProcessState::new(0.1, &masses, rule).unwrap();
        let mut down = plan;
        clamp_plan(&state, &mut down);
        let verdict = admissible_check(&state, &MovePlan { down });
        prop_assert!(verdict.is_ok(), "{:?}", verdict);
    }

    #[test]
    fn admissible_schedulers_conserve_mass(
        raw in prop::collection::vec(0.0f64..1.0, 10),
        seed in any::<u64>(),
        which in 0usize..3,
    ) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-3);
        let total: f64 = raw.iter().sum();
        let masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
        let mut state = ProcessState::new(0.1, &masses, UpRule::AllSlots).unwrap();
        let mut random = UniformRandom::new(RandomStream::new(seed));
        for _ in 0..200 {
            let violation = match which {
                0 => process_step(&mut state, &mut GreedyUp),
                1 => process_step(&mut state, &mut Proportional::default()),
                _ => process_step(&mut state, &mut random),
            };
            prop_assert!(violation.is_none());
            prop_assert!(state.masses().iter().all(|&p| p >= 0.0));
            prop_assert!((state.masses().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        prop_assert_eq!(state.clamped_steps(), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn booster_respects_its_query_bounds(g in interval(128), seed in any::<u64>()) {
        let class = HypothesisClass::intervals(FeatureSpace::new(128).unwrap());
        let dist = DiscreteDistribution::uniform(128).unwrap();
        let schedule = schedule_params(
            0.125,
            1.0 / 3.0,
            class.vc_dim(),
            ScheduleMode::Practical,
            ScheduleOverrides::default(),
        )
        .unwrap();
        let mut oracle = ExactEqOracle::new(&g, &dist, RandomStream::new(seed));
        let run = eq_learn(&class, &mut oracle, &schedule, EqLearnOptions::default()).unwrap();
        prop_assert!(u128::from(run.stats.eq_queries) <= schedule.query_bound());
        prop_assert!(u128::from(run.stats.distinct_functions) <= schedule.function_bound());
        prop_assert!(run.stats.rounds <= schedule.t);
        prop_assert!(run.committee.iter().all(|h| class.contains(h)));
        if run.stats.early_stop {
            prop_assert_eq!(risk(&run.hypothesis, &g, &dist), 0.0);
        }
    }
}
