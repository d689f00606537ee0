use kfm::experiments::{ExperimentConfig, ExperimentKind, SigmaPolicy};
use kfm::metrics::{tv_1d, w1_1d, w1_assignment, Density1D};
use proptest::prelude::*;

const KINDS: [ExperimentKind; 6] = [
    ExperimentKind::Rate,
    ExperimentKind::RateManifold,
    ExperimentKind::FlowVsKde,
    ExperimentKind::TvExample,
    ExperimentKind::BoundsCheck,
    ExperimentKind::ManifoldRun,
];

fn cloud(m: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), m)
}

fn w1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    w1_assignment(a, b).unwrap().cost
}

type Cloud = Vec<Vec<f64>>;

fn three_clouds() -> impl Strategy<Value = (Cloud, Cloud, Cloud)> {
    (1usize..7, 1usize..4).prop_flat_map(|(m, d)| (cloud(m, d), cloud(m, d), cloud(m, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_round_trips(
        kind in 0usize..6,
        seed in 0u64..=i64::MAX as u64,
        n in prop::collection::vec(1usize..100_000, 1..6),
        sigmas in prop::collection::vec(1e-4f64..=1.0, 1..5),
        m in 1usize..5000,
        repeats in 1usize..50,
        use_rule in any::<bool>(),
        alpha in 0.05f64..=1.0,
    ) {
        let mut cfg = ExperimentConfig::preset(KINDS[kind]);
        cfg.seed = seed;
        cfg.n = n;
        cfg.m = m;
        cfg.repeats = repeats;
        cfg.sigma = if use_rule { SigmaPolicy::rule(alpha, 2) } else { SigmaPolicy::explicit(&sigmas) };
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text, None).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
    }

    #[test]
    fn w1_is_a_metric((a, b, c) in three_clouds()) {
        let (ab, ba, ac, cb) = (w1(&a, &b), w1(&b, &a), w1(&a, &c), w1(&c, &b));
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(ab <= ac + cb + 1e-9);
        prop_assert!(w1(&a, &a).abs() <= 1e-12);
    }

    #[test]
    fn w1_scales_with_the_data((a, b, _) in three_clouds(), c in -4.0f64..4.0) {
        let scale = |x: &[Vec<f64>]| -> Vec<Vec<f64>> { x.iter().map(|p| p.iter().map(|v| c * v).collect()).collect() };
        let lhs = w1(&scale(&a), &scale(&b));
        prop_assert!((lhs - c.abs() * w1(&a, &b)).abs() <= 1e-9 * (1.0 + lhs));
    }

    #[test]
    fn one_dimensional_assignment_matches_sorting(
        pair in (1usize..40).prop_flat_map(|m| (prop::collection::vec(-5.0f64..5.0, m), prop::collection::vec(-5.0f64..5.0, m)))
    ) {
        let (a, b) = pair;
        let lift = |x: &[f64]| -> Vec<Vec<f64>> { x.iter().map(|&v| vec![v]).collect() };
        let sorted = w1_1d(&a, &b).unwrap();
        prop_assert!((w1(&lift(&a), &lift(&b)) - sorted).abs() <= 1e-9);
    }

    #[test]
    fn tv_lies_in_the_unit_interval(
        mu in -3.0f64..3.0, s in 0.05f64..2.0, nu in -3.0f64..3.0, t in 0.05f64..2.0,
    ) {
        let normal = |m: f64, sd: f64| move |x: f64| (-(x - m).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        let p = Density1D::tabulate(normal(mu, s), -12.0, 12.0, 4001).unwrap();
        let q = Density1D::tabulate(normal(nu, t), -12.0, 12.0, 4001).unwrap();
        let tv = tv_1d(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&tv));
        prop_assert!((tv - tv_1d(&q, &p).unwrap()).abs() <= 1e-12);
    }
}
