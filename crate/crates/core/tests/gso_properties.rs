use cgso::gso::{
    argmin_cost, direction, direction_from_angles, seeded_rng, BoundaryPolicy, Bounds, GroupState, GsoParams,
};
use cgso::weight_decay::{self, WdParams};
use proptest::prelude::*;

fn shifted_abs(shift: Vec<f64>) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| x.iter().zip(&shift).map(|(a, s)| (a - s).abs() + (3.0 * a).sin()).sum()
}

fn bounds_strategy() -> impl Strategy<Value = Bounds> {
    (2usize..6)
        .prop_flat_map(|n| (prop::collection::vec(-4.0..0.0f64, n), prop::collection::vec(0.1..4.0f64, n)))
        .prop_map(|(lo, w)| {
            let hi = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
            Bounds::new(lo, hi).unwrap()
        })
}

#[test]
fn unit_norm_for_dataset_dimensions() {
    let mut rng = seeded_rng(3);
    for n in [2, 3, 10, 74] {
        for _ in 0..250 {
            let angles: Vec<f64> = (0..n - 1).map(|_| rand::Rng::random_range(&mut rng, -4.0..4.0)).collect();
            let d = direction_from_angles(&angles, n).unwrap();
            let norm: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9, "n={n} norm={norm}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn direction_is_unit(angles in prop::collection::vec(-10.0..10.0f64, 1..120)) {
        let norm: f64 = direction(&angles).iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn members_stay_in_bounds_and_best_never_rises(
        bounds in bounds_strategy(),
        seed in any::<u64>(),
        pop in 1usize..12,
        absorb in any::<bool>(),
    ) {
        let n = bounds.dim();
        let cost = shifted_abs(vec![5.0; n]);
        let policy = if absorb { BoundaryPolicy::Absorb } else { BoundaryPolicy::Revert };
        let params = GsoParams::for_bounds(&bounds).with_population(pop).with_policy(policy);
        let wd = WdParams::disabled();
        let mut rng = seeded_rng(seed);
        let mut g = GroupState::new(&bounds, &params, &wd, &cost, &mut rng).unwrap();
        let mut prev = g.best_cost;
        for _ in 0..8 {
            g.iterate(&cost, &params, &wd, &mut rng).unwrap();
            for m in &g.members {
                prop_assert!(bounds.contains(&m.position));
            }
            prop_assert!(g.best_cost <= prev);
            prev = g.best_cost;
            let min = g.members.iter().map(|m| m.cost).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(g.producer().cost, min);
            prop_assert_eq!(g.producer_index, argmin_cost(&g.members));
        }
    }

    #[test]
    fn same_seed_same_trajectory(seed in any::<u64>(), wd_on in any::<bool>()) {
        let bounds = Bounds::uniform(4, -1.0, 1.0).unwrap();
        let cost = shifted_abs(vec![0.3, -0.2, 0.1, 0.0]);
        let params = GsoParams::for_bounds(&bounds).with_population(10);
        let wd = if wd_on { WdParams::default() } else { WdParams::disabled() };
        let run = || {
            let mut rng = seeded_rng(seed);
            let mut g = GroupState::new(&bounds, &params, &wd, &cost, &mut rng).unwrap();
            let mut trace = Vec::new();
            for _ in 0..6 {
                g.iterate(&cost, &params, &wd, &mut rng).unwrap();
                trace.extend(g.members.iter().flat_map(|m| m.position.clone()));
            }
            trace
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn disabled_decay_ignores_its_parameters(seed in any::<u64>(), lambda0 in 0.0..1.0f64, inc in 1e-6..1.0f64) {
        let bounds = Bounds::uniform(5, -1.0, 1.0).unwrap();
        let cost = shifted_abs(vec![0.5; 5]);
        let params = GsoParams::for_bounds(&bounds).with_population(8);
        let odd = WdParams { lambda0, inc, enabled: false };
        let mut r1 = seeded_rng(seed);
        let mut r2 = seeded_rng(seed);
        let mut a = GroupState::new(&bounds, &params, &WdParams::disabled(), &cost, &mut r1).unwrap();
        let mut b = GroupState::new(&bounds, &params, &odd, &cost, &mut r2).unwrap();
        for _ in 0..6 {
            a.iterate(&cost, &params, &WdParams::disabled(), &mut r1).unwrap();
            b.iterate(&cost, &params, &odd, &mut r2).unwrap();
        }
        for (x, y) in a.members.iter().zip(&b.members) {
            prop_assert_eq!(&x.position, &y.position);
            prop_assert_eq!(x.cost.to_bits(), y.cost.to_bits());
        }
        prop_assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn lambda_stays_nonnegative_and_drifts_at_most_inc(
        lambda0 in 0.0..0.01f64,
        inc in 1e-5..1e-2f64,
        errors in prop::collection::vec(0.0..2.0f64, 1..200),
    ) {
        let mut lambda = lambda0;
        let (mut sum, mut count) = (0.0, 0.0);
        for (t, &e) in errors.iter().enumerate() {
            sum += e;
            count += 1.0;
            lambda = weight_decay::update_lambda(lambda, e, sum / count, inc);
            prop_assert!(lambda >= 0.0);
            prop_assert!((lambda - lambda0).abs() <= (t + 1) as f64 * inc + 1e-15);
        }
    }

    #[test]
    fn wd_members_keep_valid_lambda(seed in any::<u64>()) {
        let bounds = Bounds::uniform(3, -1.0, 1.0).unwrap();
        let cost = shifted_abs(vec![0.1, 0.2, 0.3]);
        let params = GsoParams::for_bounds(&bounds).with_population(6);
        let wd = WdParams::default();
        let mut rng = seeded_rng(seed);
        let mut g = GroupState::new(&bounds, &params, &wd, &cost, &mut rng).unwrap();
        for t in 1..=20 {
            g.iterate(&cost, &params, &wd, &mut rng).unwrap();
            for m in &g.members {
                prop_assert!(m.lambda >= 0.0);
                prop_assert!((m.lambda - wd.lambda0).abs() <= t as f64 * wd.inc + 1e-15);
                prop_assert!(bounds.contains(&m.position));
            }
        }
    }
}

#[test]
fn sphere_in_two_dimensions_converges() {
    let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let bounds = Bounds::uniform(2, -1.0, 1.0).unwrap();
    let params = GsoParams::for_bounds(&bounds).with_population(20);
    let wd = WdParams::disabled();
    let hits = (0..100)
        .filter(|&seed| {
            let mut rng = seeded_rng(seed);
            let mut g = GroupState::new(&bounds, &params, &wd, &sphere, &mut rng).unwrap();
            for _ in 0..100 {
                g.iterate(&sphere, &params, &wd, &mut rng).unwrap();
            }
            g.best_cost < 1e-2
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}
