use cgso::cooperative::{context_vector, make_partition, CooperativeParams, CooperativeState, Variant};
use cgso::gso::{seeded_rng, Bounds, GroupState, GsoParams};
use cgso::weight_decay::WdParams;
use proptest::prelude::*;

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn params(variant: Variant, k: usize, population: usize) -> CooperativeParams {
    CooperativeParams {
        variant,
        k,
        population,
        ..CooperativeParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn context_is_a_bijective_placement(n in 2usize..80, k_frac in 0.0..1.0f64, j_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let p = make_partition(n, k).unwrap();
        let mut rng = seeded_rng(seed);
        let full: Vec<f64> = (0..n).map(|_| rand::Rng::random(&mut rng)).collect();
        let parts = p.split(&full);
        prop_assert_eq!(p.assemble(&parts), full.clone());
        let j = ((k as f64 * j_frac) as usize).min(k - 1);
        // tag every component by source: the replaced span gets negatives
        let marker: Vec<f64> = (0..parts[j].len()).map(|i| -1.0 - i as f64).collect();
        let b = context_vector(&p, &parts, j, &marker).unwrap();
        let span = p.spans()[j];
        for i in 0..n {
            if span.range().contains(&i) {
                prop_assert_eq!(b[i], marker[i - span.offset]);
            } else {
                prop_assert_eq!(b[i], full[i]);
            }
        }
    }

    #[test]
    fn s_variant_cost_never_rises_and_members_stay_in_sub_bounds(
        seed in any::<u64>(),
        n in 4usize..12,
        k in 1usize..3,
    ) {
        let bounds = Bounds::uniform(n, -1.0, 1.0).unwrap();
        let cost = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (v - 0.1 * i as f64).powi(2)).sum::<f64>();
        let wd = WdParams::disabled();
        let mut rng = seeded_rng(seed);
        let mut s = CooperativeState::new(&bounds, params(Variant::S, k, 8), &wd, &cost, &mut rng).unwrap();
        let mut prev = s.best_cost();
        for _ in 0..6 {
            s.iterate(&cost, &wd, &mut rng).unwrap();
            prop_assert!(s.best_cost() <= prev);
            prev = s.best_cost();
            let (x, c) = s.report_best();
            prop_assert!((cost(&x) - c).abs() <= 1e-12);
            for (group, span) in s.subgroups.iter().zip(s.partition().spans()) {
                let sub = bounds.restrict(span.offset, span.len).unwrap();
                for m in &group.members {
                    prop_assert!(sub.contains(&m.position));
                }
            }
        }
    }

    #[test]
    fn h_exchanges_never_touch_producers(seed in any::<u64>()) {
        let bounds = Bounds::uniform(6, -1.0, 1.0).unwrap();
        let wd = WdParams::default();
        let mut rng = seeded_rng(seed);
        let mut s = CooperativeState::new(&bounds, params(Variant::H, 2, 6), &wd, &sphere, &mut rng).unwrap();
        for _ in 0..5 {
            s.iterate(&sphere, &wd, &mut rng).unwrap();
            for e in &s.last_exchanges {
                prop_assert_ne!(e.member, e.producer);
            }
        }
    }
}

#[test]
fn quadratic_n4_k2_converges() {
    let bounds = Bounds::uniform(4, -1.0, 1.0).unwrap();
    let wd = WdParams::disabled();
    let hits = (0..100)
        .filter(|&seed| {
            let mut rng = seeded_rng(seed);
            let mut s = CooperativeState::new(&bounds, params(Variant::S, 2, 20), &wd, &sphere, &mut rng).unwrap();
            for _ in 0..50 {
                s.iterate(&sphere, &wd, &mut rng).unwrap();
            }
            s.best_cost() < 1e-2
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn h_variant_beats_plain_median_at_matched_budget() {
    let bounds = Bounds::uniform(4, -1.0, 1.0).unwrap();
    let wd = WdParams::disabled();
    let mut h_costs = Vec::new();
    let mut plain_costs = Vec::new();
    for seed in 0..100 {
        let mut rng = seeded_rng(seed);
        let mut s = CooperativeState::new(&bounds, params(Variant::H, 2, 20), &wd, &sphere, &mut rng).unwrap();
        for _ in 0..50 {
            s.iterate(&sphere, &wd, &mut rng).unwrap();
        }
        h_costs.push(s.best_cost());

        // plain GSO gets the same number of evaluations
        let budget = s.evaluations();
        let gp = GsoParams::for_bounds(&bounds).with_population(20);
        let mut rng = seeded_rng(seed);
        let mut g = GroupState::new(&bounds, &gp, &wd, &sphere, &mut rng).unwrap();
        while g.evaluations < budget {
            g.iterate(&sphere, &gp, &wd, &mut rng).unwrap();
        }
        plain_costs.push(g.best_cost);
    }
    plain_costs.sort_by(f64::total_cmp);
    h_costs.sort_by(f64::total_cmp);
    let plain_median = plain_costs[50];
    assert!(h_costs[50] <= plain_median, "H median {} vs plain median {plain_median}", h_costs[50]);
}
