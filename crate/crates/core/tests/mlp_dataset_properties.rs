use std::collections::HashSet;

use cgso::dataset::{self, ColumnRef, CsvSchema, MinMaxTransform, SplitSizes};
use cgso::gso::seeded_rng;
use cgso::mlp::{self, MlpTopology, Network, Pattern};
use proptest::prelude::*;

const TOPOLOGIES: [(usize, usize); 4] = [(9, 2), (8, 2), (9, 6), (7, 8)];

const TABLE_SIZES: [SplitSizes; 4] = [
    SplitSizes { train: 350, validation: 175, test: 174 },
    SplitSizes { train: 384, validation: 192, test: 192 },
    SplitSizes { train: 114, validation: 50, test: 50 },
    SplitSizes { train: 180, validation: 78, test: 78 },
];

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

// independent forward pass over the documented layout
fn oracle_outputs(t: &MlpTopology, flat: &[f64], x: &[f64]) -> Vec<f64> {
    let (i_n, h_n, c_n) = (t.inputs, t.hidden, t.outputs);
    let b1 = i_n * h_n;
    let w2 = b1 + h_n;
    let b2 = w2 + h_n * c_n;
    let hidden: Vec<f64> = (0..h_n)
        .map(|h| sigmoid((0..i_n).map(|i| x[i] * flat[i * h_n + h]).sum::<f64>() + flat[b1 + h]))
        .collect();
    (0..c_n)
        .map(|c| sigmoid((0..h_n).map(|h| hidden[h] * flat[w2 + h * c_n + c]).sum::<f64>() + flat[b2 + c]))
        .collect()
}

fn instance() -> impl Strategy<Value = (MlpTopology, Vec<f64>, Vec<Pattern>)> {
    (1usize..5, 1usize..5, 1usize..4, 1usize..=10).prop_flat_map(|(i, h, c, n)| {
        let t = MlpTopology::new(i, h, c).unwrap();
        let flat = prop::collection::vec(-3.0..3.0f64, t.dimension());
        let pats = prop::collection::vec((prop::collection::vec(-1.0..1.0f64, i), 0..c), n).prop_map(move |v| {
            v.into_iter()
                .map(|(input, class)| Pattern {
                    input,
                    target: dataset::one_hot(class, c).unwrap(),
                    class,
                })
                .collect::<Vec<_>>()
        });
        (Just(t), flat, pats)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn encode_decode_round_trip(which in 0usize..4, seed in any::<u64>()) {
        let (inputs, classes) = TOPOLOGIES[which];
        let t = MlpTopology::new(inputs, MlpTopology::DEFAULT_HIDDEN, classes).unwrap();
        let mut rng = seeded_rng(seed);
        let flat: Vec<f64> = (0..t.dimension()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let net = Network::decode(t, &flat).unwrap();
        prop_assert_eq!(net.encode(), flat.clone());
        prop_assert_eq!(Network::decode(t, &net.encode()).unwrap(), net);
    }

    #[test]
    fn mse_matches_brute_force((t, flat, pats) in instance()) {
        let mut total = 0.0;
        for p in &pats {
            let o = oracle_outputs(&t, &flat, &p.input);
            let got = mlp::forward(&t, &flat, &p.input).unwrap();
            prop_assert!(got.iter().zip(&o).all(|(a, b)| (a - b).abs() <= 1e-12));
            total += o.iter().zip(&p.target).map(|(o, t)| (t - o).powi(2)).sum::<f64>();
        }
        let expected = total / pats.len() as f64;
        let e = mlp::mse_cost(&t, &flat, &pats).unwrap();
        prop_assert!((e - expected).abs() <= 1e-12);
        prop_assert!(e >= 0.0 && e <= t.outputs as f64);
        // purity
        prop_assert_eq!(mlp::mse_cost(&t, &flat, &pats).unwrap().to_bits(), e.to_bits());
    }

    #[test]
    fn output_increases_with_its_bias((t, flat, pats) in instance(), k_frac in 0.0..1.0f64, delta in 0.01..2.0f64) {
        let k = ((t.outputs as f64 * k_frac) as usize).min(t.outputs - 1);
        let mut bumped = flat.clone();
        let idx = t.dimension() - t.outputs + k;
        bumped[idx] += delta;
        let x = &pats[0].input;
        let before = mlp::forward(&t, &flat, x).unwrap();
        let after = mlp::forward(&t, &bumped, x).unwrap();
        prop_assert!(after[k] > before[k]);
        for c in (0..t.outputs).filter(|&c| c != k) {
            prop_assert_eq!(after[c], before[c]);
        }
    }

    #[test]
    fn splits_are_disjoint_and_exact(which in 0usize..4, seed in any::<u64>()) {
        let sizes = TABLE_SIZES[which];
        let mut rng = seeded_rng(seed);
        let s = dataset::split(sizes.total(), sizes, &mut rng).unwrap();
        prop_assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (sizes.train, sizes.validation, sizes.test));
        let all: HashSet<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        prop_assert_eq!(all.len(), sizes.total());
        prop_assert!(all.iter().all(|&i| i < sizes.total()));
    }

    #[test]
    fn normalisation_uses_train_rows_only(seed in any::<u64>(), poison in 1e3..1e6f64) {
        let mut rng = seeded_rng(seed);
        let rows = 40;
        let sizes = SplitSizes { train: 20, validation: 10, test: 10 };
        let s = dataset::split(rows, sizes, &mut rng).unwrap();
        let mut features: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..3).map(|_| rand::Rng::random_range(&mut rng, -5.0..5.0)).collect())
            .collect();
        let ds = |features: Vec<Vec<f64>>| dataset::Dataset {
            name: "t".into(),
            features,
            labels: vec![0; rows],
            class_names: vec!["a".into()],
            feature_names: vec!["x".into(), "y".into(), "z".into()],
            dropped_rows: 0,
        };
        let (_, clean) = dataset::normalize(&ds(features.clone()), &s).unwrap();
        let train_rows: Vec<&[f64]> = s.train.iter().map(|&i| features[i].as_slice()).collect();
        prop_assert_eq!(&clean, &MinMaxTransform::fit(&train_rows).unwrap());
        // changing held-out rows must not move the fitted ranges
        for &i in s.validation.iter().chain(&s.test) {
            features[i] = vec![poison; 3];
        }
        let (normed, poisoned) = dataset::normalize(&ds(features), &s).unwrap();
        prop_assert_eq!(&clean, &poisoned);
        for &i in &s.train {
            prop_assert!(normed[i].iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn resplitting_changes_membership_not_sizes() {
    let sizes = TABLE_SIZES[0];
    let a = dataset::split(sizes.total(), sizes, &mut seeded_rng(1)).unwrap();
    let b = dataset::split(sizes.total(), sizes, &mut seeded_rng(2)).unwrap();
    assert_ne!(a.train, b.train);
    assert_eq!(a.train.len(), b.train.len());
    assert_eq!(a.test.len(), b.test.len());
}

#[test]
fn bundled_files_load_with_stable_labels() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let schema = CsvSchema {
        label_column: ColumnRef::Name("class".into()),
        ignored_columns: vec![],
        header: Some(true),
    };
    let a = dataset::load_csv(dir.join("cancer.csv"), &schema).unwrap();
    let b = dataset::load_csv(dir.join("cancer.csv"), &schema).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.class_names, b.class_names);
    assert_eq!((a.rows(), a.num_features(), a.num_classes()), (683, 9, 2));
    let d = dataset::load_csv(dir.join("diabetes.csv"), &schema).unwrap();
    assert_eq!((d.rows(), d.num_features(), d.num_classes()), (768, 8, 2));
}
