use ethereal_core::booleanizer::{booleanize, fit_quantile_bins};
use ethereal_core::ethereal::{exclude_shared, shared_literals};
use ethereal_core::eval::{accuracy, include_heatmap};
use ethereal_core::feedback::{feedback_probability, train_datapoint};
use ethereal_core::rng::seeded;
use ethereal_core::sparse::{compress, deserialize, serialize};
use ethereal_core::{bits, ClauseBank, Encoding, Hyperparams, LiteralMatrix, RawDataset};
use proptest::prelude::*;

fn bank_strategy() -> impl Strategy<Value = ClauseBank> {
    (1usize..=3, 1usize..=5, 1usize..=20, prop_oneof![Just(1u32), Just(4), Just(128)]).prop_flat_map(
        |(extra_classes, half_m, features, n)| {
            let (classes, m, literals) = (extra_classes + 1, 2 * half_m, 2 * features);
            proptest::collection::vec(1..=2 * n, classes * m * literals).prop_map(move |states| {
                ClauseBank::from_states(classes, m, literals, n, &states).unwrap()
            })
        },
    )
}

fn input_for(bank: &ClauseBank, bits_seed: u64) -> Vec<u64> {
    let n = bank.n_literals() / 2;
    let features: Vec<bool> = (0..n).map(|k| (bits_seed.rotate_left(k as u32) & 1) == 1).collect();
    let literals: Vec<bool> = features.iter().copied().chain(features.iter().map(|b| !b)).collect();
    bits::pack(&literals)
}

proptest! {
    #[test]
    fn probability_is_monotone(t in 1u32..50, a in -200i32..200, b in -200i32..200) {
        let (lo, hi) = (a.min(b), a.max(b));
        for y in [false, true] {
            let (p_lo, p_hi) = (feedback_probability(lo, y, t), feedback_probability(hi, y, t));
            prop_assert!((0.0..=1.0).contains(&p_lo));
            if y { prop_assert!(p_hi <= p_lo) } else { prop_assert!(p_hi >= p_lo) }
        }
    }

    #[test]
    fn prediction_ignores_clause_order_within_polarity(bank in bank_strategy(), rot in 0usize..8, x in any::<u64>()) {
        let (c, m, l) = (bank.n_classes(), bank.clauses_per_class(), bank.n_literals());
        let states = bank.states();
        let half = m / 2;
        let mut permuted = Vec::with_capacity(states.len());
        for class in 0..c {
            for j in 0..m {
                let group = if j < half { 0 } else { half };
                let src = group + (j - group + rot) % half;
                let start = (class * m + src) * l;
                permuted.extend_from_slice(&states[start..start + l]);
            }
        }
        let other = ClauseBank::from_states(c, m, l, bank.half_states(), &permuted).unwrap();
        let input = input_for(&bank, x);
        prop_assert_eq!(bank.predict(&input), other.predict(&input));
    }

    #[test]
    fn serialization_round_trips(bank in bank_strategy()) {
        let model = compress(&bank);
        let bytes = serialize(&model);
        prop_assert_eq!(bytes.len(), model.metrics().size_bytes);
        prop_assert_eq!(deserialize(&bytes).unwrap(), model);
    }

    #[test]
    fn exclusion_clears_shared_literals(bank in bank_strategy()) {
        let mut after = bank.clone();
        exclude_shared(&mut after);
        for class in 0..after.n_classes() {
            prop_assert!(shared_literals(&after, class).is_empty());
        }
        let n = bank.half_states();
        prop_assert!(after.states().iter().all(|&s| (1..=2 * n).contains(&s)));
    }

    #[test]
    fn heatmap_counts_add_up(bank in bank_strategy()) {
        let half = (bank.clauses_per_class() / 2) as u32;
        for class in 0..bank.n_classes() {
            let map = include_heatmap(&bank, class);
            let (pos, neg): (u32, u32) = (map.positive.iter().sum(), map.negative.iter().sum());
            let total: usize = (0..bank.clauses_per_class()).map(|j| bank.clause_includes(class, j)).sum();
            prop_assert_eq!((pos + neg) as usize, total);
            prop_assert!(map.positive.iter().chain(&map.negative).all(|&v| v <= half));
        }
    }

    #[test]
    fn thermometer_bits_are_monotone(values in proptest::collection::vec(-50.0f64..50.0, 8..60), bins in 2usize..6) {
        let labels = vec![0; values.len()];
        let raw = RawDataset::new(1, 2, values, labels).unwrap();
        let spec = fit_quantile_bins(&raw, bins, Encoding::Thermometer).unwrap();
        let data = booleanize(&raw, &spec).unwrap();
        let width = spec.n_boolean_features();
        for i in 0..data.n_samples() {
            let row: Vec<bool> = (0..width).map(|k| data.literal(i, k)).collect();
            prop_assert!(row.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn one_hot_sets_one_bit_per_group(values in proptest::collection::vec(-50.0f64..50.0, 8..60), bins in 2usize..6) {
        let labels = vec![0; values.len()];
        let raw = RawDataset::new(1, 2, values, labels).unwrap();
        let spec = fit_quantile_bins(&raw, bins, Encoding::OneHot).unwrap();
        let data = booleanize(&raw, &spec).unwrap();
        let width = spec.n_boolean_features();
        for i in 0..data.n_samples() {
            let set = (0..width).filter(|&k| data.literal(i, k)).count();
            prop_assert_eq!(set, usize::from(width > 0));
        }
    }
}

fn small_dataset(seed: u64) -> LiteralMatrix {
    let mut rng = seeded(seed);
    let mut data = LiteralMatrix::new(6, 3).unwrap();
    for i in 0..90 {
        let label = (i % 3) as u32;
        let mut features: Vec<bool> = (0..6).map(|_| rand::Rng::random_bool(&mut rng, 0.5)).collect();
        features[label as usize] = true;
        data.push_features(&features, label).unwrap();
    }
    data
}

#[test]
fn states_stay_in_range_under_training_and_exclusion() {
    let data = small_dataset(3);
    for n in [1u32, 2, 5, 128] {
        let hyper = Hyperparams { half_states: n, seed: 11, ..Hyperparams::new(3, 6, 4, 2.5) };
        let mut rng = hyper.rng();
        let mut bank = ClauseBank::new(&hyper, data.n_literals(), &mut rng).unwrap();
        for round in 0..20 {
            for (x, y) in data.iter() {
                train_datapoint(&mut bank, x, y, &hyper, &mut rng).unwrap();
            }
            if round % 3 == 0 {
                exclude_shared(&mut bank);
            }
            assert!(bank.states().iter().all(|&s| (1..=2 * n).contains(&s)), "N={n}");
        }
    }
}

#[test]
fn accuracy_ignores_sample_order() {
    let data = small_dataset(5);
    let hyper = Hyperparams { seed: 2, ..Hyperparams::new(3, 6, 4, 3.0) };
    let mut rng = hyper.rng();
    let mut bank = ClauseBank::new(&hyper, data.n_literals(), &mut rng).unwrap();
    for (x, y) in data.iter() {
        train_datapoint(&mut bank, x, y, &hyper, &mut rng).unwrap();
    }
    let reversed: Vec<usize> = (0..data.n_samples()).rev().collect();
    let a = accuracy(&bank, &data).unwrap();
    assert_eq!(a, accuracy(&bank, &data.select(&reversed)).unwrap());
    assert_eq!(a, accuracy(&compress(&bank), &data).unwrap());
    assert!((0.0..=1.0).contains(&a));
}
