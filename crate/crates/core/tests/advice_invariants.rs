mod common;

use common::{dense_instance, DenseBridge};
use limeade_core::{
    limeade_update, AdviceAction, Dataset, GetInstanceStrategy, Instance, Label, LimeadeError,
    Logistic, OpaqueModel, ProximityKernel, Provenance, Similarity, TrainConfig, UpdateContext,
    WeightedExample,
};
use proptest::prelude::*;

const DIM: usize = 6;

fn fixture(pool_rows: &[Vec<f64>]) -> (Vec<WeightedExample>, Vec<Instance>) {
    let labeled = vec![
        WeightedExample::unit(dense_instance("l0", &[1.0, 0.0, 0.5, 0.0, 0.0, 0.2]).x().clone(), Label::Positive),
        WeightedExample::unit(dense_instance("l1", &[0.0, 1.0, 0.0, 0.4, 0.3, 0.0]).x().clone(), Label::Negative),
    ];
    let pool = pool_rows
        .iter()
        .enumerate()
        .map(|(i, r)| dense_instance(&format!("p{i:03}"), r))
        .collect();
    (labeled, pool)
}

fn train() -> TrainConfig {
    TrainConfig {
        epochs: 60,
        ..TrainConfig::default()
    }
}

fn strategy_from(kind: u8, k: usize) -> GetInstanceStrategy {
    match kind % 4 {
        0 => GetInstanceStrategy::PoolNearest { k, similarity: Similarity::Opaque },
        1 => GetInstanceStrategy::PoolNearest { k, similarity: Similarity::Interp },
        2 => GetInstanceStrategy::GenerativeMask { n: k, keep_prob: 0.5 },
        _ => GetInstanceStrategy::CentroidTopActivation { pool_top: k, k: 1 },
    }
}

fn row_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.05f64..1.0], DIM)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every added pseudo-example carries the feature, has the advised label
    /// and a weight in (0, advice_weight]; the labeled set grows by exactly
    /// the retained count; a no-op leaves everything untouched.
    #[test]
    fn update_soundness(
        pool_rows in prop::collection::vec(row_strategy(), 3..20),
        anchor in row_strategy(),
        actions in prop::collection::vec((0usize..DIM, any::<bool>(), any::<u8>(), 1usize..8), 1..4),
        advice_weight in 0.05f64..2.0,
    ) {
        let (labeled, pool) = fixture(&pool_rows);
        let bridge = DenseBridge { dim: DIM };
        let model = Logistic;
        let ctx = UpdateContext {
            model: &model,
            bridge: &bridge,
            kernel: ProximityKernel::default(),
            advice_weight,
            train: train(),
        };
        let mut data = Dataset::new(labeled.clone(), pool).unwrap();
        let mut params = model.fit(&labeled, &ctx.train).unwrap();
        let x = dense_instance("anchor", &anchor);
        for (step, (feature, up, kind, k)) in actions.into_iter().enumerate() {
            let polarity = if up { Label::Positive } else { Label::Negative };
            let strategy = strategy_from(kind, k);
            let before = data.clone();
            let action = AdviceAction { feature, polarity };
            match limeade_update(&ctx, &params, &mut data, &x, action, &strategy, step as u64) {
                Ok(r) => {
                    prop_assert_eq!(data.labeled().len(), before.labeled().len() + r.retained_count);
                    prop_assert_eq!(r.added_examples.len(), r.retained_count);
                    for (p, w) in r.added_examples.iter().zip(&data.labeled()[before.labeled().len()..]) {
                        prop_assert!(p.x_interp.get(feature) > 0.0);
                        prop_assert_eq!(p.label, polarity);
                        prop_assert!(p.weight > 0.0 && p.weight <= advice_weight);
                        prop_assert_eq!(p.source_feature, feature);
                        prop_assert_eq!(&p.x, &w.x);
                        prop_assert_eq!(w.y, polarity);
                        if p.provenance == Provenance::Centroid {
                            prop_assert_eq!(p.weight, advice_weight);
                        }
                    }
                    if r.retained_count == 0 {
                        prop_assert_eq!(&data, &before);
                        prop_assert_eq!(&r.new_params, &params);
                    }
                    params = r.new_params;
                }
                Err(LimeadeError::FeatureUnsupported { .. }) | Err(LimeadeError::EmptyPool) => {
                    prop_assert_eq!(&data, &before);
                }
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}

#[test]
fn replay_is_bit_identical() {
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|i| (0..DIM).map(|j| if (i + j) % 3 == 0 { 0.1 + 0.03 * ((i * j) % 7) as f64 } else { 0.0 }).collect())
        .collect();
    let run = || {
        let (labeled, pool) = fixture(&rows);
        let bridge = DenseBridge { dim: DIM };
        let model = Logistic;
        let ctx = UpdateContext {
            model: &model,
            bridge: &bridge,
            kernel: ProximityKernel::default(),
            advice_weight: 0.5,
            train: train(),
        };
        let mut data = Dataset::new(labeled.clone(), pool).unwrap();
        let mut params = model.fit(&labeled, &ctx.train).unwrap();
        let x = dense_instance("anchor", &rows[3]);
        for (i, feature) in [0usize, 2, 3, 0].into_iter().enumerate() {
            let strategy = strategy_from(i as u8, 5);
            let action = AdviceAction { feature, polarity: if i % 2 == 0 { Label::Positive } else { Label::Negative } };
            if let Ok(r) = limeade_update(&ctx, &params, &mut data, &x, action, &strategy, 17 + i as u64) {
                params = r.new_params;
            }
        }
        (params, data)
    };
    let (p1, d1) = run();
    let (p2, d2) = run();
    assert_eq!(p1, p2);
    assert_eq!(d1, d2);
    for (a, b) in p1.weights.iter().zip(&p2.weights) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn failed_retrain_leaves_dataset_untouched() {
    // Only positives after advice: the trainer rejects single-class data.
    let labeled = vec![WeightedExample::unit(dense_instance("l", &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).x().clone(), Label::Positive)];
    let pool = vec![dense_instance("p", &[1.0, 0.5, 0.0, 0.0, 0.0, 0.0])];
    let mut data = Dataset::new(labeled, pool).unwrap();
    let before = data.clone();
    let bridge = DenseBridge { dim: DIM };
    let ctx = UpdateContext {
        model: &Logistic,
        bridge: &bridge,
        kernel: ProximityKernel::default(),
        advice_weight: 1.0,
        train: train(),
    };
    let params = limeade_core::ModelParams::zeros(DIM);
    let x = dense_instance("x", &[1.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
    let r = limeade_update(
        &ctx,
        &params,
        &mut data,
        &x,
        AdviceAction { feature: 0, polarity: Label::Positive },
        &GetInstanceStrategy::PoolNearest { k: 1, similarity: Similarity::Opaque },
        0,
    );
    assert!(matches!(r, Err(LimeadeError::SingleClass)));
    assert_eq!(data, before);
}
