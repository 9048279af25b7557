use std::collections::BTreeMap;

use limeade_core::harness::feed::{run_feed_simulation, FeedSimConfig};
use limeade_core::harness::image::{run_image_study, ImageStudyConfig};
use limeade_core::harness::report::{read_csv, to_csv_string, write_csv};
use limeade_core::harness::synthetic::{confound_weight_share, gen_synthetic_domain, SyntheticDomainSpec};
use limeade_core::harness::tradeoff::{run_tradeoff_study, TradeoffConfig};
use limeade_core::harness::corpus::CorpusSpec;
use limeade_core::metrics::paired_t_test;
use limeade_core::{
    limeade_update, seed, stem, AdviceAction, Dataset, GetInstanceStrategy, Label, Logistic, OpaqueModel,
    ProximityKernel, Similarity, TrainConfig, UpdateContext, WeightedExample,
};

fn small_image() -> ImageStudyConfig {
    ImageStudyConfig {
        n_classes: 3,
        n_seeds: 6,
        pool_size: 400,
        test_per_class: 60,
        ..ImageStudyConfig::default()
    }
}

fn small_feed() -> FeedSimConfig {
    FeedSimConfig {
        n_feeds: 4,
        draws: 2,
        corpus: CorpusSpec { n_docs: 200, ..CorpusSpec::default() },
        vocab_size: 250,
        ..FeedSimConfig::default()
    }
}

fn small_tradeoff() -> TradeoffConfig {
    TradeoffConfig {
        n_sessions: 3,
        actions: 4,
        corpus: CorpusSpec { n_docs: 150, n_topics: 6, words_per_topic: 30, ..CorpusSpec::default() },
        vocab_size: 250,
        ..TradeoffConfig::default()
    }
}

#[test]
fn image_study_is_byte_deterministic_and_complete() {
    let cfg = small_image();
    let a = run_image_study(&cfg).unwrap();
    let b = run_image_study(&cfg).unwrap();
    assert_eq!(to_csv_string(&a.rows).unwrap(), to_csv_string(&b.rows).unwrap());

    let mut seen: BTreeMap<(String, u64, String, String), usize> = BTreeMap::new();
    for r in &a.rows {
        assert!(r.value.is_finite());
        *seen.entry((r.group.clone(), r.seed, r.arm.clone(), r.metric.clone())).or_default() += 1;
    }
    assert!(seen.values().all(|&n| n == 1));
    let runs = cfg.n_classes * cfg.n_seeds - a.summary.skipped;
    assert_eq!(seen.len(), runs * 2 * 2);

    // Both arms start from the same initial model.
    let initial: BTreeMap<(String, u64, String), f64> = a
        .rows
        .iter()
        .filter(|r| r.metric == "initial_accuracy")
        .map(|r| ((r.group.clone(), r.seed, r.arm.clone()), r.value))
        .collect();
    for ((g, s, arm), v) in &initial {
        if arm == "baseline" {
            assert_eq!(initial[&(g.clone(), *s, "limeade".to_string())], *v);
        }
    }
}

#[test]
fn image_aggregate_test_recomputes_from_csv() {
    let r = run_image_study(&small_image()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("image.csv");
    write_csv(&r.rows, &path).unwrap();
    let rows = read_csv(&path).unwrap();
    let deltas = |arm: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.metric == "delta_accuracy" && r.arm == arm)
            .map(|r| r.value)
            .collect()
    };
    let t = paired_t_test(&deltas("limeade"), &deltas("baseline")).unwrap();
    assert_eq!(Some(t.t), r.summary.aggregate.t);
    assert_eq!(Some(t.p_two_sided), r.summary.aggregate.p);
    assert_eq!(r.summary.classes.len(), 3);
    assert!(r.summary.classes.iter().all(|c| c.delta.adjusted_p.is_none() || c.delta.adjusted_p >= c.delta.p));
}

#[test]
fn zero_advice_weight_is_a_no_op_arm() {
    let cfg = ImageStudyConfig {
        advice_weight: 0.0,
        ..small_image()
    };
    let r = run_image_study(&cfg).unwrap();
    for row in r.rows.iter().filter(|r| r.arm == "limeade" && r.metric == "delta_accuracy") {
        assert_eq!(row.value, 0.0);
    }
}

#[test]
fn ten_shot_and_combined_modes_run() {
    for cfg in [
        ImageStudyConfig { shots: 10, ..small_image() },
        ImageStudyConfig { combined_arm: true, ..small_image() },
    ] {
        let r = run_image_study(&cfg).unwrap();
        assert!(!r.rows.is_empty());
    }
}

#[test]
fn positive_advice_raises_scores_of_instances_with_the_part() {
    let spec = SyntheticDomainSpec { pool_size: 600, test_per_class: 100, ..SyntheticDomainSpec::default() };
    let domain = gen_synthetic_domain(&spec, 31).unwrap();
    let model = Logistic;
    let train = TrainConfig::default();
    let j = spec.object_parts[0];
    let holders: Vec<_> = domain.test.iter().filter(|i| i.interp().is_present(j)).collect();
    let mean_score = |p: &limeade_core::ModelParams| {
        holders.iter().map(|i| model.score(p, i.x()).unwrap()).sum::<f64>() / holders.len() as f64
    };
    let pos: Vec<usize> = (0..spec.pool_size).filter(|&i| domain.pool_labels[i] == Label::Positive).collect();
    let neg: Vec<usize> = (0..spec.pool_size).filter(|&i| domain.pool_labels[i] == Label::Negative).collect();
    let mut total = 0.0;
    for s in 0..100u64 {
        let mut rng = seed::rng(s);
        use rand::seq::IndexedRandom;
        let p = *pos.choose(&mut rng).unwrap();
        let n = *neg.choose(&mut rng).unwrap();
        let labeled = vec![
            WeightedExample::unit(domain.pool[p].x().clone(), Label::Positive),
            WeightedExample::unit(domain.pool[n].x().clone(), Label::Negative),
        ];
        let params = model.fit(&labeled, &train).unwrap();
        let pool = domain.pool.iter().enumerate().filter(|(i, _)| *i != p && *i != n).map(|(_, x)| x.clone()).collect();
        let mut data = Dataset::new(labeled, pool).unwrap();
        let ctx = UpdateContext {
            model: &model,
            bridge: &domain.bridge,
            kernel: ProximityKernel::default(),
            advice_weight: 0.25,
            train,
        };
        let r = limeade_update(
            &ctx,
            &params,
            &mut data,
            &domain.pool[p],
            AdviceAction { feature: j, polarity: Label::Positive },
            &GetInstanceStrategy::PoolNearest { k: 50, similarity: Similarity::Opaque },
            s,
        )
        .unwrap();
        total += mean_score(&r.new_params) - mean_score(&params);
    }
    assert!(total / 100.0 > 0.0, "mean change {}", total / 100.0);
}

#[test]
fn confound_probe_diagnostic() {
    // Reported, not asserted: with rho = 0 confounds carry no class signal.
    let spec = SyntheticDomainSpec { confound_rate: 0.0, pool_size: 500, test_per_class: 10, ..SyntheticDomainSpec::default() };
    let d = gen_synthetic_domain(&spec, 2).unwrap();
    let ex: Vec<WeightedExample> = d.pool.iter().zip(&d.pool_labels).map(|(i, &y)| WeightedExample::unit(i.x().clone(), y)).collect();
    let params = Logistic.fit(&ex, &TrainConfig::default()).unwrap();
    let share = confound_weight_share(&d, &params).unwrap();
    println!("confound share of part sensitivity at rho = 0: {share:.4}");
    assert!((0.0..=1.0).contains(&share));
}

fn ndcg_independent(rel: &[f64]) -> f64 {
    let gain = |r: &[f64]| -> f64 { r.iter().enumerate().map(|(i, g)| g / (i as f64 + 2.0).log2()).sum() };
    let mut ideal = rel.to_vec();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let best = gain(&ideal);
    if best == 0.0 {
        0.0
    } else {
        gain(rel) / best
    }
}

#[test]
fn feed_rankings_recompute_and_rows_are_deterministic() {
    let cfg = FeedSimConfig { dump_rankings: true, ..small_feed() };
    let r = run_feed_simulation(&cfg).unwrap();
    assert_eq!(r.rankings.len(), cfg.n_feeds * cfg.sizes.len() * cfg.draws * 2);
    for d in &r.rankings {
        assert!((ndcg_independent(&d.relevances) - d.ndcg).abs() < 1e-9);
        let row = r
            .rows
            .iter()
            .find(|x| x.group == format!("feed_{:02}", d.feed) && x.step == d.size && x.seed == d.draw as u64 && x.arm == d.arm.as_str())
            .unwrap();
        assert_eq!(row.value, d.ndcg);
    }
    let again = run_feed_simulation(&cfg).unwrap();
    assert_eq!(to_csv_string(&r.rows).unwrap(), to_csv_string(&again.rows).unwrap());
    assert_eq!(r.summary.sizes.iter().map(|s| s.size).collect::<Vec<_>>(), vec![2, 5, 10]);
}

#[test]
fn uniform_oracle_gives_perfect_ndcg() {
    let cfg = FeedSimConfig { uniform_oracle: true, ..small_feed() };
    let r = run_feed_simulation(&cfg).unwrap();
    assert!(r.rows.iter().all(|x| x.value == 1.0));
}

#[test]
fn tradeoff_displays_respect_bounds() {
    let cfg = small_tradeoff();
    let r = run_tradeoff_study(&cfg).unwrap();
    for tr in &r.traces {
        for policy in [&tr.greedy, &tr.sampled] {
            assert_eq!(policy.steps.len(), cfg.actions + 1);
            for step in &policy.steps {
                assert!(step.len() <= cfg.top_papers);
                for e in step {
                    assert!(e.terms.len() <= 4);
                    let mut stems: Vec<String> = e.terms.iter().map(|t| stem(&t.term)).collect();
                    stems.sort();
                    let n = stems.len();
                    stems.dedup();
                    assert_eq!(n, stems.len());
                }
            }
        }
        // Same starting model: the same papers are shown first.
        let ids = |s: &Vec<limeade_core::Explanation>| s.iter().map(|e| e.instance_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&tr.greedy.steps[0]), ids(&tr.sampled.steps[0]));
    }
    let again = run_tradeoff_study(&cfg).unwrap();
    assert_eq!(to_csv_string(&r.rows).unwrap(), to_csv_string(&again.rows).unwrap());
    assert_eq!(r.rows.len(), cfg.n_sessions * (cfg.actions + 1) * 2);
}

#[test]
fn configs_round_trip_through_json() {
    let c = TradeoffConfig::default();
    let s = serde_json::to_string(&c).unwrap();
    assert_eq!(serde_json::from_str::<TradeoffConfig>(&s).unwrap(), c);
    let i: ImageStudyConfig = serde_json::from_str(r#"{"n_classes": 2, "shots": 10}"#).unwrap();
    assert_eq!((i.n_classes, i.shots, i.neighbors), (2, 10, 50));
}
