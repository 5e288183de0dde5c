use ctxocc_core::classifier::{
    ClassifierKind, ClassifierSettings, NeighbourBuffer, OneClassClassifier,
};
use ctxocc_core::clustering::{ball_distance, nearest_cluster, Clustering, MacroCluster};
use ctxocc_core::evaluation::{auc, window_informedness_threshold, ConfusionMatrix, ScoredTruth};
use ctxocc_core::sampling::{min_window_size, smote_points};
use ctxocc_core::stream::{
    ClassLabel, Instance, MixtureModelStream, MvndComponent, StreamDescriptor,
};
use proptest::prelude::*;

fn scored() -> impl Strategy<Value = Vec<ScoredTruth>> {
    prop::collection::vec((0u8..20, any::<bool>()), 2..80).prop_map(|v| {
        v.into_iter()
            .map(|(s, m)| ScoredTruth {
                score: s as f64 / 7.0,
                minority: m,
            })
            .collect()
    })
}

fn informedness(pairs: &[ScoredTruth], tau: f64) -> f64 {
    let cm = ConfusionMatrix::at_threshold(pairs, tau);
    cm.sensitivity().unwrap() + cm.specificity().unwrap() - 1.0
}

proptest! {
    #[test]
    fn auc_equals_pair_counting(pairs in scored()) {
        let pos: Vec<f64> = pairs.iter().filter(|p| p.minority).map(|p| p.score).collect();
        let neg: Vec<f64> = pairs.iter().filter(|p| !p.minority).map(|p| p.score).collect();
        let expected = (!pos.is_empty() && !neg.is_empty()).then(|| {
            let mut twice = 0u64;
            for p in &pos {
                for n in &neg {
                    twice += if p > n { 2 } else if p == n { 1 } else { 0 };
                }
            }
            twice as f64 / (2 * pos.len() * neg.len()) as f64
        });
        prop_assert_eq!(auc(pairs.iter().copied()), expected);
    }

    #[test]
    fn informedness_midpoints_reach_the_best_threshold(pairs in scored()) {
        let mut distinct: Vec<f64> = pairs.iter().map(|p| p.score).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let both = pairs.iter().any(|p| p.minority) && pairs.iter().any(|p| !p.minority);
        let got = window_informedness_threshold(&pairs);
        if !both || distinct.len() < 2 {
            prop_assert!(got.is_none());
        } else {
            // every threshold in [min, max) behaves like one of the scores below max
            let best = distinct[..distinct.len() - 1]
                .iter()
                .map(|t| informedness(&pairs, *t))
                .fold(f64::NEG_INFINITY, f64::max);
            let first = distinct.iter().position(|t| informedness(&pairs, *t) >= best - 1e-12).unwrap();
            let tau = got.unwrap();
            prop_assert!((informedness(&pairs, tau) - best).abs() < 1e-12);
            prop_assert_eq!(tau, 0.5 * (distinct[first] + distinct[first + 1]));
        }
    }

    #[test]
    fn g_mean_lies_between_the_rates(tp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50, fp in 0u64..50) {
        let cm = ConfusionMatrix { tp, fp, tn, fn_ };
        if let (Some(se), Some(sp), Some(g)) = (cm.sensitivity(), cm.specificity(), cm.g_mean()) {
            prop_assert!(g >= se.min(sp) - 1e-15 && g <= se.max(sp) + 1e-15);
        } else {
            prop_assert!(tp + fn_ == 0 || tn + fp == 0);
        }
    }

    #[test]
    fn nearest_cluster_is_the_scan_minimum(
        specs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.1f64..2.0), 1..6),
        x in (-8.0f64..8.0, -8.0f64..8.0),
    ) {
        let k = specs.len() as f64;
        let clusters: Vec<MacroCluster> = specs
            .iter()
            .enumerate()
            .map(|(i, (a, b, r))| MacroCluster::new(i, vec![*a, *b], *r, 1.0, k).unwrap())
            .collect();
        let c = Clustering::new(clusters.clone(), k).unwrap();
        let (id, d) = nearest_cluster(&c, &[x.0, x.1]).unwrap();
        for m in &clusters {
            let dm = ((x.0 - m.center[0]).hypot(x.1 - m.center[1]) - m.radius).max(0.0);
            prop_assert!(d <= dm + 1e-12);
            if m.id < id {
                prop_assert!(dm > d - 1e-12);
            }
        }
    }

    #[test]
    fn cluster_distance_is_symmetric_and_bounded(
        a in (-2.0f64..2.0, -2.0f64..2.0, 0.2f64..1.5),
        b in (-2.0f64..2.0, -2.0f64..2.0, 0.2f64..1.5),
        seed in any::<u64>(),
    ) {
        let ab = ball_distance(&[a.0, a.1], a.2, &[b.0, b.1], b.2, 5_000, seed).unwrap();
        let ba = ball_distance(&[b.0, b.1], b.2, &[a.0, a.1], a.2, 5_000, seed).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab.raw >= 0.0 && (0.0..=1.0).contains(&ab.normalized));
    }

    #[test]
    fn smote_draws_stay_on_their_segment(
        pts in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 2..30),
        count in 0usize..200,
        seed in any::<u64>(),
    ) {
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let draws = smote_points(&refs, 5, count, seed).unwrap();
        prop_assert_eq!(draws.len(), count);
        for s in draws {
            let (p, n) = (&pts[s.parent], &pts[s.neighbour.unwrap()]);
            prop_assert!((0.0..=1.0).contains(&s.lambda));
            for i in 0..3 {
                prop_assert!(s.features[i] >= p[i].min(n[i]) - 1e-12 && s.features[i] <= p[i].max(n[i]) + 1e-12);
            }
        }
    }

    #[test]
    fn window_size_is_minimal(p in 0.01f64..1.0, tau in 1u64..200, c in 0.5f64..0.999) {
        let n = min_window_size(&[p], tau, c).unwrap().n;
        let x = ctxocc_core::math::two_sided_normal_quantile(c);
        let holds = |n: u64| {
            let n = n as f64;
            n * p - x * (n * p * (1.0 - p)).sqrt() >= tau as f64
        };
        prop_assert!(holds(n));
        prop_assert!(n == 1 || !holds(n - 1));
    }

    #[test]
    fn neighbour_buffer_never_exceeds_capacity(values in prop::collection::vec(-5.0f64..5.0, 0..300), cap in 2usize..50) {
        let mut b = NeighbourBuffer::new(1, cap, 1.0).unwrap();
        for v in &values {
            b.update(&[*v], true).unwrap();
            prop_assert!(b.len() <= cap);
        }
        let kept: Vec<f64> = b.points().map(|p| p[0]).collect();
        let start = values.len().saturating_sub(cap);
        prop_assert_eq!(kept, values[start..].to_vec());
    }
}

#[test]
fn generated_instances_satisfy_their_invariants() {
    let desc = StreamDescriptor {
        dimension: 2,
        context_probabilities: vec![0.3, 0.7],
        minority_fraction: 0.05,
        seed: 9,
    };
    let majority = vec![
        vec![MvndComponent::isotropic(vec![0.0, 0.0], 0.1).unwrap()],
        vec![MvndComponent::isotropic(vec![1.0, 1.0], 0.1).unwrap()],
    ];
    let minority = vec![MvndComponent::isotropic(vec![0.5, 0.5], 0.05).unwrap()];
    let stream = MixtureModelStream::new(desc, majority, minority).unwrap();
    for inst in stream.take(5000) {
        inst.validate(2, Some(2)).unwrap();
        assert!(inst.context_id.is_some() && inst.class_label.is_some());
    }
}

#[test]
fn single_context_scores_do_not_depend_on_the_framework_wrapper() {
    // the bare classifier path and the one-context model set agree exactly
    let window: Vec<Instance> = (0..1500)
        .map(|i| {
            Instance::labelled(
                vec![(i % 37) as f64 / 37.0, (i % 11) as f64 / 11.0],
                ClassLabel::Majority,
                Some(0),
            )
        })
        .collect();
    let settings = ClassifierSettings {
        hst_window: 250,
        epochs: 3,
        ..Default::default()
    };
    for kind in ClassifierKind::ALL {
        let config = ctxocc_core::framework::FrameworkConfig {
            initial_points: 1500,
            min_points: 1000,
            classifier: kind,
            settings: settings.clone(),
            threshold: 1e9,
            seed: 4,
            ..Default::default()
        };
        let mut fw = ctxocc_core::framework::build(
            ctxocc_core::framework::FrameworkKind::OcComplete,
            &config,
            &window,
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = window.iter().map(|i| i.features.clone()).collect();
        let scaler = kind.uses_scaling().then(|| {
            ctxocc_core::classifier::MinMaxScaler::fit(rows.iter().map(Vec::as_slice)).unwrap()
        });
        let seed = ctxocc_core::framework::classifier_seed(4, 0);
        let mut bare =
            ctxocc_core::classifier::BaseClassifier::fit(kind, &settings, &rows, scaler, seed)
                .unwrap();
        for i in 0..300 {
            let x = vec![(i % 13) as f64 / 13.0, (i % 7) as f64 / 7.0];
            let v = fw
                .step(
                    &Instance::new(x.clone()).with_context(0),
                    ctxocc_core::framework::Training::OnNormal,
                )
                .unwrap();
            let s = bare.score(&x).unwrap();
            assert_eq!(v.score, s, "{kind}");
            bare.train(&x).unwrap();
        }
    }
}
