mod common;

use handflap::evaluation::{confusion_metrics, roc_auroc, stratified_kfold};
use handflap::features::{build_features, FeatureSelection, SIX_LANDMARKS};
use handflap::landmark::{load_clip, save_clip, Label, LandmarkFrame};
use handflap::segmentation::{plan_spans, Annotation, Behavior, Span};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn clip_from(seed: u64, frames: usize) -> handflap::landmark::Clip {
    common::random_clip(&mut ChaCha8Rng::seed_from_u64(seed), frames)
}

fn behavior() -> impl Strategy<Value = Behavior> {
    prop_oneof![
        3 => Just(Behavior::HandFlapping),
        1 => Just(Behavior::HeadBanging),
        1 => Just(Behavior::Spinning),
    ]
}

/// Annotations on a quarter-second grid inside `[0, duration]`.
fn annotated_video() -> impl Strategy<Value = (f64, Vec<Annotation>)> {
    (4u32..160).prop_flat_map(|quarters| {
        let duration = f64::from(quarters) / 4.0;
        let interval = (0..quarters, 1..=quarters, behavior()).prop_map(move |(a, len, b)| {
            let start = a.min(quarters - 1);
            let end = (start + len).min(quarters);
            Annotation {
                video_id: "v".into(),
                behavior: b,
                start_s: f64::from(start) / 4.0,
                end_s: f64::from(end) / 4.0,
            }
        });
        (Just(duration), prop::collection::vec(interval, 0..6))
    })
}

fn overlaps_any(span: &Span, others: &[Span]) -> bool {
    others.iter().any(|o| span.overlaps(o))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clip_file_round_trip(seed in any::<u64>(), frames in 1usize..40) {
        let clip = clip_from(seed, frames);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.jsonl");
        save_clip(&clip, &path).unwrap();
        let loaded = load_clip(&path).unwrap();
        prop_assert_eq!(&loaded, &clip);
        for point in loaded.frames.iter().flat_map(|f| f.hands()).flat_map(|h| h.points.iter()) {
            prop_assert_eq!(point.detected, point.coords() != [0.0; 3]);
        }
    }

    #[test]
    fn plan_spans_invariants((duration, annotations) in annotated_video()) {
        let plan = plan_spans("v", &annotations, duration).unwrap();
        let annotated: Vec<Span> = annotations.iter().map(|a| Span::new(a.start_s, a.end_s)).collect();
        for span in plan.positives.iter().chain(&plan.controls) {
            prop_assert!(span.duration_s() >= 2.0 - 1e-9 && span.duration_s() <= 5.0 + 1e-9, "{:?}", span);
            prop_assert!(span.start_s >= 0.0 && span.end_s <= duration + 1e-9);
        }
        for control in &plan.controls {
            prop_assert!(!overlaps_any(control, &plan.positives));
            prop_assert!(!overlaps_any(control, &annotated));
        }
        for (i, a) in plan.positives.iter().enumerate() {
            prop_assert!(!overlaps_any(a, &plan.positives[i + 1..]));
        }

        let replayed: Vec<Annotation> = plan
            .positives
            .iter()
            .map(|s| Annotation {
                video_id: "v".into(),
                behavior: Behavior::HandFlapping,
                start_s: s.start_s,
                end_s: s.end_s,
            })
            .collect();
        prop_assert_eq!(plan_spans("v", &replayed, duration).unwrap().positives, plan.positives);
    }

    #[test]
    fn feature_invariants(seed in any::<u64>(), frames in 1usize..120, lm in 0usize..21) {
        let clip = clip_from(seed, frames);
        for selection in [FeatureSelection::All21, FeatureSelection::Six, FeatureSelection::One(lm), FeatureSelection::MeanLandmark] {
            let m = build_features(&clip, selection, false).unwrap();
            prop_assert_eq!(&m, &build_features(&clip, selection, false).unwrap());
            let block = m.cols() / 2;
            for (t, frame) in clip.frames.iter().take(90).enumerate() {
                for (h, hand) in frame.hands().into_iter().enumerate() {
                    let cols = &m.row(t).to_vec()[h * block..(h + 1) * block];
                    let any_detected = match selection {
                        FeatureSelection::MeanLandmark => hand.is_present(),
                        _ => selection.landmarks().iter().any(|&k| hand.points[k].detected),
                    };
                    if !any_detected {
                        prop_assert!(cols.iter().all(|&v| v == 0.0));
                    }
                    for xy in cols.chunks(3) {
                        prop_assert!((0.0..=1.0).contains(&xy[0]) && (0.0..=1.0).contains(&xy[1]));
                    }
                }
            }
        }

        for interpolate in [false, true] {
            let six = build_features(&clip, FeatureSelection::Six, interpolate).unwrap();
            let one = build_features(&clip, FeatureSelection::One(0), interpolate).unwrap();
            prop_assert_eq!(SIX_LANDMARKS[0], 0);
            for t in 0..six.rows() {
                let (s, o) = (six.row(t), one.row(t));
                for c in 0..3 {
                    prop_assert_eq!(o[c], s[c]);
                    prop_assert_eq!(o[3 + c], s[18 + c]);
                }
            }
        }
    }

    #[test]
    fn features_ignore_frames_past_sequence_length(seed in any::<u64>(), extra in 1usize..20) {
        let clip = clip_from(seed, 90);
        let mut longer = clip.clone();
        let tail = clip_from(seed ^ 1, extra);
        for (i, frame) in tail.frames.into_iter().enumerate() {
            let index = 90 + i as u64;
            longer.frames.push(LandmarkFrame { frame_index: index, timestamp_s: index as f64 / 30.0, ..frame });
        }
        for interpolate in [false, true] {
            prop_assert_eq!(
                build_features(&clip, FeatureSelection::All21, interpolate).unwrap(),
                build_features(&longer, FeatureSelection::All21, interpolate).unwrap()
            );
        }
    }

    #[test]
    fn augmentation_keeps_bounds_zeros_and_offsets(seed in any::<u64>(), frames in 1usize..40, aug_seed in any::<u64>()) {
        let clip = clip_from(seed, frames);
        prop_assert_eq!(common::augmentation_violation(&clip, aug_seed), None);
    }

    #[test]
    fn auroc_matches_pairwise_oracle(
        cases in prop::collection::vec((0u8..12, 0u8..=1), 2..60)
    ) {
        let scores: Vec<f64> = cases.iter().map(|c| f64::from(c.0) / 11.0).collect();
        let labels: Vec<u8> = cases.iter().map(|c| c.1).collect();
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let roc = roc_auroc(&scores, &labels).unwrap();
        prop_assert!((roc.auroc - common::pairwise_auroc(&scores, &labels)).abs() <= 1e-12);
    }

    #[test]
    fn metrics_invariant_under_monotone_maps_and_permutation(
        cases in prop::collection::vec((0u8..20, 0u8..=1), 2..60),
        rotate in 0usize..60,
    ) {
        let scores: Vec<f64> = cases.iter().map(|c| f64::from(c.0) / 19.0).collect();
        let labels: Vec<u8> = cases.iter().map(|c| c.1).collect();
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let base = roc_auroc(&scores, &labels).unwrap().auroc;

        let mapped: Vec<f64> = scores.iter().map(|s| 7.0 * s.powi(3) + s.exp()).collect();
        prop_assert_eq!(roc_auroc(&mapped, &labels).unwrap().auroc, base);

        let k = rotate % scores.len();
        let (mut ps, mut pl) = (scores.clone(), labels.clone());
        ps.rotate_left(k);
        pl.rotate_left(k);
        prop_assert_eq!(roc_auroc(&ps, &pl).unwrap().auroc, base);
        prop_assert_eq!(
            confusion_metrics(&ps, &pl, 0.5).unwrap(),
            confusion_metrics(&scores, &labels, 0.5).unwrap()
        );
    }

    #[test]
    fn f1_matches_confusion_counts(cases in prop::collection::vec((0u8..10, 0u8..=1), 1..60)) {
        let scores: Vec<f64> = cases.iter().map(|c| f64::from(c.0) / 9.0).collect();
        let labels: Vec<u8> = cases.iter().map(|c| c.1).collect();
        let m = confusion_metrics(&scores, &labels, 0.5).unwrap();
        let tp = scores.iter().zip(&labels).filter(|(s, y)| **s > 0.5 && **y == 1).count() as f64;
        let fp = scores.iter().zip(&labels).filter(|(s, y)| **s > 0.5 && **y == 0).count() as f64;
        let fn_ = scores.iter().zip(&labels).filter(|(s, y)| **s <= 0.5 && **y == 1).count() as f64;
        if tp > 0.0 {
            let direct = 2.0 * tp / (2.0 * tp + fp + fn_);
            prop_assert!((m.f1 - direct).abs() < 1e-12);
            let (p, r) = (m.precision, m.recall);
            prop_assert!((m.f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
        } else {
            prop_assert_eq!(m.f1, 0.0);
        }
    }

    #[test]
    fn stratified_folds_partition(n_flap in 5usize..40, n_control in 5usize..40, k in 2usize..6, seed in any::<u64>()) {
        let labels: Vec<Label> = (0..n_flap).map(|_| Label::HandFlapping)
            .chain((0..n_control).map(|_| Label::Control))
            .collect();
        let folds = stratified_kfold(&labels, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for class in [Label::HandFlapping, Label::Control] {
            let sizes: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == class).count()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
