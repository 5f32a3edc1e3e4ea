use std::collections::BTreeSet;

use proptest::prelude::*;

use mammo_core::metrics::{auroc, clopper_pearson, roc_curve};
use mammo_core::study::{acceptance_rate_partial, ConcordanceCategory, ReviewRecord, SusResponse};
use mammo_core::types::{PixelSet, TransformRecord};

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..80).prop_flat_map(|n| {
        (prop::collection::vec(0u8..12, n), prop::collection::vec(any::<bool>(), n)).prop_map(|(s, mut l)| {
            l[0] = true;
            l[1] = false;
            (s.into_iter().map(|v| v as f64 / 11.0).collect(), l)
        })
    })
}

proptest! {
    #[test]
    fn clopper_pearson_brackets_the_estimate(n in 1u64..400, frac in 0.0f64..=1.0, level in 0.5f64..0.999) {
        let x = (frac * n as f64).floor() as u64;
        let ci = clopper_pearson(x, n, level).unwrap();
        let p = x as f64 / n as f64;
        prop_assert!(0.0 <= ci.lower && ci.lower <= p && p <= ci.upper && ci.upper <= 1.0);
        prop_assert_eq!(ci.lower == 0.0, x == 0);
        prop_assert_eq!(ci.upper == 1.0, x == n);
        if x < n {
            let next = clopper_pearson(x + 1, n, level).unwrap();
            prop_assert!(next.lower >= ci.lower && next.upper >= ci.upper);
        }
        let wider = clopper_pearson(x, n, (level + 1.0) / 2.0).unwrap();
        prop_assert!(wider.lower <= ci.lower && wider.upper >= ci.upper);
    }

    #[test]
    fn auroc_flips_with_labels_and_ignores_monotone_rescaling((scores, labels) in scored()) {
        let a = auroc(&roc_curve(&scores, &labels).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let b = auroc(&roc_curve(&scores, &flipped).unwrap());
        prop_assert!((a + b - 1.0).abs() < 1e-12);
        let squashed: Vec<f64> = scores.iter().map(|s| s * s * 0.5 + 0.1).collect();
        let c = auroc(&roc_curve(&squashed, &labels).unwrap());
        prop_assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn pixel_set_operations_match_btree_sets(
        a in prop::collection::vec((0u32..40, 0u32..30), 0..200),
        b in prop::collection::vec((0u32..40, 0u32..30), 0..200),
    ) {
        let (sa, sb) = (PixelSet::from_points(40, a.clone()), PixelSet::from_points(40, b.clone()));
        let (ta, tb): (BTreeSet<_>, BTreeSet<_>) = (a.into_iter().collect(), b.into_iter().collect());
        prop_assert_eq!(sa.len(), ta.len());
        prop_assert_eq!(sa.intersection_len(&sb), ta.intersection(&tb).count());
        let u = PixelSet::union(40, [&sa, &sb]);
        prop_assert_eq!(u.points().collect::<BTreeSet<_>>(), ta.union(&tb).copied().collect::<BTreeSet<_>>());
    }

    #[test]
    fn transforms_round_trip_inside_the_crop(
        w in 200u32..900, h in 300u32..1200, x0 in 0u32..100, y0 in 0u32..100, fx in 0.0f64..1.0, fy in 0.0f64..1.0,
    ) {
        let (cw, ch) = (w - x0, h - y0);
        let target_w = (ch as u64 * 2).div_ceil(3) as u32;
        let pad = if target_w > cw { ((target_w - cw) / 2, 0, target_w - cw - (target_w - cw) / 2, 0) } else { (0, 0, 0, 0) };
        let (pw, ph) = (cw + pad.0 + pad.2, ch + pad.1 + pad.3);
        let rec = TransformRecord {
            original_size: (w, h),
            crop_offset: (x0, y0),
            pre_resize_size: (pw, ph),
            pad,
            scale: (1024.0 / pw as f64, 1536.0 / ph as f64),
        };
        let p = (x0 as f64 + fx * cw as f64, y0 as f64 + fy * ch as f64);
        let q = rec.inverse_point(rec.forward_point(p));
        prop_assert!((p.0 - q.0).abs() < 1e-9 && (p.1 - q.1).abs() < 1e-9);
    }

    #[test]
    fn sus_scores_lie_on_the_half_step_grid(items in prop::collection::vec(1u8..=5, 10)) {
        let s = SusResponse { participant_id: "p".into(), items }.score().unwrap();
        prop_assert!((0.0..=100.0).contains(&s));
        prop_assert_eq!((s / 2.5).fract(), 0.0);
    }

    #[test]
    fn only_the_latest_review_counts(grades in prop::collection::vec(1u8..=4, 1..8)) {
        let record = |grade| ReviewRecord {
            case_id: "c1".into(),
            reviewer_id: "r".into(),
            grade,
            classification: ConcordanceCategory::Edit,
            localization: ConcordanceCategory::Edit,
            timestamp: None,
        };
        let log: Vec<_> = grades.iter().map(|&g| record(g)).collect();
        let last = vec![record(*grades.last().unwrap())];
        let auto = BTreeSet::from(["c0".to_string()]);
        let all = acceptance_rate_partial(&log, &auto, 2, 0.95).unwrap();
        let only = acceptance_rate_partial(&last, &auto, 2, 0.95).unwrap();
        prop_assert_eq!(all.mean_accepted, only.mean_accepted);
        prop_assert_eq!(all.ci, only.ci);
    }
}
