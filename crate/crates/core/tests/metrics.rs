use proptest::prelude::*;
use spectral_gn::datasets::idx::{encode_images, encode_labels, parse_images, parse_labels};
use spectral_gn::datasets::{Image, Rng};
use spectral_gn::harness::{binary_metrics, merge_curves, roc_auc, RunRecord};

/// Probability that a random positive outscores a random negative, ties
/// counting one half, by counting every label-crossing pair.
fn auc_by_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    wins / pairs
}

#[test]
fn auc_matches_pair_counting() {
    let mut rng = Rng::new(1);
    for trial in 0..200 {
        // Coarse scores in half the trials force many ties.
        let scores: Vec<f64> = (0..50)
            .map(|_| if trial % 2 == 0 { rng.uniform() } else { rng.below(5) as f64 / 4.0 })
            .collect();
        let mut labels: Vec<bool> = (0..50).map(|_| rng.bernoulli(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        assert!((roc_auc(&scores, &labels) - auc_by_pairs(&scores, &labels)).abs() <= 1e-12);
    }
}

#[test]
fn auc_worked_example() {
    assert_eq!(roc_auc(&[0.9, 0.2, 0.8, 0.1], &[true, false, false, true]), 0.5);
}

#[test]
fn threshold_metrics_match_confusion_counts() {
    let mut rng = Rng::new(2);
    for _ in 0..200 {
        let logits: Vec<f64> = (0..50).map(|_| rng.uniform() * 4.0 - 2.0).collect();
        let labels: Vec<bool> = (0..50).map(|_| rng.bernoulli(0.3)).collect();
        let (mut tp, mut fp, mut tn, mut fnn) = (0.0, 0.0, 0.0, 0.0);
        for (&z, &y) in logits.iter().zip(&labels) {
            match (z > 0.0, y) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, false) => tn += 1.0,
                (false, true) => fnn += 1.0,
            }
        }
        let m = binary_metrics(&logits, &labels);
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fnn > 0.0 { tp / (tp + fnn) } else { 0.0 };
        let f1 = if tp > 0.0 { 2.0 * tp / (2.0 * tp + fp + fnn) } else { 0.0 };
        assert_eq!(m.accuracy, (tp + tn) / 50.0);
        assert_eq!(m.precision, precision);
        assert_eq!(m.recall, recall);
        assert!((m.f1 - f1).abs() <= 1e-15);
    }
}

#[test]
fn curves_merge_prefixes_variants() {
    let mut a = RunRecord::default();
    a.push(0, "val", "accuracy", 0.5);
    let mut b = RunRecord::default();
    b.push(10, "test", "f1", 0.25);
    let csv = merge_curves(&[("gn".into(), a), ("u-gn".into(), b)]);
    assert_eq!(csv, "variant,iteration,split,metric,value\ngn,0,val,accuracy,0.5\nu-gn,10,test,f1,0.25\n");
}

proptest! {
    #[test]
    fn idx_round_trip(rows in 1usize..6, cols in 1usize..6, count in 0usize..5, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let images: Vec<Image> = (0..count)
            .map(|_| Image { rows, cols, pixels: (0..rows * cols).map(|_| rng.below(256) as u8).collect() })
            .collect();
        let labels: Vec<u8> = (0..count).map(|_| rng.below(10) as u8).collect();
        prop_assert_eq!(parse_images(&encode_images(&images)).unwrap(), images);
        prop_assert_eq!(parse_labels(&encode_labels(&labels)).unwrap(), labels);
    }

    #[test]
    fn record_csv_round_trip(values in prop::collection::vec(-1e6f64..1e6, 1..20)) {
        let mut r = RunRecord::default();
        for (i, v) in values.iter().enumerate() {
            r.push(i, if i % 2 == 0 { "val" } else { "test" }, "accuracy", *v);
        }
        prop_assert_eq!(RunRecord::from_csv(&r.to_csv()).unwrap(), r);
    }

    #[test]
    fn truncated_idx_is_rejected(cut in 1usize..20) {
        let images = vec![Image { rows: 2, cols: 2, pixels: vec![1, 2, 3, 4] }; 3];
        let bytes = encode_images(&images);
        prop_assert!(parse_images(&bytes[..bytes.len() - cut.min(bytes.len())]).is_err());
    }
}
