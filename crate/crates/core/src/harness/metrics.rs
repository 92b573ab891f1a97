//! Evaluation metrics.

use serde::Serialize;

/// Confusion-matrix metrics for binary predictions at logit threshold 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
}

/// Area under the ROC curve via the Mann–Whitney rank statistic, with tied
/// scores sharing their mean rank. Returns 0.5 when one class is absent.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j averaged.
        let midrank = (i + 1 + j) as f64 / 2.0;
        rank_sum_pos += midrank * order[i..j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j;
    }
    let n_pos = labels.iter().filter(|&&y| y).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return 0.5;
    }
    (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn binary_metrics(logits: &[f64], labels: &[bool]) -> BinaryMetrics {
    assert_eq!(logits.len(), labels.len(), "logits and labels differ in length");
    let (mut tp, mut fp, mut tn, mut fne) = (0, 0, 0, 0);
    for (&z, &y) in logits.iter().zip(labels) {
        match (z > 0.0, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fne += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fne);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    BinaryMetrics {
        accuracy: ratio(tp + tn, logits.len()),
        precision,
        recall,
        f1,
        roc_auc: roc_auc(logits, labels),
    }
}

/// Index of the largest entry; the first wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
