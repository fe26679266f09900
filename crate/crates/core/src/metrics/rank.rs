use alloc::vec::Vec;

use super::{check_inputs, MetricError};
use crate::rng::SeededRng;
use crate::Label;

fn class_counts(labels: &[Label]) -> (usize, usize) {
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    (pos, labels.len() - pos)
}

/// Area under the ROC curve via the Mann-Whitney statistic with average
/// ranks for ties: P(s+ > s-) + P(s+ = s-) / 2.
pub fn auroc(scores: &[f64], labels: &[Label]) -> Result<f64, MetricError> {
    check_inputs(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(MetricError::DegenerateSlice {
            context: None,
            positives: pos,
            negatives: neg,
        });
    }
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the positive rank sum, so tied (half-integer) ranks stay integral.
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k].is_positive()).count() as u128;
        rank_sum2 += pos_in_group * (i + j + 2) as u128;
        i = j + 1;
    }
    let (p, q) = (pos as u128, neg as u128);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * q) as f64)
}

/// Step-wise average precision, sum over thresholds of
/// `(recall_i - recall_{i-1}) * precision_i`, scanning scores in descending
/// order. Tied scores form a single threshold.
pub fn average_precision(scores: &[f64], labels: &[Label]) -> Result<f64, MetricError> {
    check_inputs(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 {
        return Err(MetricError::DegenerateSlice {
            context: None,
            positives: pos,
            negatives: neg,
        });
    }
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            if labels[k].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(ap)
}

/// Positions of `scores` from best to worst. Ties are resolved by a seeded
/// shuffle applied before a stable descending sort.
pub fn rank_order(scores: &[f64], rng: &mut SeededRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    rng.shuffle(&mut order);
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// AP over the first `r` labels of an already ranked list: mean precision at
/// each relevant position, normalized by the number of positives inside the
/// cutoff. Zero when the cutoff holds no positive.
pub fn ap_at_r_ranked(ranked: &[Label], r: usize) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, l) in ranked.iter().take(r).enumerate() {
        if l.is_positive() {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / hits.max(1) as f64
}

/// Average precision over the top `min(r, n)` items.
pub fn ap_at_r(scores: &[f64], labels: &[Label], r: usize, tie_seed: u64) -> Result<f64, MetricError> {
    check_inputs(scores, labels)?;
    if r == 0 {
        return Err(MetricError::InvalidRank);
    }
    if scores.is_empty() {
        return Err(MetricError::EmptySlice);
    }
    let mut rng = SeededRng::new(tie_seed);
    let ranked: Vec<Label> = rank_order(scores, &mut rng).into_iter().map(|i| labels[i]).collect();
    Ok(ap_at_r_ranked(&ranked, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use Label::{Negative as N, Positive as P};

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.9, 0.8, 0.3, 0.2], &[P, P, N, N]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5, 0.5], &[P, N]).unwrap(), 0.5);
        // (pos, neg) pairs: (0.9,0.8) (0.9,0.6) (0.7,0.6) correct, (0.7,0.8) wrong
        assert_eq!(auroc(&[0.9, 0.8, 0.7, 0.6], &[P, N, P, N]).unwrap(), 0.75);
    }

    #[test]
    fn auroc_single_class_is_degenerate() {
        assert!(matches!(
            auroc(&[0.1, 0.2], &[P, P]),
            Err(MetricError::DegenerateSlice { positives: 2, negatives: 0, .. })
        ));
        assert!(matches!(
            auroc(&[0.1], &[P, N]),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert_eq!(auroc(&[f64::NAN, 0.1], &[P, N]), Err(MetricError::NonFiniteScore(0)));
    }

    #[test]
    fn average_precision_examples() {
        assert_eq!(average_precision(&[0.9, 0.1], &[P, N]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.9, 0.1], &[N, P]).unwrap(), 0.5);
        assert_eq!(average_precision(&[0.3, 0.2, 0.1], &[P, P, P]).unwrap(), 1.0);
        assert!(average_precision(&[0.3], &[N]).is_err());
    }

    #[test]
    fn ap_at_r_examples() {
        let v = ap_at_r_ranked(&[P, P, N, P, N], 5);
        assert!((v - (1.0 + 1.0 + 0.75) / 3.0).abs() < 1e-12);
        assert_eq!(ap_at_r_ranked(&[P; 5], 5), 1.0);
        assert_eq!(ap_at_r_ranked(&[N; 5], 5), 0.0);
        // cutoff beyond the slice uses the whole slice
        assert_eq!(ap_at_r_ranked(&[N, P], 5), 0.5);
    }

    #[test]
    fn ap_at_r_orders_by_score() {
        let scores = vec![0.1, 0.9, 0.8, 0.2, 0.7, 0.05];
        let labels = vec![N, P, P, N, P, P];
        // ranked: 0.9 P, 0.8 P, 0.7 P, 0.2 N, 0.1 N
        assert_eq!(ap_at_r(&scores, &labels, 3, 0).unwrap(), 1.0);
        assert_eq!(ap_at_r(&scores, &labels, 0, 0), Err(MetricError::InvalidRank));
        assert_eq!(ap_at_r(&[], &[], 3, 0), Err(MetricError::EmptySlice));
    }

    #[test]
    fn ap_at_r_tie_break_is_seeded_and_label_blind() {
        let scores = vec![0.5; 10];
        let labels = vec![P, N, N, N, N, N, N, N, N, N];
        let a = ap_at_r(&scores, &labels, 3, 11).unwrap();
        let b = ap_at_r(&scores, &labels, 3, 11).unwrap();
        assert_eq!(a, b);
        // over many seeds the lone positive lands in the top 3 about 30% of the time
        let hits = (0..1000u64).filter(|&s| ap_at_r(&scores, &labels, 3, s).unwrap() > 0.0).count();
        assert!((220..380).contains(&hits), "{hits}");
    }
}
