//! Metrics and analyses: minority-class precision/recall/f1, final-decile
//! precision, interval curves, first-correct-guess statistics, data splits,
//! and Cohen's kappa.

mod report;
mod splits;

pub use report::{
    read_traces_csv, write_case_metrics_csv, write_curves_csv, write_epoch_csv, write_summary_csv,
    write_traces_csv,
};
pub use splits::{make_splits, Fold, SplitPlan};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// One sentence's prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub seq_index: usize,
    pub probability: f64,
    pub predicted: u8,
    pub gold: u8,
}

/// Per-sentence predictions for one case, in sequence order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrace {
    pub case_key: String,
    pub records: Vec<TraceRecord>,
}

/// Minority-class precision/recall/f1. Zero-denominator precision or
/// recall is reported as 0 with its degenerate flag set, so batch
/// evaluation never aborts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
}

fn prf_from_counts(tp: u64, fp: u64, fnn: u64) -> Prf {
    let precision_degenerate = tp + fp == 0;
    let recall_degenerate = tp + fnn == 0;
    let precision = if precision_degenerate {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if recall_degenerate {
        0.0
    } else {
        tp as f64 / (tp + fnn) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f1,
        precision_degenerate,
        recall_degenerate,
    }
}

/// Pooled (micro) scores over all sentences of all traces; the positive
/// class is "perpetrator mentioned".
pub fn prf_minority(traces: &[PredictionTrace]) -> Prf {
    let mut tp = 0;
    let mut fp = 0;
    let mut fnn = 0;
    for trace in traces {
        for r in &trace.records {
            match (r.predicted, r.gold) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 1) => fnn += 1,
                _ => {}
            }
        }
    }
    prf_from_counts(tp, fp, fnn)
}

/// Precision over the sentences with `seq_index >= ceil(0.9 * T)`.
/// `None` when no positive prediction falls in the window.
pub fn final_decile_precision(trace: &PredictionTrace) -> Option<f64> {
    let t = trace.records.len();
    let cutoff = (0.9 * t as f64).ceil() as usize;
    let mut tp = 0u64;
    let mut fp = 0u64;
    for r in trace.records.iter().filter(|r| r.seq_index >= cutoff) {
        match (r.predicted, r.gold) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            _ => {}
        }
    }
    if tp + fp == 0 {
        None
    } else {
        Some(tp as f64 / (tp + fp) as f64)
    }
}

/// Per-interval true-positive counts plus cumulative tp and cumulative f1
/// over `n_intervals` near-equal partitions of the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCurves {
    pub per_interval_tp: Vec<u64>,
    pub cumulative_tp: Vec<u64>,
    pub cumulative_f1: Vec<f64>,
}

pub fn interval_curves(trace: &PredictionTrace, n_intervals: usize) -> IntervalCurves {
    let t = trace.records.len();
    let mut per_interval_tp = Vec::with_capacity(n_intervals);
    let mut cumulative_tp = Vec::with_capacity(n_intervals);
    let mut cumulative_f1 = Vec::with_capacity(n_intervals);
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fnn = 0u64;
    for k in 0..n_intervals {
        let lo = k * t / n_intervals;
        let hi = (k + 1) * t / n_intervals;
        let mut tp_here = 0u64;
        for r in &trace.records[lo..hi] {
            match (r.predicted, r.gold) {
                (1, 1) => {
                    tp += 1;
                    tp_here += 1;
                }
                (1, 0) => fp += 1,
                (0, 1) => fnn += 1,
                _ => {}
            }
        }
        per_interval_tp.push(tp_here);
        cumulative_tp.push(tp);
        cumulative_f1.push(prf_from_counts(tp, fp, fnn).f1);
    }
    IntervalCurves {
        per_interval_tp,
        cumulative_tp,
        cumulative_f1,
    }
}

/// Smallest `seq_index` predicted 1 with gold 1; `None` if absent.
pub fn first_correct_index(trace: &PredictionTrace) -> Option<usize> {
    trace
        .records
        .iter()
        .filter(|r| r.predicted == 1 && r.gold == 1)
        .map(|r| r.seq_index)
        .min()
}

/// min/max/mean of `first_correct_index` over traces, skipping traces with
/// no correct positive. `None` when every trace lacks one.
pub fn first_correct_stats(traces: &[PredictionTrace]) -> Option<(usize, usize, f64)> {
    let firsts: Vec<usize> = traces.iter().filter_map(first_correct_index).collect();
    if firsts.is_empty() {
        return None;
    }
    let min = *firsts.iter().min().unwrap();
    let max = *firsts.iter().max().unwrap();
    let avg = firsts.iter().sum::<usize>() as f64 / firsts.len() as f64;
    Some((min, max, avg))
}

/// Cohen's kappa over two equal-length categorical label sequences.
pub fn cohen_kappa(labels_a: &[u32], labels_b: &[u32]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::invalid(format!(
            "cohen_kappa: length mismatch {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::invalid("cohen_kappa: empty sequences"));
    }
    let n = labels_a.len() as f64;
    let observed = labels_a
        .iter()
        .zip(labels_b)
        .filter(|(a, b)| a == b)
        .count() as f64
        / n;
    let mut count_a: BTreeMap<u32, f64> = BTreeMap::new();
    let mut count_b: BTreeMap<u32, f64> = BTreeMap::new();
    for (&a, &b) in labels_a.iter().zip(labels_b) {
        *count_a.entry(a).or_default() += 1.0;
        *count_b.entry(b).or_default() += 1.0;
    }
    let expected: f64 = count_a
        .iter()
        .map(|(label, ca)| ca / n * count_b.get(label).copied().unwrap_or(0.0) / n)
        .sum();
    if expected >= 1.0 {
        return if labels_a == labels_b {
            Ok(1.0)
        } else {
            Err(Error::invalid("cohen_kappa: undefined (expected agreement is 1)"))
        };
    }
    Ok((observed - expected) / (1.0 - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn trace_from(preds: &[u8], golds: &[u8]) -> PredictionTrace {
        PredictionTrace {
            case_key: "t:1".into(),
            records: preds
                .iter()
                .zip(golds)
                .enumerate()
                .map(|(i, (&p, &g))| TraceRecord {
                    seq_index: i,
                    probability: p as f64,
                    predicted: p,
                    gold: g,
                })
                .collect(),
        }
    }

    #[test]
    fn prf_arithmetic() {
        let prf = prf_minority(&[trace_from(&[1, 0, 1], &[1, 0, 0])]);
        assert_eq!(prf.precision, 0.5);
        assert_eq!(prf.recall, 1.0);
        assert!((prf.f1 - 2.0 / 3.0).abs() < 1e-9);
        assert!(!prf.precision_degenerate);
    }

    #[test]
    fn prf_degenerate_flags() {
        // no positive predictions, gold has positives: p flagged, r genuine 0
        let prf = prf_minority(&[trace_from(&[0, 0, 0], &[1, 0, 1])]);
        assert_eq!(prf.precision, 0.0);
        assert!(prf.precision_degenerate);
        assert_eq!(prf.recall, 0.0);
        assert!(!prf.recall_degenerate);
        assert_eq!(prf.f1, 0.0);
    }

    #[test]
    fn prf_perfect() {
        let prf = prf_minority(&[trace_from(&[1, 0, 1], &[1, 0, 1])]);
        assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn prf_is_permutation_invariant_and_harmonic() {
        let a = trace_from(&[1, 0, 1, 1], &[1, 1, 0, 1]);
        let b = trace_from(&[0, 1], &[1, 1]);
        let ab = prf_minority(&[a.clone(), b.clone()]);
        let ba = prf_minority(&[b, a]);
        assert_eq!(ab, ba);
        let expect = 2.0 * ab.precision * ab.recall / (ab.precision + ab.recall);
        assert!((ab.f1 - expect).abs() < 1e-12);
    }

    #[test]
    fn final_decile_examples() {
        // 100 sentences; window = indices >= 90; one correct + one incorrect positive
        let mut preds = vec![0u8; 100];
        let mut golds = vec![0u8; 100];
        preds[92] = 1;
        golds[92] = 1;
        preds[95] = 1;
        let trace = trace_from(&preds, &golds);
        assert_eq!(final_decile_precision(&trace), Some(0.5));

        // perpetrator never mentioned in the window: all positives wrong -> 0
        let mut preds = vec![0u8; 50];
        preds[49] = 1;
        let golds = vec![0u8; 50];
        assert_eq!(final_decile_precision(&trace_from(&preds, &golds)), Some(0.0));

        // no positives in the window -> undefined
        let preds = vec![0u8; 50];
        assert_eq!(final_decile_precision(&trace_from(&preds, &golds.clone())), None);
    }

    #[test]
    fn interval_curves_partition_and_final_point() {
        let preds: Vec<u8> = (0..137).map(|i| (i % 3 == 0) as u8).collect();
        let golds: Vec<u8> = (0..137).map(|i| (i % 2 == 0) as u8).collect();
        let trace = trace_from(&preds, &golds);
        let curves = interval_curves(&trace, 100);
        assert_eq!(curves.per_interval_tp.len(), 100);
        let total_tp: u64 = curves.per_interval_tp.iter().sum();
        assert_eq!(total_tp, *curves.cumulative_tp.last().unwrap());
        let whole = prf_minority(&[trace.clone()]);
        assert!((curves.cumulative_f1.last().unwrap() - whole.f1).abs() < 1e-12);
        // cumulative tp non-decreasing
        assert!(curves.cumulative_tp.windows(2).all(|w| w[0] <= w[1]));
        // interval sizes differ by at most one
        let sizes: Vec<usize> = (0..100)
            .map(|k| (k + 1) * 137 / 100 - k * 137 / 100)
            .collect();
        assert!(sizes.iter().all(|&s| s == 1 || s == 2));
    }

    #[test]
    fn all_zero_predictions_give_flat_curves() {
        let trace = trace_from(&[0; 40], &[1; 40]);
        let curves = interval_curves(&trace, 10);
        assert!(curves.per_interval_tp.iter().all(|&c| c == 0));
        assert!(curves.cumulative_f1.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn first_correct_examples() {
        let mut preds = vec![0u8; 10];
        let mut golds = vec![0u8; 10];
        preds[5] = 1;
        golds[5] = 1;
        preds[7] = 1;
        golds[7] = 1;
        assert_eq!(first_correct_index(&trace_from(&preds, &golds)), Some(5));
        assert_eq!(first_correct_index(&trace_from(&[0, 1], &[1, 0])), None);
        let stats = first_correct_stats(&[
            trace_from(&[0, 1], &[0, 1]),
            trace_from(&[1, 0], &[1, 0]),
            trace_from(&[0, 0], &[1, 1]),
        ]);
        assert_eq!(stats, Some((0, 1, 0.5)));
        assert_eq!(first_correct_stats(&[trace_from(&[0], &[1])]), None);
    }

    #[test]
    fn kappa_examples() {
        let a: Vec<u32> = vec![0, 1, 0, 1];
        assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);

        // 2x2 agreement counts [[45, 5], [5, 45]]: p_o 0.9, p_e 0.5, kappa 0.8
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (a_label, b_label, count) in [(0, 0, 45), (0, 1, 5), (1, 0, 5), (1, 1, 45)] {
            for _ in 0..count {
                x.push(a_label);
                y.push(b_label);
            }
        }
        let kappa = cohen_kappa(&x, &y).unwrap();
        assert!((kappa - 0.8).abs() < 1e-12);

        assert!(cohen_kappa(&[0, 1], &[0]).is_err());
        // both constant and equal: p_e = 1, identical -> 1
        assert_eq!(cohen_kappa(&[3, 3], &[3, 3]).unwrap(), 1.0);
    }
}
