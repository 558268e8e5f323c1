mod common;

use cardioforest::dataio::{generate_synthetic, SynthConfig};
use cardioforest::ensemble::{ForestParams, ModelKind, ModelSpec};
use cardioforest::eval::{
    confusion, cross_validate, metrics_suite, roc_auc, stability_from_csv, stability_stats, stratified_kfold,
    ConfusionCounts, Metric, CSV_HEADER,
};
use cardioforest::features::PreprocessConfig;
use common::{pairwise_auc, rng};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn auc_matches_pairwise_count(seed in 0u64..100_000, n in 2usize..300, levels in 1u32..50) {
        let mut r = rng(seed);
        let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..levels) as f64 / levels as f64).collect();
        let got = roc_auc(&scores, &labels).unwrap();
        prop_assert!((got - pairwise_auc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn metric_identities(tp in 0usize..500, fp in 0usize..500, fn_ in 0usize..500, tn in 0usize..500, seed in 0u64..1000) {
        let c = ConfusionCounts { tp, fp, fn_, tn };
        prop_assume!(c.total() > 0);
        let rec0 = if tn + fp > 0 { tn as f64 / (tn + fp) as f64 } else { 0.0 };
        let rec1 = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
        prop_assert!((c.balanced_accuracy() - (rec0 + rec1) / 2.0).abs() < 1e-15);
        if tp > 0 {
            let direct = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
            prop_assert!((c.f1() - direct).abs() < 1e-12);
        } else {
            prop_assert_eq!(c.f1(), 0.0);
        }
        let mut r = rng(seed);
        let mut labels = vec![1u8; tp + fn_];
        labels.extend(vec![0u8; fp + tn]);
        let probs: Vec<f64> = labels.iter().map(|_| r.random_range(0.0..=1.0)).collect();
        let m = metrics_suite(&c, &probs, &labels).unwrap();
        prop_assert!(m.rmse + 1e-15 >= m.mae);
    }

    #[test]
    fn folds_partition_and_stratify(seed in 0u64..10_000, n in 20usize..400, k in 2usize..10) {
        let mut r = rng(seed);
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i < k || r.random_bool(0.2))).collect();
        let n_pos = labels.iter().filter(|&&l| l == 1).count();
        prop_assume!(n_pos >= k && n - n_pos >= k);
        let f = stratified_kfold(&labels, k, seed).unwrap();
        let mut seen = vec![0; n];
        for fold in 0..k {
            let test = f.test_indices(fold);
            for &i in &test {
                seen[i] += 1;
            }
            let pos = test.iter().filter(|&&i| labels[i] == 1).count();
            prop_assert!(pos.abs_diff(n_pos / k) <= 1);
            prop_assert!(test.len().abs_diff(n / k) <= 1);
            prop_assert_eq!(f.train_indices(fold).len() + test.len(), n);
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }
}

#[test]
fn auc_hand_case_and_confusion_tally() {
    assert_eq!(roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
    let c = confusion(&[1, 0, 1, 0], &[1, 1, 0, 0]).unwrap();
    assert_eq!(c, ConfusionCounts { tp: 1, fp: 1, fn_: 1, tn: 1 });
}

fn small_cv_specs() -> Vec<ModelSpec> {
    ModelKind::ALL
        .into_iter()
        .map(|k| match ModelSpec::defaults(k) {
            ModelSpec::Forest(p) => ModelSpec::Forest(ForestParams { n_estimators: 25, ..p }),
            other => other,
        })
        .collect()
}

#[test]
fn cv_report_layout_and_determinism() {
    let ds = generate_synthetic(&SynthConfig::calibrated(600, 0.1546, 3)).unwrap();
    let specs = small_cv_specs();
    let cfg = PreprocessConfig::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| cross_validate(&specs, &ds, 5, 42, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let csv = a.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.count(), 4 * 5);
    for m in ModelKind::ALL {
        let folds: Vec<usize> = a.rows_for(m).map(|r| r.fold).collect();
        assert_eq!(folds, vec![1, 2, 3, 4, 5]);
    }
    let from_report = stability_stats(&a, Metric::Accuracy).unwrap();
    let from_csv = stability_from_csv(&csv, Metric::Accuracy).unwrap();
    assert_eq!(from_report.len(), from_csv.len());
    for (x, y) in from_report.iter().zip(&from_csv) {
        assert_eq!(x.model, y.model);
        assert!((x.stats.mean - y.stats.mean).abs() < 1e-12);
        assert!((x.stats.std - y.stats.std).abs() < 1e-12);
    }
}

#[test]
fn failing_folds_are_recorded_not_fatal() {
    let mut ds = generate_synthetic(&SynthConfig::calibrated(200, 0.3, 5)).unwrap();
    // column 0 observed in row 0 only: the fold testing row 0 has nothing to impute from
    let d = ds.n_features();
    for i in 1..ds.n_rows() {
        ds.features.set(i, 0, f64::NAN);
        ds.missing_mask[i * d] = true;
    }
    let report = cross_validate(&small_cv_specs(), &ds, 3, 1, &PreprocessConfig::default()).unwrap();
    assert_eq!(report.rows.len(), 12);
    let failed: Vec<_> = report.rows.iter().filter(|r| r.error.is_some()).collect();
    assert_eq!(failed.len(), 4);
    assert!(failed.iter().all(|r| r.test.is_none() && r.train.is_none()));
    let csv = report.to_csv();
    assert_eq!(csv.lines().count(), 13);
}
