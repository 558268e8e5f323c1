//! Binary classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// Recall of the positive class; 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Recall of the negative class; 0 when there are no negatives.
    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    /// 0 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn balanced_accuracy(&self) -> f64 {
        (self.recall() + self.specificity()) / 2.0
    }

    /// 0 when precision and recall are both 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Tally predictions against truth; class 1 is positive.
pub fn confusion(labels_true: &[u8], labels_pred: &[u8]) -> Result<ConfusionCounts> {
    if labels_true.len() != labels_pred.len() {
        return Err(Error::Value(format!(
            "{} true labels but {} predictions",
            labels_true.len(),
            labels_pred.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in labels_true.iter().zip(labels_pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (1, 0) => c.fn_ += 1,
            (0, 0) => c.tn += 1,
            _ => return Err(Error::Value(format!("non-binary label pair ({t}, {p})"))),
        }
    }
    Ok(c)
}

/// Area under the ROC curve from midranks: the probability that a random
/// positive outscores a random negative, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Value("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Value("scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Value("ROC AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum += mid * pos_in_group as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Missing when the labels hold a single class.
    pub roc_auc: Option<f64>,
    pub rmse: f64,
    pub mae: f64,
}

/// All report metrics. RMSE and MAE compare positive-class probabilities
/// with the 0/1 labels.
pub fn metrics_suite(c: &ConfusionCounts, probs: &[f64], labels_true: &[u8]) -> Result<MetricsRow> {
    if probs.len() != labels_true.len() || c.total() != probs.len() {
        return Err(Error::Value("probabilities, labels and counts disagree in size".into()));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Value("probabilities must lie in [0, 1]".into()));
    }
    let n = probs.len().max(1) as f64;
    let (mut se, mut ae) = (0.0, 0.0);
    for (&p, &y) in probs.iter().zip(labels_true) {
        let e = p - y as f64;
        se += e * e;
        ae += e.abs();
    }
    Ok(MetricsRow {
        accuracy: c.accuracy(),
        balanced_accuracy: c.balanced_accuracy(),
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
        roc_auc: roc_auc(probs, labels_true).ok(),
        rmse: (se / n).sqrt(),
        mae: ae / n,
    })
}

/// Metrics of one prediction set; convenience over [`confusion`] and
/// [`metrics_suite`].
pub fn evaluate(labels_true: &[u8], labels_pred: &[u8], probs: &[f64]) -> Result<MetricsRow> {
    metrics_suite(&confusion(labels_true, labels_pred)?, probs, labels_true)
}

/// The report metrics in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Accuracy,
    BalancedAccuracy,
    Precision,
    Recall,
    F1,
    RocAuc,
    Rmse,
    Mae,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Accuracy,
        Metric::BalancedAccuracy,
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
        Metric::RocAuc,
        Metric::Rmse,
        Metric::Mae,
    ];

    /// Report column header.
    pub fn column(&self) -> &'static str {
        match self {
            Metric::Accuracy => "Accuracy",
            Metric::BalancedAccuracy => "Balanced Accuracy",
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::F1 => "F1",
            Metric::RocAuc => "ROC_AUC",
            Metric::Rmse => "RMSE",
            Metric::Mae => "MAE",
        }
    }

    pub fn of(&self, r: &MetricsRow) -> Option<f64> {
        match self {
            Metric::Accuracy => Some(r.accuracy),
            Metric::BalancedAccuracy => Some(r.balanced_accuracy),
            Metric::Precision => Some(r.precision),
            Metric::Recall => Some(r.recall),
            Metric::F1 => Some(r.f1),
            Metric::RocAuc => r.roc_auc,
            Metric::Rmse => Some(r.rmse),
            Metric::Mae => Some(r.mae),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = |v: &str| v.to_ascii_lowercase().replace([' ', '_', '-'], "");
        let key = norm(s);
        Metric::ALL
            .into_iter()
            .find(|m| norm(m.column()) == key)
            .ok_or_else(|| Error::Config(format!("unknown metric '{s}'")))
    }
}
