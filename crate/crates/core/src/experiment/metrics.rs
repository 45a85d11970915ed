//! Task-masked evaluation metrics.

use crate::error::{Error, Result};
use crate::graph::Label;
use crate::matrix::Matrix;
use crate::neural::MaskedTargets;

/// Mann-Whitney AUC of one task over its non-missing entries, or `None` when
/// only one class is present. Ties count one half via average ranks.
fn task_auc(scores: &[f64], labels: &[Label]) -> Result<Option<f64>> {
    let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(scores.len());
    for (&s, l) in scores.iter().zip(labels) {
        if let Some(y) = *l {
            if !s.is_finite() {
                return Err(Error::Numeric(format!("non-finite score {s}")));
            }
            pairs.push((s, y > 0.5));
        }
    }
    let positives = pairs.iter().filter(|p| p.1).count();
    let negatives = pairs.len() - positives;
    if positives == 0 || negatives == 0 {
        return Ok(None);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Sum of 1-based average ranks of the positives. Average ranks are
    // half-integers, so the sum is exact in f64 for any realistic size.
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        while j + 1 < pairs.len() && pairs[j + 1].0 == pairs[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_positives = pairs[i..=j].iter().filter(|p| p.1).count();
        positive_rank_sum += avg_rank * tied_positives as f64;
        i = j + 1;
    }
    let (p, n) = (positives as f64, negatives as f64);
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(Some(u / (p * n)))
}

/// Unweighted mean ROC-AUC over tasks that have both classes present.
pub fn roc_auc_masked(scores: &Matrix, labels: &MaskedTargets) -> Result<f64> {
    if scores.shape() != labels.shape() {
        return Err(Error::Shape {
            tensor: "scores".into(),
            expected: format!("{:?}", labels.shape()),
            actual: format!("{:?}", scores.shape()),
        });
    }
    let mut total = 0.0;
    let mut scored = 0usize;
    for c in 0..scores.cols() {
        let column: Vec<f64> = (0..scores.rows()).map(|r| scores.get(r, c)).collect();
        if let Some(auc) = task_auc(&column, &labels.column(c))? {
            total += auc;
            scored += 1;
        }
    }
    if scored == 0 {
        return Err(Error::UndefinedMetric(
            "no task has both positive and negative labels".into(),
        ));
    }
    Ok(total / scored as f64)
}

/// Root mean squared error over non-missing targets.
pub fn rmse(predictions: &[f64], targets: &[Label]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::Shape {
            tensor: "predictions".into(),
            expected: format!("{} entries", targets.len()),
            actual: format!("{} entries", predictions.len()),
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&p, t) in predictions.iter().zip(targets) {
        if let Some(t) = *t {
            sum += (p - t) * (p - t);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::UndefinedMetric("rmse over zero targets".into()));
    }
    Ok((sum / count as f64).sqrt())
}
